#include "nomafl/modem.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <memory>
#include <string>

#include "nomafl/errors.hpp"

namespace nomafl::modem {

Codeword gray_encode(Codeword index) { return index ^ (index >> 1); }

Codeword gray_decode(Codeword code) {
    Codeword index = code;
    for (Codeword shift = code >> 1; shift != 0; shift >>= 1) {
        index ^= shift;
    }
    return index;
}

void QuantizerConfig::validate() const {
    if (bits_per_entry < 1 || bits_per_entry > kMaxQuantizerBits) {
        throw InvalidArgument("quantizer: bits_per_entry must be in [1, " +
                              std::to_string(kMaxQuantizerBits) + "]");
    }
    if (!(clip_max > 0.0) || !std::isfinite(clip_max)) {
        throw InvalidArgument("quantizer: clip_max must be finite and > 0");
    }
}

Codeword quantize(double value, const QuantizerConfig& cfg) {
    cfg.validate();
    if (!std::isfinite(value)) {
        throw InvalidArgument("quantize: non-finite input");
    }
    const double clipped = std::clamp(value, -cfg.clip_max, cfg.clip_max);
    const auto top = static_cast<double>(cfg.levels() - 1);
    // Cell j covers [-g + j*step, -g + (j+1)*step); its centre is the level.
    const double cell = std::floor((clipped + cfg.clip_max) / cfg.step());
    const auto index = static_cast<Codeword>(std::clamp(cell, 0.0, top));
    return gray_encode(index);
}

double dequantize(Codeword code, const QuantizerConfig& cfg) {
    cfg.validate();
    if (code >= cfg.levels()) {
        throw InvalidArgument("dequantize: codeword " + std::to_string(code) +
                              " out of range for " + std::to_string(cfg.bits_per_entry) +
                              " bits");
    }
    const auto index = static_cast<double>(gray_decode(code));
    return -cfg.clip_max + (index + 0.5) * cfg.step();
}

CodewordFrame quantize_vector(std::span<const double> values, const QuantizerConfig& cfg) {
    CodewordFrame frame;
    frame.bits = cfg.bits_per_entry;
    frame.codewords.reserve(values.size());
    for (double v : values) {
        frame.codewords.push_back(quantize(v, cfg));
    }
    return frame;
}

std::vector<double> dequantize_vector(const CodewordFrame& frame, const QuantizerConfig& cfg) {
    if (frame.bits != cfg.bits_per_entry) {
        throw DimensionMismatch("dequantize_vector: frame/config bit width mismatch");
    }
    std::vector<double> out;
    out.reserve(frame.codewords.size());
    for (Codeword c : frame.codewords) {
        out.push_back(dequantize(c, cfg));
    }
    return out;
}

ModulationConfig ModulationConfig::for_codeword(int bits_per_codeword, int bits_per_symbol) {
    if (bits_per_symbol < 1 || bits_per_codeword % bits_per_symbol != 0) {
        throw InvalidArgument("modulation: b_signal=" + std::to_string(bits_per_codeword) +
                              " is not a positive multiple of b_mod=" +
                              std::to_string(bits_per_symbol));
    }
    ModulationConfig cfg{bits_per_symbol, bits_per_codeword / bits_per_symbol};
    cfg.validate();
    return cfg;
}

void ModulationConfig::validate() const {
    if (bits_per_symbol < 1 || bits_per_symbol > kMaxSymbolBits) {
        throw InvalidArgument("modulation: bits_per_symbol must be in [1, " +
                              std::to_string(kMaxSymbolBits) + "]");
    }
    if (alpha < 1 || alpha * bits_per_symbol > kMaxQuantizerBits) {
        throw InvalidArgument("modulation: alpha must be >= 1 and alpha*b_mod <= " +
                              std::to_string(kMaxQuantizerBits));
    }
}

Constellation::Constellation(int bits_per_symbol) : bits_(bits_per_symbol) {
    if (bits_per_symbol < 1 || bits_per_symbol > kMaxSymbolBits) {
        throw InvalidArgument("constellation: unsupported bits per symbol " +
                              std::to_string(bits_per_symbol));
    }
    const int bits_i = (bits_per_symbol + 1) / 2;
    const int bits_q = bits_per_symbol / 2;
    const std::uint32_t levels_i = 1u << bits_i;
    const std::uint32_t levels_q = 1u << bits_q;
    const double energy = (static_cast<double>(levels_i * levels_i) - 1.0) / 3.0 +
                          (static_cast<double>(levels_q * levels_q) - 1.0) / 3.0;
    const double scale = 1.0 / std::sqrt(energy);

    const std::uint32_t order = 1u << bits_per_symbol;
    points_.resize(order);
    for (Label label = 0; label < order; ++label) {
        const auto idx_i = static_cast<double>(gray_decode(label >> bits_q));
        const auto idx_q = static_cast<double>(gray_decode(label & (levels_q - 1)));
        const double re = 2.0 * idx_i - static_cast<double>(levels_i - 1);
        const double im = 2.0 * idx_q - static_cast<double>(levels_q - 1);
        points_[label] = {re * scale, im * scale};
    }
    min_distance_ = 2.0 * scale;
}

Label Constellation::detect(std::complex<double> sample) const {
    Label best = 0;
    double best_d2 = std::numeric_limits<double>::infinity();
    for (Label label = 0; label < points_.size(); ++label) {
        const double d2 = std::norm(sample - points_[label]);
        if (d2 < best_d2) {
            best_d2 = d2;
            best = label;
        }
    }
    return best;
}

const Constellation& constellation(int bits_per_symbol) {
    static const auto table = [] {
        std::array<std::unique_ptr<Constellation>, kMaxSymbolBits + 1> t;
        for (int b = 1; b <= kMaxSymbolBits; ++b) {
            t[b] = std::make_unique<Constellation>(b);
        }
        return t;
    }();
    if (bits_per_symbol < 1 || bits_per_symbol > kMaxSymbolBits) {
        throw InvalidArgument("constellation: unsupported bits per symbol " +
                              std::to_string(bits_per_symbol));
    }
    return *table[bits_per_symbol];
}

std::vector<Label> to_labels(const CodewordFrame& frame, const ModulationConfig& cfg) {
    cfg.validate();
    if (frame.bits != cfg.bits_per_codeword()) {
        throw InvalidArgument("modulate: codeword width " + std::to_string(frame.bits) +
                              " != alpha*b_mod " + std::to_string(cfg.bits_per_codeword()));
    }
    const Label mask = cfg.order() - 1;
    std::vector<Label> labels;
    labels.reserve(frame.codewords.size() * cfg.alpha);
    for (Codeword c : frame.codewords) {
        if (c >> frame.bits != 0) {
            throw InvalidArgument("modulate: codeword exceeds its bit width");
        }
        for (int g = cfg.alpha - 1; g >= 0; --g) {
            labels.push_back((c >> (g * cfg.bits_per_symbol)) & mask);
        }
    }
    return labels;
}

CodewordFrame from_labels(std::span<const Label> labels, const ModulationConfig& cfg) {
    cfg.validate();
    if (labels.size() % cfg.alpha != 0) {
        throw DimensionMismatch("from_labels: label count not a multiple of alpha");
    }
    CodewordFrame frame;
    frame.bits = cfg.bits_per_codeword();
    frame.codewords.reserve(labels.size() / cfg.alpha);
    for (std::size_t i = 0; i < labels.size(); i += cfg.alpha) {
        Codeword c = 0;
        for (int g = 0; g < cfg.alpha; ++g) {
            c = (c << cfg.bits_per_symbol) | labels[i + g];
        }
        frame.codewords.push_back(c);
    }
    return frame;
}

SymbolFrame modulate(const CodewordFrame& frame, const ModulationConfig& cfg) {
    const auto& points = constellation(cfg.bits_per_symbol);
    SymbolFrame out;
    const auto labels = to_labels(frame, cfg);
    out.reserve(labels.size());
    for (Label l : labels) {
        out.push_back(points.point(l));
    }
    return out;
}

Label demodulate(std::complex<double> sample, const ModulationConfig& cfg) {
    return constellation(cfg.bits_per_symbol).detect(sample);
}

CodewordFrame demodulate_frame(std::span<const std::complex<double>> samples,
                               const ModulationConfig& cfg) {
    const auto& points = constellation(cfg.bits_per_symbol);
    std::vector<Label> labels;
    labels.reserve(samples.size());
    for (auto s : samples) {
        labels.push_back(points.detect(s));
    }
    return from_labels(labels, cfg);
}

std::size_t inject_label_errors(std::span<Label> labels, std::uint32_t order, double ser,
                                RngStream& rng) {
    if (!(ser >= 0.0 && ser <= 1.0)) {
        throw InvalidArgument("inject_symbol_errors: ser must be in [0, 1]");
    }
    if (order < 2 || ser == 0.0) {
        return 0;
    }
    std::size_t changed = 0;
    for (Label& l : labels) {
        if (!rng.bernoulli(ser)) {
            continue;
        }
        auto other = static_cast<Label>(rng.uniform_int(0, order - 2));
        if (other >= l) {
            ++other;
        }
        l = other;
        ++changed;
    }
    return changed;
}

SymbolFrame inject_symbol_errors(const SymbolFrame& frame, const ModulationConfig& cfg,
                                 double ser, RngStream& rng) {
    const auto& points = constellation(cfg.bits_per_symbol);
    std::vector<Label> labels;
    labels.reserve(frame.size());
    for (auto s : frame) {
        labels.push_back(points.detect(s));
    }
    inject_label_errors(labels, points.order(), ser, rng);
    SymbolFrame out;
    out.reserve(labels.size());
    for (Label l : labels) {
        out.push_back(points.point(l));
    }
    return out;
}

}  // namespace nomafl::modem
