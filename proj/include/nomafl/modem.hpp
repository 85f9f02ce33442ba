#pragma once

#include <complex>
#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "nomafl/rng.hpp"

namespace nomafl::modem {

using Codeword = std::uint32_t;
using Label = std::uint32_t;
using SymbolFrame = std::vector<std::complex<double>>;

inline constexpr int kMaxQuantizerBits = 24;
inline constexpr int kMaxSymbolBits = 10;

Codeword gray_encode(Codeword index);
Codeword gray_decode(Codeword code);

enum class ScaleMode {
    fixed,              // clip_max used as configured
    per_device_round,   // clip_max replaced by the device's max |g| each round
};

struct QuantizerConfig {
    int bits_per_entry = 4;
    double clip_max = 1.0;
    ScaleMode scale_mode = ScaleMode::per_device_round;

    void validate() const;
    std::uint32_t levels() const { return 1u << bits_per_entry; }
    /// Width of one quantization cell.
    double step() const { return 2.0 * clip_max / static_cast<double>(levels()); }
};

/// Uniform mid-rise quantizer over [-clip_max, clip_max], Gray-coded.
Codeword quantize(double value, const QuantizerConfig& cfg);
double dequantize(Codeword code, const QuantizerConfig& cfg);

/// Per-device sequence of q codewords of `bits` bits each.
struct CodewordFrame {
    std::vector<Codeword> codewords;
    int bits = 0;
};

CodewordFrame quantize_vector(std::span<const double> values, const QuantizerConfig& cfg);
std::vector<double> dequantize_vector(const CodewordFrame& frame, const QuantizerConfig& cfg);

struct ModulationConfig {
    int bits_per_symbol = 4;
    int alpha = 1;  // symbols per codeword

    static ModulationConfig for_codeword(int bits_per_codeword, int bits_per_symbol);
    void validate() const;
    std::uint32_t order() const { return 1u << bits_per_symbol; }
    int bits_per_codeword() const { return alpha * bits_per_symbol; }
};

/// Gray-labelled rectangular QAM with unit average energy.
///
/// The label's upper ceil(b/2) bits select the in-phase level and the lower
/// floor(b/2) bits the quadrature level; each axis is a Gray-coded PAM with
/// equal spacing, so even b gives a square grid and odd b a 2:1 rectangle.
/// The point index and the label coincide.
class Constellation {
public:
    explicit Constellation(int bits_per_symbol);

    int bits() const { return bits_; }
    std::uint32_t order() const { return static_cast<std::uint32_t>(points_.size()); }
    std::complex<double> point(Label label) const { return points_.at(label); }
    std::span<const std::complex<double>> points() const { return points_; }
    double min_distance() const { return min_distance_; }

    /// Nearest point; ties go to the smaller label.
    Label detect(std::complex<double> sample) const;

private:
    int bits_;
    std::vector<std::complex<double>> points_;
    double min_distance_ = 0.0;
};

/// Shared immutable constellation for 1..kMaxSymbolBits bits per symbol.
const Constellation& constellation(int bits_per_symbol);

/// Splits each codeword into alpha labels, most significant group first.
std::vector<Label> to_labels(const CodewordFrame& frame, const ModulationConfig& cfg);
CodewordFrame from_labels(std::span<const Label> labels, const ModulationConfig& cfg);

SymbolFrame modulate(const CodewordFrame& frame, const ModulationConfig& cfg);
Label demodulate(std::complex<double> sample, const ModulationConfig& cfg);
CodewordFrame demodulate_frame(std::span<const std::complex<double>> samples,
                               const ModulationConfig& cfg);

/// Replaces each label, with probability `ser`, by a uniformly drawn different
/// label. Returns how many were replaced.
std::size_t inject_label_errors(std::span<Label> labels, std::uint32_t order, double ser,
                                RngStream& rng);

SymbolFrame inject_symbol_errors(const SymbolFrame& frame, const ModulationConfig& cfg,
                                 double ser, RngStream& rng);

}  // namespace nomafl::modem
