#include <doctest.h>

#include <bit>
#include <cmath>
#include <complex>
#include <vector>

#include "nomafl/errors.hpp"
#include "nomafl/modem.hpp"

using namespace nomafl;
using namespace nomafl::modem;

TEST_CASE("four-level quantizer bottom level") {
    QuantizerConfig q{2, 1.0, ScaleMode::fixed};
    const auto c = quantize(-1.0, q);
    CHECK(gray_decode(c) == 0);
    CHECK(dequantize(c, q) == doctest::Approx(-0.75));
}

TEST_CASE("values beyond the clip saturate") {
    QuantizerConfig q{4, 1.0, ScaleMode::fixed};
    CHECK(gray_decode(quantize(1.0, q)) == 15);
    CHECK(gray_decode(quantize(7.5, q)) == 15);
    CHECK(gray_decode(quantize(-9.0, q)) == 0);
}

TEST_CASE("two-level quantizer") {
    QuantizerConfig q{1, 1.0, ScaleMode::fixed};
    CHECK(dequantize(0, q) == doctest::Approx(-0.5));
    CHECK(dequantize(1, q) == doctest::Approx(0.5));
}

TEST_CASE("quantization error is at most half a step and exact on centres") {
    for (int b : {1, 3, 6}) {
        QuantizerConfig q{b, 2.0, ScaleMode::fixed};
        for (int i = 0; i <= 1000; ++i) {
            const double v = -2.0 + 4.0 * i / 1000.0;
            const double r = dequantize(quantize(v, q), q);
            CHECK(std::abs(v - r) <= q.step() / 2 + 1e-12);
            CHECK(dequantize(quantize(r, q), q) == r);
        }
    }
}

TEST_CASE("codes map to distinct increasing levels with one-bit neighbours") {
    for (int b = 1; b <= 8; ++b) {
        QuantizerConfig q{b, 1.0, ScaleMode::fixed};
        double prev = -2.0;
        for (Codeword j = 0; j < q.levels(); ++j) {
            const double v = dequantize(gray_encode(j), q);
            CHECK(v > prev);
            prev = v;
            if (j > 0) {
                CHECK(std::popcount(gray_encode(j) ^ gray_encode(j - 1)) == 1);
            }
        }
    }
}

TEST_CASE("quantizer rejects bad input") {
    QuantizerConfig q{3, 1.0, ScaleMode::fixed};
    CHECK_THROWS_AS(quantize(std::nan(""), q), InvalidArgument);
    CHECK_THROWS_AS(dequantize(8, q), InvalidArgument);
}

TEST_CASE("constellations have unit energy") {
    for (int b = 1; b <= 6; ++b) {
        const auto& c = constellation(b);
        double e = 0.0;
        for (auto p : c.points()) {
            e += std::norm(p);
        }
        CHECK(c.order() == (1u << b));
        CHECK(e / c.order() == doctest::Approx(1.0).epsilon(1e-12));
    }
}

TEST_CASE("nearest neighbours in the constellation differ in one bit") {
    for (int b : {2, 3, 4, 5, 6}) {
        const auto& c = constellation(b);
        for (Label i = 0; i < c.order(); ++i) {
            for (Label j = i + 1; j < c.order(); ++j) {
                if (std::abs(c.point(i) - c.point(j)) < c.min_distance() * (1 + 1e-9)) {
                    CHECK(std::popcount(i ^ j) == 1);
                }
            }
        }
    }
}

TEST_CASE("detection regions") {
    const auto& c = constellation(4);
    for (Label l = 0; l < c.order(); ++l) {
        CHECK(c.detect(c.point(l)) == l);
        const std::complex<double> eps(0.49 * c.min_distance() * 0.6, -0.49 * c.min_distance() * 0.6);
        CHECK(c.detect(c.point(l) + eps) == l);
    }
}

TEST_CASE("modulate then demodulate is the identity") {
    for (auto [bits, sym] : {std::pair{4, 4}, {8, 4}, {6, 2}, {5, 5}, {9, 3}}) {
        auto cfg = ModulationConfig::for_codeword(bits, sym);
        CodewordFrame f{{}, bits};
        for (Codeword w = 0; w < (1u << bits); ++w) {
            f.codewords.push_back(w);
        }
        auto s = modulate(f, cfg);
        CHECK(s.size() == f.codewords.size() * cfg.alpha);
        CHECK(demodulate_frame(s, cfg).codewords == f.codewords);
    }
}

TEST_CASE("codeword width must be a multiple of the symbol width") {
    CHECK_THROWS_AS(ModulationConfig::for_codeword(5, 2), InvalidArgument);
}

TEST_CASE("error injection edge cases") {
    auto cfg = ModulationConfig::for_codeword(4, 4);
    CodewordFrame f{{1, 5, 9, 12, 15, 0, 3}, 4};
    auto s = modulate(f, cfg);
    auto rng = RngStream::derive(1, "inject");
    CHECK(inject_symbol_errors(s, cfg, 0.0, rng) == s);
    auto all = inject_symbol_errors(s, cfg, 1.0, rng);
    for (std::size_t i = 0; i < s.size(); ++i) {
        CHECK(all[i] != s[i]);
    }
}

TEST_CASE("error injection rate") {
    std::vector<Label> labels(1000000, 3);
    auto rng = RngStream::derive(2, "inject");
    const auto changed = inject_label_errors(labels, 16, 0.1, rng);
    CHECK(changed / 1e6 == doctest::Approx(0.1).epsilon(0.01));
    std::size_t differing = 0;
    std::vector<std::size_t> hist(16, 0);
    for (auto l : labels) {
        differing += l != 3;
        ++hist[l];
    }
    CHECK(differing == changed);
    // Replacements are spread evenly over the 15 other labels.
    for (Label l = 0; l < 16; ++l) {
        if (l != 3) {
            CHECK(hist[l] / double(changed) == doctest::Approx(1.0 / 15).epsilon(0.05));
        }
    }
}
