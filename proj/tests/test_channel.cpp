#include <doctest.h>

#include <cmath>
#include <complex>
#include <limits>
#include <numbers>
#include <vector>

#include "nomafl/channel.hpp"
#include "nomafl/errors.hpp"

using namespace nomafl;
using namespace nomafl::channel;

TEST_CASE("normalized free-space case gives unit gain") {
    PathLossParams p{0.0, 0.0, 1.0e9, 2.0};
    const double d = kSpeedOfLight / (4.0 * std::numbers::pi * p.carrier_hz);
    CHECK(path_loss({d, 0, 0}, {0, 0, 0}, p) == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("path loss at the centre of the default region") {
    // Frozen from an independent evaluation with d = sqrt(175^2 + 10^2).
    const double expected = 1.2868228357057366e-14;
    const double got = path_loss({125, 0, 0}, {-50, 0, 10}, PathLossParams{});
    CHECK(got == doctest::Approx(expected).epsilon(1e-12));
}

TEST_CASE("doubling distance scales gain by 2^-exponent") {
    PathLossParams p;
    const double g1 = path_loss({100, 0, 0}, {0, 0, 0}, p);
    const double g2 = path_loss({200, 0, 0}, {0, 0, 0}, p);
    CHECK(g2 / g1 == doctest::Approx(std::pow(2.0, -p.exponent)).epsilon(1e-12));
}

TEST_CASE("coincident positions are rejected") {
    CHECK_THROWS_AS(path_loss({1, 2, 3}, {1, 2, 3}, PathLossParams{}), DegenerateGeometry);
}

TEST_CASE("Rayleigh fading has unit mean power") {
    auto rng = RngStream::derive(3, "test-fading");
    FadingParams f{0.0, 1};
    double sum = 0.0;
    const int n = 100000;
    for (int i = 0; i < n; ++i) {
        sum += draw_fading(rng, f).squaredNorm();
    }
    CHECK(sum / n == doctest::Approx(1.0).epsilon(0.02));
}

TEST_CASE("large K-factor approaches a unit-magnitude line-of-sight term") {
    auto rng = RngStream::derive(4, "test-fading");
    FadingParams los{std::numeric_limits<double>::infinity(), 4};
    auto h = draw_channel(rng, los, 0.25);
    for (int i = 0; i < 4; ++i) {
        CHECK(std::abs(h[i]) == doctest::Approx(0.5).epsilon(1e-12));
    }
    FadingParams big{1e8, 4};
    auto h2 = draw_fading(rng, big);
    for (int i = 0; i < 4; ++i) {
        CHECK(std::abs(h2[i]) == doctest::Approx(1.0).epsilon(1e-3));
    }
}

TEST_CASE("channel gain is pl_gain times fading power") {
    FadingParams f{2.0, 3};
    auto r1 = RngStream::derive(9, "x");
    auto r2 = RngStream::derive(9, "x");
    auto fv = draw_fading(r1, f);
    auto h = draw_channel(r2, f, 0.25);
    CHECK(h.squaredNorm() == doctest::Approx(0.25 * fv.squaredNorm()).epsilon(1e-14));
}

TEST_CASE("channel draws are reproducible and prefix-stable") {
    std::vector<Position3D> pos{{110, 0, 0}, {120, 5, 0}, {130, -5, 0}};
    FadingParams f{0.0, 2};
    auto a = draw_channels(11, pos, {-50, 0, 10}, PathLossParams{}, f);
    auto b = draw_channels(11, {pos.begin(), pos.begin() + 2}, {-50, 0, 10}, PathLossParams{}, f);
    CHECK(a.devices() == 3);
    CHECK(a.antennas() == 2);
    CHECK(a[0] == b[0]);
    CHECK(a[1] == b[1]);
}

TEST_CASE("placement stays inside the region") {
    auto rng = RngStream::derive(1, "placement");
    Region r;
    for (const auto& p : place_devices(rng, r, 500)) {
        CHECK(p.x >= r.x_min);
        CHECK(p.x <= r.x_max);
        CHECK(p.y >= r.y_min);
        CHECK(p.y <= r.y_max);
        CHECK(p.z == r.z);
    }
}

TEST_CASE("reference SNR power calibration") {
    std::vector<double> pl{1e-3, 4e-3, 2e-3};
    const double p = power_for_reference_snr(pl, 4, 2.0, 10.0);
    CHECK(p * 4 * 4e-3 / 2.0 == doctest::Approx(10.0).epsilon(1e-12));
}

TEST_CASE("noiseless single device passes symbols through") {
    ChannelRealization ch({cvec::Ones(1)});
    std::vector<double> pw{1.0};
    auto rng = RngStream::derive(1, "noise");
    std::vector<std::complex<double>> s{{0.3, -0.7}};
    auto y = transmit(s, ch, pw, NoiseModel{0.0}, rng);
    CHECK(y[0] == s[0]);
}

TEST_CASE("noiseless superposition is linear") {
    cvec h0(2), h1(2);
    h0 << std::complex<double>(1, 2), std::complex<double>(-0.5, 0.1);
    h1 << std::complex<double>(0.2, -1), std::complex<double>(3, 0);
    ChannelRealization ch({h0, h1});
    std::vector<double> pw{0.7, 1.3};
    auto rng = RngStream::derive(1, "noise");
    std::complex<double> s0(0.3, 0.1), s1(-1, 0.5);
    auto both = transmit(std::vector{s0, s1}, ch, pw, NoiseModel{0.0}, rng);
    auto only0 = transmit(std::vector{s0, {}}, ch, pw, NoiseModel{0.0}, rng);
    auto only1 = transmit(std::vector<std::complex<double>>{{}, s1}, ch, pw, NoiseModel{0.0}, rng);
    CHECK((both - only0 - only1).norm() < 1e-14);
}

TEST_CASE("noise variance matches sigma2") {
    ChannelRealization ch({cvec::Ones(2)});
    std::vector<double> pw{1.0};
    auto rng = RngStream::derive(2, "noise");
    const int slots = 100000;
    std::vector<std::vector<std::complex<double>>> sym(1, std::vector<std::complex<double>>(slots));
    auto y = transmit_frame(sym, ch, pw, NoiseModel{0.7}, rng);
    double sum = 0.0;
    for (const auto& v : y) {
        sum += std::norm(v[0]);
    }
    CHECK(sum / slots == doctest::Approx(0.7).epsilon(0.02));
}

TEST_CASE("dimension mismatches are reported") {
    ChannelRealization ch({cvec::Ones(2), cvec::Ones(2)});
    auto rng = RngStream::derive(2, "noise");
    std::vector<double> pw{1.0};
    std::vector<std::complex<double>> s{{1, 0}, {1, 0}};
    CHECK_THROWS_AS(transmit(s, ch, pw, NoiseModel{1.0}, rng), DimensionMismatch);
    CHECK_THROWS_AS(ChannelRealization({cvec::Ones(2), cvec::Ones(3)}), DimensionMismatch);
}
