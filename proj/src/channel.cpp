#include "nomafl/channel.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <string>

#include "nomafl/errors.hpp"

namespace nomafl::channel {

double distance(const Position3D& a, const Position3D& b) {
    return std::hypot(a.x - b.x, a.y - b.y, a.z - b.z);
}

double dbi_to_linear(double dbi) { return std::pow(10.0, dbi / 10.0); }

double path_loss(const Position3D& device, const Position3D& bs, const PathLossParams& params) {
    if (!(params.carrier_hz > 0.0) || !(params.exponent > 0.0)) {
        throw InvalidArgument("path_loss: carrier frequency and exponent must be positive");
    }
    const double d = distance(device, bs);
    if (!(d > 0.0)) {
        throw DegenerateGeometry("path_loss: device and base station coincide");
    }
    const double ratio = kSpeedOfLight / (4.0 * std::numbers::pi * params.carrier_hz * d);
    return dbi_to_linear(params.gain_bs_dbi) * dbi_to_linear(params.gain_device_dbi) *
           std::pow(ratio, params.exponent);
}

cvec draw_fading(RngStream& rng, const FadingParams& fading) {
    if (fading.antennas < 1) {
        throw InvalidArgument("draw_fading: antennas must be >= 1");
    }
    if (!(fading.rician_k_factor >= 0.0)) {
        throw InvalidArgument("draw_fading: Rician K-factor must be >= 0");
    }
    const double k = fading.rician_k_factor;
    const bool pure_los = std::isinf(k);
    const double los_amp = pure_los ? 1.0 : std::sqrt(k / (k + 1.0));
    const double nlos_amp = pure_los ? 0.0 : std::sqrt(1.0 / (k + 1.0));
    // CN(0,1): each quadrature has variance 1/2.
    const double quad_sd = std::sqrt(0.5);

    cvec f(fading.antennas);
    for (int i = 0; i < fading.antennas; ++i) {
        const double phase = rng.uniform(0.0, 2.0 * std::numbers::pi);
        const double re = rng.normal(0.0, quad_sd);
        const double im = rng.normal(0.0, quad_sd);
        f[i] = los_amp * std::polar(1.0, phase) + nlos_amp * std::complex<double>(re, im);
    }
    return f;
}

cvec draw_channel(RngStream& rng, const FadingParams& fading, double pl_gain) {
    if (!(pl_gain > 0.0)) {
        throw InvalidArgument("draw_channel: path-loss gain must be positive");
    }
    return std::sqrt(pl_gain) * draw_fading(rng, fading);
}

ChannelRealization::ChannelRealization(std::vector<cvec> coefficients)
    : h_(std::move(coefficients)) {
    if (h_.empty()) {
        return;
    }
    antennas_ = static_cast<int>(h_.front().size());
    for (const auto& h : h_) {
        if (h.size() != antennas_) {
            throw DimensionMismatch("ChannelRealization: devices disagree on antenna count");
        }
        if (!h.allFinite()) {
            throw InvalidArgument("ChannelRealization: non-finite coefficient");
        }
    }
}

std::vector<Position3D> place_devices(RngStream& rng, const Region& region, std::size_t count) {
    std::vector<Position3D> out;
    out.reserve(count);
    for (std::size_t k = 0; k < count; ++k) {
        const double x = rng.uniform(region.x_min, region.x_max);
        const double y = rng.uniform(region.y_min, region.y_max);
        out.push_back({x, y, region.z});
    }
    return out;
}

ChannelRealization draw_channels(std::uint64_t seed, const std::vector<Position3D>& devices,
                                 const Position3D& bs, const PathLossParams& pl,
                                 const FadingParams& fading) {
    std::vector<cvec> h;
    h.reserve(devices.size());
    for (std::size_t k = 0; k < devices.size(); ++k) {
        auto rng = RngStream::derive(seed, "fading", k);
        h.push_back(draw_channel(rng, fading, path_loss(devices[k], bs, pl)));
    }
    return ChannelRealization(std::move(h));
}

double power_for_reference_snr(std::span<const double> pl_gains, int antennas, double sigma2,
                               double snr_db) {
    if (pl_gains.empty()) {
        throw InvalidArgument("power_for_reference_snr: no devices");
    }
    const double best = *std::max_element(pl_gains.begin(), pl_gains.end());
    return std::pow(10.0, snr_db / 10.0) * sigma2 / (best * antennas);
}

namespace {

void check_dims(std::size_t symbols, const ChannelRealization& channels, std::size_t powers) {
    if (symbols != channels.devices() || powers != channels.devices()) {
        throw DimensionMismatch("transmit: " + std::to_string(symbols) + " symbols, " +
                                std::to_string(channels.devices()) + " channels, " +
                                std::to_string(powers) + " powers");
    }
}

void add_noise(cvec& y, const NoiseModel& noise, RngStream& rng) {
    if (noise.sigma2 < 0.0) {
        throw InvalidArgument("transmit: noise power must be non-negative");
    }
    if (noise.sigma2 == 0.0) {
        return;
    }
    const double sd = std::sqrt(noise.sigma2 / 2.0);
    for (Eigen::Index i = 0; i < y.size(); ++i) {
        const double re = rng.normal(0.0, sd);
        const double im = rng.normal(0.0, sd);
        y[i] += std::complex<double>(re, im);
    }
}

}  // namespace

cvec transmit(std::span<const std::complex<double>> symbols, const ChannelRealization& channels,
              std::span<const double> powers, const NoiseModel& noise, RngStream& rng) {
    check_dims(symbols.size(), channels, powers.size());
    cvec y = cvec::Zero(channels.antennas());
    for (std::size_t k = 0; k < symbols.size(); ++k) {
        if (!(powers[k] >= 0.0)) {
            throw InvalidArgument("transmit: powers must be non-negative");
        }
        y += channels[k] * (powers[k] * symbols[k]);
    }
    add_noise(y, noise, rng);
    return y;
}

std::vector<cvec> transmit_frame(const std::vector<std::vector<std::complex<double>>>& symbols,
                                 const ChannelRealization& channels,
                                 std::span<const double> powers, const NoiseModel& noise,
                                 RngStream& rng) {
    check_dims(symbols.size(), channels, powers.size());
    const std::size_t slots = symbols.empty() ? 0 : symbols.front().size();
    for (const auto& s : symbols) {
        if (s.size() != slots) {
            throw DimensionMismatch("transmit_frame: devices have different frame lengths");
        }
    }
    std::vector<cvec> out;
    out.reserve(slots);
    std::vector<std::complex<double>> slot(symbols.size());
    for (std::size_t d = 0; d < slots; ++d) {
        for (std::size_t k = 0; k < symbols.size(); ++k) {
            slot[k] = symbols[k][d];
        }
        out.push_back(transmit(slot, channels, powers, noise, rng));
    }
    return out;
}

}  // namespace nomafl::channel
