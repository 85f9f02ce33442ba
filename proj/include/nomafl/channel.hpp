#pragma once

#include <complex>
#include <cstddef>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "nomafl/rng.hpp"

namespace nomafl::channel {

using cvec = Eigen::VectorXcd;

inline constexpr double kSpeedOfLight = 3.0e8;

struct Position3D {
    double x = 0.0;
    double y = 0.0;
    double z = 0.0;
};

double distance(const Position3D& a, const Position3D& b);

struct PathLossParams {
    double gain_bs_dbi = 5.0;
    double gain_device_dbi = 0.0;
    double carrier_hz = 915.0e6;
    double exponent = 3.76;
};

struct FadingParams {
    double rician_k_factor = 0.0;  // 0 => Rayleigh, +inf => pure line of sight
    int antennas = 1;
};

struct NoiseModel {
    double sigma2 = 1.0;  // per-antenna complex noise power
};

/// Axis-aligned placement region at a fixed height.
struct Region {
    double x_min = 100.0;
    double x_max = 150.0;
    double y_min = -25.0;
    double y_max = 25.0;
    double z = 0.0;
};

double dbi_to_linear(double dbi);

/// Free-space style large-scale gain G_bs * G_d * (c / (4 pi f d))^exponent.
/// Throws DegenerateGeometry when the two positions coincide.
double path_loss(const Position3D& device, const Position3D& bs, const PathLossParams& params);

/// Small-scale fading vector f with unit mean power per entry.
cvec draw_fading(RngStream& rng, const FadingParams& fading);

/// h_k = sqrt(pl_gain) * f.
cvec draw_channel(RngStream& rng, const FadingParams& fading, double pl_gain);

/// Block-fading channel state for all devices. Immutable once built.
class ChannelRealization {
public:
    ChannelRealization() = default;
    explicit ChannelRealization(std::vector<cvec> coefficients);

    std::size_t devices() const { return h_.size(); }
    int antennas() const { return antennas_; }
    const cvec& operator[](std::size_t k) const { return h_.at(k); }
    double gain(std::size_t k) const { return h_.at(k).squaredNorm(); }
    const std::vector<cvec>& coefficients() const { return h_; }

private:
    std::vector<cvec> h_;
    int antennas_ = 0;
};

std::vector<Position3D> place_devices(RngStream& rng, const Region& region, std::size_t count);

/// Draws one channel per device; device k uses fading substream k so that
/// adding devices never changes earlier draws.
ChannelRealization draw_channels(std::uint64_t seed, const std::vector<Position3D>& devices,
                                 const Position3D& bs, const PathLossParams& pl,
                                 const FadingParams& fading);

/// Common transmit power P such that the device with the largest path-loss
/// gain sees mean received SNR `snr_db` (mean over fading: P*N*pl/sigma2).
double power_for_reference_snr(std::span<const double> pl_gains, int antennas, double sigma2,
                               double snr_db);

/// One slot of the superposed uplink: y = sum_k h_k p_k s_k + n.
cvec transmit(std::span<const std::complex<double>> symbols, const ChannelRealization& channels,
              std::span<const double> powers, const NoiseModel& noise, RngStream& rng);

/// Same as transmit() for a whole frame; symbols[k][d] is device k in slot d.
std::vector<cvec> transmit_frame(const std::vector<std::vector<std::complex<double>>>& symbols,
                                 const ChannelRealization& channels,
                                 std::span<const double> powers, const NoiseModel& noise,
                                 RngStream& rng);

}  // namespace nomafl::channel
