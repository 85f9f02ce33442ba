#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "nomafl/channel.hpp"
#include "nomafl/modem.hpp"

namespace nomafl::noma {

using rowvec = Eigen::RowVectorXcd;

/// Decoding order: device indices, strongest ||h_k||^2 first, ties by index.
using SicOrder = std::vector<std::size_t>;

SicOrder sic_order(const channel::ChannelRealization& channels);

/// Linear MMSE receive row vector for the device decoded at `stage`.
///
/// Devices decoded before `stage` are assumed cancelled; the covariance
/// contains only the device itself and those still undecoded.
rowvec mmse_filter(std::size_t stage, const channel::ChannelRealization& channels,
                   std::span<const double> powers, double sigma2, const SicOrder& order);

/// Output SINR of the filter at `stage`, with only later-decoded devices
/// interfering.
double sinr(std::size_t stage, const channel::ChannelRealization& channels,
            std::span<const double> powers, double sigma2, const SicOrder& order);

/// Gaussian tail probability, erfc(x / sqrt 2) / 2.
double q_function(double x);

/// Square-QAM symbol error probability at the given linear SINR:
/// 1 - (1 - P)^2 with P = 2 (1 - 1/sqrt M) Q(sqrt(3 sinr / (M - 1))).
/// Applied as written for every order M >= 4, including non-square ones.
double analytic_ser(double sinr, std::uint32_t order);

/// Per-device link quality, indexed by the original device index.
struct LinkQuality {
    std::vector<double> sinr;
    std::vector<double> ser;
    SicOrder order;
};

LinkQuality link_quality(const channel::ChannelRealization& channels,
                         std::span<const double> powers, double sigma2,
                         std::uint32_t modulation_order);

struct DetectionResult {
    std::vector<modem::CodewordFrame> frames;     // per device
    std::vector<std::size_t> symbol_errors;       // per device, vs ground truth
};

/// Hard-decision MMSE-SIC over a frame of received slots.
///
/// Each stage filters the residual, rescales by 1 / (p_k r_k h_k) so the
/// decision statistic is unbiased, slices to the nearest point and subtracts
/// the re-modulated decision. `truth[k]` holds device k's transmitted labels
/// and is used only for counting errors; pass an empty vector to skip counts.
DetectionResult detect_frame(const std::vector<channel::cvec>& received,
                             const channel::ChannelRealization& channels,
                             std::span<const double> powers, double sigma2,
                             const modem::ModulationConfig& cfg,
                             const std::vector<std::vector<modem::Label>>& truth = {});

}  // namespace nomafl::noma
