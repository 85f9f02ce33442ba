#include "nomafl/noma_receiver.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>

#include "nomafl/errors.hpp"

namespace nomafl::noma {

using channel::ChannelRealization;
using cmat = Eigen::MatrixXcd;

SicOrder sic_order(const ChannelRealization& channels) {
    SicOrder order(channels.devices());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        return channels.gain(a) > channels.gain(b);
    });
    return order;
}

namespace {

void check_inputs(std::size_t stage, const ChannelRealization& channels,
                  std::span<const double> powers, double sigma2, const SicOrder& order) {
    if (!(sigma2 > 0.0)) {
        throw InvalidArgument("mmse_filter: sigma2 must be positive");
    }
    if (powers.size() != channels.devices() || order.size() != channels.devices()) {
        throw DimensionMismatch("mmse_filter: powers/order/channels disagree on device count");
    }
    if (stage >= order.size()) {
        throw InvalidArgument("mmse_filter: stage outside decoding order");
    }
}

}  // namespace

rowvec mmse_filter(std::size_t stage, const ChannelRealization& channels,
                   std::span<const double> powers, double sigma2, const SicOrder& order) {
    check_inputs(stage, channels, powers, sigma2, order);
    const int n = channels.antennas();
    cmat cov = sigma2 * cmat::Identity(n, n);
    for (std::size_t s = stage; s < order.size(); ++s) {
        const auto& h = channels[order[s]];
        const double p = powers[order[s]];
        cov.noalias() += (p * p) * h * h.adjoint();
    }
    const std::size_t k = order[stage];
    // cov is Hermitian, so r^H = cov^{-1} p_k h_k.
    const channel::cvec rhs = powers[k] * channels[k];
    const channel::cvec r_h = cov.llt().solve(rhs);
    return r_h.adjoint();
}

double sinr(std::size_t stage, const ChannelRealization& channels,
            std::span<const double> powers, double sigma2, const SicOrder& order) {
    const rowvec r = mmse_filter(stage, channels, powers, sigma2, order);
    const std::size_t k = order[stage];
    const double signal = powers[k] * powers[k] * std::norm((r * channels[k])(0));
    double interference = 0.0;
    for (std::size_t s = stage + 1; s < order.size(); ++s) {
        const std::size_t i = order[s];
        interference += powers[i] * powers[i] * std::norm((r * channels[i])(0));
    }
    const double noise = r.squaredNorm() * sigma2;
    const double denom = interference + noise;
    if (!(signal > 0.0)) {
        return 0.0;
    }
    return signal / denom;
}

double q_function(double x) { return 0.5 * std::erfc(x / std::numbers::sqrt2); }

double analytic_ser(double sinr, std::uint32_t order) {
    if (order < 4) {
        throw InvalidArgument("analytic_ser: modulation order must be >= 4");
    }
    if (!(sinr >= 0.0)) {
        throw InvalidArgument("analytic_ser: sinr must be >= 0");
    }
    const double m = static_cast<double>(order);
    const double p = 2.0 * (1.0 - 1.0 / std::sqrt(m)) * q_function(std::sqrt(3.0 * sinr / (m - 1.0)));
    // 1 - (1 - p)^2 written to keep precision when p is tiny.
    return std::clamp(p * (2.0 - p), 0.0, 1.0);
}

LinkQuality link_quality(const ChannelRealization& channels, std::span<const double> powers,
                         double sigma2, std::uint32_t modulation_order) {
    LinkQuality out;
    out.order = sic_order(channels);
    out.sinr.assign(channels.devices(), 0.0);
    out.ser.assign(channels.devices(), 0.0);
    for (std::size_t stage = 0; stage < out.order.size(); ++stage) {
        const std::size_t k = out.order[stage];
        out.sinr[k] = sinr(stage, channels, powers, sigma2, out.order);
        out.ser[k] = analytic_ser(out.sinr[k], modulation_order);
    }
    return out;
}

DetectionResult detect_frame(const std::vector<channel::cvec>& received,
                             const ChannelRealization& channels, std::span<const double> powers,
                             double sigma2, const modem::ModulationConfig& cfg,
                             const std::vector<std::vector<modem::Label>>& truth) {
    cfg.validate();
    const std::size_t devices = channels.devices();
    if (powers.size() != devices) {
        throw DimensionMismatch("detect_frame: powers/channels disagree on device count");
    }
    if (!truth.empty()) {
        if (truth.size() != devices) {
            throw DimensionMismatch("detect_frame: ground truth device count mismatch");
        }
        for (const auto& t : truth) {
            if (t.size() != received.size()) {
                throw DimensionMismatch("detect_frame: ground truth length != slot count");
            }
        }
    }
    for (const auto& y : received) {
        if (y.size() != channels.antennas()) {
            throw DimensionMismatch("detect_frame: received vector length != antennas");
        }
    }

    const auto& points = modem::constellation(cfg.bits_per_symbol);
    const SicOrder order = sic_order(channels);

    std::vector<rowvec> filters;
    std::vector<std::complex<double>> gains;  // p_k r_k h_k, the filter's signal gain
    filters.reserve(devices);
    for (std::size_t stage = 0; stage < devices; ++stage) {
        filters.push_back(mmse_filter(stage, channels, powers, sigma2, order));
        const std::size_t k = order[stage];
        gains.push_back(powers[k] * (filters.back() * channels[k])(0));
    }

    std::vector<std::vector<modem::Label>> labels(devices, std::vector<modem::Label>(received.size()));
    DetectionResult result;
    result.symbol_errors.assign(devices, 0);

    channel::cvec residual(channels.antennas());
    for (std::size_t d = 0; d < received.size(); ++d) {
        residual = received[d];
        for (std::size_t stage = 0; stage < devices; ++stage) {
            const std::size_t k = order[stage];
            const std::complex<double> z = (filters[stage] * residual)(0);
            const modem::Label decided =
                std::abs(gains[stage]) > 0.0 ? points.detect(z / gains[stage]) : points.detect(0.0);
            labels[k][d] = decided;
            residual -= channels[k] * (powers[k] * points.point(decided));
            if (!truth.empty() && truth[k][d] != decided) {
                ++result.symbol_errors[k];
            }
        }
    }

    result.frames.reserve(devices);
    for (const auto& l : labels) {
        result.frames.push_back(modem::from_labels(l, cfg));
    }
    return result;
}

}  // namespace nomafl::noma
