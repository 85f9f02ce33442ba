#include "nomafl/selection.hpp"

#include <cmath>

#include "nomafl/errors.hpp"

namespace nomafl::selection {

std::string to_string(Policy p) {
    switch (p) {
        case Policy::ser_dsm: return "ser_dsm";
        case Policy::packet_error_baseline: return "packet_error_baseline";
        case Policy::no_selection: return "no_selection";
    }
    return "unknown";
}

Policy policy_from_string(const std::string& s) {
    if (s == "ser_dsm") return Policy::ser_dsm;
    if (s == "packet_error_baseline") return Policy::packet_error_baseline;
    if (s == "no_selection") return Policy::no_selection;
    throw ConfigError("unknown selection policy '" + s + "'");
}

std::string to_string(AcceptanceMode m) {
    return m == AcceptanceMode::analytic ? "analytic" : "empirical";
}

AcceptanceMode acceptance_mode_from_string(const std::string& s) {
    if (s == "analytic") return AcceptanceMode::analytic;
    if (s == "empirical") return AcceptanceMode::empirical;
    throw ConfigError("unknown acceptance mode '" + s + "'");
}

void SelectionConfig::validate() const {
    if (!(tr_ser >= 0.0 && tr_ser <= 1.0)) {
        throw ConfigError("selection: tr_ser must be in [0, 1]");
    }
}

std::size_t tolerated_errors(std::size_t q, double tr_ser) {
    const double product = static_cast<double>(q) * tr_ser;
    return static_cast<std::size_t>(std::floor(product * (1.0 + 1e-12)));
}

bool accept(double ser, double tr_ser) { return ser <= tr_ser; }

bool accept_empirical(std::size_t error_count, std::size_t q, double tr_ser) {
    return error_count <= tolerated_errors(q, tr_ser);
}

bool accept_packet_baseline(std::size_t error_count) { return error_count == 0; }

SelectionDecision decide(const SelectionConfig& cfg, std::span<const double> ser,
                         std::span<const std::size_t> errors, std::size_t q,
                         std::span<const double> data_sizes, std::span<const int> schedule) {
    const std::size_t n = data_sizes.size();
    if (ser.size() != n || errors.size() != n || schedule.size() != n) {
        throw DimensionMismatch("selection: per-device inputs disagree in length");
    }
    SelectionDecision out;
    out.accepted.resize(n);
    out.weights.resize(n);
    for (std::size_t k = 0; k < n; ++k) {
        bool c = true;
        switch (cfg.policy) {
            case Policy::no_selection: c = true; break;
            case Policy::packet_error_baseline: c = accept_packet_baseline(errors[k]); break;
            case Policy::ser_dsm:
                c = cfg.mode == AcceptanceMode::analytic ? accept(ser[k], cfg.tr_ser)
                                                         : accept_empirical(errors[k], q, cfg.tr_ser);
                break;
        }
        out.accepted[k] = c ? 1 : 0;
        out.weights[k] = data_sizes[k] * schedule[k] * out.accepted[k];
        out.total_weight += out.weights[k];
    }
    return out;
}

std::vector<double> aggregate(const std::vector<std::vector<double>>& local_params,
                              std::span<const double> data_sizes, std::span<const int> schedule,
                              std::span<const int> accepted) {
    const std::size_t n = local_params.size();
    if (data_sizes.size() != n || schedule.size() != n || accepted.size() != n) {
        throw DimensionMismatch("aggregate: per-device inputs disagree in length");
    }
    if (n == 0) {
        throw NoParticipants("aggregate: no devices");
    }
    const std::size_t q = local_params.front().size();
    std::vector<double> sum(q, 0.0);
    double total = 0.0;
    for (std::size_t k = 0; k < n; ++k) {
        if (local_params[k].size() != q) {
            throw DimensionMismatch("aggregate: parameter vectors differ in dimension");
        }
        const double w = data_sizes[k] * schedule[k] * accepted[k];
        if (w == 0.0) {
            continue;
        }
        total += w;
        for (std::size_t i = 0; i < q; ++i) {
            sum[i] += w * local_params[k][i];
        }
    }
    if (!(total > 0.0)) {
        throw NoParticipants("aggregate: no device scheduled and accepted");
    }
    for (double& v : sum) {
        v /= total;
    }
    return sum;
}

}  // namespace nomafl::selection
