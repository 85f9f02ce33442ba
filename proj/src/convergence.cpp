#include "nomafl/convergence.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "nomafl/errors.hpp"
#include "nomafl/selection.hpp"

namespace nomafl::convergence {

void ConvergenceParams::validate() const {
    if (!(mu > 0.0) || !(lipschitz > mu)) {
        throw InvalidArgument("convergence: need 0 < mu < L");
    }
    if (!(zeta1 >= 0.0) || !(zeta2 >= 0.0)) {
        throw InvalidArgument("convergence: zeta1, zeta2 must be >= 0");
    }
}

double xi(double ser, std::size_t q, double tr_ser) {
    if (q == 0) {
        throw InvalidArgument("xi: q must be >= 1");
    }
    if (!(ser >= 0.0 && ser <= 1.0) || !(tr_ser >= 0.0 && tr_ser <= 1.0)) {
        throw InvalidArgument("xi: ser and tr_ser must be in [0, 1]");
    }
    const std::size_t upper = std::min(selection::tolerated_errors(q, tr_ser), q);
    if (upper == q || ser == 0.0) {
        return 1.0;
    }
    if (ser == 1.0) {
        return 0.0;
    }
    // Log-space ratio recursion: log t_{m+1} = log t_m + log((q-m)/(m+1)) + log(s/(1-s)).
    const auto qd = static_cast<double>(q);
    const double log_odds = std::log(ser) - std::log1p(-ser);
    std::vector<double> log_terms;
    log_terms.reserve(upper + 1);
    double log_t = qd * std::log1p(-ser);
    log_terms.push_back(log_t);
    for (std::size_t m = 0; m < upper; ++m) {
        const auto md = static_cast<double>(m);
        log_t += std::log((qd - md) / (md + 1.0)) + log_odds;
        log_terms.push_back(log_t);
    }
    const double peak = *std::max_element(log_terms.begin(), log_terms.end());
    double sum = 0.0;
    for (double lt : log_terms) {
        sum += std::exp(lt - peak);
    }
    return std::clamp(std::exp(peak + std::log(sum)), 0.0, 1.0);
}

namespace {

void check_lengths(std::span<const double> data_sizes, std::span<const int> schedule,
                   std::span<const double> xi_values) {
    if (schedule.size() != data_sizes.size() || xi_values.size() != data_sizes.size()) {
        throw DimensionMismatch("convergence: per-device inputs disagree in length");
    }
}

}  // namespace

double lost_share(std::span<const double> data_sizes, std::span<const int> schedule,
                  std::span<const double> xi_values) {
    check_lengths(data_sizes, schedule, xi_values);
    double total = 0.0;
    double lost = 0.0;
    for (std::size_t k = 0; k < data_sizes.size(); ++k) {
        total += data_sizes[k];
        lost += data_sizes[k] * (1.0 - schedule[k] * xi_values[k]);
    }
    if (!(total > 0.0)) {
        throw InvalidArgument("convergence: total data size must be positive");
    }
    return lost / total;
}

double compute_a(const ConvergenceParams& params, std::span<const double> data_sizes,
                 std::span<const int> schedule, std::span<const double> xi_values) {
    params.validate();
    const double ratio = params.mu / params.lipschitz;
    return 1.0 - ratio + 4.0 * ratio * params.zeta2 * lost_share(data_sizes, schedule, xi_values);
}

double bound(std::size_t iterations, double a, const ConvergenceParams& params,
             std::span<const double> data_sizes, std::span<const int> schedule,
             std::span<const double> xi_values, double initial_gap) {
    params.validate();
    if (iterations < 1) {
        throw InvalidArgument("bound: iterations must be >= 1");
    }
    const auto n = static_cast<double>(iterations);
    const double floor_term =
        2.0 * params.zeta1 / params.lipschitz * lost_share(data_sizes, schedule, xi_values);
    double a_pow_n = 0.0;
    double series = 0.0;  // (1 - A^N) / (1 - A), or N at A = 1
    if (a == 1.0) {
        a_pow_n = 1.0;
        series = n;
    } else if (a > 0.0) {
        const double log_pow = n * std::log(a);
        a_pow_n = std::exp(log_pow);
        series = -std::expm1(log_pow) / (1.0 - a);
    } else {
        a_pow_n = std::pow(a, n);
        series = (1.0 - a_pow_n) / (1.0 - a);
    }
    return floor_term * series + a_pow_n * initial_gap;
}

ConditionReport check_condition(const ConvergenceParams& params, std::span<const double> data_sizes,
                                std::span<const int> schedule, std::span<const double> xi_values) {
    params.validate();
    ConditionReport r;
    const double ratio = params.mu / params.lipschitz;
    r.lhs = 4.0 * ratio * params.zeta2 * lost_share(data_sizes, schedule, xi_values);
    r.rhs = ratio;
    r.converges = r.lhs < r.rhs;
    return r;
}

double estimate_lipschitz(const GradientFn& gradient,
                          std::span<const std::pair<std::vector<double>, std::vector<double>>> pairs) {
    double best = 0.0;
    for (const auto& [a, b] : pairs) {
        if (a.size() != b.size()) {
            throw DimensionMismatch("estimate_lipschitz: point dimensions differ");
        }
        const auto ga = gradient(a);
        const auto gb = gradient(b);
        double num = 0.0;
        double den = 0.0;
        for (std::size_t i = 0; i < a.size(); ++i) {
            num += (ga[i] - gb[i]) * (ga[i] - gb[i]);
            den += (a[i] - b[i]) * (a[i] - b[i]);
        }
        if (den > 0.0) {
            best = std::max(best, std::sqrt(num / den));
        }
    }
    return best;
}

}  // namespace nomafl::convergence
