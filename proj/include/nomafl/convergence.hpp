#pragma once

#include <cstddef>
#include <functional>
#include <span>
#include <utility>
#include <vector>

namespace nomafl::convergence {

/// Constants of the convergence analysis. These are assumptions about the
/// loss (strong convexity mu, gradient Lipschitz constant L, gradient-norm
/// bound coefficients zeta1/zeta2), so they come from configuration.
struct ConvergenceParams {
    double mu = 0.1;
    double lipschitz = 1.0;
    double zeta1 = 1.0;
    double zeta2 = 0.1;

    void validate() const;
};

/// Probability that at most floor(q * tr_ser) of q symbols are wrong when
/// each is wrong independently with probability `ser` (binomial CDF).
double xi(double ser, std::size_t q, double tr_ser);

/// sum_k D_k (1 - a_k Xi_k) / D, the data share lost to selection.
double lost_share(std::span<const double> data_sizes, std::span<const int> schedule,
                  std::span<const double> xi_values);

/// Contraction factor A = 1 - mu/L + (4 mu zeta2 / (L D)) sum_k D_k (1 - a_k Xi_k).
double compute_a(const ConvergenceParams& params, std::span<const double> data_sizes,
                 std::span<const int> schedule, std::span<const double> xi_values);

/// Upper bound on E[F(w^N) - F(w*)] after N iterations.
double bound(std::size_t iterations, double a, const ConvergenceParams& params,
             std::span<const double> data_sizes, std::span<const int> schedule,
             std::span<const double> xi_values, double initial_gap);

struct ConditionReport {
    bool converges = false;
    double lhs = 0.0;  // (4 mu zeta2 / (L D)) sum_k D_k (1 - a_k Xi_k)
    double rhs = 0.0;  // mu / L
};

ConditionReport check_condition(const ConvergenceParams& params, std::span<const double> data_sizes,
                                std::span<const int> schedule, std::span<const double> xi_values);

using GradientFn = std::function<std::vector<double>(std::span<const double>)>;

/// Rough estimate of L: the largest ||grad(a) - grad(b)|| / ||a - b|| over
/// the supplied point pairs. An estimate only; nothing asserts on it.
double estimate_lipschitz(const GradientFn& gradient,
                          std::span<const std::pair<std::vector<double>, std::vector<double>>> pairs);

}  // namespace nomafl::convergence
