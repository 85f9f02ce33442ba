#include <doctest.h>

#include <cmath>
#include <vector>

#include "nomafl/convergence.hpp"
#include "nomafl/rng.hpp"
#include "nomafl/selection.hpp"

using namespace nomafl;
using namespace nomafl::convergence;

namespace {

// Direct sum of binomial terms with long double and explicit coefficients.
long double brute_cdf(double p, std::size_t q, std::size_t upper) {
    long double sum = 0.0L, coef = 1.0L;
    for (std::size_t m = 0; m <= upper; ++m) {
        if (m > 0) {
            coef = coef * static_cast<long double>(q - m + 1) / static_cast<long double>(m);
        }
        sum += coef * std::pow(static_cast<long double>(p), static_cast<long double>(m)) *
               std::pow(1.0L - p, static_cast<long double>(q - m));
    }
    return sum;
}

}  // namespace

TEST_CASE("xi closed cases") {
    CHECK(xi(0.0, 100, 0.01) == 1.0);
    CHECK(xi(0.3, 20, 0.0) == doctest::Approx(std::pow(0.7, 20)).epsilon(1e-13));
    CHECK(xi(0.1, 10, 0.2) == doctest::Approx(0.9298091736).epsilon(1e-12));
    CHECK(xi(1.0, 10, 0.5) == 0.0);
    CHECK(xi(0.7, 10, 1.0) == 1.0);
}

TEST_CASE("xi matches a direct binomial sum") {
    auto rng = RngStream::derive(1, "xi");
    for (int t = 0; t < 300; ++t) {
        const std::size_t q = 1 + rng.uniform_int(0, 999);
        const double s = rng.uniform(), tr = rng.uniform();
        const auto upper = selection::tolerated_errors(q, tr);
        CHECK(std::abs(xi(s, q, tr) - static_cast<double>(brute_cdf(s, q, upper))) < 1e-12);
    }
}

TEST_CASE("contraction factor") {
    ConvergenceParams p{0.2, 2.0, 1.0, 0.3};
    std::vector<double> d{1, 2, 3};
    std::vector<int> on{1, 1, 1}, off{0, 0, 0};
    std::vector<double> ones{1, 1, 1};
    CHECK(compute_a(p, d, on, ones) == doctest::Approx(1 - 0.1));
    CHECK(compute_a(p, d, off, ones) == doctest::Approx(1 - 0.1 + 4 * 0.1 * 0.3));
    std::vector<double> x{0.5, 0.2, 0.9};
    const double base = compute_a(p, d, on, x);
    for (std::size_t k = 0; k < 3; ++k) {
        auto up = x;
        up[k] += 0.05;
        CHECK(compute_a(p, d, on, up) <= base);
    }
}

TEST_CASE("bound special cases") {
    ConvergenceParams p{0.1, 1.0, 1.0, 0.1};
    std::vector<double> d{3, 1};
    std::vector<int> on{1, 1};
    std::vector<double> ones{1, 1};
    const double a0 = compute_a(p, d, on, ones);
    CHECK(bound(7, a0, p, d, on, ones, 2.0) == doctest::Approx(std::pow(a0, 7) * 2.0));
    std::vector<double> x{0.4, 0.9};
    const double a = compute_a(p, d, on, x);
    const double lost = (3 * 0.6 + 1 * 0.1) / 4;
    CHECK(bound(1, a, p, d, on, x, 2.0) == doctest::Approx(2 * lost + a * 2.0).epsilon(1e-14));
    CHECK(bound(100000, a, p, d, on, x, 2.0) == doctest::Approx(2 * lost / (1 - a)).epsilon(1e-10));
    // A = 1: the geometric factor becomes N.
    ConvergenceParams q{0.1, 1.0, 1.0, 0.25};
    std::vector<int> none{0, 0};
    const double a1 = compute_a(q, d, none, ones);
    CHECK(a1 == doctest::Approx(1.0));
    CHECK(bound(5, 1.0, q, d, none, ones, 3.0) == doctest::Approx(2 * 5 + 3.0));
}

TEST_CASE("convergence condition") {
    ConvergenceParams p{0.1, 1.0, 1.0, 0.3};
    std::vector<double> d{1, 1};
    std::vector<int> on{1, 1}, off{0, 0};
    std::vector<double> ones{1, 1};
    auto ok = check_condition(p, d, on, ones);
    CHECK(ok.converges);
    CHECK(ok.lhs == 0.0);
    CHECK(ok.rhs == doctest::Approx(0.1));
    CHECK_FALSE(check_condition(p, d, off, ones).converges);
}

TEST_CASE("Lipschitz estimate of a quadratic") {
    GradientFn g = [](std::span<const double> w) {
        return std::vector<double>{3 * w[0], 0.5 * w[1]};
    };
    std::vector<std::pair<std::vector<double>, std::vector<double>>> pairs{
        {{1, 0}, {0, 0}}, {{0, 1}, {0, -1}}};
    CHECK(estimate_lipschitz(g, pairs) == doctest::Approx(3.0));
}
