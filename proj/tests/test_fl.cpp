#include <doctest.h>

#include <cmath>
#include <numeric>
#include <vector>

#include "nomafl/errors.hpp"
#include "nomafl/fl_core.hpp"

using namespace nomafl;
using namespace nomafl::fl;

namespace {

Dataset noisy_samples(RngStream& rng, int n, int dim, int classes) {
    Dataset d;
    d.classes = classes;
    d.features.resize(n, dim);
    for (int i = 0; i < n; ++i) {
        for (int j = 0; j < dim; ++j) {
            d.features(i, j) = rng.normal();
        }
        d.labels.push_back(i % classes);
    }
    return d;
}

}  // namespace

TEST_CASE("parameter count") {
    CHECK(ModelShape{5, 0, 3}.parameter_count() == 18);
    CHECK(ModelShape{5, 4, 3}.parameter_count() == 4 * 5 + 4 + 3 * 4 + 3);
}

TEST_CASE("zero weights predict uniformly") {
    auto rng = RngStream::derive(1, "d");
    auto data = noisy_samples(rng, 40, 6, 4);
    for (int h : {0, 3}) {
        ModelShape s{6, h, 4};
        std::vector<double> w(s.parameter_count(), 0.0);
        CHECK(loss_and_gradient(s, w, data).loss == doctest::Approx(std::log(4.0)).epsilon(1e-14));
    }
}

TEST_CASE("gradient matches central differences") {
    auto rng = RngStream::derive(2, "d");
    auto data = noisy_samples(rng, 15, 4, 3);
    ModelShape s{4, 5, 3};
    REQUIRE(s.parameter_count() <= 50);
    for (int point = 0; point < 5; ++point) {
        auto w = init_params(s, rng);
        for (auto& x : w) x += 0.3 * rng.normal();
        auto lg = loss_and_gradient(s, w, data);
        for (std::size_t i = 0; i < w.size(); ++i) {
            const double h = 1e-5 * std::max(1.0, std::abs(w[i]));
            auto up = w, dn = w;
            up[i] += h;
            dn[i] -= h;
            const double fd = (loss_and_gradient(s, up, data).loss -
                               loss_and_gradient(s, dn, data).loss) / (2 * h);
            CHECK(std::abs(fd - lg.gradient[i]) <= 1e-5 * std::max(std::abs(fd), 1e-6) + 1e-9);
        }
    }
}

TEST_CASE("duplicating the batch changes nothing") {
    auto rng = RngStream::derive(3, "d");
    auto data = noisy_samples(rng, 10, 3, 2);
    std::vector<Dataset> two{data, data};
    auto doubled = Dataset::concat(two);
    ModelShape s{3, 2, 2};
    auto w = init_params(s, rng);
    auto a = loss_and_gradient(s, w, data);
    auto b = loss_and_gradient(s, w, doubled);
    CHECK(b.loss == doctest::Approx(a.loss).epsilon(1e-14));
    for (std::size_t i = 0; i < w.size(); ++i) {
        CHECK(b.gradient[i] == doctest::Approx(a.gradient[i]).epsilon(1e-12));
    }
}

TEST_CASE("huge weights overflow loudly") {
    auto rng = RngStream::derive(4, "d");
    auto data = noisy_samples(rng, 5, 3, 2);
    ModelShape s{3, 0, 2};
    std::vector<double> w(s.parameter_count(), 1e308);
    CHECK_THROWS_AS(loss_and_gradient(s, w, data), NumericalOverflow);
}

TEST_CASE("local update") {
    auto rng = RngStream::derive(5, "d");
    auto data = noisy_samples(rng, 12, 3, 3);
    ModelShape s{3, 4, 3};
    auto w = init_params(s, rng);
    TrainConfig one{0.5, 0, 1};
    CHECK(local_update(s, w, data, one) == loss_and_gradient(s, w, data).gradient);
    CHECK(local_update(s, w, data, one) == local_update(s, w, data, one));

    TrainConfig tiny{1e-12, 3, 2};
    auto g = local_update(s, w, data, tiny);
    for (std::size_t i = 0; i < w.size(); ++i) {
        CHECK(std::abs(tiny.learning_rate * g[i]) < 1e-10);
    }
    TrainConfig multi{0.1, 4, 2};
    auto gm = local_update(s, w, data, multi);
    // Replays the same schedule: mini-batches of 4 in order, two epochs.
    auto cur = w;
    for (int e = 0; e < 2; ++e) {
        for (std::size_t b = 0; b < data.size(); b += 4) {
            std::vector<std::size_t> rows(4);
            std::iota(rows.begin(), rows.end(), b);
            auto step = loss_and_gradient(s, cur, data.subset(rows)).gradient;
            for (std::size_t i = 0; i < cur.size(); ++i) cur[i] -= 0.1 * step[i];
        }
    }
    for (std::size_t i = 0; i < w.size(); ++i) {
        CHECK(std::abs(w[i] - 0.1 * gm[i] - cur[i]) < 1e-12);
    }
    Dataset empty;
    empty.classes = 3;
    empty.features.resize(0, 3);
    CHECK_THROWS_AS(local_update(s, w, empty, one), InvalidArgument);
}

TEST_CASE("evaluation") {
    // One-hot features with a large identity weight memorize the labels.
    Dataset d;
    d.classes = 3;
    d.features = Matrix::Identity(3, 3);
    d.labels = {0, 1, 2};
    ModelShape s{3, 0, 3};
    std::vector<double> w(12, 0.0);
    w[0] = w[4] = w[8] = 10.0;
    CHECK(evaluate(s, w, d).accuracy == 1.0);

    auto rng = RngStream::derive(6, "d");
    auto big = noisy_samples(rng, 20000, 5, 4);
    ModelShape s4{5, 0, 4};
    auto rw = init_params(s4, rng);
    CHECK(evaluate(s4, rw, big).accuracy == doctest::Approx(0.25).epsilon(0.1));

    std::vector<std::size_t> rev(big.size());
    std::iota(rev.rbegin(), rev.rend(), 0);
    auto a = evaluate(s4, rw, big), b = evaluate(s4, rw, big.subset(rev));
    CHECK(a.accuracy == b.accuracy);
    CHECK(a.loss == doctest::Approx(b.loss).epsilon(1e-13));
}
