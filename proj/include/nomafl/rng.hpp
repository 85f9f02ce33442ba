#pragma once

#include <cstdint>
#include <random>
#include <string_view>

namespace nomafl {

/// Named, independently seeded random stream.
///
/// Every consumer of randomness (placement, fading, noise, partition, error
/// injection, ...) owns its own stream derived from the master seed and a
/// purpose label, so the order in which subsystems draw never changes what
/// another subsystem sees.
class RngStream {
public:
    using engine_type = std::mt19937_64;

    explicit RngStream(std::uint64_t seed) : engine_(seed) {}

    /// Stream for `purpose` under `master_seed`; `index` distinguishes
    /// repeated uses of the same purpose (round number, device id, ...).
    static RngStream derive(std::uint64_t master_seed, std::string_view purpose,
                            std::uint64_t index = 0, std::uint64_t sub_index = 0);

    engine_type& engine() { return engine_; }

    double uniform() { return std::uniform_real_distribution<double>(0.0, 1.0)(engine_); }
    double uniform(double lo, double hi) {
        return std::uniform_real_distribution<double>(lo, hi)(engine_);
    }
    double normal(double mean = 0.0, double stddev = 1.0) {
        return std::normal_distribution<double>(mean, stddev)(engine_);
    }
    std::uint64_t uniform_int(std::uint64_t lo, std::uint64_t hi) {
        return std::uniform_int_distribution<std::uint64_t>(lo, hi)(engine_);
    }
    bool bernoulli(double p) { return uniform() < p; }

private:
    engine_type engine_;
};

std::uint64_t splitmix64(std::uint64_t x);

}  // namespace nomafl
