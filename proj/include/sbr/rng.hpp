#pragma once

#include <cstdint>
#include <random>
#include <string_view>

namespace sbr {

std::uint64_t splitmix64(std::uint64_t x) noexcept;

// Seedable, splittable random stream. The engine output is fully specified by
// the standard; every transform below is implemented here rather than with
// std::*_distribution so streams do not depend on the standard library build.
class Rng {
public:
    explicit Rng(std::uint64_t seed);

    // Independent stream derived from (seed, id); used for per-trial and
    // per-datum randomness.
    static Rng substream(std::uint64_t seed, std::uint64_t id);
    static std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t id) noexcept;

    static constexpr std::string_view name() noexcept { return "mt19937_64+splitmix64"; }

    std::uint64_t next_u64() { return engine_(); }
    // Uniform on [0, 1) with 53 random bits.
    double uniform();
    double normal();
    double normal(double mean, double sd) { return mean + sd * normal(); }
    bool bernoulli(double p) { return uniform() < p; }
    // Uniform integer in [0, n).
    std::uint64_t below(std::uint64_t n);

private:
    std::mt19937_64 engine_;
    double spare_ = 0.0;
    bool has_spare_ = false;
};

}  // namespace sbr
