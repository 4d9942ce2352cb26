#pragma once

#include <cmath>
#include <cstdint>
#include <limits>
#include <random>
#include <string_view>

#include "ehcrn/error.hpp"

namespace ehcrn {

/// SplitMix64 finalizer; used to spread a root seed into sub-stream seeds.
constexpr std::uint64_t splitmix64(std::uint64_t x) noexcept {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

constexpr std::uint64_t fnv1a(std::string_view text) noexcept {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (char c : text) {
        h ^= static_cast<unsigned char>(c);
        h *= 0x100000001b3ULL;
    }
    return h;
}

/// Seed for the sub-stream `name` of the root seed `root`.
constexpr std::uint64_t derive_seed(std::uint64_t root, std::string_view name) noexcept {
    return splitmix64(splitmix64(root) ^ fnv1a(name));
}

/// Inverse CDF of the exponential law with the given rate, evaluated at u in [0, 1).
inline double exponential_from_uniform(double u, double rate) {
    detail::require(rate > 0.0, "exponential rate must be positive");
    return -std::log1p(-u) / rate;
}

/// A seedable pseudo-random source. Sample transforms are written out by hand
/// (rather than via <random> distributions) so sequences are identical across
/// standard library implementations.
class RandomStream {
public:
    explicit RandomStream(std::uint64_t seed = 0) : seed_(seed), engine_(seed) {}

    RandomStream(std::uint64_t root, std::string_view name) : RandomStream(derive_seed(root, name)) {}

    std::uint64_t seed() const noexcept { return seed_; }

    std::uint64_t next_u64() { return engine_(); }

    /// Uniform on [0, 1) with 53 random bits.
    double uniform01() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

    double uniform(double lo, double hi) {
        detail::require(lo <= hi, "uniform interval requires lo <= hi");
        if (lo == hi) {
            return lo;
        }
        double x = lo + (hi - lo) * uniform01();
        // lo + (hi - lo) * u can round up to hi.
        return x < hi ? x : std::nextafter(hi, lo);
    }

    double exponential(double rate) {
        detail::require(rate > 0.0, "exponential rate must be positive");
        return exponential_from_uniform(uniform01(), rate);
    }

    /// Unbiased integer in [0, n).
    std::uint64_t index(std::uint64_t n) {
        detail::require(n > 0, "index range must be non-empty");
        const std::uint64_t threshold = (0 - n) % n;
        for (;;) {
            const std::uint64_t r = engine_();
            if (r >= threshold) {
                return r % n;
            }
        }
    }

    bool bernoulli(double p) { return uniform01() < p; }

private:
    std::uint64_t seed_;
    std::mt19937_64 engine_;
};

inline double sample_exponential(RandomStream& stream, double rate) { return stream.exponential(rate); }

inline double sample_uniform(RandomStream& stream, double lo, double hi) { return stream.uniform(lo, hi); }

/// Named sub-streams drawn from one root seed, one per consumer.
struct StreamSet {
    explicit StreamSet(std::uint64_t root)
        : root_seed(root),
          channels(root, "channels"),
          pu_power(root, "pu_power"),
          ambient(root, "ambient"),
          exploration(root, "exploration"),
          replay(root, "replay"),
          weight_init(root, "weight_init") {}

    std::uint64_t root_seed;
    RandomStream channels;
    RandomStream pu_power;
    RandomStream ambient;
    RandomStream exploration;
    RandomStream replay;
    RandomStream weight_init;
};

} // namespace ehcrn
