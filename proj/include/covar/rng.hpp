// Deterministic, platform-stable random number generation.
//
// The generator is xoshiro256++ (Blackman & Vigna), seeded by expanding the
// 64-bit seed with splitmix64. Both algorithms are fixed here independent of
// the standard library, so a given seed produces the same sequence on every
// platform. A reference sequence is frozen in the test suite.
#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <vector>

#include "covar/error.hpp"
#include "covar/types.hpp"

namespace covar {

class RngStream {
public:
    explicit RngStream(std::uint64_t seed) : seed_(seed) {
        std::uint64_t x = seed;
        for (auto& s : state_) s = splitmix64_next(x);
    }

    std::uint64_t seed() const { return seed_; }

    std::uint64_t next_u64() {
        const std::uint64_t result = rotl(state_[0] + state_[3], 23) + state_[0];
        const std::uint64_t t = state_[1] << 17;
        state_[2] ^= state_[0];
        state_[3] ^= state_[1];
        state_[1] ^= state_[2];
        state_[0] ^= state_[3];
        state_[2] ^= t;
        state_[3] = rotl(state_[3], 45);
        return result;
    }

    /// Uniform in [0, 1), using the top 53 bits of one 64-bit draw.
    double uniform01() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform01(); }

    /// Standard normal via the trigonometric Box-Muller transform.
    /// Every draw consumes exactly two uniforms, so stream positions are
    /// independent of how draws are batched.
    double gaussian() {
        const double u1 = 1.0 - uniform01(); // (0, 1], keeps log finite
        const double u2 = uniform01();
        return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
    }

    /// Uniform integer in [0, n). Plain modulo draw; the bias is below 2^-53
    /// for every n used here and the mapping is platform-stable.
    std::uint64_t index_below(std::uint64_t n) { return next_u64() % n; }

    VecX draw_uniform01(Index n) {
        VecX out(n);
        for (Index i = 0; i < n; ++i) out[i] = uniform01();
        return out;
    }

    VecX draw_gaussian(Index n) {
        VecX out(n);
        for (Index i = 0; i < n; ++i) out[i] = gaussian();
        return out;
    }

    /// Independent child stream for parallel or per-record use: the child is
    /// seeded with seed ^ hash(index), where hash is one splitmix64 step.
    RngStream split(std::uint64_t index) const { return RngStream(seed_ ^ hash64(index)); }

    static std::uint64_t hash64(std::uint64_t x) { return splitmix64_next(x); }

private:
    static std::uint64_t rotl(std::uint64_t x, int k) { return (x << k) | (x >> (64 - k)); }

    static std::uint64_t splitmix64_next(std::uint64_t& x) {
        std::uint64_t z = (x += 0x9E3779B97F4A7C15ULL);
        z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
        z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
        return z ^ (z >> 31);
    }
    // Overload for the stateless hash above.
    static std::uint64_t splitmix64_next(std::uint64_t&& x) {
        std::uint64_t s = x;
        return splitmix64_next(s);
    }

    std::uint64_t seed_;
    std::array<std::uint64_t, 4> state_;
};

/// Seeded Fisher-Yates permutation of {0, ..., n-1}.
inline std::vector<Index> random_permutation(Index n, RngStream& rng) {
    std::vector<Index> perm(static_cast<std::size_t>(n));
    for (Index i = 0; i < n; ++i) perm[static_cast<std::size_t>(i)] = i;
    for (Index i = n - 1; i > 0; --i) {
        const auto j = static_cast<Index>(rng.index_below(static_cast<std::uint64_t>(i) + 1));
        std::swap(perm[static_cast<std::size_t>(i)], perm[static_cast<std::size_t>(j)]);
    }
    return perm;
}

} // namespace covar
