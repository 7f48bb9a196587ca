#pragma once

#include <cmath>
#include <complex>
#include <cstdint>
#include <numbers>
#include <utility>

namespace ptsim {

/// Splittable pseudo-random stream. A (seed, stream-index) pair fully
/// determines the draw sequence independently of thread schedule: the raw
/// 64-bit stream (splitmix64 derivation, xoshiro256++ core) is exact integer
/// arithmetic on every platform, and the derived uniforms/normals add only
/// IEEE-754 double operations plus libm log/cos/sin, so they match across
/// platforms up to libm rounding. Instances are single-consumer; do not
/// share one stream across concurrent tasks.
class RngStream {
public:
    RngStream(std::uint64_t seed, std::uint64_t stream_index)
        : seed_(seed), stream_(stream_index) {
        // Derive the state with splitmix64 so nearby (seed, stream) pairs
        // decorrelate.
        std::uint64_t x = mix64(seed) ^ rotl(mix64(stream_index + kGolden), 32);
        bool all_zero = true;
        for (auto& s : state_) {
            x += kGolden;
            s = mix64(x);
            if (s != 0) all_zero = false;
        }
        if (all_zero) state_[0] = kGolden;  // xoshiro forbids the zero state
    }

    std::uint64_t seed() const { return seed_; }
    std::uint64_t stream_index() const { return stream_; }

    /// Next raw 64-bit word (xoshiro256++).
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

    /// Uniform double in [0, 1), 53-bit resolution.
    double uniform01() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

    /// Uniform double in (0, 1]; safe for log().
    double uniform01_open_low() {
        return static_cast<double>((next_u64() >> 11) + 1) * 0x1.0p-53;
    }

    /// Uniform integer in [0, n). n must be >= 1. The modulo bias is
    /// O(n / 2^64) and irrelevant for the small index sets drawn here.
    std::uint64_t uniform_index(std::uint64_t n) { return next_u64() % n; }

    /// Pair of independent standard normals (Box-Muller).
    std::pair<double, double> normal_pair() {
        const double u1 = uniform01_open_low();
        const double u2 = uniform01();
        const double r = std::sqrt(-2.0 * std::log(u1));
        const double th = 2.0 * std::numbers::pi * u2;
        return {r * std::cos(th), r * std::sin(th)};
    }

    double normal() {
        if (have_cached_) {
            have_cached_ = false;
            return cached_;
        }
        auto [a, b] = normal_pair();
        cached_ = b;
        have_cached_ = true;
        return a;
    }

    /// Standard complex normal: independent N(0,1) real and imaginary parts.
    std::complex<double> complex_normal() {
        auto [re, im] = normal_pair();
        return {re, im};
    }

private:
    static constexpr std::uint64_t kGolden = 0x9E3779B97F4A7C15ULL;

    static std::uint64_t rotl(std::uint64_t x, int k) {
        return (x << k) | (x >> (64 - k));
    }

    // splitmix64 finalizer
    static std::uint64_t mix64(std::uint64_t z) {
        z += kGolden;
        z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
        z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
        return z ^ (z >> 31);
    }

    std::uint64_t seed_;
    std::uint64_t stream_;
    std::uint64_t state_[4];
    double cached_ = 0.0;
    bool have_cached_ = false;
};

}  // namespace ptsim
