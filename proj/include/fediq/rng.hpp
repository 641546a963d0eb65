#pragma once

// Deterministic random streams.
//
// Every random quantity in the project flows from one master seed through
// named substreams: a stream is identified by a path of 64-bit tags (module
// tag, client id, round, frame index, ...) hashed together with the master
// seed. Two streams with different paths are statistically independent, and
// regenerating a stream from the same (seed, path) reproduces the exact same
// values, which is what makes per-frame / per-round work order-independent
// and resumable.
//
// The generator core is xoshiro256++ with hand-rolled distributions; the C++
// <random> distributions are implementation-defined and would break
// byte-identical reproducibility guarantees across standard libraries.

#include <cmath>
#include <cstdint>
#include <initializer_list>
#include <numbers>

#include "fediq/common.hpp"

namespace fediq {

// Well-known substream tags. Values are arbitrary but frozen: changing them
// changes every derived dataset.
namespace stream {
inline constexpr std::uint64_t kInit = 0x01;        // encoder parameter init
inline constexpr std::uint64_t kFrame = 0x02;       // per-frame channel + payload
inline constexpr std::uint64_t kFed = 0x03;         // per (client, round) training
inline constexpr std::uint64_t kSvm = 0x04;         // classifier shuffling
inline constexpr std::uint64_t kTheory = 0x05;      // theory-module Monte Carlo
inline constexpr std::uint64_t kSweep = 0x06;       // evaluation sweep test frames
inline constexpr std::uint64_t kPartition = 0x07;   // Dirichlet draws
inline constexpr std::uint64_t kTestSplit = 0x08;   // fresh test-frame generation
}  // namespace stream

class Rng {
  public:
    explicit Rng(std::uint64_t seed) {
        // Seed the four xoshiro words from a SplitMix64 sequence, per the
        // generator author's recommendation.
        std::uint64_t sm = seed;
        for (auto& w : s_) w = splitmix64(sm);
    }

    // Combine a root seed with a tag path into a child seed.
    static std::uint64_t derive_seed(std::uint64_t root, std::initializer_list<std::uint64_t> path) {
        std::uint64_t h = root;
        for (std::uint64_t tag : path) {
            std::uint64_t t = tag;
            h ^= splitmix64(t) + 0x9e3779b97f4a7c15ULL + (h << 6) + (h >> 2);
        }
        return h;
    }

    // Derive a child stream from a root seed and a tag path.
    static Rng derive(std::uint64_t root, std::initializer_list<std::uint64_t> path) {
        return Rng(derive_seed(root, path));
    }

    std::uint64_t next_u64() {
        const std::uint64_t result = rotl(s_[0] + s_[3], 23) + s_[0];
        const std::uint64_t t = s_[1] << 17;
        s_[2] ^= s_[0];
        s_[3] ^= s_[1];
        s_[1] ^= s_[2];
        s_[0] ^= s_[3];
        s_[2] ^= t;
        s_[3] = rotl(s_[3], 45);
        return result;
    }

    // Uniform on [0, 1), 53-bit resolution.
    double uniform01() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

    // Uniform on [0, 1], excluding exact 0 (safe as a log argument).
    double uniform_pos() {
        return (static_cast<double>(next_u64() >> 11) + 1.0) * 0x1.0p-53;
    }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform01(); }

    // Unbiased integer in [0, n).
    std::uint64_t uniform_int(std::uint64_t n) {
        require(n > 0, "uniform_int: n must be positive");
        const std::uint64_t limit = UINT64_MAX - UINT64_MAX % n;
        std::uint64_t x;
        do {
            x = next_u64();
        } while (x >= limit);
        return x % n;
    }

    // Standard normal via Box-Muller; the second variate is cached.
    double normal() {
        if (has_cached_) {
            has_cached_ = false;
            return cached_;
        }
        const double u1 = uniform_pos();
        const double u2 = uniform01();
        const double r = std::sqrt(-2.0 * std::log(u1));
        const double a = 2.0 * std::numbers::pi * u2;
        cached_ = r * std::sin(a);
        has_cached_ = true;
        return r * std::cos(a);
    }

    double normal(double mean, double stddev) { return mean + stddev * normal(); }

    // Rayleigh with scale sigma: sigma * sqrt(-2 ln U).
    double rayleigh(double sigma) { return sigma * std::sqrt(-2.0 * std::log(uniform_pos())); }

    // Gamma(shape, scale 1), Marsaglia-Tsang; shape < 1 boosted via the
    // standard U^(1/shape) trick.
    double gamma(double shape) {
        require(shape > 0.0, "gamma: shape must be positive");
        if (shape < 1.0) {
            const double u = uniform_pos();
            return gamma(shape + 1.0) * std::pow(u, 1.0 / shape);
        }
        const double d = shape - 1.0 / 3.0;
        const double c = 1.0 / std::sqrt(9.0 * d);
        for (;;) {
            double x, v;
            do {
                x = normal();
                v = 1.0 + c * x;
            } while (v <= 0.0);
            v = v * v * v;
            const double u = uniform_pos();
            if (u < 1.0 - 0.0331 * x * x * x * x) return d * v;
            if (std::log(u) < 0.5 * x * x + d * (1.0 - v + std::log(v))) return d * v;
        }
    }

  private:
    static std::uint64_t rotl(std::uint64_t x, int k) { return (x << k) | (x >> (64 - k)); }

    std::uint64_t s_[4];
    double cached_ = 0.0;
    bool has_cached_ = false;
};

}  // namespace fediq
