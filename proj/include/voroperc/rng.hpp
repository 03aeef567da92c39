#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>

// Deterministic RNG with counter-derived streams.
//
// Replica streams are derived from (master_seed, stream_tag, replica_index)
// by SplitMix64 mixing, in the spirit of Salmon et al., "Parallel random
// numbers: as easy as 1, 2, 3" (SC 2011): the stream identity is a counter,
// not a shared mutable state, so results do not depend on thread scheduling.
// The per-stream engine is xoshiro256++ (Blackman & Vigna 2019).
//
// All distributions are implemented here rather than with <random>, because
// the standard distributions are implementation-defined and would break
// bit-reproducibility of result files across standard libraries.

namespace voroperc {

inline uint64_t splitmix64(uint64_t& state) {
    uint64_t z = (state += 0x9e3779b97f4a7c15ULL);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

class Rng {
  public:
    Rng() : Rng(0, 0, 0) {}

    // Stream (master_seed, stream_tag, replica). Identical triples give
    // identical streams on every platform.
    Rng(uint64_t master_seed, uint64_t stream_tag, uint64_t replica) {
        uint64_t s = master_seed;
        s ^= 0x6a09e667f3bcc908ULL + splitmix64(stream_tag);
        uint64_t t = s ^ (0xbb67ae8584caa73bULL + splitmix64(replica));
        state_[0] = splitmix64(t);
        state_[1] = splitmix64(t);
        state_[2] = splitmix64(t);
        state_[3] = splitmix64(t);
        // xoshiro must not start at the all-zero state
        if ((state_[0] | state_[1] | state_[2] | state_[3]) == 0) state_[3] = 1;
    }

    uint64_t next_u64() {
        const uint64_t result = rotl(state_[0] + state_[3], 23) + state_[0];
        const uint64_t t = state_[1] << 17;
        state_[2] ^= state_[0];
        state_[3] ^= state_[1];
        state_[1] ^= state_[2];
        state_[0] ^= state_[3];
        state_[2] ^= t;
        state_[3] = rotl(state_[3], 45);
        return result;
    }

    // Uniform in [0,1), 53 random mantissa bits.
    double uniform01() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

    // Uniform in (0,1]; safe as a log() argument.
    double uniform01_open0() { return static_cast<double>((next_u64() >> 11) + 1) * 0x1.0p-53; }

    double uniform(double a, double b) { return a + (b - a) * uniform01(); }

    // Uniform integer in [0, n).
    uint64_t below(uint64_t n) {
        // Lemire's multiply-shift rejection; unbiased.
        uint64_t x = next_u64();
        __uint128_t m = static_cast<__uint128_t>(x) * n;
        uint64_t l = static_cast<uint64_t>(m);
        if (l < n) {
            uint64_t floor = (-n) % n;
            while (l < floor) {
                x = next_u64();
                m = static_cast<__uint128_t>(x) * n;
                l = static_cast<uint64_t>(m);
            }
        }
        return static_cast<uint64_t>(m >> 64);
    }

    bool bernoulli(double p) { return uniform01() < p; }

    // Fair random sign in {-1,+1}.
    int sign() { return (next_u64() >> 63) ? 1 : -1; }

    double exponential() { return -std::log(uniform01_open0()); }

    // Marsaglia polar method; both values are consumed to keep the stream
    // position independent of call parity.
    double normal() {
        for (;;) {
            double u = 2.0 * uniform01() - 1.0;
            double v = 2.0 * uniform01() - 1.0;
            double s = u * u + v * v;
            if (s > 0.0 && s < 1.0) return u * std::sqrt(-2.0 * std::log(s) / s);
        }
    }

    // Poisson(lambda) by counting unit-exponential arrivals below lambda.
    // Exact for any lambda, O(lambda) draws, no underflow issues.
    uint64_t poisson(double lambda) {
        uint64_t k = 0;
        double acc = exponential();
        while (acc <= lambda) {
            ++k;
            acc += exponential();
        }
        return k;
    }

    // Totally skewed (beta = 1) positive stable variable with index
    // a in (0,1), Laplace transform E[exp(-u S)] = exp(-u^a).
    // Chambers-Mallows-Stuck form; this parameterization is already
    // Laplace-normalized (checked against exp(-u^a) in the tests).
    double positive_stable(double a) {
        const double half_pi = std::numbers::pi / 2.0;
        double v = uniform(-half_pi, half_pi);
        double w = exponential();
        return std::sin(a * (v + half_pi)) / std::pow(std::cos(v), 1.0 / a) *
               std::pow(std::cos(v - a * (v + half_pi)) / w, (1.0 - a) / a);
    }

    // Pareto with tail P[X >= x] = x^{-alpha} for x >= 1.
    double pareto(double alpha) { return std::pow(uniform01_open0(), -1.0 / alpha); }

  private:
    static uint64_t rotl(uint64_t x, int k) { return (x << k) | (x >> (64 - k)); }
    uint64_t state_[4];
};

// Independent derived seed for a sub-experiment.
inline uint64_t derive_seed(uint64_t seed, uint64_t salt) {
    uint64_t s = seed ^ (salt * 0x9e3779b97f4a7c15ULL + 0x7f4a7c15ULL);
    return splitmix64(s);
}

// Fixed tags for the stream families used across the project; listed here so
// no two call sites can collide by accident.
namespace stream {
constexpr uint64_t kPoissonPoints = 1;
constexpr uint64_t kColors = 2;
constexpr uint64_t kFrozenClocks = 3;
constexpr uint64_t kMoverPaths = 4;
constexpr uint64_t kReplica = 5;
constexpr uint64_t kSpectralDraw = 6;
constexpr uint64_t kResample = 7;
constexpr uint64_t kBootstrap = 8;
}  // namespace stream

}  // namespace voroperc
