#pragma once

#include <cstdint>

namespace spdelab {

/// SplitMix64 finalizer: full-avalanche 64-bit mixer.
inline std::uint64_t mix64(std::uint64_t z) {
    z += 0x9E3779B97F4A7C15ull;
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
    return z ^ (z >> 31);
}

/// Inverse of the standard normal CDF (Acklam's rational approximation,
/// relative accuracy ~1.15e-9). Pure arithmetic plus sqrt/log, so results
/// are reproducible across platforms.
double normal_quantile(double p);

/// Standard normal CDF via erfc.
double normal_cdf(double x);

/// Stateful generator with splitmix64 stepping, for draws whose count is not
/// known in advance (event thinning, path sampling). Seed it from a counter
/// key so that streams stay reproducible and independent.
class SequentialRng {
public:
    explicit SequentialRng(std::uint64_t state) : state_(state) {}

    std::uint64_t next_u64() {
        state_ += 0x9E3779B97F4A7C15ull;
        std::uint64_t z = state_;
        z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
        z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
        return z ^ (z >> 31);
    }

    /// Uniform in (0, 1), never returns 0 or 1.
    double uniform() {
        return (static_cast<double>(next_u64() >> 11) + 0.5) * 0x1.0p-53;
    }

    double normal() { return normal_quantile(uniform()); }

    /// Poisson draw by inversion (mean should be modest, <= ~60 per draw;
    /// a normal approximation takes over beyond that).
    int poisson(double mean);

private:
    std::uint64_t state_;
};

/// Counter-based generator: every variate is a pure function of
/// (seed, stream, index0, index1). There is no sequential state, so noise
/// arrays can be generated in any order, in parallel, bit-identically.
class CounterRng {
public:
    CounterRng(std::uint64_t seed, std::uint64_t stream)
        : base_(mix64(mix64(seed) ^ (0x6A09E667F3BCC909ull + stream))) {}

    std::uint64_t key(std::uint64_t i, std::uint64_t j) const {
        return mix64(mix64(base_ ^ i) ^ (j + 0xD1B54A32D192ED03ull));
    }

    /// Uniform in (0, 1).
    double uniform(std::uint64_t i, std::uint64_t j) const {
        return (static_cast<double>(key(i, j) >> 11) + 0.5) * 0x1.0p-53;
    }

    /// Standard normal deviate at counter (i, j).
    double normal(std::uint64_t i, std::uint64_t j) const {
        return normal_quantile(uniform(i, j));
    }

    /// Spawns a sequential generator tied to counter (i, j).
    SequentialRng sequence(std::uint64_t i, std::uint64_t j) const {
        return SequentialRng(key(i, j));
    }

private:
    std::uint64_t base_;
};

} // namespace spdelab
