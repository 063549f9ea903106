#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>

namespace l1dl {

inline std::uint64_t mix64(std::uint64_t x) {
    x ^= x >> 30;
    x *= 0xBF58476D1CE4E5B9ull;
    x ^= x >> 27;
    x *= 0x94D049BB133111EBull;
    x ^= x >> 31;
    return x;
}

/// Counter-based splittable generator (SplitMix64 core).
///
/// Child streams derived with split(key) depend only on (parent state, key),
/// so per-row streams drawn as rng.split(row) are identical whether rows are
/// generated sequentially or in parallel.
class SplitRng {
public:
    explicit SplitRng(std::uint64_t seed)
        : state_(mix64(seed + 0x9E3779B97F4A7C15ull)) {}

    SplitRng split(std::uint64_t key) const {
        return SplitRng(state_ ^ mix64(key + 0xD1B54A32D192ED03ull));
    }

    std::uint64_t next_u64() {
        state_ += 0x9E3779B97F4A7C15ull;
        return mix64(state_);
    }

    /// Uniform in [0, 1), 53-bit resolution.
    double next_double() {
        return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
    }

    /// Uniform integer in [0, m). Lemire reduction, m > 0.
    std::uint64_t next_below(std::uint64_t m) {
        return static_cast<std::uint64_t>(
            (static_cast<unsigned __int128>(next_u64()) * m) >> 64);
    }

    bool next_bernoulli(double p) { return next_double() < p; }

    /// Standard normal via Box-Muller; pairs are cached.
    double next_gaussian() {
        if (has_cache_) {
            has_cache_ = false;
            return cache_;
        }
        const double u1 = next_double();
        const double u2 = next_double();
        const double r = std::sqrt(-2.0 * std::log1p(-u1));
        const double t = 2.0 * std::numbers::pi * u2;
        cache_ = r * std::sin(t);
        has_cache_ = true;
        return r * std::cos(t);
    }

    /// Exponential with unit rate.
    double next_exponential() { return -std::log1p(-next_double()); }

    /// Standard Laplace: density exp(-|x|)/2.
    double next_laplace() {
        const double e = next_exponential();
        return (next_u64() & 1ull) ? e : -e;
    }

private:
    std::uint64_t state_;
    double cache_ = 0.0;
    bool has_cache_ = false;
};

/// Deterministic per-trial seed for experiment fan-out.
inline std::uint64_t derive_seed(std::uint64_t master, std::uint64_t grid_index,
                                 std::uint64_t trial_index) {
    return mix64(master ^ mix64(grid_index + 0x8BB84B93962EACC9ull) ^
                 mix64(trial_index + 0x2545F4914F6CDD1Dull));
}

}  // namespace l1dl
