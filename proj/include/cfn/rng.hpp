#pragma once

#include <cstdint>
#include <vector>

#include "cfn/error.hpp"

namespace cfn {

// Seeded random number generator built on SplitMix64 (Steele, Lea & Flood).
// Pure 64-bit integer arithmetic, so the raw draw sequence is identical for a
// given seed on every platform. Single-owner: not safe to share across
// threads; use split() to derive an independent stream instead.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : state_(seed) {}

    std::uint64_t next_u64() {
        std::uint64_t z = (state_ += 0x9e3779b97f4a7c15ULL);
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
        return z ^ (z >> 31);
    }

    // Uniform on [0, 1) with 53 bits of mantissa.
    double next_unit() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

    // Uniform on [lo, hi); requires hi >= lo. uniform(a, a) == a.
    double uniform(double lo, double hi) {
        if (hi < lo) throw ArgumentError("uniform: hi < lo");
        return lo + (hi - lo) * next_unit();
    }

    // Box-Muller draw; requires sd >= 0. normal(m, 0) == m.
    double normal(double mean, double sd);

    // He initialization draw: normal(0, sqrt(2 / fan_in)); requires fan_in >= 1.
    double he(std::size_t fan_in);

    // Derives an independent generator; statistically decorrelated stream.
    Rng split() { return Rng(next_u64()); }

    // Fisher-Yates shuffle of 0..n-1.
    std::vector<std::size_t> permutation(std::size_t n);

private:
    std::uint64_t state_;
};

} // namespace cfn
