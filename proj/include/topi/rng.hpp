// Copyright (C) 2026 the topi authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>

namespace topi {

// Deterministic, portable PRNG stack used everywhere randomness is needed:
// splitmix64 expands a single 64-bit seed into the xoshiro256++ state, so a
// seed fully pins every generated value across platforms and languages.

struct SplitMix64 {
    std::uint64_t state = 0;

    explicit SplitMix64(std::uint64_t seed) : state(seed) {}

    std::uint64_t next() {
        std::uint64_t z = (state += 0x9E3779B97F4A7C15ULL);
        z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
        z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
        return z ^ (z >> 31);
    }
};

class Xoshiro256pp {
public:
    explicit Xoshiro256pp(std::uint64_t seed);

    std::uint64_t next_u64();

    // 53-bit mantissa double in [0, 1)
    double next_double();

    double next_uniform(double lo, double hi);

    // Box-Muller; generates values in pairs and caches the second one
    double next_gaussian(double sigma);

private:
    std::uint64_t s_[4];
    double cached_ = 0.0;
    bool has_cached_ = false;
};

}  // namespace topi
