// Copyright (C) 2026 the topi authors
// SPDX-License-Identifier: Apache-2.0

#include "topi/rng.hpp"

#include <cmath>

namespace topi {

namespace {

inline std::uint64_t rotl(std::uint64_t x, int k) {
    return (x << k) | (x >> (64 - k));
}

constexpr double kTwoPi = 6.283185307179586476925286766559;

}  // namespace

Xoshiro256pp::Xoshiro256pp(std::uint64_t seed) {
    SplitMix64 sm(seed);
    s_[0] = sm.next();
    s_[1] = sm.next();
    s_[2] = sm.next();
    s_[3] = sm.next();
}

std::uint64_t Xoshiro256pp::next_u64() {
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

double Xoshiro256pp::next_double() {
    return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
}

double Xoshiro256pp::next_uniform(double lo, double hi) {
    return lo + (hi - lo) * next_double();
}

double Xoshiro256pp::next_gaussian(double sigma) {
    if (has_cached_) {
        has_cached_ = false;
        return cached_ * sigma;
    }
    double u1 = 0.0;
    do {
        u1 = next_double();
    } while (u1 <= 0.0);
    const double u2 = next_double();
    const double r = std::sqrt(-2.0 * std::log(u1));
    const double z0 = r * std::cos(kTwoPi * u2);
    const double z1 = r * std::sin(kTwoPi * u2);
    cached_ = z1;
    has_cached_ = true;
    return z0 * sigma;
}

}  // namespace topi
