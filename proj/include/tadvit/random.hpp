// Copyright 2026 The tadvit Authors
// SPDX-License-Identifier: Apache-2.0
//
// Seeded sampling helpers with fully specified output. The standard library
// engines are portable but its distributions and std::shuffle are not, so
// everything that must reproduce across toolchains goes through here.
#pragma once

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <numbers>
#include <random>
#include <utility>

namespace tadvit::rnd {

using Engine = std::mt19937_64;

inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

/// [0, 1) with 53 random bits.
inline double uniform01(Engine& rng) { return static_cast<double>(rng() >> 11) * 0x1.0p-53; }

inline float uniform01f(Engine& rng) { return static_cast<float>(rng() >> 40) * 0x1.0p-24f; }

/// [0, n) for n >= 1; modulo bias is below 2^-40 for any n used here.
inline std::uint64_t below(Engine& rng, std::uint64_t n) { return rng() % n; }

/// Box-Muller; consumes two draws per call.
inline double standard_normal(Engine& rng) {
  const double u1 = 1.0 - uniform01(rng);  // (0, 1]
  const double u2 = uniform01(rng);
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

/// Fisher-Yates from the back.
template <typename It>
void shuffle(It first, It last, Engine& rng) {
  const auto n = static_cast<std::uint64_t>(last - first);
  for (std::uint64_t i = n; i > 1; --i) {
    const auto j = below(rng, i);
    using std::swap;
    swap(first[static_cast<std::ptrdiff_t>(i - 1)], first[static_cast<std::ptrdiff_t>(j)]);
  }
}

}  // namespace tadvit::rnd
