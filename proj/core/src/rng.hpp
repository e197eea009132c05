// Copyright 2026 The Nahr Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <random>

#include "nahr/hash.hpp"

namespace nahr::detail {

__extension__ using u128 = unsigned __int128;

// mt19937_64 output is fixed by the standard; bounded draws are done here
// instead of through <random> distributions so streams match across
// standard library implementations.
class SeededRng {
 public:
  SeededRng(std::uint64_t seed, std::uint64_t stream)
      : engine_(mix64(seed ^ 0x9e3779b97f4a7c15ULL) ^ mix64(stream + 0x632be59bd9b4e019ULL)) {}

  /// Uniform in [0, bound), bound > 0. Lemire's nearly-divisionless method.
  std::uint64_t below(std::uint64_t bound) {
    u128 m = static_cast<u128>(engine_()) * bound;
    auto low = static_cast<std::uint64_t>(m);
    if (low < bound) {
      const std::uint64_t threshold = -bound % bound;
      while (low < threshold) {
        m = static_cast<u128>(engine_()) * bound;
        low = static_cast<std::uint64_t>(m);
      }
    }
    return static_cast<std::uint64_t>(m >> 64);
  }

 private:
  std::mt19937_64 engine_;
};

}  // namespace nahr::detail
