// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <limits>
#include <random>

namespace ovo {

/// Uniform integer in [0, n) by rejection sampling on the raw engine output.
/// Unlike std::uniform_int_distribution the sequence is the same on every
/// standard library, which keeps seeded outputs byte-stable across platforms.
inline std::size_t draw_index(std::mt19937_64& rng, std::size_t n) {
  const std::uint64_t range = n;
  const std::uint64_t max = std::numeric_limits<std::uint64_t>::max();
  const std::uint64_t limit = max - (max % range + 1) % range;
  std::uint64_t x;
  do {
    x = rng();
  } while (x > limit);
  return static_cast<std::size_t>(x % range);
}

}  // namespace ovo
