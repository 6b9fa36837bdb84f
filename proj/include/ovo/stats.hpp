// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <algorithm>
#include <span>
#include <vector>

#include "ovo/error.hpp"

namespace ovo {

/// Median of a nonempty list; even counts average the two middle values.
inline double median(std::span<const double> values) {
  if (values.empty()) throw Error("median of an empty list");
  std::vector<double> v(values.begin(), values.end());
  const auto mid = v.size() / 2;
  std::nth_element(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(mid), v.end());
  const double upper = v[mid];
  if (v.size() % 2 == 1) return upper;
  const double lower = *std::max_element(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(mid));
  return 0.5 * (lower + upper);
}

}  // namespace ovo
