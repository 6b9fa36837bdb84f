// SPDX-License-Identifier: Apache-2.0
//
// Manifest fixtures sized like the full benchmark pools: 155 classes,
// 16,972 low-depression videos, 3,275 isolation-band videos and exactly 20
// OOD-eligible videos per class, 981 of which come from the top-up set.

#pragma once

#include <cstdio>
#include <random>
#include <string>

#include "ovo/manifest.hpp"

namespace ovo::testing {

struct PoolShape {
  int classes = 155;
  int low_pool = 16972;
  int isolation = 3275;
  int ood_per_class = 20;
  int topup = 981;
};

inline std::string class_name(int c) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "A%03d", c);
  return buf;
}

inline Manifest pool_manifest(const PoolShape& shape, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> low(0.0, 30.0), iso(30.0, 40.0), ood(40.5, 88.0);
  Manifest m;
  int serial = 0;
  auto add = [&](int c, double score, Origin origin) {
    char id[48];
    std::snprintf(id, sizeof id, "%s_%06d", origin == Origin::kTopup ? "T" : "B", serial++);
    m.rows.push_back({id, class_name(c), "ts" + std::to_string(serial / 7), origin,
                      ReviewFlag::kAccepted, score, {}});
  };
  auto spread = [&](int total, int c) {
    return total / shape.classes + (c < total % shape.classes ? 1 : 0);
  };
  for (int c = 0; c < shape.classes; ++c) {
    const int n_low = spread(shape.low_pool, c);
    for (int i = 0; i < n_low; ++i) add(c, i == 0 ? 0.0 : low(rng), Origin::kBase);
    const int n_iso = spread(shape.isolation, c);
    for (int i = 0; i < n_iso; ++i) {
      // both band edges belong to the isolation band
      add(c, i == 0 ? 30.0 : i == 1 ? 40.0 : iso(rng), Origin::kBase);
    }
    const int n_topup = spread(shape.topup, c);
    for (int i = 0; i < shape.ood_per_class - n_topup; ++i) add(c, ood(rng), Origin::kBase);
    for (int i = 0; i < n_topup; ++i) add(c, ood(rng), Origin::kTopup);
  }
  return m;
}

}  // namespace ovo::testing
