// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <string>
#include <vector>

#include "ovo/manifest.hpp"

namespace ovo {

class SplitError : public Error {
 public:
  using Error::Error;
};

/// View-score regimes, in degrees. Train/ID is half-open [lo, hi), the
/// isolation band is closed [lo, hi] and OOD starts strictly above the
/// threshold, so both band edges belong to the isolation band.
struct SplitConfig {
  double train_id_lo = 0.0;
  double train_id_hi = 30.0;
  double isolation_lo = 30.0;
  double isolation_hi = 40.0;
  double ood_threshold = 40.0;
  std::size_t per_class_test_count = 20;
  std::uint64_t seed = 0;
};

void validate(const SplitConfig& cfg);
/// JSON object with any subset of the SplitConfig field names.
SplitConfig load_split_config(const std::filesystem::path& path);

enum class Regime { kLowPool, kIsolation, kOodPool, kExcluded };
std::string_view to_string(Regime r);

struct RegimeDecision {
  Regime regime;
  std::string reason;  // set when excluded
};

RegimeDecision assign_regime(double score_deg, const SplitConfig& cfg);

struct SplitAssignment {
  std::string video_id;
  Split split;
  std::string reason;

  bool operator==(const SplitAssignment&) const = default;
};

struct ClassCounts {
  std::size_t train = 0;
  std::size_t id_test = 0;
  std::size_t isolation = 0;
  std::size_t ood_test = 0;
  std::size_t excluded = 0;
};

struct SplitSummary {
  std::size_t train = 0;
  std::size_t id_test = 0;
  std::size_t isolation = 0;
  std::size_t ood_test = 0;
  std::size_t excluded = 0;
  std::map<std::string, ClassCounts> per_class;
  std::map<std::string, std::size_t> excluded_by_reason;
  bool parity = false;  // every class has id_test == ood_test == per_class_test_count

  std::size_t total() const { return train + id_test + isolation + ood_test + excluded; }
};

struct SplitResult {
  std::vector<SplitAssignment> assignments;  // sorted by video_id
  Manifest manifest;                         // input rows with split filled in
  SplitSummary summary;
};

/// Deterministic four-way split. Throws SplitError naming every class whose
/// low or OOD pool cannot supply per_class_test_count videos.
SplitResult build_splits(const Manifest& manifest, const SplitConfig& cfg);

struct MergeResult {
  Manifest manifest;
  std::vector<std::string> warnings;
};

/// Appends top-up rows to the base manifest. Rows scoring at or below the OOD
/// threshold are pre-marked excluded with a warning.
MergeResult merge_topup(const Manifest& base, const Manifest& topup, const SplitConfig& cfg);

void write_assignments(const std::vector<SplitAssignment>& assignments, std::ostream& out);
void write_split_summary(const SplitSummary& summary, const SplitConfig& cfg, std::ostream& out);
void write_class_table(const SplitSummary& summary, std::ostream& out);

}  // namespace ovo
