// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "ovo/error.hpp"

namespace ovo {

enum class Origin { kBase, kTopup };
enum class ReviewFlag { kAccepted, kRejected, kUnreviewed };
enum class Split { kTrain, kIdTest, kIsolation, kOodTest, kExcluded };

std::string_view to_string(Origin o);
std::string_view to_string(ReviewFlag f);
std::string_view to_string(Split s);
Origin parse_origin(std::string_view s);
ReviewFlag parse_review_flag(std::string_view s);
Split parse_split(std::string_view s);

class ManifestError : public Error {
 public:
  using Error::Error;
};

struct ManifestRow {
  std::string video_id;
  std::string class_label;
  std::string timestamp_key;
  Origin origin = Origin::kBase;
  ReviewFlag review_flag = ReviewFlag::kUnreviewed;
  std::optional<double> score;  // degrees
  std::optional<Split> split;

  bool operator==(const ManifestRow&) const = default;
};

struct Manifest {
  std::vector<ManifestRow> rows;

  const ManifestRow* find(std::string_view video_id) const;
  bool operator==(const Manifest&) const = default;
};

/// Column order used on save. Loading accepts any permutation of these, with
/// `score` and `split` optional.
inline constexpr std::string_view kManifestColumns[] = {
    "video_id", "class_label", "timestamp_key", "origin", "review_flag", "score", "split"};

/// Checks id uniqueness plus the review/origin split constraints.
void validate(const Manifest& m);

Manifest parse_manifest(std::istream& in);
void write_manifest(const Manifest& m, std::ostream& out);

Manifest load_manifest(const std::filesystem::path& path);
/// Rows are written sorted by video_id regardless of in-memory order.
void save_manifest(const Manifest& m, const std::filesystem::path& path);

/// Shortest decimal text that parses back to exactly `v`.
std::string format_real(double v);
double parse_real(std::string_view s);

}  // namespace ovo
