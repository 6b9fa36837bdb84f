// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "ovo/manifest.hpp"
#include "ovo/stats.hpp"
#include "ovo/viewgeom.hpp"

namespace ovo {

struct VideoScore {
  std::string video_id;
  std::vector<FrameScore> frame_scores;
  std::optional<double> score_deg;  // median s over valid frames
  std::size_t valid_frame_count = 0;
};

VideoScore score_video(std::string video_id, std::vector<FrameScore> frames);

/// How a timestamp key is pulled out of a video id: `regex` is searched in the
/// id and the key is `format` expanded against the match ($1, $2, ...). An
/// empty regex means "use the manifest's timestamp_key column as is".
struct KeyPattern {
  std::string regex;
  std::string format = "$&";
};

struct GroupScore {
  std::string timestamp_key;
  std::vector<std::string> member_ids;  // sorted
  std::optional<double> score_deg;
  ReviewFlag review_flag = ReviewFlag::kUnreviewed;
};

struct Grouping {
  std::vector<GroupScore> groups;       // sorted by key
  std::vector<std::string> unmatched;   // ids the pattern could not key
};

/// Extracts the key for one id, or nullopt if the pattern does not match.
std::optional<std::string> extract_key(const std::string& video_id, const KeyPattern& pattern);

/// Groups the manifest by timestamp key and scores each group with the median
/// of its members' `score` column (members without a score are skipped).
/// Rejected members never contribute; a group whose members are all rejected
/// is itself rejected and carries no score. A group of only accepted (non
/// rejected) members is accepted, otherwise unreviewed.
Grouping group_by_timestamp(const Manifest& manifest, const KeyPattern& pattern);

/// Copies each group's key and score onto its non-rejected members. Unmatched
/// videos keep their own score.
Manifest apply_group_scores(const Manifest& manifest, const Grouping& grouping);

// Frame-score records, one JSON object per line:
//   {"frame_index":3,"theta_deg":131.2,"s_deg":41.2,"valid":true,"invalid_reason":null}
void write_frame_scores(const std::vector<FrameScore>& frames, std::ostream& out);
std::vector<FrameScore> read_frame_scores(std::istream& in);

void write_group_report(const Grouping& grouping, std::ostream& out);

}  // namespace ovo
