// SPDX-License-Identifier: Apache-2.0

#include "ovo/viewscore.hpp"

#include <algorithm>
#include <cmath>
#include <istream>
#include <map>
#include <ostream>
#include <regex>

#include <json.hpp>

namespace ovo {

using nlohmann::json;

VideoScore score_video(std::string video_id, std::vector<FrameScore> frames) {
  VideoScore out;
  out.video_id = std::move(video_id);
  std::vector<double> s;
  for (const auto& f : frames) {
    if (f.valid) s.push_back(f.s_deg);
  }
  out.valid_frame_count = s.size();
  if (!s.empty()) out.score_deg = median(s);
  out.frame_scores = std::move(frames);
  return out;
}

std::optional<std::string> extract_key(const std::string& video_id, const KeyPattern& pattern) {
  const std::regex re(pattern.regex);
  std::smatch m;
  if (!std::regex_search(video_id, m, re)) return std::nullopt;
  return m.format(pattern.format);
}

Grouping group_by_timestamp(const Manifest& manifest, const KeyPattern& pattern) {
  std::optional<std::regex> re;
  if (!pattern.regex.empty()) re.emplace(pattern.regex);

  struct Acc {
    std::vector<std::string> members;
    std::vector<double> scores;
    std::size_t rejected = 0;
    std::size_t accepted = 0;
  };
  std::map<std::string, Acc> by_key;
  Grouping out;

  for (const auto& row : manifest.rows) {
    std::string key;
    if (re) {
      std::smatch m;
      if (!std::regex_search(row.video_id, m, *re)) {
        out.unmatched.push_back(row.video_id);
        continue;
      }
      key = m.format(pattern.format);
    } else {
      key = row.timestamp_key;
    }
    if (key.empty()) {
      out.unmatched.push_back(row.video_id);
      continue;
    }
    auto& acc = by_key[key];
    acc.members.push_back(row.video_id);
    if (row.review_flag == ReviewFlag::kRejected) {
      ++acc.rejected;
      continue;
    }
    if (row.review_flag == ReviewFlag::kAccepted) ++acc.accepted;
    if (row.score && std::isfinite(*row.score)) acc.scores.push_back(*row.score);
  }

  for (auto& [key, acc] : by_key) {
    GroupScore g;
    g.timestamp_key = key;
    std::sort(acc.members.begin(), acc.members.end());
    g.member_ids = std::move(acc.members);
    if (acc.rejected == g.member_ids.size()) {
      g.review_flag = ReviewFlag::kRejected;
    } else {
      g.review_flag = acc.accepted + acc.rejected == g.member_ids.size() ? ReviewFlag::kAccepted
                                                                         : ReviewFlag::kUnreviewed;
      if (!acc.scores.empty()) g.score_deg = median(acc.scores);
    }
    out.groups.push_back(std::move(g));
  }
  std::sort(out.unmatched.begin(), out.unmatched.end());
  return out;
}

Manifest apply_group_scores(const Manifest& manifest, const Grouping& grouping) {
  std::map<std::string, const GroupScore*, std::less<>> owner;
  for (const auto& g : grouping.groups) {
    for (const auto& id : g.member_ids) owner[id] = &g;
  }
  Manifest out = manifest;
  for (auto& row : out.rows) {
    auto it = owner.find(row.video_id);
    if (it == owner.end()) continue;
    row.timestamp_key = it->second->timestamp_key;
    if (row.review_flag == ReviewFlag::kRejected) continue;
    row.score = it->second->score_deg;
  }
  return out;
}

void write_frame_scores(const std::vector<FrameScore>& frames, std::ostream& out) {
  for (const auto& f : frames) {
    json j;
    j["frame_index"] = f.frame_index;
    j["theta_deg"] = f.valid ? json(f.theta_deg) : json(nullptr);
    j["s_deg"] = f.valid ? json(f.s_deg) : json(nullptr);
    j["valid"] = f.valid;
    j["invalid_reason"] =
        f.invalid_reason ? json(std::string(to_string(*f.invalid_reason))) : json(nullptr);
    out << j.dump() << '\n';
  }
}

std::vector<FrameScore> read_frame_scores(std::istream& in) {
  std::vector<FrameScore> out;
  std::string line;
  while (std::getline(in, line)) {
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      const auto j = json::parse(line);
      FrameScore f;
      f.frame_index = j.at("frame_index").get<int>();
      f.valid = j.at("valid").get<bool>();
      if (f.valid) {
        f.theta_deg = j.at("theta_deg").get<double>();
        f.s_deg = j.at("s_deg").get<double>();
      }
      if (j.contains("invalid_reason") && !j["invalid_reason"].is_null()) {
        f.invalid_reason = parse_invalid_reason(j["invalid_reason"].get<std::string>());
      }
      if (f.valid == f.invalid_reason.has_value()) {
        throw Error("frame " + std::to_string(f.frame_index) +
                    ": valid frames carry no reason, invalid frames need one");
      }
      out.push_back(f);
    } catch (const json::exception& e) {
      throw Error(std::string("malformed frame-score record: ") + e.what());
    }
  }
  return out;
}

void write_group_report(const Grouping& grouping, std::ostream& out) {
  out << "timestamp_key\tmembers\tgroup_score\treview_flag\tmember_ids\n";
  for (const auto& g : grouping.groups) {
    out << g.timestamp_key << '\t' << g.member_ids.size() << '\t'
        << (g.score_deg ? format_real(*g.score_deg) : "") << '\t' << to_string(g.review_flag)
        << '\t';
    for (std::size_t i = 0; i < g.member_ids.size(); ++i) out << (i ? "," : "") << g.member_ids[i];
    out << '\n';
  }
  for (const auto& id : grouping.unmatched) out << "# unmatched\t" << id << '\n';
}

}  // namespace ovo
