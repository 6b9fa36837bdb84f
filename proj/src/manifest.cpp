// SPDX-License-Identifier: Apache-2.0

#include "ovo/manifest.hpp"

#include <algorithm>
#include <array>
#include <charconv>
#include <cmath>
#include <fstream>
#include <istream>
#include <ostream>
#include <set>
#include <sstream>

namespace ovo {
namespace {

std::vector<std::string> split_tabs(const std::string& line) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (true) {
    const auto pos = line.find('\t', start);
    out.push_back(line.substr(start, pos - start));
    if (pos == std::string::npos) break;
    start = pos + 1;
  }
  return out;
}

void check_field(const std::string& value, std::string_view column) {
  if (value.find_first_of("\t\r\n") != std::string::npos) {
    throw ManifestError("field " + std::string(column) + " contains a tab or newline");
  }
}

}  // namespace

std::string_view to_string(Origin o) { return o == Origin::kBase ? "base" : "topup"; }

std::string_view to_string(ReviewFlag f) {
  switch (f) {
    case ReviewFlag::kAccepted: return "accepted";
    case ReviewFlag::kRejected: return "rejected";
    case ReviewFlag::kUnreviewed: return "unreviewed";
  }
  return "unreviewed";
}

std::string_view to_string(Split s) {
  switch (s) {
    case Split::kTrain: return "train";
    case Split::kIdTest: return "id_test";
    case Split::kIsolation: return "isolation";
    case Split::kOodTest: return "ood_test";
    case Split::kExcluded: return "excluded";
  }
  return "excluded";
}

Origin parse_origin(std::string_view s) {
  if (s == "base") return Origin::kBase;
  if (s == "topup") return Origin::kTopup;
  throw ManifestError("unknown origin '" + std::string(s) + "'");
}

ReviewFlag parse_review_flag(std::string_view s) {
  if (s == "accepted") return ReviewFlag::kAccepted;
  if (s == "rejected") return ReviewFlag::kRejected;
  if (s == "unreviewed") return ReviewFlag::kUnreviewed;
  throw ManifestError("unknown review flag '" + std::string(s) + "'");
}

Split parse_split(std::string_view s) {
  for (auto v : {Split::kTrain, Split::kIdTest, Split::kIsolation, Split::kOodTest, Split::kExcluded}) {
    if (s == to_string(v)) return v;
  }
  throw ManifestError("unknown split '" + std::string(s) + "'");
}

std::string format_real(double v) {
  std::array<char, 64> buf{};
  auto [end, ec] = std::to_chars(buf.data(), buf.data() + buf.size(), v);
  if (ec != std::errc{}) throw Error("cannot format real value");
  return std::string(buf.data(), end);
}

double parse_real(std::string_view s) {
  double v = 0;
  auto [end, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc{} || end != s.data() + s.size()) {
    throw ManifestError("malformed real value '" + std::string(s) + "'");
  }
  return v;
}

const ManifestRow* Manifest::find(std::string_view video_id) const {
  auto it = std::find_if(rows.begin(), rows.end(),
                         [&](const ManifestRow& r) { return r.video_id == video_id; });
  return it == rows.end() ? nullptr : &*it;
}

void validate(const Manifest& m) {
  std::set<std::string_view> seen;
  for (const auto& row : m.rows) {
    if (row.video_id.empty()) throw ManifestError("empty video_id");
    if (!seen.insert(row.video_id).second) {
      throw ManifestError("duplicate video_id '" + row.video_id + "'");
    }
    if (row.review_flag == ReviewFlag::kRejected && row.split && *row.split != Split::kExcluded) {
      throw ManifestError("rejected video '" + row.video_id + "' assigned split " +
                          std::string(to_string(*row.split)));
    }
    if (row.origin == Origin::kTopup && row.split && *row.split != Split::kOodTest &&
        *row.split != Split::kExcluded) {
      throw ManifestError("constraint violation: topup video '" + row.video_id +
                          "' assigned split " + std::string(to_string(*row.split)) +
                          " (topup videos are OOD-test only)");
    }
  }
}

Manifest parse_manifest(std::istream& in) {
  std::string line;
  if (!std::getline(in, line)) throw ManifestError("manifest is empty, header row missing");
  if (!line.empty() && line.back() == '\r') line.pop_back();

  const auto header = split_tabs(line);
  // column index in kManifestColumns -> position in file
  std::array<int, std::size(kManifestColumns)> pos;
  pos.fill(-1);
  for (std::size_t i = 0; i < header.size(); ++i) {
    auto it = std::find(std::begin(kManifestColumns), std::end(kManifestColumns), header[i]);
    if (it == std::end(kManifestColumns)) {
      throw ManifestError("unknown manifest column '" + header[i] + "'");
    }
    auto& slot = pos[static_cast<std::size_t>(it - std::begin(kManifestColumns))];
    if (slot >= 0) throw ManifestError("duplicate manifest column '" + header[i] + "'");
    slot = static_cast<int>(i);
  }
  for (std::size_t c = 0; c < 5; ++c) {
    if (pos[c] < 0) {
      throw ManifestError("missing required column '" + std::string(kManifestColumns[c]) + "'");
    }
  }

  Manifest m;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const auto fields = split_tabs(line);
    if (fields.size() != header.size()) {
      throw ManifestError("line " + std::to_string(line_no) + ": expected " +
                          std::to_string(header.size()) + " fields, got " +
                          std::to_string(fields.size()));
    }
    auto field = [&](std::size_t c) -> const std::string& { return fields[static_cast<std::size_t>(pos[c])]; };
    try {
      ManifestRow row;
      row.video_id = field(0);
      row.class_label = field(1);
      row.timestamp_key = field(2);
      row.origin = parse_origin(field(3));
      row.review_flag = parse_review_flag(field(4));
      if (pos[5] >= 0 && !field(5).empty()) row.score = parse_real(field(5));
      if (pos[6] >= 0 && !field(6).empty()) row.split = parse_split(field(6));
      m.rows.push_back(std::move(row));
    } catch (const ManifestError& e) {
      throw ManifestError("line " + std::to_string(line_no) + ": " + e.what());
    }
  }
  validate(m);
  return m;
}

void write_manifest(const Manifest& m, std::ostream& out) {
  validate(m);
  std::vector<const ManifestRow*> order;
  order.reserve(m.rows.size());
  for (const auto& r : m.rows) order.push_back(&r);
  std::sort(order.begin(), order.end(),
            [](const ManifestRow* a, const ManifestRow* b) { return a->video_id < b->video_id; });

  for (std::size_t c = 0; c < std::size(kManifestColumns); ++c) {
    out << (c ? "\t" : "") << kManifestColumns[c];
  }
  out << '\n';
  for (const auto* r : order) {
    check_field(r->video_id, "video_id");
    check_field(r->class_label, "class_label");
    check_field(r->timestamp_key, "timestamp_key");
    out << r->video_id << '\t' << r->class_label << '\t' << r->timestamp_key << '\t'
        << to_string(r->origin) << '\t' << to_string(r->review_flag) << '\t'
        << (r->score ? format_real(*r->score) : "") << '\t'
        << (r->split ? to_string(*r->split) : "") << '\n';
  }
}

Manifest load_manifest(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ManifestError("cannot open manifest " + path.string());
  try {
    return parse_manifest(in);
  } catch (const ManifestError& e) {
    throw ManifestError(path.string() + ": " + e.what());
  }
}

void save_manifest(const Manifest& m, const std::filesystem::path& path) {
  std::ostringstream buf;
  write_manifest(m, buf);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw ManifestError("cannot open " + path.string() + " for writing");
  out << buf.str();
  if (!out) throw ManifestError("write failed for " + path.string());
}

}  // namespace ovo
