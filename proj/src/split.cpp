// SPDX-License-Identifier: Apache-2.0

#include "ovo/split.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <ostream>
#include <random>
#include <set>
#include <sstream>

#include <json.hpp>

#include "ovo/rng.hpp"

namespace ovo {
namespace {

constexpr std::string_view kReviewRejected = "review_rejected";
constexpr std::string_view kNoScore = "no_score";
constexpr std::string_view kTopupBelow = "topup_below_threshold";
constexpr std::string_view kOodSurplus = "ood_surplus";

// Moves `count` uniformly chosen members to the front (partial Fisher-Yates).
void draw_front(std::vector<const ManifestRow*>& members, std::size_t count, std::mt19937_64& rng) {
  for (std::size_t i = 0; i < count; ++i) {
    const std::size_t j = i + draw_index(rng, members.size() - i);
    std::swap(members[i], members[j]);
  }
}

}  // namespace

void validate(const SplitConfig& c) {
  const bool finite = std::isfinite(c.train_id_lo) && std::isfinite(c.train_id_hi) &&
                      std::isfinite(c.isolation_lo) && std::isfinite(c.isolation_hi) &&
                      std::isfinite(c.ood_threshold);
  if (!finite || !(c.train_id_lo < c.train_id_hi) || !(c.train_id_hi <= c.isolation_lo) ||
      !(c.isolation_lo <= c.isolation_hi) || !(c.isolation_hi <= c.ood_threshold)) {
    throw SplitError("split ranges must be finite, ordered and non-overlapping");
  }
  if (c.per_class_test_count < 1) throw SplitError("per_class_test_count must be >= 1");
}

SplitConfig load_split_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw SplitError("cannot open split config " + path.string());
  SplitConfig c;
  try {
    const auto j = nlohmann::json::parse(in);
    static const std::set<std::string> known = {"train_id_lo",  "train_id_hi",
                                                "isolation_lo", "isolation_hi",
                                                "ood_threshold", "per_class_test_count",
                                                "seed"};
    for (const auto& [key, _] : j.items()) {
      if (!known.contains(key)) throw SplitError("unknown split config key '" + key + "'");
    }
    c.train_id_lo = j.value("train_id_lo", c.train_id_lo);
    c.train_id_hi = j.value("train_id_hi", c.train_id_hi);
    c.isolation_lo = j.value("isolation_lo", c.isolation_lo);
    c.isolation_hi = j.value("isolation_hi", c.isolation_hi);
    c.ood_threshold = j.value("ood_threshold", c.ood_threshold);
    c.per_class_test_count = j.value("per_class_test_count", c.per_class_test_count);
    c.seed = j.value("seed", c.seed);
  } catch (const nlohmann::json::exception& e) {
    throw SplitError(path.string() + ": " + e.what());
  }
  validate(c);
  return c;
}

std::string_view to_string(Regime r) {
  switch (r) {
    case Regime::kLowPool: return "low_pool";
    case Regime::kIsolation: return "isolation";
    case Regime::kOodPool: return "ood_pool";
    case Regime::kExcluded: return "excluded";
  }
  return "excluded";
}

RegimeDecision assign_regime(double s, const SplitConfig& cfg) {
  if (!std::isfinite(s)) return {Regime::kExcluded, "invalid_score"};
  if (s < 0) return {Regime::kExcluded, "negative_score"};
  if (s >= cfg.train_id_lo && s < cfg.train_id_hi) return {Regime::kLowPool, {}};
  if (s >= cfg.isolation_lo && s <= cfg.isolation_hi) return {Regime::kIsolation, {}};
  if (s > cfg.ood_threshold) return {Regime::kOodPool, {}};
  return {Regime::kExcluded, "outside_ranges"};
}

SplitResult build_splits(const Manifest& manifest, const SplitConfig& cfg) {
  validate(cfg);
  validate(manifest);

  std::map<std::string, SplitAssignment> out;  // keyed (and ordered) by id
  std::map<std::string, std::vector<const ManifestRow*>> low_pool, ood_pool;
  std::set<std::string> classes;

  for (const auto& row : manifest.rows) {
    auto exclude = [&](std::string_view reason) {
      out[row.video_id] = {row.video_id, Split::kExcluded, std::string(reason)};
    };
    if (row.review_flag == ReviewFlag::kRejected) {
      exclude(kReviewRejected);
      continue;
    }
    if (!row.score) {
      exclude(kNoScore);
      continue;
    }
    const auto decision = assign_regime(*row.score, cfg);
    if (row.origin == Origin::kTopup) {
      if (decision.regime != Regime::kOodPool) {
        exclude(decision.regime == Regime::kExcluded ? decision.reason : std::string(kTopupBelow));
        continue;
      }
      classes.insert(row.class_label);
      ood_pool[row.class_label].push_back(&row);
      continue;
    }
    switch (decision.regime) {
      case Regime::kExcluded:
        exclude(decision.reason);
        continue;
      case Regime::kLowPool:
        low_pool[row.class_label].push_back(&row);
        break;
      case Regime::kIsolation:
        out[row.video_id] = {row.video_id, Split::kIsolation, "isolation_band"};
        break;
      case Regime::kOodPool:
        ood_pool[row.class_label].push_back(&row);
        break;
    }
    classes.insert(row.class_label);
  }

  const std::size_t need = cfg.per_class_test_count;
  std::vector<std::string> shortfalls;
  for (const auto& c : classes) {
    const auto low = low_pool.contains(c) ? low_pool[c].size() : 0;
    const auto ood = ood_pool.contains(c) ? ood_pool[c].size() : 0;
    if (low < need) {
      shortfalls.push_back("class '" + c + "': low pool has " + std::to_string(low) + ", short by " +
                           std::to_string(need - low));
    }
    if (ood < need) {
      shortfalls.push_back("class '" + c + "': OOD pool has " + std::to_string(ood) + ", short by " +
                           std::to_string(need - ood));
    }
  }
  if (!shortfalls.empty()) {
    std::string msg = "cannot fill per-class test sets of " + std::to_string(need) + ":";
    for (const auto& s : shortfalls) msg += "\n  " + s;
    throw SplitError(msg);
  }

  auto by_id = [](const ManifestRow* a, const ManifestRow* b) { return a->video_id < b->video_id; };
  std::mt19937_64 rng(cfg.seed);
  for (const auto& c : classes) {
    auto& members = low_pool[c];
    std::sort(members.begin(), members.end(), by_id);
    draw_front(members, need, rng);
    for (std::size_t i = 0; i < members.size(); ++i) {
      const auto& id = members[i]->video_id;
      out[id] = i < need ? SplitAssignment{id, Split::kIdTest, "low_pool_draw"}
                         : SplitAssignment{id, Split::kTrain, "low_pool_remainder"};
    }
  }
  for (const auto& c : classes) {
    auto& members = ood_pool[c];
    std::sort(members.begin(), members.end(), by_id);
    draw_front(members, need, rng);
    for (std::size_t i = 0; i < members.size(); ++i) {
      const auto& id = members[i]->video_id;
      out[id] = i < need ? SplitAssignment{id, Split::kOodTest, "ood_pool_draw"}
                         : SplitAssignment{id, Split::kExcluded, std::string(kOodSurplus)};
    }
  }

  SplitResult result;
  result.manifest = manifest;
  result.assignments.reserve(out.size());
  for (auto& [id, a] : out) result.assignments.push_back(a);

  auto& s = result.summary;
  for (auto& row : result.manifest.rows) {
    const auto& a = out.at(row.video_id);
    row.split = a.split;
    auto& cc = s.per_class[row.class_label];
    switch (a.split) {
      case Split::kTrain: ++s.train; ++cc.train; break;
      case Split::kIdTest: ++s.id_test; ++cc.id_test; break;
      case Split::kIsolation: ++s.isolation; ++cc.isolation; break;
      case Split::kOodTest: ++s.ood_test; ++cc.ood_test; break;
      case Split::kExcluded:
        ++s.excluded;
        ++cc.excluded;
        ++s.excluded_by_reason[a.reason];
        break;
    }
  }
  s.parity = std::all_of(classes.begin(), classes.end(), [&](const std::string& c) {
    const auto& cc = s.per_class[c];
    return cc.id_test == need && cc.ood_test == need;
  });
  validate(result.manifest);
  return result;
}

MergeResult merge_topup(const Manifest& base, const Manifest& topup, const SplitConfig& cfg) {
  validate(cfg);
  MergeResult r;
  r.manifest = base;
  std::set<std::string_view> ids;
  for (const auto& row : base.rows) ids.insert(row.video_id);
  for (const auto& row : topup.rows) {
    if (row.origin != Origin::kTopup) {
      throw SplitError("top-up row '" + row.video_id + "' is not flagged origin=topup");
    }
    if (!row.score) throw SplitError("top-up row '" + row.video_id + "' has no score");
    if (ids.contains(row.video_id)) {
      throw SplitError("top-up video_id '" + row.video_id + "' collides with the base manifest");
    }
    ManifestRow copy = row;
    if (!(*row.score > cfg.ood_threshold)) {
      copy.split = Split::kExcluded;
      r.warnings.push_back("top-up video '" + row.video_id + "' scores " +
                           format_real(*row.score) + " <= " + format_real(cfg.ood_threshold) +
                           ", excluded (" + std::string(kTopupBelow) + ")");
    }
    r.manifest.rows.push_back(std::move(copy));
  }
  validate(r.manifest);
  return r;
}

void write_assignments(const std::vector<SplitAssignment>& assignments, std::ostream& out) {
  out << "video_id\tsplit\treason\n";
  for (const auto& a : assignments) out << a.video_id << '\t' << to_string(a.split) << '\t' << a.reason << '\n';
}

void write_split_summary(const SplitSummary& s, const SplitConfig& cfg, std::ostream& out) {
  out << "split\trange_deg\tvideos\tclasses\n";
  auto classes_with = [&](auto member) {
    return std::count_if(s.per_class.begin(), s.per_class.end(),
                         [&](const auto& kv) { return kv.second.*member > 0; });
  };
  const auto lo = format_real(cfg.train_id_lo), hi = format_real(cfg.train_id_hi);
  out << "train\t[" << lo << "," << hi << ")\t" << s.train << '\t' << classes_with(&ClassCounts::train) << '\n';
  out << "id_test\t[" << lo << "," << hi << ")\t" << s.id_test << '\t' << classes_with(&ClassCounts::id_test) << '\n';
  out << "isolation\t[" << format_real(cfg.isolation_lo) << "," << format_real(cfg.isolation_hi) << "]\t"
      << s.isolation << '\t' << classes_with(&ClassCounts::isolation) << '\n';
  out << "ood_test\t>" << format_real(cfg.ood_threshold) << '\t' << s.ood_test << '\t'
      << classes_with(&ClassCounts::ood_test) << '\n';
  out << "total\t-\t" << (s.train + s.id_test + s.isolation + s.ood_test) << '\t' << s.per_class.size() << '\n';
  out << "excluded\t-\t" << s.excluded << "\t-\n";
  for (const auto& [reason, n] : s.excluded_by_reason) out << "# excluded." << reason << '\t' << n << '\n';
  out << "# per_class_test_count\t" << cfg.per_class_test_count << '\n';
  out << "# seed\t" << cfg.seed << '\n';
  out << "# id_ood_parity\t" << (s.parity ? "ok" : "violated") << '\n';
}

void write_class_table(const SplitSummary& s, std::ostream& out) {
  out << "class_label\ttrain\tid_test\tisolation\tood_test\texcluded\n";
  for (const auto& [c, cc] : s.per_class) {
    out << c << '\t' << cc.train << '\t' << cc.id_test << '\t' << cc.isolation << '\t'
        << cc.ood_test << '\t' << cc.excluded << '\n';
  }
}

}  // namespace ovo
