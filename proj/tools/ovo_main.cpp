// SPDX-License-Identifier: Apache-2.0
//
// ovo: view scoring, split building, stream evaluation and reporting.

#include <CLI11.hpp>
#include <json.hpp>

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "ovo/later.hpp"
#include "ovo/manifest.hpp"
#include "ovo/metrics.hpp"
#include "ovo/poses.hpp"
#include "ovo/split.hpp"
#include "ovo/tensorio.hpp"
#include "ovo/viewgeom.hpp"
#include "ovo/viewscore.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

std::ofstream open_out(const fs::path& path) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw ovo::Error("cannot open " + path.string() + " for writing");
  return out;
}

// ---------------------------------------------------------------- score

struct ScoreArgs {
  fs::path manifest, geometry, out;
  std::string key_regex, key_format = "$&";
  std::uint64_t seed = 0;
  int stride = 8;
};

std::vector<ovo::FrameScore> score_frames(const fs::path& dir, const ovo::GeometryConfig& cfg, std::uint64_t seed) {
  std::vector<ovo::FrameScore> frames;
  for (const auto& pose : ovo::load_poses(dir / "poses.txt")) {
    if (!pose.valid) {
      ovo::FrameScore s;
      s.frame_index = pose.frame_index;
      s.invalid_reason = ovo::InvalidReason::kNonfiniteGeometry;
      frames.push_back(s);
      continue;
    }
    const auto depth_path = dir / ("depth_" + std::to_string(pose.frame_index) + ".ovot");
    frames.push_back(ovo::score_frame(ovo::depth_from_tensor(ovo::read_tensor(depth_path)), pose, cfg, seed));
  }
  return frames;
}

int run_score(const ScoreArgs& a) {
  auto manifest = ovo::load_manifest(a.manifest);
  ovo::GeometryConfig cfg;
  cfg.stride = a.stride;
  fs::create_directories(a.out / "frames");

  auto videos = open_out(a.out / "videos.tsv");
  videos << "video_id\tscore\tvalid_frames\tframes\n";
  std::size_t missing = 0;
  for (auto& row : manifest.rows) {
    const auto dir = a.geometry / row.video_id;
    if (!fs::is_directory(dir)) {
      ++missing;
      continue;
    }
    const auto v = ovo::score_video(row.video_id, score_frames(dir, cfg, a.seed));
    auto frames_out = open_out(a.out / "frames" / (row.video_id + ".jsonl"));
    ovo::write_frame_scores(v.frame_scores, frames_out);
    row.score = v.score_deg;
    videos << row.video_id << '\t' << (v.score_deg ? ovo::format_real(*v.score_deg) : "-") << '\t'
           << v.valid_frame_count << '\t' << v.frame_scores.size() << '\n';
  }

  const auto grouping = ovo::group_by_timestamp(manifest, {a.key_regex, a.key_format});
  ovo::save_manifest(ovo::apply_group_scores(manifest, grouping), a.out / "manifest.tsv");
  auto groups = open_out(a.out / "groups.tsv");
  ovo::write_group_report(grouping, groups);
  if (missing) std::cerr << "ovo score: " << missing << " video(s) without geometry kept their manifest score\n";
  if (!grouping.unmatched.empty()) {
    std::cerr << "ovo score: " << grouping.unmatched.size() << " video(s) did not match the key pattern\n";
  }
  return 0;
}

// ---------------------------------------------------------------- split

struct SplitArgs {
  fs::path manifest, topup, config, out;
  std::optional<std::uint64_t> seed;
};

int run_split(const SplitArgs& a) {
  auto cfg = a.config.empty() ? ovo::SplitConfig{} : ovo::load_split_config(a.config);
  if (a.seed) cfg.seed = *a.seed;
  ovo::validate(cfg);

  auto manifest = ovo::load_manifest(a.manifest);
  if (!a.topup.empty()) {
    auto merged = ovo::merge_topup(manifest, ovo::load_manifest(a.topup), cfg);
    for (const auto& w : merged.warnings) std::cerr << "ovo split: " << w << '\n';
    manifest = std::move(merged.manifest);
  }
  const auto result = ovo::build_splits(manifest, cfg);

  fs::create_directories(a.out);
  ovo::save_manifest(result.manifest, a.out / "manifest.tsv");
  auto assignments = open_out(a.out / "assignments.tsv");
  ovo::write_assignments(result.assignments, assignments);
  auto summary = open_out(a.out / "summary.txt");
  ovo::write_split_summary(result.summary, cfg, summary);
  auto classes = open_out(a.out / "classes.tsv");
  ovo::write_class_table(result.summary, classes);
  ovo::write_split_summary(result.summary, cfg, std::cout);
  return 0;
}

// ---------------------------------------------------------------- eval

struct EvalArgs {
  fs::path manifest, features, lora, head, out, source_center;
  std::string split, mode = "later", label;
  double alpha = 1.0;
  std::optional<std::size_t> queue_capacity;
};

Eigen::MatrixXd read_views(const fs::path& features, const std::string& id, Eigen::Index d) {
  const auto m = ovo::to_matrix(ovo::read_tensor(features / id / "features.ovot"));
  if (m.cols() != d) {
    throw ovo::Error("features of " + id + " have dimension " + std::to_string(m.cols()) + ", head expects " +
                     std::to_string(d));
  }
  return m;
}

int run_eval(const EvalArgs& a) {
  const auto split = ovo::parse_split(a.split);
  if (split == ovo::Split::kTrain || split == ovo::Split::kExcluded) {
    throw ovo::Error("--split must be id_test, ood_test or isolation");
  }
  const auto mode = ovo::parse_correction_mode(a.mode);
  auto manifest = ovo::load_manifest(a.manifest);
  std::sort(manifest.rows.begin(), manifest.rows.end(),
            [](const auto& x, const auto& y) { return x.video_id < y.video_id; });
  const auto head = ovo::load_head(a.head);
  const auto d = head.feature_dim();
  const auto anchor = ovo::build_anchor(ovo::load_lora_bank(a.lora, d));

  Eigen::VectorXd mu_s;
  if (!a.source_center.empty()) {
    mu_s = ovo::to_vector(ovo::read_tensor(a.source_center));
  } else {
    std::vector<Eigen::VectorXd> firsts;
    for (const auto& row : manifest.rows) {
      if (row.split == ovo::Split::kTrain) firsts.push_back(read_views(a.features, row.video_id, d).row(0).transpose());
    }
    if (firsts.empty()) throw ovo::Error("no training videos to estimate the source center; pass --source-center");
    Eigen::MatrixXd train(static_cast<Eigen::Index>(firsts.size()), d);
    for (std::size_t i = 0; i < firsts.size(); ++i) train.row(static_cast<Eigen::Index>(i)) = firsts[i].transpose();
    mu_s = ovo::source_center(train);
  }
  if (mu_s.size() != d) throw ovo::Error("source center dimension does not match the head");

  std::vector<ovo::StreamVideo> stream;
  std::vector<std::string> labels;
  for (const auto& row : manifest.rows) {
    if (row.split != split) continue;
    const auto label = head.class_index(row.class_label);
    if (!label) throw ovo::Error("class '" + row.class_label + "' of " + row.video_id + " is not in the head");
    stream.push_back({row.video_id, read_views(a.features, row.video_id, d), label});
    labels.push_back(row.class_label);
  }
  if (stream.empty()) throw ovo::Error("split " + a.split + " has no videos");

  const ovo::StreamConfig cfg{mode, a.alpha, a.queue_capacity};
  const auto result = ovo::evaluate_stream(stream, mu_s, anchor, head, cfg);

  std::map<std::string, std::pair<std::size_t, std::size_t>> per_class;
  json predictions = json::array();
  for (std::size_t i = 0; i < result.predictions.size(); ++i) {
    const auto& p = result.predictions[i];
    const bool ok = p.label && p.predicted == *p.label;
    auto& ct = per_class[labels[i]];
    ct.first += ok ? 1 : 0;
    ct.second += 1;
    predictions.push_back({{"video_id", p.video_id},
                           {"predicted", head.class_names[p.predicted]},
                           {"label", labels[i]},
                           {"correct", ok},
                           {"correction_norm", p.correction_norm}});
  }
  json pc = json::object();
  for (const auto& [c, ct] : per_class) pc[c] = {ct.first, ct.second};

  json out;
  out["method"] = a.label.empty() ? std::string(ovo::to_string(mode)) : a.label;
  out["split"] = a.split;
  out["config"] = {{"mode", ovo::to_string(mode)},
                   {"alpha", a.alpha},
                   {"queue_capacity", a.queue_capacity ? json(*a.queue_capacity) : json(nullptr)},
                   {"anchor_rank", anchor.rank()},
                   {"layers_used", anchor.layers_used},
                   {"layers_skipped", anchor.layers_skipped},
                   {"source_center", a.source_center.empty() ? "train_first_views" : a.source_center.string()}};
  out["correct"] = result.correct;
  out["total"] = result.labeled;
  out["per_class"] = pc;
  out["predictions"] = predictions;
  auto file = open_out(a.out);
  file << out.dump(2) << '\n';
  std::cout << out["method"].get<std::string>() << ' ' << a.split << ": " << result.correct << '/' << result.labeled
            << " = " << ovo::format2(ovo::accuracy_percent(result.correct, result.labeled)) << "%\n";
  return 0;
}

// ---------------------------------------------------------------- report

struct ReportArgs {
  std::vector<fs::path> inputs;
  fs::path out;
};

ovo::SplitTally tally_from(const json& j) {
  ovo::SplitTally t;
  t.correct = j.at("correct").get<std::size_t>();
  t.total = j.at("total").get<std::size_t>();
  for (const auto& [c, ct] : j.at("per_class").items()) t.per_class[c] = {ct.at(0).get<std::size_t>(), ct.at(1).get<std::size_t>()};
  return t;
}

int run_report(const ReportArgs& a) {
  std::vector<std::string> order;
  std::map<std::string, std::map<std::string, json>> by_method;
  for (const auto& path : a.inputs) {
    std::ifstream in(path);
    if (!in) throw ovo::Error("cannot open " + path.string());
    json j;
    try {
      j = json::parse(in);
    } catch (const json::exception& e) {
      throw ovo::Error(path.string() + ": " + e.what());
    }
    const auto method = j.at("method").get<std::string>();
    const auto split = j.at("split").get<std::string>();
    if (!by_method.count(method)) order.push_back(method);
    if (!by_method[method].emplace(split, j).second) {
      throw ovo::Error("two " + split + " evaluations for method " + method);
    }
  }

  std::vector<ovo::EvalReport> reports;
  for (const auto& method : order) {
    const auto& splits = by_method[method];
    if (!splits.count("id_test") || !splits.count("ood_test")) {
      throw ovo::Error("method " + method + " needs both id_test and ood_test evaluations");
    }
    json echo = json::object();
    for (const auto& [s, j] : splits) echo[s] = j.value("config", json::object());
    std::optional<ovo::SplitTally> iso;
    if (splits.count("isolation")) iso = tally_from(splits.at("isolation"));
    reports.push_back(ovo::make_report(method, tally_from(splits.at("id_test")), tally_from(splits.at("ood_test")),
                                       iso ? &*iso : nullptr, echo));
  }
  ovo::emit_report(reports, a.out);
  ovo::write_report_table(reports, std::cout);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Viewpoint-shift benchmark tooling"};
  app.require_subcommand(1);

  ScoreArgs sa;
  auto* score = app.add_subcommand("score", "Score videos from depth and poses, group by timestamp");
  score->add_option("--manifest", sa.manifest, "Input manifest (TSV)")->required();
  score->add_option("--geometry", sa.geometry, "Directory of <video_id>/poses.txt and depth_<frame>.ovot")->required();
  score->add_option("--out", sa.out, "Output directory")->required();
  score->add_option("--key-regex", sa.key_regex, "Regex over video_id that yields the timestamp key");
  score->add_option("--key-format", sa.key_format, "Key built from the regex match ($1, $2, ...)")->capture_default_str();
  score->add_option("--seed", sa.seed, "RANSAC seed")->capture_default_str();
  score->add_option("--stride", sa.stride, "Pixel stride of the back-projection grid")->capture_default_str()->check(CLI::PositiveNumber);

  SplitArgs pa;
  std::uint64_t split_seed = 0;
  auto* split = app.add_subcommand("split", "Build train/id_test/isolation/ood_test splits");
  split->add_option("--manifest", pa.manifest, "Scored manifest (TSV)")->required();
  split->add_option("--topup", pa.topup, "Top-up manifest merged into the OOD pool");
  split->add_option("--config", pa.config, "Split configuration (JSON)");
  auto* seed_opt = split->add_option("--seed", split_seed, "Overrides the configured seed");
  split->add_option("--out", pa.out, "Output directory")->required();

  EvalArgs ea;
  std::size_t capacity = 0;
  auto* eval = app.add_subcommand("eval", "Evaluate one split as an online stream");
  eval->add_option("--manifest", ea.manifest, "Split manifest (TSV)")->required();
  eval->add_option("--split", ea.split, "id_test, ood_test or isolation")->required();
  eval->add_option("--features", ea.features, "Directory of <video_id>/features.ovot")->required();
  eval->add_option("--lora", ea.lora, "Directory of lora_B_<layer>.ovot")->required();
  eval->add_option("--head", ea.head, "Directory of classifier_W.ovot, classifier_b.ovot, classes.txt")->required();
  eval->add_option("--alpha", ea.alpha, "Re-centering strength")->capture_default_str();
  eval->add_option("--mode", ea.mode, "later, global or none")->capture_default_str();
  auto* cap_opt = eval->add_option("--queue-capacity", capacity, "Sliding-window size (default: unbounded)")
                      ->check(CLI::PositiveNumber);
  eval->add_option("--source-center", ea.source_center, "Source center tensor; default: mean train first view");
  eval->add_option("--label", ea.label, "Method name in reports (default: the mode)");
  eval->add_option("--out", ea.out, "Evaluation output (JSON)")->required();

  ReportArgs ra;
  auto* report = app.add_subcommand("report", "Combine evaluations into a robustness report");
  report->add_option("--in", ra.inputs, "Evaluation outputs")->required()->expected(1, -1);
  report->add_option("--out", ra.out, "Report path; a .tsv table is written next to it")->required();

  CLI11_PARSE(app, argc, argv);

  try {
    if (*score) return run_score(sa);
    if (*split) {
      if (*seed_opt) pa.seed = split_seed;
      return run_split(pa);
    }
    if (*eval) {
      if (*cap_opt) ea.queue_capacity = capacity;
      return run_eval(ea);
    }
    if (*report) return run_report(ra);
  } catch (const std::exception& e) {
    std::cerr << "ovo: error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
