// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <filesystem>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "ovo/error.hpp"

namespace ovo {

/// 100·correct/total. The ratio is formed from the integer counts directly.
double accuracy_percent(std::size_t correct, std::size_t total);

/// Relative drop (id − ood)/id as a ratio; nullopt when acc_id is not positive.
std::optional<double> compute_pd(double acc_id, double acc_ood);

/// Harmonic mean 2·id·ood/(id + ood). Both zero gives 0 (see h_degenerate).
double compute_h(double acc_id, double acc_ood);
bool h_degenerate(double acc_id, double acc_ood);

/// Half-away-from-zero rounding to two decimals, for presentation only.
double round2(double v);
std::string format2(double v);

struct IsolationDiagnostic {
  bool monotone = false;  // id >= isolation >= ood
  double id_minus_isolation = 0;
  double isolation_minus_ood = 0;
};

IsolationDiagnostic isolation_diagnostic(double acc_id, double acc_iso, double acc_ood);

/// Correct/total counts for one evaluated split.
struct SplitTally {
  std::size_t correct = 0;
  std::size_t total = 0;
  std::map<std::string, std::pair<std::size_t, std::size_t>> per_class;  // class -> {correct, total}

  double accuracy() const { return accuracy_percent(correct, total); }
  /// Mean of per-class accuracies.
  double macro_accuracy() const;
  /// True when every class contributes the same number of videos.
  bool class_balanced() const;
};

struct ClassAccuracy {
  std::optional<double> id_acc;
  std::optional<double> ood_acc;
};

struct EvalReport {
  std::string method;
  double acc_id = 0;
  double acc_ood = 0;
  std::optional<double> acc_isolation;
  std::optional<double> pd;
  double h = 0;
  std::optional<double> macro_id;
  std::optional<double> macro_ood;
  std::optional<IsolationDiagnostic> isolation;
  std::map<std::string, ClassAccuracy> per_class;
  std::vector<std::string> flags;
  nlohmann::json config_echo = nlohmann::json::object();
};

EvalReport make_report(std::string method, double acc_id, double acc_ood,
                       std::optional<double> acc_isolation = std::nullopt);

/// Builds a report from per-split tallies. Throws if a class-balanced split
/// reports different macro and micro accuracies.
EvalReport make_report(std::string method, const SplitTally& id, const SplitTally& ood,
                       const SplitTally* isolation = nullptr,
                       nlohmann::json config_echo = nlohmann::json::object());

nlohmann::json to_json(const EvalReport& r);
EvalReport report_from_json(const nlohmann::json& j);

/// One row per report: method, Acc_ID, Acc_OOD, PD, H, Acc_iso, monotone.
void write_report_table(const std::vector<EvalReport>& reports, std::ostream& out);

/// Writes `path` (JSON array of reports) and `path` + ".tsv" (the table).
void emit_report(const std::vector<EvalReport>& reports, const std::filesystem::path& path);
std::vector<EvalReport> read_report(const std::filesystem::path& path);

}  // namespace ovo
