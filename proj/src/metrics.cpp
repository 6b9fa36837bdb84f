// SPDX-License-Identifier: Apache-2.0

#include "ovo/metrics.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <ostream>
#include <sstream>

namespace ovo {

using nlohmann::json;

double accuracy_percent(std::size_t correct, std::size_t total) {
  if (total == 0) throw Error("accuracy over zero videos");
  if (correct > total) throw Error("more correct predictions than videos");
  return static_cast<double>(100 * correct) / static_cast<double>(total);
}

std::optional<double> compute_pd(double acc_id, double acc_ood) {
  if (!(acc_id > 0)) return std::nullopt;
  return (acc_id - acc_ood) / acc_id;
}

double compute_h(double acc_id, double acc_ood) {
  if (h_degenerate(acc_id, acc_ood)) return 0.0;
  return 2.0 * acc_id * acc_ood / (acc_id + acc_ood);
}

bool h_degenerate(double acc_id, double acc_ood) { return !(acc_id + acc_ood > 0); }

double round2(double v) { return std::round(v * 100.0) / 100.0; }

std::string format2(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.2f", round2(v));
  return buf;
}

IsolationDiagnostic isolation_diagnostic(double acc_id, double acc_iso, double acc_ood) {
  return {acc_id >= acc_iso && acc_iso >= acc_ood, acc_id - acc_iso, acc_iso - acc_ood};
}

double SplitTally::macro_accuracy() const {
  if (per_class.empty()) throw Error("macro accuracy without per-class counts");
  double sum = 0;
  for (const auto& [_, ct] : per_class) sum += accuracy_percent(ct.first, ct.second);
  return sum / static_cast<double>(per_class.size());
}

bool SplitTally::class_balanced() const {
  if (per_class.empty()) return false;
  const auto n = per_class.begin()->second.second;
  for (const auto& [_, ct] : per_class) {
    if (ct.second != n) return false;
  }
  return true;
}

EvalReport make_report(std::string method, double acc_id, double acc_ood,
                       std::optional<double> acc_isolation) {
  EvalReport r;
  r.method = std::move(method);
  r.acc_id = acc_id;
  r.acc_ood = acc_ood;
  r.pd = compute_pd(acc_id, acc_ood);
  if (!r.pd) r.flags.push_back("pd_undefined_zero_id_accuracy");
  r.h = compute_h(acc_id, acc_ood);
  if (h_degenerate(acc_id, acc_ood)) r.flags.push_back("h_both_accuracies_zero");
  if (acc_isolation) {
    r.acc_isolation = acc_isolation;
    r.isolation = isolation_diagnostic(acc_id, *acc_isolation, acc_ood);
  }
  return r;
}

EvalReport make_report(std::string method, const SplitTally& id, const SplitTally& ood,
                       const SplitTally* isolation, json config_echo) {
  std::optional<double> iso;
  if (isolation) iso = isolation->accuracy();
  EvalReport r = make_report(std::move(method), id.accuracy(), ood.accuracy(), iso);
  r.config_echo = std::move(config_echo);

  auto check_macro = [&](const SplitTally& t, const char* split) -> std::optional<double> {
    if (t.per_class.empty()) return std::nullopt;
    const double macro = t.macro_accuracy();
    if (t.class_balanced() && std::abs(macro - t.accuracy()) > 1e-9) {
      throw Error(std::string("macro and micro accuracy disagree on balanced split ") + split);
    }
    if (!t.class_balanced()) r.flags.push_back(std::string(split) + "_not_class_balanced");
    return macro;
  };
  r.macro_id = check_macro(id, "id");
  r.macro_ood = check_macro(ood, "ood");
  for (const auto& [c, ct] : id.per_class) r.per_class[c].id_acc = accuracy_percent(ct.first, ct.second);
  for (const auto& [c, ct] : ood.per_class) r.per_class[c].ood_acc = accuracy_percent(ct.first, ct.second);
  return r;
}

namespace {

json opt(const std::optional<double>& v) { return v ? json(*v) : json(nullptr); }

std::optional<double> get_opt(const json& j, const char* key) {
  if (!j.contains(key) || j[key].is_null()) return std::nullopt;
  return j[key].get<double>();
}

}  // namespace

json to_json(const EvalReport& r) {
  json j;
  j["method"] = r.method;
  j["acc_id"] = r.acc_id;
  j["acc_ood"] = r.acc_ood;
  j["acc_isolation"] = opt(r.acc_isolation);
  j["pd"] = opt(r.pd);
  j["h"] = r.h;
  j["macro_id"] = opt(r.macro_id);
  j["macro_ood"] = opt(r.macro_ood);
  if (r.isolation) {
    j["isolation_diagnostic"] = {{"monotone", r.isolation->monotone},
                                 {"id_minus_isolation", r.isolation->id_minus_isolation},
                                 {"isolation_minus_ood", r.isolation->isolation_minus_ood}};
  } else {
    j["isolation_diagnostic"] = nullptr;
  }
  json per_class = json::object();
  for (const auto& [c, a] : r.per_class) per_class[c] = {{"id_acc", opt(a.id_acc)}, {"ood_acc", opt(a.ood_acc)}};
  j["per_class"] = per_class;
  j["flags"] = r.flags;
  j["config"] = r.config_echo;
  return j;
}

EvalReport report_from_json(const json& j) {
  EvalReport r;
  r.method = j.at("method").get<std::string>();
  r.acc_id = j.at("acc_id").get<double>();
  r.acc_ood = j.at("acc_ood").get<double>();
  r.acc_isolation = get_opt(j, "acc_isolation");
  r.pd = get_opt(j, "pd");
  r.h = j.at("h").get<double>();
  r.macro_id = get_opt(j, "macro_id");
  r.macro_ood = get_opt(j, "macro_ood");
  if (j.contains("isolation_diagnostic") && !j["isolation_diagnostic"].is_null()) {
    const auto& d = j["isolation_diagnostic"];
    r.isolation = IsolationDiagnostic{d.at("monotone").get<bool>(), d.at("id_minus_isolation").get<double>(),
                                      d.at("isolation_minus_ood").get<double>()};
  }
  for (const auto& [c, a] : j.at("per_class").items()) {
    r.per_class[c] = {get_opt(a, "id_acc"), get_opt(a, "ood_acc")};
  }
  r.flags = j.at("flags").get<std::vector<std::string>>();
  r.config_echo = j.value("config", json::object());
  return r;
}

void write_report_table(const std::vector<EvalReport>& reports, std::ostream& out) {
  out << "method\tacc_id\tacc_ood\tpd\th\tacc_isolation\tmonotone\n";
  for (const auto& r : reports) {
    out << r.method << '\t' << format2(r.acc_id) << '\t' << format2(r.acc_ood) << '\t'
        << (r.pd ? format2(*r.pd) : "undefined") << '\t' << format2(r.h) << '\t'
        << (r.acc_isolation ? format2(*r.acc_isolation) : "-") << '\t'
        << (r.isolation ? (r.isolation->monotone ? "yes" : "no") : "-") << '\n';
  }
}

void emit_report(const std::vector<EvalReport>& reports, const std::filesystem::path& path) {
  json arr = json::array();
  for (const auto& r : reports) arr.push_back(to_json(r));
  {
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw Error("cannot open " + path.string() + " for writing");
    out << arr.dump(2) << '\n';
    if (!out) throw Error("write failed for " + path.string());
  }
  std::ofstream table(path.string() + ".tsv", std::ios::trunc);
  if (!table) throw Error("cannot open " + path.string() + ".tsv for writing");
  write_report_table(reports, table);
}

std::vector<EvalReport> read_report(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open report " + path.string());
  try {
    const auto arr = json::parse(in);
    std::vector<EvalReport> out;
    for (const auto& j : arr) out.push_back(report_from_json(j));
    return out;
  } catch (const json::exception& e) {
    throw Error(path.string() + ": " + e.what());
  }
}

}  // namespace ovo
