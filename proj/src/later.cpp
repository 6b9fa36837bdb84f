// SPDX-License-Identifier: Apache-2.0

#include "ovo/later.hpp"

#include <algorithm>
#include <fstream>
#include <set>

#include <Eigen/SVD>

#include "ovo/tensorio.hpp"

namespace ovo {

Eigen::VectorXd ProjectorAnchor::remove_subspace(const Eigen::VectorXd& v) const {
  if (basis.cols() == 0) return v;
  return v - basis * (basis.transpose() * v);
}

ProjectorAnchor build_anchor(const LoraBank& bank, double sv_threshold_rel) {
  const Eigen::Index d = bank.feature_dim;
  if (d < 1) throw Error("anchor feature dimension must be >= 1");
  if (!(sv_threshold_rel >= 0)) throw Error("singular value threshold must be >= 0");

  ProjectorAnchor anchor;
  anchor.sv_threshold_rel = sv_threshold_rel;

  Eigen::Index rows = 0;
  for (const auto& m : bank.matrices) {
    if (m.b.rows() == d && m.b.cols() > 0) {
      rows += m.b.cols();
      anchor.layers_used.push_back(m.layer_name);
    } else {
      anchor.layers_skipped.push_back(m.layer_name);
    }
  }

  Eigen::Index k = 0;
  Eigen::MatrixXd v;
  if (rows > 0) {
    // M = [B_1ᵀ; ...; B_Lᵀ], (Σ r_l) × d
    Eigen::MatrixXd stacked(rows, d);
    Eigen::Index at = 0;
    for (const auto& m : bank.matrices) {
      if (m.b.rows() != d || m.b.cols() == 0) continue;
      stacked.middleRows(at, m.b.cols()) = m.b.transpose();
      at += m.b.cols();
    }
    if (!stacked.allFinite()) throw Error("adapter matrices contain non-finite values");
    Eigen::BDCSVD<Eigen::MatrixXd> svd(stacked, Eigen::ComputeThinV);
    anchor.singular_values = svd.singularValues();
    const double largest = anchor.singular_values.size() ? anchor.singular_values(0) : 0.0;
    if (largest > 0) {
      const double cutoff = sv_threshold_rel * largest;
      while (k < anchor.singular_values.size() && anchor.singular_values(k) > cutoff) ++k;
    }
    v = svd.matrixV();
  }

  anchor.basis = k > 0 ? Eigen::MatrixXd(v.leftCols(k)) : Eigen::MatrixXd(d, 0);
  anchor.complement = Eigen::MatrixXd::Identity(d, d);
  if (k > 0) anchor.complement.noalias() -= anchor.basis * anchor.basis.transpose();
  return anchor;
}

Eigen::VectorXd source_center(const Eigen::MatrixXd& features) {
  if (features.rows() < 1) throw Error("source center needs at least one feature");
  return features.colwise().sum().transpose() / static_cast<double>(features.rows());
}

CenterState::CenterState(Eigen::VectorXd source_center, double alpha,
                         std::optional<std::size_t> capacity)
    : mu_s_(std::move(source_center)),
      sum_(Eigen::VectorXd::Zero(mu_s_.size())),
      alpha_(alpha),
      capacity_(capacity) {
  if (capacity_ && *capacity_ == 0) throw Error("queue capacity must be >= 1");
}

void CenterState::observe(const Eigen::VectorXd& h) {
  if (h.size() != mu_s_.size()) {
    throw Error("queue feature has dimension " + std::to_string(h.size()) + ", expected " +
                std::to_string(mu_s_.size()));
  }
  if (!capacity_) {
    sum_ += h;
    ++count_;
    return;
  }
  window_.push_back(h);
  if (window_.size() > *capacity_) {
    window_.pop_front();
    // Re-sum instead of subtracting so the sum matches the window exactly.
    sum_.setZero();
    for (const auto& w : window_) sum_ += w;
  } else {
    sum_ += h;
  }
  count_ = window_.size();
}

Eigen::VectorXd CenterState::target_center() const {
  if (count_ == 0) throw Error("target queue is empty");
  return sum_ / static_cast<double>(count_);
}

CenterState observe_target(CenterState state, const Eigen::VectorXd& h) {
  state.observe(h);
  return state;
}

std::string_view to_string(CorrectionMode m) {
  switch (m) {
    case CorrectionMode::kLater: return "later";
    case CorrectionMode::kGlobal: return "global";
    case CorrectionMode::kNone: return "none";
  }
  return "none";
}

CorrectionMode parse_correction_mode(std::string_view s) {
  if (s == "later") return CorrectionMode::kLater;
  if (s == "global") return CorrectionMode::kGlobal;
  if (s == "none") return CorrectionMode::kNone;
  throw Error("unknown correction mode '" + std::string(s) + "'");
}

Eigen::VectorXd correction(const CenterState& state, const ProjectorAnchor& anchor) {
  if (anchor.dim() != state.source_center().size()) {
    throw Error("anchor dimension does not match the feature dimension");
  }
  const Eigen::VectorXd shift = state.target_center() - state.source_center();
  return state.alpha() * anchor.remove_subspace(shift);
}

Eigen::VectorXd global_correction(const CenterState& state) {
  const Eigen::VectorXd shift = state.target_center() - state.source_center();
  return state.alpha() * shift;
}

std::optional<std::size_t> ClassifierHead::class_index(std::string_view name) const {
  auto it = std::find(class_names.begin(), class_names.end(), name);
  if (it == class_names.end()) return std::nullopt;
  return static_cast<std::size_t>(it - class_names.begin());
}

void validate(const ClassifierHead& head) {
  if (head.weight.rows() < 1 || head.weight.cols() < 1) throw Error("classifier weight is empty");
  if (head.bias.size() != head.weight.rows()) throw Error("classifier bias size mismatch");
  if (static_cast<Eigen::Index>(head.class_names.size()) != head.weight.rows()) {
    throw Error("classifier has " + std::to_string(head.weight.rows()) + " rows but " +
                std::to_string(head.class_names.size()) + " class names");
  }
  std::set<std::string_view> seen;
  for (const auto& n : head.class_names) {
    if (!seen.insert(n).second) throw Error("duplicate class name '" + n + "'");
  }
}

std::size_t argmax(const Eigen::VectorXd& v) {
  if (v.size() == 0) throw Error("argmax of an empty vector");
  Eigen::Index best = 0;
  for (Eigen::Index i = 1; i < v.size(); ++i) {
    if (v(i) > v(best)) best = i;
  }
  return static_cast<std::size_t>(best);
}

Classification classify_video(const Eigen::MatrixXd& views, const Eigen::VectorXd& delta,
                              const ClassifierHead& head) {
  if (views.rows() < 1) throw Error("video has no views");
  if (views.cols() != head.feature_dim() || delta.size() != head.feature_dim()) {
    throw Error("view features have dimension " + std::to_string(views.cols()) +
                ", classifier expects " + std::to_string(head.feature_dim()));
  }
  Classification out;
  out.logits = Eigen::VectorXd::Zero(head.num_classes());
  for (Eigen::Index v = 0; v < views.rows(); ++v) {
    const Eigen::VectorXd corrected = views.row(v).transpose() - delta;
    out.logits += head.weight * corrected + head.bias;
  }
  out.logits /= static_cast<double>(views.rows());
  out.predicted = argmax(out.logits);
  return out;
}

StreamEvaluator::StreamEvaluator(Eigen::VectorXd source_center, const ProjectorAnchor& anchor,
                                 const ClassifierHead& head, StreamConfig cfg)
    : anchor_(anchor),
      head_(head),
      cfg_(cfg),
      state_(std::move(source_center), cfg.alpha, cfg.queue_capacity) {
  validate(head_);
  if (state_.source_center().size() != head_.feature_dim()) {
    throw Error("source center dimension does not match the classifier");
  }
}

VideoPrediction StreamEvaluator::step(const StreamVideo& video) {
  if (video.views.rows() < 1) throw Error("video '" + video.video_id + "' has no views");
  Eigen::VectorXd delta = Eigen::VectorXd::Zero(head_.feature_dim());
  if (cfg_.mode != CorrectionMode::kNone) {
    // The current video's queue feature joins Q before its own correction.
    state_.observe(video.views.row(0).transpose());
    delta = cfg_.mode == CorrectionMode::kLater ? correction(state_, anchor_)
                                                : global_correction(state_);
  }
  const auto c = classify_video(video.views, delta, head_);
  return {video.video_id, c.predicted, video.label, delta.norm()};
}

StreamResult evaluate_stream(std::span<const StreamVideo> videos,
                             const Eigen::VectorXd& source_center, const ProjectorAnchor& anchor,
                             const ClassifierHead& head, const StreamConfig& cfg) {
  StreamEvaluator eval(source_center, anchor, head, cfg);
  StreamResult out;
  out.predictions.reserve(videos.size());
  for (const auto& v : videos) {
    auto p = eval.step(v);
    if (p.label) {
      ++out.labeled;
      if (*p.label == p.predicted) ++out.correct;
    }
    out.predictions.push_back(std::move(p));
  }
  return out;
}

LoraBank load_lora_bank(const std::filesystem::path& dir, Eigen::Index feature_dim) {
  LoraBank bank;
  bank.feature_dim = feature_dim;
  if (!std::filesystem::is_directory(dir)) throw Error("no adapter directory " + dir.string());
  std::vector<std::filesystem::path> files;
  for (const auto& e : std::filesystem::directory_iterator(dir)) {
    const auto name = e.path().filename().string();
    if (e.is_regular_file() && name.starts_with("lora_B_") && name.ends_with(".ovot")) {
      files.push_back(e.path());
    }
  }
  std::sort(files.begin(), files.end());
  for (const auto& f : files) {
    const auto stem = f.stem().string();
    bank.matrices.push_back({stem.substr(std::string_view("lora_B_").size()), to_matrix(read_tensor(f))});
  }
  return bank;
}

ClassifierHead load_head(const std::filesystem::path& dir) {
  ClassifierHead head;
  head.weight = to_matrix(read_tensor(dir / "classifier_W.ovot"));
  head.bias = to_vector(read_tensor(dir / "classifier_b.ovot"));
  std::ifstream in(dir / "classes.txt");
  if (!in) throw Error("cannot open " + (dir / "classes.txt").string());
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (!line.empty()) head.class_names.push_back(line);
  }
  validate(head);
  return head;
}

}  // namespace ovo
