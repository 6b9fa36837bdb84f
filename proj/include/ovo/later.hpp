// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <deque>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Core>

#include "ovo/error.hpp"

namespace ovo {

/// Output-side factor B (d_out × r) of one low-rank adapter W' = W + (γ/r)·B·A.
struct LoraMatrix {
  std::string layer_name;
  Eigen::MatrixXd b;
};

struct LoraBank {
  std::vector<LoraMatrix> matrices;
  Eigen::Index feature_dim = 0;
};

/// Orthonormal basis U of the adapter output subspace and its complement
/// projector P⊥ = I − U·Uᵀ.
struct ProjectorAnchor {
  Eigen::MatrixXd basis;       // d × k
  Eigen::MatrixXd complement;  // d × d
  Eigen::VectorXd singular_values;
  double sv_threshold_rel = 1e-4;
  std::vector<std::string> layers_used;
  std::vector<std::string> layers_skipped;

  Eigen::Index dim() const { return complement.rows(); }
  Eigen::Index rank() const { return basis.cols(); }

  /// v − U(Uᵀv); returns v unchanged when k = 0.
  Eigen::VectorXd remove_subspace(const Eigen::VectorXd& v) const;
};

inline constexpr double kDefaultSvThresholdRel = 1e-4;

/// Stacks Bᵀ of every adapter whose output dimension equals the feature
/// dimension and keeps the right singular vectors whose singular value
/// exceeds `sv_threshold_rel` times the largest. An empty (or all-zero)
/// bank yields k = 0 and P⊥ = I.
ProjectorAnchor build_anchor(const LoraBank& bank, double sv_threshold_rel = kDefaultSvThresholdRel);

/// Column-wise mean of an N×d feature matrix.
Eigen::VectorXd source_center(const Eigen::MatrixXd& features);

/// Source center plus the online target queue. Without a capacity the queue is
/// the cumulative set of observed features; with one it is a sliding window.
class CenterState {
 public:
  explicit CenterState(Eigen::VectorXd source_center, double alpha = 1.0,
                       std::optional<std::size_t> capacity = std::nullopt);

  void observe(const Eigen::VectorXd& h);

  const Eigen::VectorXd& source_center() const { return mu_s_; }
  /// Throws if nothing has been observed yet.
  Eigen::VectorXd target_center() const;
  const Eigen::VectorXd& queue_sum() const { return sum_; }
  std::size_t queue_count() const { return count_; }
  double alpha() const { return alpha_; }
  std::optional<std::size_t> capacity() const { return capacity_; }

 private:
  Eigen::VectorXd mu_s_;
  Eigen::VectorXd sum_;
  std::deque<Eigen::VectorXd> window_;
  std::size_t count_ = 0;
  double alpha_;
  std::optional<std::size_t> capacity_;
};

CenterState observe_target(CenterState state, const Eigen::VectorXd& h);

enum class CorrectionMode { kLater, kGlobal, kNone };
std::string_view to_string(CorrectionMode m);
CorrectionMode parse_correction_mode(std::string_view s);

/// Δ = α·P⊥(μ_t − μ_s).
Eigen::VectorXd correction(const CenterState& state, const ProjectorAnchor& anchor);
/// Δ = α·(μ_t − μ_s), the unprojected shift.
Eigen::VectorXd global_correction(const CenterState& state);

struct ClassifierHead {
  Eigen::MatrixXd weight;  // C × d
  Eigen::VectorXd bias;    // C
  std::vector<std::string> class_names;

  Eigen::Index num_classes() const { return weight.rows(); }
  Eigen::Index feature_dim() const { return weight.cols(); }
  std::optional<std::size_t> class_index(std::string_view name) const;
};

void validate(const ClassifierHead& head);

struct Classification {
  Eigen::VectorXd logits;
  std::size_t predicted = 0;
};

/// Index of the largest entry; ties go to the smallest index.
std::size_t argmax(const Eigen::VectorXd& v);

/// Subtracts Δ from every view (rows of `views`) and averages the logits.
Classification classify_video(const Eigen::MatrixXd& views, const Eigen::VectorXd& delta,
                              const ClassifierHead& head);

struct StreamVideo {
  std::string video_id;
  Eigen::MatrixXd views;             // V × d, row 0 is the queue feature
  std::optional<std::size_t> label;  // class index, only used for scoring
};

struct StreamConfig {
  CorrectionMode mode = CorrectionMode::kLater;
  double alpha = 1.0;
  std::optional<std::size_t> queue_capacity;
};

struct VideoPrediction {
  std::string video_id;
  std::size_t predicted = 0;
  std::optional<std::size_t> label;
  double correction_norm = 0;
};

/// Sequential test-time re-centering over an ordered target stream. Only the
/// target queue carries state from one video to the next.
class StreamEvaluator {
 public:
  StreamEvaluator(Eigen::VectorXd source_center, const ProjectorAnchor& anchor,
                  const ClassifierHead& head, StreamConfig cfg);

  VideoPrediction step(const StreamVideo& video);
  const CenterState& state() const { return state_; }

 private:
  const ProjectorAnchor& anchor_;
  const ClassifierHead& head_;
  StreamConfig cfg_;
  CenterState state_;
};

struct StreamResult {
  std::vector<VideoPrediction> predictions;
  std::size_t correct = 0;
  std::size_t labeled = 0;
};

StreamResult evaluate_stream(std::span<const StreamVideo> videos,
                             const Eigen::VectorXd& source_center, const ProjectorAnchor& anchor,
                             const ClassifierHead& head, const StreamConfig& cfg);

/// Reads every `lora_B_<layer>.ovot` in `dir` (sorted by file name).
LoraBank load_lora_bank(const std::filesystem::path& dir, Eigen::Index feature_dim);
/// Reads classifier_W.ovot, classifier_b.ovot and classes.txt from `dir`.
ClassifierHead load_head(const std::filesystem::path& dir);

}  // namespace ovo
