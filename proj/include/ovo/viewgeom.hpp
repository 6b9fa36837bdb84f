// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

#include <Eigen/Core>

#include "ovo/poses.hpp"
#include "ovo/tensorio.hpp"

namespace ovo {

/// Row-major H×W depth map in the predictor's (unitless) depth scale.
struct DepthMap {
  int height = 0;
  int width = 0;
  std::vector<float> values;

  DepthMap() = default;
  DepthMap(int h, int w, std::vector<float> v);
  double at(int row, int col) const {
    return values[static_cast<std::size_t>(row) * static_cast<std::size_t>(width) +
                  static_cast<std::size_t>(col)];
  }
};

/// Accepts [H,W] or [1,H,W] tensors.
DepthMap depth_from_tensor(const Tensor& t);

struct FrameGeometry {
  DepthMap depth;
  PoseRecord pose;
  int stride = 8;
};

struct CameraToWorld {
  Eigen::Matrix3d rotation;
  Eigen::Vector3d translation;
};

/// Inverts world-to-camera extrinsics. Throws PoseError when the rotation is
/// not orthonormal within kRotationTolerance.
CameraToWorld camera_to_world(const PoseRecord& pose);

/// Camera +z axis expressed in world coordinates, normalized.
Eigen::Vector3d optical_axis(const Eigen::Matrix3d& r_cw);

struct SampledPoint {
  Eigen::Vector3d position;  // camera frame
  int u = 0;                 // pixel column
  int v = 0;                 // pixel row
};

/// Back-projects the stride grid (u, v) = (j·stride, i·stride). Pixels with
/// non-finite or non-positive depth are skipped.
std::vector<SampledPoint> backproject(const FrameGeometry& g);

/// Ground-candidate filter. All thresholds are relative to the depth scale of
/// the frame, so rescaling depth uniformly does not change the selection.
struct CandidateConfig {
  double bottom_fraction = 0.4;  // rows v >= (1 - bottom_fraction)·H
  double center_fraction = 0.6;  // columns within the central band of this width
  double low_percentile = 5.0;
  double high_percentile = 95.0;
  // Per-pixel central difference over neighbouring grid samples, in units
  // of the median window depth.
  double max_gradient_rel = 0.02;
};

std::vector<SampledPoint> select_ground_candidates(std::span<const SampledPoint> points,
                                                   const FrameGeometry& g,
                                                   const CandidateConfig& cfg = {});

struct RansacConfig {
  int iterations = 200;
  std::size_t min_candidates = 32;
  std::size_t min_inliers = 16;
  double threshold_rel = 0.01;  // of the median candidate depth (z)
};

enum class InvalidReason { kTooFewCandidates, kTooFewInliers, kNonfiniteGeometry };
std::string_view to_string(InvalidReason r);
InvalidReason parse_invalid_reason(std::string_view s);

/// Plane {x : normal_cam·x = offset} in camera coordinates.
struct GroundPlane {
  Eigen::Vector3d normal_cam = Eigen::Vector3d::Zero();
  double offset = 0;
  std::size_t inlier_count = 0;         // under the refit plane
  std::size_t sample_inlier_count = 0;  // consensus of the best minimal sample
  std::size_t candidate_count = 0;
  double threshold = 0;
};

struct PlaneEstimate {
  std::optional<GroundPlane> plane;
  std::optional<InvalidReason> invalid_reason;
  std::size_t candidate_count = 0;

  bool valid() const { return plane.has_value(); }
};

/// Distance threshold actually used for `points` under `cfg`.
double ransac_threshold(std::span<const Eigen::Vector3d> points, const RansacConfig& cfg);

/// Number of points within `threshold` of the plane through three points, or
/// nullopt if the triple is degenerate.
std::optional<std::size_t> triple_consensus(std::span<const Eigen::Vector3d> points,
                                            const Eigen::Vector3d& a, const Eigen::Vector3d& b,
                                            const Eigen::Vector3d& c, double threshold);

/// Flips `n` so that y <= 0; exact ties fall back to z >= 0, then x >= 0.
Eigen::Vector3d orient_normal(const Eigen::Vector3d& n);
/// Flips `n` to face the camera (n·p < 0 for a point p on the plane). For a
/// ground plane below the camera this is the y <= 0 normal. Planes through
/// the camera centre use the rule above.
Eigen::Vector3d orient_normal(const Eigen::Vector3d& n, const Eigen::Vector3d& point_on_plane);

PlaneEstimate ransac_plane(std::span<const Eigen::Vector3d> candidates, std::uint64_t seed,
                           const RansacConfig& cfg = {});

struct FrameScore {
  int frame_index = 0;
  double theta_deg = 0;
  double s_deg = 0;
  bool valid = false;
  std::optional<InvalidReason> invalid_reason;
  Eigen::Vector3d normal_world = Eigen::Vector3d::Zero();
};

/// theta = angle between optical axis and world ground normal, s = theta - 90.
FrameScore view_angle(const PlaneEstimate& plane, const Eigen::Matrix3d& r_cw);

struct GeometryConfig {
  int stride = 8;
  CandidateConfig candidates;
  RansacConfig ransac;
};

/// Full per-frame pipeline. The RANSAC seed is `seed` mixed with the frame index.
FrameScore score_frame(const DepthMap& depth, const PoseRecord& pose, const GeometryConfig& cfg,
                       std::uint64_t seed);

/// Linear-interpolated percentile of unsorted values, p in [0,100].
double percentile(std::vector<double> values, double p);

}  // namespace ovo
