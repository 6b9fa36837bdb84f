// SPDX-License-Identifier: Apache-2.0

#include "ovo/viewgeom.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>

#include <Eigen/Dense>

#include "ovo/rng.hpp"
#include "ovo/stats.hpp"

namespace ovo {
namespace {

struct Hypothesis {
  Eigen::Vector3d normal;
  double offset = 0;
  std::size_t inliers = 0;
  double mean_residual = 0;
};

Hypothesis score_plane(std::span<const Eigen::Vector3d> points, const Eigen::Vector3d& n,
                       double offset, double threshold) {
  Hypothesis h{n, offset, 0, 0};
  double sum = 0;
  for (const auto& p : points) {
    const double r = std::abs(n.dot(p) - offset);
    if (r <= threshold) {
      ++h.inliers;
      sum += r;
    }
  }
  h.mean_residual = h.inliers ? sum / static_cast<double>(h.inliers) : 0;
  return h;
}

std::optional<Eigen::Vector3d> plane_normal(const Eigen::Vector3d& a, const Eigen::Vector3d& b,
                                            const Eigen::Vector3d& c) {
  const Eigen::Vector3d ab = b - a;
  const Eigen::Vector3d ac = c - a;
  const Eigen::Vector3d n = ab.cross(ac);
  const double scale = ab.norm() * ac.norm();
  if (!(scale > 0) || n.norm() <= 1e-10 * scale) return std::nullopt;
  return n.normalized();
}

}  // namespace

DepthMap::DepthMap(int h, int w, std::vector<float> v) : height(h), width(w), values(std::move(v)) {
  if (h < 1 || w < 1 ||
      values.size() != static_cast<std::size_t>(h) * static_cast<std::size_t>(w)) {
    throw Error("depth map size does not match its dimensions");
  }
}

DepthMap depth_from_tensor(const Tensor& t) {
  validate(t);
  if (t.rank() == 2) {
    return DepthMap(static_cast<int>(t.dims[0]), static_cast<int>(t.dims[1]), t.data);
  }
  if (t.rank() == 3 && t.dims[0] == 1) {
    return DepthMap(static_cast<int>(t.dims[1]), static_cast<int>(t.dims[2]), t.data);
  }
  throw TensorError(TensorErrorCode::kBadRank, "depth tensor must be [H,W] or [1,H,W]");
}

CameraToWorld camera_to_world(const PoseRecord& pose) {
  if (!is_rotation(pose.rotation_w2c)) {
    throw PoseError("frame " + std::to_string(pose.frame_index) +
                    ": cannot invert a non-orthonormal rotation");
  }
  CameraToWorld out;
  out.rotation = pose.rotation_w2c.transpose();
  out.translation = -(out.rotation * pose.translation_w2c);
  return out;
}

Eigen::Vector3d optical_axis(const Eigen::Matrix3d& r_cw) {
  if (!is_rotation(r_cw)) throw PoseError("optical_axis: rotation is not orthonormal");
  return r_cw.col(2).normalized();
}

std::vector<SampledPoint> backproject(const FrameGeometry& g) {
  if (g.stride < 1) throw Error("stride must be >= 1");
  const auto& k = g.pose.intrinsics;
  std::vector<SampledPoint> out;
  const int rows = g.depth.height / g.stride;
  const int cols = g.depth.width / g.stride;
  out.reserve(static_cast<std::size_t>(rows) * static_cast<std::size_t>(cols));
  for (int i = 0; i < rows; ++i) {
    const int v = i * g.stride;
    for (int j = 0; j < cols; ++j) {
      const int u = j * g.stride;
      const double z = g.depth.at(v, u);
      if (!std::isfinite(z) || z <= 0) continue;
      out.push_back({Eigen::Vector3d((u - k.cx) * z / k.fx, (v - k.cy) * z / k.fy, z), u, v});
    }
  }
  return out;
}

double percentile(std::vector<double> values, double p) {
  if (values.empty()) throw Error("percentile of an empty set");
  std::sort(values.begin(), values.end());
  const double rank = std::clamp(p, 0.0, 100.0) / 100.0 * static_cast<double>(values.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(rank));
  const auto hi = std::min(lo + 1, values.size() - 1);
  const double frac = rank - static_cast<double>(lo);
  return values[lo] + frac * (values[hi] - values[lo]);
}

std::vector<SampledPoint> select_ground_candidates(std::span<const SampledPoint> points,
                                                   const FrameGeometry& g,
                                                   const CandidateConfig& cfg) {
  const double h = g.depth.height;
  const double w = g.depth.width;
  const double row_min = (1.0 - cfg.bottom_fraction) * h;
  const double col_min = 0.5 * (1.0 - cfg.center_fraction) * w;
  const double col_max = w - col_min;

  std::vector<SampledPoint> window;
  for (const auto& p : points) {
    if (p.v >= row_min && p.u >= col_min && p.u < col_max) window.push_back(p);
  }
  if (window.empty()) return {};

  std::vector<double> depths;
  depths.reserve(window.size());
  for (const auto& p : window) depths.push_back(p.position.z());
  const double lo = percentile(depths, cfg.low_percentile);
  const double hi = percentile(depths, cfg.high_percentile);
  const double max_gradient = cfg.max_gradient_rel * median(depths) * g.stride;

  const int s = g.stride;
  auto depth_or_nan = [&](int v, int u) {
    if (v < 0 || u < 0 || v >= g.depth.height || u >= g.depth.width) {
      return std::numeric_limits<double>::quiet_NaN();
    }
    return g.depth.at(v, u);
  };
  // Central difference across the neighbouring grid samples; one-sided at the
  // image border.
  auto derivative = [&](int v, int u, int dv, int du) {
    const double fwd = depth_or_nan(v + dv * s, u + du * s);
    const double back = depth_or_nan(v - dv * s, u - du * s);
    const double here = g.depth.at(v, u);
    const bool has_fwd = v + dv * s < g.depth.height && u + du * s < g.depth.width;
    const bool has_back = v - dv * s >= 0 && u - du * s >= 0;
    if (has_fwd && has_back) return 0.5 * (fwd - back);
    if (has_fwd) return fwd - here;
    if (has_back) return here - back;
    return 0.0;
  };

  std::vector<SampledPoint> out;
  for (const auto& p : window) {
    const double z = p.position.z();
    if (z < lo || z > hi) continue;
    const double gx = derivative(p.v, p.u, 0, 1);
    const double gy = derivative(p.v, p.u, 1, 0);
    const double grad = std::hypot(gx, gy);
    // NaN neighbours fail this comparison and drop the point.
    if (!(grad < max_gradient)) continue;
    out.push_back(p);
  }
  return out;
}

std::string_view to_string(InvalidReason r) {
  switch (r) {
    case InvalidReason::kTooFewCandidates: return "too_few_candidates";
    case InvalidReason::kTooFewInliers: return "too_few_inliers";
    case InvalidReason::kNonfiniteGeometry: return "nonfinite_geometry";
  }
  return "nonfinite_geometry";
}

InvalidReason parse_invalid_reason(std::string_view s) {
  for (auto r : {InvalidReason::kTooFewCandidates, InvalidReason::kTooFewInliers,
                 InvalidReason::kNonfiniteGeometry}) {
    if (s == to_string(r)) return r;
  }
  throw Error("unknown invalid reason '" + std::string(s) + "'");
}

double ransac_threshold(std::span<const Eigen::Vector3d> points, const RansacConfig& cfg) {
  std::vector<double> z;
  z.reserve(points.size());
  for (const auto& p : points) z.push_back(p.z());
  return cfg.threshold_rel * std::abs(median(z));
}

std::optional<std::size_t> triple_consensus(std::span<const Eigen::Vector3d> points,
                                            const Eigen::Vector3d& a, const Eigen::Vector3d& b,
                                            const Eigen::Vector3d& c, double threshold) {
  const auto n = plane_normal(a, b, c);
  if (!n) return std::nullopt;
  return score_plane(points, *n, n->dot(a), threshold).inliers;
}

Eigen::Vector3d orient_normal(const Eigen::Vector3d& n) {
  bool flip;
  if (n.y() != 0) {
    flip = n.y() > 0;
  } else if (n.z() != 0) {
    flip = n.z() < 0;
  } else {
    flip = n.x() < 0;
  }
  return flip ? Eigen::Vector3d(-n) : n;
}

Eigen::Vector3d orient_normal(const Eigen::Vector3d& n, const Eigen::Vector3d& point_on_plane) {
  const double side = n.dot(point_on_plane);
  if (side > 0) return -n;
  if (side < 0) return n;
  return orient_normal(n);
}

PlaneEstimate ransac_plane(std::span<const Eigen::Vector3d> candidates, std::uint64_t seed,
                           const RansacConfig& cfg) {
  PlaneEstimate result;
  result.candidate_count = candidates.size();
  if (candidates.size() < cfg.min_candidates || candidates.size() < 3) {
    result.invalid_reason = InvalidReason::kTooFewCandidates;
    return result;
  }
  for (const auto& p : candidates) {
    if (!p.allFinite()) {
      result.invalid_reason = InvalidReason::kNonfiniteGeometry;
      return result;
    }
  }

  const double threshold = ransac_threshold(candidates, cfg);
  std::mt19937_64 rng(seed);
  std::optional<Hypothesis> best;
  const std::size_t n = candidates.size();
  for (int it = 0; it < cfg.iterations; ++it) {
    const std::size_t i = draw_index(rng, n);
    std::size_t j = draw_index(rng, n - 1);
    if (j >= i) ++j;
    std::size_t k = draw_index(rng, n - 2);
    // map k into [0,n) skipping i and j
    const std::size_t lo = std::min(i, j), hi = std::max(i, j);
    if (k >= lo) ++k;
    if (k >= hi) ++k;

    const auto normal = plane_normal(candidates[i], candidates[j], candidates[k]);
    if (!normal) continue;
    const auto h = score_plane(candidates, *normal, normal->dot(candidates[i]), threshold);
    if (!best || h.inliers > best->inliers ||
        (h.inliers == best->inliers && h.mean_residual < best->mean_residual)) {
      best = h;
    }
  }
  if (!best || best->inliers < 3) {
    result.invalid_reason = InvalidReason::kTooFewInliers;
    return result;
  }

  // Least-squares refit on the consensus set: centroid plus the eigenvector of
  // the smallest covariance eigenvalue.
  Eigen::Vector3d centroid = Eigen::Vector3d::Zero();
  std::vector<const Eigen::Vector3d*> inliers;
  for (const auto& p : candidates) {
    if (std::abs(best->normal.dot(p) - best->offset) <= threshold) {
      inliers.push_back(&p);
      centroid += p;
    }
  }
  centroid /= static_cast<double>(inliers.size());
  Eigen::Matrix3d cov = Eigen::Matrix3d::Zero();
  for (const auto* p : inliers) {
    const Eigen::Vector3d d = *p - centroid;
    cov += d * d.transpose();
  }
  Eigen::SelfAdjointEigenSolver<Eigen::Matrix3d> eig(cov);
  Eigen::Vector3d normal = orient_normal(eig.eigenvectors().col(0).normalized(), centroid);
  const double offset = normal.dot(centroid);
  const auto refit = score_plane(candidates, normal, offset, threshold);

  GroundPlane plane;
  plane.normal_cam = normal;
  plane.offset = offset;
  plane.inlier_count = refit.inliers;
  plane.sample_inlier_count = best->inliers;
  plane.candidate_count = n;
  plane.threshold = threshold;
  if (refit.inliers < cfg.min_inliers) {
    result.invalid_reason = InvalidReason::kTooFewInliers;
    return result;
  }
  result.plane = plane;
  return result;
}

FrameScore view_angle(const PlaneEstimate& plane, const Eigen::Matrix3d& r_cw) {
  FrameScore score;
  if (!plane.valid()) {
    score.invalid_reason = plane.invalid_reason.value_or(InvalidReason::kNonfiniteGeometry);
    return score;
  }
  const Eigen::Vector3d o = optical_axis(r_cw);
  score.normal_world = r_cw * plane.plane->normal_cam;
  const double c = std::clamp(o.dot(score.normal_world), -1.0, 1.0);
  if (!std::isfinite(c)) {
    score.invalid_reason = InvalidReason::kNonfiniteGeometry;
    return score;
  }
  score.theta_deg = std::acos(c) * 180.0 / std::numbers::pi;
  score.s_deg = score.theta_deg - 90.0;
  score.valid = true;
  return score;
}

FrameScore score_frame(const DepthMap& depth, const PoseRecord& pose, const GeometryConfig& cfg,
                       std::uint64_t seed) {
  FrameScore invalid;
  invalid.frame_index = pose.frame_index;
  invalid.invalid_reason = InvalidReason::kNonfiniteGeometry;
  const auto& k = pose.intrinsics;
  if (!pose.valid || !is_rotation(pose.rotation_w2c) || !pose.translation_w2c.allFinite() ||
      !(k.fx > 0) || !(k.fy > 0) || !std::isfinite(k.fx) || !std::isfinite(k.fy) ||
      !std::isfinite(k.cx) || !std::isfinite(k.cy)) {
    return invalid;
  }

  FrameGeometry g{depth, pose, cfg.stride};
  const auto sampled = backproject(g);
  const auto candidates = select_ground_candidates(sampled, g, cfg.candidates);
  std::vector<Eigen::Vector3d> points;
  points.reserve(candidates.size());
  for (const auto& c : candidates) points.push_back(c.position);

  // splitmix-style mix so neighbouring frames get unrelated streams
  std::uint64_t frame_seed = seed + 0x9E3779B97F4A7C15ull * static_cast<std::uint64_t>(pose.frame_index + 1);
  frame_seed = (frame_seed ^ (frame_seed >> 30)) * 0xBF58476D1CE4E5B9ull;
  frame_seed ^= frame_seed >> 31;

  const auto plane = ransac_plane(points, frame_seed, cfg.ransac);
  auto score = view_angle(plane, camera_to_world(pose).rotation);
  score.frame_index = pose.frame_index;
  return score;
}

}  // namespace ovo
