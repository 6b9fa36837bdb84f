// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <filesystem>
#include <iosfwd>
#include <vector>

#include <Eigen/Core>

#include "ovo/error.hpp"

namespace ovo {

struct Intrinsics {
  double fx = 0;
  double fy = 0;
  double cx = 0;
  double cy = 0;
};

/// Per-frame camera record as exported by the depth/pose predictor. The
/// extrinsics map world points into the camera frame.
struct PoseRecord {
  int frame_index = 0;
  Eigen::Matrix3d rotation_w2c = Eigen::Matrix3d::Identity();
  Eigen::Vector3d translation_w2c = Eigen::Vector3d::Zero();
  Intrinsics intrinsics;
  bool valid = true;
};

class PoseError : public Error {
 public:
  using Error::Error;
};

inline constexpr double kRotationTolerance = 1e-4;

/// True if R is orthonormal with det +1 within `tol` (max-abs entry error).
bool is_rotation(const Eigen::Matrix3d& r, double tol = kRotationTolerance);

/// Throws PoseError for a valid-flagged record whose rotation or intrinsics are
/// out of contract. Records flagged invalid are not checked further.
void validate(const PoseRecord& pose);

// poses.txt holds one JSON object per line:
//   {"frame_index":0,"rotation_w2c":[9 reals, row-major],"translation_w2c":[3],
//    "intrinsics":{"fx":..,"fy":..,"cx":..,"cy":..},"valid":true}
std::vector<PoseRecord> parse_poses(std::istream& in);
void write_poses(const std::vector<PoseRecord>& poses, std::ostream& out);
std::vector<PoseRecord> load_poses(const std::filesystem::path& path);
void save_poses(const std::vector<PoseRecord>& poses, const std::filesystem::path& path);

}  // namespace ovo
