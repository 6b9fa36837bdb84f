// SPDX-License-Identifier: Apache-2.0

#include "ovo/poses.hpp"

#include <cmath>
#include <fstream>
#include <istream>
#include <ostream>
#include <string>

#include <Eigen/LU>
#include <json.hpp>

namespace ovo {

using nlohmann::json;

bool is_rotation(const Eigen::Matrix3d& r, double tol) {
  if (!r.allFinite()) return false;
  const Eigen::Matrix3d err = r.transpose() * r - Eigen::Matrix3d::Identity();
  return err.cwiseAbs().maxCoeff() <= tol && std::abs(r.determinant() - 1.0) <= tol;
}

void validate(const PoseRecord& pose) {
  if (!pose.valid) return;
  if (!is_rotation(pose.rotation_w2c)) {
    throw PoseError("frame " + std::to_string(pose.frame_index) +
                    ": rotation_w2c is not orthonormal with determinant +1");
  }
  if (!pose.translation_w2c.allFinite()) {
    throw PoseError("frame " + std::to_string(pose.frame_index) + ": non-finite translation");
  }
  const auto& k = pose.intrinsics;
  if (!(k.fx > 0) || !(k.fy > 0) || !std::isfinite(k.fx) || !std::isfinite(k.fy) ||
      !std::isfinite(k.cx) || !std::isfinite(k.cy)) {
    throw PoseError("frame " + std::to_string(pose.frame_index) +
                    ": focal lengths must be finite and positive");
  }
}

std::vector<PoseRecord> parse_poses(std::istream& in) {
  std::vector<PoseRecord> out;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      const auto j = json::parse(line);
      PoseRecord p;
      p.frame_index = j.at("frame_index").get<int>();
      const auto r = j.at("rotation_w2c").get<std::vector<double>>();
      const auto t = j.at("translation_w2c").get<std::vector<double>>();
      if (r.size() != 9 || t.size() != 3) throw PoseError("rotation needs 9 values, translation 3");
      for (int i = 0; i < 9; ++i) p.rotation_w2c(i / 3, i % 3) = r[static_cast<std::size_t>(i)];
      for (int i = 0; i < 3; ++i) p.translation_w2c(i) = t[static_cast<std::size_t>(i)];
      const auto& k = j.at("intrinsics");
      p.intrinsics = {k.at("fx").get<double>(), k.at("fy").get<double>(), k.at("cx").get<double>(),
                      k.at("cy").get<double>()};
      p.valid = j.value("valid", true);
      validate(p);
      out.push_back(p);
    } catch (const json::exception& e) {
      throw PoseError("poses line " + std::to_string(line_no) + ": " + e.what());
    } catch (const PoseError& e) {
      throw PoseError("poses line " + std::to_string(line_no) + ": " + e.what());
    }
  }
  return out;
}

void write_poses(const std::vector<PoseRecord>& poses, std::ostream& out) {
  for (const auto& p : poses) {
    json j;
    j["frame_index"] = p.frame_index;
    std::vector<double> r(9);
    for (int i = 0; i < 9; ++i) r[static_cast<std::size_t>(i)] = p.rotation_w2c(i / 3, i % 3);
    j["rotation_w2c"] = r;
    j["translation_w2c"] = {p.translation_w2c.x(), p.translation_w2c.y(), p.translation_w2c.z()};
    j["intrinsics"] = {{"fx", p.intrinsics.fx}, {"fy", p.intrinsics.fy},
                       {"cx", p.intrinsics.cx}, {"cy", p.intrinsics.cy}};
    j["valid"] = p.valid;
    out << j.dump() << '\n';
  }
}

std::vector<PoseRecord> load_poses(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw PoseError("cannot open " + path.string());
  return parse_poses(in);
}

void save_poses(const std::vector<PoseRecord>& poses, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw PoseError("cannot open " + path.string() + " for writing");
  write_poses(poses, out);
}

}  // namespace ovo
