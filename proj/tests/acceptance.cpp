// SPDX-License-Identifier: Apache-2.0
//
// Acceptance suite. Prints one PASS/FAIL line per criterion and exits nonzero
// if any criterion fails.

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <cstring>
#include <functional>
#include <numeric>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "fixtures.hpp"
#include "ovo/later.hpp"
#include "ovo/metrics.hpp"
#include "ovo/split.hpp"
#include "ovo/viewgeom.hpp"
#include "synthetic.hpp"

using namespace ovo;
using namespace ovo::testing;

namespace {

// Tolerances and limits.
constexpr double kMetricTol = 0.01;
constexpr double kNoiselessTolDeg = 0.5;
constexpr double kNoisyTolDeg = 2.0;
constexpr double kDepthNoiseRel = 0.01;
constexpr double kOutlierFraction = 0.20;
constexpr std::size_t kRansacSlack = 2;
constexpr int kRansacInstances = 60;
constexpr double kProjectorTol = 1e-6;
constexpr double kRecoveryTol = 1e-6;
constexpr double kStreamTol = 1e-9;

struct Outcome {
  bool pass = true;
  std::string detail;
};

struct Criterion {
  const char* name;
  double limit_s;
  std::function<Outcome()> run;
};

// Collects failures without stopping at the first one.
class Checker {
 public:
  void expect(bool ok, const std::string& what) {
    if (!ok && failures_++ < 5) (msg_.tellp() ? msg_ << "; " : msg_) << what;
  }
  Outcome done(const std::string& summary) const {
    if (failures_ == 0) return {true, summary};
    return {false, summary + "; " + std::to_string(failures_) + " failure(s): " + msg_.str()};
  }

 private:
  std::size_t failures_ = 0;
  std::ostringstream msg_;
};

std::string fmt(const char* f, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, v);
  return buf;
}

Eigen::MatrixXd gaussian(std::mt19937_64& rng, Eigen::Index r, Eigen::Index c, double sd = 1.0) {
  std::normal_distribution<double> n(0, sd);
  Eigen::MatrixXd m(r, c);
  for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = n(rng);
  return m;
}

// ---------------------------------------------------------------------------

Outcome metric_reproduction() {
  struct Row {
    const char* method;
    double acc_id, acc_ood, pd, h;
  };
  const Row rows[] = {
      {"ViT-S", 47.71, 15.58, 0.67, 23.49},   {"X3D-M", 68.45, 25.45, 0.63, 37.10},
      {"FAR", 54.55, 13.42, 0.75, 21.54},     {"ViViM", 66.60, 28.56, 0.57, 39.98},
      {"MViTv2-B", 66.45, 33.94, 0.49, 44.93}, {"DejaVid", 64.19, 30.97, 0.52, 41.78},
      {"NEO", 66.71, 34.58, 0.48, 45.55},     {"LATER", 67.06, 35.55, 0.47, 46.47},
  };
  Checker c;
  double worst = 0;
  for (const auto& r : rows) {
    const auto rep = make_report(r.method, r.acc_id, r.acc_ood);
    const double dpd = std::abs(*rep.pd - r.pd);
    const double dh = std::abs(rep.h - r.h);
    worst = std::max({worst, dpd, dh});
    c.expect(dpd <= kMetricTol, std::string(r.method) + " pd " + format2(*rep.pd));
    c.expect(dh <= kMetricTol, std::string(r.method) + " h " + format2(rep.h));
  }
  return c.done("8 pairs, max deviation " + fmt("%.4f", worst));
}

// Candidate points of a synthetic frame with multiplicative depth noise and
// uniform outliers appended so they make up `outlier_fraction` of the cloud.
std::vector<Eigen::Vector3d> noisy_cloud(double dep, const SceneCamera& cam, double noise_rel,
                                         double outlier_fraction, std::mt19937_64& rng) {
  FrameGeometry g;
  g.depth = ground_depth(dep, cam);
  g.pose = make_pose(dep, cam);
  std::normal_distribution<double> n(0, noise_rel);
  for (auto& d : g.depth.values) d *= static_cast<float>(1.0 + n(rng));
  const auto pts = backproject(g);
  const auto cand = select_ground_candidates(pts, g);
  std::vector<Eigen::Vector3d> cloud;
  for (const auto& p : cand) cloud.push_back(p.position);
  if (cloud.empty() || outlier_fraction <= 0) return cloud;

  Eigen::Vector3d lo = cloud.front(), hi = cloud.front();
  for (const auto& p : cloud) {
    lo = lo.cwiseMin(p);
    hi = hi.cwiseMax(p);
  }
  const auto n_out = static_cast<std::size_t>(
      std::ceil(outlier_fraction * static_cast<double>(cloud.size()) / (1.0 - outlier_fraction)));
  std::uniform_real_distribution<double> u(0, 1);
  for (std::size_t i = 0; i < n_out; ++i) {
    cloud.emplace_back(lo.x() + u(rng) * (hi.x() - lo.x()), lo.y() + u(rng) * (hi.y() - lo.y()),
                       lo.z() + u(rng) * (hi.z() - lo.z()));
  }
  return cloud;
}

Outcome geometry_accuracy() {
  SceneCamera cam;
  cam.yaw_deg = 20;
  Checker c;
  double worst_clean = 0, worst_noisy = 0;
  std::mt19937_64 rng(2024);
  for (double dep : {0.0, 15.0, 30.0, 45.0, 60.0, 75.0, 90.0}) {
    const auto pose = make_pose(dep, cam);
    const auto clean = score_frame(ground_depth(dep, cam), pose, {}, 1);
    c.expect(clean.valid, "noiseless " + fmt("%.0f", dep) + " invalid");
    if (clean.valid) {
      const double e = std::abs(clean.s_deg - dep);
      worst_clean = std::max(worst_clean, e);
      c.expect(e <= kNoiselessTolDeg, "noiseless " + fmt("%.0f", dep) + " off by " + fmt("%.3f", e));
    }

    const auto cloud = noisy_cloud(dep, cam, kDepthNoiseRel, kOutlierFraction, rng);
    const auto est = ransac_plane(cloud, 1);
    const auto s = view_angle(est, camera_to_world(pose).rotation);
    c.expect(s.valid, "noisy " + fmt("%.0f", dep) + " invalid");
    if (s.valid) {
      const double e = std::abs(s.s_deg - dep);
      worst_noisy = std::max(worst_noisy, e);
      c.expect(e <= kNoisyTolDeg, "noisy " + fmt("%.0f", dep) + " off by " + fmt("%.3f", e));
    }
  }
  return c.done("7 angles, max error noiseless " + fmt("%.2e", worst_clean) + " deg, noisy " +
                fmt("%.3f", worst_noisy) + " deg");
}

std::size_t exhaustive_consensus(const std::vector<Eigen::Vector3d>& pts, double threshold) {
  std::size_t best = 0;
  for (std::size_t i = 0; i < pts.size(); ++i)
    for (std::size_t j = i + 1; j < pts.size(); ++j)
      for (std::size_t k = j + 1; k < pts.size(); ++k) {
        const auto n = triple_consensus(pts, pts[i], pts[j], pts[k], threshold);
        if (n && *n > best) best = *n;
      }
  return best;
}

Outcome ransac_oracle() {
  std::mt19937_64 rng(77);
  std::uniform_int_distribution<int> total(40, 60);
  std::uniform_real_distribution<double> frac(0.05, 0.35), u(-1, 1), span(-3, 3);
  Checker c;
  std::size_t worst = 0;
  for (int t = 0; t < kRansacInstances; ++t) {
    const int n = total(rng);
    const int n_out = static_cast<int>(frac(rng) * n);
    Eigen::Vector3d normal(u(rng), -1.0 - std::abs(u(rng)), u(rng));
    normal.normalize();
    const Eigen::Vector3d a = normal.unitOrthogonal(), b = normal.cross(a);
    const Eigen::Vector3d center(0, 0, 8 + 4 * std::abs(u(rng)));
    std::vector<Eigen::Vector3d> pts;
    // in-plane noise well under the 1%-of-depth threshold
    std::normal_distribution<double> eps(0, 0.01);
    for (int i = 0; i < n - n_out; ++i) pts.push_back(center + a * span(rng) + b * span(rng) + normal * eps(rng));
    for (int i = 0; i < n_out; ++i) pts.push_back(center + Eigen::Vector3d(span(rng), span(rng), span(rng)));
    std::shuffle(pts.begin(), pts.end(), rng);

    RansacConfig cfg;
    cfg.min_candidates = 3;
    cfg.min_inliers = 3;
    const auto est = ransac_plane(pts, static_cast<std::uint64_t>(t), cfg);
    const auto best = exhaustive_consensus(pts, ransac_threshold(pts, cfg));
    c.expect(est.valid(), "instance " + std::to_string(t) + " invalid");
    if (!est.valid()) continue;
    const auto got = est.plane->sample_inlier_count;
    c.expect(got <= best, "instance " + std::to_string(t) + " exceeds the exhaustive optimum");
    const std::size_t gap = best - std::min(best, got);
    worst = std::max(worst, gap);
    c.expect(gap <= kRansacSlack, "instance " + std::to_string(t) + " gap " + std::to_string(gap));
  }
  return c.done(std::to_string(kRansacInstances) + " instances, max gap " + std::to_string(worst));
}

Outcome projector_suite() {
  std::mt19937_64 rng(99);
  std::uniform_real_distribution<double> scale(1e-3, 1e3);
  Checker c;
  double worst = 0;
  int banks = 0;
  for (int t = 0; t < 40; ++t, ++banks) {
    const Eigen::Index d = 2 + static_cast<Eigen::Index>(rng() % 255);
    const int layers = 1 + static_cast<int>(rng() % 8);
    LoraBank bank;
    bank.feature_dim = d;
    for (int l = 0; l < layers; ++l) {
      bank.matrices.push_back({"l" + std::to_string(l), gaussian(rng, d, 1 + static_cast<Eigen::Index>(rng() % 16))});
    }
    const auto anchor = build_anchor(bank);
    const auto& p = anchor.complement;
    const double idem = (p * p - p).cwiseAbs().maxCoeff();
    const double sym = (p - p.transpose()).cwiseAbs().maxCoeff();
    double annihilate = 0;
    for (const auto& m : bank.matrices) {
      for (Eigen::Index j = 0; j < m.b.cols(); ++j) {
        annihilate = std::max(annihilate, (p * m.b.col(j)).norm() / m.b.col(j).norm());
      }
    }
    for (auto& m : bank.matrices) m.b *= scale(rng);
    const double scaled = (build_anchor(bank).complement - p).cwiseAbs().maxCoeff();
    worst = std::max({worst, idem, sym, annihilate, scaled});
    const std::string tag = "bank " + std::to_string(t);
    c.expect(idem <= kProjectorTol, tag + " idempotence " + fmt("%.2e", idem));
    c.expect(sym <= kProjectorTol, tag + " symmetry " + fmt("%.2e", sym));
    c.expect(annihilate <= kProjectorTol, tag + " annihilation " + fmt("%.2e", annihilate));
    c.expect(scaled <= kProjectorTol, tag + " scale invariance " + fmt("%.2e", scaled));
  }

  // k = 0: every corrected vector is bitwise the global correction.
  for (int t = 0; t < 10; ++t) {
    const Eigen::Index d = 1 + static_cast<Eigen::Index>(rng() % 256);
    LoraBank empty;
    empty.feature_dim = d;
    if (t % 2) empty.matrices.push_back({"zero", Eigen::MatrixXd::Zero(d, 4)});
    const auto anchor = build_anchor(empty);
    c.expect(anchor.rank() == 0, "degenerate bank has nonzero rank");
    CenterState st(gaussian(rng, d, 1), 0.5 + t * 0.1);
    for (int i = 0; i < 50; ++i) {
      st.observe(gaussian(rng, d, 1));
      const Eigen::VectorXd a = correction(st, anchor), g = global_correction(st);
      c.expect(std::memcmp(a.data(), g.data(), static_cast<std::size_t>(d) * sizeof(double)) == 0,
               "k=0 correction differs from global");
    }
  }
  return c.done(std::to_string(banks) + " banks, max deviation " + fmt("%.2e", worst) + ", k=0 bitwise");
}

Outcome split_invariants() {
  const auto pools = pool_manifest({}, 2025);
  Manifest base, topup;
  for (const auto& r : pools.rows) (r.origin == Origin::kTopup ? topup : base).rows.push_back(r);
  const SplitConfig cfg;
  const auto merged = merge_topup(base, topup, cfg);
  Checker c;
  c.expect(merged.manifest.rows.size() == 23347, "merged manifest has " + std::to_string(merged.manifest.rows.size()) + " rows");
  c.expect(topup.rows.size() == 981, "top-up has " + std::to_string(topup.rows.size()) + " rows");

  const auto r = build_splits(merged.manifest, cfg);
  const auto& s = r.summary;
  c.expect(s.train == 13872, "train " + std::to_string(s.train));
  c.expect(s.id_test == 3100, "id_test " + std::to_string(s.id_test));
  c.expect(s.isolation == 3275, "isolation " + std::to_string(s.isolation));
  c.expect(s.ood_test == 3100, "ood_test " + std::to_string(s.ood_test));
  c.expect(s.total() == 23347, "total " + std::to_string(s.total()));
  c.expect(s.parity, "per-class parity");
  for (const auto& [cls, k] : s.per_class) {
    c.expect(k.id_test == 20 && k.ood_test == 20, "class " + cls + " not 20/20");
  }

  // determinism: repeated runs and shuffled input give identical assignments
  auto shuffled = merged.manifest;
  std::mt19937_64 rng(5);
  std::shuffle(shuffled.rows.begin(), shuffled.rows.end(), rng);
  for (int i = 0; i < 3; ++i) {
    const auto again = build_splits(i == 2 ? shuffled : merged.manifest, cfg);
    c.expect(again.assignments == r.assignments, "run " + std::to_string(i) + " differs");
  }
  return c.done("13872/3100/3275/3100 of 23347, parity 20/20, 3 repeat runs identical");
}

// ---------------------------------------------------------------------------
// LATER recovery fixture: Gaussian class clusters whose means have parts in
// an anchor subspace U and in its complement, a ridge-regression head trained
// on source features, and target streams shifted by delta = U a + w.

struct RecoveryFixture {
  static constexpr int kClasses = 10;
  static constexpr Eigen::Index kDim = 64;
  static constexpr Eigen::Index kRank = 12;
  static constexpr int kViews = 3;
  static constexpr double kShiftInAnchor = 6.0;
  static constexpr double kShiftOutsideAnchor = 6.0;

  Eigen::MatrixXd u;  // kDim x kRank, orthonormal
  Eigen::MatrixXd means;
  LoraBank bank;
  ProjectorAnchor anchor;
  ClassifierHead head;
  Eigen::VectorXd mu_s;
  Eigen::VectorXd a_part, w_part;
  std::vector<StreamVideo> id_stream, ood_stream;
};

Eigen::MatrixXd orthonormal_basis(std::mt19937_64& rng, Eigen::Index d, Eigen::Index k) {
  Eigen::HouseholderQR<Eigen::MatrixXd> qr(gaussian(rng, d, k));
  return qr.householderQ() * Eigen::MatrixXd::Identity(d, k);
}

std::vector<StreamVideo> make_stream(const RecoveryFixture& f, std::mt19937_64& rng, int per_class,
                                     const Eigen::VectorXd& shift, const char* prefix) {
  std::vector<StreamVideo> out;
  for (int cl = 0; cl < RecoveryFixture::kClasses; ++cl) {
    for (int i = 0; i < per_class; ++i) {
      const Eigen::VectorXd centre = f.means.row(cl).transpose() + shift + gaussian(rng, f.kDim, 1, 1.0);
      Eigen::MatrixXd views(RecoveryFixture::kViews, f.kDim);
      for (int v = 0; v < RecoveryFixture::kViews; ++v) views.row(v) = (centre + gaussian(rng, f.kDim, 1, 0.2)).transpose();
      char id[32];
      std::snprintf(id, sizeof id, "%s%02d_%03d", prefix, cl, i);
      out.push_back({id, views, static_cast<std::size_t>(cl)});
    }
  }
  std::shuffle(out.begin(), out.end(), rng);
  return out;
}

RecoveryFixture make_recovery_fixture() {
  std::mt19937_64 rng(314);
  RecoveryFixture f;
  const auto d = f.kDim;
  f.u = orthonormal_basis(rng, d, f.kRank);
  const Eigen::MatrixXd p_perp = Eigen::MatrixXd::Identity(d, d) - f.u * f.u.transpose();

  f.bank.feature_dim = d;
  const Eigen::MatrixXd mix = gaussian(rng, f.kRank, f.kRank);
  f.bank.matrices.push_back({"blk0", f.u.leftCols(f.kRank / 2) * mix.topLeftCorner(f.kRank / 2, 4)});
  f.bank.matrices.push_back({"blk1", f.u * mix.rightCols(8)});
  f.anchor = build_anchor(f.bank);

  // class means: strong in U, weaker in the complement
  f.means.resize(f.kClasses, d);
  for (int cl = 0; cl < f.kClasses; ++cl) {
    const Eigen::VectorXd in_u = f.u * gaussian(rng, f.kRank, 1, 2.0);
    const Eigen::VectorXd out_u = p_perp * gaussian(rng, d, 1, 0.6);
    f.means.row(cl) = (in_u + out_u).transpose();
  }

  // source features and a ridge-regression head on one-hot targets
  const int per_class = 120;
  Eigen::MatrixXd x(f.kClasses * per_class, d);
  Eigen::MatrixXd y = Eigen::MatrixXd::Zero(x.rows(), f.kClasses);
  for (int cl = 0; cl < f.kClasses; ++cl) {
    for (int i = 0; i < per_class; ++i) {
      const int r = cl * per_class + i;
      x.row(r) = f.means.row(cl) + gaussian(rng, 1, d, 1.0);
      y(r, cl) = 1;
    }
  }
  f.mu_s = source_center(x);
  const Eigen::RowVectorXd y_mean = y.colwise().mean();
  const Eigen::MatrixXd xc = x.rowwise() - f.mu_s.transpose();
  const Eigen::MatrixXd yc = y.rowwise() - y_mean;
  const Eigen::MatrixXd gram = xc.transpose() * xc + 1.0 * Eigen::MatrixXd::Identity(d, d);
  const Eigen::MatrixXd w = gram.ldlt().solve(xc.transpose() * yc);  // d x C
  f.head.weight = w.transpose();
  f.head.bias = y_mean.transpose() - f.head.weight * f.mu_s;
  for (int cl = 0; cl < f.kClasses; ++cl) f.head.class_names.push_back("c" + std::to_string(cl));

  // both parts of the shift push class 0 towards class 1
  const Eigen::VectorXd toward = (f.means.row(1) - f.means.row(0)).transpose();
  f.a_part = f.u.transpose() * toward;
  f.a_part *= RecoveryFixture::kShiftInAnchor / f.a_part.norm();
  f.w_part = p_perp * toward;
  f.w_part *= RecoveryFixture::kShiftOutsideAnchor / f.w_part.norm();
  const Eigen::VectorXd delta = f.u * f.a_part + f.w_part;
  f.id_stream = make_stream(f, rng, 40, Eigen::VectorXd::Zero(d), "I");
  f.ood_stream = make_stream(f, rng, 40, delta, "O");
  return f;
}

double stream_accuracy(const RecoveryFixture& f, const std::vector<StreamVideo>& s, CorrectionMode mode) {
  const auto r = evaluate_stream(s, f.mu_s, f.anchor, f.head, {mode, 1.0, {}});
  return accuracy_percent(r.correct, r.labeled);
}

Outcome later_recovery() {
  const auto f = make_recovery_fixture();
  Checker c;
  c.expect(f.anchor.rank() == RecoveryFixture::kRank, "anchor rank " + std::to_string(f.anchor.rank()));

  const double ood_none = stream_accuracy(f, f.ood_stream, CorrectionMode::kNone);
  const double ood_later = stream_accuracy(f, f.ood_stream, CorrectionMode::kLater);
  const double ood_global = stream_accuracy(f, f.ood_stream, CorrectionMode::kGlobal);
  const double id_later = stream_accuracy(f, f.id_stream, CorrectionMode::kLater);
  const double id_global = stream_accuracy(f, f.id_stream, CorrectionMode::kGlobal);

  c.expect(ood_later >= ood_none, "later below none on target");
  c.expect(ood_global >= ood_later, "global not best on target");
  c.expect(id_global < id_later, "global not worst on source-like stream");

  // Replay the target queue and compare the corrections step by step.
  CenterState st(f.mu_s);
  double in_subspace = 0, w_match = 0;
  for (const auto& v : f.ood_stream) {
    st.observe(v.views.row(0).transpose());
    const Eigen::VectorXd dl = correction(st, f.anchor);
    const Eigen::VectorXd dg = global_correction(st);
    in_subspace = std::max(in_subspace, (f.u.transpose() * dl).norm());
    w_match = std::max(w_match, (f.anchor.remove_subspace(dg) - dl).norm());
  }
  c.expect(in_subspace <= kRecoveryTol, "later moves the in-subspace component by " + fmt("%.2e", in_subspace));
  c.expect(w_match <= kRecoveryTol, "global w-part differs from later by " + fmt("%.2e", w_match));

  // At the end of the stream the class mix is balanced, so the estimated
  // shift approaches delta: later removes w only, global removes a as well.
  const Eigen::VectorXd dl = correction(st, f.anchor), dg = global_correction(st);
  const double a_err = (f.u.transpose() * dg - f.a_part).norm() / f.a_part.norm();
  const double w_err = (dl - f.w_part).norm() / f.w_part.norm();
  c.expect(a_err < 0.1, "global a-part removal off by " + fmt("%.3f", a_err));
  c.expect(w_err < 0.1, "later w-part removal off by " + fmt("%.3f", w_err));

  return c.done("target acc none/later/global " + fmt("%.1f", ood_none) + "/" + fmt("%.1f", ood_later) + "/" +
                fmt("%.1f", ood_global) + ", source-like later/global " + fmt("%.1f", id_later) + "/" +
                fmt("%.1f", id_global) + ", in-subspace drift " + fmt("%.1e", in_subspace));
}

Outcome stream_semantics() {
  std::mt19937_64 rng(4242);
  Checker c;
  double worst = 0;
  int streams = 0;
  for (int t = 0; t < 30; ++t, ++streams) {
    const Eigen::Index d = 1 + static_cast<Eigen::Index>(rng() % 48);
    const std::size_t len = 1 + rng() % 1000;
    std::optional<std::size_t> cap;
    if (t % 3 == 1) cap = 1;
    if (t % 3 == 2) cap = 1 + rng() % 64;
    const Eigen::VectorXd mu_s = gaussian(rng, d, 1);
    const double alpha = 0.25 + 0.25 * static_cast<double>(t % 6);

    LoraBank bank;
    bank.feature_dim = d;
    if (d > 2) bank.matrices.push_back({"l", gaussian(rng, d, std::min<Eigen::Index>(d - 1, 3))});
    const auto anchor = build_anchor(bank);
    ClassifierHead head;
    head.weight = gaussian(rng, 4, d);
    head.bias = gaussian(rng, 4, 1);
    head.class_names = {"a", "b", "c", "d"};

    std::vector<StreamVideo> videos;
    for (std::size_t i = 0; i < len; ++i) {
      videos.push_back({"v" + std::to_string(i), gaussian(rng, 2, d, 3.0), std::nullopt});
    }

    // explicit-list oracle: mean of the retained first-view features
    std::vector<Eigen::VectorXd> seen;
    StreamEvaluator ev(mu_s, anchor, head, {CorrectionMode::kLater, alpha, cap});
    for (const auto& v : videos) {
      seen.push_back(v.views.row(0).transpose());
      const std::size_t keep = cap ? std::min(*cap, seen.size()) : seen.size();
      Eigen::VectorXd mean = Eigen::VectorXd::Zero(d);
      for (std::size_t j = seen.size() - keep; j < seen.size(); ++j) {
        for (Eigen::Index k = 0; k < d; ++k) mean(k) += seen[j](k);
      }
      mean /= static_cast<double>(keep);
      const Eigen::VectorXd delta = alpha * anchor.remove_subspace(mean - mu_s);

      const auto pred = ev.step(v);
      const double dev = (ev.state().target_center() - mean).norm() / (1.0 + mean.norm());
      worst = std::max(worst, dev);
      c.expect(dev <= kStreamTol, "stream " + std::to_string(t) + " center deviates " + fmt("%.2e", dev));
      c.expect(ev.state().queue_count() == keep, "stream " + std::to_string(t) + " queue size");
      c.expect(std::abs(pred.correction_norm - delta.norm()) <= kStreamTol * (1.0 + delta.norm()),
               "stream " + std::to_string(t) + " correction norm");
      if (cap && *cap == 1) c.expect(ev.state().target_center() == seen.back(), "queue of one is not the last feature");
    }
  }
  return c.done(std::to_string(streams) + " streams up to 1000 videos, max center deviation " + fmt("%.2e", worst));
}

}  // namespace

int main() {
  const std::vector<Criterion> criteria = {
      {"metric_reproduction", 1.0, metric_reproduction},
      {"geometry_accuracy", 10.0, geometry_accuracy},
      {"ransac_oracle_equivalence", 30.0, ransac_oracle},
      {"projector_suite", 30.0, projector_suite},
      {"split_invariants", 30.0, split_invariants},
      {"later_synthetic_recovery", 30.0, later_recovery},
      {"stream_semantics", 30.0, stream_semantics},
  };
  int failed = 0;
  for (const auto& cr : criteria) {
    const auto t0 = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = cr.run();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    if (secs > cr.limit_s) {
      o.pass = false;
      o.detail += "; runtime over " + fmt("%.0f", cr.limit_s) + " s";
    }
    if (!o.pass) ++failed;
    std::printf("%s %-26s %s (%.2f s)\n", o.pass ? "PASS" : "FAIL", cr.name, o.detail.c_str(), secs);
    std::fflush(stdout);
  }
  std::printf("%d/%zu criteria passed\n", static_cast<int>(criteria.size()) - failed, criteria.size());
  return failed == 0 ? 0 : 1;
}
