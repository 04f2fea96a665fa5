#include "linselfcal/synth.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <set>
#include <random>
#include <utility>

#include <Eigen/Geometry>

#include "linselfcal/error.hpp"

namespace linselfcal {

namespace {

constexpr double kDeg2Rad = M_PI / 180.0;
constexpr double kInf = std::numeric_limits<double>::infinity();

Vec3 random_unit(Rng& rng) {
  std::normal_distribution<double> n01;
  Vec3 v;
  do {
    v = Vec3(n01(rng), n01(rng), n01(rng));
  } while (v.norm() < 1e-9);
  return v.normalized();
}

bool inside(const Vec2& x, double w, double h) {
  return std::abs(x.x()) <= 0.5 * w && std::abs(x.y()) <= 0.5 * h;
}

// Principal-point-centered coordinates to top-left pixel coordinates.
Mat3 centering(double w, double h) {
  Mat3 T = Mat3::Identity();
  T(0, 2) = -0.5 * w;
  T(1, 2) = -0.5 * h;
  return T;
}

}  // namespace

Mat34 SyntheticScene::camera(int i) const {
  return compose_camera(calibration_matrix(f.at(i)), R.at(i), C.at(i));
}

Mat3 SyntheticScene::fundamental_centered() const {
  const Mat3 F = fundamental_from_cameras(camera(0), camera(1));
  return F / F.norm();
}

Mat3 SyntheticScene::fundamental_pixel() const {
  const Mat3 T = centering(width, height);
  const Mat3 F = T.transpose() * fundamental_centered() * T;
  return F / F.norm();
}

Mat3 SyntheticScene::relative_rotation() const { return R[1] * R[0].transpose(); }

Vec3 SyntheticScene::relative_translation() const {
  return linselfcal::relative_translation(R[1], C[0], C[1]);
}

SceneData make_scene(const SceneConfig& cfg) {
  if (cfg.n_points < 8) throw PreconditionError("make_scene: need at least 8 points");
  if (!(cfg.f1 > 0 && cfg.f2 > 0)) throw PreconditionError("make_scene: focal lengths must be positive");
  if (!(cfg.width > 0 && cfg.height > 0)) throw PreconditionError("make_scene: image size must be positive");
  if (!(cfg.min_depth > 0 && cfg.max_depth >= cfg.min_depth)) throw PreconditionError("make_scene: bad depth range");
  if (!(cfg.sigma >= 0)) throw PreconditionError("make_scene: sigma must be non-negative");
  if (!(cfg.baseline > 0)) throw PreconditionError("make_scene: baseline must be positive");
  if (!(cfg.min_rotation_deg >= 0 && cfg.max_rotation_deg >= cfg.min_rotation_deg)) {
    throw PreconditionError("make_scene: bad rotation range");
  }

  Rng geo = derived_rng(cfg.seed, 0);
  Rng noise = derived_rng(cfg.seed, 1);
  std::uniform_real_distribution<double> u01(0.0, 1.0);
  const auto uniform = [&](double lo, double hi) { return lo + (hi - lo) * u01(geo); };

  SceneData out;
  SyntheticScene& s = out.scene;
  s.f = {cfg.f1, cfg.f2};
  s.seed = cfg.seed;
  s.sigma = cfg.sigma;
  s.width = cfg.width;
  s.height = cfg.height;

  bool placed = false;
  for (int attempt = 0; attempt < cfg.max_retries && !placed; ++attempt) {
    const Vec3 axis = random_unit(geo);
    const double angle = uniform(cfg.min_rotation_deg, cfg.max_rotation_deg) * kDeg2Rad;
    const Mat3 R2 = rotation_from_axis_angle(axis, angle);
    const double phi = uniform(0.0, 2.0 * M_PI);
    const Vec3 dir = Vec3(std::cos(phi), std::sin(phi), uniform(-0.3, 0.3)).normalized();
    const Vec3 axis2 = R2.transpose() * Vec3::UnitZ();
    Mat3 D;
    D << dir, Vec3::UnitZ(), axis2;
    if (std::abs(D.determinant()) < cfg.min_axis_skew) continue;

    s.R = {Mat3::Identity(), R2};
    s.C = {Vec3::Zero(), cfg.baseline * dir};
    const Mat34 P2 = s.camera(1);
    s.points.clear();
    const std::size_t budget = 50 * cfg.n_points;
    for (std::size_t k = 0; k < budget && s.points.size() < cfg.n_points; ++k) {
      const double u = uniform(-0.5 * cfg.width, 0.5 * cfg.width);
      const double v = uniform(-0.5 * cfg.height, 0.5 * cfg.height);
      const double z = uniform(cfg.min_depth, cfg.max_depth);
      const Vec3 X(z * u / cfg.f1, z * v / cfg.f1, z);
      if ((R2 * (X - s.C[1])).z() <= 0) continue;
      const Vec3 y2 = P2 * X.homogeneous();
      if (!inside(y2.hnormalized(), cfg.width, cfg.height)) continue;
      s.points.push_back(X);
    }
    placed = s.points.size() == cfg.n_points;
  }
  if (!placed) throw PreconditionError("make_scene: could not place a valid scene within the retry budget");

  CorrespondenceSet& cs = out.corrs;
  cs.image1 = {"synth_1", cfg.width, cfg.height};
  cs.image2 = {"synth_2", cfg.width, cfg.height};
  const Vec2 c(0.5 * cfg.width, 0.5 * cfg.height);
  const Mat34 P1 = s.camera(0), P2 = s.camera(1);
  std::normal_distribution<double> n01;
  for (const Vec3& X : s.points) {
    Vec2 z1, z2;
    z1 << n01(noise), n01(noise);
    z2 << n01(noise), n01(noise);
    const Vec2 x1 = (P1 * X.homogeneous()).hnormalized() + cfg.sigma * z1 + c;
    const Vec2 x2 = (P2 * X.homogeneous()).hnormalized() + cfg.sigma * z2 + c;
    cs.add(x1, x2);
  }
  return out;
}

double relative_rotation_error(const Mat3& R_est, const Mat3& R1, const Mat3& R2) {
  return geodesic_distance(R_est, R2 * R1.transpose());
}

double translation_angle_error(const Vec3& t_est, const Vec3& t_gt) {
  if (t_est.norm() == 0.0 || t_gt.norm() == 0.0) throw PreconditionError("translation_angle_error: zero vector");
  return angle_deg(t_est, t_gt);
}

Vec3 relative_translation(const Mat3& R2, const Vec3& C1, const Vec3& C2) {
  const Vec3 t = R2 * (C1 - C2);
  if (t.norm() == 0.0) throw PreconditionError("relative_translation: coincident centers");
  return t.normalized();
}

PairErrorReport evaluate_pair(const SyntheticScene& scene, const PairSolution& sol) {
  const SolutionCandidate& cand = sol.best();
  PairErrorReport r;
  r.dR = relative_rotation_error(cand.R, scene.R[0], scene.R[1]);
  r.dt = translation_angle_error(cand.t, scene.relative_translation());
  r.df1 = delta_f(sol.f1, scene.f[0]);
  r.df2 = delta_f(sol.f2, scene.f[1]);
  r.chosen = sol.chosen.has_value();
  r.vote_ratio = sol.votes_considered > 0 ? static_cast<double>(cand.cam2_front) / sol.votes_considered : 0.0;
  return r;
}

double quantile(std::vector<double> v, double q) {
  if (v.empty()) throw PreconditionError("quantile: empty input");
  std::sort(v.begin(), v.end());
  const double pos = q * static_cast<double>(v.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const auto hi = static_cast<std::size_t>(std::ceil(pos));
  if (lo == hi || v[lo] == v[hi]) return v[lo];
  return v[lo] + (pos - static_cast<double>(lo)) * (v[hi] - v[lo]);
}

double median(std::vector<double> v) { return quantile(std::move(v), 0.5); }

std::vector<BenchmarkRow> run_pair_benchmark(const BenchmarkConfig& cfg) {
  if (cfg.n_points < 8) throw PreconditionError("run_pair_benchmark: need at least 8 points");
  if (!(cfg.f_min > 0 && cfg.f_max >= cfg.f_min)) throw PreconditionError("run_pair_benchmark: bad focal range");
  for (double s : cfg.sigmas) {
    if (!(s >= 0)) throw PreconditionError("run_pair_benchmark: sigma must be non-negative");
  }
  std::vector<BenchmarkRow> rows;
  if (cfg.trials == 0) return rows;

  const std::size_t ns = cfg.sigmas.size();
  std::vector<std::vector<PairErrorReport>> reports(ns);
  std::vector<std::size_t> failures(ns, 0);
  for (std::size_t t = 0; t < cfg.trials; ++t) {
    Rng rng = derived_rng(cfg.seed, t);
    std::uniform_real_distribution<double> uf(cfg.f_min, cfg.f_max);
    SceneConfig sc;
    sc.n_points = cfg.n_points;
    sc.f1 = uf(rng);
    sc.f2 = uf(rng);
    sc.seed = rng();
    for (std::size_t k = 0; k < ns; ++k) {
      sc.sigma = cfg.sigmas[k];
      const SceneData data = make_scene(sc);
      PairErrorReport rep{kInf, kInf, kInf, kInf, false, 0.0};
      try {
        const PairSolution sol = calibrate_pair(data.corrs);
        if (sol.chosen) rep = evaluate_pair(data.scene, sol);
      } catch (const Error&) {
      }
      if (!rep.chosen) ++failures[k];
      reports[k].push_back(rep);
    }
  }

  for (std::size_t k = 0; k < ns; ++k) {
    std::vector<double> dR, dt, df1, df2;
    for (const auto& r : reports[k]) {
      dR.push_back(r.dR);
      dt.push_back(r.dt);
      df1.push_back(r.df1);
      df2.push_back(r.df2);
    }
    BenchmarkRow row;
    row.sigma = cfg.sigmas[k];
    row.trial_count = cfg.trials;
    row.med_dR_deg = median(dR);
    row.med_dt_deg = median(dt);
    row.med_df1 = median(df1);
    row.med_df2 = median(df2);
    row.q1_dR_deg = quantile(dR, 0.25);
    row.q3_dR_deg = quantile(dR, 0.75);
    const auto frac_below = [&](double lim) {
      return static_cast<double>(std::count_if(dR.begin(), dR.end(), [&](double x) { return x < lim; })) /
             static_cast<double>(dR.size());
    };
    row.frac_dR_lt_5 = frac_below(5.0);
    row.frac_dR_lt_10 = frac_below(10.0);
    row.failures = failures[k];
    rows.push_back(row);
  }
  return rows;
}

CorrespondenceSet make_facade_matches(const FacadeConfig& cfg) {
  if (!(cfg.outlier_fraction >= 0 && cfg.outlier_fraction < 1)) {
    throw PreconditionError("make_facade_matches: outlier fraction must be in [0, 1)");
  }
  if (!(cfg.f > 0 && cfg.width > 0 && cfg.height > 0 && cfg.depth > cfg.relief && cfg.relief >= 0 &&
        cfg.foreground_fraction >= 0 && cfg.foreground_fraction <= 1 && cfg.foreground_min_depth > 0)) {
    throw PreconditionError("make_facade_matches: bad configuration");
  }
  Rng geo = derived_rng(cfg.seed, 0);
  Rng noise = derived_rng(cfg.seed, 1);
  std::uniform_real_distribution<double> u01(0.0, 1.0);
  const auto uniform = [&](double lo, double hi) { return lo + (hi - lo) * u01(geo); };
  std::normal_distribution<double> n01;

  const double tilt = cfg.max_tilt_deg * kDeg2Rad;
  const Mat3 R2 = rotation_from_axis_angle(Vec3::UnitY(), uniform(-tilt, tilt)) *
                  rotation_from_axis_angle(Vec3::UnitX(), uniform(-tilt, tilt));
  const Mat3 K = calibration_matrix(cfg.f);
  const Mat34 P1 = compose_camera(K, Mat3::Identity(), Vec3::Zero());
  const Mat34 P2 = compose_camera(K, R2, Vec3(cfg.baseline, 0, 0));
  const Vec2 c(0.5 * cfg.width, 0.5 * cfg.height);

  struct Row {
    Vec2 a, b;
    bool inlier;
  };
  std::vector<Row> rows;
  const std::size_t budget = 100 * cfg.n_inliers + 100;
  for (std::size_t k = 0; k < budget && rows.size() < cfg.n_inliers; ++k) {
    const double u = uniform(-0.5 * cfg.width, 0.5 * cfg.width);
    const double v = uniform(-0.5 * cfg.height, 0.5 * cfg.height);
    const bool foreground = u01(geo) < cfg.foreground_fraction;
    const double z = foreground ? uniform(cfg.foreground_min_depth, cfg.depth)
                                : cfg.depth + uniform(-cfg.relief, cfg.relief);
    const Vec4 X(z * u / cfg.f, z * v / cfg.f, z, 1.0);
    const Vec3 y2 = P2 * X;
    if (y2.z() <= 0 || !inside(y2.hnormalized(), cfg.width, cfg.height)) continue;
    Vec2 z1, z2;
    z1 << n01(noise), n01(noise);
    z2 << n01(noise), n01(noise);
    rows.push_back({(P1 * X).hnormalized() + cfg.sigma * z1 + c, y2.hnormalized() + cfg.sigma * z2 + c, true});
  }
  if (rows.size() < cfg.n_inliers) throw PreconditionError("make_facade_matches: could not place inliers");
  const auto n_out = static_cast<std::size_t>(
      std::llround(static_cast<double>(cfg.n_inliers) * cfg.outlier_fraction / (1.0 - cfg.outlier_fraction)));
  for (std::size_t k = 0; k < n_out; ++k) {
    const Vec2 a(uniform(0, cfg.width), uniform(0, cfg.height));
    const Vec2 b(uniform(0, cfg.width), uniform(0, cfg.height));
    rows.push_back({a, b, false});
  }
  std::shuffle(rows.begin(), rows.end(), geo);

  CorrespondenceSet cs;
  cs.image1 = {"facade_1", cfg.width, cfg.height};
  cs.image2 = {"facade_2", cfg.width, cfg.height};
  cs.labels.emplace();
  for (const auto& r : rows) {
    cs.add(r.a, r.b);
    cs.labels->push_back(r.inlier);
  }
  return cs;
}

Mat3 random_rotation(Rng& rng) {
  std::normal_distribution<double> n01;
  Eigen::Quaterniond q;
  do {
    q.coeffs() << n01(rng), n01(rng), n01(rng), n01(rng);
  } while (q.norm() < 1e-9);
  return q.normalized().toRotationMatrix();
}

RotationGraphData make_rotation_graph(const RotationGraphConfig& cfg) {
  if (cfg.n_nodes < 2) throw PreconditionError("make_rotation_graph: need at least 2 nodes");
  if (!(cfg.corrupt_fraction >= 0 && cfg.corrupt_fraction <= 1)) {
    throw PreconditionError("make_rotation_graph: corrupt fraction must be in [0, 1]");
  }
  Rng rng = derived_rng(cfg.seed, 0);
  std::uniform_real_distribution<double> u01(0.0, 1.0);
  std::normal_distribution<double> n01;
  const int n = cfg.n_nodes;

  RotationGraphData out;
  for (int i = 0; i < n; ++i) {
    out.truth[i] = random_rotation(rng);
    out.graph.nodes.push_back(i);
  }
  std::set<std::pair<int, int>> edges;
  for (int i = 0; i < n; ++i) {
    const int j = (i + 1) % n;
    if (i != j) edges.insert({std::min(i, j), std::max(i, j)});
  }
  const auto max_edges = static_cast<std::size_t>(n) * static_cast<std::size_t>(n - 1) / 2;
  const auto target = std::min(max_edges, static_cast<std::size_t>(std::llround(0.5 * n * cfg.mean_degree)));
  std::uniform_int_distribution<int> node(0, n - 1);
  while (edges.size() < target) {
    const int i = node(rng), j = node(rng);
    if (i != j) edges.insert({std::min(i, j), std::max(i, j)});
  }
  for (auto [a, b] : edges) {
    const bool flip = u01(rng) < 0.5;
    const int i = flip ? b : a, j = flip ? a : b;
    const bool corrupt = u01(rng) < cfg.corrupt_fraction;
    Mat3 R_ij;
    if (corrupt) {
      R_ij = random_rotation(rng);
    } else {
      const double angle = std::abs(n01(rng)) * cfg.noise_deg * kDeg2Rad;
      R_ij = so3_exp(angle * random_unit(rng)) * out.truth[j] * out.truth[i].transpose();
    }
    out.graph.add(i, j, R_ij);
    out.corrupted.push_back(corrupt);
  }
  return out;
}

FocalPoolData make_bimodal_focal_pool(const FocalPoolConfig& cfg) {
  if (cfg.n_images < 2) throw PreconditionError("make_bimodal_focal_pool: need at least 2 images");
  if (!(cfg.f_min > 0 && cfg.f_max >= cfg.f_min)) throw PreconditionError("make_bimodal_focal_pool: bad focal range");
  if (cfg.correct_min < 1 || cfg.correct_max < cfg.correct_min || cfg.wrong_min < 0 ||
      cfg.wrong_max < cfg.wrong_min || cfg.random_per_pair < 0) {
    throw PreconditionError("make_bimodal_focal_pool: bad sample counts");
  }
  Rng rng = derived_rng(cfg.seed, 0);
  std::uniform_real_distribution<double> u01(0.0, 1.0);
  const auto uniform = [&](double lo, double hi) { return lo + (hi - lo) * u01(rng); };

  FocalPoolData out;
  std::map<int, double> wrong_factor;
  for (int i = 0; i < cfg.n_images; ++i) {
    out.truth[i] = uniform(cfg.f_min, cfg.f_max);
    wrong_factor[i] = u01(rng) >= cfg.wrong_low_probability ? uniform(1.25, 1.6) : uniform(0.6, 0.8);
  }
  const auto jitter = [&]() { return 1.0 + uniform(-cfg.correct_spread, cfg.correct_spread); };
  const auto scattered = [&](int img) { return out.truth[img] * uniform(0.5, 2.0); };
  std::uniform_int_distribution<int> n_correct(cfg.correct_min, cfg.correct_max);
  std::uniform_int_distribution<int> n_wrong(cfg.wrong_min, cfg.wrong_max);
  int sample = 0;
  for (int i = 0; i < cfg.n_images; ++i) {
    for (int k = i + 1; k < cfg.n_images; ++k) {
      for (int c = n_correct(rng); c > 0; --c) {
        out.pool.add_pair_estimate(sample++, i, out.truth[i] * jitter(), k, out.truth[k] * jitter());
      }
      for (int w = n_wrong(rng); w > 0; --w) {
        out.pool.add_pair_estimate(sample++, i, out.truth[i] * wrong_factor[i] * jitter(), k, scattered(k));
      }
      for (int w = n_wrong(rng); w > 0; --w) {
        out.pool.add_pair_estimate(sample++, k, out.truth[k] * wrong_factor[k] * jitter(), i, scattered(i));
      }
      for (int r = 0; r < cfg.random_per_pair; ++r) {
        out.pool.add_pair_estimate(sample++, i, scattered(i), k, scattered(k));
      }
    }
  }
  return out;
}

}  // namespace linselfcal
