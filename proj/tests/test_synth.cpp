#include <doctest.h>

#include <Eigen/Dense>
#include <Eigen/Geometry>
#include <cmath>
#include <random>
#include <set>

#include "linselfcal/error.hpp"
#include "linselfcal/synth.hpp"
#include "oracles.hpp"

using namespace linselfcal;

namespace {

double quaternion_angle_deg(const Mat3& R) {
  const Eigen::Quaterniond q(R);
  return oracle::deg(2.0 * std::acos(std::min(1.0, std::abs(q.w()))));
}

}  // namespace

TEST_CASE("noiseless scene satisfies the epipolar constraint") {
  SceneConfig cfg;
  cfg.n_points = 200;
  const SceneData d = make_scene(cfg);
  REQUIRE(d.corrs.size() == 200);
  const Mat3 F = d.scene.fundamental_pixel().normalized();
  for (std::size_t i = 0; i < d.corrs.size(); ++i) {
    const Vec3 a = d.corrs.x1[i].homogeneous(), b = d.corrs.x2[i].homogeneous();
    CHECK(std::abs(b.dot(F * a)) / (a.norm() * b.norm()) < 1e-10);
    CHECK(d.corrs.x1[i].x() >= 0);
    CHECK(d.corrs.x1[i].x() <= cfg.width);
    CHECK(d.corrs.x2[i].y() >= 0);
    CHECK(d.corrs.x2[i].y() <= cfg.height);
  }
  const Mat3 Fc = d.scene.fundamental_centered().normalized();
  const CorrespondenceSet c = d.corrs.centered();
  for (std::size_t i = 0; i < c.size(); ++i) {
    const Vec3 a = c.x1[i].homogeneous(), b = c.x2[i].homogeneous();
    CHECK(std::abs(b.dot(Fc * a)) / (a.norm() * b.norm()) < 1e-10);
  }
  for (const Vec3& X : d.scene.points) {
    CHECK((d.scene.camera(0) * X.homogeneous()).z() > 0);
    CHECK((d.scene.camera(1) * X.homogeneous()).z() > 0);
  }
  CHECK(d.scene.f[0] == 1000);
  CHECK(d.scene.f[1] == 1200);
  CHECK(d.scene.R[0].isIdentity(0.0));
  const double rot = oracle::trace_angle_deg(d.scene.relative_rotation());
  CHECK(rot >= 5 - 1e-9);
  CHECK(rot <= 30 + 1e-9);
}

TEST_CASE("scenes are reproducible from the seed") {
  SceneConfig cfg;
  cfg.seed = 99;
  cfg.sigma = 0.7;
  const SceneData a = make_scene(cfg), b = make_scene(cfg);
  CHECK(a.corrs.x1 == b.corrs.x1);
  CHECK(a.corrs.x2 == b.corrs.x2);
  CHECK(a.scene.R[1] == b.scene.R[1]);
  cfg.seed = 100;
  CHECK(make_scene(cfg).corrs.x1 != a.corrs.x1);
}

TEST_CASE("noise has the requested standard deviation") {
  SceneConfig cfg;
  cfg.n_points = 10000;
  cfg.seed = 5;
  const SceneData clean = make_scene(cfg);
  cfg.sigma = 1.0;
  const SceneData noisy = make_scene(cfg);
  double sum = 0, sq = 0;
  std::size_t n = 0;
  for (std::size_t i = 0; i < clean.corrs.size(); ++i) {
    for (const Vec2& d : {Vec2(noisy.corrs.x1[i] - clean.corrs.x1[i]), Vec2(noisy.corrs.x2[i] - clean.corrs.x2[i])}) {
      for (int k = 0; k < 2; ++k) {
        sum += d(k);
        sq += d(k) * d(k);
        ++n;
      }
    }
  }
  const double mean = sum / n;
  const double sd = std::sqrt(sq / n - mean * mean);
  CHECK(std::abs(sd - 1.0) < 0.1);
  CHECK(std::abs(mean) < 0.05);
}

TEST_CASE("rotation and translation error metrics") {
  std::mt19937_64 rng(51);
  for (int k = 0; k < 30; ++k) {
    const Mat3 R1 = oracle::random_rotation(rng), R2 = oracle::random_rotation(rng);
    const Mat3 rel = R2 * R1.transpose();
    const Mat3 extra = oracle::rodrigues(Vec3::UnitZ(), 5 * oracle::kPi / 180);
    CHECK(relative_rotation_error(extra * rel, R1, R2) == doctest::Approx(5.0).epsilon(1e-9));
    CHECK(relative_rotation_error(rel, R1, R2) < 1e-6);
    const Mat3 any = oracle::random_rotation(rng);
    CHECK(relative_rotation_error(any, R1, R2) == doctest::Approx(quaternion_angle_deg(any * rel.transpose())).epsilon(1e-7));
  }
  const Vec3 t(1, 2, 3);
  CHECK(translation_angle_error(t, 2 * t) == 0.0);
  CHECK(translation_angle_error(t, -t) == doctest::Approx(180.0));
  CHECK(translation_angle_error(Vec3(1, 0, 0), Vec3(0, 0, 4)) == doctest::Approx(90.0));
  CHECK_THROWS_AS(translation_angle_error(Vec3::Zero(), t), PreconditionError);
  CHECK(relative_translation(Mat3::Identity(), Vec3::Zero(), Vec3(-2, 0, 0)).isApprox(Vec3(1, 0, 0)));
}

TEST_CASE("pair errors do not depend on the world frame") {
  SceneConfig cfg;
  cfg.sigma = 0.5;
  cfg.seed = 12;
  const SceneData d = make_scene(cfg);
  const PairSolution sol = calibrate_pair(d.corrs);
  const PairErrorReport ref = evaluate_pair(d.scene, sol);

  std::mt19937_64 rng(52);
  const Mat3 Q = oracle::random_rotation(rng);
  const double s = 3.7;
  const Vec3 shift(5, -2, 8);
  SyntheticScene moved = d.scene;
  for (int i = 0; i < 2; ++i) {
    moved.R[i] = d.scene.R[i] * Q.transpose();
    moved.C[i] = s * Q * d.scene.C[i] + shift;
  }
  const PairErrorReport r = evaluate_pair(moved, sol);
  CHECK(r.dR == doctest::Approx(ref.dR).epsilon(1e-6));
  CHECK(r.dt == doctest::Approx(ref.dt).epsilon(1e-6));
  CHECK(r.df1 == ref.df1);
  CHECK(r.df2 == ref.df2);
  CHECK(ref.chosen);
  CHECK(ref.vote_ratio > 0.95);
}

TEST_CASE("noiseless benchmark") {
  BenchmarkConfig cfg;
  cfg.sigmas = {0};
  cfg.trials = 20;
  const auto rows = run_pair_benchmark(cfg);
  REQUIRE(rows.size() == 1);
  CHECK(rows[0].trial_count == 20);
  CHECK(rows[0].failures == 0);
  CHECK(rows[0].med_dR_deg < 1e-4);
  CHECK(rows[0].med_dt_deg < 1e-4);
  CHECK(rows[0].med_df1 < 1e-6);
  CHECK(rows[0].med_df2 < 1e-6);
  CHECK(rows[0].frac_dR_lt_5 == 1.0);

  cfg.trials = 0;
  CHECK(run_pair_benchmark(cfg).empty());
  cfg.trials = 1;
  cfg.sigmas = {-1};
  CHECK_THROWS_AS(run_pair_benchmark(cfg), PreconditionError);
}

TEST_CASE("median and quantile") {
  CHECK(median({3, 1, 2}) == 2);
  CHECK(median({4, 1, 3, 2}) == 2.5);
  CHECK(quantile({1, 2, 3, 4}, 0.25) == doctest::Approx(1.75));
  CHECK(quantile({1, 2, 3, 4}, 1.0) == 4);
  CHECK(median({1, std::numeric_limits<double>::infinity(), std::numeric_limits<double>::infinity()}) ==
        std::numeric_limits<double>::infinity());
  CHECK_THROWS_AS(median({}), PreconditionError);
}

TEST_CASE("facade matches") {
  FacadeConfig cfg;
  cfg.seed = 3;
  const CorrespondenceSet cs = make_facade_matches(cfg);
  REQUIRE(cs.labels);
  const auto inliers = static_cast<std::size_t>(std::count(cs.labels->begin(), cs.labels->end(), true));
  CHECK(inliers == cfg.n_inliers);
  // The outlier fraction is relative to all matches.
  CHECK(static_cast<double>(cs.size() - inliers) / cs.size() == doctest::Approx(cfg.outlier_fraction).epsilon(0.01));
  for (std::size_t i = 0; i < cs.size(); ++i) {
    CHECK(cs.x1[i].x() >= 0);
    CHECK(cs.x1[i].x() <= cfg.width);
    CHECK(cs.x2[i].y() >= 0);
    CHECK(cs.x2[i].y() <= cfg.height);
  }
  CHECK(make_facade_matches(cfg).x1 == cs.x1);
}

TEST_CASE("rotation graph harness") {
  RotationGraphConfig cfg;
  cfg.seed = 4;
  const RotationGraphData d = make_rotation_graph(cfg);
  CHECK(d.truth.size() == static_cast<std::size_t>(cfg.n_nodes));
  CHECK(d.corrupted.size() == d.graph.edges.size());
  std::set<std::pair<int, int>> seen;
  for (std::size_t e = 0; e < d.graph.edges.size(); ++e) {
    const auto& edge = d.graph.edges[e];
    CHECK(edge.i != edge.j);
    CHECK(seen.insert({std::min(edge.i, edge.j), std::max(edge.i, edge.j)}).second);
    const double err = geodesic_distance(edge.estimates[0], d.truth.at(edge.j) * d.truth.at(edge.i).transpose());
    if (!d.corrupted[e]) CHECK(err < 6 * cfg.noise_deg);
  }
  RotationGraphConfig clean = cfg;
  clean.corrupt_fraction = 0;
  const RotationGraphData c = make_rotation_graph(clean);
  CHECK(std::none_of(c.corrupted.begin(), c.corrupted.end(), [](bool b) { return b; }));
  std::size_t corrupt_total = 0, edge_total = 0;
  for (std::uint64_t seed = 1; seed <= 50; ++seed) {
    cfg.seed = seed;
    const RotationGraphData g = make_rotation_graph(cfg);
    corrupt_total += static_cast<std::size_t>(std::count(g.corrupted.begin(), g.corrupted.end(), true));
    edge_total += g.corrupted.size();
  }
  CHECK(static_cast<double>(corrupt_total) / edge_total == doctest::Approx(0.1).epsilon(0.25));
  CHECK(static_cast<double>(d.graph.edges.size()) == doctest::Approx(cfg.n_nodes * cfg.mean_degree / 2).epsilon(0.2));
  CHECK_NOTHROW(register_rotations(d.graph, 1));
}

TEST_CASE("bimodal focal pool") {
  FocalPoolConfig cfg;
  cfg.seed = 8;
  const FocalPoolData d = make_bimodal_focal_pool(cfg);
  CHECK_NOTHROW(d.pool.validate());
  CHECK(d.truth.size() == static_cast<std::size_t>(cfg.n_images));
  for (const auto& [img, f] : d.truth) {
    CHECK(f >= cfg.f_min);
    CHECK(f <= cfg.f_max);
    CHECK(d.pool.estimates(img).size() > 10);
  }
}
