#include <doctest.h>

#include <Eigen/Dense>
#include <random>

#include "linselfcal/averaging.hpp"
#include "linselfcal/error.hpp"
#include "oracles.hpp"

using namespace linselfcal;

namespace {

Mat3 rz(double deg) { return oracle::rodrigues(Vec3::UnitZ(), deg * oracle::kPi / 180.0); }

double l1_cost(const Mat3& R, const std::vector<Mat3>& rots) {
  double c = 0;
  for (const auto& S : rots) c += oracle::trace_angle_deg(R * S.transpose());
  return c;
}

// Graph over `truth` with every listed edge measured exactly.
RotationGraph exact_graph(const std::map<int, Mat3>& truth, const std::vector<std::pair<int, int>>& edges) {
  RotationGraph g;
  for (const auto& [i, j] : edges) g.add(i, j, truth.at(j) * truth.at(i).transpose());
  return g;
}

}  // namespace

TEST_CASE("geodesic distance") {
  CHECK(geodesic_distance(Mat3::Identity(), Mat3::Identity()) == 0.0);
  CHECK(geodesic_distance(Mat3::Identity(), rz(90)) == doctest::Approx(90.0));
  std::mt19937_64 rng(41);
  for (int k = 0; k < 50; ++k) {
    const Mat3 A = oracle::random_rotation(rng), B = oracle::random_rotation(rng), G = oracle::random_rotation(rng);
    const double d = geodesic_distance(A, B);
    CHECK(d == doctest::Approx(geodesic_distance(B, A)).epsilon(1e-10));
    CHECK(d == doctest::Approx(geodesic_distance(G * A, G * B)).epsilon(1e-9));
    CHECK(d == doctest::Approx(geodesic_distance(A * G, B * G)).epsilon(1e-9));
    CHECK(d == doctest::Approx(oracle::trace_angle_deg(A * B.transpose())).epsilon(1e-7));
  }
  CHECK_THROWS_AS(geodesic_distance(2.0 * Mat3::Identity(), Mat3::Identity()), PreconditionError);
}

TEST_CASE("single-rotation L1 mean") {
  const std::vector<Mat3> rots{rz(10), rz(10), rz(10), rz(50)};
  const Mat3 m = weiszfeld_single(rots);
  CHECK(geodesic_distance(m, rz(10)) < 1e-6);
  CHECK(is_rotation(m));
  const std::vector<Mat3> one{rz(33)};
  CHECK(weiszfeld_single(one) == rz(33));
  CHECK_THROWS_AS(weiszfeld_single(std::vector<Mat3>{}), PreconditionError);
  CHECK_THROWS_AS(weiszfeld_single(std::vector<Mat3>{Mat3::Zero()}), PreconditionError);
}

TEST_CASE("L1 mean is a local minimum") {
  std::mt19937_64 rng(42);
  std::normal_distribution<double> n(0, 0.2);
  for (int trial = 0; trial < 10; ++trial) {
    const Mat3 center = oracle::random_rotation(rng);
    std::vector<Mat3> rots;
    for (int k = 0; k < 9; ++k) rots.push_back(so3_exp(Vec3(n(rng), n(rng), n(rng))) * center);
    const Mat3 m = weiszfeld_single(rots);
    const double best = l1_cost(m, rots);
    for (int a = -1; a <= 1; ++a) {
      for (int b = -1; b <= 1; ++b) {
        for (int c = -1; c <= 1; ++c) {
          if (a == 0 && b == 0 && c == 0) continue;
          const Vec3 w = Vec3(a, b, c) * (oracle::kPi / 180.0);
          CHECK(l1_cost(so3_exp(w) * m, rots) >= best - 1e-9);
        }
      }
    }
  }
}

TEST_CASE("weiszfeld step at a data point does not move off it spuriously") {
  const std::vector<Mat3> rots{rz(0), rz(0), rz(0), rz(1)};
  Mat3 cur = rz(0);
  const double step = weiszfeld_step(cur, rots);
  CHECK(step == 0.0);
  CHECK(cur == rz(0));
}

TEST_CASE("two-node graph is solved exactly") {
  std::mt19937_64 rng(43);
  const Mat3 Rij = oracle::random_rotation(rng);
  RotationGraph g;
  g.add(3, 7, Rij);
  const Registration reg = register_rotations(g, 5);
  CHECK(reg.anchor == 3);
  CHECK(reg.rotations.at(3) == Mat3::Identity());
  CHECK(geodesic_distance(reg.rotations.at(7), Rij) < 1e-10);
  CHECK(reg.residual_per_sweep.size() == 6);
  CHECK(reg.residual_per_sweep.back() < 1e-8);
}

TEST_CASE("reversed edges are transposed") {
  std::mt19937_64 rng(44);
  std::map<int, Mat3> truth;
  for (int k = 0; k < 4; ++k) truth[k] = oracle::random_rotation(rng);
  RotationGraph g;
  g.add(1, 0, truth[0] * truth[1].transpose());
  g.add(1, 2, truth[2] * truth[1].transpose());
  g.add(3, 2, truth[2] * truth[3].transpose());
  const Registration reg = register_rotations(g, 3);
  for (const auto& [node, err] : aligned_rotation_errors(reg.rotations, truth)) CHECK(err < 1e-8);
}

TEST_CASE("noiseless cycle graph is recovered exactly") {
  std::mt19937_64 rng(45);
  std::map<int, Mat3> truth;
  const int n = 12;
  for (int k = 0; k < n; ++k) truth[k] = oracle::random_rotation(rng);
  std::vector<std::pair<int, int>> edges;
  for (int k = 0; k < n; ++k) edges.emplace_back(k, (k + 1) % n);
  for (int k = 0; k < n; k += 3) edges.emplace_back(k, (k + 5) % n);
  const Registration reg = register_rotations(exact_graph(truth, edges), 10);
  for (const auto& [node, err] : aligned_rotation_errors(reg.rotations, truth)) CHECK(err < 1e-8);
  for (const auto& [node, err] : aligned_rotation_errors(reg.initial, truth)) CHECK(err < 1e-8);
}

TEST_CASE("a 180 degree corrupted edge is absorbed") {
  std::mt19937_64 rng(46);
  std::map<int, Mat3> truth;
  const int n = 10;
  for (int k = 0; k < n; ++k) truth[k] = oracle::random_rotation(rng);
  std::vector<std::pair<int, int>> edges;
  for (int i = 0; i < n; ++i) {
    for (int j = i + 1; j < n; ++j) edges.emplace_back(i, j);
  }
  RotationGraph g;
  for (const auto& [i, j] : edges) {
    Mat3 Rij = truth[j] * truth[i].transpose();
    if (i == 2 && j == 5) Rij = oracle::rodrigues(Vec3(1, 1, 0), oracle::kPi) * Rij;
    g.add(i, j, Rij);
  }
  const Registration reg = register_rotations(g, 50);
  for (const auto& [node, err] : aligned_rotation_errors(reg.rotations, truth)) CHECK(err < 1e-3);
  CHECK(reg.residual_per_sweep.back() == doctest::Approx(180.0).epsilon(1e-3));
}

TEST_CASE("relabeling nodes does not change relative rotations") {
  std::mt19937_64 rng(47);
  std::normal_distribution<double> n(0, 0.02);
  std::map<int, Mat3> truth;
  for (int k = 0; k < 8; ++k) truth[k] = oracle::random_rotation(rng);
  std::vector<std::tuple<int, int, Mat3>> meas;
  for (int i = 0; i < 8; ++i) {
    for (int j = i + 1; j < 8; j += 2) {
      meas.emplace_back(i, j, so3_exp(Vec3(n(rng), n(rng), n(rng))) * truth[j] * truth[i].transpose());
    }
  }
  // Order-preserving, so the anchor and the visiting order stay the same.
  const auto relabel = [](int k) { return 10 + 7 * k; };
  RotationGraph a, b;
  for (const auto& [i, j, R] : meas) {
    a.add(i, j, R);
    b.add(relabel(i), relabel(j), R);
  }
  const Registration ra = register_rotations(a, 20), rb = register_rotations(b, 20);
  for (int i = 0; i < 8; ++i) {
    for (int j = 0; j < 8; ++j) {
      const Mat3 rel_a = ra.rotations.at(j) * ra.rotations.at(i).transpose();
      const Mat3 rel_b = rb.rotations.at(relabel(j)) * rb.rotations.at(relabel(i)).transpose();
      CHECK(geodesic_distance(rel_a, rel_b) < 1e-9);
    }
  }
}

TEST_CASE("registration input checks") {
  RotationGraph loop;
  loop.add(1, 1, Mat3::Identity());
  CHECK_THROWS_AS(register_rotations(loop), PreconditionError);
  RotationGraph split;
  split.add(0, 1, Mat3::Identity());
  split.add(2, 3, Mat3::Identity());
  CHECK_THROWS_AS(register_rotations(split), PreconditionError);
  CHECK_THROWS_AS(register_rotations(RotationGraph{}), PreconditionError);
  RotationGraph ok;
  ok.add(0, 1, Mat3::Identity());
  CHECK_THROWS_AS(register_rotations(ok, -1), PreconditionError);
}

TEST_CASE("aligned rotation errors remove the global gauge") {
  std::mt19937_64 rng(48);
  std::map<int, Mat3> truth, est;
  const Mat3 G = oracle::random_rotation(rng);
  for (int k = 0; k < 5; ++k) {
    truth[k] = oracle::random_rotation(rng);
    est[k] = truth[k] * G;
  }
  for (const auto& [node, err] : aligned_rotation_errors(est, truth)) CHECK(err < 1e-8);
  est[2] = rz(20) * est[2];
  CHECK(aligned_rotation_errors(est, truth).at(2) == doctest::Approx(20.0).epsilon(1e-6));
}

TEST_CASE("confidence counts") {
  const std::vector<double> f{100, 101, 99, 150};
  const auto cc = confidence_counts(f, 0.10);
  REQUIRE(cc.size() == 4);
  CHECK(cc[0] == 1.0);
  CHECK(cc[1] == 1.0);
  CHECK(cc[2] == 1.0);
  CHECK(cc[3] == doctest::Approx(1.0 / 3.0));
  // The range boundary is inclusive.
  const std::vector<double> edge{100, 110};
  CHECK(confidence_counts(edge, 0.10)[0] == 1.0);
  CHECK_THROWS_AS(confidence_counts(std::vector<double>{}, 0.1), PreconditionError);
  CHECK_THROWS_AS(confidence_counts(f, 0.0), PreconditionError);
}

TEST_CASE("joint confidence on a single pair equals the partner confidence") {
  FocalEstimatePool pool;
  pool.add_pair_estimate(0, 0, 100, 1, 200);
  pool.add_pair_estimate(1, 0, 300, 1, 205);
  pool.add_pair_estimate(2, 0, 500, 1, 400);
  pool.validate();
  const auto partner_cc = pool_confidence_counts(pool, 1, 0.1);
  CHECK(partner_cc == std::vector<double>{1.0, 1.0, 0.5});
  const auto jcc = joint_confidence(pool, 0, 0.1);
  CHECK(jcc == partner_cc);
  CHECK(joint_confidence_at(pool, 0, 5000, 0.1) == 0.0);
}

TEST_CASE("joint confidence on three images") {
  FocalEstimatePool pool;
  pool.add_pair_estimate(0, 0, 1000, 1, 900);
  pool.add_pair_estimate(1, 0, 1050, 1, 1300);
  pool.add_pair_estimate(2, 0, 1020, 2, 800);
  pool.add_pair_estimate(3, 0, 2000, 2, 810);
  pool.add_pair_estimate(4, 1, 920, 2, 1500);
  pool.validate();
  CHECK(pool.images() == std::vector<int>{0, 1, 2});
  CHECK(pool_confidence_counts(pool, 1) == std::vector<double>{1.0, 0.5, 1.0});
  CHECK(pool_confidence_counts(pool, 2) == std::vector<double>{1.0, 1.0, 0.5});
  // Partner 1 contributes mean(1, 0.5), partner 2 contributes 1.
  const auto jcc = joint_confidence(pool, 0);
  REQUIRE(jcc.size() == 4);
  CHECK(jcc[0] == doctest::Approx(1.75));
  CHECK(jcc[1] == doctest::Approx(1.75));
  CHECK(jcc[2] == doctest::Approx(1.75));
  CHECK(jcc[3] == doctest::Approx(1.0));
  CHECK(joint_confidence_at(pool, 0, 1100) == doctest::Approx(1.75));

  CHECK(select_focal(pool, 0, FocalMethod::jcc) == 1000);
  CHECK(select_focal(pool, 0, FocalMethod::cc) == 1000);
  CHECK(select_focal(pool, 0, FocalMethod::median) == doctest::Approx(1035));
  CHECK(select_focal(pool, 1, FocalMethod::median) == 920);
}

TEST_CASE("pool checks") {
  FocalEstimatePool pool;
  CHECK_THROWS_AS(pool.add_pair_estimate(0, 1, 100, 1, 100), PreconditionError);
  CHECK_THROWS_AS(pool.add_pair_estimate(0, 1, -100, 2, 100), PreconditionError);
  CHECK_THROWS_AS(pool.estimates(4), PreconditionError);
  CHECK(parse_focal_method("jcc") == FocalMethod::jcc);
  CHECK(std::string(focal_method_name(FocalMethod::median)) == "median");
  CHECK_THROWS_AS(parse_focal_method("mode"), PreconditionError);
}

TEST_CASE("delta_f") {
  CHECK(delta_f(1100, 1000) == doctest::Approx(0.1));
  CHECK(delta_f(500, 1000) == doctest::Approx(0.5));
  CHECK(delta_f(1000, 1000) == 0.0);
  CHECK_THROWS_AS(delta_f(1000, 0), PreconditionError);
}
