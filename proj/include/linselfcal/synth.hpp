#pragma once

#include <array>
#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "linselfcal/averaging.hpp"
#include "linselfcal/epipolar.hpp"
#include "linselfcal/geometry.hpp"
#include "linselfcal/random.hpp"
#include "linselfcal/selfcalib.hpp"

namespace linselfcal {

struct SceneConfig {
  std::size_t n_points = 100;
  double f1 = 1000;
  double f2 = 1200;
  double baseline = 1.0;
  double min_rotation_deg = 5;  // camera 2 rotates about a random axis by an angle in this range
  double max_rotation_deg = 30;
  double sigma = 0;  // pixels, per image coordinate
  std::uint64_t seed = 1;
  double width = 2000;
  double height = 1500;
  double min_depth = 4;  // along camera 1's axis, in baseline units
  double max_depth = 10;
  // Lower bound on |det[baseline dir, axis 1, axis 2]|; near zero the optical axes
  // meet and the focal lengths are not determined.
  double min_axis_skew = 0.05;
  int max_retries = 200;
};

// Camera 1 is at the origin with R = I. Intrinsics are diag(f, f, 1) in coordinates
// centered on the image.
struct SyntheticScene {
  std::array<double, 2> f{};
  std::array<Mat3, 2> R{Mat3::Identity(), Mat3::Identity()};
  std::array<Vec3, 2> C{Vec3::Zero(), Vec3::Zero()};
  std::vector<Vec3> points;
  std::uint64_t seed = 0;
  double sigma = 0;
  double width = 0;
  double height = 0;

  Mat34 camera(int i) const;  // centered pixel coordinates
  Mat3 fundamental_centered() const;
  Mat3 fundamental_pixel() const;  // top-left pixel coordinates
  Mat3 relative_rotation() const;
  Vec3 relative_translation() const;  // unit
};

struct SceneData {
  SyntheticScene scene;
  CorrespondenceSet corrs;  // top-left pixel coordinates, image sizes set
};

// Points are drawn in camera 1's frustum and kept when they project in front of and
// inside camera 2. Noise uses its own stream, so scenes that differ only in sigma
// share geometry and noise directions. Throws PreconditionError when placement fails.
SceneData make_scene(const SceneConfig& cfg);

// Geodesic angle between R_est and R2 R1^T, degrees.
double relative_rotation_error(const Mat3& R_est, const Mat3& R1, const Mat3& R2);
// Angle between directions in [0, 180] degrees. Throws PreconditionError on a zero vector.
double translation_angle_error(const Vec3& t_est, const Vec3& t_gt);
// Direction of camera 2's translation in camera 1's frame: R2 (C1 - C2).
Vec3 relative_translation(const Mat3& R2, const Vec3& C1, const Vec3& C2);

struct PairErrorReport {
  double dR = 0;  // degrees
  double dt = 0;  // degrees
  double df1 = 0;
  double df2 = 0;
  bool chosen = false;     // cheirality picked a candidate
  double vote_ratio = 0;   // votes of the reported candidate / triangulated points
};

// Errors of the chosen candidate (candidate 0 when undecided).
PairErrorReport evaluate_pair(const SyntheticScene& scene, const PairSolution& sol);

struct BenchmarkConfig {
  std::vector<double> sigmas{0, 0.25, 0.5, 1, 2};
  std::size_t trials = 100;
  std::uint64_t seed = 1;
  std::size_t n_points = 200;
  double f_min = 800;
  double f_max = 1500;
};

struct BenchmarkRow {
  double sigma = 0;
  std::size_t trial_count = 0;
  double med_dR_deg = 0, med_dt_deg = 0, med_df1 = 0, med_df2 = 0;
  double q1_dR_deg = 0, q3_dR_deg = 0;
  double frac_dR_lt_5 = 0, frac_dR_lt_10 = 0;
  std::size_t failures = 0;  // solver errors or undecided cheirality, scored as infinite error
};

// Trial t uses the same scene geometry at every sigma (derived from seed and t).
std::vector<BenchmarkRow> run_pair_benchmark(const BenchmarkConfig& cfg);
double median(std::vector<double> v);
double quantile(std::vector<double> v, double q);

// Planar facade with small relief seen by two laterally displaced cameras, plus
// foreground points at depths between foreground_min_depth and the facade, and
// uniformly random outlier matches. Labels mark inliers (facade and foreground).
struct FacadeConfig {
  std::size_t n_inliers = 700;
  double outlier_fraction = 0.3;
  double sigma = 0.5;
  double f = 1000;
  double width = 2000;
  double height = 1500;
  double depth = 10;
  double relief = 0.3;
  double foreground_fraction = 0.15;  // of the inliers
  double foreground_min_depth = 3;
  double baseline = 1.0;
  double max_tilt_deg = 3;
  std::uint64_t seed = 1;
};
CorrespondenceSet make_facade_matches(const FacadeConfig& cfg);

struct RotationGraphConfig {
  int n_nodes = 20;
  double mean_degree = 6;
  double corrupt_fraction = 0.1;
  double noise_deg = 1.0;
  std::uint64_t seed = 1;
};
struct RotationGraphData {
  RotationGraph graph;
  std::map<int, Mat3> truth;
  std::vector<bool> corrupted;  // per edge
};
// Ring plus random chords; corrupted edges carry uniformly random rotations.
RotationGraphData make_rotation_graph(const RotationGraphConfig& cfg);
Mat3 random_rotation(Rng& rng);

// Pool in which each image's correct value is supported by matching estimates of
// its partners, while a larger or comparable wrong mode pairs with scattered values.
struct FocalPoolConfig {
  int n_images = 6;
  double f_min = 800;
  double f_max = 1500;
  int correct_min = 5, correct_max = 9;  // per pair
  int wrong_min = 4, wrong_max = 6;      // per pair and direction
  int random_per_pair = 6;
  double correct_spread = 0.01;
  // Chance that an image's wrong mode lies below its true value (factor 0.6-0.8)
  // instead of above it (factor 1.25-1.6).
  double wrong_low_probability = 0.0;
  std::uint64_t seed = 1;
};
struct FocalPoolData {
  FocalEstimatePool pool;
  std::map<int, double> truth;
};
FocalPoolData make_bimodal_focal_pool(const FocalPoolConfig& cfg);

}  // namespace linselfcal
