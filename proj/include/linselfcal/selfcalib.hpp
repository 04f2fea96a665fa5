#pragma once

#include <array>
#include <optional>
#include <string>
#include <vector>

#include "linselfcal/epipolar.hpp"
#include "linselfcal/geometry.hpp"

namespace linselfcal {

// x = (f1^2, f2^2, f1^2 p1^2 + f1^2 p2^2 + p3^2, p3, f1^2 p1, f1^2 p2), where (p, 1)
// is the plane at infinity in the projective frame of the canonical pair.
struct UnknownVector {
  Eigen::Matrix<double, 6, 1> x = Eigen::Matrix<double, 6, 1>::Zero();

  double f1_sq() const { return x(0); }
  double f2_sq() const { return x(1); }
  Vec3 plane() const { return Vec3(x(4) / x(0), x(5) / x(0), x(3)); }
  // x3 - ((x5^2 + x6^2) / x1 + x4^2); zero for an internally consistent vector.
  double complex_residual() const;

  static UnknownVector from_parameters(double f1, double f2_sq, const Vec3& p);
};

// Element (i, j), 1-based, of the second image's dual image of the absolute conic
// that an equation row was derived from.
struct RowTag {
  int i;
  int j;
};

inline constexpr std::array<RowTag, 6> kRowTags{{{2, 2}, {2, 3}, {1, 3}, {1, 1}, {1, 2}, {3, 3}}};

// [A | b] of the linear system in x. Row k is derived from element kRowTags[k].
struct AugmentedSystem {
  Eigen::Matrix<double, 6, 7> Ab = Eigen::Matrix<double, 6, 7>::Zero();

  Eigen::Matrix<double, 6, 6> A() const { return Ab.leftCols<6>(); }
  Eigen::Matrix<double, 6, 1> b() const { return Ab.col(6); }
};

AugmentedSystem build_augmented_system(const Mat34& P2);

// Row-reduced form of the first five rows:
//   x1 = b1, x2 = b2, x3 = b3, x4 + c x6 = b4, x5 + d x6 = b5.
struct ReducedSystem {
  double b1 = 0, b2 = 0, b3 = 0, b4 = 0, b5 = 0;
  double c = 0, d = 0;
  // Largest coupling to x4..x6 left in rows 1-3 after elimination, relative to row scale.
  double structure_residual = 0;

  Eigen::Matrix<double, 5, 7> echelon() const;
};

struct ReduceOptions {
  double pivot_tol = 1e-10;
  double structure_tol = 1e-8;
};

// Eliminates x4..x6 from rows 1-3 using rows (1,1) and (1,2), which span the same
// two-dimensional space whenever the left block of P2 has rank 2. The (3,3) row is
// never read. Throws NumericalError on a small pivot or a violated rank-2 structure.
ReducedSystem structured_reduce(const AugmentedSystem& sys, const ReduceOptions& opts = {});

struct SolveOptions {
  double discriminant_tol = 1e-8;
};

// Both roots of the quadric constraint in x6. Throws NumericalError if b1 <= 0,
// b2 <= 0, or the discriminant is negative beyond tolerance.
std::array<UnknownVector, 2> solve_unknowns(const ReducedSystem& red, const SolveOptions& opts = {});

// [[K1, 0], [-p^T K1, 1]].
Mat4 homography_from_solution(double f1, const Vec3& p);

struct CameraPair {
  Mat34 P1;
  Mat34 P2;
};

// (P1 H, P2 H), each scaled to unit Frobenius norm.
CameraPair metric_pair(const Mat34& P1, const Mat34& P2, const Mat4& H);

// Linear triangulation; nullopt when the two rays do not determine a point.
std::optional<Vec4> triangulate_dlt(const Mat34& P1, const Mat34& P2, const Vec2& x1, const Vec2& x2);

// +1 in front of the camera, -1 behind, 0 on the principal plane or at infinity.
int depth_sign(const Mat34& P, const Vec4& X);

struct CheiralityResult {
  std::array<CameraPair, 2> oriented;  // second camera's translation sign fixed by camera 1
  std::array<bool, 2> reflected{false, false};
  std::array<int, 2> cam2_front{0, 0};  // in front of both cameras
  std::array<int, 2> cam1_front{0, 0};
  std::array<int, 2> valid{0, 0};  // non-degenerate triangulations per candidate
  std::optional<int> chosen;       // 0 or 1; empty when tied
};

// For each candidate the sign of the second camera's translation is chosen so that
// most points lie in front of camera 1. Among those points, the ones also in front
// of camera 2 are the candidate's votes; strictly more votes wins. Throws
// NumericalError if every triangulation is degenerate.
CheiralityResult cheirality_select(const std::array<CameraPair, 2>& candidates, const CorrespondenceSet& corrs);

struct CalibrateOptions {
  double consistency_tol = 0.01;
  ReduceOptions reduce;
  SolveOptions solve;
  bool use_ransac = false;
  RansacOptions ransac;
  // Subtract (width/2, height/2) from the match coordinates before solving.
  bool center_principal_point = true;
  // Image coordinates are divided by this before solving; <= 0 picks it from F.
  double coordinate_scale = 0;
};

// Pixel scale that balances the blocks of F: the ratio of the norms of its
// translation-coupled entries to its upper-left 2x2 block (about one focal length).
double conditioning_scale(const Mat3& F);

// Quantities of one solve, expressed in conditioned coordinates (pixels / scale).
struct PassResult {
  Mat3 F;
  CanonicalPair canonical;
  AugmentedSystem system;
  ReducedSystem reduced;
  std::array<UnknownVector, 2> roots;
  double f_sq = 0;         // b1: squared focal of this pass's first camera
  double scaled_f_sq = 0;  // b2: squared focal of the other camera times the F-scale factor
  double omega33 = 0;      // (3,3) entry of the recovered second-camera conic
};

struct SolutionCandidate {
  UnknownVector unknowns;  // conditioned coordinates
  Vec3 plane;              // conditioned coordinates
  Mat4 H;                  // conditioned coordinates
  CameraPair metric;       // pixel cameras diag(s,s,1) P H, unnormalized
  CameraPair oriented;     // after cheirality orientation
  bool reflected = false;
  double mu = 0;  // signed block scale: left block of metric.P2 = mu * K2 * R
  int cam2_front = 0;
  int cam1_front = 0;
  Mat3 R = Mat3::Identity();  // relative rotation of camera 2
  Vec3 t = Vec3::Zero();      // unit translation direction of camera 2
};

struct PairSolution {
  double f1 = 0;
  double f2 = 0;
  std::array<SolutionCandidate, 2> candidates;
  std::optional<int> chosen;
  double coordinate_scale = 1;
  double kappa_epsilon = 0;  // magnitude of the F-scale factor absorbed in b2
  PassResult forward;
  PassResult reverse;
  double f2_forward_relerr = 0;  // forward-implied f2 vs reverse-pass f2
  double f1_reverse_relerr = 0;  // reverse-implied f1 vs forward-pass f1
  bool consistent = true;
  int votes_considered = 0;

  const SolutionCandidate& best() const { return candidates[chosen.value_or(0)]; }
};

// Solves from F given in principal-point-centered pixel coordinates. When
// `centered_corrs` is given, cheirality picks one of the two candidates.
PairSolution calibrate_pair(const Mat3& F, const CalibrateOptions& opts = {},
                            const CorrespondenceSet* centered_corrs = nullptr);

// Estimates F from matches (8-point on all, or RANSAC), then solves.
PairSolution calibrate_pair(const CorrespondenceSet& corrs, const CalibrateOptions& opts = {});

struct GeometryCheck {
  std::string name;
  double value = 0;
  double tolerance = 0;
  bool pass = false;
};

struct GeometryReport {
  std::vector<GeometryCheck> checks;
  bool all_pass() const;
  const GeometryCheck& get(const std::string& name) const;
};

// Mirror-center, bisector, determinant-sign and shared-calibration relations between
// the two candidates.
GeometryReport verify_solution_geometry(const PairSolution& sol, double tol = 1e-6);

}  // namespace linselfcal
