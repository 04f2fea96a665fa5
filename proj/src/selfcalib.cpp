#include "linselfcal/selfcalib.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>

#include "linselfcal/error.hpp"

namespace linselfcal {

namespace {

// Gaussian elimination with partial pivoting on [G | rhs...]. A pivot is rejected when
// it is at most `tol` times the largest coefficient of its row.
template <int N, int Cols>
Eigen::Matrix<double, N, Cols - N> gauss_solve(Eigen::Matrix<double, N, Cols> m, double tol, const char* what) {
  for (int col = 0; col < N; ++col) {
    int piv = col;
    for (int r = col + 1; r < N; ++r) {
      if (std::abs(m(r, col)) > std::abs(m(piv, col))) piv = r;
    }
    const double row_max = m.row(piv).template head<N>().cwiseAbs().maxCoeff();
    if (!(std::abs(m(piv, col)) > tol * row_max)) {
      throw NumericalError(std::string(what) + ": pivot below tolerance, singular configuration");
    }
    m.row(col).swap(m.row(piv));
    for (int r = col + 1; r < N; ++r) {
      const double factor = m(r, col) / m(col, col);
      m.row(r) -= factor * m.row(col);
      m(r, col) = 0.0;
    }
  }
  Eigen::Matrix<double, N, Cols - N> x;
  for (int r = N - 1; r >= 0; --r) {
    Eigen::Matrix<double, 1, Cols - N> acc = m.row(r).template tail<Cols - N>();
    for (int k = r + 1; k < N; ++k) acc -= m(r, k) * x.row(k);
    x.row(r) = acc / m(r, r);
  }
  return x;
}

double omega33(const Mat34& P2, double f1, const Vec3& p) {
  const Mat3 M = (P2.leftCols<3>() - P2.col(3) * p.transpose()) * calibration_matrix(f1);
  return M.row(2).squaredNorm();
}

PassResult run_pass(const Mat3& F, const CalibrateOptions& opts) {
  PassResult pass;
  pass.F = F;
  pass.canonical = canonical_pair(F);
  pass.system = build_augmented_system(pass.canonical.P2);
  pass.reduced = structured_reduce(pass.system, opts.reduce);
  pass.roots = solve_unknowns(pass.reduced, opts.solve);
  pass.f_sq = pass.reduced.b1;
  pass.scaled_f_sq = pass.reduced.b2;
  pass.omega33 = omega33(pass.canonical.P2, std::sqrt(pass.f_sq), pass.roots[0].plane());
  return pass;
}

double sign_of(double v) { return v < 0.0 ? -1.0 : 1.0; }

}  // namespace

double UnknownVector::complex_residual() const {
  return x(2) - ((x(4) * x(4) + x(5) * x(5)) / x(0) + x(3) * x(3));
}

UnknownVector UnknownVector::from_parameters(double f1, double f2_sq, const Vec3& p) {
  const double f1_sq = f1 * f1;
  UnknownVector u;
  u.x << f1_sq, f2_sq, f1_sq * (p(0) * p(0) + p(1) * p(1)) + p(2) * p(2), p(2), f1_sq * p(0), f1_sq * p(1);
  return u;
}

AugmentedSystem build_augmented_system(const Mat34& P2) {
  AugmentedSystem sys;
  for (int k = 0; k < 6; ++k) {
    const int i = kRowTags[k].i - 1;
    const int j = kRowTags[k].j - 1;
    const auto pi = P2.row(i);
    const auto pj = P2.row(j);
    auto r = sys.Ab.row(k);
    r(0) = pi(0) * pj(0) + pi(1) * pj(1);
    r(1) = (i == j && i < 2) ? -1.0 : 0.0;
    r(2) = pi(3) * pj(3);
    r(3) = -(pi(2) * pj(3) + pi(3) * pj(2));
    r(4) = -(pi(0) * pj(3) + pi(3) * pj(0));
    r(5) = -(pi(1) * pj(3) + pi(3) * pj(1));
    r(6) = -pi(2) * pj(2) + ((i == 2 && j == 2) ? 1.0 : 0.0);
  }
  return sys;
}

Eigen::Matrix<double, 5, 7> ReducedSystem::echelon() const {
  Eigen::Matrix<double, 5, 7> E = Eigen::Matrix<double, 5, 7>::Zero();
  E.leftCols<5>().setIdentity();
  E(3, 5) = c;
  E(4, 5) = d;
  E.col(6) << b1, b2, b3, b4, b5;
  return E;
}

ReducedSystem structured_reduce(const AugmentedSystem& sys, const ReduceOptions& opts) {
  using Row = Eigen::Matrix<double, 1, 7>;
  const Row e1 = sys.Ab.row(3);  // (1,1)
  const Row e2 = sys.Ab.row(4);  // (1,2)
  const Vec3 u = e1.segment<3>(3).transpose();
  const Vec3 w = e2.segment<3>(3).transpose();
  const auto row_max = [](const Row& r) { return r.cwiseAbs().maxCoeff(); };

  if (!(u.norm() > opts.pivot_tol * row_max(e1))) {
    throw NumericalError("structured_reduce: pivot below tolerance, singular configuration");
  }
  const Vec3 w_perp = w - (w.dot(u) / u.squaredNorm()) * u;
  if (!(w_perp.norm() > opts.pivot_tol * row_max(e2))) {
    throw NumericalError("structured_reduce: pivot below tolerance, singular configuration");
  }

  ReducedSystem red;
  Eigen::Matrix<double, 3, 4> G;
  for (int k = 0; k < 3; ++k) {
    const Row r = sys.Ab.row(k);
    const Vec3 v = r.segment<3>(3).transpose();
    const double nu = v.dot(w_perp) / w_perp.squaredNorm();
    const double lambda = (v - nu * w).dot(u) / u.squaredNorm();
    const Row g = r - lambda * e1 - nu * e2;
    const double scale = v.norm() + std::abs(lambda) * u.norm() + std::abs(nu) * w.norm();
    if (scale > 0.0) red.structure_residual = std::max(red.structure_residual, g.segment<3>(3).norm() / scale);
    G.row(k) << g.head<3>(), g(6);
  }
  if (red.structure_residual > opts.structure_tol) {
    throw NumericalError("structured_reduce: rows do not share the rank-2 structure of a canonical pair");
  }
  const Vec3 y = gauss_solve<3, 4>(G, opts.pivot_tol, "structured_reduce");

  Eigen::Matrix<double, 2, 4> tail;
  tail.row(0) << e1(3), e1(4), e1(6) - e1.head<3>().dot(y.transpose()), e1(5);
  tail.row(1) << e2(3), e2(4), e2(6) - e2.head<3>().dot(y.transpose()), e2(5);
  const Eigen::Matrix<double, 2, 2> z = gauss_solve<2, 4>(tail, opts.pivot_tol, "structured_reduce");

  red.b1 = y(0);
  red.b2 = y(1);
  red.b3 = y(2);
  red.b4 = z(0, 0);
  red.b5 = z(1, 0);
  red.c = z(0, 1);
  red.d = z(1, 1);
  return red;
}

std::array<UnknownVector, 2> solve_unknowns(const ReducedSystem& red, const SolveOptions& opts) {
  const double x1 = red.b1;
  if (!(x1 > 0.0)) throw NumericalError("solve_unknowns: negative squared focal length for the first camera");
  if (!(red.b2 > 0.0)) throw NumericalError("solve_unknowns: negative squared focal length for the second camera");

  // (1 + d^2 + x1 c^2) x6^2 - 2 (b5 d + x1 b4 c) x6 + (b5^2 + x1 b4^2 - x1 b3) = 0
  const double qa = 1.0 + red.d * red.d + x1 * red.c * red.c;
  const double qb = -2.0 * (red.b5 * red.d + x1 * red.b4 * red.c);
  const double qc = red.b5 * red.b5 + x1 * red.b4 * red.b4 - x1 * red.b3;
  double disc = qb * qb - 4.0 * qa * qc;
  if (disc < 0.0) {
    const double scale = std::max(qb * qb, std::abs(4.0 * qa * qc));
    if (-disc > opts.discriminant_tol * scale) {
      throw NumericalError("solve_unknowns: negative discriminant, no real plane at infinity");
    }
    disc = 0.0;
  }

  std::array<double, 2> roots;
  if (disc == 0.0) {
    roots = {-qb / (2.0 * qa), -qb / (2.0 * qa)};
  } else {
    const double q = -0.5 * (qb + std::copysign(std::sqrt(disc), qb));
    roots = {q / qa, qc / q};
    if (roots[1] < roots[0]) std::swap(roots[0], roots[1]);
  }

  std::array<UnknownVector, 2> out;
  for (int k = 0; k < 2; ++k) {
    const double x6 = roots[k];
    out[k].x << red.b1, red.b2, red.b3, red.b4 - red.c * x6, red.b5 - red.d * x6, x6;
  }
  return out;
}

Mat4 homography_from_solution(double f1, const Vec3& p) {
  if (!(f1 > 0.0)) throw PreconditionError("homography_from_solution: focal length must be positive");
  const Mat3 K1 = calibration_matrix(f1);
  Mat4 H = Mat4::Zero();
  H.topLeftCorner<3, 3>() = K1;
  H.bottomLeftCorner<1, 3>() = -p.transpose() * K1;
  H(3, 3) = 1.0;
  return H;
}

CameraPair metric_pair(const Mat34& P1, const Mat34& P2, const Mat4& H) {
  const Mat34 M1 = P1 * H;
  const Mat34 M2 = P2 * H;
  return {M1 / M1.norm(), M2 / M2.norm()};
}

std::optional<Vec4> triangulate_dlt(const Mat34& P1, const Mat34& P2, const Vec2& x1, const Vec2& x2) {
  Mat4 A;
  A.row(0) = x1.x() * P1.row(2) - P1.row(0);
  A.row(1) = x1.y() * P1.row(2) - P1.row(1);
  A.row(2) = x2.x() * P2.row(2) - P2.row(0);
  A.row(3) = x2.y() * P2.row(2) - P2.row(1);
  for (int r = 0; r < 4; ++r) {
    const double n = A.row(r).norm();
    if (!(n > 0.0)) return std::nullopt;
    A.row(r) /= n;
  }
  Eigen::JacobiSVD<Mat4> svd(A, Eigen::ComputeFullV);
  const Vec4 s = svd.singularValues();
  if (!(s(0) > 0.0) || s(2) / s(0) < 1e-10) return std::nullopt;
  return Vec4(svd.matrixV().col(3));
}

int depth_sign(const Mat34& P, const Vec4& X) {
  const double w = P.row(2).dot(X);
  const double s = w * X(3) * P.leftCols<3>().determinant();
  return s > 0.0 ? 1 : (s < 0.0 ? -1 : 0);
}

CheiralityResult cheirality_select(const std::array<CameraPair, 2>& candidates, const CorrespondenceSet& corrs) {
  CheiralityResult out;
  out.oriented = candidates;
  if (corrs.empty()) return out;

  for (int k = 0; k < 2; ++k) {
    const CameraPair& pair = candidates[k];
    // counts[s1][s2] with index 0 = front, 1 = behind
    int counts[2][2] = {{0, 0}, {0, 0}};
    for (std::size_t i = 0; i < corrs.size(); ++i) {
      const auto X = triangulate_dlt(pair.P1, pair.P2, corrs.x1[i], corrs.x2[i]);
      if (!X) continue;
      ++out.valid[k];
      const int s1 = depth_sign(pair.P1, *X);
      const int s2 = depth_sign(pair.P2, *X);
      if (s1 == 0 || s2 == 0) continue;
      ++counts[s1 > 0 ? 0 : 1][s2 > 0 ? 0 : 1];
    }
    // Negating the translation of camera 2 maps X to diag(1,1,1,-1) X, which flips
    // every depth sign in both cameras.
    const int front1 = counts[0][0] + counts[0][1];
    const int back1 = counts[1][0] + counts[1][1];
    if (back1 > front1) {
      out.reflected[k] = true;
      out.oriented[k].P2.col(3) = -pair.P2.col(3);
      out.cam1_front[k] = back1;
      out.cam2_front[k] = counts[1][1];
    } else {
      out.cam1_front[k] = front1;
      out.cam2_front[k] = counts[0][0];
    }
  }
  if (out.valid[0] == 0 && out.valid[1] == 0) {
    throw NumericalError("cheirality_select: every triangulation is degenerate");
  }
  if (out.cam2_front[0] != out.cam2_front[1]) out.chosen = out.cam2_front[0] > out.cam2_front[1] ? 0 : 1;
  return out;
}

double conditioning_scale(const Mat3& F) {
  const double inner = F.topLeftCorner<2, 2>().norm();
  const double outer = 0.5 * (F.topRightCorner<2, 1>().norm() + F.bottomLeftCorner<1, 2>().norm());
  const double s = outer / inner;
  return std::isfinite(s) && s > 0.0 ? s : 1.0;
}

PairSolution calibrate_pair(const Mat3& F, const CalibrateOptions& opts, const CorrespondenceSet* centered_corrs) {
  if (!F.allFinite()) throw PreconditionError("calibrate_pair: non-finite fundamental matrix");
  PairSolution sol;
  const double s = opts.coordinate_scale > 0.0 ? opts.coordinate_scale : conditioning_scale(F);
  sol.coordinate_scale = s;
  const Mat3 S = Vec3(s, s, 1.0).asDiagonal();
  const Mat3 Fc = S * F * S;

  sol.forward = run_pass(Fc, opts);
  sol.reverse = run_pass(Fc.transpose(), opts);
  const double f1c = std::sqrt(sol.forward.f_sq);
  sol.f1 = s * f1c;
  sol.f2 = s * std::sqrt(sol.reverse.f_sq);

  const Mat34& P1 = sol.forward.canonical.P1;
  const Mat34& P2 = sol.forward.canonical.P2;
  std::array<CameraPair, 2> raw;
  for (int k = 0; k < 2; ++k) {
    SolutionCandidate& cand = sol.candidates[k];
    cand.unknowns = sol.forward.roots[k];
    cand.plane = cand.unknowns.plane();
    cand.H = homography_from_solution(f1c, cand.plane);
    cand.metric = {S * P1 * cand.H, S * P2 * cand.H};
    const Mat3 M = P2.leftCols<3>() * cand.H.topLeftCorner<3, 3>() + P2.col(3) * cand.H.bottomLeftCorner<1, 3>();
    cand.mu = sign_of(M.determinant()) * M.row(2).norm();
    cand.oriented = cand.metric;
    raw[k] = cand.metric;
  }

  const double f2_implied = std::sqrt(sol.forward.scaled_f_sq / sol.forward.omega33);
  const double f1_implied = std::sqrt(sol.reverse.scaled_f_sq / sol.reverse.omega33);
  sol.f2_forward_relerr = std::abs(s * f2_implied / sol.f2 - 1.0);
  sol.f1_reverse_relerr = std::abs(s * f1_implied / sol.f1 - 1.0);
  sol.consistent = sol.f2_forward_relerr <= opts.consistency_tol && sol.f1_reverse_relerr <= opts.consistency_tol;
  sol.kappa_epsilon = s * std::sqrt(sol.forward.scaled_f_sq) / sol.f2;

  if (centered_corrs && !centered_corrs->empty()) {
    const CheiralityResult ch = cheirality_select(raw, *centered_corrs);
    for (int k = 0; k < 2; ++k) {
      sol.candidates[k].oriented = ch.oriented[k];
      sol.candidates[k].reflected = ch.reflected[k];
      sol.candidates[k].cam1_front = ch.cam1_front[k];
      sol.candidates[k].cam2_front = ch.cam2_front[k];
    }
    sol.chosen = ch.chosen;
    sol.votes_considered = std::max(ch.valid[0], ch.valid[1]);
  }

  for (auto& cand : sol.candidates) {
    Mat34 P = cand.oriented.P2;
    if (P.leftCols<3>().determinant() < 0.0) P = -P;
    const KRC krc = decompose_krc(P);
    cand.R = krc.R;
    const Vec3 t = -krc.R * krc.C;
    cand.t = t.norm() > 0.0 ? Vec3(t.normalized()) : t;
  }
  return sol;
}

PairSolution calibrate_pair(const CorrespondenceSet& corrs, const CalibrateOptions& opts) {
  corrs.validate();
  if (corrs.size() < 8) throw PreconditionError("calibrate_pair: need at least 8 correspondences");
  if (opts.center_principal_point && !(corrs.image1.width > 0 && corrs.image1.height > 0 &&
                                       corrs.image2.width > 0 && corrs.image2.height > 0)) {
    throw PreconditionError("calibrate_pair: image sizes are required to center the principal point");
  }
  const CorrespondenceSet cs = opts.center_principal_point ? corrs.centered() : corrs;
  if (opts.use_ransac) {
    const RansacResult r = ransac_f(cs, opts.ransac);
    std::vector<std::size_t> idx;
    for (std::size_t i = 0; i < r.inliers.size(); ++i) {
      if (r.inliers[i]) idx.push_back(i);
    }
    const CorrespondenceSet inl = cs.subset(idx);
    return calibrate_pair(r.F, opts, &inl);
  }
  const Mat3 F = estimate_f_eightpoint(cs);
  return calibrate_pair(F, opts, &cs);
}

bool GeometryReport::all_pass() const {
  return std::all_of(checks.begin(), checks.end(), [](const GeometryCheck& c) { return c.pass; });
}

const GeometryCheck& GeometryReport::get(const std::string& name) const {
  for (const auto& c : checks) {
    if (c.name == name) return c;
  }
  throw PreconditionError("GeometryReport: unknown check " + name);
}

GeometryReport verify_solution_geometry(const PairSolution& sol, double tol) {
  std::array<Mat3, 2> M;
  std::array<Vec3, 2> C, v;
  std::array<Mat3, 2> K, omega;
  const Vec3 a = sol.candidates[0].metric.P2.col(3);
  const Mat3 K2 = calibration_matrix(sol.f2);
  for (int k = 0; k < 2; ++k) {
    const Mat34& P = sol.candidates[k].metric.P2;
    const double s = P.leftCols<3>().row(2).norm();
    M[k] = P.leftCols<3>() / s;
    omega[k] = M[k] * M[k].transpose();
    omega[k] /= omega[k].norm();
    v[k] = viewing_direction(P);
    K[k] = decompose_krc(P).K;
  }
  // Shared gauge: unit-length K2^-1 a after scaling candidate 1 to a unit third row.
  const Vec3 a_hat = a / sol.candidates[0].metric.P2.leftCols<3>().row(2).norm();
  const double g = (K2.inverse() * a_hat).norm();
  for (int k = 0; k < 2; ++k) {
    const double s = sol.candidates[k].metric.P2.leftCols<3>().row(2).norm();
    C[k] = -M[k].inverse() * (a / s / g);
  }

  GeometryReport rep;
  const auto add = [&](const std::string& name, double value, double t, bool pass) {
    rep.checks.push_back({name, value, t, pass});
  };
  const double mirror = (C[0] + C[1]).norm() / C[0].norm();
  add("mirror_centers", mirror, tol, mirror <= tol);
  const double bis1 = std::abs(angle_deg(C[0], v[0]) - angle_deg(C[0], v[1]));
  add("bisector_c1", bis1, tol, bis1 <= tol);
  const double bis2 = std::abs(angle_deg(C[1], v[0]) - angle_deg(C[1], v[1]));
  add("bisector_c2", bis2, tol, bis2 <= tol);
  const double comp1 = std::abs(angle_deg(C[0], v[0]) + angle_deg(C[1], v[0]) - 180.0);
  add("complement_v1", comp1, tol, comp1 <= tol);
  const double comp2 = std::abs(angle_deg(C[0], v[1]) + angle_deg(C[1], v[1]) - 180.0);
  add("complement_v2", comp2, tol, comp2 <= tol);
  const double dets = sign_of(M[0].determinant()) * sign_of(M[1].determinant());
  add("opposite_det_signs", dets, 0.0, dets < 0.0);
  const double kdiff = (K[0] - K[1]).norm() / K[0].norm();
  add("equal_K", kdiff, tol, kdiff <= tol);
  const double odiff = (omega[0] - omega[1]).norm();
  add("equal_omega", odiff, 1e-8, odiff <= 1e-8);
  return rep;
}

}  // namespace linselfcal
