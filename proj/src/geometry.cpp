#include "linselfcal/geometry.hpp"

#include <Eigen/Dense>
#include <Eigen/Geometry>
#include <cmath>

#include "linselfcal/error.hpp"

namespace linselfcal {

namespace {

constexpr double kRad2Deg = 180.0 / M_PI;

double rank3_ratio(const Mat3& M) {
  Eigen::JacobiSVD<Mat3> svd(M);
  const Vec3 s = svd.singularValues();
  return s(0) > 0.0 ? s(2) / s(0) : 0.0;
}

double det3(const Mat34& P, int skip) {
  Mat3 M;
  int c = 0;
  for (int j = 0; j < 4; ++j) {
    if (j == skip) continue;
    M.col(c++) = P.col(j);
  }
  return M.determinant();
}

}  // namespace

Mat3 skew(const Vec3& v) {
  Mat3 S;
  S << 0.0, -v(2), v(1),
       v(2), 0.0, -v(0),
      -v(1), v(0), 0.0;
  return S;
}

Mat4 dac_canonical() {
  Mat4 Q = Mat4::Zero();
  Q.diagonal() << 1.0, 1.0, 1.0, 0.0;
  return Q;
}

Mat3 project_dual_quadric(const Mat34& P, const Mat4& Q) {
  const Mat3 W = P * Q * P.transpose();
  return 0.5 * (W + W.transpose());
}

Vec4 camera_center(const Mat34& P) {
  Eigen::JacobiSVD<Mat34> svd(P);
  const auto s = svd.singularValues();
  if (!(s(0) > 0.0) || s(2) / s(0) < 1e-12) {
    throw NumericalError("camera_center: camera matrix is rank deficient");
  }
  // Cofactor expansion: C_j = (-1)^(j+1) det(P without column j).
  Vec4 C(det3(P, 0), -det3(P, 1), det3(P, 2), -det3(P, 3));
  if (std::abs(C(3)) > 1e-12 * C.norm()) {
    C /= C(3);
  } else {
    C.normalize();
  }
  return C;
}

KRC decompose_krc(const Mat34& P_in) {
  Mat3 M = P_in.leftCols<3>();
  if (rank3_ratio(M) < 1e-12) {
    throw NumericalError("decompose_krc: left 3x3 block is singular");
  }
  Mat34 P = P_in;
  if (M.determinant() < 0.0) {
    P = -P;
    M = -M;
  }

  // RQ through QR of the row-reversed transpose.
  Mat3 rev = Mat3::Zero();
  rev(0, 2) = rev(1, 1) = rev(2, 0) = 1.0;
  const Mat3 Mt = (rev * M).transpose();
  Eigen::HouseholderQR<Mat3> qr(Mt);
  const Mat3 Q = qr.householderQ();
  const Mat3 U = qr.matrixQR().triangularView<Eigen::Upper>();
  Mat3 K = rev * U.transpose() * rev;
  Mat3 R = rev * Q.transpose();

  const Vec3 signs(K(0, 0) < 0 ? -1.0 : 1.0, K(1, 1) < 0 ? -1.0 : 1.0, K(2, 2) < 0 ? -1.0 : 1.0);
  K = K * signs.asDiagonal();
  R = signs.asDiagonal() * R;

  KRC out;
  out.K = K / K(2, 2);
  out.R = R;
  out.C = camera_center(P).head<3>();
  return out;
}

Vec3 viewing_direction(const Mat34& P) {
  const Mat3 M = P.leftCols<3>();
  if (rank3_ratio(M) < 1e-12) {
    throw NumericalError("viewing_direction: left 3x3 block is singular");
  }
  const Vec3 v = M.determinant() * M.row(2).transpose();
  return v.normalized();
}

double angle_deg(const Vec3& u, const Vec3& v) {
  if (u.squaredNorm() == 0.0 || v.squaredNorm() == 0.0) {
    throw PreconditionError("angle_deg: zero vector");
  }
  return std::atan2(u.cross(v).norm(), u.dot(v)) * kRad2Deg;
}

Eigen::VectorXd normalize_homogeneous(const Eigen::VectorXd& v) {
  Eigen::Index k = 0;
  const double m = v.cwiseAbs().maxCoeff(&k);
  if (m == 0.0) throw PreconditionError("normalize_homogeneous: zero vector");
  return v / v(k);
}

Vec3 sign_normalized_unit(const Vec3& v) {
  Eigen::Index k = 0;
  v.cwiseAbs().maxCoeff(&k);
  const Vec3 u = v.normalized();
  return u(k) < 0.0 ? Vec3(-u) : u;
}

Mat3 rotation_from_axis_angle(const Vec3& axis, double angle_rad) {
  return Eigen::AngleAxisd(angle_rad, axis.normalized()).toRotationMatrix();
}

Mat3 so3_exp(const Vec3& w) {
  const double theta = w.norm();
  if (theta == 0.0) return Mat3::Identity();
  return Eigen::AngleAxisd(theta, w / theta).toRotationMatrix();
}

Vec3 so3_log(const Mat3& R) {
  const Eigen::AngleAxisd aa{Eigen::Quaterniond(R)};
  return aa.angle() * aa.axis();
}

double rotation_angle(const Mat3& R) {
  const Eigen::Quaterniond q(R);
  return 2.0 * std::atan2(q.vec().norm(), std::abs(q.w()));
}

Mat3 project_to_rotation(const Mat3& M) {
  Eigen::JacobiSVD<Mat3> svd(M, Eigen::ComputeFullU | Eigen::ComputeFullV);
  Mat3 D = Mat3::Identity();
  if ((svd.matrixU() * svd.matrixV().transpose()).determinant() < 0.0) D(2, 2) = -1.0;
  return svd.matrixU() * D * svd.matrixV().transpose();
}

bool is_rotation(const Mat3& R, double tol) {
  if (!R.allFinite()) return false;
  const double orth = (R.transpose() * R - Mat3::Identity()).cwiseAbs().maxCoeff();
  return orth <= tol && std::abs(R.determinant() - 1.0) <= tol;
}

Mat3 calibration_matrix(double f) {
  if (!(f > 0.0)) throw PreconditionError("calibration_matrix: focal length must be positive");
  Mat3 K = Mat3::Identity();
  K(0, 0) = K(1, 1) = f;
  return K;
}

Mat34 compose_camera(const Mat3& K, const Mat3& R, const Vec3& C) {
  Mat34 P;
  P.leftCols<3>() = K * R;
  P.col(3) = -K * R * C;
  return P;
}

}  // namespace linselfcal
