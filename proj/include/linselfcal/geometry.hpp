#pragma once

#include <Eigen/Core>

namespace linselfcal {

using Vec2 = Eigen::Vector2d;
using Vec3 = Eigen::Vector3d;
using Vec4 = Eigen::Vector4d;
using Mat3 = Eigen::Matrix3d;
using Mat4 = Eigen::Matrix4d;
using Mat34 = Eigen::Matrix<double, 3, 4>;

// Cross-product matrix: skew(v) * w == v.cross(w).
Mat3 skew(const Vec3& v);

// Absolute dual quadric in a metric frame, diag(1,1,1,0).
Mat4 dac_canonical();

// P Q P^T, symmetrized to remove round-off asymmetry.
Mat3 project_dual_quadric(const Mat34& P, const Mat4& Q);

// Null vector of P, scaled so the last coordinate is 1 when the center is finite.
// Throws NumericalError if rank(P) < 3.
Vec4 camera_center(const Mat34& P);

struct KRC {
  Mat3 K;  // upper triangular, positive diagonal, K(2,2) == 1
  Mat3 R;  // proper rotation
  Vec3 C;  // camera center
};

// P ~ K R [I | -C]. Throws NumericalError if the left 3x3 block is singular.
KRC decompose_krc(const Mat34& P);

// Principal-axis direction det(M) m3, unit length; invariant to the sign and scale of P.
Vec3 viewing_direction(const Mat34& P);

// Angle between two nonzero vectors in degrees, range [0, 180].
double angle_deg(const Vec3& u, const Vec3& v);

// Scales so the largest-magnitude coordinate equals +1. Throws on the zero vector.
Eigen::VectorXd normalize_homogeneous(const Eigen::VectorXd& v);

// Unit vector with its largest-magnitude coordinate made positive.
Vec3 sign_normalized_unit(const Vec3& v);

Mat3 rotation_from_axis_angle(const Vec3& axis, double angle_rad);
Mat3 so3_exp(const Vec3& w);
Vec3 so3_log(const Mat3& R);

// Rotation angle of R in radians, accurate near 0 and near pi.
double rotation_angle(const Mat3& R);

// Nearest rotation in the Frobenius sense.
Mat3 project_to_rotation(const Mat3& M);

bool is_rotation(const Mat3& R, double tol = 1e-9);

Mat3 calibration_matrix(double f);

// P = K R [I | -C].
Mat34 compose_camera(const Mat3& K, const Mat3& R, const Vec3& C);

}  // namespace linselfcal
