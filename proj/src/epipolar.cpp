#include "linselfcal/epipolar.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <limits>

#include "linselfcal/error.hpp"
#include "linselfcal/random.hpp"

namespace linselfcal {

namespace {

constexpr double kRankTol = 1e-8;

// Similarity moving the centroid to the origin with RMS distance sqrt(2).
Mat3 hartley_transform(std::span<const Vec2> pts) {
  Vec2 centroid = Vec2::Zero();
  for (const auto& p : pts) centroid += p;
  centroid /= static_cast<double>(pts.size());
  double sq = 0.0;
  for (const auto& p : pts) sq += (p - centroid).squaredNorm();
  const double rms = std::sqrt(sq / static_cast<double>(pts.size()));
  if (!(rms > 0.0)) throw NumericalError("estimate_f_eightpoint: all points coincide");
  const double s = std::sqrt(2.0) / rms;
  Mat3 T;
  T << s, 0.0, -s * centroid.x(),
       0.0, s, -s * centroid.y(),
       0.0, 0.0, 1.0;
  return T;
}

Mat3 truncate_rank2(const Mat3& F) {
  Eigen::JacobiSVD<Mat3> svd(F, Eigen::ComputeFullU | Eigen::ComputeFullV);
  Vec3 s = svd.singularValues();
  s(2) = 0.0;
  return svd.matrixU() * s.asDiagonal() * svd.matrixV().transpose();
}

Mat3 sign_normalized(const Mat3& F) {
  Eigen::Index r = 0, c = 0;
  F.cwiseAbs().maxCoeff(&r, &c);
  return F(r, c) < 0.0 ? Mat3(-F) : F;
}

Eigen::JacobiSVD<Mat3> rank2_svd(const Mat3& F, const char* who) {
  Eigen::JacobiSVD<Mat3> svd(F, Eigen::ComputeFullU | Eigen::ComputeFullV);
  const Vec3 s = svd.singularValues();
  if (!(s(0) > 0.0) || s(1) / s(0) <= kRankTol || s(2) / s(0) > kRankTol) {
    throw NumericalError(std::string(who) + ": fundamental matrix must have rank 2");
  }
  return svd;
}

}  // namespace

void CorrespondenceSet::validate() const {
  if (x1.size() != x2.size()) throw PreconditionError("correspondence lists differ in length");
  if (labels && labels->size() != x1.size()) throw PreconditionError("label count differs from match count");
  for (std::size_t i = 0; i < x1.size(); ++i) {
    if (!x1[i].allFinite() || !x2[i].allFinite()) {
      throw PreconditionError("non-finite coordinate in correspondence " + std::to_string(i));
    }
  }
}

CorrespondenceSet CorrespondenceSet::subset(std::span<const std::size_t> indices) const {
  CorrespondenceSet out;
  out.image1 = image1;
  out.image2 = image2;
  if (labels) out.labels.emplace();
  for (std::size_t i : indices) {
    out.add(x1.at(i), x2.at(i));
    if (labels) out.labels->push_back((*labels)[i]);
  }
  return out;
}

CorrespondenceSet CorrespondenceSet::centered() const {
  CorrespondenceSet out = *this;
  const Vec2 c1(0.5 * image1.width, 0.5 * image1.height);
  const Vec2 c2(0.5 * image2.width, 0.5 * image2.height);
  for (auto& p : out.x1) p -= c1;
  for (auto& p : out.x2) p -= c2;
  return out;
}

CorrespondenceSet CorrespondenceSet::swapped() const {
  CorrespondenceSet out = *this;
  std::swap(out.x1, out.x2);
  std::swap(out.image1, out.image2);
  return out;
}

Mat3 estimate_f_eightpoint(std::span<const Vec2> x1, std::span<const Vec2> x2) {
  if (x1.size() != x2.size()) throw PreconditionError("estimate_f_eightpoint: mismatched lists");
  const std::size_t n = x1.size();
  if (n < 8) throw PreconditionError("estimate_f_eightpoint: need at least 8 correspondences");

  const Mat3 T1 = hartley_transform(x1);
  const Mat3 T2 = hartley_transform(x2);
  Eigen::MatrixXd A(n, 9);
  for (std::size_t k = 0; k < n; ++k) {
    const Vec3 p = T1 * x1[k].homogeneous();
    const Vec3 q = T2 * x2[k].homogeneous();
    for (int i = 0; i < 3; ++i) {
      for (int j = 0; j < 3; ++j) A(static_cast<Eigen::Index>(k), 3 * i + j) = q(i) * p(j);
    }
  }
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(A, Eigen::ComputeFullV);
  const Eigen::VectorXd s = svd.singularValues();
  if (!(s(0) > 0.0) || s(7) / s(0) < 1e-12) {
    throw NumericalError("estimate_f_eightpoint: design matrix is rank deficient");
  }
  const Eigen::VectorXd f = svd.matrixV().col(8);
  Mat3 Fn;
  Fn << f(0), f(1), f(2), f(3), f(4), f(5), f(6), f(7), f(8);

  Mat3 F = T2.transpose() * truncate_rank2(Fn) * T1;
  F = truncate_rank2(F);
  F /= F.norm();
  return sign_normalized(F);
}

Mat3 estimate_f_eightpoint(const CorrespondenceSet& corrs) {
  corrs.validate();
  return estimate_f_eightpoint(std::span<const Vec2>(corrs.x1), std::span<const Vec2>(corrs.x2));
}

double sampson_error(const Mat3& F, const Vec3& h1, const Vec3& h2) {
  if (h1.z() == 0.0 || h2.z() == 0.0) return std::numeric_limits<double>::infinity();
  const Vec3 x1 = h1 / h1.z();
  const Vec3 x2 = h2 / h2.z();
  const Vec3 Fx1 = F * x1;
  const Vec3 Ftx2 = F.transpose() * x2;
  const double num = x2.dot(Fx1);
  const double den = Fx1(0) * Fx1(0) + Fx1(1) * Fx1(1) + Ftx2(0) * Ftx2(0) + Ftx2(1) * Ftx2(1);
  if (den == 0.0) return std::numeric_limits<double>::infinity();
  return num * num / den;
}

double sampson_error(const Mat3& F, const Vec2& x1, const Vec2& x2) {
  return sampson_error(F, Vec3(x1.homogeneous()), Vec3(x2.homogeneous()));
}

namespace {

struct Score {
  std::size_t count = 0;
  double total = 0.0;
};

Score score_model(const Mat3& F, const CorrespondenceSet& corrs, double threshold, std::vector<bool>* mask) {
  Score s;
  if (mask) mask->assign(corrs.size(), false);
  for (std::size_t i = 0; i < corrs.size(); ++i) {
    const double e = sampson_error(F, corrs.x1[i], corrs.x2[i]);
    if (e <= threshold) {
      ++s.count;
      s.total += e;
      if (mask) (*mask)[i] = true;
    }
  }
  return s;
}

bool better(const Score& a, const Score& b) {
  return a.count > b.count || (a.count == b.count && a.total < b.total);
}

}  // namespace

RansacResult ransac_f(const CorrespondenceSet& corrs, const RansacOptions& opts) {
  corrs.validate();
  if (opts.iterations == 0) throw PreconditionError("ransac_f: iterations must be positive");
  const std::size_t n = corrs.size();
  if (n < 8) throw PreconditionError("ransac_f: need at least 8 correspondences");

  std::optional<Mat3> best_F;
  Score best;
  std::vector<Vec2> s1(8), s2(8);
  std::vector<std::size_t> sample(8);
  for (std::size_t t = 0; t < opts.iterations; ++t) {
    Rng rng = derived_rng(opts.seed, t);
    std::uniform_int_distribution<std::size_t> pick(0, n - 1);
    for (std::size_t k = 0; k < 8;) {
      const std::size_t idx = pick(rng);
      if (std::find(sample.begin(), sample.begin() + static_cast<std::ptrdiff_t>(k), idx) !=
          sample.begin() + static_cast<std::ptrdiff_t>(k)) {
        continue;
      }
      sample[k] = idx;
      s1[k] = corrs.x1[idx];
      s2[k] = corrs.x2[idx];
      ++k;
    }
    Mat3 F;
    try {
      F = estimate_f_eightpoint(s1, s2);
    } catch (const Error&) {
      continue;
    }
    const Score sc = score_model(F, corrs, opts.threshold, nullptr);
    if (!best_F || better(sc, best)) {
      best = sc;
      best_F = F;
    }
  }
  if (!best_F || best.count < 8) throw NumericalError("ransac_f: no model with at least 8 inliers");

  RansacResult out;
  out.F = *best_F;
  score_model(out.F, corrs, opts.threshold, &out.inliers);
  out.num_inliers = best.count;

  std::vector<Vec2> in1, in2;
  for (std::size_t i = 0; i < n; ++i) {
    if (out.inliers[i]) {
      in1.push_back(corrs.x1[i]);
      in2.push_back(corrs.x2[i]);
    }
  }
  try {
    const Mat3 refit = estimate_f_eightpoint(in1, in2);
    std::vector<bool> mask;
    const Score sc = score_model(refit, corrs, opts.threshold, &mask);
    if (sc.count >= best.count) {
      out.F = refit;
      out.inliers = std::move(mask);
      out.num_inliers = sc.count;
    }
  } catch (const Error&) {
  }
  return out;
}

CanonicalPair canonical_pair(const Mat3& F) {
  const auto svd = rank2_svd(F, "canonical_pair");
  CanonicalPair out;
  out.a = sign_normalized_unit(svd.matrixU().col(2));
  out.P1 = Mat34::Zero();
  out.P1.leftCols<3>() = Mat3::Identity();
  out.P2.leftCols<3>() = skew(out.a) * F;
  out.P2.col(3) = out.a;
  return out;
}

Epipoles epipoles(const Mat3& F) {
  const auto svd = rank2_svd(F, "epipoles");
  return {sign_normalized_unit(svd.matrixV().col(2)), sign_normalized_unit(svd.matrixU().col(2))};
}

Mat3 fundamental_from_cameras(const Mat34& P1, const Mat34& P2) {
  const Vec4 C1 = camera_center(P1);
  const Vec3 e2 = P2 * C1;
  const Eigen::Matrix<double, 4, 3> pinv = P1.transpose() * (P1 * P1.transpose()).inverse();
  return skew(e2) * P2 * pinv;
}

}  // namespace linselfcal
