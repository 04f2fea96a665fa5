#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "linselfcal/geometry.hpp"

namespace linselfcal {

struct ImageInfo {
  std::string id;
  double width = 0.0;
  double height = 0.0;
};

// Ordered point matches. Coordinates are pixels; whether they are relative to the
// top-left corner or to the principal point is up to the caller (see centered()).
struct CorrespondenceSet {
  std::vector<Vec2> x1;
  std::vector<Vec2> x2;
  std::optional<std::vector<bool>> labels;
  ImageInfo image1;
  ImageInfo image2;

  std::size_t size() const { return x1.size(); }
  bool empty() const { return x1.empty(); }
  void add(const Vec2& a, const Vec2& b) {
    x1.push_back(a);
    x2.push_back(b);
  }
  // Throws PreconditionError on mismatched lengths or non-finite values.
  void validate() const;
  CorrespondenceSet subset(std::span<const std::size_t> indices) const;
  // Coordinates shifted so each image's center (width/2, height/2) is the origin.
  CorrespondenceSet centered() const;
  // Swaps the roles of the two images.
  CorrespondenceSet swapped() const;
};

struct Epipoles {
  Vec3 e;  // F e = 0
  Vec3 a;  // F^T a = 0
};

struct CanonicalPair {
  Mat34 P1;  // [I | 0]
  Mat34 P2;  // [[a]x F | a]
  Vec3 a;
};

// Hartley-normalized linear estimate, rank 2, unit Frobenius norm.
Mat3 estimate_f_eightpoint(std::span<const Vec2> x1, std::span<const Vec2> x2);
Mat3 estimate_f_eightpoint(const CorrespondenceSet& corrs);

// First-order geometric error in squared pixels; +inf when the gradient vanishes.
// Homogeneous inputs are dehomogenized first; points at infinity give +inf.
double sampson_error(const Mat3& F, const Vec3& x1, const Vec3& x2);
double sampson_error(const Mat3& F, const Vec2& x1, const Vec2& x2);

struct RansacOptions {
  std::size_t iterations = 1000;
  double threshold = 1.0;  // squared pixels
  std::uint64_t seed = 1;
};

struct RansacResult {
  Mat3 F;
  std::vector<bool> inliers;
  std::size_t num_inliers = 0;
};

// Minimal samples are drawn per trial from (seed, trial), so results do not
// depend on evaluation order.
RansacResult ransac_f(const CorrespondenceSet& corrs, const RansacOptions& opts);

// Both throw NumericalError unless rank(F) == 2.
CanonicalPair canonical_pair(const Mat3& F);
Epipoles epipoles(const Mat3& F);

// F with x2^T F x1 = 0 for the camera pair, F = [e']x P2 P1^+.
Mat3 fundamental_from_cameras(const Mat34& P1, const Mat34& P2);

}  // namespace linselfcal
