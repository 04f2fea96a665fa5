#pragma once

#include <map>
#include <span>
#include <string>
#include <vector>

#include "linselfcal/geometry.hpp"

namespace linselfcal {

// Rotation angle of R S^T in degrees. Throws PreconditionError on non-rotations.
double geodesic_distance(const Mat3& R, const Mat3& S);

struct WeiszfeldOptions {
  int max_iters = 1000;
  double tol = 1e-12;  // radians
};

// Geodesic L1 mean: minimizes the summed rotation angle to the inputs.
Mat3 weiszfeld_single(std::span<const Mat3> rotations, const WeiszfeldOptions& opts = {});

// One reweighted tangent-space step from `current`; returns the step length in radians.
double weiszfeld_step(Mat3& current, std::span<const Mat3> rotations);

// Relative rotations follow R_j = R_ij R_i.
struct RotationEdge {
  int i = 0;
  int j = 0;
  std::vector<Mat3> estimates;
};

struct RotationGraph {
  std::vector<int> nodes;  // isolated nodes may be listed here; edge endpoints are implied
  std::vector<RotationEdge> edges;

  void add(int i, int j, const Mat3& R_ij);
};

struct Registration {
  std::map<int, Mat3> rotations;
  std::map<int, Mat3> initial;            // spanning-tree initialization
  std::vector<double> residual_per_sweep;  // summed edge angle in degrees, index 0 = initial
  int anchor = 0;
};

// Spanning-tree initialization from the smallest node id (fixed to identity), then
// `sweeps` rounds in which every other node takes one Weiszfeld step toward the
// estimates R_ji R_j of its neighbors from the previous round.
Registration register_rotations(const RotationGraph& graph, int sweeps = 20);

// Best alignment of `estimate` onto `truth` by a global rotation G (estimate R_i maps
// to R_i G), chosen as the L1 mean of R_i^T truth_i; returns per-node errors in degrees.
std::map<int, double> aligned_rotation_errors(const std::map<int, Mat3>& estimate, const std::map<int, Mat3>& truth);

// Normalized confidence counts: #{k : |f_k - f_n| <= beta f_n} divided by the maximum.
std::vector<double> confidence_counts(std::span<const double> estimates, double beta = 0.10);

struct FocalEstimate {
  double f = 0;
  int partner = 0;
  double partner_f = 0;
  int sample = 0;  // shared by the two entries of one pair solution
};

class FocalEstimatePool {
 public:
  // Adds f_i to image i's pool and f_k to image k's pool, linked by `sample`.
  void add_pair_estimate(int sample, int image_i, double f_i, int image_k, double f_k);
  const std::vector<FocalEstimate>& estimates(int image) const;
  std::vector<int> images() const;
  bool has(int image) const { return pools_.count(image) > 0; }
  // Checks positivity and that every entry has its partner entry.
  void validate() const;

 private:
  std::map<int, std::vector<FocalEstimate>> pools_;
};

// cc of image i's entries in pool order.
std::vector<double> pool_confidence_counts(const FocalEstimatePool& pool, int image, double beta = 0.10);

// Jcc of image i's entries in pool order: the sum over partner images k of the mean
// partner cc of the in-range estimates that came from pair (i, k).
std::vector<double> joint_confidence(const FocalEstimatePool& pool, int image, double beta = 0.10);

// Jcc of an arbitrary candidate value f for image i.
double joint_confidence_at(const FocalEstimatePool& pool, int image, double f, double beta = 0.10);

enum class FocalMethod { median, cc, jcc };

FocalMethod parse_focal_method(const std::string& name);
const char* focal_method_name(FocalMethod m);

// Ties in cc or Jcc go to the smallest f.
double select_focal(const FocalEstimatePool& pool, int image, FocalMethod method, double beta = 0.10);

double delta_f(double estimate, double truth);

}  // namespace linselfcal
