#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "linselfcal/epipolar.hpp"

namespace linselfcal {

// Longest subsequence whose consecutive elements satisfy s[i] - T <= s[next].
// Returns increasing positions into `seq`. O(n log n); `comparisons`, when given, is
// incremented by the number of value comparisons performed.
std::vector<std::size_t> lis_thresholded(std::span<const double> seq, double T,
                                         std::uint64_t* comparisons = nullptr);

// Both return sorted indices into `corrs`, restricted to `subset` when given.
std::vector<std::size_t> consistent_x(const CorrespondenceSet& corrs, double T,
                                      const std::vector<std::size_t>* subset = nullptr,
                                      std::uint64_t* comparisons = nullptr);
std::vector<std::size_t> consistent_y(const CorrespondenceSet& corrs, double T,
                                      const std::vector<std::size_t>* subset = nullptr,
                                      std::uint64_t* comparisons = nullptr);

struct XyPassSizes {
  std::size_t after_x = 0;
  std::size_t after_y = 0;
  int rounds = 0;
};

// Largest x-consistent subset, then the largest y-consistent subset of it. Further
// x and y rounds run only while a pass removes points, so the result is consistent
// along both axes for the given thresholds.
std::vector<std::size_t> consistent_xy(const CorrespondenceSet& corrs, double Tx, double Ty,
                                       const std::vector<std::size_t>* subset = nullptr,
                                       XyPassSizes* sizes = nullptr, std::uint64_t* comparisons = nullptr);

struct VerificationConfig {
  double alpha = 0.02;
  double min_region = 200.0;  // pixels

  void validate() const;
};

struct VerificationNode {
  int depth = 0;
  double y_lo = 0, y_hi = 0;  // region in image 1
  std::size_t n_in = 0;
  std::size_t n_after_x = 0;
  std::size_t n_after_y = 0;
  double tx = 0, ty = 0;
  bool leaf = false;
  std::vector<std::size_t> kept;  // survivors of this node, sorted
};

struct VerifiedSubset {
  std::vector<std::size_t> indices;  // sorted
  std::vector<VerificationNode> nodes;  // pre-order
  int depth = 0;                        // deepest recursion level reached
  std::uint64_t comparisons = 0;
};

// Order-consistency filter applied recursively on horizontal bands of image 1. Each
// node filters the points its parent kept, with thresholds alpha times the y extent
// (x pass) and x extent (y pass) of its points; bands are split at the median y and
// not split further once a child band would be shorter than min_region.
VerifiedSubset recursive_verify(const CorrespondenceSet& corrs, const VerificationConfig& cfg = {});

struct PrecisionRecall {
  std::optional<double> precision;  // empty when nothing was predicted
  double recall = 0;
  std::size_t true_positives = 0;
};

// Throws PreconditionError when labels contain no positives.
PrecisionRecall verification_metrics(std::span<const std::size_t> predicted, const std::vector<bool>& labels);

// Relaxed order check on consecutive pairs after sorting by image 1 (used by tests
// and diagnostics).
bool is_consistent_x(const CorrespondenceSet& corrs, std::span<const std::size_t> subset, double T);
bool is_consistent_y(const CorrespondenceSet& corrs, std::span<const std::size_t> subset, double T);

}  // namespace linselfcal
