#include "linselfcal/match_verify.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <map>
#include <numeric>

#include "linselfcal/error.hpp"

namespace linselfcal {

namespace {

struct CountingLess {
  std::uint64_t* counter;
  bool operator()(double a, double b) const {
    ++*counter;
    return a < b;
  }
};

struct Run {
  std::size_t count;
  std::size_t id;  // element whose value this run holds; it ends a chain reaching the run's top
};

// Sort indices by (primary coordinate in image 1, coordinate in image 2, index).
void sort_by_axis(const CorrespondenceSet& corrs, std::vector<std::size_t>& idx, int axis, std::uint64_t& counter) {
  std::sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) {
    ++counter;
    const double a1 = corrs.x1[a](axis), b1 = corrs.x1[b](axis);
    if (a1 != b1) return a1 < b1;
    const double a2 = corrs.x2[a](axis), b2 = corrs.x2[b](axis);
    if (a2 != b2) return a2 < b2;
    return a < b;
  });
}

std::vector<std::size_t> consistent_axis(const CorrespondenceSet& corrs, double T, int axis,
                                         const std::vector<std::size_t>* subset, std::uint64_t* comparisons) {
  std::uint64_t counter = 0;
  std::vector<std::size_t> idx;
  if (subset) {
    idx = *subset;
  } else {
    idx.resize(corrs.size());
    std::iota(idx.begin(), idx.end(), std::size_t{0});
  }
  sort_by_axis(corrs, idx, axis, counter);
  std::vector<double> seq(idx.size());
  for (std::size_t k = 0; k < idx.size(); ++k) seq[k] = corrs.x2[idx[k]](axis);
  const auto pos = lis_thresholded(seq, T, &counter);
  std::vector<std::size_t> out(pos.size());
  for (std::size_t k = 0; k < pos.size(); ++k) out[k] = idx[pos[k]];
  std::sort(out.begin(), out.end());
  if (comparisons) *comparisons += counter;
  return out;
}

bool consistent_axis_check(const CorrespondenceSet& corrs, std::span<const std::size_t> subset, double T, int axis) {
  std::vector<std::size_t> idx(subset.begin(), subset.end());
  std::uint64_t unused = 0;
  sort_by_axis(corrs, idx, axis, unused);
  for (std::size_t k = 1; k < idx.size(); ++k) {
    if (corrs.x2[idx[k - 1]](axis) - T > corrs.x2[idx[k]](axis)) return false;
  }
  return true;
}

}  // namespace

std::vector<std::size_t> lis_thresholded(std::span<const double> seq, double T, std::uint64_t* comparisons) {
  if (!(T >= 0.0)) throw PreconditionError("lis_thresholded: threshold must be non-negative");
  const std::size_t n = seq.size();
  std::uint64_t counter = 0;
  // Piles of the patience sort, run-length encoded: the minimal last value of a chain
  // of each length is non-decreasing in the length, so equal values form runs.
  std::map<double, Run, CountingLess> runs(CountingLess{&counter});
  std::vector<std::ptrdiff_t> pred(n, -1);

  for (std::size_t i = 0; i < n; ++i) {
    const double x = seq[i];
    if (std::isnan(x)) throw PreconditionError("lis_thresholded: NaN in sequence");
    const double hi = x + T;
    const auto above_hi = runs.upper_bound(hi);
    if (above_hi != runs.begin()) pred[i] = static_cast<std::ptrdiff_t>(std::prev(above_hi)->second.id);
    // Chains ending in (x, x + T] can be extended by x, and every shorter chain can
    // then end in x as well: those runs collapse into x, and the run just above
    // loses its lowest position to the new longest chain ending in x.
    std::size_t absorbed = 0;
    for (auto it = runs.upper_bound(x); it != above_hi;) {
      absorbed += it->second.count;
      it = runs.erase(it);
    }
    if (above_hi != runs.end() && --above_hi->second.count == 0) runs.erase(above_hi);
    auto [it, inserted] = runs.try_emplace(x, Run{0, i});
    it->second.count += absorbed + 1;
    it->second.id = i;
  }

  std::vector<std::size_t> out;
  if (!runs.empty()) {
    for (auto p = static_cast<std::ptrdiff_t>(runs.rbegin()->second.id); p >= 0; p = pred[static_cast<std::size_t>(p)]) {
      out.push_back(static_cast<std::size_t>(p));
    }
    std::reverse(out.begin(), out.end());
  }
  if (comparisons) *comparisons += counter;
  return out;
}

std::vector<std::size_t> consistent_x(const CorrespondenceSet& corrs, double T, const std::vector<std::size_t>* subset,
                                      std::uint64_t* comparisons) {
  return consistent_axis(corrs, T, 0, subset, comparisons);
}

std::vector<std::size_t> consistent_y(const CorrespondenceSet& corrs, double T, const std::vector<std::size_t>* subset,
                                      std::uint64_t* comparisons) {
  return consistent_axis(corrs, T, 1, subset, comparisons);
}

std::vector<std::size_t> consistent_xy(const CorrespondenceSet& corrs, double Tx, double Ty,
                                       const std::vector<std::size_t>* subset, XyPassSizes* sizes,
                                       std::uint64_t* comparisons) {
  XyPassSizes local;
  std::vector<std::size_t> cur = consistent_x(corrs, Tx, subset, comparisons);
  local.after_x = cur.size();
  cur = consistent_y(corrs, Ty, &cur, comparisons);
  local.rounds = 1;
  while (!consistent_axis_check(corrs, cur, Tx, 0)) {
    cur = consistent_x(corrs, Tx, &cur, comparisons);
    cur = consistent_y(corrs, Ty, &cur, comparisons);
    ++local.rounds;
  }
  local.after_y = cur.size();
  if (sizes) *sizes = local;
  return cur;
}

void VerificationConfig::validate() const {
  if (!(alpha >= 0.0 && alpha < 1.0)) throw PreconditionError("VerificationConfig: alpha must be in [0, 1)");
  if (!(min_region > 0.0)) throw PreconditionError("VerificationConfig: min_region must be positive");
}

VerifiedSubset recursive_verify(const CorrespondenceSet& corrs, const VerificationConfig& cfg) {
  cfg.validate();
  corrs.validate();
  VerifiedSubset out;
  if (corrs.empty()) return out;

  double lo = 0.0, hi = corrs.image1.height;
  if (!(hi > 0.0)) {
    const auto [mn, mx] = std::minmax_element(corrs.x1.begin(), corrs.x1.end(),
                                              [](const Vec2& a, const Vec2& b) { return a.y() < b.y(); });
    lo = mn->y();
    hi = mx->y();
  }

  std::function<std::vector<std::size_t>(std::vector<std::size_t>, double, double, int)> visit;
  visit = [&](std::vector<std::size_t> input, double y_lo, double y_hi, int depth) -> std::vector<std::size_t> {
    out.depth = std::max(out.depth, depth);
    const std::size_t node_id = out.nodes.size();
    out.nodes.emplace_back();
    VerificationNode node;
    node.depth = depth;
    node.y_lo = y_lo;
    node.y_hi = y_hi;
    node.n_in = input.size();

    if (!input.empty()) {
      double xmin = corrs.x1[input[0]].x(), xmax = xmin, ymin = corrs.x1[input[0]].y(), ymax = ymin;
      for (std::size_t i : input) {
        xmin = std::min(xmin, corrs.x1[i].x());
        xmax = std::max(xmax, corrs.x1[i].x());
        ymin = std::min(ymin, corrs.x1[i].y());
        ymax = std::max(ymax, corrs.x1[i].y());
      }
      node.tx = cfg.alpha * (ymax - ymin);
      node.ty = cfg.alpha * (xmax - xmin);
    }
    XyPassSizes sizes;
    node.kept = consistent_xy(corrs, node.tx, node.ty, &input, &sizes, &out.comparisons);
    node.n_after_x = sizes.after_x;
    node.n_after_y = sizes.after_y;

    std::vector<std::size_t> result = node.kept;
    bool split = false;
    if (node.kept.size() >= 2) {
      std::vector<std::size_t> by_y = node.kept;
      std::sort(by_y.begin(), by_y.end(), [&](std::size_t a, std::size_t b) {
        ++out.comparisons;
        const double ya = corrs.x1[a].y(), yb = corrs.x1[b].y();
        return ya != yb ? ya < yb : a < b;
      });
      const std::size_t n_low = (by_y.size() + 1) / 2;
      const double boundary = 0.5 * (corrs.x1[by_y[n_low - 1]].y() + corrs.x1[by_y[n_low]].y());
      std::vector<std::size_t> low(by_y.begin(), by_y.begin() + static_cast<std::ptrdiff_t>(n_low));
      std::vector<std::size_t> high(by_y.begin() + static_cast<std::ptrdiff_t>(n_low), by_y.end());
      std::sort(low.begin(), low.end());
      std::sort(high.begin(), high.end());
      const bool go_low = boundary - y_lo >= cfg.min_region;
      const bool go_high = y_hi - boundary >= cfg.min_region;
      if (go_low || go_high) {
        split = true;
        std::vector<std::size_t> kept_low = go_low ? visit(low, y_lo, boundary, depth + 1) : low;
        std::vector<std::size_t> kept_high = go_high ? visit(high, boundary, y_hi, depth + 1) : high;
        result.clear();
        std::merge(kept_low.begin(), kept_low.end(), kept_high.begin(), kept_high.end(), std::back_inserter(result));
      }
    }
    node.leaf = !split;
    out.nodes[node_id] = std::move(node);
    return result;
  };

  std::vector<std::size_t> all(corrs.size());
  std::iota(all.begin(), all.end(), std::size_t{0});
  out.indices = visit(all, lo, hi, 0);
  return out;
}

PrecisionRecall verification_metrics(std::span<const std::size_t> predicted, const std::vector<bool>& labels) {
  const auto positives = static_cast<std::size_t>(std::count(labels.begin(), labels.end(), true));
  if (positives == 0) throw PreconditionError("verification_metrics: labels contain no inliers");
  PrecisionRecall pr;
  for (std::size_t i : predicted) {
    if (i >= labels.size()) throw PreconditionError("verification_metrics: predicted index out of range");
    pr.true_positives += labels[i] ? 1 : 0;
  }
  if (!predicted.empty()) pr.precision = static_cast<double>(pr.true_positives) / static_cast<double>(predicted.size());
  pr.recall = static_cast<double>(pr.true_positives) / static_cast<double>(positives);
  return pr;
}

bool is_consistent_x(const CorrespondenceSet& corrs, std::span<const std::size_t> subset, double T) {
  return consistent_axis_check(corrs, subset, T, 0);
}

bool is_consistent_y(const CorrespondenceSet& corrs, std::span<const std::size_t> subset, double T) {
  return consistent_axis_check(corrs, subset, T, 1);
}

}  // namespace linselfcal
