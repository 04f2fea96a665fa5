#include "linselfcal/averaging.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <set>
#include <utility>

#include "linselfcal/error.hpp"

namespace linselfcal {

namespace {

constexpr double kRad2Deg = 180.0 / M_PI;
constexpr double kCoincident = 1e-12;

void require_rotation(const Mat3& R, const char* who) {
  if (!is_rotation(R, 1e-9)) throw PreconditionError(std::string(who) + ": input is not a rotation matrix");
}

}  // namespace

double geodesic_distance(const Mat3& R, const Mat3& S) {
  require_rotation(R, "geodesic_distance");
  require_rotation(S, "geodesic_distance");
  return rotation_angle(R * S.transpose()) * kRad2Deg;
}

double weiszfeld_step(Mat3& current, std::span<const Mat3> rotations) {
  Vec3 num = Vec3::Zero();
  double den = 0.0;
  int coincident = 0;
  for (const Mat3& R : rotations) {
    const Vec3 v = so3_log(R * current.transpose());
    const double n = v.norm();
    if (n < kCoincident) {
      ++coincident;
      continue;
    }
    num += v / n;
    den += 1.0 / n;
  }
  if (den == 0.0) return 0.0;
  Vec3 step = num / den;
  if (coincident > 0) {
    // The iterate sits on input rotations: it is optimal unless the pull of the
    // remaining inputs exceeds their count, in which case the step is shortened.
    const double pull = num.norm();
    if (pull <= coincident) return 0.0;
    step *= 1.0 - coincident / pull;
  }
  current = so3_exp(step) * current;
  return step.norm();
}

Mat3 weiszfeld_single(std::span<const Mat3> rotations, const WeiszfeldOptions& opts) {
  if (rotations.empty()) throw PreconditionError("weiszfeld_single: no rotations");
  Mat3 sum = Mat3::Zero();
  for (const Mat3& R : rotations) {
    require_rotation(R, "weiszfeld_single");
    sum += R;
  }
  if (rotations.size() == 1) return rotations[0];
  Mat3 S = project_to_rotation(sum);
  for (int it = 0; it < opts.max_iters; ++it) {
    if (weiszfeld_step(S, rotations) < opts.tol) break;
  }
  return project_to_rotation(S);
}

void RotationGraph::add(int i, int j, const Mat3& R_ij) {
  for (auto& e : edges) {
    if (e.i == i && e.j == j) {
      e.estimates.push_back(R_ij);
      return;
    }
  }
  edges.push_back({i, j, {R_ij}});
}

Registration register_rotations(const RotationGraph& graph, int sweeps) {
  if (sweeps < 0) throw PreconditionError("register_rotations: sweeps must be non-negative");
  std::set<int> nodes(graph.nodes.begin(), graph.nodes.end());
  std::map<std::pair<int, int>, std::vector<Mat3>> grouped;
  for (const auto& e : graph.edges) {
    if (e.i == e.j) throw PreconditionError("register_rotations: self-loop edge");
    if (e.estimates.empty()) throw PreconditionError("register_rotations: edge without estimates");
    nodes.insert(e.i);
    nodes.insert(e.j);
    auto& bucket = grouped[{std::min(e.i, e.j), std::max(e.i, e.j)}];
    for (const Mat3& R : e.estimates) {
      require_rotation(R, "register_rotations");
      bucket.push_back(e.i < e.j ? R : Mat3(R.transpose()));
    }
  }
  if (nodes.empty()) throw PreconditionError("register_rotations: empty graph");

  std::map<std::pair<int, int>, Mat3> rel;
  std::map<int, std::vector<int>> adj;
  for (const auto& [key, ests] : grouped) {
    rel[key] = weiszfeld_single(ests);
    adj[key.first].push_back(key.second);
    adj[key.second].push_back(key.first);
  }
  for (auto& [n, list] : adj) std::sort(list.begin(), list.end());
  // R_{i -> j}, with R_j = R_{i -> j} R_i.
  const auto edge_rot = [&](int i, int j) -> Mat3 {
    return i < j ? rel.at({i, j}) : Mat3(rel.at({j, i}).transpose());
  };

  Registration out;
  out.anchor = *nodes.begin();
  out.rotations[out.anchor] = Mat3::Identity();
  std::deque<int> queue{out.anchor};
  while (!queue.empty()) {
    const int i = queue.front();
    queue.pop_front();
    for (int j : adj[i]) {
      if (out.rotations.count(j)) continue;
      out.rotations[j] = edge_rot(i, j) * out.rotations[i];
      queue.push_back(j);
    }
  }
  if (out.rotations.size() != nodes.size()) throw PreconditionError("register_rotations: graph is disconnected");
  out.initial = out.rotations;

  const auto residual = [&](const std::map<int, Mat3>& rots) {
    double total = 0.0;
    for (const auto& [key, R] : rel) {
      total += rotation_angle(R * rots.at(key.first) * rots.at(key.second).transpose()) * kRad2Deg;
    }
    return total;
  };
  out.residual_per_sweep.push_back(residual(out.rotations));

  std::vector<Mat3> ests;
  for (int s = 0; s < sweeps; ++s) {
    std::map<int, Mat3> next = out.rotations;
    for (auto& [i, Ri] : next) {
      if (i == out.anchor) continue;
      ests.clear();
      for (int j : adj[i]) ests.push_back(edge_rot(j, i) * out.rotations.at(j));
      weiszfeld_step(Ri, ests);
      Ri = project_to_rotation(Ri);
    }
    out.rotations = std::move(next);
    out.residual_per_sweep.push_back(residual(out.rotations));
  }
  return out;
}

std::map<int, double> aligned_rotation_errors(const std::map<int, Mat3>& estimate, const std::map<int, Mat3>& truth) {
  std::vector<Mat3> offsets;
  for (const auto& [id, R] : estimate) {
    const auto it = truth.find(id);
    if (it != truth.end()) offsets.push_back(R.transpose() * it->second);
  }
  if (offsets.empty()) throw PreconditionError("aligned_rotation_errors: no common nodes");
  const Mat3 G = weiszfeld_single(offsets);
  std::map<int, double> err;
  for (const auto& [id, R] : estimate) {
    const auto it = truth.find(id);
    if (it != truth.end()) err[id] = rotation_angle(R * G * it->second.transpose()) * kRad2Deg;
  }
  return err;
}

std::vector<double> confidence_counts(std::span<const double> estimates, double beta) {
  if (estimates.empty()) throw PreconditionError("confidence_counts: no estimates");
  if (!(beta > 0.0)) throw PreconditionError("confidence_counts: beta must be positive");
  std::vector<double> sorted(estimates.begin(), estimates.end());
  std::sort(sorted.begin(), sorted.end());
  std::vector<double> cc(estimates.size());
  double best = 0.0;
  for (std::size_t n = 0; n < estimates.size(); ++n) {
    const double f = estimates[n];
    const double r = beta * f;
    const auto lo = std::partition_point(sorted.begin(), sorted.end(), [&](double g) { return g < f && f - g > r; });
    const auto hi = std::partition_point(lo, sorted.end(), [&](double g) { return g <= f || g - f <= r; });
    cc[n] = static_cast<double>(hi - lo);
    best = std::max(best, cc[n]);
  }
  for (double& c : cc) c /= best;
  return cc;
}

void FocalEstimatePool::add_pair_estimate(int sample, int image_i, double f_i, int image_k, double f_k) {
  if (image_i == image_k) throw PreconditionError("FocalEstimatePool: a pair needs two different images");
  if (!(f_i > 0.0) || !(f_k > 0.0)) throw PreconditionError("FocalEstimatePool: focal lengths must be positive");
  pools_[image_i].push_back({f_i, image_k, f_k, sample});
  pools_[image_k].push_back({f_k, image_i, f_i, sample});
}

const std::vector<FocalEstimate>& FocalEstimatePool::estimates(int image) const {
  const auto it = pools_.find(image);
  if (it == pools_.end() || it->second.empty()) {
    throw PreconditionError("FocalEstimatePool: no estimates for image " + std::to_string(image));
  }
  return it->second;
}

std::vector<int> FocalEstimatePool::images() const {
  std::vector<int> ids;
  for (const auto& [id, list] : pools_) ids.push_back(id);
  return ids;
}

void FocalEstimatePool::validate() const {
  std::set<std::tuple<int, int, int>> keys;  // (image, partner, sample)
  for (const auto& [id, list] : pools_) {
    for (const auto& e : list) {
      if (!(e.f > 0.0) || !(e.partner_f > 0.0)) throw PreconditionError("FocalEstimatePool: non-positive focal length");
      keys.insert({id, e.partner, e.sample});
    }
  }
  for (const auto& [id, list] : pools_) {
    for (const auto& e : list) {
      if (!keys.count({e.partner, id, e.sample})) {
        throw PreconditionError("FocalEstimatePool: entry without a partner entry (sample " + std::to_string(e.sample) + ")");
      }
    }
  }
}

std::vector<double> pool_confidence_counts(const FocalEstimatePool& pool, int image, double beta) {
  const auto& list = pool.estimates(image);
  std::vector<double> f(list.size());
  for (std::size_t n = 0; n < list.size(); ++n) f[n] = list[n].f;
  return confidence_counts(f, beta);
}

namespace {

// cc of each entry's partner estimate, in image i's pool order.
std::vector<double> partner_confidence(const FocalEstimatePool& pool, int image, double beta) {
  const auto& list = pool.estimates(image);
  std::map<int, std::map<int, double>> by_partner;  // partner image -> sample -> cc
  for (const auto& e : list) {
    if (by_partner.count(e.partner)) continue;
    const auto& plist = pool.estimates(e.partner);
    const auto cc = pool_confidence_counts(pool, e.partner, beta);
    auto& m = by_partner[e.partner];
    for (std::size_t n = 0; n < plist.size(); ++n) {
      if (plist[n].partner == image) m[plist[n].sample] = cc[n];
    }
  }
  std::vector<double> out(list.size());
  for (std::size_t n = 0; n < list.size(); ++n) {
    const auto& m = by_partner.at(list[n].partner);
    const auto it = m.find(list[n].sample);
    if (it == m.end()) throw PreconditionError("joint_confidence: missing partner entry");
    out[n] = it->second;
  }
  return out;
}

double jcc_at(const std::vector<FocalEstimate>& list, const std::vector<double>& partner_cc, double f, double beta) {
  std::map<int, std::pair<double, int>> acc;  // partner image -> (sum cc, count)
  const double r = beta * f;
  for (std::size_t m = 0; m < list.size(); ++m) {
    if (std::abs(list[m].f - f) <= r) {
      auto& a = acc[list[m].partner];
      a.first += partner_cc[m];
      a.second += 1;
    }
  }
  double total = 0.0;
  for (const auto& [k, a] : acc) total += a.first / a.second;
  return total;
}

}  // namespace

std::vector<double> joint_confidence(const FocalEstimatePool& pool, int image, double beta) {
  if (!(beta > 0.0)) throw PreconditionError("joint_confidence: beta must be positive");
  const auto& list = pool.estimates(image);
  const auto pcc = partner_confidence(pool, image, beta);
  std::vector<double> out(list.size());
  for (std::size_t n = 0; n < list.size(); ++n) out[n] = jcc_at(list, pcc, list[n].f, beta);
  return out;
}

double joint_confidence_at(const FocalEstimatePool& pool, int image, double f, double beta) {
  if (!(beta > 0.0)) throw PreconditionError("joint_confidence: beta must be positive");
  const auto& list = pool.estimates(image);
  return jcc_at(list, partner_confidence(pool, image, beta), f, beta);
}

FocalMethod parse_focal_method(const std::string& name) {
  if (name == "median") return FocalMethod::median;
  if (name == "cc") return FocalMethod::cc;
  if (name == "jcc") return FocalMethod::jcc;
  throw PreconditionError("unknown focal averaging method: " + name);
}

const char* focal_method_name(FocalMethod m) {
  switch (m) {
    case FocalMethod::median: return "median";
    case FocalMethod::cc: return "cc";
    case FocalMethod::jcc: return "jcc";
  }
  return "";
}

double select_focal(const FocalEstimatePool& pool, int image, FocalMethod method, double beta) {
  const auto& list = pool.estimates(image);
  if (method == FocalMethod::median) {
    std::vector<double> f(list.size());
    for (std::size_t n = 0; n < list.size(); ++n) f[n] = list[n].f;
    std::sort(f.begin(), f.end());
    const std::size_t m = f.size() / 2;
    return f.size() % 2 ? f[m] : 0.5 * (f[m - 1] + f[m]);
  }
  const auto score = method == FocalMethod::cc ? pool_confidence_counts(pool, image, beta)
                                               : joint_confidence(pool, image, beta);
  std::size_t best = 0;
  for (std::size_t n = 1; n < list.size(); ++n) {
    if (score[n] > score[best] || (score[n] == score[best] && list[n].f < list[best].f)) best = n;
  }
  return list[best].f;
}

double delta_f(double estimate, double truth) {
  if (!(truth > 0.0)) throw PreconditionError("delta_f: truth must be positive");
  return std::abs(estimate / truth - 1.0);
}

}  // namespace linselfcal
