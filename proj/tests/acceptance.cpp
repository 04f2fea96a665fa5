// Acceptance suite: one PASS/FAIL line per criterion, with the tolerances pinned here.
// Exit status is nonzero when any criterion fails.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <random>
#include <string>
#include <vector>

#include "linselfcal/averaging.hpp"
#include "linselfcal/error.hpp"
#include "linselfcal/match_verify.hpp"
#include "linselfcal/selfcalib.hpp"
#include "linselfcal/synth.hpp"
#include "oracles.hpp"

using namespace linselfcal;

namespace {

int failures = 0;

void report(const char* id, bool pass, const std::string& detail) {
  std::printf("%s %s: %s\n", pass ? "PASS" : "FAIL", id, detail.c_str());
  std::fflush(stdout);
  if (!pass) ++failures;
}

std::string fmt(const char* f, double a = 0, double b = 0, double c = 0, double d = 0) {
  char buf[256];
  std::snprintf(buf, sizeof buf, f, a, b, c, d);
  return buf;
}

// Index of the candidate whose rotation is closer to the truth.
int correct_candidate(const PairSolution& sol, const SyntheticScene& scene) {
  const double e0 = relative_rotation_error(sol.candidates[0].R, scene.R[0], scene.R[1]);
  const double e1 = relative_rotation_error(sol.candidates[1].R, scene.R[0], scene.R[1]);
  return e0 <= e1 ? 0 : 1;
}

// Criteria 1 and 2 share the same 1000 noiseless pairs.
void noiseless_pairs() {
  constexpr int kPairs = 1000;
  constexpr double kFocalTol = 1e-6, kAngleTol = 1e-4, kRuntime = 30.0, kRelationTol = 1e-6;
  std::mt19937_64 rng(2024);
  std::uniform_real_distribution<double> uf(800, 1500);
  int ok = 0, relations_ok = 0, solved = 0;
  double worst_f = 0, worst_R = 0, worst_t = 0;
  double elapsed = 0;
  for (int k = 0; k < kPairs; ++k) {
    SceneConfig cfg;
    cfg.f1 = uf(rng);
    cfg.f2 = uf(rng);
    cfg.seed = 10000 + k;
    const SceneData d = make_scene(cfg);
    const auto t0 = std::chrono::steady_clock::now();
    PairSolution sol;
    try {
      sol = calibrate_pair(d.corrs);
    } catch (const Error&) {
      elapsed += std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
      continue;
    }
    elapsed += std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    ++solved;
    const PairErrorReport e = evaluate_pair(d.scene, sol);
    const double df = std::max(e.df1, e.df2);
    worst_f = std::max(worst_f, df);
    worst_R = std::max(worst_R, e.dR);
    worst_t = std::max(worst_t, e.dt);
    if (df < kFocalTol && e.dR < kAngleTol && e.dt < kAngleTol) ++ok;
    if (verify_solution_geometry(sol, kRelationTol).all_pass()) ++relations_ok;
  }
  report("noiseless_exact_recovery", ok == kPairs && elapsed < kRuntime,
         fmt("%.0f/1000 pairs exact (max df %.2e, max dR %.2e deg", ok, worst_f, worst_R) +
             fmt(", max dt %.2e deg), solve time %.2f s", worst_t, elapsed));
  report("geometry_relations", relations_ok == kPairs && solved == kPairs,
         fmt("%.0f/1000 pairs pass all relations at tol 1e-6", relations_ok));
}

void cheirality() {
  constexpr int kNoiseless = 500, kNoisy = 500;
  constexpr double kNoisyRate = 0.99;
  std::mt19937_64 rng(77);
  std::uniform_real_distribution<double> uf(800, 1500);
  int clean_ok = 0;
  for (int k = 0; k < kNoiseless; ++k) {
    SceneConfig cfg;
    cfg.n_points = 20;
    cfg.f1 = uf(rng);
    cfg.f2 = uf(rng);
    cfg.seed = 20000 + k;
    const SceneData d = make_scene(cfg);
    const PairSolution sol = calibrate_pair(d.corrs);
    if (sol.chosen && *sol.chosen == correct_candidate(sol, d.scene) &&
        sol.best().cam2_front == static_cast<int>(d.corrs.size())) {
      ++clean_ok;
    }
  }
  int solved = 0, noisy_ok = 0;
  for (int k = 0; k < kNoisy; ++k) {
    SceneConfig cfg;
    cfg.f1 = uf(rng);
    cfg.f2 = uf(rng);
    cfg.sigma = 1.0;
    cfg.seed = 30000 + k;
    const SceneData d = make_scene(cfg);
    PairSolution sol;
    try {
      sol = calibrate_pair(d.corrs);
    } catch (const NumericalError&) {
      continue;
    }
    ++solved;
    if (sol.chosen && *sol.chosen == correct_candidate(sol, d.scene)) ++noisy_ok;
  }
  const double rate = solved ? static_cast<double>(noisy_ok) / solved : 0.0;
  report("cheirality_selection", clean_ok == kNoiseless && rate >= kNoisyRate && solved >= kNoisy * 0.9,
         fmt("noiseless 20-point: %.0f/500 correct; sigma=1: %.0f/%.0f solved instances correct (%.4f)", clean_ok,
             noisy_ok, solved, rate));
}

void scale_invariance() {
  constexpr double kTol = 1e-8;
  double worst = 0, worst_R = 0;
  for (int k = 0; k < 200; ++k) {
    SceneConfig cfg;
    cfg.seed = 40000 + k;
    cfg.f1 = 800 + 3.5 * k;
    cfg.f2 = 1500 - 2.5 * k;
    const SceneData d = make_scene(cfg);
    const Mat3 F = d.scene.fundamental_centered();
    const PairSolution ref = calibrate_pair(F);
    for (double s : {1e-3, 1.0, 1e3}) {
      const PairSolution x = calibrate_pair(s * F);
      worst = std::max({worst, std::abs(x.f1 / ref.f1 - 1), std::abs(x.f2 / ref.f2 - 1)});
      for (std::size_t c = 0; c < 2; ++c) {
        worst_R = std::max(worst_R, (x.candidates[c].R - ref.candidates[c].R).norm());
      }
    }
  }
  report("scale_invariance", worst < kTol && worst_R < kTol,
         fmt("over F*{1e-3,1,1e3}: max relative focal change %.2e, max candidate rotation change %.2e", worst,
             worst_R));
}

void lis_oracle_and_complexity() {
  constexpr int kCases = 10000;
  constexpr double kMaxRatio = 4.0, kMaxGrowth = 1.5;
  std::mt19937_64 rng(5);
  std::uniform_int_distribution<int> len(0, 12), lev(1, 12);
  std::uniform_real_distribution<double> thr(0.1, 3);
  int agree = 0;
  for (int k = 0; k < kCases; ++k) {
    const int n = len(rng);
    std::uniform_int_distribution<int> val(0, lev(rng));
    std::vector<double> s(static_cast<std::size_t>(n));
    for (auto& v : s) v = val(rng);
    const double T = k % 2 == 0 ? 0.0 : std::round(thr(rng) * 4) / 4;
    const auto pos = lis_thresholded(s, T);
    if (pos.size() == oracle::brute_force_lis(s, T) && oracle::is_relaxed_chain(s, pos, T)) ++agree;
  }
  std::vector<double> ratios;
  for (std::size_t n : {1000u, 10000u, 100000u}) {
    std::uniform_real_distribution<double> u(0, 1000);
    std::vector<double> s(n);
    for (auto& v : s) v = u(rng);
    std::uint64_t ops = 0;
    lis_thresholded(s, 5.0, &ops);
    ratios.push_back(static_cast<double>(ops) / (static_cast<double>(n) * std::log2(static_cast<double>(n))));
  }
  const bool bounded = *std::max_element(ratios.begin(), ratios.end()) < kMaxRatio && ratios[2] < kMaxGrowth * ratios[0];
  report("lis_oracle_complexity", agree == kCases && bounded,
         fmt("%.0f/10000 match brute force; comparisons/(n log2 n) = %.3f, %.3f, %.3f", agree, ratios[0], ratios[1],
             ratios[2]));
}

void verification() {
  constexpr int kSeeds = 50;
  constexpr double kPrecision = 0.95, kRecall = 0.8;
  const std::vector<double> alphas{0.02, 0.04, 0.06, 0.08, 0.10, 0.12, 0.14, 0.16, 0.18, 0.20};
  std::vector<double> P(alphas.size(), 0.0), R(alphas.size(), 0.0);
  for (int s = 0; s < kSeeds; ++s) {
    FacadeConfig fc;
    fc.seed = static_cast<std::uint64_t>(s + 1);
    const CorrespondenceSet cs = make_facade_matches(fc);
    for (std::size_t a = 0; a < alphas.size(); ++a) {
      VerificationConfig vc;
      vc.alpha = alphas[a];
      const auto pr = verification_metrics(recursive_verify(cs, vc).indices, *cs.labels);
      P[a] += pr.precision.value_or(0.0) / kSeeds;
      R[a] += pr.recall / kSeeds;
    }
  }
  bool monotone = true;
  for (std::size_t a = 1; a < alphas.size(); ++a) monotone = monotone && P[a] <= P[a - 1] && R[a] >= R[a - 1];
  report("verification_precision_recall", P[0] >= kPrecision && R[0] >= kRecall && monotone,
         fmt("alpha=0.02: P %.4f R %.4f; alpha=0.20: P %.4f R %.4f", P[0], R[0], P.back(), R.back()) +
             (monotone ? "; means monotone over alpha" : "; means NOT monotone over alpha"));
}

void focal_averaging() {
  constexpr int kSeeds = 100;
  double sums[3] = {0, 0, 0};
  int count = 0;
  for (int s = 0; s < kSeeds; ++s) {
    FocalPoolConfig pc;
    pc.seed = static_cast<std::uint64_t>(s + 1);
    const FocalPoolData d = make_bimodal_focal_pool(pc);
    for (const auto& [img, f] : d.truth) {
      int k = 0;
      for (FocalMethod m : {FocalMethod::median, FocalMethod::cc, FocalMethod::jcc}) {
        sums[k++] += delta_f(select_focal(d.pool, img, m), f);
      }
      ++count;
    }
  }
  const double med = sums[0] / count, cc = sums[1] / count, jcc = sums[2] / count;
  report("focal_median_cc_jcc", med > cc && cc > jcc,
         fmt("mean delta_f over 100 seeds: median %.4f, cc %.4f, jcc %.4f", med, cc, jcc));
}

void rotation_registration() {
  constexpr double kExactTol = 1e-8;
  constexpr int kSeeds = 100, kRequiredWins = 95;
  double worst = 0;
  for (int n = 10; n <= 50; n += 5) {
    RotationGraphConfig rc;
    rc.n_nodes = n;
    rc.noise_deg = 0;
    rc.corrupt_fraction = 0;
    rc.seed = static_cast<std::uint64_t>(500 + n);
    const RotationGraphData d = make_rotation_graph(rc);
    for (const auto& [node, e] : aligned_rotation_errors(register_rotations(d.graph, 20).rotations, d.truth)) {
      worst = std::max(worst, e);
    }
  }
  int wins = 0;
  for (int s = 0; s < kSeeds; ++s) {
    RotationGraphConfig rc;
    rc.n_nodes = 10 + s % 41;
    rc.seed = static_cast<std::uint64_t>(s + 1);
    const RotationGraphData d = make_rotation_graph(rc);
    const Registration reg = register_rotations(d.graph, 20);
    std::vector<double> init, fin;
    for (const auto& [node, e] : aligned_rotation_errors(reg.initial, d.truth)) init.push_back(e);
    for (const auto& [node, e] : aligned_rotation_errors(reg.rotations, d.truth)) fin.push_back(e);
    if (median(fin) < median(init)) ++wins;
  }
  report("rotation_registration", worst < kExactTol && wins >= kRequiredWins,
         fmt("noiseless 10-50 nodes max error %.2e deg; 10%% corrupted: 20 sweeps beat the spanning tree in %.0f/100 seeds",
             worst, wins));
}

void noise_trend() {
  BenchmarkConfig cfg;  // sigma grid 0, 0.25, 0.5, 1, 2; 100 trials
  const auto rows = run_pair_benchmark(cfg);
  bool monotone = true;
  for (std::size_t k = 1; k < rows.size(); ++k) {
    monotone = monotone && rows[k].med_dR_deg >= rows[k - 1].med_dR_deg && rows[k].med_dt_deg >= rows[k - 1].med_dt_deg &&
               rows[k].med_df1 >= rows[k - 1].med_df1 && rows[k].med_df2 >= rows[k - 1].med_df2;
  }
  std::string medians;
  for (const auto& r : rows) medians += fmt(" %.2f:%.4g", r.sigma, r.med_dR_deg);
  report("noise_trend", monotone, "median dR (deg) by sigma:" + medians);
  for (const auto& r : rows) {
    if (r.sigma == 0.5) {
      std::printf("INFO noise_magnitude: sigma=0.5 median dR %.4f deg, median df1 %.4f (synthetic scenes, not the "
                  "real-image error regime)\n",
                  r.med_dR_deg, r.med_df1);
    }
  }
}

}  // namespace

int main() {
  noiseless_pairs();
  cheirality();
  scale_invariance();
  lis_oracle_and_complexity();
  verification();
  focal_averaging();
  rotation_registration();
  noise_trend();
  std::printf("%s: %d failing criteria\n", failures ? "FAILED" : "ALL PASSED", failures);
  return failures ? 1 : 0;
}
