#include "linselfcal/cli.hpp"

#include <CLI11.hpp>
#include <algorithm>
#include <cstdlib>
#include <json.hpp>
#include <optional>
#include <sstream>

#include "linselfcal/averaging.hpp"
#include "linselfcal/error.hpp"
#include "linselfcal/io.hpp"
#include "linselfcal/match_verify.hpp"
#include "linselfcal/selfcalib.hpp"
#include "linselfcal/synth.hpp"

namespace linselfcal {

namespace {

using nlohmann::json;

template <typename Derived>
json matrix_json(const Eigen::MatrixBase<Derived>& M) {
  json rows = json::array();
  for (Eigen::Index r = 0; r < M.rows(); ++r) {
    json row = json::array();
    for (Eigen::Index c = 0; c < M.cols(); ++c) row.push_back(M(r, c));
    rows.push_back(row);
  }
  return rows;
}

json vector_json(const Vec3& v) { return json::array({v(0), v(1), v(2)}); }

void emit_json(const json& j, const std::string& path, std::ostream& out) {
  const std::string text = j.dump(2) + "\n";
  if (path.empty()) {
    out << text;
  } else {
    write_text_file(path, text);
  }
}

std::uint64_t resolve_seed(const std::optional<std::uint64_t>& flag) {
  if (flag) return *flag;
  if (const char* env = std::getenv("SEED")) {
    try {
      std::size_t used = 0;
      const std::string s(env);
      const auto v = std::stoull(s, &used);
      if (used == s.size()) return v;
    } catch (const std::exception&) {
    }
    throw ParseError("SEED environment variable is not an unsigned integer");
  }
  return 1;
}

std::vector<double> parse_grid(const std::string& text) {
  std::vector<double> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    const double v = parse_double(item, "--sigma-grid");
    if (v < 0) throw ParseError("--sigma-grid: values must be non-negative");
    out.push_back(v);
  }
  if (out.empty()) throw ParseError("--sigma-grid: no values");
  return out;
}

struct CalibrateArgs {
  std::string matches;
  std::size_t ransac_iters = 0;
  double sampson_thresh = 1.0;
  std::optional<std::uint64_t> seed;
  std::string json_out;
  std::string truth_cameras;
};

int cmd_calibrate(const CalibrateArgs& a, std::ostream& out) {
  const MatchFile mf = read_match_file(a.matches);
  CalibrateOptions opts;
  opts.use_ransac = a.ransac_iters > 0;
  opts.ransac.iterations = a.ransac_iters;
  opts.ransac.threshold = a.sampson_thresh;
  opts.ransac.seed = resolve_seed(a.seed);
  const PairSolution sol = calibrate_pair(mf.corrs, opts);
  const GeometryReport report = verify_solution_geometry(sol);

  json j;
  j["f1"] = sol.f1;
  j["f2"] = sol.f2;
  j["chosen"] = sol.chosen ? json(*sol.chosen) : json(nullptr);
  j["coordinate_scale"] = sol.coordinate_scale;
  j["kappa_epsilon"] = sol.kappa_epsilon;
  j["consistent"] = sol.consistent;
  j["f2_forward_relerr"] = sol.f2_forward_relerr;
  j["f1_reverse_relerr"] = sol.f1_reverse_relerr;
  j["num_matches"] = mf.corrs.size();
  j["votes_considered"] = sol.votes_considered;
  json cands = json::array();
  for (const auto& c : sol.candidates) {
    cands.push_back({{"plane_at_infinity", vector_json(c.plane)},
                     {"mu", c.mu},
                     {"reflected", c.reflected},
                     {"front_both", c.cam2_front},
                     {"front_camera1", c.cam1_front},
                     {"R", matrix_json(c.R)},
                     {"t", vector_json(c.t)},
                     {"P1", matrix_json(c.oriented.P1)},
                     {"P2", matrix_json(c.oriented.P2)}});
  }
  j["candidates"] = cands;
  json checks = json::array();
  for (const auto& c : report.checks) {
    checks.push_back({{"name", c.name}, {"value", c.value}, {"tolerance", c.tolerance}, {"pass", c.pass}});
  }
  j["geometry_checks"] = checks;

  out << "f1 " << format_double(sol.f1) << "\nf2 " << format_double(sol.f2) << "\n";
  out << "chosen " << (sol.chosen ? std::to_string(*sol.chosen) : std::string("undecided")) << " (votes "
      << sol.candidates[0].cam2_front << " / " << sol.candidates[1].cam2_front << " of " << sol.votes_considered
      << ")\n";
  out << "geometry checks " << (report.all_pass() ? "pass" : "FAIL") << "\n";

  json truth;
  if (mf.truth.count("f1")) truth["f1_relerr"] = delta_f(sol.f1, mf.truth.at("f1"));
  if (mf.truth.count("f2")) truth["f2_relerr"] = delta_f(sol.f2, mf.truth.at("f2"));
  if (!a.truth_cameras.empty()) {
    const auto cams = parse_camera_file(read_text_file(a.truth_cameras));
    if (cams.size() < 2) throw PreconditionError("truth camera file needs two cameras");
    const KRC k1 = decompose_krc(cams[0].P), k2 = decompose_krc(cams[1].P);
    truth["dR_deg"] = relative_rotation_error(sol.best().R, k1.R, k2.R);
    truth["dt_deg"] = translation_angle_error(sol.best().t, relative_translation(k2.R, k1.C, k2.C));
  }
  if (!truth.is_null()) {
    j["truth"] = truth;
    for (const auto& [key, value] : truth.items()) out << key << " " << format_double(value.get<double>()) << "\n";
  }
  if (!a.json_out.empty()) emit_json(j, a.json_out, out);
  return 0;
}

struct VerifyArgs {
  std::string matches;
  double alpha = 0.02;
  double min_region = 200;
  std::string out_path;
};

int cmd_verify(const VerifyArgs& a, std::ostream& out) {
  const MatchFile mf = read_match_file(a.matches);
  VerificationConfig cfg;
  cfg.alpha = a.alpha;
  cfg.min_region = a.min_region;
  const VerifiedSubset res = recursive_verify(mf.corrs, cfg);
  out << "input " << mf.corrs.size() << "\n";
  for (const auto& n : res.nodes) {
    out << "node depth " << n.depth << " band [" << format_double(n.y_lo) << ", " << format_double(n.y_hi) << "] in "
        << n.n_in << " after_x " << n.n_after_x << " after_y " << n.n_after_y << (n.leaf ? " leaf" : "") << "\n";
  }
  out << "kept " << res.indices.size() << "\n";
  if (mf.corrs.labels) {
    const auto pr = verification_metrics(res.indices, *mf.corrs.labels);
    out << "precision " << (pr.precision ? format_double(*pr.precision) : std::string("undefined")) << "\n";
    out << "recall " << format_double(pr.recall) << "\n";
  }
  if (!a.out_path.empty()) {
    MatchFile filtered{mf.corrs.subset(res.indices), mf.truth};
    write_match_file(a.out_path, filtered);
  }
  return 0;
}

struct AverageArgs {
  std::string rotations;
  std::string focal;
  std::string method = "jcc";
  double beta = 0.10;
  int sweeps = 20;
  std::string truth;
  std::string json_out;
};

int cmd_average(const AverageArgs& a, std::ostream& out) {
  json j;
  if (!a.rotations.empty()) {
    const RotationGraph g = parse_rotation_graph(read_text_file(a.rotations));
    const Registration reg = register_rotations(g, a.sweeps);
    j["anchor"] = reg.anchor;
    j["residual_per_sweep"] = reg.residual_per_sweep;
    json nodes = json::array();
    for (const auto& [id, R] : reg.rotations) nodes.push_back({{"node", id}, {"R", matrix_json(R)}});
    j["nodes"] = nodes;
    if (!a.truth.empty()) {
      const auto truth = parse_rotations(read_text_file(a.truth));
      const auto err = aligned_rotation_errors(reg.rotations, truth);
      std::vector<double> e;
      for (const auto& [id, v] : err) e.push_back(v);
      j["truth"] = {{"max_error_deg", *std::max_element(e.begin(), e.end())}, {"median_error_deg", median(e)}};
    }
  } else {
    const FocalEstimatePool pool = parse_focal_pool(read_text_file(a.focal));
    pool.validate();
    const FocalMethod method = parse_focal_method(a.method);
    if (!(a.beta > 0)) throw PreconditionError("--beta must be positive");
    const std::map<int, double> truth =
        a.truth.empty() ? std::map<int, double>{} : parse_focal_truth(read_text_file(a.truth));
    j["method"] = focal_method_name(method);
    j["beta"] = a.beta;
    json images = json::array();
    double sum_df = 0;
    int n_df = 0;
    for (int img : pool.images()) {
      const double f = select_focal(pool, img, method, a.beta);
      json entry = {{"image", img},
                    {"f", f},
                    {"n_estimates", pool.estimates(img).size()},
                    {"jcc", joint_confidence_at(pool, img, f, a.beta)}};
      if (truth.count(img)) {
        const double d = delta_f(f, truth.at(img));
        entry["delta_f"] = d;
        sum_df += d;
        ++n_df;
      }
      images.push_back(entry);
    }
    j["images"] = images;
    if (n_df > 0) j["mean_delta_f"] = sum_df / n_df;
  }
  emit_json(j, a.json_out, out);
  return 0;
}

struct EvalArgs {
  std::string sigma_grid = "0,0.25,0.5,1,2";
  std::size_t trials = 100;
  std::optional<std::uint64_t> seed;
  std::size_t points = 200;
  std::string out_path;
};

int cmd_eval(const EvalArgs& a, std::ostream& out) {
  BenchmarkConfig cfg;
  cfg.sigmas = parse_grid(a.sigma_grid);
  cfg.trials = a.trials;
  cfg.seed = resolve_seed(a.seed);
  cfg.n_points = a.points;
  const std::string csv = benchmark_csv(run_pair_benchmark(cfg));
  if (a.out_path.empty()) {
    out << csv;
  } else {
    write_text_file(a.out_path, csv);
  }
  return 0;
}

struct SynthArgs {
  std::string kind;
  std::string out_path;
  std::string truth_out;
  std::optional<std::uint64_t> seed;
  double sigma = 0;
  std::size_t points = 100;
  double f1 = 1000, f2 = 1200;
  double outlier_fraction = 0.3;
  int nodes = 20;
  double corrupt = 0.1;
  double noise_deg = 1.0;
  int images = 6;
};

int cmd_synth(const SynthArgs& a, std::ostream& out) {
  const std::uint64_t seed = resolve_seed(a.seed);
  if (a.kind == "pair") {
    SceneConfig sc;
    sc.n_points = a.points;
    sc.f1 = a.f1;
    sc.f2 = a.f2;
    sc.sigma = a.sigma;
    sc.seed = seed;
    const SceneData d = make_scene(sc);
    write_match_file(a.out_path, {d.corrs, {{"f1", sc.f1}, {"f2", sc.f2}}});
    if (!a.truth_out.empty()) {
      write_text_file(a.truth_out, format_camera_file({{"camera1", d.scene.camera(0)}, {"camera2", d.scene.camera(1)}}));
    }
  } else if (a.kind == "facade") {
    FacadeConfig fc;
    fc.n_inliers = a.points;
    fc.outlier_fraction = a.outlier_fraction;
    fc.sigma = a.sigma;
    fc.seed = seed;
    write_match_file(a.out_path, {make_facade_matches(fc), {}});
  } else if (a.kind == "rotations") {
    RotationGraphConfig rc;
    rc.n_nodes = a.nodes;
    rc.corrupt_fraction = a.corrupt;
    rc.noise_deg = a.noise_deg;
    rc.seed = seed;
    const RotationGraphData d = make_rotation_graph(rc);
    write_text_file(a.out_path, format_rotation_graph(d.graph));
    if (!a.truth_out.empty()) write_text_file(a.truth_out, format_rotations(d.truth));
  } else if (a.kind == "focal") {
    FocalPoolConfig pc;
    pc.n_images = a.images;
    pc.seed = seed;
    const FocalPoolData d = make_bimodal_focal_pool(pc);
    write_text_file(a.out_path, format_focal_pool(d.pool));
    if (!a.truth_out.empty()) write_text_file(a.truth_out, format_focal_truth(d.truth));
  } else {
    throw ParseError("unknown synth kind '" + a.kind + "' (pair, facade, rotations, focal)");
  }
  out << "wrote " << a.out_path << "\n";
  return 0;
}

}  // namespace

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Two-view focal self-calibration, match verification and averaging"};
  app.require_subcommand(1);

  CalibrateArgs ca;
  auto* calibrate = app.add_subcommand("calibrate", "Recover focal lengths and metric cameras from a match file");
  calibrate->add_option("matches", ca.matches, "Match file")->required();
  calibrate->add_option("--ransac-iters", ca.ransac_iters, "RANSAC iterations; 0 fits all matches");
  calibrate->add_option("--sampson-thresh", ca.sampson_thresh, "RANSAC inlier threshold, squared pixels");
  calibrate->add_option("--seed", ca.seed, "RANSAC seed (default: $SEED or 1)");
  calibrate->add_option("--json-out", ca.json_out, "Write the full report as JSON");
  calibrate->add_option("--truth-cameras", ca.truth_cameras, "Camera file with the true pair, for error reporting");

  VerifyArgs va;
  auto* verify = app.add_subcommand("verify", "Filter matches by recursive order consistency");
  verify->add_option("matches", va.matches, "Match file")->required();
  verify->add_option("--alpha", va.alpha, "Threshold fraction of the region extent");
  verify->add_option("--min-region", va.min_region, "Smallest band height to recurse into, pixels");
  verify->add_option("--out", va.out_path, "Write the kept matches here");

  AverageArgs aa;
  auto* average = app.add_subcommand("average", "Consolidate pairwise rotations or focal lengths");
  auto* rot_opt = average->add_option("--rotations", aa.rotations, "Rotation graph file");
  auto* foc_opt = average->add_option("--focal", aa.focal, "Focal pool file");
  rot_opt->excludes(foc_opt);
  average->add_option("--method", aa.method, "median, cc or jcc");
  average->add_option("--beta", aa.beta, "Relative range for confidence counts");
  average->add_option("--sweeps", aa.sweeps, "Registration sweeps");
  average->add_option("--truth", aa.truth, "Ground truth file for error reporting");
  average->add_option("--json-out", aa.json_out, "Write JSON here instead of stdout");

  EvalArgs ea;
  auto* eval = app.add_subcommand("eval", "Noise benchmark on synthetic pairs");
  eval->add_option("--sigma-grid", ea.sigma_grid, "Comma-separated noise levels, pixels");
  eval->add_option("--trials", ea.trials, "Trials per noise level");
  eval->add_option("--seed", ea.seed, "Seed (default: $SEED or 1)");
  eval->add_option("--points", ea.points, "Points per scene");
  eval->add_option("--out", ea.out_path, "CSV path (default stdout)");

  SynthArgs sa;
  auto* synth = app.add_subcommand("synth", "Write synthetic fixtures");
  synth->add_option("kind", sa.kind, "pair, facade, rotations or focal")->required();
  synth->add_option("--out", sa.out_path, "Output file")->required();
  synth->add_option("--truth-out", sa.truth_out, "Ground truth output (cameras, rotations or focal lengths)");
  synth->add_option("--seed", sa.seed, "Seed (default: $SEED or 1)");
  synth->add_option("--sigma", sa.sigma, "Image noise, pixels");
  synth->add_option("--points", sa.points, "Point or inlier count");
  synth->add_option("--f1", sa.f1, "Focal length of camera 1");
  synth->add_option("--f2", sa.f2, "Focal length of camera 2");
  synth->add_option("--outlier-fraction", sa.outlier_fraction, "Facade outlier fraction");
  synth->add_option("--nodes", sa.nodes, "Rotation graph size");
  synth->add_option("--corrupt", sa.corrupt, "Fraction of corrupted edges");
  synth->add_option("--noise-deg", sa.noise_deg, "Edge noise, degrees");
  synth->add_option("--images", sa.images, "Focal pool image count");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? 0 : static_cast<int>(ErrorKind::parse);
  }

  try {
    if (*calibrate) return cmd_calibrate(ca, out);
    if (*verify) return cmd_verify(va, out);
    if (*average) {
      if (aa.rotations.empty() && aa.focal.empty()) throw ParseError("average: give --rotations or --focal");
      return cmd_average(aa, out);
    }
    if (*eval) return cmd_eval(ea, out);
    if (*synth) return cmd_synth(sa, out);
  } catch (const Error& e) {
    err << "error: " << e.what() << "\n";
    return e.exit_code();
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  std::vector<const char*> argv{"linselfcal"};
  for (const auto& a : args) argv.push_back(a.c_str());
  return run_cli(static_cast<int>(argv.size()), argv.data(), out, err);
}

}  // namespace linselfcal
