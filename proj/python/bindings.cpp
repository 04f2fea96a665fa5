#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "linselfcal/averaging.hpp"
#include "linselfcal/epipolar.hpp"
#include "linselfcal/error.hpp"
#include "linselfcal/io.hpp"
#include "linselfcal/match_verify.hpp"
#include "linselfcal/selfcalib.hpp"
#include "linselfcal/synth.hpp"

namespace py = pybind11;
using namespace linselfcal;

namespace {

using PointArray = Eigen::Matrix<double, Eigen::Dynamic, 2, Eigen::RowMajor>;

CorrespondenceSet to_corrs(const PointArray& x1, const PointArray& x2, double width, double height) {
  if (x1.rows() != x2.rows()) throw PreconditionError("x1 and x2 must have the same number of rows");
  CorrespondenceSet cs;
  cs.image1 = {"image1", width, height};
  cs.image2 = {"image2", width, height};
  for (Eigen::Index i = 0; i < x1.rows(); ++i) cs.add(x1.row(i).transpose(), x2.row(i).transpose());
  return cs;
}

PointArray to_array(const std::vector<Vec2>& pts) {
  PointArray a(static_cast<Eigen::Index>(pts.size()), 2);
  for (std::size_t i = 0; i < pts.size(); ++i) a.row(static_cast<Eigen::Index>(i)) = pts[i].transpose();
  return a;
}

py::dict solution_dict(const PairSolution& sol) {
  py::dict d;
  d["f1"] = sol.f1;
  d["f2"] = sol.f2;
  d["chosen"] = sol.chosen ? py::object(py::int_(*sol.chosen)) : py::object(py::none());
  d["consistent"] = sol.consistent;
  d["kappa_epsilon"] = sol.kappa_epsilon;
  py::list cands;
  for (const auto& c : sol.candidates) {
    py::dict cd;
    cd["R"] = c.R;
    cd["t"] = c.t;
    cd["P1"] = c.oriented.P1;
    cd["P2"] = c.oriented.P2;
    cd["plane_at_infinity"] = c.plane;
    cd["front_both"] = c.cam2_front;
    cands.append(cd);
  }
  d["candidates"] = cands;
  py::dict checks;
  for (const auto& c : verify_solution_geometry(sol).checks) checks[py::str(c.name)] = c.pass;
  d["geometry_checks"] = checks;
  return d;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Two-view focal self-calibration, order-consistency match filtering and pairwise averaging";

  auto base = py::register_exception<Error>(m, "Error", PyExc_RuntimeError);
  py::register_exception<ParseError>(m, "ParseError", base.ptr());
  py::register_exception<PreconditionError>(m, "PreconditionError", base.ptr());
  py::register_exception<NumericalError>(m, "NumericalError", base.ptr());
  py::register_exception<IoError>(m, "IoError", base.ptr());

  m.def(
      "estimate_f_eightpoint",
      [](const PointArray& x1, const PointArray& x2) {
        const auto cs = to_corrs(x1, x2, 0, 0);
        return estimate_f_eightpoint(cs);
      },
      py::arg("x1"), py::arg("x2"), "Normalized 8-point fundamental matrix (x2^T F x1 = 0).");

  m.def(
      "calibrate_pair",
      [](const PointArray& x1, const PointArray& x2, double width, double height, std::size_t ransac_iters,
         double sampson_thresh, std::uint64_t seed) {
        CalibrateOptions opts;
        opts.use_ransac = ransac_iters > 0;
        opts.ransac.iterations = ransac_iters;
        opts.ransac.threshold = sampson_thresh;
        opts.ransac.seed = seed;
        return solution_dict(calibrate_pair(to_corrs(x1, x2, width, height), opts));
      },
      py::arg("x1"), py::arg("x2"), py::arg("width"), py::arg("height"), py::arg("ransac_iters") = 0,
      py::arg("sampson_thresh") = 1.0, py::arg("seed") = 1,
      "Focal lengths and both metric candidates from top-left pixel matches.");

  m.def(
      "calibrate_fundamental",
      [](const Mat3& F) { return solution_dict(calibrate_pair(F)); }, py::arg("F"),
      "Focal lengths from F in principal-point-centered coordinates (no cheirality selection).");

  m.def(
      "lis_thresholded",
      [](const std::vector<double>& seq, double T) { return lis_thresholded(seq, T); }, py::arg("seq"),
      py::arg("T") = 0.0, "Positions of a longest subsequence with s[i] - T <= s[next].");

  m.def(
      "recursive_verify",
      [](const PointArray& x1, const PointArray& x2, double width, double height, double alpha, double min_region) {
        VerificationConfig cfg;
        cfg.alpha = alpha;
        cfg.min_region = min_region;
        return recursive_verify(to_corrs(x1, x2, width, height), cfg).indices;
      },
      py::arg("x1"), py::arg("x2"), py::arg("width"), py::arg("height"), py::arg("alpha") = 0.02,
      py::arg("min_region") = 200.0, "Sorted indices of the matches kept by order-consistency filtering.");

  m.def("geodesic_distance", &geodesic_distance, py::arg("R"), py::arg("S"), "Rotation angle of R S^T in degrees.");
  m.def(
      "weiszfeld_single", [](const std::vector<Mat3>& rots) { return weiszfeld_single(rots); }, py::arg("rotations"),
      "Geodesic L1 mean rotation.");
  m.def(
      "register_rotations",
      [](const std::vector<std::tuple<int, int, Mat3>>& edges, int sweeps) {
        RotationGraph g;
        for (const auto& [i, j, R] : edges) g.add(i, j, R);
        return register_rotations(g, sweeps).rotations;
      },
      py::arg("edges"), py::arg("sweeps") = 20,
      "Absolute rotations from (i, j, R_ij) edges with R_j = R_ij R_i; the smallest id is the identity.");
  m.def(
      "confidence_counts",
      [](const std::vector<double>& f, double beta) { return confidence_counts(f, beta); }, py::arg("estimates"),
      py::arg("beta") = 0.10, "Normalized confidence counts.");
  m.def(
      "select_focal",
      [](const std::vector<std::tuple<int, int, int, double, double>>& rows, int image, const std::string& method,
         double beta) {
        FocalEstimatePool pool;
        for (const auto& [s, i, k, fi, fk] : rows) pool.add_pair_estimate(s, i, fi, k, fk);
        return select_focal(pool, image, parse_focal_method(method), beta);
      },
      py::arg("rows"), py::arg("image"), py::arg("method") = "jcc", py::arg("beta") = 0.10,
      "Focal length of one image from (pair_id, image_i, image_j, f_i, f_j) rows.");
  m.def("delta_f", &delta_f, py::arg("estimate"), py::arg("truth"));

  m.def(
      "make_scene",
      [](std::size_t n_points, double f1, double f2, double sigma, std::uint64_t seed) {
        SceneConfig cfg;
        cfg.n_points = n_points;
        cfg.f1 = f1;
        cfg.f2 = f2;
        cfg.sigma = sigma;
        cfg.seed = seed;
        const SceneData d = make_scene(cfg);
        py::dict out;
        out["x1"] = to_array(d.corrs.x1);
        out["x2"] = to_array(d.corrs.x2);
        out["width"] = cfg.width;
        out["height"] = cfg.height;
        out["R"] = d.scene.relative_rotation();
        out["t"] = d.scene.relative_translation();
        out["F"] = d.scene.fundamental_pixel();
        return out;
      },
      py::arg("n_points") = 100, py::arg("f1") = 1000.0, py::arg("f2") = 1200.0, py::arg("sigma") = 0.0,
      py::arg("seed") = 1, "Synthetic two-view scene in top-left pixel coordinates.");
  m.def(
      "run_pair_benchmark",
      [](const std::vector<double>& sigmas, std::size_t trials, std::uint64_t seed, std::size_t n_points) {
        BenchmarkConfig cfg;
        cfg.sigmas = sigmas;
        cfg.trials = trials;
        cfg.seed = seed;
        cfg.n_points = n_points;
        return benchmark_csv(run_pair_benchmark(cfg));
      },
      py::arg("sigmas"), py::arg("trials") = 100, py::arg("seed") = 1, py::arg("n_points") = 200,
      "Noise benchmark as CSV text.");
}
