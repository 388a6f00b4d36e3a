#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <sstream>

#include "tcfg/dataset.hpp"
#include "tcfg/error.hpp"
#include "tcfg/eval.hpp"
#include "tcfg/guidance.hpp"
#include "tcfg/linalg.hpp"
#include "tcfg/pipeline.hpp"
#include "tcfg/sampler.hpp"
#include "tcfg/schedule.hpp"
#include "tcfg/spectral_gap.hpp"

namespace py = pybind11;
using namespace tcfg;

namespace {

using Array = py::array_t<double, py::array::c_style | py::array::forcecast>;

Matrix to_matrix(const Array& a) {
  if (a.ndim() != 2) throw Error(ErrorKind::kDimensionMismatch, "expected a 2-D array");
  Matrix m(a.shape(0), a.shape(1));
  std::copy(a.data(), a.data() + a.size(), m.data().begin());
  return m;
}

std::vector<Vector> to_rows(const Array& a) {
  const Matrix m = to_matrix(a);
  std::vector<Vector> rows;
  for (std::size_t i = 0; i < m.rows(); ++i) rows.push_back(m.row_vector(i));
  return rows;
}

Array from_matrix(const Matrix& m) {
  Array out({m.rows(), m.cols()});
  std::copy(m.data().begin(), m.data().end(), out.mutable_data());
  return out;
}

Array from_rows(const std::vector<Vector>& rows) {
  if (rows.empty()) return Array({std::size_t{0}, std::size_t{0}});
  return from_matrix(Matrix::from_rows(rows));
}

std::vector<guidance::ScorePair> to_pairs(const Array& uncond, const Array& cond) {
  const auto u = to_rows(uncond);
  const auto c = to_rows(cond);
  if (u.size() != c.size()) throw Error(ErrorKind::kDimensionMismatch, "uncond and cond row counts differ");
  std::vector<guidance::ScorePair> pairs;
  for (std::size_t i = 0; i < u.size(); ++i) pairs.push_back({u[i], c[i]});
  return pairs;
}

std::vector<dataset::LabeledPoint> to_points(const Array& x, const std::vector<int>& labels) {
  auto rows = to_rows(x);
  if (rows.size() != labels.size()) throw Error(ErrorKind::kDimensionMismatch, "points and labels differ in length");
  std::vector<dataset::LabeledPoint> pts;
  for (std::size_t i = 0; i < rows.size(); ++i) pts.push_back({std::move(rows[i]), labels[i]});
  return pts;
}

py::dict projection_dict(const dataset::ManifoldProjection& p) {
  py::dict d;
  d["foot_point"] = p.foot_point;
  d["distance"] = p.distance;
  d["tangent"] = p.tangent;
  d["normal"] = p.normal;
  d["arc"] = static_cast<int>(p.arc);
  d["at_endpoint"] = p.at_endpoint;
  return d;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Tangential-damping classifier-free guidance on toy diffusion models.";

  static py::exception<Error> error_type(m, "TcfgError", PyExc_ValueError);
  py::register_exception_translator([](std::exception_ptr p) {
    try {
      if (p) std::rethrow_exception(p);
    } catch (const Error& e) {
      std::string msg = std::string(to_string(e.kind())) + ": " + e.what();
      PyErr_SetString(error_type.ptr(), msg.c_str());
    }
  });

  m.def("svd", [](const Array& a) {
    const auto r = linalg::svd_thin(to_matrix(a));
    return py::make_tuple(r.singular_values, from_matrix(r.left), from_matrix(r.right));
  }, py::arg("a"), "Thin SVD. Returns (s, U, Vt) with s descending.");

  m.def("spectral_gap_index", [](const Vector& s, double min_ratio) {
    const auto g = analysis::spectral_gap_index(s, min_ratio);
    return py::make_tuple(g.found, g.retained, g.ratio);
  }, py::arg("spectrum"), py::arg("min_ratio") = analysis::kDefaultGapRatio);

  m.def("cfg_combine", [](const Vector& u, const Vector& c, double w) {
    return guidance::cfg_combine({u, c}, w);
  }, py::arg("uncond"), py::arg("cond"), py::arg("w"));
  m.def("tcfg_project", [](const Vector& u, const Vector& c, double tie) {
    return guidance::tcfg_project({u, c}, tie);
  }, py::arg("uncond"), py::arg("cond"), py::arg("tie_tolerance") = 1e-9);
  m.def("tcfg_combine", [](const Vector& u, const Vector& c, double w, double tie) {
    return guidance::tcfg_combine({u, c}, w, tie);
  }, py::arg("uncond"), py::arg("cond"), py::arg("w"), py::arg("tie_tolerance") = 1e-9);
  m.def("pooled_tcfg_project", [](const Array& u, const Array& c, double ratio) {
    return from_rows(guidance::pooled_tcfg_project(to_pairs(u, c), ratio));
  }, py::arg("uncond"), py::arg("cond"), py::arg("gap_ratio") = analysis::kDefaultGapRatio);
  m.def("guide", [](const Array& u, const Array& c, const std::string& mode, double scale) {
    const guidance::GuidanceConfig gc{guidance::parse_mode(mode), scale};
    return from_rows(guidance::guide(to_pairs(u, c), gc));
  }, py::arg("uncond"), py::arg("cond"), py::arg("mode") = "tcfg", py::arg("scale") = 2.0,
     "Row-wise guided eps for modes cond, cfg, tcfg, tcfg-pooled.");

  m.def("two_moons", [](std::size_t n, double noise, std::uint64_t seed) {
    const auto pts = dataset::two_moons({n, noise, seed});
    std::vector<Vector> x;
    std::vector<int> y;
    for (const auto& p : pts) {
      x.push_back(p.position);
      y.push_back(p.label);
    }
    return py::make_tuple(from_rows(x), y);
  }, py::arg("n") = 2000, py::arg("noise_std") = 0.05, py::arg("seed") = 0);

  m.def("project_to_moons", [](const Vector& p) {
    return projection_dict(dataset::project_to_moons(p).nearest);
  }, py::arg("point"));

  py::class_<NoiseSchedule>(m, "NoiseSchedule")
      .def(py::init([](int steps, double lo, double hi) { return linear_beta_schedule(steps, lo, hi); }),
           py::arg("steps") = 100, py::arg("beta_min") = 1e-4, py::arg("beta_max") = 0.02)
      .def_property_readonly("steps", &NoiseSchedule::steps)
      .def("beta", &NoiseSchedule::beta)
      .def("alpha_bar", &NoiseSchedule::alpha_bar)
      .def("hash", &NoiseSchedule::hash);

  m.def("analytic_eps", [](const Array& x, const std::vector<int>& labels, const Vector& z, int t, int label,
                           const NoiseSchedule& sched) {
    const auto pts = to_points(x, labels);
    return sampler::analytic_eps(pts, z, t, label, sched);
  }, py::arg("points"), py::arg("labels"), py::arg("z"), py::arg("t"), py::arg("label"), py::arg("schedule"),
     "Exact eps prediction for the empirical distribution; label 2 is unconditional.");

  m.def("sample_oracle", [](const Array& x, const std::vector<int>& labels, const NoiseSchedule& sched,
                            const std::string& mode, double scale, int label, std::size_t n, std::uint64_t seed,
                            bool noise) {
    const sampler::AnalyticSource src(to_points(x, labels), sched);
    sampler::SampleOptions o;
    o.guidance = {guidance::parse_mode(mode), scale};
    o.label = label;
    o.n = n;
    o.seed = seed;
    o.noise_on = noise;
    return from_rows(sampler::sample(src, sched, o).samples);
  }, py::arg("points"), py::arg("labels"), py::arg("schedule"), py::arg("mode") = "tcfg", py::arg("scale") = 2.0,
     py::arg("label") = 0, py::arg("n") = 500, py::arg("seed") = 0, py::arg("noise") = true);

  m.def("mean_manifold_distance", [](const Array& s) {
    const auto d = eval::mean_manifold_distance(to_rows(s));
    return py::make_tuple(d.mean, d.median);
  }, py::arg("samples"));
  m.def("frechet_gaussian_2d", [](const Array& a, const Array& b) {
    return eval::frechet_gaussian_2d(to_rows(a), to_rows(b)).value;
  }, py::arg("a"), py::arg("b"));

  m.def("run_cli", [](const std::vector<std::string>& args) {
    std::ostringstream out, err;
    const int code = pipeline::run(args, out, err);
    return py::make_tuple(code, out.str(), err.str());
  }, py::arg("args"), "Runs the tcfg command line in-process. Returns (exit_code, stdout, stderr).");
}
