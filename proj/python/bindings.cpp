// Python module _core: manifold operations, iFME, the Grassmann reducer and
// the experiment runner. Points cross the boundary as numpy arrays tagged by
// a manifold name ("spd", "spd-le", "grassmann", "sphere", "euclidean").

#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "mfnet/experiment.hpp"
#include "mfnet/grassmann_reduce.hpp"
#include "mfnet/ifme.hpp"
#include "mfnet/layers.hpp"
#include "mfnet/manifold.hpp"

#include <sstream>

namespace py = pybind11;
using namespace mfnet;

namespace {

ManifoldPoint to_point(const Manifold& m, const Matrix& a) {
  switch (m.kind()) {
    case ManifoldKind::Spd:
      return SpdPoint(a);
    case ManifoldKind::Grassmann:
      return GrassmannPoint(a);
    case ManifoldKind::Sphere:
      return SpherePoint(Eigen::Map<const Vector>(a.data(), a.size()));
    case ManifoldKind::Euclidean:
      break;
  }
  return EuclideanPoint(Eigen::Map<const Vector>(a.data(), a.size()));
}

py::object from_point(const ManifoldPoint& p) {
  const Matrix a = as_matrix(p);
  const auto k = kind_of(p);
  if (k == ManifoldKind::Sphere || k == ManifoldKind::Euclidean) {
    return py::cast(Vector(Eigen::Map<const Vector>(a.data(), a.size())));
  }
  return py::cast(a);
}

// Accepts 1-D arrays as column vectors.
Matrix as_input(const py::array_t<double, py::array::c_style | py::array::forcecast>& arr) {
  if (arr.ndim() == 1) {
    Matrix out(arr.shape(0), 1);
    for (py::ssize_t i = 0; i < arr.shape(0); ++i) out(i, 0) = arr.at(i);
    return out;
  }
  if (arr.ndim() != 2) throw InvalidArgument("expected a 1-D or 2-D array");
  Matrix out(arr.shape(0), arr.shape(1));
  for (py::ssize_t i = 0; i < arr.shape(0); ++i)
    for (py::ssize_t j = 0; j < arr.shape(1); ++j) out(i, j) = arr.at(i, j);
  return out;
}

using Array = py::array_t<double, py::array::c_style | py::array::forcecast>;

std::vector<ManifoldPoint> to_points(const Manifold& m, const std::vector<Array>& pts) {
  std::vector<ManifoldPoint> out;
  out.reserve(pts.size());
  for (const auto& p : pts) out.push_back(to_point(m, as_input(p)));
  return out;
}

}  // namespace

PYBIND11_MODULE(_core, mod) {
  mod.doc() = "Weighted Fréchet mean layers on SPD, Grassmann, sphere and Euclidean data";

  py::register_exception<InvalidArgument>(mod, "InvalidArgument", PyExc_ValueError);
  py::register_exception<FormatError>(mod, "FormatError", PyExc_ValueError);
  py::register_exception<NumericalError>(mod, "NumericalError", PyExc_ArithmeticError);

  mod.def(
      "distance",
      [](const std::string& manifold, const Array& p, const Array& q) {
        const auto m = Manifold::from_name(manifold);
        return distance(m, to_point(m, as_input(p)), to_point(m, as_input(q)));
      },
      py::arg("manifold"), py::arg("p"), py::arg("q"));

  mod.def(
      "geodesic",
      [](const std::string& manifold, const Array& p, const Array& q, double t) {
        const auto m = Manifold::from_name(manifold);
        return from_point(geodesic(m, to_point(m, as_input(p)), to_point(m, as_input(q)), t));
      },
      py::arg("manifold"), py::arg("p"), py::arg("q"), py::arg("t"));

  mod.def(
      "log_map",
      [](const std::string& manifold, const Array& p, const Array& q) {
        const auto m = Manifold::from_name(manifold);
        return log_map(m, to_point(m, as_input(p)), to_point(m, as_input(q)));
      },
      py::arg("manifold"), py::arg("p"), py::arg("q"));

  mod.def(
      "exp_map",
      [](const std::string& manifold, const Array& p, const Array& v) {
        const auto m = Manifold::from_name(manifold);
        return from_point(exp_map(m, to_point(m, as_input(p)), as_input(v)));
      },
      py::arg("manifold"), py::arg("p"), py::arg("v"));

  mod.def(
      "ifme_wfm",
      [](const std::string& manifold, const std::vector<Array>& points, std::vector<double> weights) {
        const auto m = Manifold::from_name(manifold);
        return from_point(ifme_wfm(PointSequence(m, to_points(m, points)), WeightVector(std::move(weights))));
      },
      py::arg("manifold"), py::arg("points"), py::arg("weights"),
      "Recursive weighted Fréchet mean (input order matters on curved manifolds).");

  mod.def(
      "wfm_oracle",
      [](const std::string& manifold, const std::vector<Array>& points, const std::vector<double>& weights,
         double tol, int max_iter) {
        const auto m = Manifold::from_name(manifold);
        OracleOptions opts;
        opts.tol = tol;
        opts.max_iter = max_iter;
        auto pts = to_points(m, points);
        auto res = wfm_oracle_solve(m, pts, weights, opts);
        return py::make_tuple(from_point(res.point), res.residual, res.iterations);
      },
      py::arg("manifold"), py::arg("points"), py::arg("weights"), py::arg("tol") = 1e-10,
      py::arg("max_iter") = 1000, "Gradient-descent weighted Fréchet mean: (point, residual, iterations).");

  mod.def(
      "stream_principal_subspace",
      [](const Matrix& vectors, int k) { return stream_principal_subspace(vectors, k).point.basis(); },
      py::arg("vectors"), py::arg("k"), "Streaming subspace estimate (n x k basis) from centered rows.");

  mod.def(
      "pca_oracle", [](const Matrix& vectors, int k) { return pca_oracle(vectors, k).basis(); },
      py::arg("vectors"), py::arg("k"));

  mod.def(
      "grassmann_avg_layer",
      [](const Matrix& f, int k, const std::vector<double>& theta) {
        auto out = grassmann_avg_layer(f, k, theta);
        return py::make_tuple(out.projected, out.subspace.basis(), out.mean);
      },
      py::arg("f"), py::arg("k"), py::arg("theta"), "Returns (projected, basis, mean).");

  mod.def("weight_map", [](const std::vector<double>& theta) { return weight_map(theta).raw(); },
          py::arg("theta"));

  mod.def(
      "validate_config",
      [](const std::string& config_json) {
        auto cfg = parse_config(nlohmann::json::parse(config_json));
        return cfg.values.dump();
      },
      py::arg("config_json"), "Validates a JSON config; returns it with defaults filled in.");

  mod.def(
      "run_experiment",
      [](const std::string& config_json, std::uint64_t seed) {
        auto cfg = parse_config(nlohmann::json::parse(config_json));
        std::ostringstream os;
        MetricsWriter w(os);
        {
          py::gil_scoped_release release;
          run_experiment(cfg, seed, w);
        }
        return os.str();
      },
      py::arg("config_json"), py::arg("seed"), "Runs an experiment and returns the metrics CSV text.");

  py::register_exception<ConfigError>(mod, "ConfigError", PyExc_ValueError);
}
