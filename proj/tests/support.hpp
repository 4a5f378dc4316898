#pragma once

// Shared generators and property residuals for the unit and acceptance
// suites. Everything here is evaluated through the public API only.

#include "mfnet/ifme.hpp"
#include "mfnet/manifold.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <string>
#include <vector>

namespace mfnet::testing {

struct ManifoldCase {
  std::string label;
  Manifold manifold;
  ManifoldPoint center;
  double radius;  // pairwise distances stay well inside the log domain
};

inline ManifoldPoint spd_center(int n, std::mt19937_64& rng) {
  Matrix a = linalg::gaussian_matrix(n, n, rng);
  return SpdPoint(linalg::symmetrize(a * a.transpose() / n + Matrix::Identity(n, n)));
}

inline ManifoldPoint grassmann_center(int n, int k, std::mt19937_64& rng) {
  return GrassmannPoint(linalg::random_orthogonal(n, rng).leftCols(k));
}

inline ManifoldPoint sphere_center(int n, std::mt19937_64& rng) {
  Vector v = linalg::gaussian_matrix(n, 1, rng);
  return SpherePoint(v / v.norm());
}

inline ManifoldPoint euclid_center(int n, std::mt19937_64& rng) {
  return EuclideanPoint(linalg::gaussian_matrix(n, 1, rng));
}

// One case per manifold, dimensions drawn from the generator.
inline std::vector<ManifoldCase> random_cases(std::mt19937_64& rng) {
  std::uniform_int_distribution<int> spd_dim(2, 6);
  std::uniform_int_distribution<int> n_dim(3, 8);
  std::vector<ManifoldCase> out;
  out.push_back({"spd", Manifold::spd(), spd_center(spd_dim(rng), rng), 1.5});
  out.push_back({"spd-le", Manifold::spd(SpdMetric::LogEuclidean), spd_center(spd_dim(rng), rng),
                 1.5});
  const int gn = n_dim(rng);
  std::uniform_int_distribution<int> k_dim(1, gn - 1);
  out.push_back({"grassmann", Manifold::grassmann(), grassmann_center(gn, k_dim(rng), rng), 0.7});
  out.push_back({"sphere", Manifold::sphere(), sphere_center(n_dim(rng), rng), 1.0});
  out.push_back({"euclidean", Manifold::euclidean(), euclid_center(n_dim(rng), rng), 3.0});
  return out;
}

inline std::vector<ManifoldPoint> sample(const ManifoldCase& c, std::size_t n,
                                         std::mt19937_64& rng) {
  std::vector<ManifoldPoint> pts;
  pts.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    pts.push_back(random_point_in_ball(c.manifold, {c.center, c.radius}, rng));
  }
  return pts;
}

inline std::vector<double> random_weights(std::size_t n, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(0.05, 1.0);
  std::vector<double> w(n);
  for (auto& x : w) x = u(rng);
  return w;
}

// Right-multiplies a Grassmann basis by a random k x k orthogonal matrix.
inline ManifoldPoint regauge(const ManifoldPoint& p, std::mt19937_64& rng) {
  const auto& g = std::get<GrassmannPoint>(p);
  Matrix r = linalg::random_orthogonal(g.sub_dim(), rng);
  Matrix b = g.basis() * r;
  Matrix o;
  linalg::polar_orthonormalize(b, o);
  return GrassmannPoint(o);
}

struct GeometryResiduals {
  double endpoint = 0.0;        // d(Γ(0), p) + d(Γ(1), q)
  double proportionality = 0.0; // |d(p, Γ(t)) - t d(p, q)|
  double exp_log = 0.0;         // d(exp_p(log_p q), q)
  double log_norm = 0.0;        // |‖log_p q‖ - d(p, q)|
  double isometry = 0.0;        // |d(gp, gq) - d(p, q)|
  double triangle = 0.0;        // max(0, d(p, r) - d(p, q) - d(q, r))
  double gauge = 0.0;           // Grassmann only

  void merge(const GeometryResiduals& o) {
    endpoint = std::max(endpoint, o.endpoint);
    proportionality = std::max(proportionality, o.proportionality);
    exp_log = std::max(exp_log, o.exp_log);
    log_norm = std::max(log_norm, o.log_norm);
    isometry = std::max(isometry, o.isometry);
    triangle = std::max(triangle, o.triangle);
    gauge = std::max(gauge, o.gauge);
  }
};

inline GeometryResiduals geometry_trial(const ManifoldCase& c, std::mt19937_64& rng) {
  const Manifold& m = c.manifold;
  auto pts = sample(c, 3, rng);
  const auto& p = pts[0];
  const auto& q = pts[1];
  const auto& r = pts[2];
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  const double t = unit(rng);
  const double dpq = distance(m, p, q);

  GeometryResiduals res;
  res.endpoint = distance(m, geodesic(m, p, q, 0.0), p) + distance(m, geodesic(m, p, q, 1.0), q);
  res.proportionality = std::abs(distance(m, p, geodesic(m, p, q, t)) - t * dpq);
  Tangent v = log_map(m, p, q);
  res.exp_log = distance(m, exp_map(m, p, v), q);
  res.log_norm = std::abs(tangent_norm(m, p, v) - dpq);
  Isometry g = random_isometry(m, p, rng);
  res.isometry = std::abs(distance(m, act(m, g, p), act(m, g, q)) - dpq);
  res.triangle = std::max(0.0, distance(m, p, r) - dpq - distance(m, q, r));
  if (m.kind() == ManifoldKind::Grassmann) {
    ManifoldPoint p2 = regauge(p, rng);
    ManifoldPoint q2 = regauge(q, rng);
    double gd = std::abs(distance(m, p2, q2) - dpq);
    double gg = distance(m, geodesic(m, p2, q2, t), geodesic(m, p, q, t));
    res.gauge = std::max(gd, gg);
  }
  return res;
}

}  // namespace mfnet::testing
