#include "doctest.h"

#include "mfnet/errors.hpp"
#include "mfnet/manifold.hpp"
#include "support.hpp"

#include <cmath>
#include <numbers>
#include <sstream>

using namespace mfnet;

namespace {

Vector vec(std::initializer_list<double> xs) {
  Vector v(static_cast<int>(xs.size()));
  int i = 0;
  for (double x : xs) v(i++) = x;
  return v;
}

Matrix diag(std::initializer_list<double> xs) { return vec(xs).asDiagonal(); }

Matrix basis_e1(int n) {
  Matrix b = Matrix::Zero(n, 1);
  b(0, 0) = 1.0;
  return b;
}

}  // namespace

TEST_CASE("distance examples") {
  const double pi = std::numbers::pi;
  CHECK(distance(Manifold::sphere(), SpherePoint(vec({1, 0, 0})), SpherePoint(vec({0, 1, 0}))) ==
        doctest::Approx(pi / 2).epsilon(1e-15));
  CHECK(distance(Manifold::grassmann(), GrassmannPoint(basis_e1(3)), GrassmannPoint(basis_e1(3))) ==
        0.0);

  // Diagonal case: d = sqrt(Σ ln² λ_i) with λ = (e², 1).
  const double oracle = std::sqrt(std::pow(std::log(std::exp(2.0)), 2) + std::pow(std::log(1.0), 2));
  const double d = distance(Manifold::spd(), SpdPoint(Matrix::Identity(2, 2)),
                            SpdPoint(diag({std::exp(2.0), 1.0})));
  CHECK(std::abs(d - oracle) < 1e-12);
  CHECK(std::abs(d - 2.0) < 1e-12);

  const double dle = distance(Manifold::spd(SpdMetric::LogEuclidean), SpdPoint(Matrix::Identity(2, 2)),
                              SpdPoint(diag({std::exp(2.0), 1.0})));
  CHECK(std::abs(dle - 2.0) < 1e-12);
}

TEST_CASE("distance errors") {
  CHECK_THROWS_AS(distance(Manifold::euclidean(), EuclideanPoint(vec({1, 2})),
                           EuclideanPoint(vec({1, 2, 3}))),
                  InvalidArgument);
  CHECK_THROWS_AS(distance(Manifold::sphere(), EuclideanPoint(vec({1, 0})),
                           EuclideanPoint(vec({0, 1}))),
                  InvalidArgument);
  CHECK_THROWS_AS(EuclideanPoint(vec({1, NAN})), InvalidArgument);
  CHECK_THROWS_AS(SpdPoint(diag({1, -1})), InvalidArgument);
  Matrix ns{{1.0, 0.5}, {0.0, 1.0}};
  CHECK_THROWS_AS(SpdPoint{ns}, InvalidArgument);
  CHECK_THROWS_AS(SpherePoint(vec({1, 1})), InvalidArgument);
  CHECK_THROWS_AS(GrassmannPoint(Matrix::Ones(3, 2)), InvalidArgument);
}

TEST_CASE("geodesic examples") {
  const auto m = Manifold::euclidean();
  auto g = geodesic(m, EuclideanPoint(vec({0, 0})), EuclideanPoint(vec({2, 0})), 0.25);
  CHECK((std::get<EuclideanPoint>(g).vec() - vec({0.5, 0})).norm() == 0.0);

  // Commuting SPD case: eigenvalues interpolate geometrically, λ^t.
  Matrix oracle = diag({std::pow(4.0, 0.5) * std::pow(1.0, 0.5), std::pow(1.0, 0.5)});
  auto s = geodesic(Manifold::spd(), SpdPoint(Matrix::Identity(2, 2)), SpdPoint(diag({4, 1})), 0.5);
  CHECK((std::get<SpdPoint>(s).mat() - oracle).cwiseAbs().maxCoeff() < 1e-12);
  auto sle = geodesic(Manifold::spd(SpdMetric::LogEuclidean), SpdPoint(Matrix::Identity(2, 2)),
                      SpdPoint(diag({4, 1})), 0.5);
  CHECK((std::get<SpdPoint>(sle).mat() - oracle).cwiseAbs().maxCoeff() < 1e-12);

  std::mt19937_64 rng(3);
  for (auto& c : testing::random_cases(rng)) {
    auto pts = testing::sample(c, 2, rng);
    CHECK(distance(c.manifold, geodesic(c.manifold, pts[0], pts[1], 0.0), pts[0]) == 0.0);
  }
}

TEST_CASE("geodesic errors") {
  const auto m = Manifold::euclidean();
  EuclideanPoint a(vec({0.0})), b(vec({1.0}));
  CHECK_THROWS_AS(geodesic(m, a, b, -0.1), InvalidArgument);
  CHECK_THROWS_AS(geodesic(m, a, b, 1.5), InvalidArgument);
  CHECK_THROWS_AS(geodesic(Manifold::sphere(), SpherePoint(vec({1, 0})), SpherePoint(vec({-1, 0})), 0.5),
                  InvalidArgument);
}

TEST_CASE("exp and log examples") {
  std::mt19937_64 rng(5);
  for (auto& c : testing::random_cases(rng)) {
    CAPTURE(c.label);
    auto p = testing::sample(c, 1, rng)[0];
    Matrix pm = as_matrix(p);
    Tangent zero = Matrix::Zero(pm.rows(), pm.cols());
    CHECK(distance(c.manifold, exp_map(c.manifold, p, zero), p) == 0.0);
    CHECK(log_map(c.manifold, p, p).norm() < 1e-12);
  }
  // Rotation by arc length π/2 in the plane takes (1, 0) to (0, 1).
  auto r = exp_map(Manifold::sphere(), SpherePoint(vec({1, 0})), vec({0, std::numbers::pi / 2}));
  CHECK((std::get<SpherePoint>(r).vec() - vec({0, 1})).norm() < 1e-15);
}

TEST_CASE("exp map rejects vectors outside the tangent space") {
  Matrix ns{{0.0, 1.0}, {0.0, 0.0}};
  CHECK_THROWS_AS(exp_map(Manifold::spd(), SpdPoint(Matrix::Identity(2, 2)), ns), InvalidArgument);
  CHECK_THROWS_AS(exp_map(Manifold::sphere(), SpherePoint(vec({1, 0})), vec({0.1, 0.2})),
                  InvalidArgument);
  CHECK_THROWS_AS(exp_map(Manifold::grassmann(), GrassmannPoint(basis_e1(2)), Matrix::Ones(2, 1)),
                  InvalidArgument);
}

TEST_CASE("isometry action") {
  std::mt19937_64 rng(7);
  for (auto& c : testing::random_cases(rng)) {
    CAPTURE(c.label);
    auto p = testing::sample(c, 1, rng)[0];
    Isometry id = Isometry::identity(c.manifold.kind(), static_cast<int>(as_matrix(p).rows()));
    CHECK(distance(c.manifold, act(c.manifold, id, p), p) < 1e-14);
  }

  Matrix perm{{0.0, 1.0}, {1.0, 0.0}};
  auto y = act(Manifold::spd(), Isometry::spd_orthogonal(perm), SpdPoint(diag({1, 4})));
  CHECK((std::get<SpdPoint>(y).mat() - diag({4, 1})).norm() == 0.0);

  CHECK_THROWS_AS(Isometry::spd_orthogonal(Matrix::Ones(2, 2)), InvalidArgument);
  CHECK_THROWS_AS(Isometry::sphere_rotation(diag({1, -1})), InvalidArgument);
  CHECK_THROWS_AS(Isometry::spd_congruence(diag({1, 1e-12})), InvalidArgument);
  // General congruence is not an isometry of the Log-Euclidean metric.
  CHECK_THROWS_AS(act(Manifold::spd(SpdMetric::LogEuclidean), Isometry::spd_congruence(diag({2, 1})),
                      SpdPoint(diag({1, 4}))),
                  InvalidArgument);
  CHECK_THROWS_AS(act(Manifold::sphere(), Isometry::grassmann(perm), SpherePoint(vec({1, 0}))),
                  InvalidArgument);
}

TEST_CASE("random points in balls") {
  std::mt19937_64 rng(11);
  for (auto& c : testing::random_cases(rng)) {
    CAPTURE(c.label);
    BallSpec ball{c.center, c.radius};
    for (int i = 0; i < 20; ++i) {
      auto p = random_point_in_ball(c.manifold, ball, std::uint64_t(100 + i));
      CHECK(distance(c.manifold, c.center, p) < c.radius);
    }
    auto a = random_point_in_ball(c.manifold, ball, std::uint64_t(42));
    auto b = random_point_in_ball(c.manifold, ball, std::uint64_t(42));
    CHECK((as_matrix(a) - as_matrix(b)).norm() == 0.0);
  }
  BallSpec bad{SpherePoint(vec({0, 0, 1})), 2.0};
  CHECK_THROWS_AS(random_point_in_ball(Manifold::sphere(), bad, std::uint64_t(1)), InvalidArgument);
}

TEST_CASE("projection to manifold") {
  std::mt19937_64 rng(13);
  auto p = testing::spd_center(4, rng);
  auto proj = project_to_manifold(Manifold::spd(), as_matrix(p));
  CHECK((as_matrix(proj) - as_matrix(p)).cwiseAbs().maxCoeff() < 1e-12);

  auto clamped = project_to_manifold(Manifold::spd(), diag({1.0, -3.0}));
  CHECK(linalg::min_eigenvalue(as_matrix(clamped)) >= 1e-10 - 1e-18);

  Matrix near = linalg::random_orthogonal(5, rng).leftCols(3);
  near += 1e-4 * linalg::gaussian_matrix(5, 3, rng);
  auto g = project_to_manifold(Manifold::grassmann(), near);
  Matrix b = as_matrix(g);
  CHECK((b.transpose() * b - Matrix::Identity(3, 3)).cwiseAbs().maxCoeff() < 1e-12);
  auto g2 = project_to_manifold(Manifold::grassmann(), b);
  CHECK((as_matrix(g2) - b).cwiseAbs().maxCoeff() < 1e-12);

  Vector s = vec({3, 4});
  auto sp = project_to_manifold(Manifold::sphere(), s);
  CHECK((as_matrix(project_to_manifold(Manifold::sphere(), as_matrix(sp))) - as_matrix(sp)).norm() <
        1e-12);

  CHECK_THROWS_AS(project_to_manifold(Manifold::sphere(), Vector::Zero(3)), InvalidArgument);
  CHECK_THROWS_AS(project_to_manifold(Manifold::grassmann(), Matrix::Ones(4, 2)), InvalidArgument);
}

TEST_CASE("geometry properties hold on random trials") {
  std::mt19937_64 rng(17);
  testing::GeometryResiduals worst;
  for (int trial = 0; trial < 20; ++trial) {
    for (auto& c : testing::random_cases(rng)) worst.merge(testing::geometry_trial(c, rng));
  }
  CHECK(worst.endpoint < 1e-8);
  CHECK(worst.proportionality < 1e-8);
  CHECK(worst.exp_log < 1e-8);
  CHECK(worst.log_norm < 1e-8);
  CHECK(worst.isometry < 1e-9);
  CHECK(worst.triangle < 1e-9);
  CHECK(worst.gauge < 1e-8);
}

TEST_CASE("grassmann handles nearly orthogonal subspaces") {
  Matrix x = Matrix::Zero(3, 1), y = Matrix::Zero(3, 1);
  x(0, 0) = 1.0;
  y(0, 0) = 1e-9;
  y(1, 0) = 1.0;
  y /= y.norm();
  double d = distance(Manifold::grassmann(), GrassmannPoint(x), GrassmannPoint(y));
  CHECK(std::abs(d - (std::numbers::pi / 2 - 1e-9)) < 1e-12);
}

TEST_CASE("manifold names round-trip") {
  for (const char* n : {"spd", "spd-le", "grassmann", "sphere", "euclidean"}) {
    CHECK(Manifold::from_name(n).name() == n);
  }
  CHECK_THROWS_AS(Manifold::from_name("hyperbolic"), InvalidArgument);
}

TEST_CASE("matrix csv dump is row-major") {
  Matrix m{{1.0, 2.0}, {3.0, 0.5}};
  std::ostringstream os;
  write_csv(os, m);
  CHECK(os.str() == "1,2\n3,0.5\n");
}
