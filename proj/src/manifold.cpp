#include "mfnet/manifold.hpp"

#include "mfnet/errors.hpp"

#include <cmath>
#include <iomanip>
#include <limits>
#include <numbers>
#include <ostream>
#include <sstream>

namespace mfnet {

namespace {

using linalg::symmetrize;

[[noreturn]] void fail(const std::string& msg) { throw InvalidArgument(msg); }

void require_finite(const Matrix& m, const char* what) {
  if (!m.allFinite()) fail(std::string(what) + ": non-finite entries");
}

const char* kind_name(ManifoldKind k) {
  switch (k) {
    case ManifoldKind::Spd: return "spd";
    case ManifoldKind::Grassmann: return "grassmann";
    case ManifoldKind::Sphere: return "sphere";
    case ManifoldKind::Euclidean: return "euclidean";
  }
  return "?";
}

template <class P>
const P& expect(const ManifoldPoint& p, const Manifold& m) {
  const P* ptr = std::get_if<P>(&p);
  if (ptr == nullptr) {
    fail(std::string("point is not on the ") + kind_name(m.kind()) + " manifold");
  }
  return *ptr;
}

void check_same_shape(const Matrix& a, const Matrix& b) {
  if (a.rows() != b.rows() || a.cols() != b.cols()) {
    std::ostringstream os;
    os << "dimension mismatch: " << a.rows() << "x" << a.cols() << " vs " << b.rows() << "x"
       << b.cols();
    fail(os.str());
  }
}

// ---- SPD ----------------------------------------------------------------

// Lower Cholesky factor L with P = L Lᵀ. For any such factor the
// affine-invariant operations satisfy f_P(Q) = L f_I(L^-1 Q L^-T) Lᵀ.
struct Whitener {
  Matrix l;
  explicit Whitener(const Matrix& p) {
    Eigen::LLT<Matrix> llt(p);
    if (llt.info() != Eigen::Success) fail("SPD point is not positive definite");
    l = llt.matrixL();
  }
  Matrix whiten(const Matrix& q) const {
    auto lv = l.triangularView<Eigen::Lower>();
    Matrix tmp = lv.solve(q);
    return symmetrize(lv.solve(tmp.transpose()));
  }
  Matrix color(const Matrix& w) const { return symmetrize(l * w * l.transpose()); }
};

double spd_distance(const Manifold& m, const SpdPoint& p, const SpdPoint& q) {
  if (m.spd_metric() == SpdMetric::LogEuclidean) {
    return (linalg::sym_log(p.mat()) - linalg::sym_log(q.mat())).norm();
  }
  Whitener w(p.mat());
  Eigen::SelfAdjointEigenSolver<Matrix> es(w.whiten(q.mat()), Eigen::EigenvaluesOnly);
  double acc = 0.0;
  for (int i = 0; i < es.eigenvalues().size(); ++i) {
    double l = std::log(std::max(es.eigenvalues()(i), linalg::kEigenFloor));
    acc += l * l;
  }
  return std::sqrt(acc);
}

SpdPoint spd_geodesic(const Manifold& m, const SpdPoint& p, const SpdPoint& q, double t) {
  if (m.spd_metric() == SpdMetric::LogEuclidean) {
    Matrix l = (1.0 - t) * linalg::sym_log(p.mat()) + t * linalg::sym_log(q.mat());
    return SpdPoint(linalg::sym_exp(l), Unchecked{});
  }
  Whitener w(p.mat());
  return SpdPoint(w.color(linalg::sym_pow(w.whiten(q.mat()), t)), Unchecked{});
}

void check_symmetric_tangent(const Matrix& v) {
  double scale = std::max(1.0, v.cwiseAbs().maxCoeff());
  if ((v - v.transpose()).cwiseAbs().maxCoeff() > kTolerances.tangent * scale) {
    fail("tangent vector is not symmetric");
  }
}

// ---- Grassmann ----------------------------------------------------------

// Principal-angle decomposition of Y relative to X:
//   X Uc = X', Y Vc = Y', X'ᵀ Y' = diag(cos θ), Y' - X' diag(cos θ) = Q diag(sin θ).
// The angles come from atan2(sin, cos), accurate at both ends of [0, π/2].
struct PrincipalAngles {
  Vector theta;
  Matrix q;   // n x k, orthonormal where sin θ > 0
  Matrix uc;  // k x k
  Matrix vc;  // k x k
};

PrincipalAngles principal_angles(const Matrix& x, const Matrix& y) {
  Matrix xy = x.transpose() * y;
  Eigen::JacobiSVD<Matrix> svd(xy, Eigen::ComputeFullU | Eigen::ComputeFullV);
  PrincipalAngles pa;
  pa.uc = svd.matrixU();
  pa.vc = svd.matrixV();
  const int k = static_cast<int>(x.cols());
  Matrix xr = x * pa.uc;
  Matrix yr = y * pa.vc;
  // Residual orthogonal to span(X); the projection form keeps the tiny
  // sines accurate.
  Matrix resid = yr - x * (x.transpose() * yr);
  pa.theta.resize(k);
  pa.q = Matrix::Zero(x.rows(), k);
  for (int i = 0; i < k; ++i) {
    double c = std::clamp(svd.singularValues()(i), 0.0, 1.0);
    double s = resid.col(i).norm();
    pa.theta(i) = std::atan2(s, c);
    if (s > 0.0) pa.q.col(i) = resid.col(i) / s;
  }
  return pa;
}

Matrix grassmann_log(const Matrix& x, const Matrix& y) {
  PrincipalAngles pa = principal_angles(x, y);
  // Tangent in the rotated basis X' is Q diag(θ); map back to the X basis.
  return pa.q * pa.theta.asDiagonal() * pa.uc.transpose();
}

Matrix grassmann_exp(const Matrix& x, const Matrix& delta) {
  Eigen::JacobiSVD<Matrix> svd(delta, Eigen::ComputeThinU | Eigen::ComputeThinV);
  const Vector& s = svd.singularValues();
  const Matrix& u = svd.matrixU();
  const Matrix& v = svd.matrixV();
  Vector c = s.array().cos();
  Vector sn = s.array().sin();
  Matrix y = x * v * c.asDiagonal() * v.transpose() + u * sn.asDiagonal() * v.transpose();
  Matrix out;
  if (!linalg::polar_orthonormalize(y, out)) {
    throw NumericalError("grassmann exp produced a rank-deficient basis");
  }
  return out;
}

void check_grassmann_tangent(const Matrix& x, const Matrix& delta) {
  check_same_shape(x, delta);
  if ((x.transpose() * delta).cwiseAbs().maxCoeff() >
      kTolerances.tangent * std::max(1.0, delta.norm())) {
    fail("tangent vector is not horizontal (Xᵀ Δ != 0)");
  }
}

// ---- Sphere -------------------------------------------------------------

double sphere_angle(const Vector& p, const Vector& q) {
  // 2 atan2(|p - q|, |p + q|) equals arccos(<p, q>) for unit vectors but
  // keeps full precision near 0 and π.
  return 2.0 * std::atan2((p - q).norm(), (p + q).norm());
}

Vector sphere_log(const Vector& p, const Vector& q) {
  double theta = sphere_angle(p, q);
  if (theta >= std::numbers::pi - kTolerances.antipodal) {
    fail("sphere points are (nearly) antipodal; geodesic is not unique");
  }
  Vector v = q - p.dot(q) * p;
  double n = v.norm();
  if (theta == 0.0 || n == 0.0) return Vector::Zero(p.size());
  return (theta / n) * v;
}

Vector sphere_exp(const Vector& p, const Vector& v) {
  double n = v.norm();
  if (n == 0.0) return p;
  Vector r = std::cos(n) * p + (std::sin(n) / n) * v;
  return r / r.norm();
}

void check_sphere_tangent(const Vector& p, const Matrix& v) {
  if (v.cols() != 1 || v.rows() != p.size()) fail("tangent dimension mismatch");
  if (std::abs(p.dot(v.col(0))) > kTolerances.tangent * std::max(1.0, v.norm())) {
    fail("tangent vector is not orthogonal to the base point");
  }
}

}  // namespace

// ---- point constructors ---------------------------------------------------

SpdPoint::SpdPoint(Matrix mat) : mat_(std::move(mat)) {
  if (mat_.rows() < 1 || mat_.rows() != mat_.cols()) fail("SPD point must be square, n >= 1");
  require_finite(mat_, "SPD point");
  if ((mat_ - mat_.transpose()).cwiseAbs().maxCoeff() > kTolerances.symmetry) {
    fail("SPD point is not symmetric");
  }
  if (linalg::min_eigenvalue(symmetrize(mat_)) <= kTolerances.spd_min_eigenvalue) {
    fail("SPD point is not positive definite");
  }
}

GrassmannPoint::GrassmannPoint(Matrix basis) : basis_(std::move(basis)) {
  if (basis_.cols() < 1 || basis_.cols() > basis_.rows()) {
    fail("Grassmann basis must be n x k with 1 <= k <= n");
  }
  require_finite(basis_, "Grassmann basis");
  Matrix gram = basis_.transpose() * basis_;
  if ((gram - Matrix::Identity(gram.rows(), gram.cols())).cwiseAbs().maxCoeff() >
      kTolerances.orthonormality) {
    fail("Grassmann basis is not orthonormal");
  }
}

SpherePoint::SpherePoint(Vector vec) : vec_(std::move(vec)) {
  if (vec_.size() < 1) fail("sphere point must be non-empty");
  require_finite(vec_, "sphere point");
  if (std::abs(vec_.norm() - 1.0) > kTolerances.unit_norm) fail("sphere point is not unit norm");
}

EuclideanPoint::EuclideanPoint(Vector vec) : vec_(std::move(vec)) {
  if (vec_.size() < 1) fail("Euclidean point must be non-empty");
  require_finite(vec_, "Euclidean point");
}

ManifoldKind kind_of(const ManifoldPoint& p) {
  switch (p.index()) {
    case 0: return ManifoldKind::Spd;
    case 1: return ManifoldKind::Grassmann;
    case 2: return ManifoldKind::Sphere;
    default: return ManifoldKind::Euclidean;
  }
}

Matrix as_matrix(const ManifoldPoint& p) {
  return std::visit(
      [](const auto& x) -> Matrix {
        using T = std::decay_t<decltype(x)>;
        if constexpr (std::is_same_v<T, SpdPoint>) return x.mat();
        else if constexpr (std::is_same_v<T, GrassmannPoint>) return x.basis();
        else return x.vec();
      },
      p);
}

// ---- Manifold -------------------------------------------------------------

Manifold Manifold::from_name(const std::string& name) {
  if (name == "spd" || name == "spd-ai") return spd(SpdMetric::AffineInvariant);
  if (name == "spd-le") return spd(SpdMetric::LogEuclidean);
  if (name == "grassmann") return grassmann();
  if (name == "sphere") return sphere();
  if (name == "euclidean") return euclidean();
  fail("unknown manifold '" + name + "'");
}

std::string Manifold::name() const {
  if (kind_ == ManifoldKind::Spd && metric_ == SpdMetric::LogEuclidean) return "spd-le";
  return kind_name(kind_);
}

double Manifold::ball_radius_bound() const {
  switch (kind_) {
    case ManifoldKind::Sphere:
    case ManifoldKind::Grassmann: return std::numbers::pi / 2.0;
    default: return std::numeric_limits<double>::infinity();
  }
}

// ---- Isometry -------------------------------------------------------------

namespace {

bool orthogonal_matrix(const Matrix& q) {
  if (q.rows() != q.cols()) return false;
  return (q.transpose() * q - Matrix::Identity(q.rows(), q.cols())).cwiseAbs().maxCoeff() <=
         kTolerances.orthonormality;
}

void require_orthogonal(const Matrix& q, const char* what) {
  require_finite(q, what);
  if (!orthogonal_matrix(q)) fail(std::string(what) + ": group element is not orthogonal");
}

void require_rotation(const Matrix& r, const char* what) {
  require_orthogonal(r, what);
  if (std::abs(r.determinant() - 1.0) > kTolerances.rotation_det) {
    fail(std::string(what) + ": rotation must have determinant +1");
  }
}

}  // namespace

Isometry Isometry::identity(ManifoldKind kind, int n) {
  Vector t = kind == ManifoldKind::Euclidean ? Vector::Zero(n) : Vector();
  return Isometry(kind, Matrix::Identity(n, n), std::move(t), true);
}

Isometry Isometry::spd_orthogonal(Matrix q) {
  require_orthogonal(q, "SPD isometry");
  return Isometry(ManifoldKind::Spd, std::move(q), Vector(), true);
}

Isometry Isometry::spd_congruence(Matrix g) {
  require_finite(g, "SPD congruence");
  if (g.rows() != g.cols() || g.rows() < 1) fail("SPD congruence must be square");
  Eigen::JacobiSVD<Matrix> svd(g);
  const Vector& s = svd.singularValues();
  if (!(s(s.size() - 1) > 0.0) || s(0) / s(s.size() - 1) >= kTolerances.max_condition) {
    fail("SPD congruence: group element is singular or ill-conditioned");
  }
  bool orth = orthogonal_matrix(g);
  return Isometry(ManifoldKind::Spd, std::move(g), Vector(), orth);
}

Isometry Isometry::sphere_rotation(Matrix r) {
  require_rotation(r, "sphere isometry");
  return Isometry(ManifoldKind::Sphere, std::move(r), Vector(), true);
}

Isometry Isometry::grassmann(Matrix q) {
  require_orthogonal(q, "Grassmann isometry");
  return Isometry(ManifoldKind::Grassmann, std::move(q), Vector(), true);
}

Isometry Isometry::euclidean(Matrix r, Vector t) {
  require_rotation(r, "Euclidean isometry");
  require_finite(t, "Euclidean translation");
  if (t.size() != r.rows()) fail("Euclidean isometry: translation dimension mismatch");
  return Isometry(ManifoldKind::Euclidean, std::move(r), std::move(t), true);
}

// ---- operations -------------------------------------------------------------

double distance(const Manifold& m, const ManifoldPoint& p, const ManifoldPoint& q) {
  if (p.index() == q.index() && kind_of(p) == m.kind()) {
    const Matrix a = as_matrix(p), b = as_matrix(q);
    if (a.rows() == b.rows() && a.cols() == b.cols() && a == b) return 0.0;
  }
  switch (m.kind()) {
    case ManifoldKind::Spd: {
      const auto& a = expect<SpdPoint>(p, m);
      const auto& b = expect<SpdPoint>(q, m);
      check_same_shape(a.mat(), b.mat());
      return spd_distance(m, a, b);
    }
    case ManifoldKind::Grassmann: {
      const auto& a = expect<GrassmannPoint>(p, m);
      const auto& b = expect<GrassmannPoint>(q, m);
      check_same_shape(a.basis(), b.basis());
      return principal_angles(a.basis(), b.basis()).theta.norm();
    }
    case ManifoldKind::Sphere: {
      const auto& a = expect<SpherePoint>(p, m);
      const auto& b = expect<SpherePoint>(q, m);
      check_same_shape(a.vec(), b.vec());
      return sphere_angle(a.vec(), b.vec());
    }
    case ManifoldKind::Euclidean: {
      const auto& a = expect<EuclideanPoint>(p, m);
      const auto& b = expect<EuclideanPoint>(q, m);
      check_same_shape(a.vec(), b.vec());
      return (a.vec() - b.vec()).norm();
    }
  }
  return 0.0;
}

ManifoldPoint geodesic(const Manifold& m, const ManifoldPoint& p, const ManifoldPoint& q,
                       double t) {
  if (!(t >= 0.0 && t <= 1.0)) fail("geodesic parameter t must lie in [0, 1]");
  switch (m.kind()) {
    case ManifoldKind::Spd: {
      const auto& a = expect<SpdPoint>(p, m);
      const auto& b = expect<SpdPoint>(q, m);
      check_same_shape(a.mat(), b.mat());
      if (t == 0.0) return a;
      if (t == 1.0) return b;
      return spd_geodesic(m, a, b, t);
    }
    case ManifoldKind::Grassmann: {
      const auto& a = expect<GrassmannPoint>(p, m);
      const auto& b = expect<GrassmannPoint>(q, m);
      check_same_shape(a.basis(), b.basis());
      if (t == 0.0) return a;
      if (t == 1.0) return b;
      return GrassmannPoint(grassmann_exp(a.basis(), t * grassmann_log(a.basis(), b.basis())),
                            Unchecked{});
    }
    case ManifoldKind::Sphere: {
      const auto& a = expect<SpherePoint>(p, m);
      const auto& b = expect<SpherePoint>(q, m);
      check_same_shape(a.vec(), b.vec());
      Vector v = sphere_log(a.vec(), b.vec());
      if (t == 0.0) return a;
      if (t == 1.0) return b;
      return SpherePoint(sphere_exp(a.vec(), t * v), Unchecked{});
    }
    case ManifoldKind::Euclidean: {
      const auto& a = expect<EuclideanPoint>(p, m);
      const auto& b = expect<EuclideanPoint>(q, m);
      check_same_shape(a.vec(), b.vec());
      return EuclideanPoint(a.vec() + t * (b.vec() - a.vec()));
    }
  }
  return p;
}

Tangent log_map(const Manifold& m, const ManifoldPoint& p, const ManifoldPoint& q) {
  switch (m.kind()) {
    case ManifoldKind::Spd: {
      const auto& a = expect<SpdPoint>(p, m);
      const auto& b = expect<SpdPoint>(q, m);
      check_same_shape(a.mat(), b.mat());
      if (m.spd_metric() == SpdMetric::LogEuclidean) {
        return linalg::sym_log(b.mat()) - linalg::sym_log(a.mat());
      }
      Whitener w(a.mat());
      return w.color(linalg::sym_log(w.whiten(b.mat())));
    }
    case ManifoldKind::Grassmann: {
      const auto& a = expect<GrassmannPoint>(p, m);
      const auto& b = expect<GrassmannPoint>(q, m);
      check_same_shape(a.basis(), b.basis());
      return grassmann_log(a.basis(), b.basis());
    }
    case ManifoldKind::Sphere: {
      const auto& a = expect<SpherePoint>(p, m);
      const auto& b = expect<SpherePoint>(q, m);
      check_same_shape(a.vec(), b.vec());
      return sphere_log(a.vec(), b.vec());
    }
    case ManifoldKind::Euclidean: {
      const auto& a = expect<EuclideanPoint>(p, m);
      const auto& b = expect<EuclideanPoint>(q, m);
      check_same_shape(a.vec(), b.vec());
      return b.vec() - a.vec();
    }
  }
  return {};
}

ManifoldPoint exp_map(const Manifold& m, const ManifoldPoint& p, const Tangent& v) {
  require_finite(v, "tangent vector");
  switch (m.kind()) {
    case ManifoldKind::Spd: {
      const auto& a = expect<SpdPoint>(p, m);
      check_same_shape(a.mat(), v);
      check_symmetric_tangent(v);
      if (v.isZero(0.0)) return a;
      if (m.spd_metric() == SpdMetric::LogEuclidean) {
        return SpdPoint(linalg::sym_exp(linalg::sym_log(a.mat()) + symmetrize(v)), Unchecked{});
      }
      Whitener w(a.mat());
      return SpdPoint(w.color(linalg::sym_exp(w.whiten(symmetrize(v)))), Unchecked{});
    }
    case ManifoldKind::Grassmann: {
      const auto& a = expect<GrassmannPoint>(p, m);
      check_grassmann_tangent(a.basis(), v);
      if (v.isZero(0.0)) return a;
      return GrassmannPoint(grassmann_exp(a.basis(), v), Unchecked{});
    }
    case ManifoldKind::Sphere: {
      const auto& a = expect<SpherePoint>(p, m);
      check_sphere_tangent(a.vec(), v);
      return SpherePoint(sphere_exp(a.vec(), v.col(0)), Unchecked{});
    }
    case ManifoldKind::Euclidean: {
      const auto& a = expect<EuclideanPoint>(p, m);
      if (v.cols() != 1 || v.rows() != a.dim()) fail("tangent dimension mismatch");
      return EuclideanPoint(a.vec() + v.col(0));
    }
  }
  return p;
}

double tangent_norm(const Manifold& m, const ManifoldPoint& p, const Tangent& v) {
  if (m.kind() == ManifoldKind::Spd && m.spd_metric() == SpdMetric::AffineInvariant) {
    const auto& a = expect<SpdPoint>(p, m);
    check_same_shape(a.mat(), v);
    return Whitener(a.mat()).whiten(v).norm();
  }
  return v.norm();
}

ManifoldPoint act(const Manifold& m, const Isometry& g, const ManifoldPoint& p) {
  if (g.kind() != m.kind()) fail("isometry and point are on different manifolds");
  const Matrix& a = g.matrix();
  switch (m.kind()) {
    case ManifoldKind::Spd: {
      const auto& x = expect<SpdPoint>(p, m);
      if (m.spd_metric() == SpdMetric::LogEuclidean && !g.is_orthogonal()) {
        fail("non-orthogonal congruence is not an isometry of the Log-Euclidean metric");
      }
      if (a.cols() != x.dim()) fail("isometry dimension mismatch");
      return SpdPoint(symmetrize(a * x.mat() * a.transpose()));
    }
    case ManifoldKind::Grassmann: {
      const auto& x = expect<GrassmannPoint>(p, m);
      if (a.cols() != x.ambient_dim()) fail("isometry dimension mismatch");
      Matrix b = a * x.basis();
      Matrix out;
      if (!linalg::polar_orthonormalize(b, out)) throw NumericalError("rank loss under isometry");
      return GrassmannPoint(std::move(out));
    }
    case ManifoldKind::Sphere: {
      const auto& x = expect<SpherePoint>(p, m);
      if (a.cols() != x.dim()) fail("isometry dimension mismatch");
      Vector v = a * x.vec();
      return SpherePoint(v / v.norm());
    }
    case ManifoldKind::Euclidean: {
      const auto& x = expect<EuclideanPoint>(p, m);
      if (a.cols() != x.dim()) fail("isometry dimension mismatch");
      return EuclideanPoint(a * x.vec() + g.translation());
    }
  }
  return p;
}

void validate_ball(const Manifold& m, const BallSpec& ball) {
  if (kind_of(ball.center) != m.kind()) fail("ball center is not on the manifold");
  if (!(ball.radius > 0.0) || !std::isfinite(ball.radius)) {
    fail("ball radius must be positive and finite");
  }
  if (ball.radius >= m.ball_radius_bound()) {
    std::ostringstream os;
    os << "ball radius " << ball.radius << " violates the " << m.name() << " bound "
       << m.ball_radius_bound();
    fail(os.str());
  }
}

ManifoldPoint random_point_in_ball(const Manifold& m, const BallSpec& ball,
                                   std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  return random_point_in_ball(m, ball, rng);
}

ManifoldPoint random_point_in_ball(const Manifold& m, const BallSpec& ball,
                                   std::mt19937_64& rng) {
  validate_ball(m, ball);
  const ManifoldPoint& c = ball.center;
  Matrix cm = as_matrix(c);
  Matrix dir;
  switch (m.kind()) {
    case ManifoldKind::Spd: {
      Matrix s = symmetrize(linalg::gaussian_matrix(cm.rows(), cm.cols(), rng));
      dir = m.spd_metric() == SpdMetric::AffineInvariant ? Whitener(cm).color(s) : s;
      break;
    }
    case ManifoldKind::Grassmann: {
      Matrix g = linalg::gaussian_matrix(cm.rows(), cm.cols(), rng);
      dir = g - cm * (cm.transpose() * g);
      break;
    }
    case ManifoldKind::Sphere: {
      Vector g = linalg::gaussian_matrix(cm.rows(), 1, rng);
      dir = g - cm.col(0).dot(g) * cm.col(0);
      break;
    }
    case ManifoldKind::Euclidean:
      dir = linalg::gaussian_matrix(cm.rows(), 1, rng);
      break;
  }
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  double frac = unif(rng);
  double n = tangent_norm(m, c, dir);
  if (n == 0.0) return c;
  // 1 - 1e-9 keeps the sample strictly inside after round-off in exp/distance.
  return exp_map(m, c, dir * (frac * ball.radius * (1.0 - 1e-9) / n));
}

ManifoldPoint project_to_manifold(const Manifold& m, const Matrix& raw) {
  require_finite(raw, "projection input");
  switch (m.kind()) {
    case ManifoldKind::Spd: {
      if (raw.rows() != raw.cols() || raw.rows() < 1) fail("SPD projection needs a square matrix");
      Matrix s = symmetrize(raw);
      if (linalg::min_eigenvalue(s) >= linalg::kEigenFloor) return SpdPoint(std::move(s), Unchecked{});
      return SpdPoint(linalg::clamp_spectrum(s), Unchecked{});
    }
    case ManifoldKind::Grassmann: {
      if (raw.cols() < 1 || raw.cols() > raw.rows()) fail("Grassmann projection needs n x k, k <= n");
      Matrix out;
      if (!linalg::polar_orthonormalize(raw, out)) fail("Grassmann projection: rank-deficient basis");
      return GrassmannPoint(std::move(out), Unchecked{});
    }
    case ManifoldKind::Sphere: {
      if (raw.cols() != 1) fail("sphere projection needs a column vector");
      double n = raw.norm();
      if (n == 0.0) fail("sphere projection: zero vector");
      return SpherePoint(raw.col(0) / n, Unchecked{});
    }
    case ManifoldKind::Euclidean:
      if (raw.cols() != 1) fail("Euclidean projection needs a column vector");
      return EuclideanPoint(raw.col(0));
  }
  return EuclideanPoint(raw.col(0));
}

Isometry random_isometry(const Manifold& m, const ManifoldPoint& like, std::mt19937_64& rng) {
  if (kind_of(like) != m.kind()) fail("reference point is not on the manifold");
  const int n = static_cast<int>(as_matrix(like).rows());
  switch (m.kind()) {
    case ManifoldKind::Spd: {
      if (m.spd_metric() == SpdMetric::LogEuclidean) {
        return Isometry::spd_orthogonal(linalg::random_orthogonal(n, rng));
      }
      Matrix q1 = linalg::random_orthogonal(n, rng);
      Matrix q2 = linalg::random_orthogonal(n, rng);
      std::uniform_real_distribution<double> unif(-0.5, 0.5);
      Vector s(n);
      for (int i = 0; i < n; ++i) s(i) = std::exp(unif(rng));
      return Isometry::spd_congruence(q1 * s.asDiagonal() * q2);
    }
    case ManifoldKind::Grassmann: return Isometry::grassmann(linalg::random_orthogonal(n, rng));
    case ManifoldKind::Sphere: return Isometry::sphere_rotation(linalg::random_rotation(n, rng));
    case ManifoldKind::Euclidean: {
      Matrix r = linalg::random_rotation(n, rng);
      Vector t = linalg::gaussian_matrix(n, 1, rng);
      return Isometry::euclidean(std::move(r), std::move(t));
    }
  }
  return Isometry::identity(m.kind(), n);
}

void write_csv(std::ostream& os, const Matrix& mat) {
  std::ostringstream line;
  line << std::setprecision(17);
  for (int i = 0; i < mat.rows(); ++i) {
    for (int j = 0; j < mat.cols(); ++j) {
      if (j > 0) os << ',';
      line.str("");
      line << mat(i, j);
      os << line.str();
    }
    os << '\n';
  }
}

}  // namespace mfnet
