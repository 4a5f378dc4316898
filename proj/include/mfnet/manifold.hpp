#pragma once

// Supported Riemannian manifolds: SPD matrices (affine-invariant or
// Log-Euclidean metric), the Grassmannian Gr(k, n) in orthonormal-basis
// representation, the unit sphere, and flat Euclidean space.
//
// Points are immutable values held in ManifoldPoint. Tangent vectors are
// plain matrices in the ambient representation (vectors are n x 1):
//   SPD / affine-invariant  symmetric V at P, norm ||L^-1 V L^-T||_F (P = L Lᵀ)
//   SPD / Log-Euclidean     symmetric V in log coordinates, Frobenius norm
//   Grassmann               n x k Δ with Xᵀ Δ = 0, Frobenius norm
//   Sphere                  v with <p, v> = 0
//   Euclidean               any vector

#include "mfnet/linalg.hpp"

#include <cstdint>
#include <iosfwd>
#include <random>
#include <string>
#include <variant>

namespace mfnet {

using linalg::Matrix;
using linalg::Vector;
using Tangent = Matrix;

struct Tolerances {
  double symmetry = 1e-10;
  double spd_min_eigenvalue = 1e-12;
  double orthonormality = 1e-10;
  double unit_norm = 1e-12;
  double tangent = 1e-8;
  double grassmann_equal = 1e-8;
  double antipodal = 1e-6;
  double rotation_det = 1e-8;
  double max_condition = 1e8;
};

inline constexpr Tolerances kTolerances{};

enum class ManifoldKind { Spd, Grassmann, Sphere, Euclidean };
enum class SpdMetric { AffineInvariant, LogEuclidean };

// Tag for constructors that skip invariant checks; used on outputs of
// operations that preserve the manifold by construction.
struct Unchecked {};

class SpdPoint {
 public:
  explicit SpdPoint(Matrix mat);
  SpdPoint(Matrix mat, Unchecked) : mat_(std::move(mat)) {}
  const Matrix& mat() const { return mat_; }
  int dim() const { return static_cast<int>(mat_.rows()); }

 private:
  Matrix mat_;
};

class GrassmannPoint {
 public:
  explicit GrassmannPoint(Matrix basis);
  GrassmannPoint(Matrix basis, Unchecked) : basis_(std::move(basis)) {}
  const Matrix& basis() const { return basis_; }
  int ambient_dim() const { return static_cast<int>(basis_.rows()); }
  int sub_dim() const { return static_cast<int>(basis_.cols()); }

 private:
  Matrix basis_;
};

class SpherePoint {
 public:
  explicit SpherePoint(Vector vec);
  SpherePoint(Vector vec, Unchecked) : vec_(std::move(vec)) {}
  const Vector& vec() const { return vec_; }
  int dim() const { return static_cast<int>(vec_.size()); }

 private:
  Vector vec_;
};

class EuclideanPoint {
 public:
  explicit EuclideanPoint(Vector vec);
  const Vector& vec() const { return vec_; }
  int dim() const { return static_cast<int>(vec_.size()); }

 private:
  Vector vec_;
};

using ManifoldPoint = std::variant<SpdPoint, GrassmannPoint, SpherePoint, EuclideanPoint>;

ManifoldKind kind_of(const ManifoldPoint& p);
// Matrix view of a point (vectors as n x 1).
Matrix as_matrix(const ManifoldPoint& p);

class Manifold {
 public:
  static Manifold spd(SpdMetric metric = SpdMetric::AffineInvariant) {
    return Manifold(ManifoldKind::Spd, metric);
  }
  static Manifold grassmann() { return Manifold(ManifoldKind::Grassmann); }
  static Manifold sphere() { return Manifold(ManifoldKind::Sphere); }
  static Manifold euclidean() { return Manifold(ManifoldKind::Euclidean); }
  // "spd", "spd-le", "grassmann", "sphere", "euclidean".
  static Manifold from_name(const std::string& name);

  ManifoldKind kind() const { return kind_; }
  SpdMetric spd_metric() const { return metric_; }
  std::string name() const;

  // Radius bound for regular geodesic balls (infinity when unbounded).
  double ball_radius_bound() const;

  bool operator==(const Manifold&) const = default;

 private:
  explicit Manifold(ManifoldKind kind, SpdMetric metric = SpdMetric::AffineInvariant)
      : kind_(kind), metric_(metric) {}
  ManifoldKind kind_;
  SpdMetric metric_;
};

class Isometry {
 public:
  static Isometry identity(ManifoldKind kind, int n);
  // X -> Q X Qᵀ; an isometry of both SPD metrics.
  static Isometry spd_orthogonal(Matrix q);
  // X -> G X Gᵀ; an isometry of the affine-invariant metric only.
  static Isometry spd_congruence(Matrix g);
  static Isometry sphere_rotation(Matrix r);
  // Basis -> Q basis.
  static Isometry grassmann(Matrix q);
  static Isometry euclidean(Matrix r, Vector t);

  ManifoldKind kind() const { return kind_; }
  const Matrix& matrix() const { return g_; }
  const Vector& translation() const { return t_; }
  bool is_orthogonal() const { return orthogonal_; }

 private:
  Isometry(ManifoldKind kind, Matrix g, Vector t, bool orthogonal)
      : kind_(kind), g_(std::move(g)), t_(std::move(t)), orthogonal_(orthogonal) {}
  ManifoldKind kind_;
  Matrix g_;
  Vector t_;
  bool orthogonal_;
};

struct BallSpec {
  ManifoldPoint center;
  double radius;
};

double distance(const Manifold& m, const ManifoldPoint& p, const ManifoldPoint& q);
ManifoldPoint geodesic(const Manifold& m, const ManifoldPoint& p, const ManifoldPoint& q,
                       double t);
Tangent log_map(const Manifold& m, const ManifoldPoint& p, const ManifoldPoint& q);
ManifoldPoint exp_map(const Manifold& m, const ManifoldPoint& p, const Tangent& v);
double tangent_norm(const Manifold& m, const ManifoldPoint& p, const Tangent& v);
ManifoldPoint act(const Manifold& m, const Isometry& g, const ManifoldPoint& p);

// Throws InvalidArgument if the ball violates the manifold's radius bound.
void validate_ball(const Manifold& m, const BallSpec& ball);
ManifoldPoint random_point_in_ball(const Manifold& m, const BallSpec& ball,
                                   std::uint64_t seed);
ManifoldPoint random_point_in_ball(const Manifold& m, const BallSpec& ball,
                                   std::mt19937_64& rng);

// SPD: symmetrize, clamp eigenvalues to >= 1e-10. Grassmann: nearest
// orthonormal basis. Sphere: normalize. Euclidean: finite check.
// For Euclidean and sphere `raw` is a column vector (n x 1).
ManifoldPoint project_to_manifold(const Manifold& m, const Matrix& raw);

// Random group element acting on points shaped like `like`.
Isometry random_isometry(const Manifold& m, const ManifoldPoint& like, std::mt19937_64& rng);

// Row-major CSV dump of the point's matrix view.
void write_csv(std::ostream& os, const Matrix& mat);

}  // namespace mfnet
