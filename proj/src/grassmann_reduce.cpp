#include "mfnet/grassmann_reduce.hpp"

#include "mfnet/errors.hpp"
#include "mfnet/ifme.hpp"
#include "mfnet/layers.hpp"
#include "mfnet/linalg.hpp"

#include <Eigen/Eigenvalues>
#include <Eigen/SVD>

namespace mfnet {

StreamingSubspace::StreamingSubspace(int n, int k) : n_(n), k_(k) {
  if (k < 1 || n < k) throw InvalidArgument("need n >= k >= 1");
  block_ = Matrix::Zero(n, k);
}

void StreamingSubspace::push(const Vector& v) {
  if (v.size() != n_) {
    throw InvalidArgument("expected a vector of length " + std::to_string(n_) + ", got " +
                          std::to_string(v.size()));
  }
  if (!v.allFinite()) throw InvalidArgument("non-finite vector in stream");
  block_.col(filled_++) = v;
  ++seen_;
  if (filled_ < k_) return;
  filled_ = 0;

  Matrix basis;
  if (!linalg::polar_orthonormalize(block_, basis)) {
    ++skipped_;
    return;
  }
  GrassmannPoint x(std::move(basis), Unchecked{});
  ++used_;
  if (!estimate_) {
    estimate_ = std::move(x);
    return;
  }
  const Manifold g = Manifold::grassmann();
  ManifoldPoint next = geodesic(g, *estimate_, x, 1.0 / static_cast<double>(used_));
  estimate_ = std::get<GrassmannPoint>(std::move(next));
}

void StreamingSubspace::push_rows(const Matrix& rows) {
  for (int i = 0; i < rows.rows(); ++i) push(rows.row(i).transpose());
}

SubspaceEstimate StreamingSubspace::estimate() const {
  if (!estimate_) {
    throw InvalidArgument("no full-rank block of " + std::to_string(k_) + " vectors yet (" +
                          std::to_string(seen_) + " seen, " + std::to_string(skipped_) + " skipped blocks)");
  }
  return {*estimate_, seen_, used_, skipped_};
}

SubspaceEstimate stream_principal_subspace(const Matrix& vectors, int k) {
  StreamingSubspace s(static_cast<int>(vectors.cols()), k);
  s.push_rows(vectors);
  return s.estimate();
}

GrassmannPoint pca_oracle(const Matrix& vectors, int k) {
  const int n = static_cast<int>(vectors.cols());
  if (k < 1 || k > n) throw InvalidArgument("need 1 <= k <= n");
  if (vectors.rows() < k) throw InvalidArgument("need at least k vectors");
  Matrix xc = vectors.rowwise() - vectors.colwise().mean();
  Matrix cov = xc.transpose() * xc / static_cast<double>(vectors.rows());
  Eigen::SelfAdjointEigenSolver<Matrix> es(linalg::symmetrize(cov));
  // Eigen sorts ascending.
  const Vector& ev = es.eigenvalues();
  if (k < n) {
    const double gap = ev(n - k) - ev(n - k - 1);
    if (gap < 1e-10) throw NumericalError("eigen-gap below 1e-10: principal subspace is ill-posed", gap);
  }
  Matrix basis = es.eigenvectors().rightCols(k).rowwise().reverse();
  return GrassmannPoint(std::move(basis), Unchecked{});
}

double projection_error(const Matrix& vectors, const GrassmannPoint& u) {
  if (vectors.cols() != u.ambient_dim()) throw InvalidArgument("dimension mismatch");
  Matrix xc = vectors.rowwise() - vectors.colwise().mean();
  Matrix r = xc - xc * u.basis() * u.basis().transpose();
  return r.squaredNorm() / static_cast<double>(vectors.size());
}

int grassmann_block_count(int rows, int k) {
  if (k < 1) throw InvalidArgument("k must be >= 1");
  return rows / k;
}

GrassmannLayerOutput grassmann_avg_layer(const Matrix& f, int k, std::span<const double> theta,
                                         const std::optional<Matrix>& gauge) {
  const int n = static_cast<int>(f.rows());
  const int d = static_cast<int>(f.cols());
  if (k < 1 || k > d) throw InvalidArgument("need 1 <= k <= feature dimension");
  if (n < k) throw InvalidArgument("need at least k rows");
  if (!f.allFinite()) throw InvalidArgument("non-finite layer input");
  const int blocks = grassmann_block_count(n, k);
  if (static_cast<int>(theta.size()) != blocks) {
    throw InvalidArgument("expected " + std::to_string(blocks) + " block weights, got " +
                          std::to_string(theta.size()));
  }
  if (gauge && (gauge->rows() != d || gauge->cols() != k)) throw InvalidArgument("gauge shape mismatch");

  GrassmannLayerOutput out{Matrix(), GrassmannPoint(Matrix::Identity(d, k), Unchecked{}), Vector(), 0, 0};
  out.mean = f.colwise().mean().transpose();
  Matrix fc = f.rowwise() - out.mean.transpose();

  std::vector<ManifoldPoint> points;
  std::vector<double> weights;
  const WeightVector w = weight_map(theta);
  for (int b = 0; b < blocks; ++b) {
    Matrix basis;
    if (!linalg::polar_orthonormalize(fc.middleRows(b * k, k).transpose(), basis)) {
      ++out.blocks_skipped;
      continue;
    }
    points.emplace_back(GrassmannPoint(std::move(basis), Unchecked{}));
    weights.push_back(w.raw()[static_cast<std::size_t>(b)]);
  }
  out.blocks_used = static_cast<int>(points.size());
  if (points.empty()) throw NumericalError("every block is rank-deficient", 0.0);

  Matrix u = std::get<GrassmannPoint>(ifme_wfm(Manifold::grassmann(), points, weights)).basis();
  if (gauge) {
    // Orthogonal Procrustes: R = polar(Uᵀ G) minimizes ‖U R − G‖_F.
    Eigen::JacobiSVD<Matrix> svd(u.transpose() * *gauge, Eigen::ComputeFullU | Eigen::ComputeFullV);
    u = u * (svd.matrixU() * svd.matrixV().transpose());
  }
  out.projected = fc * u;
  out.subspace = GrassmannPoint(std::move(u), Unchecked{});
  return out;
}

Matrix grassmann_project(const Matrix& f, const Vector& mean, const GrassmannPoint& u) {
  if (f.cols() != mean.size() || f.cols() != u.ambient_dim()) throw InvalidArgument("dimension mismatch");
  return (f.rowwise() - mean.transpose()) * u.basis();
}

}  // namespace mfnet
