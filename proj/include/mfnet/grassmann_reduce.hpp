#pragma once

// Intrinsic subspace averaging on Gr(k, n): a streaming principal-subspace
// estimator, the eigendecomposition oracle it is checked against, and the
// weighted subspace-averaging layer that replaces a dense bottleneck.

#include "mfnet/manifold.hpp"

#include <optional>
#include <span>
#include <vector>

namespace mfnet {

struct SubspaceEstimate {
  GrassmannPoint point;
  long samples_seen = 0;
  long blocks_used = 0;
  long blocks_skipped = 0;  // rank-deficient blocks
};

// Consumes centered vectors in consecutive blocks of k. Each full block is
// orthonormalized and folded in with M_b = geodesic(M_{b-1}, X_b, 1/b).
class StreamingSubspace {
 public:
  StreamingSubspace(int n, int k);

  void push(const Vector& v);
  void push_rows(const Matrix& rows);  // one vector per row

  int ambient_dim() const { return n_; }
  int sub_dim() const { return k_; }
  bool ready() const { return estimate_.has_value(); }
  long samples_seen() const { return seen_; }
  long blocks_skipped() const { return skipped_; }
  // Throws InvalidArgument until at least one full-rank block has arrived.
  SubspaceEstimate estimate() const;

 private:
  int n_;
  int k_;
  Matrix block_;
  int filled_ = 0;
  long seen_ = 0;
  long used_ = 0;
  long skipped_ = 0;
  std::optional<GrassmannPoint> estimate_;
};

SubspaceEstimate stream_principal_subspace(const Matrix& vectors, int k);

// Top-k eigenvectors of the (centered) sample covariance of the rows.
// Throws NumericalError when λ_k − λ_{k+1} < 1e-10.
GrassmannPoint pca_oracle(const Matrix& vectors, int k);

// ‖Xc − Xc U Uᵀ‖²_F / (rows·cols) with Xc the row-centered data.
double projection_error(const Matrix& vectors, const GrassmannPoint& u);

struct GrassmannLayerOutput {
  Matrix projected;        // N x k, (F − mean) U
  GrassmannPoint subspace; // basis U (D x k)
  Vector mean;             // row mean of F
  int blocks_used = 0;
  int blocks_skipped = 0;
};

// Number of θ entries the layer takes for N rows: floor(N / k).
int grassmann_block_count(int rows, int k);

// Rows of F are centered, grouped into consecutive blocks of k (trailing
// rows beyond the last full block are projected but not averaged), each
// block's row span orthonormalized, and the blocks combined by iFME with
// weights σ(θ_b). When `gauge` is given, U is rotated within its span to
// the orthonormal basis closest to `gauge`, so downstream coordinates stay
// comparable from call to call.
GrassmannLayerOutput grassmann_avg_layer(const Matrix& f, int k, std::span<const double> theta,
                                         const std::optional<Matrix>& gauge = std::nullopt);

// (F − mean) U for a stored mean and subspace (evaluation mode).
Matrix grassmann_project(const Matrix& f, const Vector& mean, const GrassmannPoint& u);

}  // namespace mfnet
