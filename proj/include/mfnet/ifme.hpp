#pragma once

// Weighted Fréchet mean estimation.
//
// ifme_wfm is the recursive estimator used as the wFM "convolution":
//   M_1 = X_1,  M_n = Γ_{M_{n-1}}^{X_n}(w_n / Σ_{j<=n} w_j).
// It depends on input order on curved manifolds; the order is part of the
// contract. wfm_oracle is a Riemannian gradient-descent solver for the
// argmin definition and serves as ground truth.

#include "mfnet/manifold.hpp"

#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <vector>

namespace mfnet {

class WeightVector {
 public:
  // Throws InvalidArgument on an empty vector or any weight that is not a
  // finite positive number.
  explicit WeightVector(std::vector<double> weights);
  static WeightVector uniform(std::size_t n);

  std::size_t size() const { return w_.size(); }
  const std::vector<double>& raw() const { return w_; }
  std::vector<double> normalized() const;
  double sum() const;

 private:
  std::vector<double> w_;
};

class PointSequence {
 public:
  PointSequence(Manifold manifold, std::vector<ManifoldPoint> points,
                std::optional<BallSpec> ball = std::nullopt);

  const Manifold& manifold() const { return manifold_; }
  const std::vector<ManifoldPoint>& points() const { return points_; }
  std::size_t size() const { return points_.size(); }
  const ManifoldPoint& operator[](std::size_t i) const { return points_[i]; }
  const std::optional<BallSpec>& ball() const { return ball_; }

 private:
  Manifold manifold_;
  std::vector<ManifoldPoint> points_;
  std::optional<BallSpec> ball_;
};

ManifoldPoint ifme_wfm(const PointSequence& seq, const WeightVector& w);
// Span form used on hot paths (no sequence validation beyond sizes).
ManifoldPoint ifme_wfm(const Manifold& m, std::span<const ManifoldPoint> points,
                       std::span<const double> weights);

struct OracleOptions {
  double step = 0.5;
  double tol = 1e-10;
  int max_iter = 1000;
  // Starting point; defaults to the recursive estimate.
  std::optional<ManifoldPoint> init;
};

struct OracleResult {
  ManifoldPoint point;
  double residual;  // ||Σ w̃_i log_M(X_i)|| at the returned point
  int iterations;
};

// Fixed point of M <- exp_M(step * Σ w̃_i log_M(X_i)). Throws NumericalError
// (carrying the residual) after max_iter iterations without convergence.
OracleResult wfm_oracle_solve(const Manifold& m, std::span<const ManifoldPoint> points,
                              std::span<const double> weights, const OracleOptions& opts = {});
ManifoldPoint wfm_oracle(const PointSequence& seq, const WeightVector& w,
                         const OracleOptions& opts = {});

struct CurvePoint {
  std::size_t n;
  double error;  // median over seeds of d(ifme, oracle)
};

// Draws `n` i.i.d. points for a seed.
using PointSampler = std::function<std::vector<ManifoldPoint>(std::size_t n, std::uint64_t seed)>;
using WeightFn = std::function<WeightVector(std::size_t n, std::uint64_t seed)>;

// error(N) = median over `seeds` of d(ifme_wfm, wfm_oracle) on the same N
// samples. Seeds are 0..seeds-1 offset by base_seed.
std::vector<CurvePoint> consistency_curve(const Manifold& m, const PointSampler& sampler,
                                          const WeightFn& w_fn, std::span<const std::size_t> sizes,
                                          int seeds = 20, std::uint64_t base_seed = 0,
                                          const OracleOptions& opts = {});

}  // namespace mfnet
