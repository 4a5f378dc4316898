#include "mfnet/ifme.hpp"

#include "mfnet/errors.hpp"
#include "mfnet/parallel.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace mfnet {

WeightVector::WeightVector(std::vector<double> weights) : w_(std::move(weights)) {
  if (w_.empty()) throw InvalidArgument("weight vector must be non-empty");
  for (std::size_t i = 0; i < w_.size(); ++i) {
    if (!(w_[i] > 0.0) || !std::isfinite(w_[i])) {
      std::ostringstream os;
      os << "weight " << i << " must be finite and positive (got " << w_[i] << ")";
      throw InvalidArgument(os.str());
    }
  }
}

WeightVector WeightVector::uniform(std::size_t n) {
  return WeightVector(std::vector<double>(n, 1.0 / static_cast<double>(n)));
}

double WeightVector::sum() const {
  double s = 0.0;
  for (double w : w_) s += w;
  return s;
}

std::vector<double> WeightVector::normalized() const {
  const double s = sum();
  std::vector<double> out(w_.size());
  std::transform(w_.begin(), w_.end(), out.begin(), [s](double w) { return w / s; });
  return out;
}

PointSequence::PointSequence(Manifold manifold, std::vector<ManifoldPoint> points,
                             std::optional<BallSpec> ball)
    : manifold_(manifold), points_(std::move(points)), ball_(std::move(ball)) {
  for (const auto& p : points_) {
    if (kind_of(p) != manifold_.kind()) {
      throw InvalidArgument("point sequence mixes manifolds");
    }
  }
  if (ball_) {
    validate_ball(manifold_, *ball_);
    for (std::size_t i = 0; i < points_.size(); ++i) {
      if (distance(manifold_, ball_->center, points_[i]) >= ball_->radius) {
        throw InvalidArgument("point " + std::to_string(i) + " lies outside the sequence ball");
      }
    }
  }
}

ManifoldPoint ifme_wfm(const Manifold& m, std::span<const ManifoldPoint> points,
                       std::span<const double> weights) {
  if (points.empty()) throw InvalidArgument("ifme_wfm: empty sequence");
  if (points.size() != weights.size()) {
    throw InvalidArgument("ifme_wfm: " + std::to_string(points.size()) + " points but " +
                          std::to_string(weights.size()) + " weights");
  }
  for (double w : weights) {
    if (!(w > 0.0) || !std::isfinite(w)) throw InvalidArgument("ifme_wfm: nonpositive weight");
  }
  ManifoldPoint est = points[0];
  double acc = weights[0];
  for (std::size_t n = 1; n < points.size(); ++n) {
    acc += weights[n];
    est = geodesic(m, est, points[n], weights[n] / acc);
  }
  return est;
}

ManifoldPoint ifme_wfm(const PointSequence& seq, const WeightVector& w) {
  return ifme_wfm(seq.manifold(), seq.points(), w.raw());
}

OracleResult wfm_oracle_solve(const Manifold& m, std::span<const ManifoldPoint> points,
                              std::span<const double> weights, const OracleOptions& opts) {
  if (points.empty()) throw InvalidArgument("wfm_oracle: empty sequence");
  if (points.size() != weights.size()) throw InvalidArgument("wfm_oracle: size mismatch");
  if (!(opts.step > 0.0) || !(opts.tol > 0.0) || opts.max_iter < 1) {
    throw InvalidArgument("wfm_oracle: step, tol and max_iter must be positive");
  }
  const WeightVector wv(std::vector<double>(weights.begin(), weights.end()));
  const std::vector<double> wn = wv.normalized();

  ManifoldPoint est = opts.init ? *opts.init : ifme_wfm(m, points, weights);
  double residual = 0.0;
  for (int it = 0; it < opts.max_iter; ++it) {
    Tangent grad = wn[0] * log_map(m, est, points[0]);
    for (std::size_t i = 1; i < points.size(); ++i) grad += wn[i] * log_map(m, est, points[i]);
    residual = tangent_norm(m, est, grad);
    if (!std::isfinite(residual)) break;
    if (residual < opts.tol) return {std::move(est), residual, it};
    est = exp_map(m, est, opts.step * grad);
  }
  std::ostringstream os;
  os << "wfm_oracle did not converge in " << opts.max_iter << " iterations (residual "
     << residual << ")";
  throw NumericalError(os.str(), residual);
}

ManifoldPoint wfm_oracle(const PointSequence& seq, const WeightVector& w,
                         const OracleOptions& opts) {
  return wfm_oracle_solve(seq.manifold(), seq.points(), w.raw(), opts).point;
}

std::vector<CurvePoint> consistency_curve(const Manifold& m, const PointSampler& sampler,
                                          const WeightFn& w_fn, std::span<const std::size_t> sizes,
                                          int seeds, std::uint64_t base_seed,
                                          const OracleOptions& opts) {
  if (seeds < 1) throw InvalidArgument("consistency_curve: seeds must be >= 1");
  for (std::size_t i = 0; i < sizes.size(); ++i) {
    if (sizes[i] < 1 || (i > 0 && sizes[i] <= sizes[i - 1])) {
      throw InvalidArgument("consistency_curve: sizes must be positive and increasing");
    }
  }
  std::vector<CurvePoint> curve;
  for (std::size_t n : sizes) {
    std::vector<double> errors(static_cast<std::size_t>(seeds));
    parallel_for(errors.size(), [&](std::size_t s) {
      const std::uint64_t seed = base_seed + s;
      std::vector<ManifoldPoint> pts = sampler(n, seed);
      WeightVector w = w_fn(n, seed);
      ManifoldPoint rec = ifme_wfm(m, pts, w.raw());
      ManifoldPoint ref = wfm_oracle_solve(m, pts, w.raw(), opts).point;
      errors[s] = distance(m, rec, ref);
    });
    std::sort(errors.begin(), errors.end());
    const std::size_t h = errors.size() / 2;
    double med = errors.size() % 2 ? errors[h] : 0.5 * (errors[h - 1] + errors[h]);
    curve.push_back({n, med});
  }
  return curve;
}

}  // namespace mfnet
