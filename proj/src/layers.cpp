#include "mfnet/layers.hpp"

#include "mfnet/errors.hpp"
#include "mfnet/parallel.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

namespace mfnet {

double sigmoid(double x) {
  if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

double logit(double p) { return std::log(p / (1.0 - p)); }

WeightVector weight_map(std::span<const double> theta) {
  std::vector<double> w(theta.size());
  std::transform(theta.begin(), theta.end(), w.begin(), sigmoid);
  // σ underflows to 0 only for θ below about -745.
  for (auto& x : w) x = std::max(x, std::numeric_limits<double>::min());
  return WeightVector(std::move(w));
}

double weight_penalty(std::span<const double> theta, double lambda) {
  double s = 0.0;
  for (double t : theta) s += sigmoid(t);
  return lambda * (s - 1.0) * (s - 1.0);
}

std::vector<double> WfmLayerParams::channel_weights(int out) const {
  std::vector<double> row(static_cast<std::size_t>(slots()));
  for (int j = 0; j < slots(); ++j) {
    row[j] = std::max(sigmoid(theta(out, j)), std::numeric_limits<double>::min());
  }
  return row;
}

double WfmLayerParams::penalty() const {
  double total = 0.0;
  for (int o = 0; o < out_channels(); ++o) {
    double s = 0.0;
    for (int j = 0; j < slots(); ++j) s += sigmoid(theta(o, j));
    total += penalty_coeff * (s - 1.0) * (s - 1.0);
  }
  return total;
}

Vector WfmLayerParams::weight_sum_deviation() const {
  Vector dev(out_channels());
  for (int o = 0; o < out_channels(); ++o) {
    double s = 0.0;
    for (int j = 0; j < slots(); ++j) s += sigmoid(theta(o, j));
    dev(o) = std::abs(s - 1.0);
  }
  return dev;
}

void TemporalWfmSpec::validate() const {
  if (kernel < 1) throw InvalidArgument("kernel must be >= 1");
  if (stride < 1) throw InvalidArgument("stride must be >= 1");
  if (in_channels < 1) throw InvalidArgument("in_channels must be >= 1");
  if (out_channels < 1) throw InvalidArgument("out_channels must be >= 1");
}

int TemporalWfmSpec::output_length(int frames) const {
  validate();
  if (frames < kernel) {
    throw InvalidArgument("window of " + std::to_string(kernel) + " frames is longer than the " +
                          std::to_string(frames) + "-frame sequence");
  }
  return (frames - kernel) / stride + 1;
}

std::vector<SpdPoint> covariance_descriptor(std::span<const Matrix> frames, double eps) {
  if (!(eps > 0.0)) throw InvalidArgument("covariance eps must be positive");
  std::vector<SpdPoint> out;
  out.reserve(frames.size());
  for (const Matrix& x : frames) {
    if (x.rows() < 1 || x.cols() < 1) throw InvalidArgument("feature maps need C >= 1 and L >= 1");
    if (!x.allFinite()) throw InvalidArgument("non-finite features");
    Matrix xc = x.colwise() - x.rowwise().mean();
    Matrix cov = xc * xc.transpose() / static_cast<double>(x.cols());
    cov.diagonal().array() += eps;
    out.emplace_back(linalg::symmetrize(cov), Unchecked{});
  }
  return out;
}

namespace {

void check_layer_input(const ChannelSequences& input, const TemporalWfmSpec& spec,
                       const WfmLayerParams& params) {
  spec.validate();
  if (static_cast<int>(input.size()) != spec.in_channels) {
    throw InvalidArgument("expected " + std::to_string(spec.in_channels) +
                          " input channels, got " + std::to_string(input.size()));
  }
  if (params.out_channels() != spec.out_channels || params.slots() != spec.slots()) {
    std::ostringstream os;
    os << "parameter shape " << params.out_channels() << "x" << params.slots() << " does not match "
       << spec.out_channels << "x" << spec.slots();
    throw InvalidArgument(os.str());
  }
  for (const auto& ch : input) {
    if (ch.size() != input[0].size()) throw InvalidArgument("input channels differ in length");
  }
  spec.output_length(static_cast<int>(input[0].size()));
}

}  // namespace

std::vector<ManifoldPoint> temporal_wfm_channel(const Manifold& m, const ChannelSequences& input,
                                                const TemporalWfmSpec& spec,
                                                const WfmLayerParams& params, int out) {
  const int frames = static_cast<int>(input[0].size());
  const int len = spec.output_length(frames);
  const std::vector<double> w = params.channel_weights(out);
  std::vector<ManifoldPoint> window;
  window.reserve(static_cast<std::size_t>(spec.slots()));
  std::vector<ManifoldPoint> result;
  result.reserve(static_cast<std::size_t>(len));
  for (int j = 0; j < len; ++j) {
    const int start = j * spec.stride;
    window.clear();
    for (int c = 0; c < spec.in_channels; ++c) {
      for (int tau = 0; tau < spec.kernel; ++tau) window.push_back(input[c][start + tau]);
    }
    result.push_back(ifme_wfm(m, window, w));
  }
  return result;
}

ChannelSequences temporal_wfm_forward(const Manifold& m, const ChannelSequences& input,
                                      const TemporalWfmSpec& spec, const WfmLayerParams& params) {
  check_layer_input(input, spec, params);
  ChannelSequences out;
  out.reserve(static_cast<std::size_t>(spec.out_channels));
  for (int o = 0; o < spec.out_channels; ++o) {
    out.push_back(temporal_wfm_channel(m, input, spec, params, o));
  }
  return out;
}

std::vector<PointSequence> temporal_wfm_forward(std::span<const PointSequence> input,
                                                const TemporalWfmSpec& spec,
                                                const WfmLayerParams& params) {
  if (input.empty()) throw InvalidArgument("no input channels");
  const Manifold m = input[0].manifold();
  ChannelSequences raw;
  for (const auto& seq : input) {
    if (!(seq.manifold() == m)) throw InvalidArgument("input channels are on different manifolds");
    raw.push_back(seq.points());
  }
  std::vector<PointSequence> out;
  for (auto& ch : temporal_wfm_forward(m, raw, spec, params)) out.emplace_back(m, std::move(ch));
  return out;
}

InvariantOutput invariant_final_layer(const Manifold& m, std::span<const ManifoldPoint> outputs,
                                      const OracleOptions& opts) {
  if (outputs.empty()) throw InvalidArgument("invariant layer needs at least one channel");
  std::vector<double> uniform(outputs.size(), 1.0 / static_cast<double>(outputs.size()));
  OracleResult fm = wfm_oracle_solve(m, outputs, uniform, opts);
  Vector d(static_cast<int>(outputs.size()));
  for (std::size_t i = 0; i < outputs.size(); ++i) d(static_cast<int>(i)) = distance(m, fm.point, outputs[i]);
  return {std::move(d), std::move(fm.point)};
}

Vector fc_softmax(const ClassifierHead& head, const Vector& features) {
  if (features.size() != head.features() || head.bias.size() != head.classes()) {
    throw InvalidArgument("classifier head dimension mismatch");
  }
  Vector logits = head.weight * features + head.bias;
  const double mx = logits.maxCoeff();
  Vector e = (logits.array() - mx).exp();
  Vector p = e / e.sum();
  // Saturated classes keep a tiny positive mass instead of underflowing to 0.
  return p.cwiseMax(std::numeric_limits<double>::min());
}

HeadGradient head_gradient(const ClassifierHead& head, const Vector& features, int label) {
  Vector p = fc_softmax(head, features);
  p(label) -= 1.0;
  return {p * features.transpose(), p};
}

double cross_entropy(const Vector& probabilities, int label) {
  if (label < 0 || label >= probabilities.size()) throw InvalidArgument("label out of range");
  return -std::log(std::max(probabilities(label), kProbabilityFloor));
}

double loss_total(const Vector& probabilities, int label, std::span<const WfmLayerParams> layers) {
  double loss = cross_entropy(probabilities, label);
  for (const auto& l : layers) loss += l.penalty();
  return loss;
}

Vector finite_diff_grad(const ScalarFn& f, std::span<const double> params, double h) {
  if (!(h > 0.0)) throw InvalidArgument("finite difference step must be positive");
  Vector grad(static_cast<int>(params.size()));
  parallel_for(params.size(), [&](std::size_t i) {
    std::vector<double> x(params.begin(), params.end());
    x[i] = params[i] + h;
    const double fp = f(x);
    x[i] = params[i] - h;
    const double fm = f(x);
    if (!std::isfinite(fp) || !std::isfinite(fm)) {
      throw NumericalError("non-finite evaluation at coordinate " + std::to_string(i));
    }
    grad(static_cast<int>(i)) = (fp - fm) / (2.0 * h);
  });
  return grad;
}

NonexpansiveReport nonexpansive_check(const Manifold& m, std::span<const ManifoldPoint> xs,
                                      std::span<const ManifoldPoint> ys,
                                      std::span<const double> alphas,
                                      std::span<const double> betas, const OracleOptions& opts) {
  if (xs.empty() || xs.size() > ys.size()) throw InvalidArgument("need 1 <= N <= M");
  if (xs.size() != alphas.size() || ys.size() != betas.size()) {
    throw InvalidArgument("weight count mismatch");
  }
  auto check_nontrivial = [](std::span<const double> w, const char* name) {
    WeightVector wv(std::vector<double>(w.begin(), w.end()));
    for (double x : wv.normalized()) {
      if (x >= 1.0 - 1e-9) throw InvalidArgument(std::string("trivial weights: ") + name);
    }
  };
  check_nontrivial(alphas, "alpha");
  check_nontrivial(betas, "beta");

  const ManifoldPoint mx = wfm_oracle_solve(m, xs, alphas, opts).point;
  const ManifoldPoint my = wfm_oracle_solve(m, ys, betas, opts).point;
  const double num = distance(m, mx, my);

  // X̃_i = X_{(i-1) mod N + 1} for i = 1..M.
  double den = 0.0;
  for (std::size_t i = 0; i < ys.size(); ++i) {
    const ManifoldPoint& xt = xs[i % xs.size()];
    for (const auto& y : ys) den = std::max(den, distance(m, xt, y));
  }
  return {num, den, den < 1e-12 ? 0.0 : num / den};
}

}  // namespace mfnet
