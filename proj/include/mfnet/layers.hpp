#pragma once

// ManifoldNet building blocks: sigmoid-mapped wFM weights with the
// (Σw - 1)² penalty, covariance descriptors, temporal wFM layers, the
// isometry-invariant distance layer, and the dense softmax head.

#include "mfnet/ifme.hpp"
#include "mfnet/manifold.hpp"

#include <functional>
#include <span>
#include <vector>

namespace mfnet {

double sigmoid(double x);
double logit(double p);

// w = σ(θ) elementwise.
WeightVector weight_map(std::span<const double> theta);
// λ (Σ σ(θ) - 1)² for one output channel.
double weight_penalty(std::span<const double> theta, double lambda);

// Raw parameters for one wFM layer: one row per output channel, one column
// per input slot.
struct WfmLayerParams {
  Matrix theta;
  double penalty_coeff = 1.0;

  int out_channels() const { return static_cast<int>(theta.rows()); }
  int slots() const { return static_cast<int>(theta.cols()); }
  std::vector<double> channel_weights(int out) const;
  // Σ over output channels of λ (Σ w - 1)².
  double penalty() const;
  // |Σ w - 1| per output channel.
  Vector weight_sum_deviation() const;
};

struct TemporalWfmSpec {
  int kernel = 1;
  int stride = 1;
  int in_channels = 1;
  int out_channels = 1;

  void validate() const;
  int slots() const { return in_channels * kernel; }
  // floor((frames - kernel) / stride) + 1; throws if frames < kernel.
  int output_length(int frames) const;
};

// Per-frame covariance of C x L feature maps: rows are centered over L,
// then (1/L) Xc Xcᵀ + eps I.
std::vector<SpdPoint> covariance_descriptor(std::span<const Matrix> frames, double eps = 1e-6);

using ChannelSequences = std::vector<std::vector<ManifoldPoint>>;

// Output channel o, window j is ifme_wfm over the window frames of every
// input channel, ordered channel-major then time-minor, with weights
// σ(θ[o, c * kernel + τ]).
ChannelSequences temporal_wfm_forward(const Manifold& m, const ChannelSequences& input,
                                      const TemporalWfmSpec& spec, const WfmLayerParams& params);
std::vector<PointSequence> temporal_wfm_forward(std::span<const PointSequence> input,
                                                const TemporalWfmSpec& spec,
                                                const WfmLayerParams& params);
// Recomputes a single output channel (used for cheap finite differences).
std::vector<ManifoldPoint> temporal_wfm_channel(const Manifold& m, const ChannelSequences& input,
                                                const TemporalWfmSpec& spec,
                                                const WfmLayerParams& params, int out);

struct InvariantOutput {
  Vector distances;   // o_i = d(M_u, Z_i)
  ManifoldPoint mean; // M_u, the unweighted Fréchet mean
};

InvariantOutput invariant_final_layer(const Manifold& m, std::span<const ManifoldPoint> outputs,
                                      const OracleOptions& opts = {});

struct ClassifierHead {
  Matrix weight;  // c x d
  Vector bias;    // c

  int classes() const { return static_cast<int>(weight.rows()); }
  int features() const { return static_cast<int>(weight.cols()); }
};

// softmax(W o + b), computed with max subtraction.
Vector fc_softmax(const ClassifierHead& head, const Vector& features);

struct HeadGradient {
  Matrix weight;
  Vector bias;
};

// Gradient of -log softmax(W o + b)[label] with respect to W and b.
HeadGradient head_gradient(const ClassifierHead& head, const Vector& features, int label);

inline constexpr double kProbabilityFloor = 1e-12;

// -log max(p[label], 1e-12) + Σ_layers Σ_channels λ (Σ w - 1)².
double loss_total(const Vector& probabilities, int label,
                  std::span<const WfmLayerParams> layers);
double cross_entropy(const Vector& probabilities, int label);

using ScalarFn = std::function<double(std::span<const double>)>;

// Central differences (f(θ + h e_i) - f(θ - h e_i)) / 2h. Coordinates may
// be evaluated in parallel (MFNET_THREADS); assembly is in coordinate order.
Vector finite_diff_grad(const ScalarFn& f, std::span<const double> params, double h = 1e-5);

struct NonexpansiveReport {
  double numerator;    // d(wFM(X, α), wFM(Y, β))
  double denominator;  // max_{i,j} d(X̃_i, Y_j) over the tiled embedding of X
  double ratio;        // numerator / denominator, 0 when denominator < 1e-12
};

// Rejects N > M and trivial weights (any normalized weight >= 1 - 1e-9).
NonexpansiveReport nonexpansive_check(const Manifold& m, std::span<const ManifoldPoint> xs,
                                      std::span<const ManifoldPoint> ys,
                                      std::span<const double> alphas,
                                      std::span<const double> betas,
                                      const OracleOptions& opts = {});

}  // namespace mfnet
