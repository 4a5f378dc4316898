#pragma once

// Temporal wFM classifier (SPD-TCN when run on SPD frames):
//   frames -> temporal wFM layers -> invariant distance layer
//          -> per-feature standardization -> FC + softmax.
// Manifold-layer parameters are trained with central finite differences,
// the head with its analytic softmax/cross-entropy gradient.

#include "mfnet/layers.hpp"

#include <cstdint>
#include <random>
#include <span>
#include <vector>

namespace mfnet {

struct NetworkSpec {
  Manifold manifold = Manifold::spd();
  std::vector<TemporalWfmSpec> layers;
  int classes = 2;
  double penalty_coeff = 1.0;
  // Fréchet mean inside the invariant layer.
  OracleOptions invariant_oracle{1.0, 1e-12, 500, std::nullopt};

  void validate(int frames) const;
  // Number of invariant-layer features for a sequence of `frames` frames.
  int feature_count(int frames) const;
};

// The temporal layers used for the synthetic orientation task: a kernel-5 /
// stride-3 front window fanning 1 -> 4 channels, then kernel-2 / stride-2
// layers 4 -> 8 -> 16.
NetworkSpec default_spd_tcn_spec(int classes = 2);

struct LabeledSequence {
  std::vector<ManifoldPoint> frames;
  int label = 0;
};

class WfmNetwork {
 public:
  // θ rows start at logit(1/slots) plus N(0, theta_noise²) jitter so that
  // every channel begins as a proper, channel-distinct wFM.
  static WfmNetwork init(const NetworkSpec& spec, int frames, std::mt19937_64& rng,
                         double theta_noise = 0.5, double head_scale = 0.01);

  const NetworkSpec& spec() const { return spec_; }
  int frames() const { return frames_; }
  const std::vector<WfmLayerParams>& layers() const { return layers_; }
  std::vector<WfmLayerParams>& layers() { return layers_; }
  const ClassifierHead& head() const { return head_; }
  ClassifierHead& head() { return head_; }

  std::size_t theta_count() const;
  std::vector<double> theta() const;
  void set_theta(std::span<const double> theta);
  // θ, head, and the standardization shift/scale.
  std::size_t parameter_count() const;

  // Sets shift/scale to the mean and standard deviation of each raw
  // invariant feature over `data`. Raw distances are O(1e-3) on slowly
  // varying sequences; without this the head barely moves under SGD.
  void fit_feature_scaling(std::span<const LabeledSequence> data);
  const Vector& feature_shift() const { return shift_; }
  const Vector& feature_scale() const { return scale_; }
  Vector standardize(const Vector& raw) const;

  // Outputs of every temporal layer; acts[0] is the input.
  std::vector<ChannelSequences> activations(const std::vector<ManifoldPoint>& frames) const;
  InvariantOutput invariant(const ChannelSequences& last,
                            const std::optional<ManifoldPoint>& init = std::nullopt) const;
  // Standardized invariant features (the head input).
  Vector features(const std::vector<ManifoldPoint>& frames) const;
  Vector predict(const std::vector<ManifoldPoint>& frames) const;
  double penalty() const;

 private:
  NetworkSpec spec_;
  int frames_ = 0;
  std::vector<WfmLayerParams> layers_;
  ClassifierHead head_;
  Vector shift_;
  Vector scale_;
};

struct OptimizerConfig {
  double learning_rate = 0.05;
  // Step for the manifold-layer θ (the head uses learning_rate).
  double theta_learning_rate = 0.01;
  // The θ gradient is rescaled to at most this Euclidean norm (0: no clip).
  double theta_grad_clip = 1.0;
  double momentum = 0.9;
  int epochs = 10;
  int batch_size = 8;
  // Samples per minibatch used for the finite-difference θ gradient
  // (0: the whole minibatch).
  int fd_batch = 0;
  double fd_step = 1e-5;
  // Refit the feature standardization on the training set before every
  // epoch (off: keep the fit made at initialization).
  bool refit_scaling = true;
};

struct EpochMetrics {
  int epoch = 0;
  double loss = 0.0;  // mean cross-entropy over the training set plus penalty
  double train_accuracy = 0.0;
  double test_accuracy = 0.0;
  double max_weight_sum_deviation = 0.0;  // max over channels of |Σw - 1|
  double wall_seconds = 0.0;
};

struct TrainResult {
  WfmNetwork network;
  std::vector<EpochMetrics> history;  // epoch 0 is the untrained model
};

double accuracy(const WfmNetwork& net, std::span<const LabeledSequence> data);

// Mean over `batch` of the cross-entropy at θ plus the weight penalty, with
// activations cached at `net`'s current θ so that single-coordinate
// perturbations only recompute the affected channel and downstream layers.
ScalarFn batch_loss_fn(const WfmNetwork& net, std::span<const LabeledSequence> batch);

TrainResult train_classifier(const NetworkSpec& spec, std::span<const LabeledSequence> train,
                             std::span<const LabeledSequence> test, const OptimizerConfig& opt,
                             std::uint64_t seed);

}  // namespace mfnet
