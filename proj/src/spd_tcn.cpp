#include "mfnet/spd_tcn.hpp"

#include "mfnet/errors.hpp"

#include <algorithm>
#include <array>
#include <chrono>
#include <cmath>
#include <memory>
#include <numeric>

namespace mfnet {

void NetworkSpec::validate(int frames) const {
  if (layers.empty()) throw InvalidArgument("network needs at least one temporal layer");
  if (classes < 2) throw InvalidArgument("classes must be >= 2");
  if (!(penalty_coeff >= 0.0)) throw InvalidArgument("penalty_coeff must be nonnegative");
  if (layers.front().in_channels != 1) throw InvalidArgument("first layer must have in_channels = 1");
  int len = frames;
  for (std::size_t i = 0; i < layers.size(); ++i) {
    if (i > 0 && layers[i].in_channels != layers[i - 1].out_channels) {
      throw InvalidArgument("layer " + std::to_string(i) + " in_channels does not match the previous layer");
    }
    len = layers[i].output_length(len);
  }
}

int NetworkSpec::feature_count(int frames) const {
  validate(frames);
  int len = frames;
  for (const auto& l : layers) len = l.output_length(len);
  return len * layers.back().out_channels;
}

NetworkSpec default_spd_tcn_spec(int classes) {
  NetworkSpec spec;
  spec.classes = classes;
  spec.layers = {{5, 3, 1, 4}, {2, 2, 4, 8}, {2, 2, 8, 16}};
  return spec;
}

WfmNetwork WfmNetwork::init(const NetworkSpec& spec, int frames, std::mt19937_64& rng,
                            double theta_noise, double head_scale) {
  spec.validate(frames);
  WfmNetwork net;
  net.spec_ = spec;
  net.frames_ = frames;
  std::normal_distribution<double> normal(0.0, 1.0);
  for (const auto& l : spec.layers) {
    WfmLayerParams p;
    p.penalty_coeff = spec.penalty_coeff;
    p.theta = Matrix::Constant(l.out_channels, l.slots(), logit(1.0 / l.slots()));
    for (int o = 0; o < l.out_channels; ++o)
      for (int j = 0; j < l.slots(); ++j) p.theta(o, j) += theta_noise * normal(rng);
    net.layers_.push_back(std::move(p));
  }
  const int d = spec.feature_count(frames);
  net.head_.weight = Matrix(spec.classes, d);
  for (int j = 0; j < d; ++j)
    for (int i = 0; i < spec.classes; ++i) net.head_.weight(i, j) = head_scale * normal(rng);
  net.head_.bias = Vector::Zero(spec.classes);
  net.shift_ = Vector::Zero(d);
  net.scale_ = Vector::Ones(d);
  return net;
}

std::size_t WfmNetwork::theta_count() const {
  std::size_t n = 0;
  for (const auto& l : layers_) n += static_cast<std::size_t>(l.theta.size());
  return n;
}

std::vector<double> WfmNetwork::theta() const {
  std::vector<double> out;
  out.reserve(theta_count());
  for (const auto& l : layers_)
    for (int o = 0; o < l.out_channels(); ++o)
      for (int j = 0; j < l.slots(); ++j) out.push_back(l.theta(o, j));
  return out;
}

void WfmNetwork::set_theta(std::span<const double> theta) {
  if (theta.size() != theta_count()) throw InvalidArgument("theta size mismatch");
  std::size_t k = 0;
  for (auto& l : layers_)
    for (int o = 0; o < l.out_channels(); ++o)
      for (int j = 0; j < l.slots(); ++j) l.theta(o, j) = theta[k++];
}

std::size_t WfmNetwork::parameter_count() const {
  return theta_count() + static_cast<std::size_t>(head_.weight.size() + head_.bias.size() +
                                                  shift_.size() + scale_.size());
}

void WfmNetwork::fit_feature_scaling(std::span<const LabeledSequence> data) {
  if (data.empty()) throw InvalidArgument("cannot fit feature scaling on an empty set");
  Matrix raw(static_cast<int>(data.size()), shift_.size());
  for (std::size_t i = 0; i < data.size(); ++i) {
    raw.row(static_cast<int>(i)) = invariant(activations(data[i].frames).back()).distances.transpose();
  }
  shift_ = raw.colwise().mean().transpose();
  Vector var = (raw.rowwise() - shift_.transpose()).array().square().colwise().mean().transpose();
  scale_ = var.array().sqrt();
  // Constant features (all channels identical) pass through unscaled.
  for (int j = 0; j < scale_.size(); ++j) {
    if (!(scale_(j) > 1e-12)) scale_(j) = 1.0;
  }
}

Vector WfmNetwork::standardize(const Vector& raw) const {
  if (raw.size() != shift_.size()) throw InvalidArgument("feature dimension mismatch");
  return ((raw - shift_).array() / scale_.array()).matrix();
}

std::vector<ChannelSequences> WfmNetwork::activations(const std::vector<ManifoldPoint>& frames) const {
  if (static_cast<int>(frames.size()) != frames_) {
    throw InvalidArgument("expected " + std::to_string(frames_) + " frames, got " +
                          std::to_string(frames.size()));
  }
  std::vector<ChannelSequences> acts;
  acts.reserve(layers_.size() + 1);
  acts.push_back(ChannelSequences{frames});
  for (std::size_t l = 0; l < layers_.size(); ++l) {
    acts.push_back(temporal_wfm_forward(spec_.manifold, acts.back(), spec_.layers[l], layers_[l]));
  }
  return acts;
}

InvariantOutput WfmNetwork::invariant(const ChannelSequences& last,
                                      const std::optional<ManifoldPoint>& init) const {
  std::vector<ManifoldPoint> z;
  for (const auto& ch : last) z.insert(z.end(), ch.begin(), ch.end());
  OracleOptions opts = spec_.invariant_oracle;
  if (init) opts.init = init;
  return invariant_final_layer(spec_.manifold, z, opts);
}

Vector WfmNetwork::features(const std::vector<ManifoldPoint>& frames) const {
  return standardize(invariant(activations(frames).back()).distances);
}

Vector WfmNetwork::predict(const std::vector<ManifoldPoint>& frames) const {
  return fc_softmax(head_, features(frames));
}

double WfmNetwork::penalty() const {
  double p = 0.0;
  for (const auto& l : layers_) p += l.penalty();
  return p;
}

double accuracy(const WfmNetwork& net, std::span<const LabeledSequence> data) {
  if (data.empty()) return 0.0;
  int correct = 0;
  for (const auto& s : data) {
    Vector p = net.predict(s.frames);
    Eigen::Index arg = 0;
    p.maxCoeff(&arg);
    if (static_cast<int>(arg) == s.label) ++correct;
  }
  return static_cast<double>(correct) / static_cast<double>(data.size());
}

namespace {

struct BatchCache {
  WfmNetwork net;
  std::vector<double> theta0;
  std::vector<LabeledSequence> batch;
  std::vector<std::vector<ChannelSequences>> acts;
  std::vector<ManifoldPoint> means;
  double base_loss = 0.0;
  // coordinate -> (layer, out channel, slot)
  std::vector<std::array<int, 3>> coord;
};

double penalty_of(const std::vector<WfmLayerParams>& layers) {
  double p = 0.0;
  for (const auto& l : layers) p += l.penalty();
  return p;
}

double full_loss(const WfmNetwork& net, const std::vector<LabeledSequence>& batch) {
  double ce = 0.0;
  for (const auto& s : batch) ce += cross_entropy(net.predict(s.frames), s.label);
  return ce / static_cast<double>(batch.size()) + net.penalty();
}

}  // namespace

ScalarFn batch_loss_fn(const WfmNetwork& net, std::span<const LabeledSequence> batch) {
  if (batch.empty()) throw InvalidArgument("empty batch");
  auto c = std::make_shared<BatchCache>();
  c->net = net;
  c->theta0 = net.theta();
  c->batch.assign(batch.begin(), batch.end());
  double ce = 0.0;
  for (const auto& s : c->batch) {
    auto acts = net.activations(s.frames);
    InvariantOutput inv = net.invariant(acts.back());
    ce += cross_entropy(fc_softmax(net.head(), net.standardize(inv.distances)), s.label);
    c->acts.push_back(std::move(acts));
    c->means.push_back(std::move(inv.mean));
  }
  c->base_loss = ce / static_cast<double>(c->batch.size()) + net.penalty();
  for (std::size_t l = 0; l < net.layers().size(); ++l) {
    const auto& p = net.layers()[l];
    for (int o = 0; o < p.out_channels(); ++o)
      for (int j = 0; j < p.slots(); ++j) c->coord.push_back({static_cast<int>(l), o, j});
  }

  return [c](std::span<const double> theta) -> double {
    if (theta.size() != c->theta0.size()) throw InvalidArgument("theta size mismatch");
    std::size_t changed = theta.size();
    int n_changed = 0;
    for (std::size_t i = 0; i < theta.size(); ++i) {
      if (theta[i] != c->theta0[i]) {
        changed = i;
        ++n_changed;
      }
    }
    if (n_changed == 0) return c->base_loss;
    if (n_changed > 1) {
      WfmNetwork moved = c->net;
      moved.set_theta(theta);
      return full_loss(moved, c->batch);
    }

    const auto [layer, out, slot] = c->coord[changed];
    std::vector<WfmLayerParams> params = c->net.layers();
    params[layer].theta(out, slot) = theta[changed];
    const NetworkSpec& spec = c->net.spec();
    double ce = 0.0;
    for (std::size_t s = 0; s < c->batch.size(); ++s) {
      const auto& acts = c->acts[s];
      ChannelSequences cur = acts[layer + 1];
      cur[out] = temporal_wfm_channel(spec.manifold, acts[layer], spec.layers[layer], params[layer], out);
      for (std::size_t l = layer + 1; l < params.size(); ++l) {
        cur = temporal_wfm_forward(spec.manifold, cur, spec.layers[l], params[l]);
      }
      InvariantOutput inv = c->net.invariant(cur, c->means[s]);
      ce += cross_entropy(fc_softmax(c->net.head(), c->net.standardize(inv.distances)),
                          c->batch[s].label);
    }
    return ce / static_cast<double>(c->batch.size()) + penalty_of(params);
  };
}

TrainResult train_classifier(const NetworkSpec& spec, std::span<const LabeledSequence> train,
                             std::span<const LabeledSequence> test, const OptimizerConfig& opt,
                             std::uint64_t seed) {
  if (train.empty()) throw InvalidArgument("training set is empty");
  if (opt.epochs < 0 || opt.batch_size < 1 || opt.fd_batch < 0 || !(opt.learning_rate > 0.0) ||
      !(opt.momentum >= 0.0 && opt.momentum < 1.0) || !(opt.theta_learning_rate >= 0.0) ||
      !(opt.theta_grad_clip >= 0.0) || !(opt.fd_step > 0.0)) {
    throw InvalidArgument("invalid optimizer configuration");
  }
  const int frames = static_cast<int>(train[0].frames.size());
  for (const auto& s : train) {
    if (static_cast<int>(s.frames.size()) != frames) throw InvalidArgument("sequences differ in length");
    if (s.label < 0 || s.label >= spec.classes) throw InvalidArgument("label out of range");
  }

  const double theta_lr = opt.theta_learning_rate;
  const auto t0 = std::chrono::steady_clock::now();
  std::mt19937_64 rng(seed);
  TrainResult result{WfmNetwork::init(spec, frames, rng), {}};
  WfmNetwork& net = result.network;
  net.fit_feature_scaling(train);

  auto record = [&](int epoch) {
    EpochMetrics m;
    m.epoch = epoch;
    double ce = 0.0;
    int correct = 0;
    for (const auto& s : train) {
      Vector p = net.predict(s.frames);
      ce += cross_entropy(p, s.label);
      Eigen::Index arg = 0;
      p.maxCoeff(&arg);
      correct += static_cast<int>(arg) == s.label;
    }
    m.loss = ce / static_cast<double>(train.size()) + net.penalty();
    if (!std::isfinite(m.loss)) {
      throw NumericalError("training diverged at epoch " + std::to_string(epoch));
    }
    m.train_accuracy = static_cast<double>(correct) / static_cast<double>(train.size());
    m.test_accuracy = accuracy(net, test);
    for (const auto& l : net.layers()) {
      m.max_weight_sum_deviation = std::max(m.max_weight_sum_deviation, l.weight_sum_deviation().maxCoeff());
    }
    m.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    result.history.push_back(m);
  };
  record(0);

  std::vector<std::size_t> order(train.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  Vector vel_theta = Vector::Zero(static_cast<int>(net.theta_count()));
  Matrix vel_w = Matrix::Zero(net.head().weight.rows(), net.head().weight.cols());
  Vector vel_b = Vector::Zero(net.head().bias.size());

  for (int epoch = 1; epoch <= opt.epochs; ++epoch) {
    if (opt.refit_scaling && epoch > 1) net.fit_feature_scaling(train);
    std::shuffle(order.begin(), order.end(), rng);
    for (std::size_t start = 0; start < order.size(); start += static_cast<std::size_t>(opt.batch_size)) {
      const std::size_t stop = std::min(order.size(), start + static_cast<std::size_t>(opt.batch_size));
      std::vector<LabeledSequence> batch;
      for (std::size_t i = start; i < stop; ++i) batch.push_back(train[order[i]]);

      Matrix gw = Matrix::Zero(vel_w.rows(), vel_w.cols());
      Vector gb = Vector::Zero(vel_b.size());
      for (const auto& s : batch) {
        HeadGradient g = head_gradient(net.head(), net.features(s.frames), s.label);
        gw += g.weight;
        gb += g.bias;
      }
      gw /= static_cast<double>(batch.size());
      gb /= static_cast<double>(batch.size());

      std::size_t fd_n = opt.fd_batch > 0 ? std::min<std::size_t>(batch.size(), opt.fd_batch) : batch.size();
      std::span<const LabeledSequence> fd_span(batch.data(), fd_n);
      std::vector<double> theta = net.theta();
      Vector gt = finite_diff_grad(batch_loss_fn(net, fd_span), theta, opt.fd_step);
      const double gnorm = gt.norm();
      if (opt.theta_grad_clip > 0.0 && gnorm > opt.theta_grad_clip) gt *= opt.theta_grad_clip / gnorm;

      vel_theta = opt.momentum * vel_theta - theta_lr * gt;
      for (std::size_t i = 0; i < theta.size(); ++i) theta[i] += vel_theta(static_cast<int>(i));
      net.set_theta(theta);
      vel_w = opt.momentum * vel_w - opt.learning_rate * gw;
      vel_b = opt.momentum * vel_b - opt.learning_rate * gb;
      net.head().weight += vel_w;
      net.head().bias += vel_b;
    }
    record(epoch);
  }
  return result;
}

}  // namespace mfnet
