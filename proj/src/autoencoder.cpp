#include "mfnet/autoencoder.hpp"

#include "mfnet/errors.hpp"
#include "mfnet/ifme.hpp"
#include "mfnet/layers.hpp"
#include "mfnet/linalg.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <numeric>

namespace mfnet {

std::string bottleneck_name(Bottleneck b) { return b == Bottleneck::Grassmann ? "grassmann" : "dense"; }

void AutoencoderSpec::validate() const {
  if (input_dim < 1 || hidden_dim < 1 || latent_k < 1) throw InvalidArgument("dimensions must be >= 1");
  if (latent_k > hidden_dim) throw InvalidArgument("latent_k must be <= hidden_dim");
  if (batch_size < latent_k) throw InvalidArgument("batch_size must be >= latent_k");
  if (!(penalty_coeff >= 0.0)) throw InvalidArgument("penalty_coeff must be nonnegative");
  if (enc_w.rows() != hidden_dim || enc_w.cols() != input_dim || enc_b.size() != hidden_dim ||
      dec_w1.rows() != hidden_dim || dec_w1.cols() != latent_k || dec_b1.size() != hidden_dim ||
      dec_w2.rows() != input_dim || dec_w2.cols() != hidden_dim || dec_b2.size() != input_dim) {
    throw InvalidArgument("autoencoder weight shapes do not match the dimensions");
  }
  if (bottleneck == Bottleneck::Dense && (dense_w.rows() != hidden_dim || dense_w.cols() != latent_k)) {
    throw InvalidArgument("dense bottleneck must be hidden_dim x latent_k");
  }
  if (bottleneck == Bottleneck::Grassmann && static_cast<int>(theta.size()) != block_count()) {
    throw InvalidArgument("Grassmann bottleneck needs batch_size / latent_k block weights");
  }
  if (!enc_w.allFinite() || !enc_b.allFinite() || !dec_w1.allFinite() || !dec_b1.allFinite() ||
      !dec_w2.allFinite() || !dec_b2.allFinite()) {
    throw InvalidArgument("non-finite autoencoder parameters");
  }
}

std::size_t AutoencoderSpec::parameter_count() const {
  std::size_t n = static_cast<std::size_t>(enc_w.size() + enc_b.size() + dec_w1.size() + dec_b1.size() +
                                           dec_w2.size() + dec_b2.size());
  if (bottleneck == Bottleneck::Dense) return n + static_cast<std::size_t>(dense_w.size());
  return n + theta.size();
}

AutoencoderSpec make_autoencoder(int input_dim, int hidden_dim, int latent_k, Bottleneck bottleneck,
                                 int batch_size, std::mt19937_64& rng) {
  AutoencoderSpec s;
  s.input_dim = input_dim;
  s.hidden_dim = hidden_dim;
  s.latent_k = latent_k;
  s.bottleneck = bottleneck;
  s.batch_size = batch_size;
  s.enc_w = linalg::gaussian_matrix(hidden_dim, input_dim, rng) / std::sqrt(static_cast<double>(input_dim));
  s.enc_b = Vector::Zero(hidden_dim);
  s.dec_w1 = linalg::gaussian_matrix(hidden_dim, latent_k, rng) / std::sqrt(static_cast<double>(latent_k));
  s.dec_b1 = Vector::Zero(hidden_dim);
  s.dec_w2 = linalg::gaussian_matrix(input_dim, hidden_dim, rng) / std::sqrt(static_cast<double>(hidden_dim));
  s.dec_b2 = Vector::Zero(input_dim);
  if (bottleneck == Bottleneck::Dense) {
    s.dense_w = linalg::gaussian_matrix(hidden_dim, latent_k, rng) / std::sqrt(static_cast<double>(hidden_dim));
  } else {
    const int blocks = batch_size / latent_k;
    s.theta.assign(static_cast<std::size_t>(blocks), logit(1.0 / static_cast<double>(blocks)));
  }
  s.latent_mean = Vector::Zero(hidden_dim);
  s.subspace = Matrix::Identity(hidden_dim, latent_k);
  s.validate();
  return s;
}

Matrix encode_hidden(const AutoencoderSpec& spec, const Matrix& x) {
  if (x.cols() != spec.input_dim) throw InvalidArgument("input has the wrong number of columns");
  return ((x * spec.enc_w.transpose()).rowwise() + spec.enc_b.transpose()).array().tanh().matrix();
}

Matrix encode(const AutoencoderSpec& spec, const Matrix& x) {
  Matrix h = encode_hidden(spec, x);
  if (spec.bottleneck == Bottleneck::Dense) return h * spec.dense_w;
  return (h.rowwise() - spec.latent_mean.transpose()) * spec.subspace;
}

namespace {

Matrix decode_hidden(const AutoencoderSpec& spec, const Matrix& z) {
  return ((z * spec.dec_w1.transpose()).rowwise() + spec.dec_b1.transpose()).array().tanh().matrix();
}

Matrix decode_output(const AutoencoderSpec& spec, const Matrix& g) {
  Matrix o = (g * spec.dec_w2.transpose()).rowwise() + spec.dec_b2.transpose();
  return o.unaryExpr([](double v) { return sigmoid(v); });
}

}  // namespace

Matrix decode(const AutoencoderSpec& spec, const Matrix& z) {
  return decode_output(spec, decode_hidden(spec, z));
}

double reconstruction_error(const AutoencoderSpec& spec, const Matrix& x) {
  if (x.rows() == 0) throw InvalidArgument("empty data");
  return (decode(spec, encode(spec, x)) - x).squaredNorm() / static_cast<double>(x.size());
}

void refresh_eval_state(AutoencoderSpec& spec, const Matrix& x) {
  if (spec.bottleneck != Bottleneck::Grassmann) return;
  const int b = spec.batch_size;
  if (x.rows() < b) throw InvalidArgument("need at least one full batch to fix the Grassmann state");
  Matrix h = encode_hidden(spec, x);
  std::vector<ManifoldPoint> subspaces;
  Vector mean = Vector::Zero(spec.hidden_dim);
  std::optional<Matrix> gauge = spec.subspace;
  const int batches = static_cast<int>(h.rows()) / b;
  for (int i = 0; i < batches; ++i) {
    auto out = grassmann_avg_layer(h.middleRows(i * b, b), spec.latent_k, spec.theta, gauge);
    mean += out.mean;
    subspaces.emplace_back(out.subspace);
  }
  std::vector<double> uniform(subspaces.size(), 1.0);
  Matrix u = std::get<GrassmannPoint>(ifme_wfm(Manifold::grassmann(), subspaces, uniform)).basis();
  Eigen::JacobiSVD<Matrix> svd(u.transpose() * spec.subspace, Eigen::ComputeFullU | Eigen::ComputeFullV);
  spec.subspace = u * (svd.matrixU() * svd.matrixV().transpose());
  spec.latent_mean = mean / static_cast<double>(batches);
}

namespace {

struct Adam {
  Matrix m, v;
  explicit Adam(Eigen::Index rows, Eigen::Index cols) : m(Matrix::Zero(rows, cols)), v(Matrix::Zero(rows, cols)) {}
  void step(Eigen::Ref<Matrix> p, const Matrix& g, const AutoencoderConfig& c, int t) {
    m = c.beta1 * m + (1.0 - c.beta1) * g;
    v = c.beta2 * v + (1.0 - c.beta2) * g.cwiseProduct(g);
    const double b1 = 1.0 - std::pow(c.beta1, t);
    const double b2 = 1.0 - std::pow(c.beta2, t);
    p.array() -= c.learning_rate * (m.array() / b1) / ((v.array() / b2).sqrt() + 1e-8);
  }
};

double penalty_of(const AutoencoderSpec& s) {
  if (s.bottleneck != Bottleneck::Grassmann) return 0.0;
  return weight_penalty(s.theta, s.penalty_coeff);
}

double weight_sum_deviation(const AutoencoderSpec& s) {
  if (s.bottleneck != Bottleneck::Grassmann) return 0.0;
  double sum = 0.0;
  for (double t : s.theta) sum += sigmoid(t);
  return std::abs(sum - 1.0);
}

}  // namespace

AutoencoderResult autoencoder_train(const AutoencoderSpec& init, const Matrix& train,
                                    const Matrix& validation, const AutoencoderConfig& config,
                                    std::uint64_t seed) {
  init.validate();
  if (train.rows() < init.batch_size) throw InvalidArgument("training set is smaller than one batch");
  if (validation.rows() == 0) throw InvalidArgument("validation set is empty");
  if (train.cols() != init.input_dim || validation.cols() != init.input_dim) {
    throw InvalidArgument("data width does not match input_dim");
  }
  if (config.epochs < 0 || !(config.learning_rate > 0.0) || !(config.fd_step > 0.0)) {
    throw InvalidArgument("invalid autoencoder training configuration");
  }

  const auto t0 = std::chrono::steady_clock::now();
  AutoencoderResult result{init, {}};
  AutoencoderSpec& s = result.spec;
  const bool grassmann = s.bottleneck == Bottleneck::Grassmann;
  std::mt19937_64 rng(seed);
  if (config.init_decoder_bias) {
    const Vector mean = train.colwise().mean().transpose();
    for (int i = 0; i < s.input_dim; ++i) s.dec_b2(i) = logit(std::clamp(mean(i), 1e-3, 1.0 - 1e-3));
  }

  auto record = [&](int epoch, double train_loss) {
    refresh_eval_state(s, train);
    AutoencoderEpoch e;
    e.epoch = epoch;
    e.train_loss = train_loss;
    e.validation_error = reconstruction_error(s, validation);
    e.weight_sum_deviation = weight_sum_deviation(s);
    e.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    if (!std::isfinite(e.train_loss) || !std::isfinite(e.validation_error)) {
      throw NumericalError("autoencoder training diverged at epoch " + std::to_string(epoch), e.train_loss);
    }
    result.history.push_back(e);
  };
  refresh_eval_state(s, train);
  record(0, reconstruction_error(s, train) + penalty_of(s));

  Adam a_enc_w(s.enc_w.rows(), s.enc_w.cols()), a_enc_b(s.enc_b.size(), 1);
  Adam a_dec_w1(s.dec_w1.rows(), s.dec_w1.cols()), a_dec_b1(s.dec_b1.size(), 1);
  Adam a_dec_w2(s.dec_w2.rows(), s.dec_w2.cols()), a_dec_b2(s.dec_b2.size(), 1);
  Adam a_dense(s.dense_w.rows(), s.dense_w.cols());
  Adam a_theta(static_cast<Eigen::Index>(s.theta.size()), 1);

  std::vector<int> order(static_cast<std::size_t>(train.rows()));
  std::iota(order.begin(), order.end(), 0);
  const int b = s.batch_size;
  const double pixels = static_cast<double>(b) * s.input_dim;
  int t = 0;

  for (int epoch = 1; epoch <= config.epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), rng);
    double loss_sum = 0.0;
    int batches = 0;
    for (std::size_t start = 0; start + static_cast<std::size_t>(b) <= order.size(); start += static_cast<std::size_t>(b)) {
      Matrix x(b, s.input_dim);
      for (int i = 0; i < b; ++i) x.row(i) = train.row(order[start + static_cast<std::size_t>(i)]);
      ++t;

      Matrix h = encode_hidden(s, x);
      Matrix z;
      Matrix u;
      if (grassmann) {
        auto out = grassmann_avg_layer(h, s.latent_k, s.theta, s.subspace);
        z = out.projected;
        u = out.subspace.basis();
      } else {
        z = h * s.dense_w;
      }
      Matrix g = decode_hidden(s, z);
      Matrix y = decode_output(s, g);
      loss_sum += (y - x).squaredNorm() / pixels + penalty_of(s);
      ++batches;

      Matrix dy = 2.0 * (y - x) / pixels;
      Matrix dout = dy.cwiseProduct(y.cwiseProduct((Matrix::Ones(y.rows(), y.cols()) - y)));
      Matrix g_dec_w2 = dout.transpose() * g;
      Vector g_dec_b2 = dout.colwise().sum().transpose();
      Matrix dg = (dout * s.dec_w2).cwiseProduct((Matrix::Ones(g.rows(), g.cols()) - g.cwiseProduct(g)));
      Matrix g_dec_w1 = dg.transpose() * z;
      Vector g_dec_b1 = dg.colwise().sum().transpose();
      Matrix dz = dg * s.dec_w1;
      Matrix dh;
      Matrix g_dense;
      if (grassmann) {
        // z = (h − 1 mean(h)) U with U held fixed.
        Matrix dzc = dz.rowwise() - dz.colwise().mean();
        dh = dzc * u.transpose();
      } else {
        g_dense = h.transpose() * dz;
        dh = dz * s.dense_w.transpose();
      }
      Matrix da = dh.cwiseProduct((Matrix::Ones(h.rows(), h.cols()) - h.cwiseProduct(h)));
      Matrix g_enc_w = da.transpose() * x;
      Vector g_enc_b = da.colwise().sum().transpose();

      if (grassmann) {
        const Matrix gauge = s.subspace;
        auto loss_at = [&](std::span<const double> th) {
          auto out = grassmann_avg_layer(h, s.latent_k, th, gauge);
          return (decode(s, out.projected) - x).squaredNorm() / pixels + weight_penalty(th, s.penalty_coeff);
        };
        Vector g_theta = finite_diff_grad(loss_at, s.theta, config.fd_step);
        Eigen::Map<Matrix> th(s.theta.data(), static_cast<Eigen::Index>(s.theta.size()), 1);
        a_theta.step(th, g_theta, config, t);
        s.subspace = u;
      } else {
        a_dense.step(s.dense_w, g_dense, config, t);
      }
      a_enc_w.step(s.enc_w, g_enc_w, config, t);
      a_enc_b.step(s.enc_b, g_enc_b, config, t);
      a_dec_w1.step(s.dec_w1, g_dec_w1, config, t);
      a_dec_b1.step(s.dec_b1, g_dec_b1, config, t);
      a_dec_w2.step(s.dec_w2, g_dec_w2, config, t);
      a_dec_b2.step(s.dec_b2, g_dec_b2, config, t);
    }
    record(epoch, loss_sum / static_cast<double>(batches));
  }
  return result;
}

double pca_reconstruction_error(const Matrix& train, const Matrix& validation, int k) {
  if (train.cols() != validation.cols()) throw InvalidArgument("train/validation width mismatch");
  if (k < 1 || k > train.cols()) throw InvalidArgument("need 1 <= k <= dimension");
  const Vector mean = train.colwise().mean().transpose();
  Matrix xc = train.rowwise() - mean.transpose();
  Eigen::SelfAdjointEigenSolver<Matrix> es(linalg::symmetrize(xc.transpose() * xc));
  const Matrix v = es.eigenvectors().rightCols(k);
  Matrix vc = validation.rowwise() - mean.transpose();
  return (vc - vc * v * v.transpose()).squaredNorm() / static_cast<double>(validation.size());
}

}  // namespace mfnet
