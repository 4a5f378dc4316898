#include "doctest.h"

#include "mfnet/autoencoder.hpp"
#include "mfnet/errors.hpp"
#include "mfnet/linalg.hpp"

#include <cmath>

using namespace mfnet;

namespace {

// Smooth 16-pixel "images" driven by two latent factors.
Matrix toy_images(int count, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  Matrix x(count, 16);
  for (int i = 0; i < count; ++i) {
    const double a = u(rng), b = u(rng);
    for (int j = 0; j < 16; ++j) x(i, j) = 1.0 / (1.0 + std::exp(-(a * std::cos(0.4 * j) + b * std::sin(0.4 * j)) * 3.0));
  }
  return x;
}

}  // namespace

TEST_CASE("autoencoder construction") {
  std::mt19937_64 rng(1);
  auto g = make_autoencoder(784, 128, 2, Bottleneck::Grassmann, 32, rng);
  auto d = make_autoencoder(784, 128, 2, Bottleneck::Dense, 32, rng);
  CHECK(g.theta.size() == 16);
  CHECK(d.parameter_count() - g.parameter_count() == 128 * 2 - 16);
  CHECK(bottleneck_name(Bottleneck::Grassmann) == "grassmann");
  CHECK_THROWS_AS(make_autoencoder(10, 2, 3, Bottleneck::Dense, 8, rng), InvalidArgument);
  CHECK_THROWS_AS(make_autoencoder(10, 4, 2, Bottleneck::Grassmann, 1, rng), InvalidArgument);
  g.theta.pop_back();
  CHECK_THROWS_AS(g.validate(), InvalidArgument);
}

TEST_CASE("autoencoder training") {
  std::mt19937_64 rng(2);
  Matrix train = toy_images(128, rng);
  Matrix val = toy_images(32, rng);
  for (auto b : {Bottleneck::Grassmann, Bottleneck::Dense}) {
    CAPTURE(bottleneck_name(b));
    auto spec = make_autoencoder(16, 8, 2, b, 16, rng);
    AutoencoderConfig cfg;
    cfg.epochs = 0;
    auto none = autoencoder_train(spec, train, val, cfg, 3);
    REQUIRE(none.history.size() == 1);
    CHECK(none.history[0].epoch == 0);

    cfg.epochs = 30;
    cfg.learning_rate = 1e-2;
    auto r1 = autoencoder_train(spec, train, val, cfg, 3);
    auto r2 = autoencoder_train(spec, train, val, cfg, 3);
    REQUIRE(r1.history.size() == 31);
    CHECK(r1.history.back().train_loss < r1.history.front().train_loss);
    CHECK(r1.history.back().validation_error < r1.history.front().validation_error);
    for (std::size_t i = 0; i < r1.history.size(); ++i) {
      CHECK(r1.history[i].train_loss == r2.history[i].train_loss);
      CHECK(r1.history[i].validation_error == r2.history[i].validation_error);
    }
    CHECK(reconstruction_error(r1.spec, val) == r1.history.back().validation_error);
    CHECK(encode(r1.spec, val).cols() == 2);
  }

  auto spec = make_autoencoder(16, 8, 2, Bottleneck::Grassmann, 16, rng);
  CHECK_THROWS_AS(autoencoder_train(spec, train.topRows(8), val, AutoencoderConfig{}, 1), InvalidArgument);
  CHECK_THROWS_AS(autoencoder_train(spec, train.leftCols(8), val, AutoencoderConfig{}, 1), InvalidArgument);
}

TEST_CASE("evaluation subspace is orthonormal and stable") {
  std::mt19937_64 rng(4);
  Matrix x = toy_images(64, rng);
  auto spec = make_autoencoder(16, 8, 2, Bottleneck::Grassmann, 16, rng);
  refresh_eval_state(spec, x);
  const Matrix& u = spec.subspace;
  CHECK((u.transpose() * u - Matrix::Identity(2, 2)).cwiseAbs().maxCoeff() < 1e-12);
  Matrix before = u;
  refresh_eval_state(spec, x);
  CHECK((spec.subspace - before).cwiseAbs().maxCoeff() < 1e-9);
}

TEST_CASE("pca baseline") {
  std::mt19937_64 rng(5);
  Matrix basis = linalg::random_orthogonal(6, rng).leftCols(2);
  Matrix x = (linalg::gaussian_matrix(50, 2, rng) * basis.transpose()).rowwise() + Vector::Ones(6).transpose();
  CHECK(pca_reconstruction_error(x, x, 2) < 1e-20);
  Matrix y = linalg::gaussian_matrix(40, 6, rng);
  CHECK(pca_reconstruction_error(y, y, 6) < 1e-20);
  CHECK(pca_reconstruction_error(y, y, 1) > pca_reconstruction_error(y, y, 3));
  CHECK_THROWS_AS(pca_reconstruction_error(y, y, 0), InvalidArgument);
}
