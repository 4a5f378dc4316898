#pragma once

// Small autoencoder on flattened images: dense tanh encoder, a latent
// bottleneck, then a mirrored decoder (tanh hidden layer, sigmoid output).
// The bottleneck is either the Grassmann averaging layer (learned block
// weights σ(θ)) or a plain dense matrix.

#include "mfnet/grassmann_reduce.hpp"

#include <cstdint>
#include <random>
#include <string>
#include <vector>

namespace mfnet {

enum class Bottleneck { Grassmann, Dense };

std::string bottleneck_name(Bottleneck b);

struct AutoencoderSpec {
  int input_dim = 784;
  int hidden_dim = 25;
  int latent_k = 2;
  Bottleneck bottleneck = Bottleneck::Grassmann;
  // Rows per Grassmann layer call; fixes the θ length at batch_size / latent_k.
  int batch_size = 32;
  double penalty_coeff = 1.0;

  Matrix enc_w;  // hidden x input
  Vector enc_b;  // hidden
  Matrix dec_w1;  // hidden x latent
  Vector dec_b1;  // hidden
  Matrix dec_w2;  // input x hidden
  Vector dec_b2;  // input
  Matrix dense_w;              // hidden x latent (Dense only)
  std::vector<double> theta;   // one per block (Grassmann only)

  // Evaluation-mode state of the Grassmann layer.
  Vector latent_mean;          // hidden
  Matrix subspace;             // hidden x latent

  void validate() const;
  int block_count() const { return batch_size / latent_k; }
  std::size_t parameter_count() const;
};

AutoencoderSpec make_autoencoder(int input_dim, int hidden_dim, int latent_k, Bottleneck bottleneck,
                                 int batch_size, std::mt19937_64& rng);

struct AutoencoderConfig {
  int epochs = 200;
  double learning_rate = 1e-3;  // Adam
  double beta1 = 0.9;
  double beta2 = 0.999;
  double fd_step = 1e-5;
  // Start the decoder bias at logit(mean training pixel), clamped to
  // [1e-3, 1 − 1e-3], so the untrained model outputs the mean image.
  bool init_decoder_bias = true;
};

struct AutoencoderEpoch {
  int epoch = 0;
  double train_loss = 0.0;        // mean per-pixel squared error + penalty
  double validation_error = 0.0;  // mean per-pixel squared error
  double weight_sum_deviation = 0.0;
  double wall_seconds = 0.0;
};

struct AutoencoderResult {
  AutoencoderSpec spec;
  std::vector<AutoencoderEpoch> history;  // epoch 0 is the untrained model
};

Matrix encode_hidden(const AutoencoderSpec& spec, const Matrix& x);
// Evaluation-mode latent codes (stored mean and subspace for Grassmann).
Matrix encode(const AutoencoderSpec& spec, const Matrix& x);
Matrix decode(const AutoencoderSpec& spec, const Matrix& z);
// Mean per-pixel squared error of decode(encode(x)).
double reconstruction_error(const AutoencoderSpec& spec, const Matrix& x);

// Recomputes the Grassmann layer's evaluation state from `x`: row mean of
// the hidden codes, and the uniform iFME of the per-batch subspaces.
void refresh_eval_state(AutoencoderSpec& spec, const Matrix& x);

AutoencoderResult autoencoder_train(const AutoencoderSpec& spec, const Matrix& train,
                                    const Matrix& validation, const AutoencoderConfig& config,
                                    std::uint64_t seed);

// Pixel-space PCA fit on `train`, evaluated on `validation`.
double pca_reconstruction_error(const Matrix& train, const Matrix& validation, int k);

}  // namespace mfnet
