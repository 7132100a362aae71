#pragma once

#include <filesystem>
#include <vector>

#include "mdg/dense.hpp"

namespace mdg {

// Symmetric autoencoder, by default 406 -> 128 -> 64 -> 128 -> 406 with
// ReLU on the hidden layers and a linear reconstruction output. Trained on
// benign node features only; the encoder half provides the 64-dim code.
struct AutoencoderModel {
  DenseLayer enc1, enc2, dec1, dec2;

  std::size_t in_dim() const { return enc1.in_dim(); }
  std::size_t code_dim() const { return enc2.out_dim(); }
};

struct AeConfig {
  std::size_t in_dim = 406;
  std::size_t hidden = 128;
  std::size_t code = 64;
  int epochs = 50;
  double lr = 1e-3;
  std::size_t batch_size = 64;
  std::uint64_t seed = 0;
};

struct AeGrads {
  DenseGrad enc1, enc2, dec1, dec2;
};

AutoencoderModel init_autoencoder(const AeConfig& cfg);

// Mean squared reconstruction error over all rows of x.
double reconstruction_mse(const AutoencoderModel& m, const Mat& x);

// Loss (mean squared error over the batch) and parameter gradients.
double ae_loss_and_grads(const AutoencoderModel& m, const Mat& x, AeGrads& grads);

struct AeTrainResult {
  AutoencoderModel model;
  std::vector<double> epoch_mse;  // mean over the epoch's batches
};

// Mini-batch Adam with a seeded shuffle each epoch. Deterministic for a
// given config. Throws NonFiniteLoss if the loss leaves the reals.
AeTrainResult train_autoencoder(const Mat& benign_features, const AeConfig& cfg);

Mat encode64(const AutoencoderModel& m, const Mat& x);
std::vector<double> encode64(const AutoencoderModel& m, std::span<const double> row);

void save_autoencoder(const AutoencoderModel& m, const std::filesystem::path& path);
AutoencoderModel load_autoencoder(const std::filesystem::path& path);

}  // namespace mdg
