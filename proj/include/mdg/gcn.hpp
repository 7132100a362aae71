#pragma once

#include <array>
#include <filesystem>
#include <optional>
#include <random>
#include <vector>

#include "mdg/dense.hpp"
#include "mdg/graph.hpp"

namespace mdg {

struct EmptyGraph : DataError {
  using DataError::DataError;
};

struct DegenerateSplit : DataError {
  using DataError::DataError;
};

// Three graph-convolution layers with ReLU, mean pooling over nodes,
// dropout on the pooled embedding, then a linear head with softmax.
struct GcnModel {
  static constexpr int kLayers = 3;
  std::vector<DenseLayer> convs;  // sizes in->hidden, hidden->hidden, hidden->hidden
  DenseLayer head;                // 2 x hidden
  double dropout = 0.5;

  std::size_t in_dim() const { return convs.front().in_dim(); }
  std::size_t hidden_dim() const { return convs.front().out_dim(); }
};

struct GcnConfig {
  std::size_t in_dim = 64;
  std::size_t hidden = 64;
  double dropout = 0.5;
  int epochs = 60;
  double lr = 1e-3;
  std::uint64_t seed = 0;
};

GcnModel init_gcn(const GcnConfig& cfg);

// Symmetric-normalized propagation operator with self-loops,
// D^{-1/2} (A + A^T + I) D^{-1/2}, optionally with per-edge weights applied
// to A before symmetrization. edge_weights aligns with g.edges.
Mat normalized_adjacency(const AttrGraph& g);
Mat normalized_adjacency(const AttrGraph& g, std::span<const double> edge_weights);

// Class probabilities (benign, malicious). Dropout fires only in train
// mode, seeded; evaluation is deterministic.
std::array<double, 2> gcn_forward(const GcnModel& m, const AttrGraph& g, const Mat& x,
                                  bool train_mode, std::uint64_t seed);

// Forward on a pre-built propagation operator; used by the explainer.
std::array<double, 2> gcn_forward_on(const GcnModel& m, const Mat& a_hat, const Mat& x);

struct GcnGrads {
  std::vector<DenseGrad> convs;
  DenseGrad head;
};

GcnGrads zero_gcn_grads(const GcnModel& m);

// Cross-entropy loss for one labeled graph plus parameter gradients.
// When d_a_hat is non-null, the gradient with respect to each entry of the
// propagation operator is accumulated there (used by the explainer).
// Dropout is applied (and differentiated) only when rng is non-null.
double gcn_loss_and_grads(const GcnModel& m, const Mat& a_hat, const Mat& x, int label,
                          GcnGrads& grads, std::mt19937_64* rng, Mat* d_a_hat = nullptr);

struct GcnTrainResult {
  GcnModel model;
  std::vector<double> epoch_loss;
};

// Per-graph Adam updates over a seeded shuffle of the training corpus.
// Requires at least two graphs and both labels present.
GcnTrainResult train_gcn(const std::vector<AttrGraph>& graphs,
                         const std::vector<Mat>& features, const GcnConfig& cfg);

void save_gcn(const GcnModel& m, const std::filesystem::path& path);
GcnModel load_gcn(const std::filesystem::path& path);

}  // namespace mdg
