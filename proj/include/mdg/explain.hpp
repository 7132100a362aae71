#pragma once

#include <array>
#include <filesystem>
#include <vector>

#include "mdg/gcn.hpp"

namespace mdg {

struct NoEdges : DataError {
  using DataError::DataError;
};

// One learnable logit per edge of the explained graph, aligned with
// g.edges; importance = sigmoid(logit).
struct EdgeMask {
  std::vector<double> logits;

  std::vector<double> importances() const;
};

struct ExplainConfig {
  int epochs = 100;
  double lr = 0.1;
  double sparsity_lambda = 0.005;
  double top_p = 0.25;
};

struct FidelityRecord {
  std::array<double, 2> original_probs{};
  int original_label = 0;
  std::array<double, 2> masked_probs{};  // forward on sigmoid(M)-weighted edges
  int masked_label = 0;
  std::array<double, 2> subgraph_probs{};
  int subgraph_label = 0;
};

struct ExplanationResult {
  // Edges sorted by importance descending, ties by (src, dst) ascending.
  std::vector<std::pair<Edge, double>> ranking;
  AttrGraph important;    // top-p edges plus their incident nodes
  AttrGraph unimportant;  // the complement edges plus their incident nodes
  FidelityRecord fidelity;
};

// Learns the mask by minimizing cross-entropy between the model's
// prediction on the full graph and its prediction on the sigmoid(M)-weighted
// adjacency, plus sparsity_lambda * mean(sigmoid(M)). Adam, seeded init.
EdgeMask learn_mask(const GcnModel& model, const AttrGraph& g, const Mat& x,
                    const ExplainConfig& cfg, std::uint64_t seed);

// Explainer objective and its gradient with respect to the mask logits,
// exposed for gradient verification.
double mask_loss_and_grad(const GcnModel& model, const AttrGraph& g, const Mat& x,
                          int target_label, std::span<const double> logits,
                          double sparsity_lambda, std::span<double> grad_out);

// Keeps the ceil(top_p * |E|) highest-importance edges. Nodes that lose all
// incident edges are dropped; nodes isolated in the input stay, so top_p = 1
// returns the input graph unchanged. Fidelity is left empty.
ExplanationResult extract_subgraph(const AttrGraph& g, const EdgeMask& mask, double top_p);

// learn_mask + extract_subgraph + fidelity record in one call.
ExplanationResult explain_graph(const GcnModel& model, const AttrGraph& g, const Mat& x,
                                const ExplainConfig& cfg, std::uint64_t seed);

struct ExplainerAccuracy {
  std::vector<double> p_grid;
  std::vector<double> accuracy;      // per p, over graphs with >= 1 edge
  std::size_t skipped = 0;           // graphs with no edges
  std::vector<std::string> skipped_ids;
};

// For every p in p_grid, classifies each graph's top-p important subgraph
// and scores it against the true label. Masks are learned once per graph.
ExplainerAccuracy explainer_accuracy(const GcnModel& model,
                                     const std::vector<AttrGraph>& graphs,
                                     const std::vector<Mat>& features,
                                     const ExplainConfig& cfg,
                                     const std::vector<double>& p_grid,
                                     std::uint64_t seed, int jobs = 1);

// CSV columns: p,accuracy
void write_explainer_csv(const ExplainerAccuracy& acc, const std::filesystem::path& path);

}  // namespace mdg
