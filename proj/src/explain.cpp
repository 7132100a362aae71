#include "mdg/explain.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>

#include "mdg/parallel.hpp"
#include "mdg/rng.hpp"

namespace mdg {

namespace {

double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

int argmax2(const std::array<double, 2>& probs) { return probs[1] > probs[0] ? 1 : 0; }

// Backprop through A_hat = D^{-1/2} S D^{-1/2} with S = I + A_w + A_w^T,
// where d_i = sum_j S_ij. Given G = dL/dA_hat:
//   dL/dS_kl = G_kl / sqrt(d_k d_l) - rho_k / (2 d_k),
//   rho_k    = sum_j (G_kj A_hat_kj + G_jk A_hat_jk).
// The edge weight w_e for e = (u, v) enters S at (u, v) and (v, u), twice
// at (u, u) for a self-loop.
std::vector<double> edge_weight_grad(const AttrGraph& g,
                                     std::span<const double> weights, const Mat& a_hat,
                                     const Mat& d_a_hat) {
  const std::size_t n = g.node_count();
  const auto idx = node_index(g);

  // Recover degrees: d_i = sum_j S_ij where S was built from the weights.
  std::vector<double> deg(n, 0.0);
  for (std::size_t i = 0; i < n; ++i) deg[i] = 1.0;  // identity part
  for (std::size_t e = 0; e < g.edges.size(); ++e) {
    const auto u = idx.at(g.edges[e].first);
    const auto v = idx.at(g.edges[e].second);
    deg[u] += weights[e];
    deg[v] += weights[e];
  }
  std::vector<double> rho(n, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      rho[i] += d_a_hat(i, j) * a_hat(i, j) + d_a_hat(j, i) * a_hat(j, i);
    }
  }
  auto ds = [&](std::size_t k, std::size_t l) {
    return d_a_hat(k, l) / std::sqrt(deg[k] * deg[l]) - rho[k] / (2.0 * deg[k]);
  };
  std::vector<double> dw(g.edges.size(), 0.0);
  for (std::size_t e = 0; e < g.edges.size(); ++e) {
    const auto u = idx.at(g.edges[e].first);
    const auto v = idx.at(g.edges[e].second);
    dw[e] = u == v ? 2.0 * ds(u, u) : ds(u, v) + ds(v, u);
  }
  return dw;
}

}  // namespace

std::vector<double> EdgeMask::importances() const {
  std::vector<double> out(logits.size());
  for (std::size_t i = 0; i < logits.size(); ++i) out[i] = sigmoid(logits[i]);
  return out;
}

double mask_loss_and_grad(const GcnModel& model, const AttrGraph& g, const Mat& x,
                          int target_label, std::span<const double> logits,
                          double sparsity_lambda, std::span<double> grad_out) {
  const std::size_t n_edges = g.edge_count();
  if (logits.size() != n_edges || grad_out.size() != n_edges) {
    throw ShapeMismatch("mask size != edge count");
  }
  std::vector<double> weights(n_edges);
  for (std::size_t e = 0; e < n_edges; ++e) weights[e] = sigmoid(logits[e]);

  const Mat a_hat = normalized_adjacency(g, weights);
  GcnGrads param_grads = zero_gcn_grads(model);  // discarded; only dA is used
  Mat d_a_hat(a_hat.rows, a_hat.cols);
  double loss = gcn_loss_and_grads(model, a_hat, x, target_label, param_grads,
                                   /*rng=*/nullptr, &d_a_hat);
  const auto dw = edge_weight_grad(g, weights, a_hat, d_a_hat);
  for (std::size_t e = 0; e < n_edges; ++e) {
    const double sig_prime = weights[e] * (1.0 - weights[e]);
    grad_out[e] = dw[e] * sig_prime;
    if (sparsity_lambda > 0.0) {
      loss += sparsity_lambda * weights[e] / static_cast<double>(n_edges);
      grad_out[e] += sparsity_lambda * sig_prime / static_cast<double>(n_edges);
    }
  }
  return loss;
}

EdgeMask learn_mask(const GcnModel& model, const AttrGraph& g, const Mat& x,
                    const ExplainConfig& cfg, std::uint64_t seed) {
  if (g.edge_count() == 0) {
    throw NoEdges("graph '" + g.graph_id + "' has no edges to explain");
  }
  if (cfg.sparsity_lambda < 0.0) throw DataError("sparsity_lambda must be >= 0");
  // The explained label is the model's own prediction on the full graph.
  const int target = argmax2(gcn_forward_on(model, normalized_adjacency(g), x));

  EdgeMask mask;
  mask.logits.resize(g.edge_count());
  auto rng = make_rng(seed, "explain-init");
  for (auto& m : mask.logits) m = uniform(rng, -0.1, 0.1);

  AdamOpt opt;
  opt.lr = cfg.lr;
  std::vector<double> grad(mask.logits.size());
  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    const double loss =
        mask_loss_and_grad(model, g, x, target, mask.logits, cfg.sparsity_lambda, grad);
    if (!std::isfinite(loss)) {
      throw NonFiniteLoss("mask loss diverged at epoch " + std::to_string(epoch));
    }
    opt.step({mask.logits}, {grad});
  }
  return mask;
}

ExplanationResult extract_subgraph(const AttrGraph& g, const EdgeMask& mask,
                                   double top_p) {
  if (top_p <= 0.0 || top_p > 1.0) throw DataError("top_p must be in (0, 1]");
  if (mask.logits.size() != g.edge_count()) {
    throw ShapeMismatch("mask does not cover all edges");
  }
  ExplanationResult result;
  const auto sigma = mask.importances();
  result.ranking.reserve(g.edge_count());
  for (std::size_t e = 0; e < g.edges.size(); ++e) {
    result.ranking.emplace_back(g.edges[e], sigma[e]);
  }
  std::sort(result.ranking.begin(), result.ranking.end(), [](const auto& a, const auto& b) {
    if (a.second != b.second) return a.second > b.second;
    return a.first < b.first;
  });
  const auto kept = static_cast<std::size_t>(
      std::ceil(top_p * static_cast<double>(g.edge_count())));

  std::set<Edge> keep_edges;
  for (std::size_t i = 0; i < kept && i < result.ranking.size(); ++i) {
    keep_edges.insert(result.ranking[i].first);
  }
  const auto deg = degrees(g);
  auto build = [&](bool important) {
    AttrGraph sub;
    sub.graph_id = g.graph_id + (important ? "_important" : "_unimportant");
    sub.label = g.label;
    std::set<NodeId> touched;
    for (const auto& e : g.edges) {
      if (keep_edges.count(e) == static_cast<std::size_t>(important)) {
        sub.edges.push_back(e);
        touched.insert(e.first);
        touched.insert(e.second);
      }
    }
    for (const auto& n : g.nodes) {
      // Nodes isolated in the input stay, so top_p = 1 reproduces the graph.
      if (touched.count(n.id) || deg.at(n.id) == 0) sub.nodes.push_back(n);
    }
    return sub;
  };
  result.important = build(true);
  result.unimportant = build(false);
  return result;
}

ExplanationResult explain_graph(const GcnModel& model, const AttrGraph& g, const Mat& x,
                                const ExplainConfig& cfg, std::uint64_t seed) {
  const EdgeMask mask = learn_mask(model, g, x, cfg, seed);
  ExplanationResult result = extract_subgraph(g, mask, cfg.top_p);

  result.fidelity.original_probs = gcn_forward_on(model, normalized_adjacency(g), x);
  result.fidelity.original_label = argmax2(result.fidelity.original_probs);

  const auto weights = mask.importances();
  result.fidelity.masked_probs =
      gcn_forward_on(model, normalized_adjacency(g, weights), x);
  result.fidelity.masked_label = argmax2(result.fidelity.masked_probs);

  const auto idx = node_index(g);
  Mat sub_x(result.important.node_count(), x.cols);
  for (std::size_t i = 0; i < result.important.nodes.size(); ++i) {
    const auto src = x.row(idx.at(result.important.nodes[i].id));
    std::copy(src.begin(), src.end(), sub_x.row(i).begin());
  }
  result.fidelity.subgraph_probs = gcn_forward_on(
      model, normalized_adjacency(result.important), sub_x);
  result.fidelity.subgraph_label = argmax2(result.fidelity.subgraph_probs);
  return result;
}

ExplainerAccuracy explainer_accuracy(const GcnModel& model,
                                     const std::vector<AttrGraph>& graphs,
                                     const std::vector<Mat>& features,
                                     const ExplainConfig& cfg,
                                     const std::vector<double>& p_grid,
                                     std::uint64_t seed, int jobs) {
  if (graphs.size() != features.size()) {
    throw ShapeMismatch("explainer_accuracy: graph/feature count mismatch");
  }
  ExplainerAccuracy out;
  out.p_grid = p_grid;
  out.accuracy.assign(p_grid.size(), 0.0);
  if (p_grid.empty()) return out;

  // correct[i][k] = graph i classified correctly at p_grid[k]; -1 = skipped
  std::vector<std::vector<int>> correct(graphs.size(),
                                        std::vector<int>(p_grid.size(), -1));
  parallel_for(graphs.size(), jobs, [&](std::size_t i) {
    const auto& g = graphs[i];
    if (!g.label) throw DataError("explainer_accuracy: unlabeled graph '" + g.graph_id + "'");
    if (g.edge_count() == 0) return;
    const EdgeMask mask =
        learn_mask(model, g, features[i], cfg, substream_seed(seed, "explain-graph", i));
    const auto idx = node_index(g);
    for (std::size_t k = 0; k < p_grid.size(); ++k) {
      const auto sub = extract_subgraph(g, mask, p_grid[k]);
      Mat sub_x(sub.important.node_count(), features[i].cols);
      for (std::size_t r = 0; r < sub.important.nodes.size(); ++r) {
        const auto src = features[i].row(idx.at(sub.important.nodes[r].id));
        std::copy(src.begin(), src.end(), sub_x.row(r).begin());
      }
      const auto probs = gcn_forward_on(model, normalized_adjacency(sub.important), sub_x);
      correct[i][k] = argmax2(probs) == *g.label ? 1 : 0;
    }
  });

  std::size_t counted = 0;
  for (std::size_t i = 0; i < graphs.size(); ++i) {
    if (graphs[i].edge_count() == 0) {
      ++out.skipped;
      out.skipped_ids.push_back(graphs[i].graph_id);
      continue;
    }
    ++counted;
    for (std::size_t k = 0; k < p_grid.size(); ++k) {
      out.accuracy[k] += correct[i][k];
    }
  }
  if (counted > 0) {
    for (auto& a : out.accuracy) a /= static_cast<double>(counted);
  }
  return out;
}

void write_explainer_csv(const ExplainerAccuracy& acc, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot open output file: " + path.string());
  out << "p,accuracy\n";
  char buf[64];
  for (std::size_t i = 0; i < acc.p_grid.size(); ++i) {
    std::snprintf(buf, sizeof(buf), "%.2f,%.6f", acc.p_grid[i], acc.accuracy[i]);
    out << buf << '\n';
  }
}

}  // namespace mdg
