#include "mdg/gcn.hpp"

#include <cmath>
#include <fstream>

#include "json_util.hpp"
#include "mdg/rng.hpp"

namespace mdg {

GcnModel init_gcn(const GcnConfig& cfg) {
  GcnModel m;
  m.dropout = cfg.dropout;
  m.convs.push_back(init_dense(cfg.hidden, cfg.in_dim, substream_seed(cfg.seed, "gcn-conv0")));
  for (int l = 1; l < GcnModel::kLayers; ++l) {
    m.convs.push_back(
        init_dense(cfg.hidden, cfg.hidden, substream_seed(cfg.seed, "gcn-conv", l)));
  }
  m.head = init_dense(2, cfg.hidden, substream_seed(cfg.seed, "gcn-head"));
  return m;
}

Mat normalized_adjacency(const AttrGraph& g) {
  std::vector<double> ones(g.edge_count(), 1.0);
  return normalized_adjacency(g, ones);
}

Mat normalized_adjacency(const AttrGraph& g, std::span<const double> edge_weights) {
  const std::size_t n = g.node_count();
  if (n == 0) throw EmptyGraph("graph '" + g.graph_id + "' has no nodes");
  if (edge_weights.size() != g.edge_count()) {
    throw ShapeMismatch("edge weight count != edge count");
  }
  const auto idx = node_index(g);
  Mat s(n, n);
  for (std::size_t i = 0; i < n; ++i) s(i, i) = 1.0;  // self-loops
  for (std::size_t e = 0; e < g.edges.size(); ++e) {
    const auto u = idx.at(g.edges[e].first);
    const auto v = idx.at(g.edges[e].second);
    s(u, v) += edge_weights[e];
    s(v, u) += edge_weights[e];  // symmetrization; a self-loop lands twice
  }
  std::vector<double> inv_sqrt_deg(n);
  for (std::size_t i = 0; i < n; ++i) {
    double d = 0.0;
    for (std::size_t j = 0; j < n; ++j) d += s(i, j);
    inv_sqrt_deg[i] = 1.0 / std::sqrt(d);
  }
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      s(i, j) *= inv_sqrt_deg[i] * inv_sqrt_deg[j];
    }
  }
  return s;
}

namespace {

struct ForwardCache {
  std::vector<Mat> h;    // h[0] = x, h[l+1] = relu(z[l])
  std::vector<Mat> p;    // p[l] = a_hat * h[l]
  std::vector<Mat> z;    // pre-activations
  Mat pooled;            // 1 x hidden
  Mat dropped;           // 1 x hidden
  std::vector<double> dropout_mask;
  std::array<double, 2> probs{};
};

std::array<double, 2> forward_impl(const GcnModel& m, const Mat& a_hat, const Mat& x,
                                   bool train_mode, std::mt19937_64* rng,
                                   ForwardCache& c) {
  if (x.rows != a_hat.rows) {
    throw ShapeMismatch("feature row count " + std::to_string(x.rows) +
                        " != node count " + std::to_string(a_hat.rows));
  }
  c.h.assign(1, x);
  c.p.clear();
  c.z.clear();
  for (const auto& conv : m.convs) {
    c.p.push_back(matmul(a_hat, c.h.back()));
    c.z.push_back(dense_forward(conv, c.p.back()));
    c.h.push_back(relu(c.z.back()));
  }
  const auto pooled = colmean(c.h.back());
  c.pooled = Mat(1, pooled.size());
  c.pooled.data = pooled;

  c.dropped = c.pooled;
  c.dropout_mask.assign(pooled.size(), 1.0);
  if (train_mode && rng && m.dropout > 0.0) {
    const double keep_scale = 1.0 / (1.0 - m.dropout);
    for (std::size_t i = 0; i < c.dropout_mask.size(); ++i) {
      c.dropout_mask[i] = uniform(*rng) < m.dropout ? 0.0 : keep_scale;
      c.dropped.data[i] *= c.dropout_mask[i];
    }
  }
  const Mat logits = dense_forward(m.head, c.dropped);
  const auto probs = softmax(logits.row(0));
  c.probs = {probs[0], probs[1]};
  return c.probs;
}

double backward_impl(const GcnModel& m, const Mat& a_hat, int label, ForwardCache& c,
                     GcnGrads& grads, Mat* d_a_hat) {
  const double p_true = std::max(c.probs[static_cast<std::size_t>(label)], 1e-300);
  const double loss = -std::log(p_true);

  Mat dlogits(1, 2);
  dlogits(0, 0) = c.probs[0] - (label == 0 ? 1.0 : 0.0);
  dlogits(0, 1) = c.probs[1] - (label == 1 ? 1.0 : 0.0);

  Mat dpooled = dense_backward(m.head, c.dropped, dlogits, grads.head);
  for (std::size_t i = 0; i < dpooled.data.size(); ++i) {
    dpooled.data[i] *= c.dropout_mask[i];
  }
  const std::size_t n = a_hat.rows;
  Mat dh(n, m.hidden_dim());
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < dh.cols; ++j) {
      dh(i, j) = dpooled(0, j) / static_cast<double>(n);
    }
  }
  for (int l = GcnModel::kLayers - 1; l >= 0; --l) {
    const auto lu = static_cast<std::size_t>(l);
    Mat dz = relu_backward(c.z[lu], dh);
    Mat dp = dense_backward(m.convs[lu], c.p[lu], dz, grads.convs[lu]);
    if (d_a_hat) {
      // p = a_hat * h  =>  dL/da_hat += dp * h^T
      Mat da = matmul_nt(dp, c.h[lu]);
      for (std::size_t i = 0; i < da.data.size(); ++i) d_a_hat->data[i] += da.data[i];
    }
    dh = matmul_tn(a_hat, dp);
  }
  return loss;
}

}  // namespace

std::array<double, 2> gcn_forward(const GcnModel& m, const AttrGraph& g, const Mat& x,
                                  bool train_mode, std::uint64_t seed) {
  const Mat a_hat = normalized_adjacency(g);
  ForwardCache c;
  auto rng = make_rng(seed, "gcn-dropout");
  return forward_impl(m, a_hat, x, train_mode, train_mode ? &rng : nullptr, c);
}

std::array<double, 2> gcn_forward_on(const GcnModel& m, const Mat& a_hat, const Mat& x) {
  ForwardCache c;
  return forward_impl(m, a_hat, x, false, nullptr, c);
}

GcnGrads zero_gcn_grads(const GcnModel& m) {
  GcnGrads g;
  for (const auto& conv : m.convs) g.convs.push_back(zero_grad(conv));
  g.head = zero_grad(m.head);
  return g;
}

double gcn_loss_and_grads(const GcnModel& m, const Mat& a_hat, const Mat& x, int label,
                          GcnGrads& grads, std::mt19937_64* rng, Mat* d_a_hat) {
  ForwardCache c;
  forward_impl(m, a_hat, x, rng != nullptr, rng, c);
  return backward_impl(m, a_hat, label, c, grads, d_a_hat);
}

GcnTrainResult train_gcn(const std::vector<AttrGraph>& graphs,
                         const std::vector<Mat>& features, const GcnConfig& cfg) {
  if (graphs.size() != features.size()) {
    throw ShapeMismatch("train_gcn: graph/feature count mismatch");
  }
  if (graphs.size() < 2) {
    throw DegenerateSplit("train_gcn: need at least 2 training graphs");
  }
  bool seen[2] = {false, false};
  for (const auto& g : graphs) {
    if (!g.label) throw DegenerateSplit("train_gcn: unlabeled graph '" + g.graph_id + "'");
    seen[static_cast<std::size_t>(*g.label)] = true;
    if (g.node_count() == 0) throw EmptyGraph("graph '" + g.graph_id + "' has no nodes");
  }
  if (!seen[0] || !seen[1]) {
    throw DegenerateSplit("train_gcn: both classes must appear in the training split");
  }

  std::vector<Mat> a_hats;
  a_hats.reserve(graphs.size());
  for (std::size_t i = 0; i < graphs.size(); ++i) {
    if (features[i].cols != cfg.in_dim) {
      throw ShapeMismatch("train_gcn: graph '" + graphs[i].graph_id + "' feature width " +
                          std::to_string(features[i].cols) + " != in_dim " +
                          std::to_string(cfg.in_dim));
    }
    a_hats.push_back(normalized_adjacency(graphs[i]));
  }

  GcnTrainResult result;
  result.model = init_gcn(cfg);
  auto& m = result.model;

  AdamOpt opt;
  opt.lr = cfg.lr;
  auto rng = make_rng(cfg.seed, "gcn-train");
  std::vector<std::size_t> order(graphs.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;

  std::vector<double> graph_loss(graphs.size(), 0.0);
  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    shuffle_vec(order, rng);
    for (auto gi : order) {
      GcnGrads grads = zero_gcn_grads(m);
      const double loss =
          gcn_loss_and_grads(m, a_hats[gi], features[gi], *graphs[gi].label, grads, &rng);
      if (!std::isfinite(loss)) {
        throw NonFiniteLoss("gcn loss diverged at epoch " + std::to_string(epoch));
      }
      graph_loss[gi] = loss;
      std::vector<std::span<double>> params;
      std::vector<std::span<const double>> gspans;
      for (int l = 0; l < GcnModel::kLayers; ++l) {
        const auto lu = static_cast<std::size_t>(l);
        params.emplace_back(m.convs[lu].weight.data);
        params.emplace_back(m.convs[lu].bias);
        gspans.emplace_back(grads.convs[lu].dweight.data);
        gspans.emplace_back(grads.convs[lu].dbias);
      }
      params.emplace_back(m.head.weight.data);
      params.emplace_back(m.head.bias);
      gspans.emplace_back(grads.head.dweight.data);
      gspans.emplace_back(grads.head.dbias);
      opt.step(params, gspans);
    }
    // Summed in index order so the log does not depend on the shuffle.
    double epoch_loss = 0.0;
    for (double l : graph_loss) epoch_loss += l;
    result.epoch_loss.push_back(epoch_loss / static_cast<double>(graphs.size()));
  }
  return result;
}

void save_gcn(const GcnModel& m, const std::filesystem::path& path) {
  nlohmann::json j;
  j["kind"] = "gcn";
  j["dropout"] = m.dropout;
  j["convs"] = nlohmann::json::array();
  for (const auto& conv : m.convs) j["convs"].push_back(dense_to_json(conv));
  j["head"] = dense_to_json(m.head);
  std::ofstream out(path);
  if (!out) throw DataError("cannot open output file: " + path.string());
  out << j.dump(2) << '\n';
}

GcnModel load_gcn(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open checkpoint: " + path.string());
  nlohmann::json j;
  try {
    in >> j;
    if (j.at("kind") != "gcn") {
      throw DataError("checkpoint " + path.string() + " is not a gcn model");
    }
    GcnModel m;
    m.dropout = j.at("dropout").get<double>();
    for (const auto& jc : j.at("convs")) m.convs.push_back(dense_from_json(jc));
    m.head = dense_from_json(j.at("head"));
    if (m.convs.size() != static_cast<std::size_t>(GcnModel::kLayers)) {
      throw DataError("checkpoint " + path.string() + ": expected 3 conv layers");
    }
    for (std::size_t l = 1; l < m.convs.size(); ++l) {
      if (m.convs[l].in_dim() != m.convs[l - 1].out_dim()) {
        throw DataError("checkpoint " + path.string() + ": conv layer shapes disagree");
      }
    }
    if (m.head.in_dim() != m.convs.back().out_dim() || m.head.out_dim() != 2) {
      throw DataError("checkpoint " + path.string() + ": head shape disagrees");
    }
    return m;
  } catch (const nlohmann::json::exception& e) {
    throw DataError("checkpoint " + path.string() + ": " + e.what());
  }
}

}  // namespace mdg
