#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <set>

#include "helpers.hpp"
#include "mdg/explain.hpp"
#include "mdg/metrics.hpp"
#include "mdg/synth.hpp"

using namespace mdg;
using mdg::test::make_graph;
using mdg::test::random_graph;

namespace {

Mat random_mat(std::size_t r, std::size_t c, std::mt19937_64& rng) {
  Mat m(r, c);
  for (auto& x : m.data) x = uniform(rng, -1.0, 1.0);
  return m;
}

double masked_margin(const GcnModel& m, const AttrGraph& g, const Mat& x,
                     std::span<const double> logits) {
  std::vector<double> w(logits.size());
  for (std::size_t i = 0; i < w.size(); ++i) w[i] = 1.0 / (1.0 + std::exp(-logits[i]));
  const Mat a_hat = normalized_adjacency(g, w);
  double margin = 1e9;
  Mat h = x;
  for (const auto& conv : m.convs) {
    const Mat z = dense_forward(conv, matmul(a_hat, h));
    for (double v : z.data) margin = std::min(margin, std::fabs(v));
    h = relu(z);
  }
  return margin;
}

// Small trained model over a planted-motif corpus, shared by the recovery
// tests below.
struct MotifWorld {
  SyntheticSpec spec;
  std::vector<AttrGraph> graphs;
  std::vector<Mat> feats;
  GcnModel model;

  MotifWorld() {
    spec.n_per_class = 20;
    spec.nodes_min = 14;
    spec.nodes_max = 22;
    spec.edge_density = 0.10;
    spec.leaf_fraction = 0.2;
    spec.isolated_fraction = 0.0;
    spec.motif_size = 4;
    spec.motif_shift = 2.5;
    spec.feature_dim = 64;
    graphs = gen_synthetic(spec, 404);
    for (const auto& g : graphs) {
      Mat x(g.node_count(), 64);
      for (std::size_t i = 0; i < g.node_count(); ++i) {
        const auto& f = g.nodes[i].features();
        std::copy(f.begin(), f.end(), x.row(i).begin());
      }
      feats.push_back(std::move(x));
    }
    GcnConfig cfg;
    cfg.in_dim = 64;
    cfg.hidden = 32;
    cfg.dropout = 0.0;
    cfg.epochs = 80;
    cfg.lr = 0.01;
    cfg.seed = 12;
    model = train_gcn(graphs, feats, cfg).model;
  }
};

const MotifWorld& motif_world() {
  static const MotifWorld world;
  return world;
}

}  // namespace

TEST_CASE("mask gradient matches central finite differences") {
  auto rng = make_rng(55, "mask-gradcheck");
  const double h = 1e-6;
  int checked = 0;
  for (std::uint64_t inst = 0; checked < 20 && inst < 100; ++inst) {
    auto g = random_graph(rng, 6, 0.5);
    if (g.edge_count() < 2) continue;
    GcnConfig cfg;
    cfg.in_dim = 6;
    cfg.hidden = 5;
    cfg.dropout = 0.0;
    cfg.seed = 500 + inst;
    const auto model = init_gcn(cfg);
    const Mat x = random_mat(g.node_count(), 6, rng);
    std::vector<double> logits(g.edge_count());
    for (auto& l : logits) l = uniform(rng, -1.0, 1.0);
    if (masked_margin(model, g, x, logits) < 1e-3) continue;
    ++checked;
    const int target = static_cast<int>(inst % 2);
    const double lambda = (inst % 3) * 0.01;  // exercise both regularized and not

    std::vector<double> grad(logits.size());
    mask_loss_and_grad(model, g, x, target, logits, lambda, grad);
    std::vector<double> scratch(logits.size());
    for (std::size_t e = 0; e < logits.size(); ++e) {
      const double saved = logits[e];
      logits[e] = saved + h;
      const double up = mask_loss_and_grad(model, g, x, target, logits, lambda, scratch);
      logits[e] = saved - h;
      const double down = mask_loss_and_grad(model, g, x, target, logits, lambda, scratch);
      logits[e] = saved;
      const double numeric = (up - down) / (2 * h);
      const double scale = std::max({std::fabs(grad[e]), std::fabs(numeric), 1e-6});
      CHECK(std::fabs(grad[e] - numeric) / scale <= 1e-4);
    }
  }
  CHECK(checked == 20);
}

TEST_CASE("saturated mask reproduces the unmasked prediction") {
  auto rng = make_rng(56, "mask-sat");
  const auto g = random_graph(rng, 10, 0.25);
  if (g.edge_count() == 0) return;
  GcnConfig cfg;
  cfg.in_dim = 8;
  cfg.seed = 77;
  const auto model = init_gcn(cfg);
  const Mat x = random_mat(g.node_count(), 8, rng);

  const auto plain = gcn_forward_on(model, normalized_adjacency(g), x);
  const std::vector<double> saturated(g.edge_count(), 40.0);  // sigmoid ~ 1
  EdgeMask mask;
  mask.logits = saturated;
  const auto weights = mask.importances();
  const auto masked = gcn_forward_on(model, normalized_adjacency(g, weights), x);
  CHECK(std::fabs(plain[0] - masked[0]) < 1e-6);
  CHECK(std::fabs(plain[1] - masked[1]) < 1e-6);
}

TEST_CASE("learn_mask: determinism and epochs=0 baseline") {
  auto rng = make_rng(57, "mask-det");
  const auto g = make_graph("g", {"a", "b", "c", "d"},
                            {{"a", "b"}, {"b", "c"}, {"c", "d"}, {"d", "a"}});
  GcnConfig cfg;
  cfg.in_dim = 4;
  cfg.seed = 1;
  const auto model = init_gcn(cfg);
  const Mat x = random_mat(4, 4, rng);

  ExplainConfig ecfg;
  ecfg.epochs = 30;
  const auto m1 = learn_mask(model, g, x, ecfg, 99);
  const auto m2 = learn_mask(model, g, x, ecfg, 99);
  CHECK(m1.logits == m2.logits);

  ExplainConfig zero;
  zero.epochs = 0;
  const auto m0 = learn_mask(model, g, x, zero, 99);
  for (double l : m0.logits) {
    CHECK(l >= -0.1);
    CHECK(l <= 0.1);
  }

  const auto empty = make_graph("noedges", {"a"}, {});
  Mat x1(1, 4);
  CHECK_THROWS_AS(learn_mask(model, empty, x1, ecfg, 0), NoEdges);
}

TEST_CASE("extract_subgraph: top_p=1 returns the graph unchanged") {
  auto rng = make_rng(58, "extract-identity");
  auto g = random_graph(rng, 15, 0.15);
  g.graph_id = "orig";
  if (g.edge_count() == 0) g.edges.emplace_back(g.nodes[0].id, g.nodes[0].id);
  EdgeMask mask;
  mask.logits.assign(g.edge_count(), 0.0);
  auto rng2 = make_rng(59, "extract-identity2");
  for (auto& l : mask.logits) l = uniform(rng2, -2.0, 2.0);

  const auto result = extract_subgraph(g, mask, 1.0);
  std::set<NodeId> orig_nodes, sub_nodes;
  for (const auto& n : g.nodes) orig_nodes.insert(n.id);
  for (const auto& n : result.important.nodes) sub_nodes.insert(n.id);
  CHECK(orig_nodes == sub_nodes);
  CHECK(std::set<Edge>(g.edges.begin(), g.edges.end()) ==
        std::set<Edge>(result.important.edges.begin(), result.important.edges.end()));
  CHECK(result.unimportant.edge_count() == 0);
}

TEST_CASE("extract_subgraph: ceil arithmetic keeps one of four edges at p=0.25") {
  const auto g = make_graph("g", {"a", "b", "c", "d"},
                            {{"a", "b"}, {"b", "c"}, {"c", "d"}, {"d", "a"}});
  EdgeMask mask;
  mask.logits = {0.5, 2.0, -1.0, 0.0};  // edge (b,c) dominates
  const auto result = extract_subgraph(g, mask, 0.25);
  REQUIRE(result.important.edge_count() == 1);
  CHECK(result.important.edges[0] == Edge{"b", "c"});
  // nodes that lost every edge are gone
  std::set<NodeId> kept;
  for (const auto& n : result.important.nodes) kept.insert(n.id);
  CHECK(kept == std::set<NodeId>{"b", "c"});
  CHECK(result.unimportant.edge_count() == 3);
}

TEST_CASE("extract_subgraph: uniform mask breaks ties lexicographically") {
  const auto g = make_graph("g", {"a", "b", "c"},
                            {{"c", "a"}, {"b", "c"}, {"a", "b"}});
  EdgeMask mask;
  mask.logits = {0.3, 0.3, 0.3};
  const auto r1 = extract_subgraph(g, mask, 0.3);
  REQUIRE(r1.ranking.size() == 3);
  CHECK(r1.ranking[0].first == Edge{"a", "b"});
  CHECK(r1.ranking[1].first == Edge{"b", "c"});
  CHECK(r1.ranking[2].first == Edge{"c", "a"});
  REQUIRE(r1.important.edge_count() == 1);
  CHECK(r1.important.edges[0] == Edge{"a", "b"});
  const auto r2 = extract_subgraph(g, mask, 0.3);
  CHECK(r1.important.edges == r2.important.edges);
}

TEST_CASE("extract_subgraph: isolated input nodes survive in both halves") {
  auto g = make_graph("g", {"a", "b", "iso"}, {{"a", "b"}});
  EdgeMask mask;
  mask.logits = {1.0};
  const auto result = extract_subgraph(g, mask, 1.0);
  std::set<NodeId> kept;
  for (const auto& n : result.important.nodes) kept.insert(n.id);
  CHECK(kept.count("iso") == 1);
}

TEST_CASE("learned masks weight motif edges above background edges") {
  const auto& world = motif_world();
  ExplainConfig cfg;
  cfg.epochs = 200;
  cfg.lr = 0.1;
  cfg.sparsity_lambda = 0.002;
  int wins = 0, total = 0;
  for (std::size_t i = 0; i < world.graphs.size() && total < 8; ++i) {
    const auto& g = world.graphs[i];
    if (!g.label || *g.label != 1) continue;
    const auto motif = motif_edges(g);
    if (motif.empty() || motif.size() == g.edge_count()) continue;
    ++total;
    const auto mask = learn_mask(world.model, g, world.feats[i], cfg, 1000 + i);
    const auto sigma = mask.importances();
    const std::set<Edge> motif_set(motif.begin(), motif.end());
    double motif_sum = 0.0, other_sum = 0.0;
    std::size_t motif_n = 0, other_n = 0;
    for (std::size_t e = 0; e < g.edges.size(); ++e) {
      if (motif_set.count(g.edges[e])) {
        motif_sum += sigma[e];
        ++motif_n;
      } else {
        other_sum += sigma[e];
        ++other_n;
      }
    }
    if (motif_sum / motif_n > other_sum / other_n) ++wins;
  }
  REQUIRE(total == 8);
  CHECK(wins >= 6);  // the mean-importance gap should hold almost always
}

TEST_CASE("explainer_accuracy: p=1 equals plain test accuracy, grid size respected") {
  const auto& world = motif_world();
  ExplainConfig cfg;
  cfg.epochs = 60;
  std::vector<double> grid = {0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9, 1.0};
  const auto acc =
      explainer_accuracy(world.model, world.graphs, world.feats, cfg, grid, 7, 2);
  REQUIRE(acc.accuracy.size() == 10);
  CHECK(acc.skipped == 0);

  const auto plain = evaluate(world.model, world.graphs, world.feats);
  CHECK(acc.accuracy.back() == doctest::Approx(plain.accuracy));
}

TEST_CASE("explainer_accuracy: graphs without edges are skipped and logged") {
  const auto& world = motif_world();
  auto graphs = world.graphs;
  auto feats = world.feats;
  auto lonely = make_graph("lonely", {"a"}, {});
  lonely.label = 0;
  graphs.push_back(lonely);
  Mat x(1, 64);
  feats.push_back(x);
  ExplainConfig cfg;
  cfg.epochs = 5;
  const auto acc = explainer_accuracy(world.model, graphs, feats, cfg, {1.0}, 7);
  CHECK(acc.skipped == 1);
  REQUIRE(acc.skipped_ids.size() == 1);
  CHECK(acc.skipped_ids[0] == "lonely");
}

TEST_CASE("explain_graph fills a coherent fidelity record") {
  const auto& world = motif_world();
  ExplainConfig cfg;
  cfg.epochs = 40;
  cfg.top_p = 0.5;
  std::size_t idx = 0;
  while (world.graphs[idx].edge_count() == 0) ++idx;
  const auto result =
      explain_graph(world.model, world.graphs[idx], world.feats[idx], cfg, 3);
  CHECK(result.fidelity.original_probs[0] + result.fidelity.original_probs[1] ==
        doctest::Approx(1.0).epsilon(1e-6));
  CHECK(result.fidelity.subgraph_probs[0] + result.fidelity.subgraph_probs[1] ==
        doctest::Approx(1.0).epsilon(1e-6));
  const auto expected_edges = static_cast<std::size_t>(
      std::ceil(0.5 * static_cast<double>(world.graphs[idx].edge_count())));
  CHECK(result.important.edge_count() == expected_edges);
  CHECK(result.ranking.size() == world.graphs[idx].edge_count());
  for (std::size_t i = 1; i < result.ranking.size(); ++i) {
    CHECK(result.ranking[i - 1].second >= result.ranking[i].second);
  }
}

TEST_CASE("explainer csv format") {
  mdg::test::TempDir dir("expcsv");
  ExplainerAccuracy acc;
  acc.p_grid = {0.25, 1.0};
  acc.accuracy = {0.75, 0.9375};
  const auto path = dir.path / "e.csv";
  write_explainer_csv(acc, path);
  CHECK(mdg::test::slurp(path) == "p,accuracy\n0.25,0.750000\n1.00,0.937500\n");
}
