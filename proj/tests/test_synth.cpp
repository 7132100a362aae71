#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <set>

#include "helpers.hpp"
#include "mdg/metrics.hpp"
#include "mdg/pipeline.hpp"
#include "mdg/synth.hpp"
#include "mdg/x86.hpp"

using namespace mdg;
using mdg::test::TempDir;

TEST_CASE("gen_synthetic: class balance and labels") {
  SyntheticSpec spec;
  spec.n_per_class = 10;
  const auto graphs = gen_synthetic(spec, 1);
  CHECK(graphs.size() == 20);
  int malicious = 0;
  for (const auto& g : graphs) {
    REQUIRE(g.label.has_value());
    malicious += *g.label;
    CHECK(g.node_count() >= static_cast<std::size_t>(spec.nodes_min));
    CHECK(g.node_count() <= static_cast<std::size_t>(spec.nodes_max));
    CHECK_NOTHROW(validate(g));
  }
  CHECK(malicious == 10);
}

TEST_CASE("gen_synthetic: same seed gives byte-identical files") {
  TempDir dir("synthdet");
  SyntheticSpec spec;
  spec.n_per_class = 6;
  SplitSpec split{0.8, 0.2, 3};
  const auto a = write_synthetic(spec, 3, dir.path / "a", split);
  const auto b = write_synthetic(spec, 3, dir.path / "b", split);
  CHECK(mdg::test::slurp(a.graphs_file) == mdg::test::slurp(b.graphs_file));
  CHECK(mdg::test::slurp(a.manifest_file) != "");
  // and a different seed changes the corpus
  const auto c = write_synthetic(spec, 4, dir.path / "c", split);
  CHECK(mdg::test::slurp(a.graphs_file) != mdg::test::slurp(c.graphs_file));
}

TEST_CASE("gen_synthetic: motif clique planted only in malicious graphs") {
  SyntheticSpec spec;
  spec.n_per_class = 8;
  const auto graphs = gen_synthetic(spec, 7);
  for (const auto& g : graphs) {
    const auto motif = motif_nodes(g);
    const auto edges = motif_edges(g);
    const auto deg = degrees(g);
    if (*g.label == 1) {
      CHECK(motif.size() == static_cast<std::size_t>(spec.motif_size));
      // full bidirectional clique
      CHECK(edges.size() ==
            static_cast<std::size_t>(spec.motif_size * (spec.motif_size - 1)));
      for (const auto& id : motif) {
        CHECK(deg.at(id) >= 2 * (spec.motif_size - 1));
      }
    } else {
      CHECK(motif.empty());
      CHECK(edges.empty());
      // decoys carry the same markers but never touch each other
      std::set<NodeId> decoys;
      for (const auto& n : g.nodes) {
        if (n.id[0] == 'd') decoys.insert(n.id);
      }
      CHECK(decoys.size() == static_cast<std::size_t>(spec.motif_size));
      for (const auto& [src, dst] : g.edges) {
        CHECK_FALSE((decoys.count(src) && decoys.count(dst)));
      }
      for (const auto& id : decoys) CHECK(deg.at(id) >= 2);
    }
  }
}

TEST_CASE("gen_synthetic: marker features shift the documented dims") {
  SyntheticSpec spec;
  spec.n_per_class = 4;
  spec.motif_shift = 5.0;  // loud marker so the group test is unambiguous
  const auto graphs = gen_synthetic(spec, 11);
  for (const auto& g : graphs) {
    for (const auto& n : g.nodes) {
      const bool marked = n.id[0] == 'm' || n.id[0] == 'd';
      const auto& f = n.features();
      double lo = 0.0, hi = 0.0, rest = 0.0;
      for (std::size_t d = 0; d < 16; ++d) lo += f[d];
      for (std::size_t d = 16; d < 32; ++d) hi += f[d];
      for (std::size_t d = 32; d < f.size(); ++d) rest += f[d];
      if (marked) {
        CHECK(std::max(lo, hi) > 16 * 2.5);  // one group strongly shifted
        CHECK(std::min(lo, hi) < 16 * 2.5);
      } else {
        CHECK(std::abs(lo) < 16 * 2.5);
        CHECK(std::abs(hi) < 16 * 2.5);
      }
      (void)rest;
    }
  }
}

TEST_CASE("gen_synthetic: instruction payloads all decode") {
  SyntheticSpec spec;
  spec.n_per_class = 4;
  spec.payload = SynthPayload::Instr;
  const auto graphs = gen_synthetic(spec, 13);
  for (const auto& g : graphs) {
    for (const auto& n : g.nodes) {
      REQUIRE(n.kind() == PayloadKind::InstrBytes);
      CHECK_NOTHROW(x86::encode_node(n.instr_bytes()));
    }
  }
}

TEST_CASE("gen_synthetic: name payloads use marker pools on marked nodes") {
  SyntheticSpec spec;
  spec.n_per_class = 4;
  spec.payload = SynthPayload::Names;
  const auto graphs = gen_synthetic(spec, 17);
  const std::set<std::string> markers = {"decrypt_blob",  "hook_import",
                                         "patch_entry",   "spawn_payload",
                                         "beacon_c2",     "enum_process"};
  for (const auto& g : graphs) {
    for (const auto& n : g.nodes) {
      REQUIRE(n.kind() == PayloadKind::FunctionName);
      const bool marked = n.id[0] == 'm' || n.id[0] == 'd';
      CHECK(markers.count(n.function_name()) == (marked ? 1u : 0u));
    }
  }
}

TEST_CASE("gen_synthetic: bad specs are rejected") {
  SyntheticSpec spec;
  spec.n_per_class = 0;
  CHECK_THROWS_AS(gen_synthetic(spec, 0), BadSpec);
  spec = SyntheticSpec{};
  spec.nodes_min = 50;
  spec.nodes_max = 40;
  CHECK_THROWS_AS(gen_synthetic(spec, 0), BadSpec);
  spec = SyntheticSpec{};
  spec.edge_density = 1.5;
  CHECK_THROWS_AS(gen_synthetic(spec, 0), BadSpec);
  spec = SyntheticSpec{};
  spec.nodes_min = 5;
  spec.nodes_max = 6;  // cannot host motif + leaves
  CHECK_THROWS_AS(gen_synthetic(spec, 0), BadSpec);
  spec = SyntheticSpec{};
  spec.feature_dim = 100;  // not a legal graph-file width
  CHECK_THROWS_AS(gen_synthetic(spec, 0), BadSpec);
}

TEST_CASE("null experiment: without the motif the classes are chance-level") {
  SyntheticSpec spec;
  spec.n_per_class = 50;
  spec.nodes_min = 14;
  spec.nodes_max = 24;
  spec.plant_motif = false;
  const auto graphs = gen_synthetic(spec, 42);
  std::vector<Mat> feats;
  for (const auto& g : graphs) {
    Mat x(g.node_count(), 64);
    for (std::size_t i = 0; i < g.node_count(); ++i) {
      const auto& f = g.nodes[i].features();
      std::copy(f.begin(), f.end(), x.row(i).begin());
    }
    feats.push_back(std::move(x));
  }
  const auto split = split_corpus(graphs, {0.6, 0.4, 42});
  std::vector<AttrGraph> tg, eg;
  std::vector<Mat> tf, ef;
  for (auto i : split.train) {
    tg.push_back(graphs[i]);
    tf.push_back(feats[i]);
  }
  for (auto i : split.test) {
    eg.push_back(graphs[i]);
    ef.push_back(feats[i]);
  }
  GcnConfig cfg;
  cfg.in_dim = 64;
  cfg.hidden = 32;
  cfg.dropout = 0.3;
  cfg.epochs = 40;
  cfg.lr = 1e-2;
  cfg.seed = 42;
  const auto model = train_gcn(tg, tf, cfg).model;
  const auto acc = evaluate(model, eg, ef, 4).accuracy;
  CHECK(acc >= 0.4);
  CHECK(acc <= 0.6);
}

TEST_CASE("stats csv: empty corpus, triangle, additivity") {
  TempDir dir("stats");
  const auto empty_path = dir.path / "empty.csv";
  write_stats_csv({}, empty_path);
  CHECK(mdg::test::slurp(empty_path) == "graph_id,nodes,edges,components\n");

  const auto tri = mdg::test::make_graph("tri", {"a", "b", "c"},
                                         {{"a", "b"}, {"b", "c"}, {"c", "a"}});
  const auto path = dir.path / "tri.csv";
  write_stats_csv({tri, tri}, path);
  const auto text = mdg::test::slurp(path);
  CHECK(text.find("tri,3,3,1\n") != std::string::npos);
  CHECK(text.find("TOTAL,6,6,2\n") != std::string::npos);
}

TEST_CASE("run_pipeline: raw features, no reduction, separable corpus") {
  TempDir dir("pipe");
  SyntheticSpec spec;
  spec.n_per_class = 30;
  spec.nodes_min = 14;
  spec.nodes_max = 24;
  write_synthetic(spec, 21, dir.path / "s", {0.8, 0.2, 21});

  PipelineConfig cfg;
  cfg.input = dir.path / "s" / "manifest.json";
  cfg.input_is_manifest = true;
  cfg.out_dir = dir.path / "out";
  cfg.reduction.method = ReduceMethod::None;
  cfg.embedding = Embedding::Raw;
  cfg.gcn.epochs = 60;
  cfg.gcn.lr = 1e-2;
  cfg.gcn.dropout = 0.3;
  cfg.gcn.hidden = 32;
  cfg.explain_enabled = false;
  cfg.seed = 21;
  cfg.jobs = 2;
  cfg.timing_zero = true;
  const auto report = run_pipeline(cfg);
  CHECK(report.metrics.accuracy >= 0.9);
  CHECK(report.graphs_loaded == 60);
  CHECK(report.reduction_total.nodes_before == report.reduction_total.nodes_after);
  CHECK(std::filesystem::exists(report.metrics_csv));
  CHECK(std::filesystem::exists(report.run_manifest));
  const auto manifest = mdg::test::slurp(report.run_manifest);
  CHECK(manifest.find("\"embedding\": \"raw\"") != std::string::npos);
  CHECK(manifest.find("\"seed\": 21") != std::string::npos);

  // rerunning with the identical config reproduces the metrics byte for byte
  PipelineConfig cfg2 = cfg;
  cfg2.out_dir = dir.path / "out2";
  const auto report2 = run_pipeline(cfg2);
  CHECK(mdg::test::slurp(report.metrics_csv) == mdg::test::slurp(report2.metrics_csv));
}

TEST_CASE("features_for_graph: raw, ae and fne modes") {
  SyntheticSpec spec;
  spec.n_per_class = 2;
  const auto raw_graphs = gen_synthetic(spec, 19);
  const Mat x = features_for_graph(raw_graphs[0], Embedding::Raw, nullptr, nullptr, 0);
  CHECK(x.rows == raw_graphs[0].node_count());
  CHECK(x.cols == 64);

  spec.payload = SynthPayload::Instr;
  const auto instr_graphs = gen_synthetic(spec, 19);
  AeConfig ae_cfg;
  const auto ae = init_autoencoder(ae_cfg);
  const Mat code = features_for_graph(instr_graphs[0], Embedding::Ae, &ae, nullptr, 0);
  CHECK(code.rows == instr_graphs[0].node_count());
  CHECK(code.cols == 64);
  CHECK_THROWS_AS(features_for_graph(instr_graphs[0], Embedding::Ae, nullptr, nullptr, 0),
                  DataError);

  spec.payload = SynthPayload::Names;
  const auto name_graphs = gen_synthetic(spec, 19);
  const Mat emb = features_for_graph(name_graphs[0], Embedding::Fne, nullptr, nullptr, 0);
  CHECK(emb.rows == name_graphs[0].node_count());
  CHECK(emb.cols == kFneDim);
  // raw mode rejects name payloads
  CHECK_THROWS_AS(features_for_graph(name_graphs[0], Embedding::Raw, nullptr, nullptr, 0),
                  DataError);
}
