#include "mdg/pipeline.hpp"

#include <chrono>
#include <fstream>

#include "json.hpp"
#include "mdg/parallel.hpp"
#include "mdg/rng.hpp"

namespace mdg {

using nlohmann::json;

std::string embedding_name(Embedding e) {
  switch (e) {
    case Embedding::Raw: return "raw";
    case Embedding::Ae: return "ae";
    case Embedding::Fne: return "fne";
  }
  return "raw";
}

Embedding embedding_from_name(const std::string& name) {
  if (name == "raw") return Embedding::Raw;
  if (name == "ae") return Embedding::Ae;
  if (name == "fne") return Embedding::Fne;
  throw DataError("unknown embedding '" + name + "'");
}

Mat features_for_graph(const AttrGraph& g, Embedding mode, const AutoencoderModel* ae,
                       const FneTable* fne, std::uint64_t fne_seed) {
  const std::size_t n = g.node_count();
  switch (mode) {
    case Embedding::Raw: {
      Mat x;
      for (std::size_t i = 0; i < n; ++i) {
        if (g.nodes[i].kind() != PayloadKind::Features) {
          throw DataError("graph '" + g.graph_id + "' node '" + g.nodes[i].id +
                          "': raw embedding needs feature payloads");
        }
        const auto& f = g.nodes[i].features();
        if (i == 0) x = Mat(n, f.size());
        if (f.size() != x.cols) {
          throw ShapeMismatch("graph '" + g.graph_id + "': inconsistent feature widths");
        }
        std::copy(f.begin(), f.end(), x.row(i).begin());
      }
      return x;
    }
    case Embedding::Ae: {
      if (!ae) throw DataError("ae embedding requested without a trained autoencoder");
      Mat x406(n, x86::kEncodedDim);
      for (std::size_t i = 0; i < n; ++i) {
        const auto& node = g.nodes[i];
        if (node.kind() == PayloadKind::InstrBytes) {
          const auto f = x86::encode_node(node.instr_bytes());
          std::copy(f.values.begin(), f.values.end(), x406.row(i).begin());
        } else if (node.kind() == PayloadKind::Features &&
                   node.features().size() == x86::kEncodedDim) {
          std::copy(node.features().begin(), node.features().end(), x406.row(i).begin());
        } else {
          throw DataError("graph '" + g.graph_id + "' node '" + node.id +
                          "': ae embedding needs instr_bytes or 406-dim features");
        }
      }
      return encode64(*ae, x406);
    }
    case Embedding::Fne: {
      Mat x(n, kFneDim);
      static const FneTable empty_table;
      const FneTable& table = fne ? *fne : empty_table;
      for (std::size_t i = 0; i < n; ++i) {
        const auto& node = g.nodes[i];
        if (node.kind() == PayloadKind::FunctionName) {
          const auto r = ingest_fne({node.function_name()}, table, fne_seed);
          std::copy(r.features.row(0).begin(), r.features.row(0).end(), x.row(i).begin());
        } else if (node.kind() == PayloadKind::Features &&
                   node.features().size() == kFneDim) {
          std::copy(node.features().begin(), node.features().end(), x.row(i).begin());
        } else {
          throw DataError("graph '" + g.graph_id + "' node '" + node.id +
                          "': fne embedding needs function_name or 384-dim features");
        }
      }
      return x;
    }
  }
  throw DataError("invalid embedding mode");
}

PipelineConfig load_pipeline_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open config: " + path.string());
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw DataError("config " + path.string() + ": " + e.what());
  }
  PipelineConfig cfg;
  try {
    const auto base = path.parent_path();
    auto resolve = [&](std::filesystem::path p) {
      return p.is_absolute() ? p : base / p;
    };
    if (j.contains("manifest")) {
      cfg.input = resolve(j.at("manifest").get<std::string>());
      cfg.input_is_manifest = true;
    } else {
      cfg.input = resolve(j.at("in").get<std::string>());
    }
    cfg.out_dir = resolve(j.value("out_dir", std::string("out")));
    if (j.contains("reduction")) {
      const auto& r = j.at("reduction");
      cfg.reduction.method = method_from_name(r.value("method", std::string("none")));
      cfg.reduction.u = r.value("u", cfg.reduction.u);
      cfg.reduction.k = r.value("k", cfg.reduction.k);
      cfg.reduction.n_frac = r.value("n_frac", cfg.reduction.n_frac);
      cfg.reduction.wis_batch = r.value("wis_batch", false);
    }
    cfg.embedding = embedding_from_name(j.value("embedding", std::string("raw")));
    if (j.contains("fne_table")) cfg.fne_table = resolve(j.at("fne_table").get<std::string>());
    if (j.contains("ae")) {
      const auto& a = j.at("ae");
      cfg.ae.hidden = a.value("hidden", cfg.ae.hidden);
      cfg.ae.code = a.value("code", cfg.ae.code);
      cfg.ae.epochs = a.value("epochs", cfg.ae.epochs);
      cfg.ae.lr = a.value("lr", cfg.ae.lr);
      cfg.ae.batch_size = a.value("batch_size", cfg.ae.batch_size);
    }
    if (j.contains("model")) {
      const auto& m = j.at("model");
      cfg.gcn.hidden = m.value("hidden", cfg.gcn.hidden);
      cfg.gcn.dropout = m.value("dropout", cfg.gcn.dropout);
      cfg.gcn.epochs = m.value("epochs", cfg.gcn.epochs);
      cfg.gcn.lr = m.value("lr", cfg.gcn.lr);
    }
    if (j.contains("explain")) {
      const auto& e = j.at("explain");
      cfg.explain_enabled = e.value("enabled", true);
      cfg.explain.epochs = e.value("epochs", cfg.explain.epochs);
      cfg.explain.lr = e.value("lr", cfg.explain.lr);
      cfg.explain.sparsity_lambda = e.value("sparsity_lambda", cfg.explain.sparsity_lambda);
      cfg.explain.top_p = e.value("top_p", cfg.explain.top_p);
      if (e.contains("p_grid")) cfg.p_grid = e.at("p_grid").get<std::vector<double>>();
    }
    if (j.contains("split")) {
      const auto& s = j.at("split");
      cfg.split.train = s.value("train", cfg.split.train);
      cfg.split.test = s.value("test", cfg.split.test);
      cfg.split.seed = s.value("seed", cfg.split.seed);
    }
    cfg.seed = j.value("seed", std::uint64_t{0});
    cfg.jobs = j.value("jobs", 1);
    cfg.timing_zero = j.value("timing_zero", false);
  } catch (const json::exception& e) {
    throw DataError("config " + path.string() + ": " + e.what());
  }
  return cfg;
}

namespace {

using Clock = std::chrono::steady_clock;

struct StopWatch {
  Clock::time_point start = Clock::now();
  double lap() {
    const auto now = Clock::now();
    const double s = std::chrono::duration<double>(now - start).count();
    start = now;
    return s;
  }
};

// Reraise stage failures with the stage name attached, keeping the error
// category (and with it the CLI exit code).
template <typename F>
auto stage(const char* name, F&& f) {
  try {
    return f();
  } catch (const NumericError& e) {
    throw NonFiniteLoss(std::string(name) + ": " + e.what());
  } catch (const DataError& e) {
    throw DataError(std::string(name) + ": " + e.what());
  }
}

Mat stack_benign_node_features(const std::vector<AttrGraph>& graphs,
                               const std::vector<std::size_t>& train_idx) {
  std::vector<std::array<double, x86::kEncodedDim>> rows;
  for (auto gi : train_idx) {
    const auto& g = graphs[gi];
    if (!g.label || *g.label != 0) continue;
    for (const auto& node : g.nodes) {
      if (node.kind() == PayloadKind::InstrBytes) {
        rows.push_back(x86::encode_node(node.instr_bytes()).values);
      } else if (node.kind() == PayloadKind::Features &&
                 node.features().size() == x86::kEncodedDim) {
        std::array<double, x86::kEncodedDim> row{};
        std::copy(node.features().begin(), node.features().end(), row.begin());
        rows.push_back(row);
      } else {
        throw DataError("graph '" + g.graph_id + "' node '" + node.id +
                        "': ae embedding needs instr_bytes or 406-dim features");
      }
    }
  }
  Mat x(rows.size(), x86::kEncodedDim);
  for (std::size_t i = 0; i < rows.size(); ++i) {
    std::copy(rows[i].begin(), rows[i].end(), x.row(i).begin());
  }
  return x;
}

}  // namespace

RunReport run_pipeline(const PipelineConfig& cfg) {
  RunReport report;
  std::filesystem::create_directories(cfg.out_dir);
  StopWatch watch;

  // Load.
  std::vector<AttrGraph> graphs;
  SplitSpec split = cfg.split;
  stage("load", [&] {
    if (cfg.input_is_manifest) {
      const auto manifest = load_manifest(cfg.input);
      graphs = load_corpus(manifest);
      split = manifest.split;
    } else {
      graphs = load_graphs(cfg.input);
    }
  });
  report.graphs_loaded = graphs.size();
  report.stage_times.push_back({"load", watch.lap()});

  // Prune.
  auto reduction = stage("prune", [&] { return reduce_corpus(graphs, cfg.reduction, cfg.jobs); });
  if (cfg.timing_zero) {
    for (auto& r : reduction.per_graph) r.wall_time_s = 0.0;
    reduction.aggregate.wall_time_s = 0.0;
  }
  report.reduction_total = reduction.aggregate;
  report.reduction_csv = cfg.out_dir / "reduction_report.csv";
  {
    auto rows = reduction.per_graph;
    rows.push_back(reduction.aggregate);
    write_report_csv(rows, report.reduction_csv);
  }
  write_graphs(reduction.graphs, cfg.out_dir / "reduced.jsonl");
  report.stage_times.push_back({"prune", watch.lap()});

  // Reduction can empty a graph; those cannot be classified.
  std::vector<AttrGraph> usable;
  for (auto& g : reduction.graphs) {
    if (g.node_count() >= 1) usable.push_back(std::move(g));
    else ++report.graphs_dropped_empty;
  }

  const auto corpus_split = split_corpus(usable, split);
  {
    std::vector<AttrGraph> part;
    for (auto i : corpus_split.train) part.push_back(usable[i]);
    write_graphs(part, cfg.out_dir / "train.jsonl");
    part.clear();
    for (auto i : corpus_split.test) part.push_back(usable[i]);
    write_graphs(part, cfg.out_dir / "test.jsonl");
  }

  // Embed.
  std::optional<AutoencoderModel> ae;
  std::optional<FneTable> fne;
  std::vector<Mat> features(usable.size());
  stage("embed", [&] {
    if (cfg.embedding == Embedding::Ae) {
      AeConfig ae_cfg = cfg.ae;
      ae_cfg.seed = substream_seed(cfg.seed, "train-ae");
      const Mat benign = stack_benign_node_features(usable, corpus_split.train);
      if (benign.rows == 0) throw DataError("ae embedding: no benign training nodes");
      auto trained = train_autoencoder(benign, ae_cfg);
      ae = std::move(trained.model);
      save_autoencoder(*ae, cfg.out_dir / "ae.json");
    } else if (cfg.embedding == Embedding::Fne) {
      if (!cfg.fne_table.empty()) fne = load_fne_table(cfg.fne_table);
    }
    parallel_for(usable.size(), cfg.jobs, [&](std::size_t i) {
      features[i] = features_for_graph(usable[i], cfg.embedding,
                                       ae ? &*ae : nullptr, fne ? &*fne : nullptr,
                                       substream_seed(cfg.seed, "fne"));
    });
  });
  report.stage_times.push_back({"embed", watch.lap()});

  // Train.
  GcnConfig gcn_cfg = cfg.gcn;
  gcn_cfg.seed = substream_seed(cfg.seed, "train-gcn");
  if (!corpus_split.train.empty()) {
    gcn_cfg.in_dim = features[corpus_split.train.front()].cols;
  }
  std::vector<AttrGraph> train_graphs;
  std::vector<Mat> train_features;
  for (auto i : corpus_split.train) {
    train_graphs.push_back(usable[i]);
    train_features.push_back(features[i]);
  }
  auto trained = stage("train", [&] { return train_gcn(train_graphs, train_features, gcn_cfg); });
  save_gcn(trained.model, cfg.out_dir / "gcn.json");
  report.stage_times.push_back({"train", watch.lap()});

  // Evaluate.
  std::vector<AttrGraph> test_graphs;
  std::vector<Mat> test_features;
  for (auto i : corpus_split.test) {
    test_graphs.push_back(usable[i]);
    test_features.push_back(features[i]);
  }
  report.metrics =
      stage("eval", [&] { return evaluate(trained.model, test_graphs, test_features, cfg.jobs); });
  report.metrics_csv = cfg.out_dir / "metrics.csv";
  write_metrics_csv(report.metrics, report.metrics_csv);
  report.stage_times.push_back({"eval", watch.lap()});

  // Explain.
  if (cfg.explain_enabled) {
    report.explainer = stage("explain", [&] {
      return explainer_accuracy(trained.model, test_graphs, test_features, cfg.explain,
                                cfg.p_grid, substream_seed(cfg.seed, "explain"), cfg.jobs);
    });
    report.explain_csv = cfg.out_dir / "explainer_accuracy.csv";
    write_explainer_csv(*report.explainer, report.explain_csv);

    const auto dot_dir = cfg.out_dir / "explanations";
    std::filesystem::create_directories(dot_dir);
    for (std::size_t i = 0; i < test_graphs.size(); ++i) {
      if (test_graphs[i].edge_count() == 0) continue;
      const auto result =
          explain_graph(trained.model, test_graphs[i], test_features[i], cfg.explain,
                        substream_seed(cfg.seed, "explain-graph", i));
      std::ofstream imp(dot_dir / (test_graphs[i].graph_id + "_important.dot"));
      imp << to_dot(result.important);
      std::ofstream unimp(dot_dir / (test_graphs[i].graph_id + "_unimportant.dot"));
      unimp << to_dot(result.unimportant);
    }
    report.stage_times.push_back({"explain", watch.lap()});
  }

  // Run manifest with every resolved parameter.
  json manifest;
  manifest["seed"] = cfg.seed;
  manifest["jobs"] = cfg.jobs;
  manifest["input"] = cfg.input.string();
  manifest["graphs_loaded"] = report.graphs_loaded;
  manifest["graphs_dropped_empty"] = report.graphs_dropped_empty;
  manifest["reduction"] = {{"method", method_name(cfg.reduction.method)},
                           {"u", cfg.reduction.u},
                           {"k", cfg.reduction.k},
                           {"n_frac", cfg.reduction.n_frac},
                           {"wis_batch", cfg.reduction.wis_batch}};
  manifest["embedding"] = embedding_name(cfg.embedding);
  manifest["timing_zero"] = cfg.timing_zero;
  if (cfg.embedding == Embedding::Fne && !cfg.fne_table.empty()) {
    manifest["fne_table"] = cfg.fne_table.string();
  }
  if (cfg.embedding == Embedding::Ae) {
    manifest["ae"] = {{"hidden", cfg.ae.hidden}, {"code", cfg.ae.code},
                      {"epochs", cfg.ae.epochs}, {"lr", cfg.ae.lr},
                      {"batch_size", cfg.ae.batch_size}};
  }
  manifest["model"] = {{"hidden", gcn_cfg.hidden}, {"in_dim", gcn_cfg.in_dim},
                       {"dropout", gcn_cfg.dropout}, {"epochs", gcn_cfg.epochs},
                       {"lr", gcn_cfg.lr}};
  manifest["split"] = {{"train", split.train}, {"test", split.test}, {"seed", split.seed}};
  manifest["explain"] = {{"enabled", cfg.explain_enabled},
                         {"epochs", cfg.explain.epochs},
                         {"lr", cfg.explain.lr},
                         {"sparsity_lambda", cfg.explain.sparsity_lambda},
                         {"top_p", cfg.explain.top_p},
                         {"p_grid", cfg.p_grid}};
  manifest["stages"] = json::array();
  for (const auto& st : report.stage_times) {
    manifest["stages"].push_back(
        {{"stage", st.stage}, {"seconds", cfg.timing_zero ? 0.0 : st.seconds}});
  }
  report.run_manifest = cfg.out_dir / "run_manifest.json";
  std::ofstream out(report.run_manifest);
  out << manifest.dump(2) << '\n';
  return report;
}

void write_stats_csv(const std::vector<AttrGraph>& graphs,
                     const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot open output file: " + path.string());
  out << "graph_id,nodes,edges,components\n";
  std::size_t tn = 0, te = 0, tc = 0;
  for (const auto& g : graphs) {
    const auto comps = components(g).size();
    out << g.graph_id << ',' << g.node_count() << ',' << g.edge_count() << ','
        << comps << '\n';
    tn += g.node_count();
    te += g.edge_count();
    tc += comps;
  }
  if (!graphs.empty()) {
    out << "TOTAL," << tn << ',' << te << ',' << tc << '\n';
  }
}

}  // namespace mdg
