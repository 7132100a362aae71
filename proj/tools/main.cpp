// mdg: graph reduction, GCN classification and edge-mask explanations for
// malware control-flow and call graphs.

#include <cstdio>
#include <fstream>
#include <iostream>

#include "CLI11.hpp"
#include "mdg/parallel.hpp"
#include "mdg/pipeline.hpp"
#include "mdg/rng.hpp"
#include "mdg/synth.hpp"

namespace {

using namespace mdg;

int cmd_gen_synth(const SyntheticSpec& spec, std::uint64_t seed, double train_frac,
                  const std::string& out_dir) {
  SplitSpec split;
  split.train = train_frac;
  split.test = 1.0 - train_frac;
  split.seed = seed;
  const auto out = write_synthetic(spec, seed, out_dir, split);
  std::cout << "wrote " << out.graphs_file.string() << " and "
            << out.manifest_file.string() << "\n";
  return 0;
}

int cmd_stats(const std::string& in, const std::string& out, const std::string& dot_dir) {
  const auto graphs = load_graphs(in);
  write_stats_csv(graphs, out);
  if (!dot_dir.empty()) {
    std::filesystem::create_directories(dot_dir);
    for (const auto& g : graphs) {
      std::ofstream dot(std::filesystem::path(dot_dir) / (g.graph_id + ".dot"));
      dot << to_dot(g);
    }
  }
  std::cout << "wrote " << out << " (" << graphs.size() << " graphs)\n";
  return 0;
}

int cmd_prune(const std::string& method, double u, int k, double n_frac, bool wis_batch,
              int jobs, bool timing_zero, const std::string& in, const std::string& out,
              const std::string& report) {
  ReductionConfig cfg;
  cfg.method = method_from_name(method);
  cfg.u = u;
  cfg.k = k;
  cfg.n_frac = n_frac;
  cfg.wis_batch = wis_batch;
  auto graphs = load_graphs(in);
  auto result = reduce_corpus(graphs, cfg, jobs);
  write_graphs(result.graphs, out);
  if (!report.empty()) {
    auto rows = result.per_graph;
    rows.push_back(result.aggregate);
    if (timing_zero) {
      for (auto& r : rows) r.wall_time_s = 0.0;
    }
    write_report_csv(rows, report);
  }
  std::cout << "pruned " << graphs.size() << " graphs: nodes "
            << result.aggregate.nodes_before << " -> " << result.aggregate.nodes_after
            << ", edges " << result.aggregate.edges_before << " -> "
            << result.aggregate.edges_after << "\n";
  return 0;
}

int cmd_encode(const std::string& in, const std::string& out, bool skip_bad, bool sum_agg) {
  auto graphs = load_graphs(in);
  std::size_t bad_nodes = 0;
  const auto agg = sum_agg ? x86::Aggregate::Sum : x86::Aggregate::Mean;
  for (auto& g : graphs) {
    std::vector<NodeRecord> kept;
    std::set<NodeId> dropped;
    for (auto& node : g.nodes) {
      if (node.kind() != PayloadKind::InstrBytes) {
        kept.push_back(std::move(node));
        continue;
      }
      try {
        const auto f = x86::encode_node(node.instr_bytes(), agg);
        node.payload = FeatureVec(f.values.begin(), f.values.end());
        kept.push_back(std::move(node));
      } catch (const DataError& e) {
        ++bad_nodes;
        std::cerr << "graph '" << g.graph_id << "' node '" << node.id << "': " << e.what()
                  << "\n";
        if (!skip_bad) throw;
        dropped.insert(node.id);
      }
    }
    g.nodes = std::move(kept);
    if (!dropped.empty()) {
      std::erase_if(g.edges, [&](const Edge& e) {
        return dropped.count(e.first) || dropped.count(e.second);
      });
    }
  }
  write_graphs(graphs, out);
  std::cout << "encoded " << graphs.size() << " graphs";
  if (bad_nodes > 0) std::cout << " (" << bad_nodes << " undecodable nodes dropped)";
  std::cout << "\n";
  return 0;
}

int cmd_embed_fne(const std::string& in, const std::string& table_path,
                  const std::string& out, std::uint64_t seed) {
  auto graphs = load_graphs(in);
  FneTable table;
  if (!table_path.empty()) table = load_fne_table(table_path);
  std::size_t unknown = 0;
  for (auto& g : graphs) {
    for (auto& node : g.nodes) {
      if (node.kind() != PayloadKind::FunctionName) continue;
      const auto r = ingest_fne({node.function_name()}, table, seed);
      unknown += r.unknown_count;
      node.payload = FeatureVec(r.features.row(0).begin(), r.features.row(0).end());
    }
  }
  write_graphs(graphs, out);
  std::cout << "embedded " << graphs.size() << " graphs (" << unknown
            << " names missing from the table used the hash fallback)\n";
  return 0;
}

int cmd_train_ae(const std::string& in, const std::string& out, int epochs, double lr,
                 std::size_t batch, std::uint64_t seed) {
  const auto graphs = load_graphs(in);
  std::vector<std::vector<double>> rows;
  for (const auto& g : graphs) {
    if (g.label && *g.label != 0) {
      throw DataError("train-ae: graph '" + g.graph_id + "' is not benign");
    }
    for (const auto& node : g.nodes) {
      if (node.kind() == PayloadKind::InstrBytes) {
        const auto f = x86::encode_node(node.instr_bytes());
        rows.emplace_back(f.values.begin(), f.values.end());
      } else if (node.kind() == PayloadKind::Features &&
                 node.features().size() == x86::kEncodedDim) {
        rows.push_back(node.features());
      } else {
        throw DataError("train-ae: graph '" + g.graph_id + "' node '" + node.id +
                        "' has no 406-dim payload");
      }
    }
  }
  if (rows.empty()) throw DataError("train-ae: no training vectors");
  Mat x(rows.size(), x86::kEncodedDim);
  for (std::size_t i = 0; i < rows.size(); ++i) {
    std::copy(rows[i].begin(), rows[i].end(), x.row(i).begin());
  }
  AeConfig cfg;
  cfg.epochs = epochs;
  cfg.lr = lr;
  cfg.batch_size = batch;
  cfg.seed = seed;
  const auto result = train_autoencoder(x, cfg);
  save_autoencoder(result.model, out);
  if (!result.epoch_mse.empty()) {
    std::printf("trained on %zu vectors, mse %.6f -> %.6f\n", rows.size(),
                result.epoch_mse.front(), result.epoch_mse.back());
  }
  std::cout << "wrote " << out << "\n";
  return 0;
}

std::pair<std::vector<AttrGraph>, std::vector<Mat>> load_embedded(
    const std::string& in, const std::string& features, const std::string& ae_path,
    const std::string& fne_path, std::uint64_t seed, int jobs) {
  auto graphs = load_graphs(in);
  std::erase_if(graphs, [](const AttrGraph& g) { return g.node_count() == 0; });
  const auto mode = embedding_from_name(features);
  std::optional<AutoencoderModel> ae;
  if (mode == Embedding::Ae) {
    if (ae_path.empty()) throw DataError("--features ae requires --ae CHECKPOINT");
    ae = load_autoencoder(ae_path);
  }
  std::optional<FneTable> fne;
  if (mode == Embedding::Fne && !fne_path.empty()) fne = load_fne_table(fne_path);
  std::vector<Mat> mats(graphs.size());
  parallel_for(graphs.size(), jobs, [&](std::size_t i) {
    mats[i] = features_for_graph(graphs[i], mode, ae ? &*ae : nullptr,
                                 fne ? &*fne : nullptr, substream_seed(seed, "fne"));
  });
  return {std::move(graphs), std::move(mats)};
}

int cmd_train(const std::string& in, const std::string& features, const std::string& ae_path,
              const std::string& fne_path, const std::string& out, int epochs, double lr,
              double dropout, std::size_t hidden, std::uint64_t seed, int jobs) {
  auto [graphs, mats] = load_embedded(in, features, ae_path, fne_path, seed, jobs);
  GcnConfig cfg;
  cfg.epochs = epochs;
  cfg.lr = lr;
  cfg.dropout = dropout;
  cfg.hidden = hidden;
  cfg.seed = substream_seed(seed, "train-gcn");
  if (graphs.empty()) throw DataError("train: empty corpus");
  cfg.in_dim = mats.front().cols;
  const auto result = train_gcn(graphs, mats, cfg);
  save_gcn(result.model, out);
  if (!result.epoch_loss.empty()) {
    std::printf("trained %zu graphs, loss %.6f -> %.6f\n", graphs.size(),
                result.epoch_loss.front(), result.epoch_loss.back());
  }
  std::cout << "wrote " << out << "\n";
  return 0;
}

int cmd_eval(const std::string& model_path, const std::string& in,
             const std::string& features, const std::string& ae_path,
             const std::string& fne_path, const std::string& metrics_out,
             std::uint64_t seed, int jobs) {
  const auto model = load_gcn(model_path);
  auto [graphs, mats] = load_embedded(in, features, ae_path, fne_path, seed, jobs);
  const auto m = evaluate(model, graphs, mats, jobs);
  write_metrics_csv(m, metrics_out);
  std::printf("accuracy %.4f f1 %.4f precision %.4f recall %.4f (tp %ld fp %ld tn %ld fn %ld)\n",
              m.accuracy, m.f1, m.precision, m.recall, m.tp, m.fp, m.tn, m.fn);
  return 0;
}

int cmd_explain(const std::string& model_path, const std::string& in,
                const std::string& features, const std::string& ae_path,
                const std::string& fne_path, const std::string& out_dir, double top_p,
                int epochs, double lr, double lambda, const std::vector<double>& p_grid,
                std::uint64_t seed, int jobs) {
  const auto model = load_gcn(model_path);
  auto [graphs, mats] = load_embedded(in, features, ae_path, fne_path, seed, jobs);
  ExplainConfig cfg;
  cfg.top_p = top_p;
  cfg.epochs = epochs;
  cfg.lr = lr;
  cfg.sparsity_lambda = lambda;
  std::filesystem::create_directories(out_dir);

  bool any_labeled = !graphs.empty();
  for (const auto& g : graphs) any_labeled = any_labeled && g.label.has_value();
  if (any_labeled) {
    const auto acc = explainer_accuracy(model, graphs, mats, cfg, p_grid,
                                        substream_seed(seed, "explain"), jobs);
    write_explainer_csv(acc, std::filesystem::path(out_dir) / "explainer_accuracy.csv");
    for (const auto& id : acc.skipped_ids) {
      std::cerr << "skipped '" << id << "': no edges\n";
    }
  }
  for (std::size_t i = 0; i < graphs.size(); ++i) {
    if (graphs[i].edge_count() == 0) continue;
    const auto result = explain_graph(model, graphs[i], mats[i], cfg,
                                      substream_seed(seed, "explain-graph", i));
    std::ofstream imp(std::filesystem::path(out_dir) /
                      (graphs[i].graph_id + "_important.dot"));
    imp << to_dot(result.important);
    std::ofstream unimp(std::filesystem::path(out_dir) /
                        (graphs[i].graph_id + "_unimportant.dot"));
    unimp << to_dot(result.unimportant);
  }
  std::cout << "wrote explanations to " << out_dir << "\n";
  return 0;
}

int cmd_run(const std::string& config_path) {
  const auto cfg = load_pipeline_config(config_path);
  const auto report = run_pipeline(cfg);
  std::printf("metrics: accuracy %.4f f1 %.4f\n", report.metrics.accuracy,
              report.metrics.f1);
  std::cout << "artifacts in " << cfg.out_dir.string() << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"graph reduction, GCN classification and explanations for CFG/FCG corpora"};
  app.require_subcommand(1);

  // gen-synth
  auto* gen = app.add_subcommand("gen-synth", "generate a synthetic labeled corpus");
  SyntheticSpec spec;
  std::uint64_t gen_seed = 0;
  double train_frac = 0.8;
  std::string gen_out = "synth";
  std::string payload = "features";
  gen->add_option("--n-per-class", spec.n_per_class, "graphs per class");
  gen->add_option("--nodes-min", spec.nodes_min, "minimum node count");
  gen->add_option("--nodes-max", spec.nodes_max, "maximum node count");
  gen->add_option("--edge-density", spec.edge_density, "extra core edge probability");
  gen->add_option("--leaf-fraction", spec.leaf_fraction, "fraction of pendant nodes");
  gen->add_option("--isolated-fraction", spec.isolated_fraction, "fraction of isolated nodes");
  gen->add_option("--motif-size", spec.motif_size, "malicious clique size");
  gen->add_option("--motif-shift", spec.motif_shift, "motif feature mean offset");
  gen->add_option("--feature-dim", spec.feature_dim, "feature payload width");
  gen->add_option("--payload", payload, "payload kind: features|instr|names");
  gen->add_flag("!--no-motif", spec.plant_motif, "disable the planted motif");
  gen->add_option("--train-frac", train_frac, "train split fraction");
  gen->add_option("--seed", gen_seed, "master seed");
  gen->add_option("--out", gen_out, "output directory");

  // stats
  auto* stats = app.add_subcommand("stats", "per-graph corpus statistics CSV");
  std::string stats_in, stats_out = "stats.csv", stats_dot;
  stats->add_option("--in", stats_in, "input graph file")->required();
  stats->add_option("--out", stats_out, "output CSV");
  stats->add_option("--dot", stats_dot, "also write one DOT file per graph here");

  // prune
  auto* prune = app.add_subcommand("prune", "apply a graph reduction method");
  std::string pr_method = "none", pr_in, pr_out, pr_report;
  double pr_u = 0.5, pr_nfrac = 0.2;
  int pr_k = 1, pr_jobs = 1;
  bool pr_wis_batch = false, pr_timing_zero = false;
  prune->add_option("--method", pr_method, "leaf|comp|kcore|wis|none")->required();
  prune->add_option("--u", pr_u, "comp: fraction of components to remove");
  prune->add_option("--k", pr_k, "kcore: minimum degree");
  prune->add_option("--n-frac", pr_nfrac, "wis: fraction of edges to remove");
  prune->add_flag("--wis-batch", pr_wis_batch, "wis: rank once instead of per removal");
  prune->add_option("--jobs", pr_jobs, "worker threads");
  prune->add_flag("--timing-zero", pr_timing_zero, "write 0.000 wall times (reproducible CSV)");
  prune->add_option("--in", pr_in, "input graph file")->required();
  prune->add_option("--out", pr_out, "output graph file")->required();
  prune->add_option("--report", pr_report, "report CSV path");

  // encode
  auto* encode = app.add_subcommand("encode", "406-dim instruction encoding per node");
  std::string en_in, en_out;
  bool en_skip = false, en_sum = false;
  encode->add_option("--in", en_in, "input graph file")->required();
  encode->add_option("--out", en_out, "output graph file")->required();
  encode->add_flag("--skip-bad-nodes", en_skip, "drop undecodable nodes instead of failing");
  encode->add_flag("--sum", en_sum, "aggregate by sum instead of mean");

  // embed-fne
  auto* fne = app.add_subcommand("embed-fne", "function-name embeddings per node");
  std::string fne_in, fne_out, fne_table;
  std::uint64_t fne_seed = 0;
  fne->add_option("--in", fne_in, "input graph file")->required();
  fne->add_option("--table", fne_table, "JSON embedding table");
  fne->add_option("--out", fne_out, "output graph file")->required();
  fne->add_option("--seed", fne_seed, "seed for the hash fallback");

  // train-ae
  auto* tae = app.add_subcommand("train-ae", "train the 406->64 autoencoder on benign graphs");
  std::string tae_in, tae_out = "ae.json";
  int tae_epochs = 50;
  double tae_lr = 1e-3;
  std::size_t tae_batch = 64;
  std::uint64_t tae_seed = 0;
  tae->add_option("--in", tae_in, "benign graph file (instr_bytes or 406-dim features)")
      ->required();
  tae->add_option("--out", tae_out, "checkpoint path");
  tae->add_option("--epochs", tae_epochs, "training epochs");
  tae->add_option("--lr", tae_lr, "learning rate");
  tae->add_option("--batch", tae_batch, "mini-batch size");
  tae->add_option("--seed", tae_seed, "master seed");

  // train
  auto* train = app.add_subcommand("train", "train the GCN classifier");
  std::string tr_in, tr_features = "raw", tr_ae, tr_fne, tr_out = "gcn.json";
  int tr_epochs = 60, tr_jobs = 1;
  double tr_lr = 1e-3, tr_dropout = 0.5;
  std::size_t tr_hidden = 64;
  std::uint64_t tr_seed = 0;
  train->add_option("--in", tr_in, "labeled training graph file")->required();
  train->add_option("--features", tr_features, "raw|ae|fne");
  train->add_option("--ae", tr_ae, "autoencoder checkpoint (features=ae)");
  train->add_option("--fne-table", tr_fne, "embedding table (features=fne)");
  train->add_option("--out", tr_out, "checkpoint path");
  train->add_option("--epochs", tr_epochs, "training epochs");
  train->add_option("--lr", tr_lr, "learning rate");
  train->add_option("--dropout", tr_dropout, "dropout rate");
  train->add_option("--hidden", tr_hidden, "hidden width");
  train->add_option("--seed", tr_seed, "master seed");
  train->add_option("--jobs", tr_jobs, "worker threads for embedding");

  // eval
  auto* eval = app.add_subcommand("eval", "evaluate a trained model");
  std::string ev_model, ev_in, ev_features = "raw", ev_ae, ev_fne, ev_metrics = "metrics.csv";
  std::uint64_t ev_seed = 0;
  int ev_jobs = 1;
  eval->add_option("--model", ev_model, "GCN checkpoint")->required();
  eval->add_option("--in", ev_in, "labeled test graph file")->required();
  eval->add_option("--features", ev_features, "raw|ae|fne");
  eval->add_option("--ae", ev_ae, "autoencoder checkpoint (features=ae)");
  eval->add_option("--fne-table", ev_fne, "embedding table (features=fne)");
  eval->add_option("--metrics", ev_metrics, "metrics CSV path");
  eval->add_option("--seed", ev_seed, "master seed");
  eval->add_option("--jobs", ev_jobs, "worker threads");

  // explain
  auto* expl = app.add_subcommand("explain", "edge-mask explanations and per-p accuracy");
  std::string ex_model, ex_in, ex_features = "raw", ex_ae, ex_fne, ex_out = "explanations";
  double ex_top_p = 0.25, ex_lr = 0.1, ex_lambda = 0.005;
  int ex_epochs = 100, ex_jobs = 1;
  std::uint64_t ex_seed = 0;
  std::vector<double> ex_grid = {0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9, 1.0};
  expl->add_option("--model", ex_model, "GCN checkpoint")->required();
  expl->add_option("--in", ex_in, "graph file")->required();
  expl->add_option("--features", ex_features, "raw|ae|fne");
  expl->add_option("--ae", ex_ae, "autoencoder checkpoint (features=ae)");
  expl->add_option("--fne-table", ex_fne, "embedding table (features=fne)");
  expl->add_option("--top-p", ex_top_p, "fraction of edges kept in the DOT output");
  expl->add_option("--epochs", ex_epochs, "mask training epochs");
  expl->add_option("--lr", ex_lr, "mask learning rate");
  expl->add_option("--sparsity-lambda", ex_lambda, "sparsity penalty weight");
  expl->add_option("--p-grid", ex_grid, "p values for the accuracy curve");
  expl->add_option("--out", ex_out, "output directory");
  expl->add_option("--seed", ex_seed, "master seed");
  expl->add_option("--jobs", ex_jobs, "worker threads");

  // run
  auto* run = app.add_subcommand("run", "full pipeline from a JSON config");
  std::string run_config;
  run->add_option("--config", run_config, "pipeline config JSON")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }

  try {
    if (gen->parsed()) {
      if (payload == "features") spec.payload = SynthPayload::Features;
      else if (payload == "instr") spec.payload = SynthPayload::Instr;
      else if (payload == "names") spec.payload = SynthPayload::Names;
      else throw BadSpec("unknown payload '" + payload + "'");
      return cmd_gen_synth(spec, gen_seed, train_frac, gen_out);
    }
    if (stats->parsed()) return cmd_stats(stats_in, stats_out, stats_dot);
    if (prune->parsed()) {
      return cmd_prune(pr_method, pr_u, pr_k, pr_nfrac, pr_wis_batch, pr_jobs,
                       pr_timing_zero, pr_in, pr_out, pr_report);
    }
    if (encode->parsed()) return cmd_encode(en_in, en_out, en_skip, en_sum);
    if (fne->parsed()) return cmd_embed_fne(fne_in, fne_table, fne_out, fne_seed);
    if (tae->parsed()) {
      return cmd_train_ae(tae_in, tae_out, tae_epochs, tae_lr, tae_batch, tae_seed);
    }
    if (train->parsed()) {
      return cmd_train(tr_in, tr_features, tr_ae, tr_fne, tr_out, tr_epochs, tr_lr,
                       tr_dropout, tr_hidden, tr_seed, tr_jobs);
    }
    if (eval->parsed()) {
      return cmd_eval(ev_model, ev_in, ev_features, ev_ae, ev_fne, ev_metrics, ev_seed,
                      ev_jobs);
    }
    if (expl->parsed()) {
      return cmd_explain(ex_model, ex_in, ex_features, ex_ae, ex_fne, ex_out, ex_top_p,
                         ex_epochs, ex_lr, ex_lambda, ex_grid, ex_seed, ex_jobs);
    }
    if (run->parsed()) return cmd_run(run_config);
  } catch (const NumericError& e) {
    std::cerr << "numeric failure: " << e.what() << "\n";
    return 3;
  } catch (const DataError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 0;
}
