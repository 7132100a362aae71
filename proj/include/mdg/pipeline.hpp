#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "mdg/autoencoder.hpp"
#include "mdg/explain.hpp"
#include "mdg/fne.hpp"
#include "mdg/gcn.hpp"
#include "mdg/graph_io.hpp"
#include "mdg/metrics.hpp"
#include "mdg/reduce.hpp"
#include "mdg/x86.hpp"

namespace mdg {

enum class Embedding { Raw, Ae, Fne };

std::string embedding_name(Embedding e);
Embedding embedding_from_name(const std::string& name);

// Feature rows aligned with g.nodes.
//   Raw: feature payloads used as-is.
//   Ae : instruction payloads (or stored 406 vectors) encoded and compressed
//        through the trained autoencoder to 64 dims.
//   Fne: function-name payloads looked up in the table (or 384 vectors
//        passed through); missing names fall back deterministically.
Mat features_for_graph(const AttrGraph& g, Embedding mode,
                       const AutoencoderModel* ae, const FneTable* fne,
                       std::uint64_t fne_seed);

struct PipelineConfig {
  std::filesystem::path input;              // JSONL graph file or manifest
  bool input_is_manifest = false;
  std::filesystem::path out_dir = "out";
  ReductionConfig reduction;
  Embedding embedding = Embedding::Raw;
  std::filesystem::path fne_table;          // optional, Fne only
  AeConfig ae;                              // Ae only
  GcnConfig gcn;                            // in_dim resolved per embedding
  bool explain_enabled = true;
  ExplainConfig explain;
  std::vector<double> p_grid = {0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9, 1.0};
  SplitSpec split;                          // used when input is a flat file
  std::uint64_t seed = 0;
  int jobs = 1;
  bool timing_zero = false;                 // report 0.000 wall times in CSVs
};

PipelineConfig load_pipeline_config(const std::filesystem::path& path);

struct StageTime {
  std::string stage;
  double seconds = 0.0;
};

struct RunReport {
  Metrics metrics;
  ReductionReport reduction_total;
  std::optional<ExplainerAccuracy> explainer;
  std::vector<StageTime> stage_times;
  std::size_t graphs_loaded = 0;
  std::size_t graphs_dropped_empty = 0;  // emptied by reduction
  std::filesystem::path metrics_csv, reduction_csv, explain_csv, run_manifest;
};

// prune -> embed -> train -> eval -> (optional) explain. Artifacts land in
// cfg.out_dir; the run manifest records every resolved parameter.
RunReport run_pipeline(const PipelineConfig& cfg);

// Per-graph node/edge/component counts plus a TOTAL row.
void write_stats_csv(const std::vector<AttrGraph>& graphs,
                     const std::filesystem::path& path);

}  // namespace mdg
