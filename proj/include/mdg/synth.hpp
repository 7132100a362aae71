#pragma once

#include <cstdint>
#include <filesystem>
#include <vector>

#include "mdg/graph.hpp"
#include "mdg/graph_io.hpp"

namespace mdg {

struct BadSpec : DataError {
  using DataError::DataError;
};

enum class SynthPayload { Features, Instr, Names };

// Desk-scale corpus. Both classes carry motif_size nodes whose payloads
// alternate between two distinctive marker groups, so the markers alone say
// nothing about the label. Malicious graphs wire those nodes into a clique
// (payload co-occurrence across its edges is the class signal); benign
// graphs leave them mutually unconnected, anchored to two background nodes
// each. Pendant and isolated nodes give the reducers something to remove.
struct SyntheticSpec {
  int n_per_class = 100;
  int nodes_min = 20;
  int nodes_max = 40;
  double edge_density = 0.10;      // extra core edges beyond the spanning tree
  double leaf_fraction = 0.25;     // pendant nodes (degree 1)
  double isolated_fraction = 0.05; // singleton components
  int motif_size = 4;
  double motif_shift = 2.5;        // marker offset on the node features
  int feature_dim = 64;
  SynthPayload payload = SynthPayload::Features;
  bool plant_motif = true;
};

void validate_spec(const SyntheticSpec& spec);

std::vector<AttrGraph> gen_synthetic(const SyntheticSpec& spec, std::uint64_t seed);

// Planted ground truth is recoverable from node ids: motif clique members
// carry an "m" prefix, benign decoys "d", core background nodes "n",
// pendants "p", isolated nodes "i". Ids are never fed to the model.
std::vector<NodeId> motif_nodes(const AttrGraph& g);
std::vector<Edge> motif_edges(const AttrGraph& g);

struct SynthOutput {
  std::filesystem::path graphs_file;
  std::filesystem::path manifest_file;
};

// Writes graphs.jsonl and manifest.json under out_dir.
SynthOutput write_synthetic(const SyntheticSpec& spec, std::uint64_t seed,
                            const std::filesystem::path& out_dir,
                            const SplitSpec& split);

}  // namespace mdg
