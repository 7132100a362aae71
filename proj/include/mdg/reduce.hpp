#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "mdg/graph.hpp"

namespace mdg {

enum class ReduceMethod { LeafPrune, CompPrune, KCore, Wis, None };

std::string method_name(ReduceMethod m);
ReduceMethod method_from_name(const std::string& name);

struct ReductionConfig {
  ReduceMethod method = ReduceMethod::None;
  double u = 0.5;        // comp_prune: fraction of smallest components removed
  int k = 1;             // kcore threshold
  double n_frac = 0.2;   // wis: fraction of edges removed
  bool wis_batch = false;  // rank once and remove in bulk instead of re-ranking per edge
};

struct ReductionReport {
  std::string graph_id;
  ReduceMethod method = ReduceMethod::None;
  std::string param;  // the consulted parameter value, empty for leaf/none
  std::size_t nodes_before = 0, nodes_after = 0;
  std::size_t edges_before = 0, edges_after = 0;
  std::size_t components_before = 0, components_after = 0;
  double wall_time_s = 0.0;
};

// Single pass: leaves are nodes with degree <= 1 in the *input* graph;
// nodes whose degree drops below 2 as a consequence stay.
std::pair<AttrGraph, ReductionReport> leaf_prune(const AttrGraph& g);

// Drops the floor(u*n) smallest weakly connected components.
std::pair<AttrGraph, ReductionReport> comp_prune(const AttrGraph& g, double u);

// Iterative peeling: remove nodes with current degree < k until fixpoint.
std::pair<AttrGraph, ReductionReport> kcore(const AttrGraph& g, int k);

// Removes round(n_frac*|E|) edges one at a time; each step re-ranks the
// remaining edges by (deg_min asc, deg_max asc, (src, dst) asc) on fresh
// degrees and drops the first. Nodes are kept.
std::pair<AttrGraph, ReductionReport> wis(const AttrGraph& g, double n_frac,
                                          bool batch = false);

std::pair<AttrGraph, ReductionReport> reduce_graph(const AttrGraph& g,
                                                   const ReductionConfig& cfg);

struct CorpusReduction {
  std::vector<AttrGraph> graphs;
  std::vector<ReductionReport> per_graph;
  ReductionReport aggregate;  // graph_id = "TOTAL", counts summed
};

CorpusReduction reduce_corpus(const std::vector<AttrGraph>& graphs,
                              const ReductionConfig& cfg, int jobs = 1);

// CSV columns: graph_id,method,param,nodes_before,nodes_after,edges_before,
// edges_after,comps_before,comps_after,wall_time_s
void write_report_csv(const std::vector<ReductionReport>& rows,
                      const std::filesystem::path& path);

}  // namespace mdg
