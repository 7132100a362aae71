#include "mdg/reduce.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>

#include "mdg/parallel.hpp"

namespace mdg {

std::string method_name(ReduceMethod m) {
  switch (m) {
    case ReduceMethod::LeafPrune: return "leaf";
    case ReduceMethod::CompPrune: return "comp";
    case ReduceMethod::KCore: return "kcore";
    case ReduceMethod::Wis: return "wis";
    case ReduceMethod::None: return "none";
  }
  return "none";
}

ReduceMethod method_from_name(const std::string& name) {
  if (name == "leaf" || name == "leaf_prune") return ReduceMethod::LeafPrune;
  if (name == "comp" || name == "comp_prune") return ReduceMethod::CompPrune;
  if (name == "kcore") return ReduceMethod::KCore;
  if (name == "wis") return ReduceMethod::Wis;
  if (name == "none") return ReduceMethod::None;
  throw DataError("unknown reduction method '" + name + "'");
}

namespace {

using Clock = std::chrono::steady_clock;

ReductionReport make_report(const AttrGraph& before, const AttrGraph& after,
                            ReduceMethod method, std::string param,
                            Clock::time_point start) {
  ReductionReport r;
  r.graph_id = before.graph_id;
  r.method = method;
  r.param = std::move(param);
  r.nodes_before = before.node_count();
  r.nodes_after = after.node_count();
  r.edges_before = before.edge_count();
  r.edges_after = after.edge_count();
  r.components_before = components(before).size();
  r.components_after = components(after).size();
  r.wall_time_s =
      std::chrono::duration<double>(Clock::now() - start).count();
  return r;
}

std::string fmt_param(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%g", v);
  return buf;
}

}  // namespace

std::pair<AttrGraph, ReductionReport> leaf_prune(const AttrGraph& g) {
  const auto start = Clock::now();
  const auto deg = degrees(g);
  std::set<NodeId> keep;
  for (const auto& n : g.nodes) {
    if (deg.at(n.id) >= 2) keep.insert(n.id);
  }
  auto pruned = induced_subgraph(g, keep);
  auto report = make_report(g, pruned, ReduceMethod::LeafPrune, "", start);
  return {std::move(pruned), std::move(report)};
}

std::pair<AttrGraph, ReductionReport> comp_prune(const AttrGraph& g, double u) {
  if (u < 0.0 || u > 1.0) throw DataError("comp_prune: u must be in [0, 1]");
  const auto start = Clock::now();
  const auto parts = components(g);
  const auto n = parts.size();
  const auto removed = static_cast<std::size_t>(
      std::floor(u * static_cast<double>(n)));
  std::set<NodeId> keep;
  for (std::size_t i = removed; i < n; ++i) {
    keep.insert(parts[i].begin(), parts[i].end());
  }
  auto pruned = induced_subgraph(g, keep);
  auto report = make_report(g, pruned, ReduceMethod::CompPrune, fmt_param(u), start);
  return {std::move(pruned), std::move(report)};
}

std::pair<AttrGraph, ReductionReport> kcore(const AttrGraph& g, int k) {
  if (k < 0) throw DataError("kcore: k must be >= 0");
  const auto start = Clock::now();
  auto deg = degrees(g);
  const auto idx = node_index(g);
  std::vector<std::vector<std::size_t>> adj(g.nodes.size());
  for (const auto& [src, dst] : g.edges) {
    adj[idx.at(src)].push_back(idx.at(dst));
    adj[idx.at(dst)].push_back(idx.at(src));  // self-loops appear twice
  }
  std::vector<bool> removed(g.nodes.size(), false);
  std::vector<std::size_t> queue;
  for (std::size_t i = 0; i < g.nodes.size(); ++i) {
    if (deg.at(g.nodes[i].id) < k) queue.push_back(i);
  }
  while (!queue.empty()) {
    const auto v = queue.back();
    queue.pop_back();
    if (removed[v]) continue;
    removed[v] = true;
    for (auto w : adj[v]) {
      if (removed[w]) continue;
      if (--deg.at(g.nodes[w].id) < k) queue.push_back(w);
    }
  }
  std::set<NodeId> keep;
  for (std::size_t i = 0; i < g.nodes.size(); ++i) {
    if (!removed[i]) keep.insert(g.nodes[i].id);
  }
  auto pruned = induced_subgraph(g, keep);
  auto report = make_report(g, pruned, ReduceMethod::KCore, std::to_string(k), start);
  return {std::move(pruned), std::move(report)};
}

namespace {

struct EdgeRank {
  int deg_min;
  int deg_max;
  Edge edge;

  bool operator<(const EdgeRank& other) const {
    if (deg_min != other.deg_min) return deg_min < other.deg_min;
    if (deg_max != other.deg_max) return deg_max < other.deg_max;
    return edge < other.edge;
  }
};

EdgeRank rank_of(const Edge& e, const DegreeTable& deg) {
  const int du = deg.at(e.first);
  const int dv = deg.at(e.second);
  return {std::min(du, dv), std::max(du, dv), e};
}

}  // namespace

std::pair<AttrGraph, ReductionReport> wis(const AttrGraph& g, double n_frac, bool batch) {
  if (n_frac < 0.0 || n_frac > 1.0) throw DataError("wis: n_frac must be in [0, 1]");
  const auto start = Clock::now();
  // Half-up rounding of the removal count.
  const auto to_remove = static_cast<std::size_t>(
      std::floor(n_frac * static_cast<double>(g.edge_count()) + 0.5));
  AttrGraph out = g;
  if (batch) {
    // Rank once on the input degrees and drop the first to_remove edges.
    const auto deg = degrees(out);
    std::vector<EdgeRank> ranked;
    ranked.reserve(out.edges.size());
    for (const auto& e : out.edges) ranked.push_back(rank_of(e, deg));
    std::sort(ranked.begin(), ranked.end());
    std::set<Edge> drop;
    for (std::size_t i = 0; i < to_remove; ++i) drop.insert(ranked[i].edge);
    std::erase_if(out.edges, [&](const Edge& e) { return drop.count(e) > 0; });
  } else {
    for (std::size_t step = 0; step < to_remove; ++step) {
      const auto deg = degrees(out);
      std::size_t best = 0;
      EdgeRank best_rank = rank_of(out.edges[0], deg);
      for (std::size_t i = 1; i < out.edges.size(); ++i) {
        auto r = rank_of(out.edges[i], deg);
        if (r < best_rank) {
          best_rank = r;
          best = i;
        }
      }
      out.edges.erase(out.edges.begin() + static_cast<std::ptrdiff_t>(best));
    }
  }
  auto report = make_report(g, out, ReduceMethod::Wis, fmt_param(n_frac), start);
  return {std::move(out), std::move(report)};
}

std::pair<AttrGraph, ReductionReport> reduce_graph(const AttrGraph& g,
                                                   const ReductionConfig& cfg) {
  switch (cfg.method) {
    case ReduceMethod::LeafPrune: return leaf_prune(g);
    case ReduceMethod::CompPrune: return comp_prune(g, cfg.u);
    case ReduceMethod::KCore: return kcore(g, cfg.k);
    case ReduceMethod::Wis: return wis(g, cfg.n_frac, cfg.wis_batch);
    case ReduceMethod::None: {
      const auto start = Clock::now();
      AttrGraph copy = g;
      auto report = make_report(g, copy, ReduceMethod::None, "", start);
      return {std::move(copy), std::move(report)};
    }
  }
  throw DataError("reduce_graph: invalid method");
}

CorpusReduction reduce_corpus(const std::vector<AttrGraph>& graphs,
                              const ReductionConfig& cfg, int jobs) {
  CorpusReduction out;
  out.graphs.resize(graphs.size());
  out.per_graph.resize(graphs.size());
  parallel_for(graphs.size(), jobs, [&](std::size_t i) {
    try {
      auto [g, report] = reduce_graph(graphs[i], cfg);
      out.graphs[i] = std::move(g);
      out.per_graph[i] = std::move(report);
    } catch (const DataError& e) {
      throw DataError("graph '" + graphs[i].graph_id + "': " + e.what());
    }
  });
  out.aggregate.graph_id = "TOTAL";
  out.aggregate.method = cfg.method;
  if (!out.per_graph.empty()) out.aggregate.param = out.per_graph.front().param;
  for (const auto& r : out.per_graph) {
    out.aggregate.nodes_before += r.nodes_before;
    out.aggregate.nodes_after += r.nodes_after;
    out.aggregate.edges_before += r.edges_before;
    out.aggregate.edges_after += r.edges_after;
    out.aggregate.components_before += r.components_before;
    out.aggregate.components_after += r.components_after;
    out.aggregate.wall_time_s += r.wall_time_s;
  }
  return out;
}

void write_report_csv(const std::vector<ReductionReport>& rows,
                      const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot open output file: " + path.string());
  out << "graph_id,method,param,nodes_before,nodes_after,edges_before,"
         "edges_after,comps_before,comps_after,wall_time_s\n";
  char buf[32];
  for (const auto& r : rows) {
    std::snprintf(buf, sizeof(buf), "%.3f", r.wall_time_s);
    out << r.graph_id << ',' << method_name(r.method) << ',' << r.param << ','
        << r.nodes_before << ',' << r.nodes_after << ',' << r.edges_before << ','
        << r.edges_after << ',' << r.components_before << ',' << r.components_after
        << ',' << buf << '\n';
  }
}

}  // namespace mdg
