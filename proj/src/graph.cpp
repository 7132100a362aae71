#include "mdg/graph.hpp"

#include <algorithm>
#include <queue>

namespace mdg {

std::unordered_map<NodeId, std::size_t> node_index(const AttrGraph& g) {
  std::unordered_map<NodeId, std::size_t> idx;
  idx.reserve(g.nodes.size());
  for (std::size_t i = 0; i < g.nodes.size(); ++i) {
    idx.emplace(g.nodes[i].id, i);
  }
  return idx;
}

void validate(const AttrGraph& g) {
  std::unordered_map<NodeId, std::size_t> idx;
  idx.reserve(g.nodes.size());
  for (std::size_t i = 0; i < g.nodes.size(); ++i) {
    auto [it, inserted] = idx.emplace(g.nodes[i].id, i);
    if (!inserted) {
      throw InvariantViolation(g.graph_id, "duplicate node id '" + g.nodes[i].id + "'");
    }
    if (g.nodes[i].kind() == PayloadKind::Features) {
      const auto w = static_cast<int>(g.nodes[i].features().size());
      if (std::find(std::begin(kAllowedFeatureWidths), std::end(kAllowedFeatureWidths), w) ==
          std::end(kAllowedFeatureWidths)) {
        throw InvariantViolation(g.graph_id, "node '" + g.nodes[i].id +
                                                 "': feature width " + std::to_string(w) +
                                                 " not in {406, 64, 384}");
      }
    }
  }
  std::set<Edge> seen;
  for (const auto& [src, dst] : g.edges) {
    if (!idx.count(src)) {
      throw InvariantViolation(g.graph_id, "edge references unknown node '" + src + "'");
    }
    if (!idx.count(dst)) {
      throw InvariantViolation(g.graph_id, "edge references unknown node '" + dst + "'");
    }
    if (!seen.emplace(src, dst).second) {
      throw InvariantViolation(g.graph_id, "duplicate edge (" + src + ", " + dst + ")");
    }
  }
  if (g.label && *g.label != 0 && *g.label != 1) {
    throw InvariantViolation(g.graph_id, "label must be 0 or 1");
  }
}

DegreeTable degrees(const AttrGraph& g) {
  DegreeTable table;
  table.reserve(g.nodes.size());
  for (const auto& n : g.nodes) {
    table[n.id] = 0;
  }
  for (const auto& [src, dst] : g.edges) {
    ++table[src];
    ++table[dst];  // self-loop hits the same entry twice, contributing 2
  }
  return table;
}

ComponentPartition components(const AttrGraph& g) {
  const auto idx = node_index(g);
  const std::size_t n = g.nodes.size();
  // Undirected adjacency: edge direction is ignored for connectivity.
  std::vector<std::vector<std::size_t>> adj(n);
  for (const auto& [src, dst] : g.edges) {
    const auto a = idx.at(src);
    const auto b = idx.at(dst);
    adj[a].push_back(b);
    if (a != b) adj[b].push_back(a);
  }
  ComponentPartition parts;
  std::vector<bool> visited(n, false);
  for (std::size_t start = 0; start < n; ++start) {
    if (visited[start]) continue;
    std::vector<NodeId> comp;
    std::queue<std::size_t> frontier;
    frontier.push(start);
    visited[start] = true;
    while (!frontier.empty()) {
      const auto v = frontier.front();
      frontier.pop();
      comp.push_back(g.nodes[v].id);
      for (auto w : adj[v]) {
        if (!visited[w]) {
          visited[w] = true;
          frontier.push(w);
        }
      }
    }
    std::sort(comp.begin(), comp.end());
    parts.push_back(std::move(comp));
  }
  // Ascending by size; ties broken by smallest member id for determinism.
  std::sort(parts.begin(), parts.end(), [](const auto& a, const auto& b) {
    if (a.size() != b.size()) return a.size() < b.size();
    return a.front() < b.front();
  });
  return parts;
}

AttrGraph induced_subgraph(const AttrGraph& g, const std::set<NodeId>& keep) {
  const auto idx = node_index(g);
  for (const auto& id : keep) {
    if (!idx.count(id)) {
      throw UnknownNode("keep set references unknown node '" + id + "'");
    }
  }
  AttrGraph out;
  out.graph_id = g.graph_id;
  out.label = g.label;
  for (const auto& n : g.nodes) {
    if (keep.count(n.id)) out.nodes.push_back(n);
  }
  for (const auto& e : g.edges) {
    if (keep.count(e.first) && keep.count(e.second)) out.edges.push_back(e);
  }
  return out;
}

}  // namespace mdg
