#pragma once

#include <unistd.h>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <optional>
#include <string>
#include <vector>

#include "mdg/graph.hpp"
#include "mdg/rng.hpp"

namespace mdg::test {

// Graph from an edge list; node payloads are single-entry feature stubs
// unless overridden later.
inline AttrGraph make_graph(const std::string& id,
                            const std::vector<std::string>& node_ids,
                            const std::vector<std::pair<std::string, std::string>>& edges,
                            std::optional<int> label = std::nullopt) {
  AttrGraph g;
  g.graph_id = id;
  g.label = label;
  for (const auto& nid : node_ids) {
    NodeRecord n;
    n.id = nid;
    n.payload = FeatureVec(64, 0.0);
    g.nodes.push_back(std::move(n));
  }
  for (const auto& e : edges) g.edges.emplace_back(e.first, e.second);
  return g;
}

// Random simple directed graph (no duplicate edges, self-loops allowed
// with small probability).
inline AttrGraph random_graph(std::mt19937_64& rng, std::size_t max_nodes,
                              double density = 0.08, bool self_loops = true) {
  const auto n = 1 + uniform_index(rng, max_nodes);
  std::vector<std::string> ids;
  for (std::size_t i = 0; i < n; ++i) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "v%03zu", i);
    ids.emplace_back(buf);
  }
  std::vector<std::pair<std::string, std::string>> edges;
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      if (i == j && (!self_loops || uniform(rng) >= density / 4)) continue;
      if (i != j && uniform(rng) >= density) continue;
      edges.emplace_back(ids[i], ids[j]);
    }
  }
  return make_graph("rand", ids, edges);
}

struct TempDir {
  std::filesystem::path path;
  explicit TempDir(const std::string& tag) {
    path = std::filesystem::temp_directory_path() /
           ("mdg_test_" + tag + "_" + std::to_string(::getpid()));
    std::filesystem::remove_all(path);
    std::filesystem::create_directories(path);
  }
  ~TempDir() { std::filesystem::remove_all(path); }
};

inline std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

}  // namespace mdg::test
