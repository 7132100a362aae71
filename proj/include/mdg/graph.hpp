#pragma once

#include <optional>
#include <set>
#include <string>
#include <unordered_map>
#include <utility>
#include <variant>
#include <vector>

#include "mdg/errors.hpp"

namespace mdg {

using NodeId = std::string;
using Edge = std::pair<NodeId, NodeId>;

// One payload variant per node: raw instruction bytes (hex strings, one per
// instruction), a function name, or a pre-computed feature vector.
using InstrBytes = std::vector<std::string>;
using FeatureVec = std::vector<double>;

enum class PayloadKind { InstrBytes, FunctionName, Features };

struct NodeRecord {
  NodeId id;
  std::variant<InstrBytes, std::string, FeatureVec> payload;

  PayloadKind kind() const { return static_cast<PayloadKind>(payload.index()); }
  const InstrBytes& instr_bytes() const { return std::get<InstrBytes>(payload); }
  const std::string& function_name() const { return std::get<std::string>(payload); }
  const FeatureVec& features() const { return std::get<FeatureVec>(payload); }
};

// Feature vectors stored in graph files must have one of these widths:
// 406 (rule-based instruction encoding), 64 (autoencoder code), 384
// (function-name embedding).
inline constexpr int kAllowedFeatureWidths[] = {406, 64, 384};

// Directed attributed graph. Immutable by convention after construction;
// every operation below is a pure function returning a new value.
struct AttrGraph {
  std::string graph_id;
  std::optional<int> label;  // 0 = benign, 1 = malicious
  std::vector<NodeRecord> nodes;
  std::vector<Edge> edges;

  std::size_t node_count() const { return nodes.size(); }
  std::size_t edge_count() const { return edges.size(); }
};

using DegreeTable = std::unordered_map<NodeId, int>;

// Weakly connected components, each listed with its member ids sorted
// lexicographically, ordered by (size ascending, smallest member id).
using ComponentPartition = std::vector<std::vector<NodeId>>;

// Throws InvariantViolation if node ids collide, an edge references a
// missing node, an edge is duplicated, or a feature payload has a width
// outside kAllowedFeatureWidths.
void validate(const AttrGraph& g);

std::unordered_map<NodeId, std::size_t> node_index(const AttrGraph& g);

// Total degree: in-degree + out-degree, a self-loop counts 2.
DegreeTable degrees(const AttrGraph& g);

ComponentPartition components(const AttrGraph& g);

// Subgraph induced by `keep`: node order and payloads preserved, edges
// restricted to those with both endpoints in `keep`. Throws UnknownNode
// if `keep` mentions an id that is not in g.
AttrGraph induced_subgraph(const AttrGraph& g, const std::set<NodeId>& keep);

}  // namespace mdg
