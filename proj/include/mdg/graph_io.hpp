#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "mdg/graph.hpp"

namespace mdg {

// Graph files are JSON lines, one graph per line:
//   {"graph_id": str, "label": 0|1, "nodes": [{"id": str, <payload>}], "edges": [[s, d], ...]}
// where <payload> is exactly one of
//   "instr_bytes": ["90", "B805000000", ...] | "function_name": str | "features": [num, ...]

std::vector<AttrGraph> load_graphs(const std::filesystem::path& path);
void write_graphs(const std::vector<AttrGraph>& graphs, const std::filesystem::path& path);

std::string graph_to_json_line(const AttrGraph& g);
AttrGraph graph_from_json_line(const std::string& line, std::size_t line_no = 1);

// DOT export with node ids as labels, for external rendering.
std::string to_dot(const AttrGraph& g, const std::string& name = "");

struct SplitSpec {
  double train = 0.8;
  double test = 0.2;
  std::uint64_t seed = 0;
};

struct DatasetManifest {
  std::string name;
  std::vector<std::filesystem::path> graph_files;  // resolved against the manifest dir
  SplitSpec split;
};

DatasetManifest load_manifest(const std::filesystem::path& path);
void write_manifest(const DatasetManifest& m, const std::filesystem::path& path);

// All graphs from every file in the manifest, in file order.
std::vector<AttrGraph> load_corpus(const DatasetManifest& m);

struct CorpusSplit {
  std::vector<std::size_t> train;  // indices into the corpus
  std::vector<std::size_t> test;
};

// Deterministic split. Labeled graphs are split per class so both labels
// land in both halves whenever each class has at least two members.
CorpusSplit split_corpus(const std::vector<AttrGraph>& graphs, const SplitSpec& spec);

}  // namespace mdg
