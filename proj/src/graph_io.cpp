#include "mdg/graph_io.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

#include "json.hpp"
#include "mdg/rng.hpp"

namespace mdg {

using nlohmann::json;

AttrGraph graph_from_json_line(const std::string& line, std::size_t line_no) {
  json j;
  try {
    j = json::parse(line);
  } catch (const json::exception& e) {
    throw ParseError(line_no, e.what());
  }
  if (!j.is_object()) throw ParseError(line_no, "expected a JSON object");
  AttrGraph g;
  try {
    g.graph_id = j.at("graph_id").get<std::string>();
    if (j.contains("label")) {
      const auto v = j.at("label").get<int>();
      if (v != 0 && v != 1) throw ParseError(line_no, "label must be 0 or 1");
      g.label = v;
    }
    for (const auto& jn : j.at("nodes")) {
      NodeRecord n;
      n.id = jn.at("id").get<std::string>();
      const int present = jn.contains("instr_bytes") + jn.contains("function_name") +
                          jn.contains("features");
      if (present != 1) {
        throw InvariantViolation(g.graph_id, "node '" + n.id +
                                                 "': exactly one payload field required");
      }
      if (jn.contains("instr_bytes")) {
        n.payload = jn.at("instr_bytes").get<InstrBytes>();
      } else if (jn.contains("function_name")) {
        n.payload = jn.at("function_name").get<std::string>();
      } else {
        n.payload = jn.at("features").get<FeatureVec>();
      }
      g.nodes.push_back(std::move(n));
    }
    for (const auto& je : j.at("edges")) {
      if (!je.is_array() || je.size() != 2) {
        throw ParseError(line_no, "edge must be a [src, dst] pair");
      }
      g.edges.emplace_back(je.at(0).get<std::string>(), je.at(1).get<std::string>());
    }
  } catch (const json::exception& e) {
    throw ParseError(line_no, e.what());
  }
  validate(g);
  return g;
}

std::string graph_to_json_line(const AttrGraph& g) {
  json j;
  j["graph_id"] = g.graph_id;
  if (g.label) j["label"] = *g.label;
  j["nodes"] = json::array();
  for (const auto& n : g.nodes) {
    json jn;
    jn["id"] = n.id;
    switch (n.kind()) {
      case PayloadKind::InstrBytes:
        jn["instr_bytes"] = n.instr_bytes();
        break;
      case PayloadKind::FunctionName:
        jn["function_name"] = n.function_name();
        break;
      case PayloadKind::Features:
        jn["features"] = n.features();
        break;
    }
    j["nodes"].push_back(std::move(jn));
  }
  j["edges"] = json::array();
  for (const auto& [src, dst] : g.edges) {
    j["edges"].push_back(json::array({src, dst}));
  }
  return j.dump();
}

std::vector<AttrGraph> load_graphs(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open graph file: " + path.string());
  std::vector<AttrGraph> graphs;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    graphs.push_back(graph_from_json_line(line, line_no));
  }
  return graphs;
}

void write_graphs(const std::vector<AttrGraph>& graphs, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot open output file: " + path.string());
  for (const auto& g : graphs) {
    out << graph_to_json_line(g) << '\n';
  }
}

static std::string dot_escape(const std::string& s) {
  std::string out;
  out.reserve(s.size());
  for (char c : s) {
    if (c == '"' || c == '\\') out.push_back('\\');
    out.push_back(c);
  }
  return out;
}

std::string to_dot(const AttrGraph& g, const std::string& name) {
  std::ostringstream out;
  out << "digraph \"" << dot_escape(name.empty() ? g.graph_id : name) << "\" {\n";
  for (const auto& n : g.nodes) {
    out << "  \"" << dot_escape(n.id) << "\";\n";
  }
  for (const auto& [src, dst] : g.edges) {
    out << "  \"" << dot_escape(src) << "\" -> \"" << dot_escape(dst) << "\";\n";
  }
  out << "}\n";
  return out.str();
}

DatasetManifest load_manifest(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open manifest: " + path.string());
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw DataError("manifest " + path.string() + ": " + e.what());
  }
  DatasetManifest m;
  try {
    m.name = j.at("name").get<std::string>();
    const auto base = path.parent_path();
    for (const auto& p : j.at("graphs")) {
      std::filesystem::path gp = p.get<std::string>();
      m.graph_files.push_back(gp.is_absolute() ? gp : base / gp);
    }
    const auto& s = j.at("split");
    m.split.train = s.at("train").get<double>();
    m.split.test = s.at("test").get<double>();
    m.split.seed = s.at("seed").get<std::uint64_t>();
  } catch (const json::exception& e) {
    throw DataError("manifest " + path.string() + ": " + e.what());
  }
  if (m.split.train < 0 || m.split.test < 0 ||
      m.split.train + m.split.test > 1.0 + 1e-9) {
    throw DataError("manifest " + path.string() + ": split fractions out of range");
  }
  return m;
}

void write_manifest(const DatasetManifest& m, const std::filesystem::path& path) {
  json j;
  j["name"] = m.name;
  j["graphs"] = json::array();
  const auto base = path.parent_path();
  for (const auto& gp : m.graph_files) {
    j["graphs"].push_back(gp.lexically_proximate(base).generic_string());
  }
  j["split"] = {{"train", m.split.train}, {"test", m.split.test}, {"seed", m.split.seed}};
  std::ofstream out(path);
  if (!out) throw DataError("cannot open output file: " + path.string());
  out << j.dump(2) << '\n';
}

std::vector<AttrGraph> load_corpus(const DatasetManifest& m) {
  std::vector<AttrGraph> all;
  for (const auto& f : m.graph_files) {
    auto part = load_graphs(f);
    std::move(part.begin(), part.end(), std::back_inserter(all));
  }
  return all;
}

CorpusSplit split_corpus(const std::vector<AttrGraph>& graphs, const SplitSpec& spec) {
  // Bucket indices by label (unlabeled graphs form their own bucket),
  // shuffle each bucket, and take the train fraction from the front.
  std::vector<std::size_t> buckets[3];  // benign, malicious, unlabeled
  for (std::size_t i = 0; i < graphs.size(); ++i) {
    buckets[graphs[i].label ? *graphs[i].label : 2].push_back(i);
  }
  CorpusSplit split;
  auto rng = make_rng(spec.seed, "split");
  for (auto& bucket : buckets) {
    shuffle_vec(bucket, rng);
    const auto n_train =
        static_cast<std::size_t>(std::llround(spec.train * static_cast<double>(bucket.size())));
    auto n_test =
        static_cast<std::size_t>(std::llround(spec.test * static_cast<double>(bucket.size())));
    n_test = std::min(n_test, bucket.size() - std::min(n_train, bucket.size()));
    // fractions may sum below 1; the remainder is held out
    for (std::size_t i = 0; i < bucket.size(); ++i) {
      if (i < n_train) split.train.push_back(bucket[i]);
      else if (i < n_train + n_test) split.test.push_back(bucket[i]);
    }
  }
  std::sort(split.train.begin(), split.train.end());
  std::sort(split.test.begin(), split.test.end());
  return split;
}

}  // namespace mdg
