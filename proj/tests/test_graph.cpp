#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <set>

#include "helpers.hpp"
#include "mdg/graph.hpp"
#include "mdg/graph_io.hpp"

using namespace mdg;
using mdg::test::make_graph;
using mdg::test::random_graph;
using mdg::test::TempDir;

TEST_CASE("load: minimal one-node graph") {
  const auto g = graph_from_json_line(
      R"({"graph_id":"g1","nodes":[{"id":"a","function_name":"main"}],"edges":[]})");
  CHECK(g.graph_id == "g1");
  CHECK(g.node_count() == 1);
  CHECK(g.edge_count() == 0);
  CHECK_FALSE(g.label.has_value());
  CHECK(g.nodes[0].kind() == PayloadKind::FunctionName);
}

TEST_CASE("load: edge referencing a missing node") {
  CHECK_THROWS_AS(graph_from_json_line(
                      R"({"graph_id":"g","nodes":[{"id":"a","features":[1,2]}],)"
                      R"("edges":[["a","zz"]]})"),
                  InvariantViolation);
}

TEST_CASE("load: bad feature width rejected") {
  // width 2 is not one of 406/64/384
  CHECK_THROWS_AS(graph_from_json_line(
                      R"({"graph_id":"g","nodes":[{"id":"a","features":[1,2]},)"
                      R"({"id":"b","features":[1,2]}],"edges":[["a","b"]]})"),
                  InvariantViolation);
}

TEST_CASE("load: duplicate edges rejected, self-loops accepted") {
  CHECK_THROWS_AS(graph_from_json_line(
                      R"({"graph_id":"g","nodes":[{"id":"a","function_name":"f"},)"
                      R"({"id":"b","function_name":"g"}],)"
                      R"("edges":[["a","b"],["a","b"]]})"),
                  InvariantViolation);
  const auto g = graph_from_json_line(
      R"({"graph_id":"g","nodes":[{"id":"a","function_name":"f"}],"edges":[["a","a"]]})");
  CHECK(g.edge_count() == 1);
}

TEST_CASE("load: multiple payloads rejected") {
  CHECK_THROWS_AS(graph_from_json_line(
                      R"({"graph_id":"g","nodes":[{"id":"a","function_name":"f",)"
                      R"("features":[1]}],"edges":[]})"),
                  InvariantViolation);
}

TEST_CASE("load: malformed json is a parse error with line number") {
  try {
    graph_from_json_line("{nope", 7);
    FAIL("expected ParseError");
  } catch (const ParseError& e) {
    CHECK(e.line == 7);
  }
}

TEST_CASE("load_graphs: three-line fixture in file order") {
  TempDir dir("load3");
  const auto file = dir.path / "g.jsonl";
  {
    std::ofstream out(file);
    out << R"({"graph_id":"first","nodes":[{"id":"a","function_name":"f"}],"edges":[]})"
        << "\n";
    out << R"({"graph_id":"second","label":1,"nodes":[{"id":"a","function_name":"f"},)"
        << R"({"id":"b","function_name":"g"}],"edges":[["a","b"]]})" << "\n";
    out << R"({"graph_id":"third","label":0,"nodes":[{"id":"x","instr_bytes":["90"]}],)"
        << R"("edges":[]})" << "\n";
  }
  const auto graphs = load_graphs(file);
  REQUIRE(graphs.size() == 3);
  CHECK(graphs[0].graph_id == "first");
  CHECK(graphs[1].graph_id == "second");
  CHECK(graphs[2].graph_id == "third");
  CHECK(graphs[1].label == 1);
  CHECK(graphs[2].nodes[0].kind() == PayloadKind::InstrBytes);
}

TEST_CASE("degrees: path, self-loop, star") {
  const auto path = make_graph("p", {"a", "b", "c"}, {{"a", "b"}, {"b", "c"}});
  auto d = degrees(path);
  CHECK(d["a"] == 1);
  CHECK(d["b"] == 2);
  CHECK(d["c"] == 1);

  const auto loop = make_graph("l", {"a"}, {{"a", "a"}});
  CHECK(degrees(loop)["a"] == 2);

  const auto star = make_graph("s", {"center", "l1", "l2", "l3"},
                               {{"center", "l1"}, {"center", "l2"}, {"center", "l3"}});
  d = degrees(star);
  CHECK(d["center"] == 3);
  CHECK(d["l1"] == 1);
  CHECK(d["l2"] == 1);
  CHECK(d["l3"] == 1);
}

TEST_CASE("components: disjoint edges, triangle, sort contract") {
  const auto two = make_graph("t", {"a", "b", "c", "d"}, {{"a", "b"}, {"c", "d"}});
  auto parts = components(two);
  REQUIRE(parts.size() == 2);
  CHECK(parts[0].size() == 2);
  CHECK(parts[1].size() == 2);
  CHECK(parts[0].front() == "a");  // tie broken by smallest member id

  const auto tri = make_graph("tri", {"a", "b", "c"},
                              {{"a", "b"}, {"b", "c"}, {"c", "a"}});
  CHECK(components(tri).size() == 1);

  // sizes {4,1,2} in input order come out as [1,2,4]
  const auto mixed = make_graph(
      "m", {"a", "b", "c", "d", "x", "y", "z"},
      {{"a", "b"}, {"b", "c"}, {"c", "d"}, {"d", "a"}, {"y", "z"}});
  parts = components(mixed);
  REQUIRE(parts.size() == 3);
  CHECK(parts[0].size() == 1);
  CHECK(parts[1].size() == 2);
  CHECK(parts[2].size() == 4);
}

TEST_CASE("induced_subgraph: identity, empty, triangle restriction") {
  const auto tri = make_graph("tri", {"a", "b", "c"},
                              {{"a", "b"}, {"b", "c"}, {"c", "a"}});
  const auto same = induced_subgraph(tri, {"a", "b", "c"});
  CHECK(same.node_count() == 3);
  CHECK(same.edge_count() == 3);

  const auto empty = induced_subgraph(tri, {});
  CHECK(empty.node_count() == 0);
  CHECK(empty.edge_count() == 0);

  const auto ab = induced_subgraph(tri, {"a", "b"});
  CHECK(ab.node_count() == 2);
  REQUIRE(ab.edge_count() == 1);
  CHECK(ab.edges[0] == Edge{"a", "b"});

  CHECK_THROWS_AS(induced_subgraph(tri, {"a", "nope"}), UnknownNode);
}

TEST_CASE("property: sum of degrees equals 2|E|") {
  auto rng = make_rng(41, "graph-prop");
  for (int trial = 0; trial < 50; ++trial) {
    const auto g = random_graph(rng, 40, 0.1);
    const auto d = degrees(g);
    long total = 0;
    for (const auto& [id, deg] : d) total += deg;
    CHECK(total == 2 * static_cast<long>(g.edge_count()));
  }
}

TEST_CASE("property: components form a partition of V") {
  auto rng = make_rng(42, "graph-prop");
  for (int trial = 0; trial < 50; ++trial) {
    const auto g = random_graph(rng, 40, 0.05);
    const auto parts = components(g);
    std::set<NodeId> seen;
    std::size_t total = 0;
    for (const auto& comp : parts) {
      total += comp.size();
      for (const auto& id : comp) CHECK(seen.insert(id).second);
    }
    CHECK(total == g.node_count());
    for (std::size_t i = 1; i < parts.size(); ++i) {
      CHECK(parts[i - 1].size() <= parts[i].size());
    }
  }
}

TEST_CASE("property: components are stable under recomputation") {
  auto rng = make_rng(45, "graph-idem");
  for (int trial = 0; trial < 20; ++trial) {
    const auto g = random_graph(rng, 30, 0.06);
    const auto once = components(g);
    // merging the partition back into a node set and recomputing changes nothing
    std::set<NodeId> merged;
    for (const auto& comp : once) merged.insert(comp.begin(), comp.end());
    const auto again = components(induced_subgraph(g, merged));
    CHECK(once == again);
  }
}

TEST_CASE("property: induced subgraph never invents edges") {
  auto rng = make_rng(43, "graph-prop");
  for (int trial = 0; trial < 30; ++trial) {
    const auto g = random_graph(rng, 30, 0.1);
    std::set<NodeId> keep;
    for (const auto& n : g.nodes) {
      if (uniform(rng) < 0.5) keep.insert(n.id);
    }
    const auto sub = induced_subgraph(g, keep);
    const std::set<Edge> orig(g.edges.begin(), g.edges.end());
    for (const auto& e : sub.edges) {
      CHECK(orig.count(e) == 1);
      CHECK(keep.count(e.first) == 1);
      CHECK(keep.count(e.second) == 1);
    }
  }
}

TEST_CASE("serialization round-trip preserves graphs exactly") {
  auto rng = make_rng(44, "graph-roundtrip");
  TempDir dir("roundtrip");
  std::vector<AttrGraph> graphs;
  for (int i = 0; i < 10; ++i) {
    auto g = random_graph(rng, 20, 0.1);
    g.graph_id = "g" + std::to_string(i);
    g.label = i % 2;
    // exercise all payload kinds with awkward floats
    for (std::size_t k = 0; k < g.nodes.size(); ++k) {
      if (k % 3 == 0) g.nodes[k].payload = InstrBytes{"90", "B805000000"};
      else if (k % 3 == 1) g.nodes[k].payload = std::string("fn_\"quoted\"");
      else {
        FeatureVec f(64);
        for (auto& x : f) x = uniform(rng, -1e3, 1e3) / 3.0;
        g.nodes[k].payload = f;
      }
    }
    graphs.push_back(std::move(g));
  }
  const auto file = dir.path / "rt.jsonl";
  write_graphs(graphs, file);
  const auto loaded = load_graphs(file);
  REQUIRE(loaded.size() == graphs.size());
  for (std::size_t i = 0; i < graphs.size(); ++i) {
    CHECK(loaded[i].graph_id == graphs[i].graph_id);
    CHECK(loaded[i].label == graphs[i].label);
    REQUIRE(loaded[i].node_count() == graphs[i].node_count());
    for (std::size_t k = 0; k < graphs[i].nodes.size(); ++k) {
      CHECK(loaded[i].nodes[k].id == graphs[i].nodes[k].id);
      CHECK(loaded[i].nodes[k].payload == graphs[i].nodes[k].payload);
    }
    CHECK(loaded[i].edges == graphs[i].edges);
  }
  // writing the loaded corpus again is byte-identical
  const auto file2 = dir.path / "rt2.jsonl";
  write_graphs(loaded, file2);
  CHECK(mdg::test::slurp(file) == mdg::test::slurp(file2));
}

TEST_CASE("dot export quotes ids and lists isolated nodes") {
  const auto g = make_graph("d\"ot", {"a b", "c"}, {{"a b", "c"}});
  const auto dot = to_dot(g);
  CHECK(dot.find("digraph \"d\\\"ot\"") != std::string::npos);
  CHECK(dot.find("\"a b\" -> \"c\"") != std::string::npos);
}

TEST_CASE("manifest round-trip and corpus loading") {
  TempDir dir("manifest");
  const auto gfile = dir.path / "corpus.jsonl";
  {
    std::ofstream out(gfile);
    out << R"({"graph_id":"a","label":0,"nodes":[{"id":"n","function_name":"f"}],"edges":[]})"
        << "\n";
    out << R"({"graph_id":"b","label":1,"nodes":[{"id":"n","function_name":"f"}],"edges":[]})"
        << "\n";
  }
  DatasetManifest m;
  m.name = "tiny";
  m.graph_files = {gfile};
  m.split = {0.5, 0.5, 7};
  const auto mfile = dir.path / "manifest.json";
  write_manifest(m, mfile);
  const auto loaded = load_manifest(mfile);
  CHECK(loaded.name == "tiny");
  REQUIRE(loaded.graph_files.size() == 1);
  const auto corpus = load_corpus(loaded);
  CHECK(corpus.size() == 2);
}

TEST_CASE("split_corpus is deterministic and stratified") {
  std::vector<AttrGraph> graphs;
  for (int i = 0; i < 20; ++i) {
    auto g = make_graph("g" + std::to_string(i), {"n"}, {});
    g.label = i % 2;
    graphs.push_back(std::move(g));
  }
  SplitSpec spec{0.8, 0.2, 123};
  const auto s1 = split_corpus(graphs, spec);
  const auto s2 = split_corpus(graphs, spec);
  CHECK(s1.train == s2.train);
  CHECK(s1.test == s2.test);
  CHECK(s1.train.size() == 16);
  CHECK(s1.test.size() == 4);
  int train_pos = 0, test_pos = 0;
  for (auto i : s1.train) train_pos += *graphs[i].label;
  for (auto i : s1.test) test_pos += *graphs[i].label;
  CHECK(train_pos == 8);
  CHECK(test_pos == 2);

  // fractions below 1 hold out the remainder
  const auto holdout = split_corpus(graphs, {0.5, 0.25, 9});
  CHECK(holdout.train.size() == 10);
  CHECK(holdout.test.size() == 6);  // llround(0.25 * 10) = 3 per class
  CHECK(holdout.train.size() + holdout.test.size() < graphs.size());
}
