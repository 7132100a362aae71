#include "mdg/synth.hpp"

#include <algorithm>
#include <cstdio>
#include <set>

#include "mdg/rng.hpp"

namespace mdg {

void validate_spec(const SyntheticSpec& spec) {
  if (spec.n_per_class <= 0) throw BadSpec("n_per_class must be positive");
  if (spec.nodes_min < 1 || spec.nodes_max < spec.nodes_min) {
    throw BadSpec("node count range invalid");
  }
  if (spec.edge_density < 0.0 || spec.edge_density > 1.0) {
    throw BadSpec("edge_density must be in [0, 1]");
  }
  if (spec.leaf_fraction < 0.0 || spec.isolated_fraction < 0.0 ||
      spec.leaf_fraction + spec.isolated_fraction > 0.9) {
    throw BadSpec("leaf/isolated fractions out of range");
  }
  if (spec.motif_size < 2) throw BadSpec("motif_size must be >= 2");
  if (spec.payload == SynthPayload::Features && spec.feature_dim != 406 &&
      spec.feature_dim != 64 && spec.feature_dim != 384) {
    throw BadSpec("feature_dim must be one of 406, 64, 384");
  }
  if (spec.payload == SynthPayload::Features && spec.feature_dim < 32) {
    throw BadSpec("feature_dim too small for the marker groups");
  }
  const int worst_core =
      spec.nodes_min -
      static_cast<int>(std::floor(spec.leaf_fraction * spec.nodes_min + 0.5)) -
      static_cast<int>(std::floor(spec.isolated_fraction * spec.nodes_min + 0.5));
  if (spec.plant_motif && worst_core < spec.motif_size + 2) {
    throw BadSpec("nodes_min too small to host the motif after leaf/isolated nodes");
  }
  if (worst_core < 2) throw BadSpec("core would be smaller than 2 nodes");
}

namespace {

std::string padded_id(char prefix, std::size_t i) {
  char buf[24];
  std::snprintf(buf, sizeof(buf), "%c%04zu", prefix, i);
  return buf;
}

const std::vector<std::string>& background_instrs() {
  // Frequent compiler output: moves, stack traffic, tests, short jumps.
  static const std::vector<std::string> pool = {
      "90",          // nop
      "55",          // push rbp
      "5D",          // pop rbp
      "C3",          // ret
      "4889E5",      // mov rbp, rsp
      "8B45FC",      // mov eax, [rbp-4]
      "8945FC",      // mov [rbp-4], eax
      "83C001",      // add eax, 1
      "83E801",      // sub eax, 1
      "85C0",        // test eax, eax
      "39D0",        // cmp eax, edx
      "7405",        // je +5
      "75F6",        // jne -10
      "B800000000",  // mov eax, 0
      "E8C0FFFFFF",  // call rel32
      "EB0C",        // jmp +12
      "50",          // push rax
      "58",          // pop rax
      "8D4510",      // lea eax, [rbp+16]
  };
  return pool;
}

// Marked nodes carry one of two unusual instruction mixes; the malicious
// signal is those mixes meeting across clique edges, not the mixes alone.
const std::vector<std::string>& marker_instrs_a() {
  static const std::vector<std::string> pool = {
      "F0830001",  // lock add dword [rax], 1
      "F0310B",    // lock xor [rbx], ecx
      "CC",        // int3
  };
  return pool;
}

const std::vector<std::string>& marker_instrs_b() {
  static const std::vector<std::string> pool = {
      "648B04251C000000",  // mov eax, fs:[0x1c]
      "6531C0",            // xor eax, eax (gs override)
      "678B03",            // mov eax, [ebx] (32-bit addressing)
  };
  return pool;
}

const std::vector<std::string>& background_names() {
  static const std::vector<std::string> pool = {
      "init", "main_loop", "parse_input", "alloc_buffer", "format_output",
      "read_config", "update_state", "dispatch", "cleanup", "log_message",
  };
  return pool;
}

const std::vector<std::string>& marker_names_a() {
  static const std::vector<std::string> pool = {"decrypt_blob", "hook_import",
                                                "patch_entry"};
  return pool;
}

const std::vector<std::string>& marker_names_b() {
  static const std::vector<std::string> pool = {"spawn_payload", "beacon_c2",
                                                "enum_process"};
  return pool;
}

}  // namespace

std::vector<AttrGraph> gen_synthetic(const SyntheticSpec& spec, std::uint64_t seed) {
  validate_spec(spec);
  std::vector<AttrGraph> graphs;
  const int total = 2 * spec.n_per_class;
  graphs.reserve(static_cast<std::size_t>(total));

  for (int gi = 0; gi < total; ++gi) {
    const int label = gi < spec.n_per_class ? 0 : 1;
    auto rng = make_rng(seed, "gen-synth", static_cast<std::uint64_t>(gi));

    AttrGraph g;
    char idbuf[32];
    std::snprintf(idbuf, sizeof(idbuf), "%s_%04d", label == 1 ? "mal" : "ben",
                  label == 1 ? gi - spec.n_per_class : gi);
    g.graph_id = idbuf;
    g.label = label;

    const int span = spec.nodes_max - spec.nodes_min + 1;
    const int n_total =
        spec.nodes_min + static_cast<int>(uniform_index(rng, static_cast<std::uint64_t>(span)));
    int n_isolated =
        static_cast<int>(std::floor(spec.isolated_fraction * n_total + 0.5));
    int n_leaf = static_cast<int>(std::floor(spec.leaf_fraction * n_total + 0.5));
    int n_core = n_total - n_isolated - n_leaf;
    const int n_marked = spec.plant_motif ? spec.motif_size : 0;
    // Rounding may squeeze the core; reclaim from leaves, then isolated.
    const int core_floor = std::max(2, n_marked + 2);
    while (n_core < core_floor && n_leaf > 0) { --n_leaf; ++n_core; }
    while (n_core < core_floor && n_isolated > 0) { --n_isolated; ++n_core; }
    const int n_plain = n_core - n_marked;

    // Both classes carry the same marked nodes; only the malicious class
    // wires them into a clique. 'm' = motif (clique member), 'd' = decoy.
    std::vector<std::string> marked_ids;
    for (int i = 0; i < n_marked; ++i) {
      marked_ids.push_back(padded_id(label == 1 ? 'm' : 'd', i));
    }
    std::vector<std::string> plain_ids;
    for (int i = 0; i < n_plain; ++i) plain_ids.push_back(padded_id('n', i));

    std::set<Edge> edge_set;
    auto add_edge = [&](const std::string& a, const std::string& b) {
      edge_set.emplace(a, b);
    };
    auto add_random_dir = [&](const std::string& a, const std::string& b) {
      if (uniform(rng) < 0.5) add_edge(a, b);
      else add_edge(b, a);
    };

    // Random spanning tree over the plain core, then extra density edges.
    for (int i = 1; i < n_plain; ++i) {
      const auto j = static_cast<int>(uniform_index(rng, static_cast<std::uint64_t>(i)));
      add_random_dir(plain_ids[j], plain_ids[i]);
    }
    for (int i = 0; i < n_plain; ++i) {
      for (int j = i + 1; j < n_plain; ++j) {
        if (uniform(rng) < spec.edge_density) add_random_dir(plain_ids[i], plain_ids[j]);
      }
    }

    if (label == 1) {
      // Full bidirectional clique plus one anchor edge per motif node.
      for (int i = 0; i < n_marked; ++i) {
        for (int j = 0; j < n_marked; ++j) {
          if (i != j) add_edge(marked_ids[i], marked_ids[j]);
        }
        add_random_dir(marked_ids[i],
                       plain_ids[uniform_index(rng, static_cast<std::uint64_t>(n_plain))]);
      }
    } else {
      // Decoys stay mutually unconnected. Two anchors each (so leaf pruning
      // keeps them), drawn round-robin from a shuffled plain list; decoys of
      // opposite marker groups never share an anchor unless the plain core
      // is tiny.
      std::vector<std::string> anchors = plain_ids;
      shuffle_vec(anchors, rng);
      std::size_t slot = 0;
      for (int i = 0; i < n_marked; ++i) {
        for (int a = 0; a < 2; ++a) {
          add_random_dir(marked_ids[i], anchors[slot % anchors.size()]);
          ++slot;
        }
      }
    }

    // Pendants and isolated singletons.
    std::vector<std::string> other_ids;
    for (int i = 0; i < n_leaf; ++i) {
      const auto id = padded_id('p', static_cast<std::size_t>(i));
      add_random_dir(id, plain_ids[uniform_index(rng, static_cast<std::uint64_t>(n_plain))]);
      other_ids.push_back(id);
    }
    for (int i = 0; i < n_isolated; ++i) other_ids.push_back(padded_id('i', i));

    std::vector<std::string> all_ids = marked_ids;
    all_ids.insert(all_ids.end(), plain_ids.begin(), plain_ids.end());
    all_ids.insert(all_ids.end(), other_ids.begin(), other_ids.end());

    for (std::size_t ni = 0; ni < all_ids.size(); ++ni) {
      const auto& id = all_ids[ni];
      NodeRecord n;
      n.id = id;
      const bool is_marked = id[0] == 'm' || id[0] == 'd';
      // Marked nodes alternate between the two marker groups.
      const bool group_a = is_marked && ni % 2 == 0;
      switch (spec.payload) {
        case SynthPayload::Features: {
          FeatureVec f(static_cast<std::size_t>(spec.feature_dim));
          for (auto& x : f) x = gaussian(rng);
          if (is_marked) {
            const std::size_t lo = group_a ? 0 : 16;
            for (std::size_t d = lo; d < lo + 16; ++d) f[d] += spec.motif_shift;
          }
          n.payload = std::move(f);
          break;
        }
        case SynthPayload::Instr: {
          const auto& pool = is_marked
                                 ? (group_a ? marker_instrs_a() : marker_instrs_b())
                                 : background_instrs();
          const std::size_t count = 3 + uniform_index(rng, 6);
          InstrBytes instrs;
          for (std::size_t k = 0; k < count; ++k) {
            instrs.push_back(pool[uniform_index(rng, pool.size())]);
          }
          n.payload = std::move(instrs);
          break;
        }
        case SynthPayload::Names: {
          if (is_marked) {
            const auto& pool = group_a ? marker_names_a() : marker_names_b();
            n.payload = pool[uniform_index(rng, pool.size())];
          } else {
            const auto& pool = background_names();
            char suffix[16];
            std::snprintf(suffix, sizeof(suffix), "_%03d",
                          static_cast<int>(uniform_index(rng, 1000)));
            n.payload = pool[uniform_index(rng, pool.size())] + suffix;
          }
          break;
        }
      }
      g.nodes.push_back(std::move(n));
    }
    g.edges.assign(edge_set.begin(), edge_set.end());
    validate(g);
    graphs.push_back(std::move(g));
  }

  // Interleave classes deterministically so file order carries no signal.
  auto order_rng = make_rng(seed, "gen-synth-order");
  shuffle_vec(graphs, order_rng);
  return graphs;
}

std::vector<NodeId> motif_nodes(const AttrGraph& g) {
  std::vector<NodeId> out;
  for (const auto& n : g.nodes) {
    if (!n.id.empty() && n.id[0] == 'm') out.push_back(n.id);
  }
  return out;
}

std::vector<Edge> motif_edges(const AttrGraph& g) {
  std::set<NodeId> motif;
  for (const auto& id : motif_nodes(g)) motif.insert(id);
  std::vector<Edge> out;
  for (const auto& e : g.edges) {
    if (e.first != e.second && motif.count(e.first) && motif.count(e.second)) {
      out.push_back(e);
    }
  }
  return out;
}

SynthOutput write_synthetic(const SyntheticSpec& spec, std::uint64_t seed,
                            const std::filesystem::path& out_dir,
                            const SplitSpec& split) {
  std::filesystem::create_directories(out_dir);
  const auto graphs = gen_synthetic(spec, seed);
  SynthOutput out;
  out.graphs_file = out_dir / "graphs.jsonl";
  out.manifest_file = out_dir / "manifest.json";
  write_graphs(graphs, out.graphs_file);
  DatasetManifest m;
  m.name = "synthetic";
  m.graph_files.push_back(out.graphs_file);
  m.split = split;
  write_manifest(m, out.manifest_file);
  return out;
}

}  // namespace mdg
