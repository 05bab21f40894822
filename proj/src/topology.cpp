#include "slicesim/topology.hpp"

#include <fstream>
#include <queue>
#include <sstream>
#include <unordered_set>

#include "json.hpp"
#include "slicesim/errors.hpp"

namespace slicesim {

namespace {

using nlohmann::json;

std::string node_kind_name(NodeKind k) {
  return k == NodeKind::server ? "server" : "switch";
}

NodeKind node_kind_from(const std::string& s, const std::string& node_id) {
  if (s == "server") return NodeKind::server;
  if (s == "switch") return NodeKind::sw;
  throw ValidationError("node '" + node_id + "': unknown kind '" + s + "'");
}

std::uint64_t pair_key(std::size_t u, std::size_t v) {
  if (u > v) std::swap(u, v);
  return (static_cast<std::uint64_t>(u) << 32) | static_cast<std::uint64_t>(v);
}

}  // namespace

NetworkGraph generate_topology(std::size_t server_count,
                               const std::vector<std::size_t>& fanouts,
                               const TopologyDefaults& defaults) {
  if (server_count == 0) throw ValidationError("server_count must be >= 1");
  if (fanouts.empty()) throw ValidationError("fanouts must not be empty");
  for (std::size_t f : fanouts) {
    if (f == 0) throw ValidationError("fanout entries must be >= 1");
  }

  std::size_t leaf_count = 1;
  for (std::size_t f : fanouts) leaf_count *= f;
  if (server_count % leaf_count != 0) {
    throw ValidationError(
        "server_count " + std::to_string(server_count) +
        " does not divide evenly across " + std::to_string(leaf_count) +
        " leaf switches");
  }
  const std::size_t servers_per_leaf = server_count / leaf_count;

  NetworkGraph g;

  auto add_switch = [&](const std::string& id) {
    PhysicalNode n;
    n.id = id;
    n.kind = NodeKind::sw;
    n.cpu_max_ghz = 0.0;
    n.proc_delay_ms = 0.0;
    g.nodes.push_back(std::move(n));
    return g.nodes.size() - 1;
  };
  auto add_link = [&](std::size_t u, std::size_t v, double bw) {
    PhysicalLink l;
    l.a = g.nodes[u].id;
    l.b = g.nodes[v].id;
    l.bw_max_mbps = bw;
    l.delay_init_ms = defaults.delay_init_ms;
    l.delay_slope_ms = defaults.delay_slope_ms;
    g.links.push_back(std::move(l));
  };

  // Tier prefixes: the usual three-tier core/aggregation/edge naming when two
  // fanout entries are given, generic names for other depths.
  auto tier_prefix = [&](std::size_t level) -> std::string {
    if (fanouts.size() == 2) return level == 1 ? "agg" : "edge";
    if (fanouts.size() == 1) return "edge";
    if (level == fanouts.size()) return "edge";
    return "sw" + std::to_string(level) + "_";
  };

  std::vector<std::size_t> parents{add_switch("core0")};
  for (std::size_t level = 1; level <= fanouts.size(); ++level) {
    std::vector<std::size_t> tier;
    std::size_t counter = 0;
    for (std::size_t p : parents) {
      for (std::size_t c = 0; c < fanouts[level - 1]; ++c) {
        std::size_t idx =
            add_switch(tier_prefix(level) + std::to_string(counter++));
        add_link(p, idx, defaults.bw_backbone_mbps);
        tier.push_back(idx);
      }
    }
    parents = std::move(tier);
  }

  std::size_t server_id = 0;
  for (std::size_t leaf : parents) {
    for (std::size_t c = 0; c < servers_per_leaf; ++c) {
      PhysicalNode n;
      n.id = "s" + std::to_string(server_id++);
      n.kind = NodeKind::server;
      n.cpu_max_ghz = defaults.server_cpu_max_ghz;
      n.proc_delay_ms = defaults.server_proc_delay_ms;
      g.nodes.push_back(std::move(n));
      add_link(leaf, g.nodes.size() - 1, defaults.bw_server_edge_mbps);
    }
  }

  return g;
}

double link_delay(const PhysicalLink& link) {
  return (link.bw_alloc_mbps / link.bw_max_mbps) * link.delay_slope_ms +
         link.delay_init_ms;
}

double average_cpu_utilization(const NetworkGraph& graph) {
  double alloc = 0.0, cap = 0.0;
  for (const auto& n : graph.nodes) {
    if (n.kind != NodeKind::server) continue;
    alloc += n.cpu_alloc_ghz;
    cap += n.cpu_max_ghz;
  }
  if (cap <= 0.0) {
    throw ValidationError("average_cpu_utilization: graph has no server nodes");
  }
  return alloc / cap;
}

void validate_topology(const NetworkGraph& graph) {
  std::unordered_map<std::string, std::size_t> index;
  for (std::size_t i = 0; i < graph.nodes.size(); ++i) {
    const auto& n = graph.nodes[i];
    if (n.id.empty()) throw ValidationError("node with empty id");
    if (!index.emplace(n.id, i).second) {
      throw ValidationError("duplicate node id '" + n.id + "'");
    }
    if (n.kind == NodeKind::sw && n.cpu_max_ghz != 0.0) {
      throw ValidationError("switch '" + n.id + "' has nonzero cpu_max");
    }
    if (n.cpu_max_ghz < 0.0) {
      throw ValidationError("node '" + n.id + "': cpu_max < 0");
    }
    if (n.cpu_alloc_ghz < 0.0 || n.cpu_alloc_ghz > n.cpu_max_ghz) {
      throw ValidationError("node '" + n.id +
                            "': cpu_alloc outside [0, cpu_max]");
    }
    if (n.proc_delay_ms < 0.0) {
      throw ValidationError("node '" + n.id + "': proc_delay < 0");
    }
  }

  std::unordered_set<std::uint64_t> seen_pairs;
  std::vector<std::vector<std::size_t>> adj(graph.nodes.size());
  for (const auto& l : graph.links) {
    auto ia = index.find(l.a);
    if (ia == index.end()) {
      throw ValidationError("link endpoint references unknown node '" + l.a +
                            "'");
    }
    auto ib = index.find(l.b);
    if (ib == index.end()) {
      throw ValidationError("link endpoint references unknown node '" + l.b +
                            "'");
    }
    if (ia->second == ib->second) {
      throw ValidationError("self-loop link at node '" + l.a + "'");
    }
    if (!seen_pairs.insert(pair_key(ia->second, ib->second)).second) {
      throw ValidationError("duplicate link between '" + l.a + "' and '" +
                            l.b + "'");
    }
    if (l.bw_max_mbps <= 0.0) {
      throw ValidationError("link " + l.a + "-" + l.b + ": bw_max must be > 0");
    }
    if (l.bw_alloc_mbps < 0.0 || l.bw_alloc_mbps > l.bw_max_mbps) {
      throw ValidationError("link " + l.a + "-" + l.b +
                            ": bw_alloc outside [0, bw_max]");
    }
    if (l.delay_init_ms < 0.0 || l.delay_slope_ms < 0.0) {
      throw ValidationError("link " + l.a + "-" + l.b +
                            ": negative delay parameter");
    }
    adj[ia->second].push_back(ib->second);
    adj[ib->second].push_back(ia->second);
  }

  if (!graph.nodes.empty()) {
    std::vector<char> seen(graph.nodes.size(), 0);
    std::queue<std::size_t> q;
    q.push(0);
    seen[0] = 1;
    while (!q.empty()) {
      std::size_t u = q.front();
      q.pop();
      for (std::size_t v : adj[u]) {
        if (!seen[v]) {
          seen[v] = 1;
          q.push(v);
        }
      }
    }
    for (std::size_t i = 0; i < graph.nodes.size(); ++i) {
      if (!seen[i]) {
        throw ValidationError("graph is disconnected: node '" +
                              graph.nodes[i].id + "' unreachable from '" +
                              graph.nodes[0].id + "'");
      }
    }
  }
}

std::string topology_to_json(const NetworkGraph& graph) {
  json doc;
  doc["nodes"] = json::array();
  for (const auto& n : graph.nodes) {
    doc["nodes"].push_back({{"id", n.id},
                            {"kind", node_kind_name(n.kind)},
                            {"cpu_max_ghz", n.cpu_max_ghz},
                            {"cpu_alloc_ghz", n.cpu_alloc_ghz},
                            {"proc_delay_ms", n.proc_delay_ms}});
  }
  doc["links"] = json::array();
  for (const auto& l : graph.links) {
    doc["links"].push_back({{"a", l.a},
                            {"b", l.b},
                            {"bw_max_mbps", l.bw_max_mbps},
                            {"bw_alloc_mbps", l.bw_alloc_mbps},
                            {"delay_init_ms", l.delay_init_ms},
                            {"delay_slope_ms", l.delay_slope_ms}});
  }
  return doc.dump(2) + "\n";
}

NetworkGraph topology_from_json(std::string_view text) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ValidationError(std::string("topology: invalid JSON: ") + e.what());
  }

  NetworkGraph g;
  try {
    if (!doc.is_object() || !doc.contains("nodes") || !doc.contains("links")) {
      throw ValidationError(
          "topology: document must have 'nodes' and 'links' arrays");
    }
    for (const auto& jn : doc.at("nodes")) {
      PhysicalNode n;
      n.id = jn.at("id").get<std::string>();
      n.kind = node_kind_from(jn.at("kind").get<std::string>(), n.id);
      n.cpu_max_ghz = jn.at("cpu_max_ghz").get<double>();
      n.cpu_alloc_ghz = jn.value("cpu_alloc_ghz", 0.0);
      n.proc_delay_ms = jn.at("proc_delay_ms").get<double>();
      g.nodes.push_back(std::move(n));
    }
    for (const auto& jl : doc.at("links")) {
      PhysicalLink l;
      l.a = jl.at("a").get<std::string>();
      l.b = jl.at("b").get<std::string>();
      l.bw_max_mbps = jl.at("bw_max_mbps").get<double>();
      l.bw_alloc_mbps = jl.value("bw_alloc_mbps", 0.0);
      l.delay_init_ms = jl.at("delay_init_ms").get<double>();
      l.delay_slope_ms = jl.at("delay_slope_ms").get<double>();
      g.links.push_back(std::move(l));
    }
  } catch (const json::exception& e) {
    throw ValidationError(std::string("topology: schema violation: ") +
                          e.what());
  }

  validate_topology(g);
  return g;
}

void save_topology(const NetworkGraph& graph,
                   const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) {
    throw ValidationError("cannot open '" + path.string() + "' for writing");
  }
  out << topology_to_json(graph);
  if (!out) throw ValidationError("write to '" + path.string() + "' failed");
}

NetworkGraph load_topology(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open '" + path.string() + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  return topology_from_json(buf.str());
}

GraphIndex::GraphIndex(const NetworkGraph& graph) {
  links_at_.resize(graph.nodes.size());
  for (std::size_t i = 0; i < graph.nodes.size(); ++i) {
    const auto& n = graph.nodes[i];
    if (!node_of_id_.emplace(n.id, i).second) {
      throw ValidationError("duplicate node id '" + n.id + "'");
    }
    if (n.kind == NodeKind::server) servers_.push_back(i);
  }
  for (std::size_t li = 0; li < graph.links.size(); ++li) {
    const auto& l = graph.links[li];
    std::size_t u = node_of(l.a);
    std::size_t v = node_of(l.b);
    links_at_[u].push_back(li);
    links_at_[v].push_back(li);
    link_of_pair_.emplace(pair_key(u, v), li);
  }
}

std::size_t GraphIndex::node_of(std::string_view id) const {
  auto it = node_of_id_.find(std::string(id));
  if (it == node_of_id_.end()) {
    throw ValidationError("unknown node '" + std::string(id) + "'");
  }
  return it->second;
}

bool GraphIndex::has_node(std::string_view id) const {
  return node_of_id_.count(std::string(id)) != 0;
}

std::size_t GraphIndex::link_between(std::size_t u, std::size_t v) const {
  auto it = link_of_pair_.find(pair_key(u, v));
  return it == link_of_pair_.end() ? npos : it->second;
}

}  // namespace slicesim
