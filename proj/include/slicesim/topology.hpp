#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace slicesim {

enum class NodeKind { server, sw };

// One physical node of the core network. Servers carry CPU capacity and a
// per-hosted-VNF processing delay; switches only forward traffic.
struct PhysicalNode {
  std::string id;
  NodeKind kind = NodeKind::server;
  double cpu_max_ghz = 0.0;    // maximum CPU capacity
  double cpu_alloc_ghz = 0.0;  // currently allocated CPU
  double proc_delay_ms = 0.0;  // processing delay charged per hosted VNF
};

// Undirected physical link; a single shared bw_alloc covers both directions.
struct PhysicalLink {
  std::string a;
  std::string b;
  double bw_max_mbps = 0.0;
  double bw_alloc_mbps = 0.0;
  double delay_init_ms = 0.0;   // delay at zero utilization
  double delay_slope_ms = 0.0;  // maximum increase in delay at full load
};

struct NetworkGraph {
  std::vector<PhysicalNode> nodes;
  std::vector<PhysicalLink> links;
};

// Parameters for the generated tree topology. Capacity defaults keep
// per-slice demands small relative to the fabric, and the delay constants
// give the 0.13 ms..3.63 ms utilization-dependent link delay.
struct TopologyDefaults {
  double server_cpu_max_ghz = 25.0;
  double server_proc_delay_ms = 0.2;
  double bw_server_edge_mbps = 10000.0;  // server <-> edge switch
  double bw_backbone_mbps = 40000.0;     // switch <-> switch
  double delay_init_ms = 0.13;
  double delay_slope_ms = 3.5;
};

// Builds a tree: one core switch, then one switch tier per fanout entry, with
// the servers spread evenly under the leaf switch tier. fanouts[0] is the
// core's child count and each later entry multiplies the tier below. Throws
// ValidationError on empty fanouts or if server_count does not divide evenly
// across the leaf tier.
NetworkGraph generate_topology(std::size_t server_count,
                               const std::vector<std::size_t>& fanouts,
                               const TopologyDefaults& defaults = {});

// Utilization-dependent delay: (bw_alloc / bw_max) * delay_slope + delay_init.
double link_delay(const PhysicalLink& link);

// Allocated CPU over total CPU capacity across server nodes only. Throws
// ValidationError if the graph has no servers.
double average_cpu_utilization(const NetworkGraph& graph);

// Checks every structural invariant: unique ids, known endpoints, no
// self-loops or duplicate links, capacity bounds, connectivity. Throws
// ValidationError naming the offending element.
void validate_topology(const NetworkGraph& graph);

// JSON round-trip. Serialization keeps node/link order; loading validates.
// Allocation fields are optional in the input and default to zero.
std::string topology_to_json(const NetworkGraph& graph);
NetworkGraph topology_from_json(std::string_view text);

void save_topology(const NetworkGraph& graph, const std::filesystem::path& path);
NetworkGraph load_topology(const std::filesystem::path& path);

// Read-side companion to NetworkGraph: dense integer handles for nodes plus
// adjacency and link lookup, built once and reused by the allocator and the
// state ledger. Indices follow graph.nodes / graph.links order.
class GraphIndex {
 public:
  explicit GraphIndex(const NetworkGraph& graph);

  std::size_t node_count() const { return node_of_id_.size(); }
  std::size_t node_of(std::string_view id) const;  // throws on unknown id
  bool has_node(std::string_view id) const;

  const std::vector<std::size_t>& servers() const { return servers_; }
  // Links incident to a node, as indices into graph.links.
  const std::vector<std::size_t>& links_at(std::size_t node) const {
    return links_at_[node];
  }
  // Link between two nodes, or npos when absent.
  static constexpr std::size_t npos = static_cast<std::size_t>(-1);
  std::size_t link_between(std::size_t u, std::size_t v) const;

 private:
  std::unordered_map<std::string, std::size_t> node_of_id_;
  std::vector<std::size_t> servers_;
  std::vector<std::vector<std::size_t>> links_at_;
  std::unordered_map<std::uint64_t, std::size_t> link_of_pair_;
};

}  // namespace slicesim
