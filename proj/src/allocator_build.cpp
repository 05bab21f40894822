#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <queue>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include "slicesim/allocator.hpp"
#include "slicesim/errors.hpp"

namespace slicesim {

namespace {
constexpr double kInf = std::numeric_limits<double>::infinity();
// Exactness guard for dropping placements that cannot fit a server: only a
// strict violation beyond this margin is treated as impossible.
constexpr double kCapEps = 1e-9;
}  // namespace

std::vector<std::string> MilpInstance::col_names() const {
  std::vector<std::string> names;
  names.reserve(static_cast<std::size_t>(num_u + num_y));
  for (const Vnf& v : slice.vnfs) {
    for (std::size_t k : servers) {
      names.push_back("u_" + v.id + "_" + snapshot.nodes[k].id);
    }
  }
  for (const VirtualLink& vl : slice.vlinks) {
    for (const PhysicalLink& l : snapshot.links) {
      names.push_back("y_" + vl.src + "_" + vl.dst + "_" + l.a + "_" + l.b);
      names.push_back("y_" + vl.src + "_" + vl.dst + "_" + l.b + "_" + l.a);
    }
  }
  return names;
}

std::vector<std::string> MilpInstance::row_names() const {
  std::vector<std::string> names;
  for (const Vnf& v : slice.vnfs) names.push_back("assign_" + v.id);
  for (std::size_t k : servers) {
    names.push_back("cap_node_" + snapshot.nodes[k].id);
  }
  for (const PhysicalLink& l : snapshot.links) {
    names.push_back("cap_link_" + l.a + "_" + l.b);
  }
  for (const VirtualLink& vl : slice.vlinks) {
    for (const PhysicalNode& n : snapshot.nodes) {
      names.push_back("flow_" + vl.src + "_" + vl.dst + "_" + n.id);
    }
  }
  bool any_control = false, any_data = false;
  for (const Vnf& v : slice.vnfs) {
    (v.plane == Plane::control ? any_control : any_data) = true;
  }
  if (any_control) {
    for (std::size_t k : servers) {
      names.push_back("iso_c_" + snapshot.nodes[k].id);
    }
  }
  if (any_data) {
    for (std::size_t k : servers) {
      names.push_back("iso_d_" + snapshot.nodes[k].id);
    }
  }
  for (int vl : sep_vlinks) {
    const VirtualLink& vlink = slice.vlinks[static_cast<std::size_t>(vl)];
    names.push_back("sep_" + vlink.src + "_" + vlink.dst);
  }
  names.insert(names.end(), minflow_rows.begin(), minflow_rows.end());
  names.push_back("delay");
  return names;
}

std::vector<int> MilpInstance::binary_cols() const {
  std::vector<int> cols(static_cast<std::size_t>(num_u));
  for (int j = 0; j < num_u; ++j) cols[static_cast<std::size_t>(j)] = j;
  return cols;
}

MilpInstance build_instance(const NetworkGraph& snapshot,
                            const SliceRequest& slice) {
  validate_topology(snapshot);
  validate_slice(slice);

  MilpInstance inst;
  inst.snapshot = snapshot;
  inst.slice = slice;

  GraphIndex index(inst.snapshot);
  inst.servers = index.servers();
  const int S = static_cast<int>(inst.servers.size());
  const int V = static_cast<int>(slice.vnfs.size());
  const int L = static_cast<int>(inst.snapshot.links.size());
  const int VL = static_cast<int>(slice.vlinks.size());
  const int NN = static_cast<int>(inst.snapshot.nodes.size());
  inst.num_u = V * S;
  inst.num_y = VL * 2 * L;

  inst.link_delay_ms.resize(static_cast<std::size_t>(L));
  for (int l = 0; l < L; ++l) {
    inst.link_delay_ms[static_cast<std::size_t>(l)] =
        link_delay(inst.snapshot.links[static_cast<std::size_t>(l)]);
  }

  // Admission check: the slice's total CPU demand must fit the system-wide
  // residual capacity, or no placement can exist at all.
  double residual = 0.0;
  for (std::size_t k : inst.servers) {
    residual += inst.snapshot.nodes[k].cpu_max_ghz -
                inst.snapshot.nodes[k].cpu_alloc_ghz;
  }
  inst.system_residual_ghz = residual;
  inst.budget_feasible = total_cpu_demand(slice) <= residual + kCapEps;

  // Server-slot lookup per node index (-1 for switches).
  std::vector<int> slot_of_node(static_cast<std::size_t>(NN), -1);
  for (int s = 0; s < S; ++s) {
    slot_of_node[inst.servers[static_cast<std::size_t>(s)]] = s;
  }

  // Rack of each candidate server: its first non-server neighbour, or its
  // own node when directly meshed. Ordinals are assigned in node order.
  inst.server_rack.resize(static_cast<std::size_t>(S));
  {
    std::map<std::size_t, int> rack_ordinal;
    std::vector<std::size_t> rack_key(static_cast<std::size_t>(S));
    for (int s = 0; s < S; ++s) {
      const std::size_t node = inst.servers[static_cast<std::size_t>(s)];
      std::size_t key = node;
      for (std::size_t l : index.links_at(node)) {
        const PhysicalLink& link = inst.snapshot.links[l];
        const std::size_t other =
            index.node_of(index.node_of(link.a) == node ? link.b : link.a);
        if (inst.snapshot.nodes[other].kind != NodeKind::server) {
          key = other;
          break;
        }
      }
      rack_key[static_cast<std::size_t>(s)] = key;
      rack_ordinal.emplace(key, 0);
    }
    int next = 0;
    for (auto& [key, ordinal] : rack_ordinal) ordinal = next++;
    for (int s = 0; s < S; ++s) {
      inst.server_rack[static_cast<std::size_t>(s)] =
          rack_ordinal.at(rack_key[static_cast<std::size_t>(s)]);
    }
  }
  std::unordered_map<std::string, int> vnf_index;
  for (int i = 0; i < V; ++i) {
    vnf_index.emplace(slice.vnfs[static_cast<std::size_t>(i)].id, i);
  }

  lp::Model& m = inst.model;

  // Placement columns: cost prefers lightly loaded servers; a placement that
  // cannot fit its server's residual capacity is pinned to zero up front.
  for (int i = 0; i < V; ++i) {
    const Vnf& vnf = slice.vnfs[static_cast<std::size_t>(i)];
    for (int s = 0; s < S; ++s) {
      const PhysicalNode& node =
          inst.snapshot.nodes[inst.servers[static_cast<std::size_t>(s)]];
      const bool fits = node.cpu_alloc_ghz + vnf.cpu_demand_ghz <=
                        node.cpu_max_ghz + kCapEps;
      m.add_col(node.cpu_alloc_ghz + vnf.cpu_demand_ghz, 0.0,
                fits ? 1.0 : 0.0);
    }
  }
  // Unit-flow columns: a virtual link routes one unit of flow between its
  // endpoint hosts, so no arc ever needs to carry more than 1 (flows along
  // cycles only add delay cost and never appear at an optimum).
  for (int vl = 0; vl < VL; ++vl) {
    for (int l = 0; l < L; ++l) {
      const double t = inst.link_delay_ms[static_cast<std::size_t>(l)];
      m.add_col(t, 0.0, 1.0);
      m.add_col(t, 0.0, 1.0);
    }
  }

  // Each VNF lands on exactly one server.
  for (int i = 0; i < V; ++i) {
    int row = m.add_row(1.0, 1.0);
    for (int s = 0; s < S; ++s) m.add_entry(row, inst.u_col(i, s), 1.0);
  }

  // Node capacity in residual form: added demand fits what is left.
  for (int s = 0; s < S; ++s) {
    const PhysicalNode& node =
        inst.snapshot.nodes[inst.servers[static_cast<std::size_t>(s)]];
    int row = m.add_row(-kInf, node.cpu_max_ghz - node.cpu_alloc_ghz);
    for (int i = 0; i < V; ++i) {
      m.add_entry(row, inst.u_col(i, s),
                  slice.vnfs[static_cast<std::size_t>(i)].cpu_demand_ghz);
    }
  }

  // Link capacity: both arc orientations draw from the shared undirected
  // residual bandwidth, each unit of flow charging the virtual link's demand.
  for (int l = 0; l < L; ++l) {
    const PhysicalLink& link = inst.snapshot.links[static_cast<std::size_t>(l)];
    int row = m.add_row(-kInf, link.bw_max_mbps - link.bw_alloc_mbps);
    for (int vl = 0; vl < VL; ++vl) {
      const double bw = slice.vlinks[static_cast<std::size_t>(vl)].bw_demand_mbps;
      m.add_entry(row, inst.y_col(vl, l, 0), bw);
      m.add_entry(row, inst.y_col(vl, l, 1), bw);
    }
  }

  // Flow conservation per virtual link and physical node: net outflow equals
  // +1 at the source's host, -1 at the destination's host, 0 elsewhere. The
  // placement indicators move to the left-hand side.
  for (int vl = 0; vl < VL; ++vl) {
    const VirtualLink& vlink = slice.vlinks[static_cast<std::size_t>(vl)];
    const int src = vnf_index.at(vlink.src);
    const int dst = vnf_index.at(vlink.dst);
    for (int e = 0; e < NN; ++e) {
      int row = m.add_row(0.0, 0.0);
      for (std::size_t l : index.links_at(static_cast<std::size_t>(e))) {
        const PhysicalLink& link = inst.snapshot.links[l];
        const std::size_t a = index.node_of(link.a);
        const int out_dir = (a == static_cast<std::size_t>(e)) ? 0 : 1;
        m.add_entry(row, inst.y_col(vl, static_cast<int>(l), out_dir), 1.0);
        m.add_entry(row, inst.y_col(vl, static_cast<int>(l), 1 - out_dir),
                    -1.0);
      }
      const int slot = slot_of_node[static_cast<std::size_t>(e)];
      if (slot >= 0) {
        m.add_entry(row, inst.u_col(src, slot), -1.0);
        m.add_entry(row, inst.u_col(dst, slot), 1.0);
      }
    }
  }

  // Per-plane co-residency caps per server.
  for (Plane plane : {Plane::control, Plane::data}) {
    bool any = false;
    for (const Vnf& v : slice.vnfs) any = any || v.plane == plane;
    if (!any) continue;
    const int cap =
        plane == Plane::control ? slice.k_rel_control : slice.k_rel_data;
    for (int s = 0; s < S; ++s) {
      int row = m.add_row(-kInf, static_cast<double>(cap));
      for (int i = 0; i < V; ++i) {
        if (slice.vnfs[static_cast<std::size_t>(i)].plane == plane) {
          m.add_entry(row, inst.u_col(i, s), 1.0);
        }
      }
    }
  }

  // Routing-cost floors. Both families below hold for every integral
  // placement and only tighten the relaxation: without them it can split
  // adjacent VNFs identically across servers so their flow cancels and the
  // routing cost vanishes from the bound, leaving branch and bound to
  // enumerate near-equal-cost placements.
  {
    // Virtual links whose endpoints can never share a server.
    std::vector<int> sep;
    for (int vl = 0; vl < VL; ++vl) {
      const VirtualLink& vlink = slice.vlinks[static_cast<std::size_t>(vl)];
      const Vnf& a =
          slice.vnfs[static_cast<std::size_t>(vnf_index.at(vlink.src))];
      const Vnf& b =
          slice.vnfs[static_cast<std::size_t>(vnf_index.at(vlink.dst))];
      if (a.plane != b.plane) continue;
      const int cap =
          a.plane == Plane::control ? slice.k_rel_control : slice.k_rel_data;
      if (cap != 1) continue;
      sep.push_back(vl);
    }

    // Connected within-plane VNF groups: each spreads over at least
    // ceil(group size / plane cap) servers, forcing crossings.
    std::vector<int> parent(static_cast<std::size_t>(V));
    for (int i = 0; i < V; ++i) parent[static_cast<std::size_t>(i)] = i;
    auto find = [&parent](int i) {
      while (parent[static_cast<std::size_t>(i)] != i) {
        parent[static_cast<std::size_t>(i)] =
            parent[static_cast<std::size_t>(parent[static_cast<std::size_t>(i)])];
        i = parent[static_cast<std::size_t>(i)];
      }
      return i;
    };
    std::vector<int> plane_vlinks;
    for (int vl = 0; vl < VL; ++vl) {
      const VirtualLink& vlink = slice.vlinks[static_cast<std::size_t>(vl)];
      const int src = vnf_index.at(vlink.src);
      const int dst = vnf_index.at(vlink.dst);
      if (slice.vnfs[static_cast<std::size_t>(src)].plane !=
          slice.vnfs[static_cast<std::size_t>(dst)].plane) {
        continue;
      }
      plane_vlinks.push_back(vl);
      parent[static_cast<std::size_t>(find(src))] = find(dst);
    }
    std::vector<int> group_size(static_cast<std::size_t>(V), 0);
    for (int i = 0; i < V; ++i) ++group_size[static_cast<std::size_t>(find(i))];
    std::map<int, std::vector<int>> group_vlinks;  // root -> member vlinks
    for (int vl : plane_vlinks) {
      group_vlinks[find(vnf_index.at(
                       slice.vlinks[static_cast<std::size_t>(vl)].src))]
          .push_back(vl);
    }
    auto forced_crossings = [&](int root) {
      const Plane plane =
          slice.vnfs[static_cast<std::size_t>(root)].plane;
      const int cap =
          plane == Plane::control ? slice.k_rel_control : slice.k_rel_data;
      const int n = group_size[static_cast<std::size_t>(find(root))];
      return (n + cap - 1) / cap - 1;
    };
    bool any_group = false;
    for (const auto& [root, vls] : group_vlinks) {
      any_group = any_group || forced_crossings(root) >= 1;
    }

    // Per-server radius: shortest frozen-delay distance to another server
    // that still has room for at least the slice's smallest VNF (integral
    // placements never touch fuller servers, so the bound stays valid).
    double min_demand = kInf;
    for (const Vnf& v : slice.vnfs) {
      min_demand = std::min(min_demand, v.cpu_demand_ghz);
    }
    std::vector<char> usable(static_cast<std::size_t>(S), 0);
    for (int s = 0; s < S; ++s) {
      const PhysicalNode& node =
          inst.snapshot.nodes[inst.servers[static_cast<std::size_t>(s)]];
      usable[static_cast<std::size_t>(s)] =
          node.cpu_alloc_ghz + min_demand <= node.cpu_max_ghz + kCapEps;
    }
    const std::vector<int>& rack_of = inst.server_rack;

    // Wider neighbourhood per rack: the first non-server neighbour of the
    // rack's switch, or the rack itself when directly meshed. A support
    // spanning several such neighbourhoods pays the dearer inter-group
    // distance on its forced crossings. Derived from the rack's node, so
    // every server of a rack lands in the same group.
    std::vector<int> agg_of(static_cast<std::size_t>(S), 0);
    {
      const auto first_nonserver = [&](std::size_t node) {
        for (std::size_t l : index.links_at(node)) {
          const PhysicalLink& link = inst.snapshot.links[l];
          const std::size_t other =
              index.node_of(index.node_of(link.a) == node ? link.b : link.a);
          if (inst.snapshot.nodes[other].kind != NodeKind::server) {
            return other;
          }
        }
        return node;
      };
      std::map<std::size_t, int> agg_ordinal;
      std::vector<std::size_t> agg_key(static_cast<std::size_t>(S));
      for (int s = 0; s < S; ++s) {
        const std::size_t node = inst.servers[static_cast<std::size_t>(s)];
        const std::size_t rack = first_nonserver(node);
        agg_key[static_cast<std::size_t>(s)] =
            rack == node ? node : first_nonserver(rack);
        agg_ordinal.emplace(agg_key[static_cast<std::size_t>(s)], 0);
      }
      int next = 0;
      for (auto& [key, ordinal] : agg_ordinal) ordinal = next++;
      for (int s = 0; s < S; ++s) {
        agg_of[static_cast<std::size_t>(s)] =
            agg_ordinal.at(agg_key[static_cast<std::size_t>(s)]);
      }
    }

    std::vector<double> radius(static_cast<std::size_t>(S), kInf);
    std::vector<double> cross_radius(static_cast<std::size_t>(S), kInf);
    std::vector<double> far_radius(static_cast<std::size_t>(S), kInf);
    if (!sep.empty() || any_group) {
      using Item = std::pair<double, std::size_t>;  // (distance, node)
      std::vector<double> dist(static_cast<std::size_t>(NN));
      for (int s = 0; s < S; ++s) {
        std::fill(dist.begin(), dist.end(), kInf);
        const std::size_t start = inst.servers[static_cast<std::size_t>(s)];
        std::priority_queue<Item, std::vector<Item>, std::greater<>> queue;
        dist[start] = 0.0;
        queue.emplace(0.0, start);
        double best = kInf;
        double best_cross = kInf;
        double best_far = kInf;
        while (!queue.empty()) {
          const auto [d, e] = queue.top();
          queue.pop();
          if (d > dist[e] || d >= best_far) continue;
          const int slot = slot_of_node[e];
          if (e != start && slot >= 0 &&
              usable[static_cast<std::size_t>(slot)]) {
            best = std::min(best, d);
            if (rack_of[static_cast<std::size_t>(slot)] !=
                rack_of[static_cast<std::size_t>(s)]) {
              best_cross = std::min(best_cross, d);
            }
            if (agg_of[static_cast<std::size_t>(slot)] !=
                agg_of[static_cast<std::size_t>(s)]) {
              best_far = std::min(best_far, d);
            }
          }
          for (std::size_t l : index.links_at(e)) {
            const PhysicalLink& link = inst.snapshot.links[l];
            const std::size_t other =
                index.node_of(index.node_of(link.a) == e ? link.b : link.a);
            const double nd = d + inst.link_delay_ms[l];
            if (nd < dist[other]) {
              dist[other] = nd;
              queue.emplace(nd, other);
            }
          }
        }
        radius[static_cast<std::size_t>(s)] = best;
        cross_radius[static_cast<std::size_t>(s)] = best_cross;
        far_radius[static_cast<std::size_t>(s)] = best_far;
      }
    }

    // Floor per never-co-resident virtual link: its endpoints land on two
    // distinct servers whose distance is at least the larger of their radii,
    // which the placement-weighted average lower-bounds.
    for (int vl : sep) {
      const VirtualLink& vlink = slice.vlinks[static_cast<std::size_t>(vl)];
      const int src = vnf_index.at(vlink.src);
      const int dst = vnf_index.at(vlink.dst);
      int row = m.add_row(0.0, kInf);
      for (int l = 0; l < L; ++l) {
        const double t = inst.link_delay_ms[static_cast<std::size_t>(l)];
        m.add_entry(row, inst.y_col(vl, l, 0), t);
        m.add_entry(row, inst.y_col(vl, l, 1), t);
      }
      for (int s = 0; s < S; ++s) {
        const double r = radius[static_cast<std::size_t>(s)];
        if (!std::isfinite(r) || r <= 0.0) continue;
        m.add_entry(row, inst.u_col(src, s), -0.5 * r);
        m.add_entry(row, inst.u_col(dst, s), -0.5 * r);
      }
      inst.sep_vlinks.push_back(vl);
    }

    // Floors per within-plane group: a connected group of n VNFs under
    // co-residency cap k spreads over at least m = ceil(n/k) servers, so at
    // least m-1 of its virtual links cross between servers, each paying at
    // least the smallest inter-server distance among servers with room
    // (pure routing floor). A second, lifted floor adds capacity-scaled
    // load terms alloc_s/k per member and server on its left-hand side:
    // hosting the group on q servers across t racks pays at least the
    // cheapest capacity-scaled load of such a support plus (q-1) crossings
    // of which t-1 run between racks, and minimising that jointly over all
    // supports keeps every integral placement satisfying the row. Together
    // they stop the relaxation from parking identical fractional copies of
    // the group on the globally cheapest servers with zero routing.
    double r_min = kInf;
    double cross_min = kInf;
    double far_min = kInf;
    for (int s = 0; s < S; ++s) {
      if (usable[static_cast<std::size_t>(s)]) {
        r_min = std::min(r_min, radius[static_cast<std::size_t>(s)]);
        cross_min =
            std::min(cross_min, cross_radius[static_cast<std::size_t>(s)]);
        far_min = std::min(far_min, far_radius[static_cast<std::size_t>(s)]);
      }
    }
    // Usable servers grouped by rack and wider neighbourhood, load
    // coefficients ascending; negligible loads count as free.
    constexpr double kFreeEps = 1e-9;
    std::vector<std::vector<std::vector<double>>> agg_racks;
    {
      std::map<int, std::map<int, std::vector<double>>> by_agg;
      for (int s = 0; s < S; ++s) {
        if (!usable[static_cast<std::size_t>(s)]) continue;
        const double alloc =
            inst.snapshot.nodes[inst.servers[static_cast<std::size_t>(s)]]
                .cpu_alloc_ghz;
        by_agg[agg_of[static_cast<std::size_t>(s)]]
              [rack_of[static_cast<std::size_t>(s)]]
                  .push_back(alloc <= kFreeEps ? 0.0 : alloc);
      }
      for (auto& [agg, racks] : by_agg) {
        std::vector<std::vector<double>> group;
        for (auto& [rack, loads] : racks) {
          std::sort(loads.begin(), loads.end());
          group.push_back(std::move(loads));
        }
        agg_racks.push_back(std::move(group));
      }
    }
    // Cheapest way to host n group members under per-server cap `cap`:
    // counts of 1..cap per chosen server summing to n, minimising the
    // capacity-scaled load sum alloc_s * count_s / cap plus the minimum
    // inter-server distance for every server beyond the mandatory
    // ceil(n/cap), the inter-rack surcharge for every rack beyond the first,
    // and the inter-neighbourhood surcharge for every neighbourhood beyond
    // the first. A placement on q servers across t racks in a
    // neighbourhoods forces q-1 crossings of which t-1 run between racks
    // and a-1 of those between neighbourhoods, so every integral placement
    // pays at least this floor between the lifted row's load terms and its
    // routing terms; exactness is preserved. Within a rack the cheapest
    // servers win and extra counts water-fill cheapest-first, both by
    // exchange.
    const auto count_floor = [&](int n, int cap, double rack_sur,
                                 double agg_sur) {
      if (n <= 0) return 0.0;
      const int min_servers = (n + cap - 1) / cap;
      // dp[p][c]: p servers hosting c members, surcharges folded in.
      std::vector<std::vector<double>> dp(
          static_cast<std::size_t>(n + 1),
          std::vector<double>(static_cast<std::size_t>(n + 1), kInf));
      dp[0][0] = 0.0;
      std::vector<std::vector<double>> sub(
          static_cast<std::size_t>(n + 1),
          std::vector<double>(static_cast<std::size_t>(n + 1), kInf));
      for (const auto& racks : agg_racks) {
        // Sub-selection within one neighbourhood: the first rack opens
        // free, later racks pay the inter-rack surcharge.
        for (auto& row : sub) std::fill(row.begin(), row.end(), kInf);
        sub[0][0] = 0.0;
        for (const auto& loads : racks) {
          const int rack_x = std::min(static_cast<int>(loads.size()), n);
          for (int p = n; p >= 0; --p) {
            for (int c = n; c >= 0; --c) {
              const double base =
                  sub[static_cast<std::size_t>(p)][static_cast<std::size_t>(c)];
              if (!std::isfinite(base)) continue;
              const double open = base + (p > 0 ? rack_sur : 0.0);
              for (int x = 1; x <= std::min(rack_x, n - p); ++x) {
                // Counts start at one per server; extras go to the cheapest
                // servers first, up to the cap.
                double load = 0.0;
                for (int j = 0; j < x; ++j) {
                  load += loads[static_cast<std::size_t>(j)];
                }
                std::vector<int> count(static_cast<std::size_t>(x), 1);
                int fill = 0;
                const int y_max = std::min(n - c, x * cap);
                for (int y = x; y <= y_max; ++y) {
                  if (y > x) {
                    while (count[static_cast<std::size_t>(fill)] == cap) {
                      ++fill;
                    }
                    ++count[static_cast<std::size_t>(fill)];
                    load += loads[static_cast<std::size_t>(fill)];
                  }
                  double& cell = sub[static_cast<std::size_t>(p + x)]
                                    [static_cast<std::size_t>(c + y)];
                  cell = std::min(cell, open + load / cap);
                }
              }
            }
          }
        }
        // Merge the neighbourhood: opening it beside existing servers pays
        // both surcharges for its first rack.
        for (int p = n; p >= 0; --p) {
          for (int c = n; c >= 0; --c) {
            const double base =
                dp[static_cast<std::size_t>(p)][static_cast<std::size_t>(c)];
            if (!std::isfinite(base)) continue;
            const double open = base + (p > 0 ? rack_sur + agg_sur : 0.0);
            for (int x = 1; x <= n - p; ++x) {
              for (int y = x; y <= n - c; ++y) {
                const double add = sub[static_cast<std::size_t>(x)]
                                      [static_cast<std::size_t>(y)];
                if (!std::isfinite(add)) continue;
                double& cell = dp[static_cast<std::size_t>(p + x)]
                                 [static_cast<std::size_t>(c + y)];
                cell = std::min(cell, open + add);
              }
            }
          }
        }
      }
      double best = kInf;
      for (int p = min_servers; p <= n; ++p) {
        const double cost =
            dp[static_cast<std::size_t>(p)][static_cast<std::size_t>(n)];
        if (std::isfinite(cost)) {
          best = std::min(best, cost + (p - min_servers) * r_min);
        }
      }
      return std::isfinite(best) ? best : 0.0;
    };
    std::vector<std::vector<int>> group_members;
    std::map<int, int> member_slot;  // root -> index into group_members
    for (int i = 0; i < V; ++i) {
      const int root = find(i);
      if (!group_vlinks.count(root)) continue;
      auto [it, fresh] = member_slot.try_emplace(
          root, static_cast<int>(group_members.size()));
      if (fresh) group_members.emplace_back();
      group_members[static_cast<std::size_t>(it->second)].push_back(i);
    }
    if (std::isfinite(r_min) && r_min > 0.0) {
      for (const auto& [root, vls] : group_vlinks) {
        const int crossings = forced_crossings(root);
        if (crossings < 1) continue;
        const Plane plane =
            slice.vnfs[static_cast<std::size_t>(root)].plane;
        const char* tag = plane == Plane::control ? "c" : "d";
        const int cap =
            plane == Plane::control ? slice.k_rel_control : slice.k_rel_data;
        const int n = group_size[static_cast<std::size_t>(root)];
        const double rack_sur = std::isfinite(cross_min)
                                    ? std::max(0.0, cross_min - r_min)
                                    : 0.0;
        const double agg_sur = std::isfinite(far_min) && std::isfinite(cross_min)
                                   ? std::max(0.0, far_min - cross_min)
                                   : 0.0;
        const auto add_group_y = [&](int row) {
          for (int vl : vls) {
            for (int l = 0; l < L; ++l) {
              const double t = inst.link_delay_ms[static_cast<std::size_t>(l)];
              m.add_entry(row, inst.y_col(vl, l, 0), t);
              m.add_entry(row, inst.y_col(vl, l, 1), t);
            }
          }
        };

        // Pure routing floor: at least `crossings` of the group's virtual
        // links run between distinct servers.
        const int row = m.add_row(crossings * r_min, kInf);
        add_group_y(row);
        inst.minflow_rows.push_back(
            std::string("minflow_") + tag + "_" +
            std::to_string(inst.minflow_rows.size()));

        // Lifted floor: routing cost plus capacity-scaled load terms cover
        // the cheapest way to host the whole group.
        const double lift = count_floor(n, cap, rack_sur, agg_sur);
        if (lift > kFreeEps) {
          const int lrow = m.add_row(crossings * r_min + lift, kInf);
          add_group_y(lrow);
          for (int s = 0; s < S; ++s) {
            if (!usable[static_cast<std::size_t>(s)]) continue;
            const double alloc =
                inst.snapshot.nodes[inst.servers[static_cast<std::size_t>(s)]]
                    .cpu_alloc_ghz;
            if (alloc <= kFreeEps) continue;
            for (int i :
                 group_members[static_cast<std::size_t>(member_slot.at(root))]) {
              m.add_entry(lrow, inst.u_col(i, s), alloc / cap);
            }
          }
          inst.minflow_rows.push_back(
              std::string("minlift_") + tag + "_" +
              std::to_string(inst.minflow_rows.size()));
        }
      }
    }
  }

  // End-to-end delay: frozen link delays per unit flow plus per-host
  // processing delay; the VNFs' own processing delays are constant and move
  // to the right-hand side.
  double vnf_delay = 0.0;
  for (const Vnf& v : slice.vnfs) vnf_delay += v.proc_delay_ms;
  {
    int row = m.add_row(-kInf, slice.delay_budget_ms - vnf_delay);
    for (int i = 0; i < V; ++i) {
      for (int s = 0; s < S; ++s) {
        const PhysicalNode& node =
            inst.snapshot.nodes[inst.servers[static_cast<std::size_t>(s)]];
        m.add_entry(row, inst.u_col(i, s), node.proc_delay_ms);
      }
    }
    for (int vl = 0; vl < VL; ++vl) {
      for (int l = 0; l < L; ++l) {
        const double t = inst.link_delay_ms[static_cast<std::size_t>(l)];
        m.add_entry(row, inst.y_col(vl, l, 0), t);
        m.add_entry(row, inst.y_col(vl, l, 1), t);
      }
    }
  }

  return inst;
}

std::string export_lp_text(const MilpInstance& inst) {
  return lp::write_lp_text(inst.model, inst.col_names(), inst.row_names(),
                           inst.binary_cols());
}

}  // namespace slicesim
