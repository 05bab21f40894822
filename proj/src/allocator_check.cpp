#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <string>
#include <unordered_map>
#include <vector>

#include "slicesim/allocator.hpp"
#include "slicesim/errors.hpp"

namespace slicesim {

namespace {
constexpr double kInf = std::numeric_limits<double>::infinity();
}

ValidationReport validate_solution(const MilpInstance& inst,
                                   const Solution& sol, double tol) {
  ValidationReport report;
  auto add = [&](std::string family, double worst, std::string detail) {
    FamilyCheck c;
    c.family = std::move(family);
    c.worst_violation = worst;
    c.pass = worst <= tol;
    c.detail = std::move(detail);
    report.checks.push_back(std::move(c));
  };

  if (sol.status != SolveStatus::optimal) {
    add("status", 1.0, "solution status is not optimal");
    report.all_pass = false;
    return report;
  }

  const NetworkGraph& g = inst.snapshot;
  const SliceRequest& slice = inst.slice;
  GraphIndex index(g);

  // Assignment: every VNF exactly once, on an existing server.
  {
    double worst = 0.0;
    std::string detail;
    for (const Vnf& v : slice.vnfs) {
      auto it = sol.placement.find(v.id);
      if (it == sol.placement.end()) {
        worst = 1.0;
        detail = "VNF '" + v.id + "' unplaced";
        break;
      }
      if (!index.has_node(it->second) ||
          g.nodes[index.node_of(it->second)].kind != NodeKind::server) {
        worst = 1.0;
        detail = "VNF '" + v.id + "' placed on non-server '" + it->second +
                 "'";
        break;
      }
    }
    if (worst == 0.0 && sol.placement.size() != slice.vnfs.size()) {
      worst = 1.0;
      detail = "placement names unknown VNFs";
    }
    add("assignment", worst, detail);
    if (worst > tol) {  // remaining families need a well-formed placement
      report.all_pass = false;
      return report;
    }
  }

  std::unordered_map<std::string, std::size_t> host;  // VNF id -> node index
  for (const auto& [vnf, server] : sol.placement) {
    host.emplace(vnf, index.node_of(server));
  }

  // Node capacity: prior load plus newly placed demand fits each server.
  {
    std::vector<double> added(g.nodes.size(), 0.0);
    for (const Vnf& v : slice.vnfs) {
      added[host.at(v.id)] += v.cpu_demand_ghz;
    }
    double worst = 0.0;
    std::string detail;
    for (std::size_t k = 0; k < g.nodes.size(); ++k) {
      const PhysicalNode& n = g.nodes[k];
      if (n.kind != NodeKind::server) continue;
      double over = n.cpu_alloc_ghz + added[k] - n.cpu_max_ghz;
      if (over > worst) {
        worst = over;
        detail = "server '" + n.id + "' over capacity";
      }
    }
    add("node-capacity", worst, detail);
  }

  // Per-arc flow lookup, shared by the remaining families.
  struct ArcLoad {
    std::size_t link;
    int dir;  // 0 along (a -> b)
    double value;
  };
  std::vector<std::vector<ArcLoad>> arcs_of(sol.flows.size());
  bool arcs_ok = true;
  std::string arc_detail;
  double domain_worst = 0.0;
  for (std::size_t f = 0; f < sol.flows.size(); ++f) {
    for (const FlowArc& arc : sol.flows[f].arcs) {
      if (!index.has_node(arc.from) || !index.has_node(arc.to)) {
        arcs_ok = false;
        arc_detail = "arc references unknown node";
        continue;
      }
      std::size_t u = index.node_of(arc.from);
      std::size_t v = index.node_of(arc.to);
      std::size_t l = index.link_between(u, v);
      if (l == GraphIndex::npos) {
        arcs_ok = false;
        arc_detail = "arc '" + arc.from + "'->'" + arc.to +
                     "' has no physical link";
        continue;
      }
      if (arc.value < 0.0) {
        domain_worst = std::max(domain_worst, -arc.value);
        arc_detail = "negative flow on '" + arc.from + "'->'" + arc.to + "'";
      }
      if (arc.value > 1.0) {
        domain_worst = std::max(domain_worst, arc.value - 1.0);
        arc_detail = "unit flow exceeded on '" + arc.from + "'->'" + arc.to +
                     "'";
      }
      arcs_of[f].push_back({l, g.links[l].a == arc.from ? 0 : 1, arc.value});
    }
  }
  add("domain", arcs_ok ? domain_worst : std::max(domain_worst, 1.0),
      arc_detail);

  // Link capacity: both orientations charge the shared undirected residual.
  {
    std::vector<double> added(g.links.size(), 0.0);
    if (sol.flows.size() == slice.vlinks.size()) {
      for (std::size_t f = 0; f < sol.flows.size(); ++f) {
        const double bw = slice.vlinks[f].bw_demand_mbps;
        for (const ArcLoad& a : arcs_of[f]) added[a.link] += bw * a.value;
      }
    }
    double worst = 0.0;
    std::string detail;
    for (std::size_t l = 0; l < g.links.size(); ++l) {
      double over = g.links[l].bw_alloc_mbps + added[l] - g.links[l].bw_max_mbps;
      if (over > worst) {
        worst = over;
        detail = "link '" + g.links[l].a + "'-'" + g.links[l].b +
                 "' over capacity";
      }
    }
    add("link-capacity", worst, detail);
  }

  // System budget: the scalar admission check.
  {
    double over = total_cpu_demand(slice) - inst.system_residual_ghz;
    add("system-budget", std::max(0.0, over),
        over > 0.0 ? "total demand exceeds system residual" : "");
  }

  // Flow conservation: per virtual link, net outflow is +1 at the source's
  // host, -1 at the destination's host, 0 elsewhere.
  {
    double worst = 0.0;
    std::string detail;
    if (sol.flows.size() != slice.vlinks.size()) {
      worst = 1.0;
      detail = "flow list does not match the virtual links";
    } else {
      std::vector<double> net(g.nodes.size());
      for (std::size_t f = 0; f < sol.flows.size(); ++f) {
        std::fill(net.begin(), net.end(), 0.0);
        for (const ArcLoad& a : arcs_of[f]) {
          const PhysicalLink& link = g.links[a.link];
          std::size_t from = index.node_of(a.dir == 0 ? link.a : link.b);
          std::size_t to = index.node_of(a.dir == 0 ? link.b : link.a);
          net[from] += a.value;
          net[to] -= a.value;
        }
        const std::size_t src_host = host.at(slice.vlinks[f].src);
        const std::size_t dst_host = host.at(slice.vlinks[f].dst);
        for (std::size_t e = 0; e < g.nodes.size(); ++e) {
          double expected = (e == src_host ? 1.0 : 0.0) -
                            (e == dst_host ? 1.0 : 0.0);
          double dev = std::fabs(net[e] - expected);
          if (dev > worst) {
            worst = dev;
            detail = "virtual link " + slice.vlinks[f].src + "->" +
                     slice.vlinks[f].dst + " leaks at node '" +
                     g.nodes[e].id + "'";
          }
        }
      }
    }
    add("flow-conservation", worst, detail);
  }

  // Isolation: per-plane co-residency caps on every server.
  {
    std::map<std::size_t, std::pair<int, int>> counts;
    for (const Vnf& v : slice.vnfs) {
      auto& c = counts[host.at(v.id)];
      (v.plane == Plane::control ? c.first : c.second) += 1;
    }
    double worst = 0.0;
    std::string detail;
    for (const auto& [node, c] : counts) {
      if (c.first - slice.k_rel_control > worst) {
        worst = c.first - slice.k_rel_control;
        detail = "control-plane cap exceeded on '" + g.nodes[node].id + "'";
      }
      if (c.second - slice.k_rel_data > worst) {
        worst = c.second - slice.k_rel_data;
        detail = "data-plane cap exceeded on '" + g.nodes[node].id + "'";
      }
    }
    add("isolation", worst, detail);
  }

  // Delay: frozen per-unit link delays plus VNF and host processing delays.
  double realized = 0.0;
  {
    for (const Vnf& v : slice.vnfs) {
      realized += v.proc_delay_ms + g.nodes[host.at(v.id)].proc_delay_ms;
    }
    for (std::size_t f = 0; f < arcs_of.size(); ++f) {
      for (const ArcLoad& a : arcs_of[f]) {
        realized += inst.link_delay_ms[a.link] * a.value;
      }
    }
    double worst = std::max(0.0, realized - slice.delay_budget_ms);
    std::string detail =
        worst > 0.0 ? "realized delay exceeds the budget" : "";
    double report_dev = std::fabs(realized - sol.realized_delay_ms);
    if (report_dev > worst) {
      worst = report_dev;
      detail = "reported delay disagrees with the recomputation";
    }
    add("delay", worst, detail);
  }

  // Objective reproduction from placement, flows, and the frozen snapshot.
  {
    double obj = 0.0;
    for (const Vnf& v : slice.vnfs) {
      const PhysicalNode& n = g.nodes[host.at(v.id)];
      obj += n.cpu_alloc_ghz + v.cpu_demand_ghz;
    }
    for (std::size_t f = 0; f < arcs_of.size(); ++f) {
      for (const ArcLoad& a : arcs_of[f]) {
        obj += inst.link_delay_ms[a.link] * a.value;
      }
    }
    add("objective", std::fabs(obj - sol.objective_value),
        "recomputed objective vs reported");
  }

  report.all_pass = true;
  for (const FamilyCheck& c : report.checks) {
    report.all_pass = report.all_pass && c.pass;
  }
  return report;
}

Solution oracle_solve(const NetworkGraph& snapshot,
                      const SliceRequest& slice) {
  validate_topology(snapshot);
  validate_slice(slice);
  GraphIndex index(snapshot);
  const std::vector<std::size_t>& servers = index.servers();
  const int S = static_cast<int>(servers.size());
  const int V = static_cast<int>(slice.vnfs.size());
  if (S > 6 || V > 4) {
    throw ValidationError(
        "oracle_solve is limited to 6 servers and 4 VNFs (got " +
        std::to_string(S) + " servers, " + std::to_string(V) + " VNFs)");
  }
  const std::size_t NN = snapshot.nodes.size();
  const std::size_t L = snapshot.links.size();

  // All-pairs shortest paths over the frozen link delays, with next-hop
  // reconstruction for emitting the routed arcs.
  std::vector<double> t(L);
  for (std::size_t l = 0; l < L; ++l) t[l] = link_delay(snapshot.links[l]);
  std::vector<std::vector<double>> dist(NN, std::vector<double>(NN, kInf));
  std::vector<std::vector<std::size_t>> next_hop(
      NN, std::vector<std::size_t>(NN, GraphIndex::npos));
  for (std::size_t e = 0; e < NN; ++e) {
    dist[e][e] = 0.0;
    next_hop[e][e] = e;
  }
  for (std::size_t l = 0; l < L; ++l) {
    std::size_t a = index.node_of(snapshot.links[l].a);
    std::size_t b = index.node_of(snapshot.links[l].b);
    dist[a][b] = dist[b][a] = t[l];
    next_hop[a][b] = b;
    next_hop[b][a] = a;
  }
  for (std::size_t m = 0; m < NN; ++m) {
    for (std::size_t i = 0; i < NN; ++i) {
      for (std::size_t j = 0; j < NN; ++j) {
        if (dist[i][m] + dist[m][j] < dist[i][j]) {
          dist[i][j] = dist[i][m] + dist[m][j];
          next_hop[i][j] = next_hop[i][m];
        }
      }
    }
  }

  double budget_residual = 0.0;
  for (std::size_t k : servers) {
    budget_residual +=
        snapshot.nodes[k].cpu_max_ghz - snapshot.nodes[k].cpu_alloc_ghz;
  }
  Solution best;
  if (total_cpu_demand(slice) > budget_residual + 1e-9) {
    best.infeasible_reason = "system CPU budget";
    return best;
  }

  double fixed_vnf_delay = 0.0;
  for (const Vnf& v : slice.vnfs) fixed_vnf_delay += v.proc_delay_ms;

  std::vector<int> assign(static_cast<std::size_t>(V), 0);
  std::vector<double> link_load(L);
  double best_obj = kInf;
  while (true) {
    // Feasibility: node capacity, per-plane caps.
    bool ok = true;
    for (int s = 0; s < S && ok; ++s) {
      const PhysicalNode& node = snapshot.nodes[servers[static_cast<std::size_t>(s)]];
      double load = node.cpu_alloc_ghz;
      int nc = 0, nd = 0;
      for (int i = 0; i < V; ++i) {
        if (assign[static_cast<std::size_t>(i)] != s) continue;
        const Vnf& v = slice.vnfs[static_cast<std::size_t>(i)];
        load += v.cpu_demand_ghz;
        (v.plane == Plane::control ? nc : nd) += 1;
      }
      ok = load <= node.cpu_max_ghz + 1e-9 && nc <= slice.k_rel_control &&
           nd <= slice.k_rel_data;
    }
    if (ok) {
      // Shortest-path routing cost and capacity under this placement.
      std::fill(link_load.begin(), link_load.end(), 0.0);
      double obj = 0.0;
      double delay = fixed_vnf_delay;
      for (int i = 0; i < V; ++i) {
        const PhysicalNode& node =
            snapshot.nodes[servers[static_cast<std::size_t>(
                assign[static_cast<std::size_t>(i)])]];
        obj += node.cpu_alloc_ghz +
               slice.vnfs[static_cast<std::size_t>(i)].cpu_demand_ghz;
        delay += node.proc_delay_ms;
      }
      std::unordered_map<std::string, int> vnf_idx;
      for (int i = 0; i < V; ++i) {
        vnf_idx.emplace(slice.vnfs[static_cast<std::size_t>(i)].id, i);
      }
      for (const VirtualLink& vl : slice.vlinks) {
        std::size_t e = servers[static_cast<std::size_t>(
            assign[static_cast<std::size_t>(vnf_idx.at(vl.src))])];
        std::size_t f = servers[static_cast<std::size_t>(
            assign[static_cast<std::size_t>(vnf_idx.at(vl.dst))])];
        obj += dist[e][f];
        delay += dist[e][f];
        while (e != f) {
          std::size_t n = next_hop[e][f];
          link_load[index.link_between(e, n)] += vl.bw_demand_mbps;
          e = n;
        }
      }
      for (std::size_t l = 0; l < L && ok; ++l) {
        ok = snapshot.links[l].bw_alloc_mbps + link_load[l] <=
             snapshot.links[l].bw_max_mbps + 1e-9;
      }
      ok = ok && delay <= slice.delay_budget_ms + 1e-9;
      if (ok && obj < best_obj) {
        best_obj = obj;
        best.status = SolveStatus::optimal;
        best.placement.clear();
        best.flows.clear();
        best.objective_value = obj;
        best.realized_delay_ms = delay;
        for (int i = 0; i < V; ++i) {
          best.placement[slice.vnfs[static_cast<std::size_t>(i)].id] =
              snapshot
                  .nodes[servers[static_cast<std::size_t>(
                      assign[static_cast<std::size_t>(i)])]]
                  .id;
        }
        for (const VirtualLink& vl : slice.vlinks) {
          VlinkFlow flow;
          flow.src = vl.src;
          flow.dst = vl.dst;
          std::size_t e = servers[static_cast<std::size_t>(
              assign[static_cast<std::size_t>(vnf_idx.at(vl.src))])];
          std::size_t f = servers[static_cast<std::size_t>(
              assign[static_cast<std::size_t>(vnf_idx.at(vl.dst))])];
          while (e != f) {
            std::size_t n = next_hop[e][f];
            flow.arcs.push_back(
                {snapshot.nodes[e].id, snapshot.nodes[n].id, 1.0});
            e = n;
          }
          best.flows.push_back(std::move(flow));
        }
      }
    }
    // Advance the placement counter (VNF 0 most significant).
    int d = V - 1;
    while (d >= 0) {
      if (++assign[static_cast<std::size_t>(d)] < S) break;
      assign[static_cast<std::size_t>(d)] = 0;
      --d;
    }
    if (d < 0) break;
  }
  if (best.status != SolveStatus::optimal) {
    best.infeasible_reason = "no feasible placement";
  }
  return best;
}

}  // namespace slicesim
