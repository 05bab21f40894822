#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <limits>
#include <map>
#include <queue>
#include <set>
#include <stdexcept>
#include <utility>
#include <vector>

#include "slicesim/allocator.hpp"
#include "slicesim/errors.hpp"

namespace slicesim {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kCapEps = 1e-9;
// Incumbent pruning margin: a node whose relaxation bound comes within this
// of the incumbent cannot improve it meaningfully and is cut.
constexpr double kPruneEps = 1e-9;

struct BbNode {
  double bound = -kInf;
  int depth = 0;
  long seq = 0;
  std::vector<std::int8_t> fix;  // per placement column: -1 free, 0, 1
};

// Best bound first; on ties, plunge depth-first so an incumbent appears
// early (near-symmetric servers produce wide plateaus of equal bounds that
// would otherwise be frontier-searched), then insertion order.
struct BbNodeOrder {
  bool operator()(const BbNode& a, const BbNode& b) const {
    if (a.bound != b.bound) return a.bound > b.bound;  // min-heap on bound
    if (a.depth != b.depth) return a.depth < b.depth;  // deeper first
    return a.seq > b.seq;                              // then insertion order
  }
};

// Logical implications of a partial assignment, run to a fixed point:
// exactly-one rows, per-server residual capacity, and per-plane co-residency
// caps. Returns false when the partial assignment is contradictory.
class Propagator {
 public:
  explicit Propagator(const MilpInstance& inst) : inst_(inst) {
    const int S = static_cast<int>(inst.servers.size());
    const int V = static_cast<int>(inst.slice.vnfs.size());
    allowed_.resize(static_cast<std::size_t>(V * S));
    for (int j = 0; j < V * S; ++j) {
      allowed_[static_cast<std::size_t>(j)] =
          inst.model.col_hi()[static_cast<std::size_t>(j)] > 0.5;
    }
  }

  bool run(std::vector<std::int8_t>& fix) const {
    const int S = static_cast<int>(inst_.servers.size());
    const int V = static_cast<int>(inst_.slice.vnfs.size());
    bool changed = true;
    while (changed) {
      changed = false;
      for (int i = 0; i < V; ++i) {
        int ones = 0, open = -1, open_count = 0;
        for (int s = 0; s < S; ++s) {
          const int j = inst_.u_col(i, s);
          const std::int8_t f = fix[static_cast<std::size_t>(j)];
          if (f == 1) {
            if (!allowed_[static_cast<std::size_t>(j)]) return false;
            ++ones;
          } else if (f == -1 && allowed_[static_cast<std::size_t>(j)]) {
            open = s;
            ++open_count;
          }
        }
        if (ones > 1) return false;
        if (ones == 1) {
          for (int s = 0; s < S; ++s) {
            const int j = inst_.u_col(i, s);
            if (fix[static_cast<std::size_t>(j)] == -1) {
              fix[static_cast<std::size_t>(j)] = 0;
              changed = true;
            }
          }
        } else if (open_count == 0) {
          return false;
        } else if (open_count == 1) {
          fix[static_cast<std::size_t>(inst_.u_col(i, open))] = 1;
          changed = true;
        }
      }
      for (int s = 0; s < S; ++s) {
        const PhysicalNode& node =
            inst_.snapshot.nodes[inst_.servers[static_cast<std::size_t>(s)]];
        double load = node.cpu_alloc_ghz;
        int placed_c = 0, placed_d = 0;
        for (int i = 0; i < V; ++i) {
          if (fix[static_cast<std::size_t>(inst_.u_col(i, s))] != 1) continue;
          const Vnf& v = inst_.slice.vnfs[static_cast<std::size_t>(i)];
          load += v.cpu_demand_ghz;
          (v.plane == Plane::control ? placed_c : placed_d) += 1;
        }
        if (load > node.cpu_max_ghz + kCapEps) return false;
        if (placed_c > inst_.slice.k_rel_control) return false;
        if (placed_d > inst_.slice.k_rel_data) return false;
        for (int i = 0; i < V; ++i) {
          const int j = inst_.u_col(i, s);
          if (fix[static_cast<std::size_t>(j)] != -1) continue;
          const Vnf& v = inst_.slice.vnfs[static_cast<std::size_t>(i)];
          const bool over_cap =
              load + v.cpu_demand_ghz > node.cpu_max_ghz + kCapEps;
          const bool over_iso =
              v.plane == Plane::control
                  ? placed_c >= inst_.slice.k_rel_control
                  : placed_d >= inst_.slice.k_rel_data;
          if (over_cap || over_iso) {
            fix[static_cast<std::size_t>(j)] = 0;
            changed = true;
          }
        }
      }
    }
    return true;
  }

 private:
  const MilpInstance& inst_;
  std::vector<char> allowed_;
};

// Deterministic greedy embedding used to seed and improve the incumbent.
// Construction places VNFs in request order on the feasible server with the
// cheapest load-plus-routing increment. Because the cheapest rack can lack
// room for the whole slice and force a mid-chain hop onto another rack, the
// construction restarts once per rack with the first VNF anchored on that
// rack's cheapest server. Every plan is then polished by single-VNF
// relocations until no exact objective improvement remains, and the plans
// are routed in score order along shortest frozen-delay paths, charging
// bandwidth and checking the delay budget; the first plan that routes wins.
// When a relaxation solution is supplied, construction is instead restricted
// to servers carrying (near-)maximal fractional mass for each VNF, rounding
// the relaxation. Returns an empty placement when every candidate runs into
// a capacity, isolation, bandwidth, or delay wall; the exact search then
// continues without the upgrade. With the routing-cost floor rows keeping
// the relaxation bound tight, an optimal incumbent collapses the
// near-symmetric plateaus the branch and bound would otherwise sweep node by
// node.
Solution greedy_embed(const MilpInstance& inst,
                      const std::vector<double>* frac,
                      const std::vector<std::int8_t>* fix) {
  Solution none;  // status stays infeasible
  const int S = static_cast<int>(inst.servers.size());
  const int V = static_cast<int>(inst.slice.vnfs.size());
  const int NN = static_cast<int>(inst.snapshot.nodes.size());
  const GraphIndex index(inst.snapshot);

  // Shortest-path distances and parent links, computed lazily per source.
  std::vector<std::vector<double>> dist_from(static_cast<std::size_t>(NN));
  std::vector<std::vector<std::size_t>> via_link(static_cast<std::size_t>(NN));
  auto paths_from = [&](std::size_t start) -> const std::vector<double>& {
    auto& dist = dist_from[start];
    if (!dist.empty()) return dist;
    dist.assign(static_cast<std::size_t>(NN), kInf);
    auto& via = via_link[start];
    via.assign(static_cast<std::size_t>(NN), SIZE_MAX);
    using Item = std::pair<double, std::size_t>;
    std::priority_queue<Item, std::vector<Item>, std::greater<>> queue;
    dist[start] = 0.0;
    queue.emplace(0.0, start);
    while (!queue.empty()) {
      const auto [d, e] = queue.top();
      queue.pop();
      if (d > dist[e]) continue;
      for (std::size_t l : index.links_at(e)) {
        const PhysicalLink& link = inst.snapshot.links[l];
        const std::size_t other =
            index.node_of(index.node_of(link.a) == e ? link.b : link.a);
        const double nd = d + inst.link_delay_ms[l];
        if (nd < dist[other]) {
          dist[other] = nd;
          via[other] = l;
          queue.emplace(nd, other);
        }
      }
    }
    return dist;
  };

  std::unordered_map<std::string, int> vnf_index;
  for (int i = 0; i < V; ++i) {
    vnf_index.emplace(inst.slice.vnfs[static_cast<std::size_t>(i)].id, i);
  }
  std::vector<std::vector<int>> incident(static_cast<std::size_t>(V));
  for (std::size_t vl = 0; vl < inst.slice.vlinks.size(); ++vl) {
    const VirtualLink& v = inst.slice.vlinks[vl];
    incident[static_cast<std::size_t>(vnf_index.at(v.src))].push_back(
        static_cast<int>(vl));
    incident[static_cast<std::size_t>(vnf_index.at(v.dst))].push_back(
        static_cast<int>(vl));
  }

  const auto server_node = [&](int s) {
    return inst.servers[static_cast<std::size_t>(s)];
  };
  const auto alloc_of = [&](int s) {
    return inst.snapshot.nodes[server_node(s)].cpu_alloc_ghz;
  };
  std::vector<double> base_residual(static_cast<std::size_t>(S));
  for (int s = 0; s < S; ++s) {
    const PhysicalNode& node = inst.snapshot.nodes[server_node(s)];
    base_residual[static_cast<std::size_t>(s)] =
        node.cpu_max_ghz - node.cpu_alloc_ghz;
  }

  // Subtree fixes: a server ruled out for a VNF is never offered, and a
  // pinned pairing is forced, so every call returns a plan the caller's
  // search region actually contains.
  const auto allowed = [&](int i, int s) {
    return !fix ||
           (*fix)[static_cast<std::size_t>(inst.u_col(i, s))] != 0;
  };
  std::vector<int> pinned(static_cast<std::size_t>(V), -1);
  if (fix) {
    for (int i = 0; i < V; ++i) {
      for (int s = 0; s < S; ++s) {
        if ((*fix)[static_cast<std::size_t>(inst.u_col(i, s))] == 1) {
          pinned[static_cast<std::size_t>(i)] = s;
          break;
        }
      }
    }
  }

  std::vector<int> host;
  std::vector<double> residual;
  std::vector<int> used_c;
  std::vector<int> used_d;
  const auto feasible = [&](int i, int s) {
    if (!allowed(i, s)) return false;
    const Vnf& vnf = inst.slice.vnfs[static_cast<std::size_t>(i)];
    if (vnf.cpu_demand_ghz > residual[static_cast<std::size_t>(s)] + kCapEps) {
      return false;
    }
    const int used = vnf.plane == Plane::control
                         ? used_c[static_cast<std::size_t>(s)]
                         : used_d[static_cast<std::size_t>(s)];
    const int cap = vnf.plane == Plane::control ? inst.slice.k_rel_control
                                                : inst.slice.k_rel_data;
    return used < cap;
  };
  const auto place = [&](int i, int s) {
    const Vnf& vnf = inst.slice.vnfs[static_cast<std::size_t>(i)];
    host[static_cast<std::size_t>(i)] = s;
    residual[static_cast<std::size_t>(s)] -= vnf.cpu_demand_ghz;
    (vnf.plane == Plane::control
         ? used_c
         : used_d)[static_cast<std::size_t>(s)] += 1;
  };

  const auto construct = [&](int anchor) -> bool {
    host.assign(static_cast<std::size_t>(V), -1);
    residual = base_residual;
    used_c.assign(static_cast<std::size_t>(S), 0);
    used_d.assign(static_cast<std::size_t>(S), 0);
    for (int i = 0; i < V; ++i) {
      const Vnf& vnf = inst.slice.vnfs[static_cast<std::size_t>(i)];
      const int forced = pinned[static_cast<std::size_t>(i)];
      if (forced >= 0) {
        if (!feasible(i, forced)) return false;
        place(i, forced);
        continue;
      }
      if (i == 0 && anchor >= 0) {
        if (!feasible(0, anchor)) return false;
        place(0, anchor);
        continue;
      }
      double mass_floor = -kInf;
      if (frac) {
        double mass_max = -kInf;
        for (int s = 0; s < S; ++s) {
          if (feasible(i, s)) {
            mass_max = std::max(
                mass_max, (*frac)[static_cast<std::size_t>(inst.u_col(i, s))]);
          }
        }
        mass_floor = mass_max - 1e-6;
      }
      int pick = -1;
      double pick_cost = kInf;
      for (int s = 0; s < S; ++s) {
        if (!feasible(i, s)) continue;
        if (frac &&
            (*frac)[static_cast<std::size_t>(inst.u_col(i, s))] < mass_floor) {
          continue;
        }
        double cost = alloc_of(s) + vnf.cpu_demand_ghz;
        for (int vl : incident[static_cast<std::size_t>(i)]) {
          const VirtualLink& v =
              inst.slice.vlinks[static_cast<std::size_t>(vl)];
          const int a = vnf_index.at(v.src);
          const int other = a == i ? vnf_index.at(v.dst) : a;
          if (other == i || host[static_cast<std::size_t>(other)] < 0) {
            continue;
          }
          const std::size_t from = server_node(
              host[static_cast<std::size_t>(other)]);
          const double d = paths_from(from)[server_node(s)];
          if (!std::isfinite(d)) {
            cost = kInf;
            break;
          }
          cost += d;
        }
        if (cost < pick_cost - 1e-15) {
          pick_cost = cost;
          pick = s;
        }
      }
      if (pick < 0) return false;
      place(i, pick);
    }
    return true;
  };

  // One-move polish: relocate any single VNF to any feasible server whenever
  // the exact objective delta (placement coefficient plus incident
  // shortest-path routing) strictly improves. Sequential construction pairs
  // VNFs in request order and cannot see a cross-plane affinity that favours
  // a later pairing; single relocations recover those. Bandwidth is not
  // charged here; the routing pass below validates the final plan.
  const auto polish = [&]() {
    bool improved = true;
    for (int round = 0; improved && round < 2 * V + 4; ++round) {
      improved = false;
      for (int i = 0; i < V; ++i) {
        if (pinned[static_cast<std::size_t>(i)] >= 0) continue;
        const Vnf& vnf = inst.slice.vnfs[static_cast<std::size_t>(i)];
        const int from = host[static_cast<std::size_t>(i)];
        auto& used = vnf.plane == Plane::control ? used_c : used_d;
        const int cap = vnf.plane == Plane::control
                            ? inst.slice.k_rel_control
                            : inst.slice.k_rel_data;
        int best_s = -1;
        double best_delta = -1e-9;
        for (int s = 0; s < S; ++s) {
          if (s == from) continue;
          if (!allowed(i, s)) continue;
          if (vnf.cpu_demand_ghz >
              residual[static_cast<std::size_t>(s)] + kCapEps) {
            continue;
          }
          if (used[static_cast<std::size_t>(s)] >= cap) continue;
          double delta = alloc_of(s) - alloc_of(from);
          for (int vl : incident[static_cast<std::size_t>(i)]) {
            const VirtualLink& v =
                inst.slice.vlinks[static_cast<std::size_t>(vl)];
            const int a = vnf_index.at(v.src);
            const int other = a == i ? vnf_index.at(v.dst) : a;
            if (other == i) continue;
            const std::size_t oh = server_node(
                host[static_cast<std::size_t>(other)]);
            delta += paths_from(oh)[server_node(s)] -
                     paths_from(oh)[server_node(from)];
          }
          if (std::isfinite(delta) && delta < best_delta) {
            best_delta = delta;
            best_s = s;
          }
        }
        if (best_s >= 0) {
          residual[static_cast<std::size_t>(from)] += vnf.cpu_demand_ghz;
          residual[static_cast<std::size_t>(best_s)] -= vnf.cpu_demand_ghz;
          used[static_cast<std::size_t>(from)] -= 1;
          used[static_cast<std::size_t>(best_s)] += 1;
          host[static_cast<std::size_t>(i)] = best_s;
          improved = true;
        }
      }
    }
  };

  const auto plan_score = [&]() {
    double score = 0.0;
    for (int i = 0; i < V; ++i) {
      const Vnf& vnf = inst.slice.vnfs[static_cast<std::size_t>(i)];
      score += alloc_of(host[static_cast<std::size_t>(i)]) +
               vnf.cpu_demand_ghz;
    }
    for (const VirtualLink& vl : inst.slice.vlinks) {
      const int a = host[static_cast<std::size_t>(vnf_index.at(vl.src))];
      const int b = host[static_cast<std::size_t>(vnf_index.at(vl.dst))];
      if (a == b) continue;
      score += paths_from(server_node(a))[server_node(b)];
    }
    return score;
  };

  // Anchor set: the unanchored construction plus, when searching blind, the
  // cheapest server of every rack (servers grouped by their first non-server
  // neighbour). Relaxation-guided and fix-constrained calls already localise
  // the search.
  std::vector<int> anchors{-1};
  if (!frac && !fix) {
    std::map<int, int> rack_anchor;
    for (int s = 0; s < S; ++s) {
      auto [it, fresh] =
          rack_anchor.try_emplace(inst.server_rack[static_cast<std::size_t>(s)],
                                  s);
      if (!fresh && alloc_of(s) < alloc_of(it->second) - 1e-15) {
        it->second = s;
      }
    }
    for (const auto& [key, s] : rack_anchor) anchors.push_back(s);
  }

  struct Plan {
    double score;
    std::vector<int> host;
  };
  std::vector<Plan> plans;
  for (int anchor : anchors) {
    if (!construct(anchor)) continue;
    polish();
    plans.push_back(Plan{plan_score(), host});
  }
  std::stable_sort(plans.begin(), plans.end(),
                   [](const Plan& a, const Plan& b) { return a.score < b.score; });

  // Route each plan's virtual links along shortest paths, charging bandwidth;
  // the first plan that respects bandwidth and the delay budget is returned.
  for (const Plan& plan : plans) {
    host = plan.host;
    Solution sol;
    std::vector<double> bw_used(inst.snapshot.links.size(), 0.0);
    double objective = 0.0;
    double delay = 0.0;
    for (int i = 0; i < V; ++i) {
      const Vnf& vnf = inst.slice.vnfs[static_cast<std::size_t>(i)];
      const PhysicalNode& node = inst.snapshot.nodes[server_node(
          host[static_cast<std::size_t>(i)])];
      sol.placement[vnf.id] = node.id;
      objective += node.cpu_alloc_ghz + vnf.cpu_demand_ghz;
      delay += vnf.proc_delay_ms + node.proc_delay_ms;
    }
    bool routed = true;
    for (const VirtualLink& vl : inst.slice.vlinks) {
      VlinkFlow flow;
      flow.src = vl.src;
      flow.dst = vl.dst;
      const std::size_t from = server_node(
          host[static_cast<std::size_t>(vnf_index.at(vl.src))]);
      const std::size_t to = server_node(
          host[static_cast<std::size_t>(vnf_index.at(vl.dst))]);
      if (from != to) {
        paths_from(from);
        for (std::size_t e = to; e != from;) {
          const std::size_t l = via_link[from][e];
          if (l == SIZE_MAX) {
            routed = false;
            break;
          }
          const PhysicalLink& link = inst.snapshot.links[l];
          bw_used[l] += vl.bw_demand_mbps;
          if (bw_used[l] > link.bw_max_mbps - link.bw_alloc_mbps + kCapEps) {
            routed = false;
            break;
          }
          const std::size_t a = index.node_of(link.a);
          const std::size_t b = index.node_of(link.b);
          FlowArc arc;
          arc.from = e == b ? link.a : link.b;
          arc.to = e == b ? link.b : link.a;
          arc.value = 1.0;
          flow.arcs.push_back(arc);
          const double t = inst.link_delay_ms[l];
          objective += t;
          delay += t;
          e = e == b ? a : b;
        }
        if (!routed) break;
        std::reverse(flow.arcs.begin(), flow.arcs.end());
      }
      sol.flows.push_back(std::move(flow));
    }
    if (!routed) continue;
    if (delay > inst.slice.delay_budget_ms + 1e-9) continue;

    sol.status = SolveStatus::optimal;
    sol.objective_value = objective;
    sol.realized_delay_ms = delay;
    return sol;
  }
  return none;
}

Solution extract(const MilpInstance& inst, const lp::LpResult& best,
                 long nodes, long lp_iters) {
  Solution sol;
  sol.status = SolveStatus::optimal;
  sol.nodes_explored = nodes;
  sol.lp_iterations = lp_iters;

  const int S = static_cast<int>(inst.servers.size());
  const int V = static_cast<int>(inst.slice.vnfs.size());
  const int L = static_cast<int>(inst.snapshot.links.size());
  const int VL = static_cast<int>(inst.slice.vlinks.size());

  double objective = 0.0;
  double delay = 0.0;
  std::vector<int> host(static_cast<std::size_t>(V), -1);
  for (int i = 0; i < V; ++i) {
    for (int s = 0; s < S; ++s) {
      if (best.x[static_cast<std::size_t>(inst.u_col(i, s))] > 0.5) {
        host[static_cast<std::size_t>(i)] = s;
        break;
      }
    }
    const Vnf& v = inst.slice.vnfs[static_cast<std::size_t>(i)];
    const PhysicalNode& node =
        inst.snapshot.nodes[inst.servers[static_cast<std::size_t>(
            host[static_cast<std::size_t>(i)])]];
    sol.placement[v.id] = node.id;
    objective += node.cpu_alloc_ghz + v.cpu_demand_ghz;
    delay += v.proc_delay_ms + node.proc_delay_ms;
  }

  for (int vl = 0; vl < VL; ++vl) {
    const VirtualLink& vlink = inst.slice.vlinks[static_cast<std::size_t>(vl)];
    VlinkFlow flow;
    flow.src = vlink.src;
    flow.dst = vlink.dst;
    for (int l = 0; l < L; ++l) {
      const PhysicalLink& link =
          inst.snapshot.links[static_cast<std::size_t>(l)];
      for (int dir = 0; dir < 2; ++dir) {
        const double value =
            best.x[static_cast<std::size_t>(inst.y_col(vl, l, dir))];
        if (value < 1e-7) continue;  // solver noise below the check tolerance
        FlowArc arc;
        arc.from = dir == 0 ? link.a : link.b;
        arc.to = dir == 0 ? link.b : link.a;
        arc.value = value;
        flow.arcs.push_back(arc);
        const double t = inst.link_delay_ms[static_cast<std::size_t>(l)];
        objective += t * value;
        delay += t * value;
      }
    }
    sol.flows.push_back(std::move(flow));
  }

  sol.objective_value = objective;
  sol.realized_delay_ms = delay;
  return sol;
}

}  // namespace

Solution solve(const MilpInstance& inst, const MilpOptions& opts) {
  if (opts.branching != "max-fractional") {
    throw ValidationError("unknown branching rule '" + opts.branching + "'");
  }
  Solution sol;
  if (!inst.budget_feasible) {
    sol.infeasible_reason = "system CPU budget";
    return sol;
  }

  const auto started = std::chrono::steady_clock::now();
  lp::Model model = inst.model;  // bounds retightened per node
  const std::vector<double> base_hi = inst.model.col_hi();
  Propagator propagate(inst);

  std::priority_queue<BbNode, std::vector<BbNode>, BbNodeOrder> open;
  {
    BbNode root;
    root.fix.assign(static_cast<std::size_t>(inst.num_u), -1);
    open.push(std::move(root));
  }
  long seq = 1;
  long nodes = 0;
  long lp_iters = 0;
  double incumbent_obj = kInf;
  bool have_incumbent = false;
  Solution incumbent = greedy_embed(inst, nullptr, nullptr);
  if (incumbent.status == SolveStatus::optimal) {
    incumbent_obj = incumbent.objective_value;
    have_incumbent = true;
  }

  const int S = static_cast<int>(inst.servers.size());

  while (!open.empty()) {
    BbNode node = open.top();
    open.pop();
    if (have_incumbent && node.bound >= incumbent_obj - kPruneEps) continue;
    if (!propagate.run(node.fix)) continue;

    if (opts.node_limit > 0 && nodes >= opts.node_limit) {
      throw ResourceLimitError("embedding solve exceeded the node limit (" +
                               std::to_string(opts.node_limit) + ")");
    }
    if (opts.time_limit_s > 0.0) {
      const std::chrono::duration<double> elapsed =
          std::chrono::steady_clock::now() - started;
      if (elapsed.count() > opts.time_limit_s) {
        throw ResourceLimitError("embedding solve exceeded the time limit");
      }
    }
    ++nodes;

    for (int j = 0; j < inst.num_u; ++j) {
      const std::int8_t f = node.fix[static_cast<std::size_t>(j)];
      if (f == 0) {
        model.set_col_bounds(j, 0.0, 0.0);
      } else if (f == 1) {
        model.set_col_bounds(j, 1.0, 1.0);
      } else {
        model.set_col_bounds(j, 0.0, base_hi[static_cast<std::size_t>(j)]);
      }
    }

    lp::LpResult res = lp::solve_lp(model, opts.lp);
    lp_iters += res.iterations;
    if (res.status == lp::LpStatus::iteration_limit) {
      throw ResourceLimitError(
          "relaxation exceeded the simplex iteration limit");
    }
    if (res.status == lp::LpStatus::unbounded) {
      throw std::logic_error("bounded relaxation reported unbounded");
    }
    if (res.status == lp::LpStatus::infeasible) continue;
    if (have_incumbent && res.objective >= incumbent_obj - kPruneEps) continue;

    // Branch on the fractional indicator with the largest fractional part;
    // the ascending scan breaks ties toward the lowest VNF/server index.
    int branch_col = -1;
    double branch_frac = 0.0;
    for (int j = 0; j < inst.num_u; ++j) {
      const double x = res.x[static_cast<std::size_t>(j)];
      const double f = x - std::floor(x);
      if (std::min(f, 1.0 - f) > opts.int_tol && f > branch_frac) {
        branch_frac = f;
        branch_col = j;
      }
    }

    if (branch_col < 0) {
      incumbent_obj = res.objective;
      incumbent = extract(inst, res, 0, 0);
      have_incumbent = true;
      continue;
    }

    // Round this node's relaxation into a full embedding; a hit at the bound
    // value retires the whole plateau of equal-bound open nodes.
    {
      Solution rounded = greedy_embed(inst, &res.x, &node.fix);
      if (rounded.status == SolveStatus::optimal &&
          rounded.objective_value < incumbent_obj) {
        incumbent = std::move(rounded);
        incumbent_obj = incumbent.objective_value;
        have_incumbent = true;
        if (res.objective >= incumbent_obj - kPruneEps) continue;
      }
    }

    // Reduced-cost fixing: a nonbasic indicator whose reduced cost already
    // spans the incumbent gap can never flip in this subtree.
    if (have_incumbent) {
      const double gap = incumbent_obj - kPruneEps - res.objective;
      for (int j = 0; j < inst.num_u; ++j) {
        if (node.fix[static_cast<std::size_t>(j)] != -1) continue;
        const double x = res.x[static_cast<std::size_t>(j)];
        const double rc = res.reduced_cost[static_cast<std::size_t>(j)];
        if (x <= opts.int_tol && rc > gap) {
          node.fix[static_cast<std::size_t>(j)] = 0;
        } else if (x >= 1.0 - opts.int_tol && -rc > gap) {
          node.fix[static_cast<std::size_t>(j)] = 1;
        }
      }
    }

    // Dichotomy on the whole candidate server set of the branching VNF
    // (the exactly-one row makes any split of the open servers a valid
    // partition). Zeroing half the set per child collapses the support in
    // logarithmically many levels; branching a single indicator instead lets
    // near-equal-cost servers absorb the displaced fraction one at a time
    // and the relaxation bound never moves.
    const int branch_vnf = branch_col / S;
    std::vector<int> open_servers;
    for (int s = 0; s < S; ++s) {
      if (node.fix[static_cast<std::size_t>(inst.u_col(branch_vnf, s))] == -1) {
        open_servers.push_back(s);
      }
    }

    if (open_servers.size() < 2) {
      // Single open candidate: plain variable dichotomy.
      BbNode one;
      one.bound = res.objective;
      one.depth = node.depth + 1;
      one.seq = seq++;
      one.fix = node.fix;
      one.fix[static_cast<std::size_t>(branch_col)] = 1;
      open.push(std::move(one));

      BbNode zero;
      zero.bound = res.objective;
      zero.depth = node.depth + 1;
      zero.seq = seq++;
      zero.fix = std::move(node.fix);
      zero.fix[static_cast<std::size_t>(branch_col)] = 0;
      open.push(std::move(zero));
      continue;
    }

    // Split along whole-rack boundaries first: the relaxation likes to hold
    // half-weight copies of a placement in two racks (internal traffic priced
    // at zero between the copies), and only separating the racks forces the
    // mass to commit. Heaviest racks up to half the assignment mass form one
    // side; servers are the fallback when a single rack holds every open
    // candidate.
    std::map<int, double> rack_mass;
    for (int s : open_servers) {
      rack_mass[inst.server_rack[static_cast<std::size_t>(s)]] +=
          res.x[static_cast<std::size_t>(inst.u_col(branch_vnf, s))];
    }

    std::vector<char> zero_in_heavy(open_servers.size(), 0);
    if (rack_mass.size() >= 2) {
      std::vector<std::pair<int, double>> racks(rack_mass.begin(),
                                                rack_mass.end());
      std::sort(racks.begin(), racks.end(), [](const auto& a, const auto& b) {
        if (a.second != b.second) return a.second > b.second;
        return a.first < b.first;
      });
      std::size_t take = 0;
      double mass = 0.0;
      while (take + 1 < racks.size() && mass < 0.5) {
        mass += racks[take].second;
        ++take;
      }
      std::set<int> heavy_racks;
      for (std::size_t p = 0; p < take; ++p) heavy_racks.insert(racks[p].first);
      for (std::size_t p = 0; p < open_servers.size(); ++p) {
        zero_in_heavy[p] =
            heavy_racks.count(
                inst.server_rack[static_cast<std::size_t>(open_servers[p])])
                ? 0
                : 1;
      }
    } else {
      // Heaviest servers (by fractional value, ties to the lowest index) up
      // to half the assignment mass.
      std::sort(open_servers.begin(), open_servers.end(), [&](int a, int b) {
        const double xa =
            res.x[static_cast<std::size_t>(inst.u_col(branch_vnf, a))];
        const double xb =
            res.x[static_cast<std::size_t>(inst.u_col(branch_vnf, b))];
        if (xa != xb) return xa > xb;
        return a < b;
      });
      std::size_t split = 0;
      double mass = 0.0;
      while (split + 1 < open_servers.size() && mass < 0.5) {
        mass +=
            res.x[static_cast<std::size_t>(inst.u_col(branch_vnf,
                                                      open_servers[split]))];
        ++split;
      }
      for (std::size_t p = split; p < open_servers.size(); ++p) {
        zero_in_heavy[p] = 1;
      }
    }

    BbNode heavy;  // keeps the heavy half, zeroes the rest
    heavy.bound = res.objective;
    heavy.depth = node.depth + 1;
    heavy.seq = seq++;
    heavy.fix = node.fix;
    for (std::size_t p = 0; p < open_servers.size(); ++p) {
      if (zero_in_heavy[p]) {
        heavy.fix[static_cast<std::size_t>(
            inst.u_col(branch_vnf, open_servers[p]))] = 0;
      }
    }
    open.push(std::move(heavy));

    BbNode light;  // complement: zeroes the heavy half
    light.bound = res.objective;
    light.depth = node.depth + 1;
    light.seq = seq++;
    light.fix = std::move(node.fix);
    for (std::size_t p = 0; p < open_servers.size(); ++p) {
      if (!zero_in_heavy[p]) {
        light.fix[static_cast<std::size_t>(
            inst.u_col(branch_vnf, open_servers[p]))] = 0;
      }
    }
    open.push(std::move(light));
  }

  if (!have_incumbent) {
    sol.nodes_explored = nodes;
    sol.lp_iterations = lp_iters;
    sol.infeasible_reason = "no feasible placement";
    return sol;
  }
  incumbent.nodes_explored = nodes;
  incumbent.lp_iterations = lp_iters;
  return incumbent;
}

}  // namespace slicesim
