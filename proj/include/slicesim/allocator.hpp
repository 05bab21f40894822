#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "slicesim/lp.hpp"
#include "slicesim/slice.hpp"
#include "slicesim/topology.hpp"

namespace slicesim {

// Options for the exact embedding solver. Limits of 0 mean unlimited; when a
// limit trips, solve() throws ResourceLimitError rather than returning a
// possibly suboptimal answer.
struct MilpOptions {
  double time_limit_s = 0.0;
  long node_limit = 0;
  double int_tol = 1e-6;  // |u - round(u)| below this counts as integral
  std::string branching = "max-fractional";
  lp::SolverOptions lp;
};

// The mixed-integer program that embeds one slice request into a frozen
// snapshot of the network. Columns: one placement indicator per (VNF, server)
// followed by one unit-flow variable per (virtual link, physical arc), both
// orientations of every undirected link. The relaxation stored in `model`
// keeps the placement indicators continuous in [0,1]; branch and bound
// restores integrality.
struct MilpInstance {
  NetworkGraph snapshot;
  SliceRequest slice;
  std::vector<std::size_t> servers;   // node indices hosting VNFs
  std::vector<double> link_delay_ms;  // per-link delay frozen from snapshot
  lp::Model model;
  int num_u = 0;
  int num_y = 0;

  // Virtual links whose endpoints can never co-reside (same plane with a
  // co-residency cap of 1); each carries a flow-cost floor row that keeps
  // the relaxation from cancelling their routing cost.
  std::vector<int> sep_vlinks;
  // Names of the per-plane-component routing-cost floor rows, in emission
  // order: a connected group of n same-plane VNFs under co-residency cap k
  // spreads over at least ceil(n/k) servers, so at least ceil(n/k)-1 of its
  // virtual links cross between servers and each pays at least the minimum
  // inter-server distance.
  std::vector<std::string> minflow_rows;
  // Rack ordinal per candidate server (servers grouped by their first
  // non-server neighbour): placements inside one rack are near-symmetric, so
  // the branching rule splits candidate sets along rack boundaries first.
  std::vector<int> server_rack;

  // Scalar admission check: total CPU demand vs. total residual capacity. A
  // failed check makes solve() return infeasible without optimizing.
  bool budget_feasible = true;
  double system_residual_ghz = 0.0;

  int u_col(int vnf, int server_slot) const {
    return vnf * static_cast<int>(servers.size()) + server_slot;
  }
  // dir 0 follows the link's (a -> b) orientation, dir 1 the reverse.
  int y_col(int vlink, int link, int dir) const {
    return num_u +
           (vlink * static_cast<int>(snapshot.links.size()) + link) * 2 + dir;
  }

  std::vector<std::string> col_names() const;  // u_<vnf>_<node>, y_<i>_<j>_<e>_<f>
  std::vector<std::string> row_names() const;
  std::vector<int> binary_cols() const;  // all placement indicators
};

// Builds the full instance against the given snapshot: least-loaded placement
// objective plus flow delay cost; assignment, node/link residual capacity,
// per-virtual-link flow conservation, per-plane co-residency caps, and the
// end-to-end delay budget.
MilpInstance build_instance(const NetworkGraph& snapshot,
                            const SliceRequest& slice);

enum class SolveStatus { optimal, infeasible };

// One arc of a routed virtual link, carrying `value` of the link's unit flow.
struct FlowArc {
  std::string from;
  std::string to;
  double value = 0.0;
};

struct VlinkFlow {
  std::string src;
  std::string dst;
  std::vector<FlowArc> arcs;
};

struct Solution {
  SolveStatus status = SolveStatus::infeasible;
  std::map<std::string, std::string> placement;  // VNF id -> server node id
  std::vector<VlinkFlow> flows;                  // aligned with slice.vlinks
  double objective_value = 0.0;
  double realized_delay_ms = 0.0;
  long nodes_explored = 0;
  long lp_iterations = 0;
  std::string infeasible_reason;
};

// Exact solve by best-first branch and bound on the placement indicators.
// Deterministic: branches on the fractional indicator with the largest
// fractional part (ties to the lowest VNF index, then server index), explores
// the fix-to-one child first, and prunes with the LP bound. Throws
// ResourceLimitError when a configured node/time limit trips.
Solution solve(const MilpInstance& inst, const MilpOptions& opts = {});

struct FamilyCheck {
  std::string family;
  bool pass = false;
  double worst_violation = 0.0;  // most negative slack observed (0 if none)
  std::string detail;
};

struct ValidationReport {
  std::vector<FamilyCheck> checks;
  bool all_pass = false;
};

// Re-checks every constraint family of the model against the snapshot,
// independently of the solver's own arithmetic.
ValidationReport validate_solution(const MilpInstance& inst,
                                   const Solution& sol, double tol = 1e-6);

// Exhaustive reference solver for tiny cases (at most 6 servers and 4 VNFs):
// enumerates every placement, prices flows by per-virtual-link shortest paths
// over the frozen link delays, and returns the global optimum. Intended for
// tests; throws ValidationError above the size guard.
Solution oracle_solve(const NetworkGraph& snapshot, const SliceRequest& slice);

// LP-format text of the instance with the canonical variable names.
std::string export_lp_text(const MilpInstance& inst);

}  // namespace slicesim
