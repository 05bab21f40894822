#include <bit>
#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "doctest.h"
#include "slicesim/allocator.hpp"
#include "slicesim/errors.hpp"
#include "slicesim/rng.hpp"

using namespace slicesim;

namespace {

NetworkGraph topo(std::size_t servers, std::vector<std::size_t> fanouts) {
  return generate_topology(servers, fanouts);
}

void set_cpu_alloc(NetworkGraph& g, const std::string& id, double ghz) {
  for (PhysicalNode& n : g.nodes) {
    if (n.id == id) {
      n.cpu_alloc_ghz = ghz;
      return;
    }
  }
  REQUIRE(false);
}

Vnf vnf(std::string id, Plane plane, double cpu, double delay = 0.3) {
  Vnf v;
  v.id = std::move(id);
  v.plane = plane;
  v.cpu_demand_ghz = cpu;
  v.proc_delay_ms = delay;
  return v;
}

SliceRequest chain_slice(std::vector<Vnf> vnfs, double budget_ms = 15.0,
                         int k_rel = 10) {
  SliceRequest s;
  s.id = "hand";
  s.vnfs = std::move(vnfs);
  for (std::size_t i = 0; i + 1 < s.vnfs.size(); ++i) {
    s.vlinks.push_back({s.vnfs[i].id, s.vnfs[i + 1].id, 50.0});
  }
  s.delay_budget_ms = budget_ms;
  s.k_rel_control = k_rel;
  s.k_rel_data = k_rel;
  return s;
}

const FamilyCheck& family(const ValidationReport& r, const std::string& name) {
  for (const FamilyCheck& c : r.checks) {
    if (c.family == name) return c;
  }
  REQUIRE(false);
  static FamilyCheck none;
  return none;
}

}  // namespace

TEST_CASE("allocator: single-VNF instance has the documented shape") {
  NetworkGraph g = topo(2, {2});
  SliceRequest s = chain_slice({vnf("v0", Plane::control, 1.0)});
  MilpInstance inst = build_instance(g, s);

  CHECK(inst.num_u == 2);
  CHECK(inst.num_y == 0);
  CHECK(inst.servers.size() == 2);
  CHECK(inst.budget_feasible);
  CHECK(inst.system_residual_ghz == doctest::Approx(50.0));

  // First row: the VNF lands on exactly one server.
  REQUIRE(inst.model.num_rows() >= 1);
  CHECK(inst.model.row_lo()[0] == 1.0);
  CHECK(inst.model.row_hi()[0] == 1.0);
  int assign_entries = 0;
  for (const auto& e : inst.model.entries()) {
    if (e.row == 0) {
      CHECK(e.value == 1.0);
      ++assign_entries;
    }
  }
  CHECK(assign_entries == 2);

  // Rows: 1 assignment + 2 node caps + 4 link caps + 0 flow + 2 control
  // isolation + 1 delay (no data-plane VNFs, so no data rows).
  CHECK(inst.model.num_rows() == 1 + 2 + 4 + 0 + 2 + 1);
  CHECK(inst.row_names().size() ==
        static_cast<std::size_t>(inst.model.num_rows()));
  CHECK(inst.col_names().size() ==
        static_cast<std::size_t>(inst.num_u + inst.num_y));
}

TEST_CASE("allocator: variable counts scale with topology and slice size") {
  NetworkGraph g = topo(20, {2, 2});
  Rng rng(7);
  SliceGenParams params;
  SliceRequest s = generate_slice(rng, params);
  MilpInstance inst = build_instance(g, s);
  const int links = static_cast<int>(g.links.size());
  CHECK(links == static_cast<int>(g.nodes.size()) - 1);
  CHECK(inst.num_u == 10 * 20);
  CHECK(inst.num_y == 9 * 2 * links);
  CHECK(inst.model.num_cols() == inst.num_u + inst.num_y);
}

TEST_CASE("allocator: system budget short-circuits to infeasible") {
  NetworkGraph g = topo(2, {2});
  for (PhysicalNode& n : g.nodes) {
    if (n.kind == NodeKind::server) n.cpu_alloc_ghz = 21.0;  // 4 GHz residual
  }
  SliceRequest s = chain_slice({vnf("a", Plane::control, 3.0),
                                vnf("b", Plane::data, 3.0),
                                vnf("c", Plane::data, 3.0)});
  MilpInstance inst = build_instance(g, s);
  CHECK_FALSE(inst.budget_feasible);
  CHECK(inst.system_residual_ghz == doctest::Approx(8.0));
  Solution sol = solve(inst);
  CHECK(sol.status == SolveStatus::infeasible);
  CHECK(sol.infeasible_reason == "system CPU budget");
  CHECK(sol.nodes_explored == 0);
}

TEST_CASE("allocator: symmetric servers resolve to the lowest index") {
  NetworkGraph g = topo(2, {2});
  SliceRequest s = chain_slice({vnf("v0", Plane::control, 1.25)}, 15.0, 1);
  MilpInstance inst = build_instance(g, s);
  Solution sol = solve(inst);
  REQUIRE(sol.status == SolveStatus::optimal);
  CHECK(sol.placement.at("v0") == "s0");
  CHECK(sol.objective_value == doctest::Approx(1.25).epsilon(1e-9));
  CHECK(validate_solution(inst, sol).all_pass);
}

TEST_CASE("allocator: load-aware objective prefers the idle server") {
  NetworkGraph g = topo(2, {2});
  set_cpu_alloc(g, "s0", 5.0);
  SliceRequest s = chain_slice({vnf("v0", Plane::data, 1.0)}, 15.0, 1);
  MilpInstance inst = build_instance(g, s);
  Solution sol = solve(inst);
  REQUIRE(sol.status == SolveStatus::optimal);
  CHECK(sol.placement.at("v0") == "s1");
  CHECK(sol.objective_value == doctest::Approx(1.0).epsilon(1e-9));
}

TEST_CASE("allocator: co-located endpoints route no flow") {
  NetworkGraph g = topo(1, {1});
  SliceRequest s = chain_slice(
      {vnf("v0", Plane::control, 1.0), vnf("v1", Plane::control, 1.0)}, 15.0,
      2);
  MilpInstance inst = build_instance(g, s);
  Solution sol = solve(inst);
  REQUIRE(sol.status == SolveStatus::optimal);
  CHECK(sol.placement.at("v0") == "s0");
  CHECK(sol.placement.at("v1") == "s0");
  REQUIRE(sol.flows.size() == 1);
  CHECK(sol.flows[0].arcs.empty());
  // Objective and delay carry only CPU and processing terms.
  CHECK(sol.objective_value == doctest::Approx(2.0).epsilon(1e-9));
  CHECK(sol.realized_delay_ms == doctest::Approx(0.3 + 0.3 + 0.2 + 0.2));
  CHECK(validate_solution(inst, sol).all_pass);
}

TEST_CASE("allocator: isolation cap forces separation and a routed path") {
  NetworkGraph g = topo(2, {2});
  SliceRequest s = chain_slice(
      {vnf("v0", Plane::control, 1.0), vnf("v1", Plane::control, 1.0)}, 15.0,
      1);
  MilpInstance inst = build_instance(g, s);
  Solution sol = solve(inst);
  REQUIRE(sol.status == SolveStatus::optimal);
  CHECK(sol.placement.at("v0") != sol.placement.at("v1"));
  REQUIRE(sol.flows.size() == 1);
  // Tree route s_x - edge - core - edge - s_y: four arcs at full unit flow.
  CHECK(sol.flows[0].arcs.size() == 4);
  for (const FlowArc& a : sol.flows[0].arcs) {
    CHECK(a.value == doctest::Approx(1.0).epsilon(1e-7));
  }
  // All links idle in the snapshot: 4 x 0.13 ms link delay.
  CHECK(sol.realized_delay_ms ==
        doctest::Approx(0.3 * 2 + 0.2 * 2 + 4 * 0.13).epsilon(1e-7));
  CHECK(validate_solution(inst, sol).all_pass);
}

TEST_CASE("allocator: delay budget below fixed delays is infeasible") {
  NetworkGraph g = topo(2, {2});
  SliceRequest s = chain_slice(
      {vnf("v0", Plane::control, 1.0), vnf("v1", Plane::data, 1.0)}, 0.5, 1);
  MilpInstance inst = build_instance(g, s);
  Solution sol = solve(inst);
  CHECK(sol.status == SolveStatus::infeasible);

  // Monotone: any tighter budget stays infeasible.
  for (double budget : {0.4, 0.25, 0.1}) {
    SliceRequest tighter = s;
    tighter.delay_budget_ms = budget;
    Solution again = solve(build_instance(g, tighter));
    CHECK(again.status == SolveStatus::infeasible);
  }
}

TEST_CASE("allocator: fractional relaxation with no integral packing") {
  // Two servers with 1.0 GHz residual each cannot host VNFs of 0.6 + 0.6 +
  // 0.8 GHz integrally (any pair overflows), but the relaxation splits them.
  NetworkGraph g = topo(2, {2});
  set_cpu_alloc(g, "s0", 24.0);
  set_cpu_alloc(g, "s1", 24.0);
  SliceRequest s = chain_slice({vnf("a", Plane::control, 0.6),
                                vnf("b", Plane::control, 0.6),
                                vnf("c", Plane::control, 0.8)},
                               15.0, 3);
  MilpInstance inst = build_instance(g, s);
  CHECK(inst.budget_feasible);
  CHECK(lp::solve_lp(inst.model).status == lp::LpStatus::optimal);

  Solution sol = solve(inst);
  CHECK(sol.status == SolveStatus::infeasible);
  CHECK(sol.nodes_explored >= 1);
}

TEST_CASE("allocator: node and time limits interrupt a real search") {
  // Per-unit costs favor stuffing the looser server, so the relaxation
  // splits the big VNF and the search needs a second node to finish.
  NetworkGraph g = topo(2, {2});
  set_cpu_alloc(g, "s0", 23.8);  // residual 1.2
  set_cpu_alloc(g, "s1", 24.0);  // residual 1.0
  SliceRequest s = chain_slice({vnf("a", Plane::control, 0.9),
                                vnf("b", Plane::control, 0.7),
                                vnf("c", Plane::control, 0.4)},
                               15.0, 2);
  MilpInstance inst = build_instance(g, s);

  Solution sol = solve(inst);
  REQUIRE(sol.status == SolveStatus::optimal);
  CHECK(sol.nodes_explored >= 2);
  // Only one integral packing fits: the big VNF alone on the tighter server.
  CHECK(sol.placement.at("a") == "s1");
  CHECK(sol.placement.at("b") == "s0");
  CHECK(sol.placement.at("c") == "s0");
  CHECK(validate_solution(inst, sol).all_pass);
  Solution ref = oracle_solve(g, s);
  REQUIRE(ref.status == SolveStatus::optimal);
  CHECK(sol.objective_value ==
        doctest::Approx(ref.objective_value).epsilon(1e-9));

  MilpOptions limited;
  limited.node_limit = 1;
  CHECK_THROWS_AS(solve(inst, limited), ResourceLimitError);

  MilpOptions timed;
  timed.time_limit_s = 1e-12;
  CHECK_THROWS_AS(solve(inst, timed), ResourceLimitError);

  MilpOptions rule;
  rule.branching = "pseudo-cost";
  CHECK_THROWS_AS(solve(inst, rule), ValidationError);
}

TEST_CASE("allocator: capacity pattern forces the unique placement") {
  NetworkGraph g = topo(2, {2});
  set_cpu_alloc(g, "s0", 23.5);  // residual 1.5: only the small VNF fits
  SliceRequest s = chain_slice(
      {vnf("big", Plane::control, 2.0), vnf("small", Plane::control, 1.0)},
      15.0, 1);
  MilpInstance inst = build_instance(g, s);
  Solution sol = solve(inst);
  REQUIRE(sol.status == SolveStatus::optimal);
  CHECK(sol.placement.at("big") == "s1");
  CHECK(sol.placement.at("small") == "s0");

  Solution ref = oracle_solve(g, s);
  REQUIRE(ref.status == SolveStatus::optimal);
  CHECK(ref.placement.at("big") == "s1");
  CHECK(ref.placement.at("small") == "s0");
  CHECK(sol.objective_value ==
        doctest::Approx(ref.objective_value).epsilon(1e-9));
}

TEST_CASE("allocator: randomized tiny instances match the exhaustive oracle") {
  Rng rng(0x5EED5u);
  const std::vector<std::pair<std::size_t, std::vector<std::size_t>>> shapes =
      {{4, {2, 2}}, {6, {2, 3}}, {5, {5}}, {6, {3}}, {2, {2}}};
  int optimal_seen = 0, infeasible_seen = 0;
  for (int trial = 0; trial < 60; ++trial) {
    CAPTURE(trial);
    const auto& shape = shapes[rng.next_below(shapes.size())];
    NetworkGraph g = topo(shape.first, shape.second);
    const double load_level = trial % 3 == 0 ? 0.0 : rng.uniform(22.5, 24.9);
    for (PhysicalNode& n : g.nodes) {
      if (n.kind == NodeKind::server && load_level > 0.0) {
        n.cpu_alloc_ghz = rng.uniform(0.9, 1.0) * load_level;
      }
    }
    SliceGenParams params;
    params.vnf_count = 1 + static_cast<int>(rng.next_below(4));
    params.k_rel_control = 1 + static_cast<int>(rng.next_below(2));
    params.k_rel_data = 1 + static_cast<int>(rng.next_below(2));
    params.shape = rng.next_double() < 0.5 ? VlinkShape::chain
                                           : VlinkShape::random_dag;
    params.delay_budget_ms = rng.uniform(0.8, 10.0);
    SliceRequest s = generate_slice(rng, params);

    MilpInstance inst = build_instance(g, s);
    Solution got = solve(inst);
    Solution ref = oracle_solve(g, s);
    REQUIRE(got.status == ref.status);
    if (got.status == SolveStatus::optimal) {
      CHECK(got.objective_value ==
            doctest::Approx(ref.objective_value).epsilon(1e-6).scale(1.0));
      CHECK(validate_solution(inst, got).all_pass);
      ++optimal_seen;
    } else {
      ++infeasible_seen;
    }
  }
  CHECK(optimal_seen >= 20);
  CHECK(infeasible_seen >= 10);
}

TEST_CASE("allocator: solver outputs stay sound on a mid-size fabric") {
  Rng rng(0xFAB5u);
  NetworkGraph g = topo(20, {2, 2});
  int solved = 0;
  for (int trial = 0; trial < 30; ++trial) {
    CAPTURE(trial);
    for (PhysicalNode& n : g.nodes) {
      if (n.kind == NodeKind::server) {
        n.cpu_alloc_ghz = rng.uniform(0.0, 20.0);
      }
    }
    for (PhysicalLink& l : g.links) {
      l.bw_alloc_mbps = rng.uniform(0.0, 0.3) * l.bw_max_mbps;
    }
    SliceGenParams params;
    params.vnf_count = 4 + static_cast<int>(rng.next_below(7));
    params.k_rel_control = 2 + static_cast<int>(rng.next_below(2));
    params.k_rel_data = params.k_rel_control;
    params.shape = trial % 2 ? VlinkShape::chain : VlinkShape::random_dag;
    SliceRequest s = generate_slice(rng, params);

    MilpInstance inst = build_instance(g, s);
    Solution sol = solve(inst);
    if (sol.status != SolveStatus::optimal) continue;
    ++solved;
    ValidationReport report = validate_solution(inst, sol);
    for (const FamilyCheck& c : report.checks) {
      CAPTURE(c.family);
      CAPTURE(c.detail);
      CHECK(c.pass);
    }
    CHECK(report.all_pass);
  }
  CHECK(solved >= 20);

  // One fully isolated slice: per plane, every VNF on its own server.
  for (PhysicalNode& n : g.nodes) {
    if (n.kind == NodeKind::server) n.cpu_alloc_ghz = rng.uniform(0.0, 18.0);
  }
  SliceGenParams params;
  params.vnf_count = 6;
  params.k_rel_control = 1;
  params.k_rel_data = 1;
  SliceRequest s = generate_slice(rng, params);
  MilpInstance inst = build_instance(g, s);
  Solution sol = solve(inst);
  REQUIRE(sol.status == SolveStatus::optimal);
  CHECK(validate_solution(inst, sol).all_pass);
  for (Plane plane : {Plane::control, Plane::data}) {
    std::vector<std::string> hosts;
    for (const Vnf& v : s.vnfs) {
      if (v.plane == plane) hosts.push_back(sol.placement.at(v.id));
    }
    std::sort(hosts.begin(), hosts.end());
    CHECK(std::adjacent_find(hosts.begin(), hosts.end()) == hosts.end());
  }
}

TEST_CASE("allocator: validator flags hand-built defects") {
  NetworkGraph g = topo(2, {2});
  SliceRequest s = chain_slice(
      {vnf("v0", Plane::control, 1.0), vnf("v1", Plane::control, 1.0)}, 15.0,
      1);
  MilpInstance inst = build_instance(g, s);
  Solution sol = solve(inst);
  REQUIRE(sol.status == SolveStatus::optimal);
  REQUIRE(validate_solution(inst, sol).all_pass);

  SUBCASE("co-residency beyond the cap") {
    Solution bad = sol;
    bad.placement["v0"] = bad.placement["v1"];
    ValidationReport r = validate_solution(inst, bad);
    CHECK_FALSE(r.all_pass);
    CHECK_FALSE(family(r, "isolation").pass);
    CHECK(family(r, "isolation").worst_violation == doctest::Approx(1.0));
  }

  SUBCASE("flow leak at a transit node") {
    Solution bad = sol;
    REQUIRE(bad.flows[0].arcs.size() == 4);
    bad.flows[0].arcs.erase(bad.flows[0].arcs.begin() + 1);
    ValidationReport r = validate_solution(inst, bad);
    CHECK_FALSE(r.all_pass);
    CHECK_FALSE(family(r, "flow-conservation").pass);
    CHECK(family(r, "flow-conservation").detail.find("leaks") !=
          std::string::npos);
  }

  SUBCASE("overstuffed server") {
    NetworkGraph tight = g;
    set_cpu_alloc(tight, "s0", 24.5);
    MilpInstance tight_inst = build_instance(tight, s);
    Solution bad = sol;
    bad.placement["v0"] = "s0";
    bad.placement["v1"] = "s0";
    bad.flows[0].arcs.clear();
    ValidationReport r = validate_solution(tight_inst, bad);
    CHECK_FALSE(family(r, "node-capacity").pass);
    CHECK(family(r, "node-capacity").worst_violation ==
          doctest::Approx(1.5));
  }

  SUBCASE("unplaced VNF") {
    Solution bad = sol;
    bad.placement.erase("v1");
    ValidationReport r = validate_solution(inst, bad);
    CHECK_FALSE(r.all_pass);
    CHECK_FALSE(family(r, "assignment").pass);
  }

  SUBCASE("non-optimal status reported as such") {
    Solution bad;
    bad.status = SolveStatus::infeasible;
    ValidationReport r = validate_solution(inst, bad);
    CHECK_FALSE(r.all_pass);
    CHECK(r.checks.size() == 1);
    CHECK(r.checks[0].family == "status");
  }
}

TEST_CASE("allocator: oracle guards its size limits") {
  NetworkGraph g = topo(8, {2, 2});
  SliceRequest s = chain_slice({vnf("v0", Plane::control, 1.0)});
  CHECK_THROWS_AS(oracle_solve(g, s), ValidationError);

  NetworkGraph small = topo(2, {2});
  SliceRequest big = chain_slice(
      {vnf("a", Plane::control, 0.6), vnf("b", Plane::control, 0.6),
       vnf("c", Plane::data, 0.6), vnf("d", Plane::data, 0.6),
       vnf("e", Plane::data, 0.6)},
      15.0, 5);
  CHECK_THROWS_AS(oracle_solve(small, big), ValidationError);
}

TEST_CASE("allocator: repeated solves are bitwise identical") {
  Rng rng(0xD00Du);
  NetworkGraph g = topo(6, {2, 3});
  for (PhysicalNode& n : g.nodes) {
    if (n.kind == NodeKind::server) n.cpu_alloc_ghz = rng.uniform(0.0, 22.0);
  }
  SliceGenParams params;
  params.vnf_count = 4;
  params.k_rel_control = 1;
  params.k_rel_data = 1;
  SliceRequest s = generate_slice(rng, params);
  MilpInstance inst = build_instance(g, s);

  Solution a = solve(inst);
  Solution b = solve(inst);
  REQUIRE(a.status == b.status);
  CHECK(std::bit_cast<std::uint64_t>(a.objective_value) ==
        std::bit_cast<std::uint64_t>(b.objective_value));
  CHECK(a.placement == b.placement);
  CHECK(a.nodes_explored == b.nodes_explored);
  CHECK(a.lp_iterations == b.lp_iterations);
}

TEST_CASE("allocator: exported text uses the canonical naming") {
  NetworkGraph g = topo(2, {2});
  SliceRequest s = chain_slice(
      {vnf("v0", Plane::control, 1.0), vnf("v1", Plane::data, 1.0)}, 15.0, 1);
  MilpInstance inst = build_instance(g, s);
  std::string text = export_lp_text(inst);

  CHECK(text.rfind("Minimize", 0) == 0);
  CHECK(text.find("u_v0_s0") != std::string::npos);
  CHECK(text.find("u_v1_s1") != std::string::npos);
  CHECK(text.find("y_v0_v1_edge0_s0") != std::string::npos);
  CHECK(text.find("y_v0_v1_s0_edge0") != std::string::npos);
  CHECK(text.find("assign_v0:") != std::string::npos);
  CHECK(text.find("cap_node_s0:") != std::string::npos);
  CHECK(text.find("cap_link_core0_edge0") != std::string::npos);
  CHECK(text.find("flow_v0_v1_core0:") != std::string::npos);
  CHECK(text.find("iso_c_s0:") != std::string::npos);
  CHECK(text.find("iso_d_s0:") != std::string::npos);
  CHECK(text.find("delay:") != std::string::npos);
  CHECK(text.find("Binary") != std::string::npos);
  const auto binary_at = text.find("Binary");
  CHECK(text.find(" u_v0_s0\n", binary_at) != std::string::npos);
  CHECK(text.find("End\n") != std::string::npos);
}
