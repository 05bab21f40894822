#pragma once

#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "slicesim/rng.hpp"

namespace slicesim {

enum class Plane { control, data };
enum class SliceKind { legitimate, target, attacker };

struct Vnf {
  std::string id;
  Plane plane = Plane::control;
  double cpu_demand_ghz = 0.0;  // requested CPU
  double proc_delay_ms = 0.0;   // VNF processing delay
};

// Directed edge of the slice's VNF graph.
struct VirtualLink {
  std::string src;
  std::string dst;
  double bw_demand_mbps = 0.0;
};

struct SliceRequest {
  std::string id;
  std::vector<Vnf> vnfs;
  std::vector<VirtualLink> vlinks;
  double delay_budget_ms = 0.0;  // end-to-end delay bound
  int k_rel_control = 1;         // max control-plane VNFs per server
  int k_rel_data = 1;            // max data-plane VNFs per server
  SliceKind kind = SliceKind::legitimate;
};

enum class VlinkShape { chain, random_dag };

struct SliceGenParams {
  std::string id = "slice";
  SliceKind kind = SliceKind::legitimate;
  int vnf_count = 10;
  double cpu_demand_min_ghz = 0.55;
  double cpu_demand_max_ghz = 1.6;
  double proc_delay_min_ms = 0.2;
  double proc_delay_max_ms = 0.6;
  double bw_demand_min_mbps = 40.0;
  double bw_demand_max_mbps = 60.0;
  double delay_budget_ms = 15.0;
  int k_rel_control = 1;
  int k_rel_data = 1;
  // First control_count VNFs are control plane, the rest data plane;
  // -1 means half (rounded down).
  int control_count = -1;
  VlinkShape shape = VlinkShape::chain;
};

// Draws one slice request: demands uniform in the configured ranges, plane
// labels split by control_count, virtual links in chain order (or a random
// connected DAG). Pure function of (rng state, params). Throws
// ValidationError on vnf_count < 1 or empty/negative ranges.
SliceRequest generate_slice(Rng& rng, const SliceGenParams& params);

// Draws `count` requests with kind=attacker from one stream, consumed in
// order during the experiment. Ids are "<params.id>-<n>".
std::vector<SliceRequest> generate_attacker_batch(Rng& rng, std::size_t count,
                                                  const SliceGenParams& params);

// Sum of cpu_demand over all VNFs (the system-budget feasibility check's
// left-hand side).
double total_cpu_demand(const SliceRequest& slice);

// Structural checks: non-empty weakly connected VNF graph, valid references,
// positive demands, k_rel >= 1, positive delay budget. Throws ValidationError.
void validate_slice(const SliceRequest& slice);

// JSON round-trip mirroring the type fields; loading validates.
std::string slice_to_json(const SliceRequest& slice);
SliceRequest slice_from_json(std::string_view text);
void save_slice(const SliceRequest& slice, const std::filesystem::path& path);
SliceRequest load_slice(const std::filesystem::path& path);

}  // namespace slicesim
