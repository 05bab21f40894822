#include <cmath>
#include <cstdio>
#include <stdexcept>
#include <vector>

#include "slicesim/errors.hpp"
#include "slicesim/state.hpp"

namespace slicesim {

namespace {
// Acceptance margin for capacity checks at commit time, matching the
// optimizer's exactness guard: only violations beyond rounding noise reject.
constexpr double kCapEps = 1e-9;

std::string fmt(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}
}  // namespace

NetworkState::NetworkState(NetworkGraph base)
    : base_(std::move(base)), live_(base_), index_(base_) {
  validate_topology(base_);
}

void NetworkState::advance_clock(double dt_s) {
  if (!(dt_s >= 0.0)) {
    throw ValidationError("clock may only advance forward");
  }
  clock_s_ += dt_s;
}

double NetworkState::acu() const {
  double used = 0.0, total = 0.0;
  for (const PhysicalNode& n : live_.nodes) {
    if (n.kind != NodeKind::server) continue;
    used += n.cpu_alloc_ghz;
    total += n.cpu_max_ghz;
  }
  return total > 0.0 ? used / total : 0.0;
}

const AllocationRecord& NetworkState::record(
    const std::string& slice_id) const {
  auto it = active_.find(slice_id);
  if (it == active_.end()) {
    throw ValidationError("slice '" + slice_id + "' is not active");
  }
  return it->second;
}

void NetworkState::rebuild() {
  live_ = base_;
  for (const auto& [id, rec] : active_) {
    for (const Vnf& v : rec.slice.vnfs) {
      const std::size_t k = index_.node_of(rec.placement.at(v.id));
      live_.nodes[k].cpu_alloc_ghz += v.cpu_demand_ghz;
    }
    for (const VlinkFlow& flow : rec.flows) {
      double bw = 0.0;
      for (const VirtualLink& vl : rec.slice.vlinks) {
        if (vl.src == flow.src && vl.dst == flow.dst) bw = vl.bw_demand_mbps;
      }
      for (const FlowArc& arc : flow.arcs) {
        const std::size_t l = index_.link_between(index_.node_of(arc.from),
                                                  index_.node_of(arc.to));
        live_.links[l].bw_alloc_mbps += bw * arc.value;
      }
    }
  }
}

void NetworkState::apply(const SliceRequest& slice, const Solution& sol) {
  if (sol.status != SolveStatus::optimal) {
    throw ValidationError("only optimal solutions can be committed");
  }
  validate_slice(slice);
  if (active_.count(slice.id) != 0) {
    throw ValidationError("slice '" + slice.id + "' is already active");
  }
  if (sol.placement.size() != slice.vnfs.size()) {
    throw ValidationError("placement does not cover slice '" + slice.id +
                          "' exactly");
  }

  // Added footprint per node and link, validated against live capacities
  // before anything is committed.
  std::vector<double> node_add(live_.nodes.size(), 0.0);
  std::vector<double> link_add(live_.links.size(), 0.0);
  for (const Vnf& v : slice.vnfs) {
    auto it = sol.placement.find(v.id);
    if (it == sol.placement.end()) {
      throw ValidationError("VNF '" + v.id + "' has no placement");
    }
    const std::size_t k = index_.node_of(it->second);
    if (live_.nodes[k].kind != NodeKind::server) {
      throw ValidationError("VNF '" + v.id + "' placed on a non-server node");
    }
    node_add[k] += v.cpu_demand_ghz;
  }
  for (const VlinkFlow& flow : sol.flows) {
    double bw = -1.0;
    for (const VirtualLink& vl : slice.vlinks) {
      if (vl.src == flow.src && vl.dst == flow.dst) bw = vl.bw_demand_mbps;
    }
    if (bw < 0.0) {
      throw ValidationError("flow for unknown virtual link '" + flow.src +
                            "' -> '" + flow.dst + "'");
    }
    for (const FlowArc& arc : flow.arcs) {
      const std::size_t l = index_.link_between(index_.node_of(arc.from),
                                                index_.node_of(arc.to));
      if (l == GraphIndex::npos) {
        throw ValidationError("flow uses missing link '" + arc.from +
                              "' -- '" + arc.to + "'");
      }
      link_add[l] += bw * arc.value;
    }
  }

  for (std::size_t k = 0; k < live_.nodes.size(); ++k) {
    const PhysicalNode& n = live_.nodes[k];
    if (node_add[k] > 0.0 &&
        n.cpu_alloc_ghz + node_add[k] > n.cpu_max_ghz + kCapEps) {
      throw CapacityError("server '" + n.id + "' cannot take " +
                          fmt(node_add[k]) + " GHz more");
    }
  }
  for (std::size_t l = 0; l < live_.links.size(); ++l) {
    const PhysicalLink& link = live_.links[l];
    if (link_add[l] > 0.0 &&
        link.bw_alloc_mbps + link_add[l] > link.bw_max_mbps + kCapEps) {
      throw CapacityError("link '" + link.a + "' -- '" + link.b +
                          "' cannot take " + fmt(link_add[l]) + " Mbps more");
    }
  }

  AllocationRecord rec;
  rec.slice = slice;
  rec.placement = sol.placement;
  rec.flows = sol.flows;
  rec.realized_delay_ms = sol.realized_delay_ms;
  rec.allocated_at_s = clock_s_;
  active_.emplace(slice.id, std::move(rec));
  rebuild();
}

void NetworkState::deallocate(const std::string& slice_id) {
  record(slice_id);  // throws on unknown id
  if (slice_id == protected_) {
    throw ValidationError("slice '" + slice_id +
                          "' is protected and never deallocated");
  }
  active_.erase(slice_id);
  rebuild();
}

void NetworkState::protect(const std::string& slice_id) {
  auto it = active_.find(slice_id);
  if (it == active_.end()) {
    throw ValidationError("slice '" + slice_id + "' is not active");
  }
  it->second.slice.kind = SliceKind::target;
  protected_ = slice_id;
}

bool NetworkState::co_resident(const std::string& a,
                               const std::string& b) const {
  const AllocationRecord& ra = record(a);
  const AllocationRecord& rb = record(b);
  for (const auto& [va, host_a] : ra.placement) {
    for (const auto& [vb, host_b] : rb.placement) {
      if (host_a == host_b) return true;
    }
  }
  return false;
}

std::string NetworkState::snapshot_text() const {
  std::string out;
  out += "clock_s " + fmt(clock_s_) + "\n";
  out += "acu " + fmt(acu()) + "\n";
  for (const PhysicalNode& n : live_.nodes) {
    if (n.kind != NodeKind::server) continue;
    out += "server " + n.id + " alloc_ghz " + fmt(n.cpu_alloc_ghz) +
           " max_ghz " + fmt(n.cpu_max_ghz) + "\n";
  }
  for (const PhysicalLink& l : live_.links) {
    out += "link " + l.a + " " + l.b + " alloc_mbps " + fmt(l.bw_alloc_mbps) +
           " max_mbps " + fmt(l.bw_max_mbps) + " delay_ms " +
           fmt(link_delay(l)) + "\n";
  }
  for (const auto& [id, rec] : active_) {
    out += "slice " + id + " allocated_at_s " + fmt(rec.allocated_at_s) +
           " delay_ms " + fmt(rec.realized_delay_ms);
    if (id == protected_) out += " protected";
    out += "\n";
    for (const Vnf& v : rec.slice.vnfs) {
      out += "  vnf " + v.id + " -> " + rec.placement.at(v.id) + "\n";
    }
    for (const VlinkFlow& flow : rec.flows) {
      for (const FlowArc& arc : flow.arcs) {
        out += "  flow " + flow.src + ">" + flow.dst + " " + arc.from + ">" +
               arc.to + " " + fmt(arc.value) + "\n";
      }
    }
  }
  return out;
}

}  // namespace slicesim
