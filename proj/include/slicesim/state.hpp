#pragma once

#include <map>
#include <string>
#include <vector>

#include "slicesim/allocator.hpp"
#include "slicesim/slice.hpp"
#include "slicesim/topology.hpp"

namespace slicesim {

// One committed embedding: everything needed to replay its footprint on the
// network and to answer co-residency queries.
struct AllocationRecord {
  SliceRequest slice;
  std::map<std::string, std::string> placement;  // VNF id -> server id
  std::vector<VlinkFlow> flows;
  double realized_delay_ms = 0.0;
  double allocated_at_s = 0.0;
};

// Owner of the live network: a base topology plus the ledger of active
// allocations. CPU and bandwidth allocations on the exposed graph are always
// recomputed from the base values and the ledger in slice-id order, so any
// sequence of apply/deallocate that ends with the same active set yields a
// bit-identical graph (and, with it, identical derived link delays).
//
// Single-writer: one simulation run owns its state; independent runs build
// independent states.
class NetworkState {
 public:
  explicit NetworkState(NetworkGraph base);

  // Live view; allocation fields reflect the active ledger.
  const NetworkGraph& graph() const { return live_; }
  const std::map<std::string, AllocationRecord>& active() const {
    return active_;
  }

  double clock_s() const { return clock_s_; }
  void advance_clock(double dt_s);

  // Fraction of total server CPU currently allocated.
  double acu() const;

  // Commits an optimal, validated solution for `slice`. Transactional:
  // throws CapacityError and leaves the state untouched when the added
  // footprint no longer fits (stale snapshot); throws ValidationError on a
  // non-optimal solution, duplicate or malformed input.
  void apply(const SliceRequest& slice, const Solution& sol);

  // Removes an active slice and its whole footprint. Unknown ids and the
  // protected slice are errors.
  void deallocate(const std::string& slice_id);

  // Marks one active slice as the observation target: its record's kind
  // flips to target and it can never be deallocated.
  void protect(const std::string& slice_id);
  const std::string& protected_slice() const { return protected_; }

  // True iff the two active slices share at least one server. A slice is
  // co-resident with itself.
  bool co_resident(const std::string& a, const std::string& b) const;

  // Deterministic structured-text dump of ledgers and records, for
  // debugging and replay.
  std::string snapshot_text() const;

 private:
  const AllocationRecord& record(const std::string& slice_id) const;
  void rebuild();  // recompute live_ allocations from base_ + ledger

  NetworkGraph base_;   // allocation values as handed to the constructor
  NetworkGraph live_;   // base_ plus the active ledger's footprints
  GraphIndex index_;    // handles into base_/live_ (same shape)
  std::map<std::string, AllocationRecord> active_;
  std::string protected_;
  double clock_s_ = 0.0;
};

}  // namespace slicesim
