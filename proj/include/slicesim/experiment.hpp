#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "slicesim/allocator.hpp"
#include "slicesim/rng.hpp"
#include "slicesim/slice.hpp"
#include "slicesim/state.hpp"
#include "slicesim/topology.hpp"

namespace slicesim {

// One adversarial measurement campaign: for each (co-residency cap, CPU
// utilization target) cell, fill a fresh copy of the network with background
// slices, then interleave background churn with attacker slice requests and
// count how often the attacker lands on a server hosting the target slice.
struct ExperimentConfig {
  NetworkGraph base_graph;  // shared read-only across cells

  std::vector<double> acu_targets{0.50, 0.75, 0.80, 0.85, 0.90, 0.95};
  double acu_band = 0.005;  // targets are held within +/- this fraction
  std::vector<int> k_rel_values{1, 2, 3, 4, 5, 6, 7, 8, 9, 10};
  int attacker_count = 500;
  double churn_period_s = 60.0;
  double attacker_period_s = 12.0;
  // Ordinal of the warmup slice designated as the observation target (the
  // last one when fewer fit before the utilization band is reached).
  int background_slices_init = 50;
  std::uint64_t seed = 0;

  // Template for every generated slice; the per-plane co-residency caps are
  // overridden with the cell's value.
  SliceGenParams slice_template;
  MilpOptions solver;
};

// Throws ValidationError when a field is out of range.
void validate_config(const ExperimentConfig& config);

enum class AttemptOutcome { success, failure, infeasible };

struct CellResult {
  int k_rel = 0;
  double acu_target = 0.0;
  std::uint64_t cell_seed = 0;
  int attempts = 0;
  int successes = 0;
  int infeasible = 0;        // attempts whose slice could not be embedded
  double success_rate = 0.0; // successes / attempts
  double acu_achieved_mean = 0.0;  // mean utilization sampled per attempt
  int churn_failures = 0;    // replacement draws that never fit
  bool aborted = false;      // warmup failed or a step threw
  std::string diagnostic;    // human-readable reason when aborted
  double runtime_s = 0.0;    // wall clock; excluded from digests
};

struct ExperimentResult {
  std::vector<CellResult> cells;  // cap-major, utilization-minor order
  std::uint64_t seed = 0;
};

// Fills the state with legitimate slices until utilization lands inside
// [acu_target - band, acu_target + band], designating and protecting the
// target slice. Returns the target slice id. Throws ValidationError when the
// band cannot be reached (message names the achieved utilization).
std::string warmup(NetworkState& state, const ExperimentConfig& config,
                   int k_rel, double acu_target, Rng& rng);

// Swaps one uniformly chosen non-target slice for a freshly drawn one, then
// nudges utilization back into the band with corrective allocations or
// deallocations. Returns false when the replacement never fit (a recorded
// churn failure); the state stays valid either way.
bool churn_step(NetworkState& state, const ExperimentConfig& config,
                int k_rel, double acu_target, Rng& rng);

// Embeds the attacker slice against the live state, reports whether it
// shares a server with the protected target, and removes it again. The
// legitimate footprint is untouched on every path.
AttemptOutcome attacker_attempt(NetworkState& state,
                                const SliceRequest& attacker,
                                const MilpOptions& solver);

// One (cap, utilization) cell end to end on a private state. Never throws:
// failures come back as an aborted result carrying the diagnostic.
CellResult run_cell(const ExperimentConfig& config, int k_rel,
                    double acu_target);

// Every configured cell, optionally spread over `parallelism` threads (cells
// are independent; results are ordered by configuration, not completion).
ExperimentResult run_grid(const ExperimentConfig& config, int parallelism = 1);

// CSV table of per-cell results, one row per cell:
// k_rel,acu_target,acu_achieved_mean,attempts,successes,infeasible,
// success_rate,seed. Byte-stable for identical results.
std::string experiment_csv(const ExperimentResult& result);

// Structured-text report: per-cell outcomes plus diagnostics.
std::string experiment_report(const ExperimentResult& result);

}  // namespace slicesim
