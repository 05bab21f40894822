#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

#include "slicesim/errors.hpp"
#include "slicesim/experiment.hpp"

namespace slicesim {

namespace {

// Fresh random draws tried per required allocation before giving up: the
// drawn slice has to both fit the utilization band and embed feasibly.
constexpr int kDrawRetries = 50;

double total_capacity_ghz(const NetworkGraph& g) {
  double total = 0.0;
  for (const PhysicalNode& n : g.nodes) {
    if (n.kind == NodeKind::server) total += n.cpu_max_ghz;
  }
  return total;
}

SliceGenParams cell_params(const ExperimentConfig& config, int k_rel) {
  SliceGenParams p = config.slice_template;
  p.k_rel_control = k_rel;
  p.k_rel_data = k_rel;
  return p;
}

// Draws, solves and commits one legitimate slice whose footprint keeps
// utilization at or below `acu_hi`. Returns the slice id, or empty after
// kDrawRetries failed draws.
std::string allocate_one(NetworkState& state, const ExperimentConfig& config,
                         const SliceGenParams& params, double acu_hi,
                         Rng& rng, long& name_counter) {
  const double capacity = total_capacity_ghz(state.graph());
  for (int attempt = 0; attempt < kDrawRetries; ++attempt) {
    SliceGenParams draw = params;
    draw.id = "bg-" + std::to_string(++name_counter);
    SliceRequest s = generate_slice(rng, draw);
    if (state.acu() + total_cpu_demand(s) / capacity > acu_hi) continue;
    MilpInstance inst = build_instance(state.graph(), s);
    Solution sol = solve(inst, config.solver);
    if (sol.status != SolveStatus::optimal) continue;
    state.apply(s, sol);
    return s.id;
  }
  return "";
}

// Uniformly chosen active slice other than the protected target.
std::string pick_non_target(const NetworkState& state, Rng& rng) {
  std::vector<const std::string*> ids;
  for (const auto& [id, rec] : state.active()) {
    if (id != state.protected_slice()) ids.push_back(&id);
  }
  if (ids.empty()) {
    throw ValidationError("churn needs at least one non-target slice");
  }
  return *ids[rng.next_below(ids.size())];
}

std::string fmt_fraction(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.6f", v);
  return buf;
}

std::string fmt_target(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%g", v);
  return buf;
}

}  // namespace

void validate_config(const ExperimentConfig& config) {
  for (double t : config.acu_targets) {
    if (!(t > 0.0 && t <= 1.0)) {
      throw ValidationError("utilization target " + fmt_target(t) +
                            " is outside (0, 1]");
    }
  }
  if (config.acu_targets.empty()) {
    throw ValidationError("no utilization targets configured");
  }
  if (!(config.acu_band > 0.0)) {
    throw ValidationError("utilization band must be positive");
  }
  for (int k : config.k_rel_values) {
    if (k < 1) throw ValidationError("co-residency caps must be >= 1");
  }
  if (config.k_rel_values.empty()) {
    throw ValidationError("no co-residency caps configured");
  }
  if (config.attacker_count < 1) {
    throw ValidationError("attacker_count must be >= 1");
  }
  if (!(config.churn_period_s > 0.0) || !(config.attacker_period_s > 0.0)) {
    throw ValidationError("event periods must be positive");
  }
  if (config.background_slices_init < 1) {
    throw ValidationError("background_slices_init must be >= 1");
  }
  validate_topology(config.base_graph);
}

std::string warmup(NetworkState& state, const ExperimentConfig& config,
                   int k_rel, double acu_target, Rng& rng) {
  const SliceGenParams params = cell_params(config, k_rel);
  const double lo = acu_target - config.acu_band;
  const double hi = acu_target + config.acu_band;

  long name_counter = 0;
  long ordinal = 0;
  std::string target, last;
  while (state.acu() < lo) {
    const std::string id =
        allocate_one(state, config, params, hi, rng, name_counter);
    if (id.empty()) {
      throw ValidationError(
          "warmup stalled at utilization " + fmt_fraction(state.acu()) +
          " before reaching [" + fmt_fraction(lo) + ", " + fmt_fraction(hi) +
          "]");
    }
    last = id;
    if (++ordinal == config.background_slices_init) target = id;
  }
  if (ordinal < 2) {
    throw ValidationError(
        "warmup allocated " + std::to_string(ordinal) +
        " slice(s); a target plus at least one background slice is needed");
  }
  if (target.empty()) target = last;
  state.protect(target);
  return target;
}

bool churn_step(NetworkState& state, const ExperimentConfig& config,
                int k_rel, double acu_target, Rng& rng) {
  const SliceGenParams params = cell_params(config, k_rel);
  const double lo = acu_target - config.acu_band;
  const double hi = acu_target + config.acu_band;

  // Unique replacement names: continue counting above every live slice.
  long name_counter = 0;
  for (const auto& [id, rec] : state.active()) {
    if (id.rfind("bg-", 0) == 0) {
      name_counter = std::max(name_counter, std::stol(id.substr(3)));
    }
  }

  state.deallocate(pick_non_target(state, rng));
  bool ok =
      !allocate_one(state, config, params, hi, rng, name_counter).empty();

  // Corrective nudges back into the band; both directions are bounded by
  // the ledger size and the draw retry budget.
  while (state.acu() > hi) state.deallocate(pick_non_target(state, rng));
  while (state.acu() < lo) {
    if (allocate_one(state, config, params, hi, rng, name_counter).empty()) {
      ok = false;
      break;
    }
  }
  return ok;
}

AttemptOutcome attacker_attempt(NetworkState& state,
                                const SliceRequest& attacker,
                                const MilpOptions& solver) {
  MilpInstance inst = build_instance(state.graph(), attacker);
  Solution sol = solve(inst, solver);
  if (sol.status != SolveStatus::optimal) return AttemptOutcome::infeasible;
  state.apply(attacker, sol);
  const bool hit = state.co_resident(attacker.id, state.protected_slice());
  state.deallocate(attacker.id);
  return hit ? AttemptOutcome::success : AttemptOutcome::failure;
}

CellResult run_cell(const ExperimentConfig& config, int k_rel,
                    double acu_target) {
  CellResult r;
  r.k_rel = k_rel;
  r.acu_target = acu_target;
  r.cell_seed = derive_seed(config.seed, "cell",
                            static_cast<std::uint64_t>(k_rel),
                            static_cast<std::uint64_t>(
                                std::llround(acu_target * 1000.0)));
  const auto started = std::chrono::steady_clock::now();

  try {
    NetworkState state(config.base_graph);
    Rng warm_rng(derive_seed(r.cell_seed, "warmup"));
    Rng churn_rng(derive_seed(r.cell_seed, "churn"));
    Rng attacker_rng(derive_seed(r.cell_seed, "attacker"));

    warmup(state, config, k_rel, acu_target, warm_rng);

    SliceGenParams attacker_params = cell_params(config, k_rel);
    attacker_params.id = "atk";
    attacker_params.kind = SliceKind::attacker;
    const std::vector<SliceRequest> batch = generate_attacker_batch(
        attacker_rng, static_cast<std::size_t>(config.attacker_count),
        attacker_params);

    double next_churn = config.churn_period_s;
    double next_attack = config.attacker_period_s;
    double acu_sum = 0.0;
    while (r.attempts < config.attacker_count) {
      if (next_churn <= next_attack) {
        state.advance_clock(next_churn - state.clock_s());
        if (!churn_step(state, config, k_rel, acu_target, churn_rng)) {
          ++r.churn_failures;
        }
        next_churn += config.churn_period_s;
      } else {
        state.advance_clock(next_attack - state.clock_s());
        acu_sum += state.acu();
        const AttemptOutcome outcome = attacker_attempt(
            state, batch[static_cast<std::size_t>(r.attempts)],
            config.solver);
        ++r.attempts;
        if (outcome == AttemptOutcome::success) ++r.successes;
        if (outcome == AttemptOutcome::infeasible) ++r.infeasible;
        next_attack += config.attacker_period_s;
      }
    }
    r.success_rate =
        static_cast<double>(r.successes) / static_cast<double>(r.attempts);
    r.acu_achieved_mean = acu_sum / static_cast<double>(r.attempts);
  } catch (const std::exception& e) {
    r.aborted = true;
    r.diagnostic = e.what();
  }

  const std::chrono::duration<double> elapsed =
      std::chrono::steady_clock::now() - started;
  r.runtime_s = elapsed.count();
  return r;
}

ExperimentResult run_grid(const ExperimentConfig& config, int parallelism) {
  validate_config(config);
  ExperimentResult result;
  result.seed = config.seed;

  struct Cell {
    int k_rel;
    double acu;
  };
  std::vector<Cell> todo;
  for (int k : config.k_rel_values) {
    for (double acu : config.acu_targets) todo.push_back({k, acu});
  }
  result.cells.resize(todo.size());

  const int workers = std::max(
      1, std::min(parallelism, static_cast<int>(todo.size())));
  std::atomic<std::size_t> next{0};
  auto work = [&] {
    while (true) {
      const std::size_t i = next.fetch_add(1);
      if (i >= todo.size()) return;
      result.cells[i] = run_cell(config, todo[i].k_rel, todo[i].acu);
    }
  };
  if (workers == 1) {
    work();
  } else {
    std::vector<std::thread> pool;
    pool.reserve(static_cast<std::size_t>(workers));
    for (int w = 0; w < workers; ++w) pool.emplace_back(work);
    for (std::thread& t : pool) t.join();
  }
  return result;
}

std::string experiment_csv(const ExperimentResult& result) {
  std::string out =
      "k_rel,acu_target,acu_achieved_mean,attempts,successes,infeasible,"
      "success_rate,seed\n";
  for (const CellResult& c : result.cells) {
    out += std::to_string(c.k_rel) + "," + fmt_target(c.acu_target) + "," +
           fmt_fraction(c.acu_achieved_mean) + "," +
           std::to_string(c.attempts) + "," + std::to_string(c.successes) +
           "," + std::to_string(c.infeasible) + "," +
           fmt_fraction(c.success_rate) + "," + std::to_string(c.cell_seed) +
           "\n";
  }
  return out;
}

std::string experiment_report(const ExperimentResult& result) {
  std::string out = "experiment seed " + std::to_string(result.seed) + "\n";
  int aborted = 0;
  for (const CellResult& c : result.cells) {
    out += "cell k_rel=" + std::to_string(c.k_rel) +
           " acu_target=" + fmt_target(c.acu_target) +
           " seed=" + std::to_string(c.cell_seed);
    if (c.aborted) {
      out += " ABORTED: " + c.diagnostic + "\n";
      ++aborted;
      continue;
    }
    out += " success_rate=" + fmt_fraction(c.success_rate) + " successes=" +
           std::to_string(c.successes) + "/" + std::to_string(c.attempts) +
           " infeasible=" + std::to_string(c.infeasible) +
           " acu_mean=" + fmt_fraction(c.acu_achieved_mean) +
           " churn_failures=" + std::to_string(c.churn_failures) + "\n";
  }
  out += "cells " + std::to_string(result.cells.size()) + " aborted " +
         std::to_string(aborted) + "\n";
  return out;
}

}  // namespace slicesim
