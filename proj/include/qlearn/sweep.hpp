#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace qlearn {

/// Which parameter the sweep varies; the other two stay at their fixed value.
enum class sweep_axis { nodes, vars, values };

struct sweep_spec {
  sweep_axis axis = sweep_axis::nodes;
  std::vector<int> grid;  ///< values the axis takes, in output order
  int nodes = 100;        ///< fixed target size when axis != nodes
  int num_vars = 64;      ///< fixed variable count when axis != vars
  int num_values = 8;     ///< fixed value count when axis != values
  int trials = 10;        ///< independently seeded runs per grid value
  std::uint64_t seed = 0; ///< base seed; per-trial seeds derive from it
  int threads = 1;        ///< worker threads; rows stay in deterministic order
};

/// One learn run: the grid value, per-trial seed, resolved target parameters,
/// measured query counts, their worst-case budgets, and wall time.
struct sweep_row {
  int axis_value = 0;
  int trial = 0;
  std::uint64_t seed = 0;
  int n = 0;
  int m = 0;
  int k = 0;
  std::uint64_t mq = 0;
  std::uint64_t eq = 0;
  std::uint64_t mq_bound = 0;
  std::uint64_t eq_bound = 0;
  double wall_ms = 0.0;
};

struct sweep_result {
  std::vector<sweep_row> rows;  ///< grid order, trials ascending within a cell
  int trials = 1;               ///< rows per cell
};

/// Mean query counts of one grid cell.
struct sweep_cell {
  int axis_value = 0;
  double mean_mq = 0.0;
  double mean_eq = 0.0;
};

/// Smallest t with 2^t >= m, for m >= 1.
int ceil_log2(int m);

/// Worst-case membership-query budget for an n-node target over m variables.
std::uint64_t mq_budget(int n, int m);

/// Worst-case equivalence-query budget for an n-node target.
std::uint64_t eq_budget(int n);

/// Seed for one (grid value, trial) cell entry, mixed from the base seed so
/// trials are independent and reproducible.
std::uint64_t sweep_trial_seed(std::uint64_t base, int axis_value, int trial);

/// Runs the whole grid: per trial, generates a random target and learns it
/// with exact oracles. Throws std::invalid_argument on an empty grid or
/// trials < 1, propagates generation failures, and throws std::runtime_error
/// if any run exceeds its query budget. Deterministic per spec regardless of
/// the thread count.
sweep_result run_sweep(const sweep_spec& spec);

/// Per-cell means in grid order.
std::vector<sweep_cell> cell_means(const sweep_result& result);

/// Renders the fixed-column CSV (header plus one line per row).
std::string to_csv(const sweep_result& result);

}  // namespace qlearn
