#include "qlearn/sweep.hpp"

#include <algorithm>
#include <atomic>
#include <cassert>
#include <chrono>
#include <cstdio>
#include <exception>
#include <mutex>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

#include "qlearn/generator.hpp"
#include "qlearn/learner.hpp"
#include "qlearn/oracles.hpp"
#include "qlearn/rng.hpp"

namespace qlearn {

int ceil_log2(int m) {
  assert(m >= 1);
  int t = 0;
  while ((1ll << t) < m) ++t;
  return t;
}

std::uint64_t mq_budget(int n, int m) {
  const auto un = static_cast<std::uint64_t>(n);
  return 2 * un * (static_cast<std::uint64_t>(ceil_log2(m)) + 3 * un);
}

std::uint64_t eq_budget(int n) { return static_cast<std::uint64_t>(n); }

std::uint64_t sweep_trial_seed(std::uint64_t base, int axis_value, int trial) {
  std::uint64_t state = base;
  state = splitmix64(state) ^ static_cast<std::uint64_t>(axis_value);
  state = splitmix64(state) ^ static_cast<std::uint64_t>(trial);
  return splitmix64(state);
}

namespace {

sweep_row run_trial(const sweep_spec& spec, int axis_value, int trial) {
  sweep_row row;
  row.axis_value = axis_value;
  row.trial = trial;
  row.seed = sweep_trial_seed(spec.seed, axis_value, trial);
  row.n = spec.nodes;
  row.m = spec.num_vars;
  row.k = spec.num_values;
  switch (spec.axis) {
    case sweep_axis::nodes: row.n = axis_value; break;
    case sweep_axis::vars: row.m = axis_value; break;
    case sweep_axis::values: row.k = axis_value; break;
  }

  generator_params gp;
  gp.nodes = row.n;
  gp.num_vars = row.m;
  gp.num_values = row.k;
  gp.seed = row.seed;
  const omtbdd target = generate_diagram(gp);

  target_oracles oracles(target);
  learn_options opts;
  opts.num_values_hint = row.k;
  const auto start = std::chrono::steady_clock::now();
  const learn_result res = learn(row.m, oracles.mq, oracles.eq, opts);
  row.wall_ms = std::chrono::duration<double, std::milli>(
                    std::chrono::steady_clock::now() - start)
                    .count();

  row.mq = res.stats.membership_queries;
  row.eq = res.stats.equivalence_queries;
  row.mq_bound = mq_budget(row.n, row.m);
  row.eq_bound = eq_budget(row.n);
  if (!equivalent(res.diagram, target))
    throw std::runtime_error("sweep: learned diagram differs from its target"
                             " (seed " + std::to_string(row.seed) + ")");
  if (row.mq > row.mq_bound || row.eq > row.eq_bound)
    throw std::runtime_error(
        "sweep: query budget exceeded (n=" + std::to_string(row.n) +
        " m=" + std::to_string(row.m) + " k=" + std::to_string(row.k) +
        " seed=" + std::to_string(row.seed) + " mq=" + std::to_string(row.mq) +
        "/" + std::to_string(row.mq_bound) + " eq=" + std::to_string(row.eq) +
        "/" + std::to_string(row.eq_bound) + ")");
  return row;
}

}  // namespace

sweep_result run_sweep(const sweep_spec& spec) {
  if (spec.grid.empty())
    throw std::invalid_argument("sweep: grid must be nonempty");
  if (spec.trials < 1)
    throw std::invalid_argument("sweep: trials must be at least 1");
  const int threads = std::max(1, spec.threads);

  const std::size_t jobs = spec.grid.size() * static_cast<std::size_t>(spec.trials);
  sweep_result result;
  result.rows.resize(jobs);
  result.trials = spec.trials;

  std::atomic<std::size_t> next{0};
  std::mutex error_mutex;
  std::exception_ptr error;
  const auto worker = [&] {
    for (;;) {
      const std::size_t i = next.fetch_add(1);
      if (i >= jobs) return;
      {
        std::lock_guard<std::mutex> lock(error_mutex);
        if (error) return;
      }
      try {
        const int axis_value = spec.grid[i / spec.trials];
        const int trial = static_cast<int>(i % spec.trials);
        result.rows[i] = run_trial(spec, axis_value, trial);
      } catch (...) {
        std::lock_guard<std::mutex> lock(error_mutex);
        if (!error) error = std::current_exception();
        return;
      }
    }
  };

  if (threads == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    pool.reserve(threads);
    for (int t = 0; t < threads; ++t) pool.emplace_back(worker);
    for (std::thread& t : pool) t.join();
  }
  if (error) std::rethrow_exception(error);
  return result;
}

std::vector<sweep_cell> cell_means(const sweep_result& result) {
  std::vector<sweep_cell> cells;
  const std::size_t per_cell = static_cast<std::size_t>(std::max(1, result.trials));
  for (std::size_t base = 0; base + per_cell <= result.rows.size();
       base += per_cell) {
    sweep_cell cell{result.rows[base].axis_value, 0.0, 0.0};
    for (std::size_t i = base; i < base + per_cell; ++i) {
      cell.mean_mq += static_cast<double>(result.rows[i].mq);
      cell.mean_eq += static_cast<double>(result.rows[i].eq);
    }
    cell.mean_mq /= static_cast<double>(per_cell);
    cell.mean_eq /= static_cast<double>(per_cell);
    cells.push_back(cell);
  }
  return cells;
}

std::string to_csv(const sweep_result& result) {
  std::string out = "axis_value,trial,seed,n,m,k,mq,eq,mq_bound,eq_bound,wall_ms\n";
  char line[256];
  for (const sweep_row& row : result.rows) {
    std::snprintf(line, sizeof(line),
                  "%d,%d,%llu,%d,%d,%d,%llu,%llu,%llu,%llu,%.3f\n",
                  row.axis_value, row.trial,
                  static_cast<unsigned long long>(row.seed), row.n, row.m,
                  row.k, static_cast<unsigned long long>(row.mq),
                  static_cast<unsigned long long>(row.eq),
                  static_cast<unsigned long long>(row.mq_bound),
                  static_cast<unsigned long long>(row.eq_bound), row.wall_ms);
    out += line;
  }
  return out;
}

}  // namespace qlearn
