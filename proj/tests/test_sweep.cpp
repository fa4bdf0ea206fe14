#include "qlearn/sweep.hpp"

#include <cstdint>
#include <sstream>
#include <string>
#include <vector>

#include "doctest.h"
#include "qlearn/generator.hpp"
#include "qlearn/learner.hpp"
#include "qlearn/oracles.hpp"

using namespace qlearn;

namespace {

// CSV lines with the trailing wall_ms field removed, for comparisons that
// must ignore timing.
std::vector<std::string> lines_without_wall(const std::string& csv) {
  std::vector<std::string> out;
  std::istringstream in(csv);
  std::string line;
  while (std::getline(in, line)) {
    const auto cut = line.rfind(',');
    REQUIRE(cut != std::string::npos);
    out.push_back(line.substr(0, cut));
  }
  return out;
}

}  // namespace

TEST_CASE("budget helpers match their formulas") {
  CHECK(ceil_log2(1) == 0);
  CHECK(ceil_log2(2) == 1);
  CHECK(ceil_log2(3) == 2);
  CHECK(ceil_log2(512) == 9);
  CHECK(ceil_log2(513) == 10);
  CHECK(mq_budget(100, 512) == 2 * 100 * (9 + 300));
  CHECK(mq_budget(4, 3) == 2 * 4 * (2 + 12));
  CHECK(eq_budget(37) == 37);
}

TEST_CASE("sweep rejects an empty grid and nonpositive trials") {
  sweep_spec spec;
  spec.grid = {};
  CHECK_THROWS_AS(run_sweep(spec), std::invalid_argument);
  spec.grid = {10};
  spec.trials = 0;
  CHECK_THROWS_AS(run_sweep(spec), std::invalid_argument);
}

TEST_CASE("node-axis sweep produces ordered in-budget rows") {
  sweep_spec spec;
  spec.axis = sweep_axis::nodes;
  spec.grid = {25, 50, 100};
  spec.num_vars = 512;
  spec.num_values = 8;
  spec.trials = 2;
  spec.seed = 77;
  const sweep_result result = run_sweep(spec);
  REQUIRE(result.rows.size() == 6);
  for (std::size_t i = 0; i < result.rows.size(); ++i) {
    const sweep_row& row = result.rows[i];
    CHECK(row.axis_value == spec.grid[i / 2]);
    CHECK(row.trial == static_cast<int>(i % 2));
    CHECK(row.seed == sweep_trial_seed(77, row.axis_value, row.trial));
    CHECK(row.n == row.axis_value);
    CHECK(row.m == 512);
    CHECK(row.k == 8);
    CHECK(row.mq_bound == mq_budget(row.n, row.m));
    CHECK(row.eq_bound == eq_budget(row.n));
    CHECK(row.mq <= row.mq_bound);
    CHECK(row.eq <= row.eq_bound);
    CHECK(row.mq > 0);
    CHECK(row.eq > 0);
  }

  // Larger targets need more membership queries on average.
  const std::vector<sweep_cell> cells = cell_means(result);
  REQUIRE(cells.size() == 3);
  CHECK(cells[0].mean_mq <= cells[1].mean_mq);
  CHECK(cells[1].mean_mq <= cells[2].mean_mq);
}

TEST_CASE("a single-cell sweep matches a direct learn run") {
  sweep_spec spec;
  spec.axis = sweep_axis::nodes;
  spec.grid = {30};
  spec.num_vars = 16;
  spec.num_values = 3;
  spec.trials = 1;
  spec.seed = 555;
  const sweep_result result = run_sweep(spec);
  REQUIRE(result.rows.size() == 1);

  generator_params gp;
  gp.nodes = 30;
  gp.num_vars = 16;
  gp.num_values = 3;
  gp.seed = sweep_trial_seed(555, 30, 0);
  const omtbdd target = generate_diagram(gp);
  target_oracles oracles(target);
  learn_options opts;
  opts.num_values_hint = 3;
  const learn_result direct = learn(16, oracles.mq, oracles.eq, opts);

  CHECK(result.rows[0].mq == direct.stats.membership_queries);
  CHECK(result.rows[0].eq == direct.stats.equivalence_queries);
  CHECK(result.rows[0].seed == gp.seed);
}

TEST_CASE("variable and value axes resolve into the right slot") {
  sweep_spec spec;
  spec.axis = sweep_axis::vars;
  spec.grid = {8, 32};
  spec.nodes = 12;
  spec.num_values = 2;
  spec.trials = 1;
  spec.seed = 3;
  const sweep_result by_vars = run_sweep(spec);
  REQUIRE(by_vars.rows.size() == 2);
  CHECK(by_vars.rows[0].m == 8);
  CHECK(by_vars.rows[1].m == 32);
  CHECK(by_vars.rows[0].n == 12);
  CHECK(by_vars.rows[1].k == 2);

  spec.axis = sweep_axis::values;
  spec.grid = {2, 4};
  spec.num_vars = 10;
  const sweep_result by_values = run_sweep(spec);
  REQUIRE(by_values.rows.size() == 2);
  CHECK(by_values.rows[0].k == 2);
  CHECK(by_values.rows[1].k == 4);
  CHECK(by_values.rows[0].m == 10);
  CHECK(by_values.rows[1].n == 12);
}

TEST_CASE("csv reruns identically apart from wall time") {
  sweep_spec spec;
  spec.axis = sweep_axis::nodes;
  spec.grid = {10, 20};
  spec.num_vars = 12;
  spec.num_values = 2;
  spec.trials = 3;
  spec.seed = 99;
  const std::string a = to_csv(run_sweep(spec));
  const std::string b = to_csv(run_sweep(spec));
  CHECK(lines_without_wall(a) == lines_without_wall(b));

  const std::vector<std::string> lines = lines_without_wall(a);
  REQUIRE(lines.size() == 7);
  CHECK(lines[0] == "axis_value,trial,seed,n,m,k,mq,eq,mq_bound,eq_bound");
  CHECK(a.substr(0, a.find('\n')) ==
        "axis_value,trial,seed,n,m,k,mq,eq,mq_bound,eq_bound,wall_ms");
}

TEST_CASE("worker threads do not change the rows") {
  sweep_spec spec;
  spec.axis = sweep_axis::nodes;
  spec.grid = {10, 15, 20};
  spec.num_vars = 12;
  spec.num_values = 3;
  spec.trials = 2;
  spec.seed = 1234;
  spec.threads = 1;
  const std::string serial = to_csv(run_sweep(spec));
  spec.threads = 4;
  const std::string parallel = to_csv(run_sweep(spec));
  CHECK(lines_without_wall(serial) == lines_without_wall(parallel));
}
