#include "qlearn/generator.hpp"

#include <algorithm>
#include <cassert>
#include <numeric>
#include <optional>
#include <random>
#include <vector>

#include "qlearn/rng.hpp"

namespace qlearn {

generation_error::generation_error(const std::string& what,
                                   const generator_params& params, int rounds,
                                   int last_count)
    : std::runtime_error(what + " (nodes=" + std::to_string(params.nodes) +
                         " vars=" + std::to_string(params.num_vars) +
                         " values=" + std::to_string(params.num_values) +
                         " seed=" + std::to_string(params.seed) +
                         " rounds=" + std::to_string(rounds) +
                         " last_count=" + std::to_string(last_count) + ")"),
      params_(params),
      rounds_(rounds),
      last_count_(last_count) {}

namespace {

// One top-down build pass over `total` slots: slots 1..total-K are internal
// nodes with random (ascending) variables, the last K slots are sinks with
// distinct random values. Each surviving internal node gets its two outgoing
// edges wired downward, preferring targets in the next-variable band that
// still lack an incoming edge so the lower layers fill up. Returns the raw
// diagram, or nullopt in the (astronomically unlikely) case that the
// duplicate-edge redraw budget runs out.
std::optional<omtbdd> build_attempt(std::mt19937_64& rng, int total,
                                    int num_vars, int num_values,
                                    int max_reselect) {
  const int internals = total - num_values;
  assert(internals >= 1);

  // Variables for the internal slots, sampled with replacement and sorted so
  // edges always point at strictly larger variables or sinks.
  std::vector<int> var(internals + 1, 0);  // 1-based
  for (int j = 1; j <= internals; ++j)
    var[j] = 1 + static_cast<int>(uniform_below(rng, num_vars));
  std::sort(var.begin() + 1, var.end());

  // next_var[j]: first slot testing a larger variable than slot j, or
  // internals + 1 (the sink region) when there is none.
  std::vector<int> next_var(internals + 1, internals + 1);
  for (int j = 1; j <= internals; ++j) {
    const auto it = std::upper_bound(var.begin() + 1, var.end(), var[j]);
    next_var[j] = static_cast<int>(it - var.begin());
  }

  std::vector<char> alive(total + 1, 1);
  std::vector<int> incoming(total + 1, 0);
  std::vector<int> edge0(internals + 1, 0), edge1(internals + 1, 0);

  // Uniform pick of an edge target for slot j, avoiding `taken` (the other
  // edge of the same node). Targets in [band_lo, band_hi) without an incoming
  // edge come first; otherwise anything alive below the current variable
  // group, redrawing duplicates up to max_reselect times. Returns 0 on redraw
  // exhaustion.
  const auto pick_target = [&](int j, int taken) -> int {
    const int band_lo = next_var[j];
    const int band_hi = band_lo <= internals ? next_var[band_lo] : total + 1;
    std::vector<int> candidates;
    for (int h = band_lo; h < band_hi; ++h)
      if (alive[h] && incoming[h] == 0 && h != taken) candidates.push_back(h);
    if (!candidates.empty())
      return candidates[uniform_below(rng, candidates.size())];

    candidates.clear();
    for (int h = band_lo; h <= total; ++h)
      if (alive[h]) candidates.push_back(h);
    assert(candidates.size() >= 2);  // the sinks alone guarantee this
    for (int redraw = 0; redraw <= max_reselect; ++redraw) {
      const int h = candidates[uniform_below(rng, candidates.size())];
      if (h != taken) return h;
    }
    return 0;
  };

  for (int j = 1; j <= internals; ++j) {
    if (j > 1 && incoming[j] == 0) {
      alive[j] = 0;
      continue;
    }
    int first = 0, second = 0;
    for (int rewire = 0; second == 0; ++rewire) {
      if (rewire > max_reselect) return std::nullopt;
      first = pick_target(j, 0);
      if (first == 0) continue;
      second = pick_target(j, first);
    }
    const int bit = static_cast<int>(uniform_below(rng, 2));
    (bit == 0 ? edge0 : edge1)[j] = first;
    (bit == 0 ? edge1 : edge0)[j] = second;
    ++incoming[first];
    ++incoming[second];
  }

  std::vector<int> values(num_values);
  std::iota(values.begin(), values.end(), 0);
  stable_shuffle(values, rng);

  omtbdd d;
  d.num_vars = num_vars;
  d.num_values = num_values;
  std::vector<node_index> index_of(total + 1, no_node);
  for (int slot = 1; slot <= total; ++slot) {
    if (!alive[slot]) continue;
    index_of[slot] = static_cast<node_index>(d.nodes.size());
    diagram_node node;
    if (slot <= internals)
      node.var = var[slot];
    else
      node.value = values[slot - internals - 1];
    d.nodes.push_back(node);
  }
  for (int slot = 1; slot <= internals; ++slot) {
    if (!alive[slot]) continue;
    d.nodes[index_of[slot]].lo = index_of[edge0[slot]];
    d.nodes[index_of[slot]].hi = index_of[edge1[slot]];
  }
  d.root = index_of[1];
  return d;
}

}  // namespace

omtbdd generate_diagram(const generator_params& params) {
  if (params.num_values < 2)
    throw std::invalid_argument("generate: need at least two values");
  if (params.num_vars < 1)
    throw std::invalid_argument("generate: need at least one variable");
  if (params.nodes < params.num_values + 1)
    throw std::invalid_argument(
        "generate: nodes must be at least num_values + 1");
  if (params.max_rounds < 1)
    throw std::invalid_argument("generate: max_rounds must be positive");
  if (params.max_reselect < 1)
    throw std::invalid_argument("generate: max_reselect must be positive");

  std::mt19937_64 rng(params.seed);
  const int n = params.nodes;
  int target_total = n;  // slots to lay out in the next attempt
  int produced = n;      // reduced size of the previous attempt
  int last_count = 0;
  for (int round = 1; round <= params.max_rounds; ++round) {
    // Steer the slot count by the previous round's shortfall or overshoot.
    target_total =
        std::clamp(target_total + (n - produced), params.num_values + 1, 4 * n);
    const std::optional<omtbdd> raw =
        build_attempt(rng, target_total, params.num_vars, params.num_values,
                      params.max_reselect);
    if (!raw) {
      produced = n;
      continue;
    }
    omtbdd candidate = reduce(*raw);
    last_count = static_cast<int>(candidate.nodes.size());
    produced = last_count;
    if (last_count == n) return candidate;
  }
  throw generation_error("generate: no attempt hit the requested node count",
                         params, params.max_rounds, last_count);
}

}  // namespace qlearn
