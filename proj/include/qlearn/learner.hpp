#pragma once

#include <cassert>
#include <cstdint>
#include <functional>
#include <string>
#include <utility>
#include <vector>

#include "qlearn/bitstring.hpp"
#include "qlearn/ctree.hpp"
#include "qlearn/hypothesis.hpp"
#include "qlearn/omtbdd.hpp"
#include "qlearn/oracles.hpp"

namespace qlearn {

/// Bisects [lo, hi] for an adjacent index pair where pred flips. pred(lo) ==
/// at_lo and pred(hi) == at_hi are taken as given and never re-evaluated;
/// pred runs at most ceil(log2(hi - lo)) times, only at interior midpoints
/// (floor division). The predicate need not be monotone: any flip pair is a
/// valid answer. Returns (a, a+1) with pred(a) == at_lo and pred(a+1) ==
/// at_hi.
template <class Pred>
std::pair<int, int> find_flip(int lo, int hi, bool at_lo, bool at_hi, Pred&& pred) {
  assert(lo < hi);
  assert(at_lo != at_hi);
  while (hi - lo > 1) {
    const int mid = lo + (hi - lo) / 2;
    if (static_cast<bool>(pred(mid)) == at_lo)
      lo = mid;
    else
      hi = mid;
  }
  return {lo, hi};
}

struct learn_stats {
  std::uint64_t membership_queries = 0;
  std::uint64_t equivalence_queries = 0;
  int updates = 0;
  int node_splits = 0;
  int branch_insertions = 0;
};

/// The learner's working state: the hypothesis graph plus one classification
/// tree per level (trees[1..num_vars]; index 0 is unused).
struct learner_state {
  int num_vars = 0;
  hypothesis hyp;
  std::vector<ctree> trees;
};

struct learn_options {
  /// Pre-sizes the value range; the actual range is discovered from answers.
  int num_values_hint = 0;
  /// Wiring descends with the unconsumed label suffix instead of re-walking
  /// the full distinguishing string (a variant kept for comparison).
  bool addedge_suffix = false;
  /// Run the white-box condition checker after the initial hypothesis and
  /// after every refinement; requires `reference`. Heavy: test/debug only.
  bool check_invariants = false;
  /// The target diagram, for the condition checker only. Queries made by the
  /// checker do not touch the learner's counters.
  const omtbdd* reference = nullptr;
  /// Receives one line-delimited record per query and per refinement.
  std::function<void(const std::string&)> event_sink;
  /// Called after the initial hypothesis and after every refinement.
  std::function<void(const learner_state&, const learn_stats&)> on_update;
};

struct learn_result {
  omtbdd diagram;
  learn_stats stats;
  /// Condition-checker findings (empty unless check_invariants found any).
  std::vector<std::string> violations;
};

/// Learns an exact diagram for the function behind the oracles. Terminates
/// when the equivalence oracle accepts; with surrogate equivalence oracles
/// the result is exact only up to the surrogate's notion of acceptance.
/// Throws std::runtime_error when an oracle violates the query protocol
/// (e.g. a returned counterexample fails to distinguish the hypothesis).
learn_result learn(int num_vars, membership_oracle& mq, equivalence_oracle& eq,
                   const learn_options& opts = {});

/// White-box invariant check of a learner state against the target it is
/// learning: node identities name real branching points, same-level
/// identities are distinguishable, classification answers are consistent
/// with the graph's nodes and edges, and (for num_vars <= 12, exhaustively)
/// strings naming no branching point classify as unknown. Returns
/// human-readable violations; empty when all conditions hold.
std::vector<std::string> check_conditions(const learner_state& st, const omtbdd& target);

}  // namespace qlearn
