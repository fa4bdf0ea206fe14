#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>

#include "qlearn/omtbdd.hpp"

namespace qlearn {

/// Parameters for random diagram generation.
struct generator_params {
  int nodes = 0;      ///< exact node count of the result, sinks included
  int num_vars = 0;   ///< number of input variables
  int num_values = 2; ///< sink values are drawn distinct from 0..num_values-1
  std::uint64_t seed = 0;
  int max_rounds = 10000;  ///< build/reduce attempts before giving up
  int max_reselect = 64;   ///< duplicate-edge redraws before rewiring a node
};

/// Thrown when no attempt within the round budget produced a reduced diagram
/// of the requested size.
class generation_error : public std::runtime_error {
 public:
  generation_error(const std::string& what, const generator_params& params,
                   int rounds, int last_count);

  const generator_params& params() const { return params_; }
  /// Number of build/reduce rounds that ran.
  int rounds() const { return rounds_; }
  /// Node count of the final attempt.
  int last_count() const { return last_count_; }

 private:
  generator_params params_;
  int rounds_ = 0;
  int last_count_ = 0;
};

/// Draws a random reduced diagram with exactly `params.nodes` nodes over
/// `params.num_vars` variables, using at most `params.num_values` distinct
/// sink values. Deterministic per seed: equal parameters produce structurally
/// identical results on every platform. Throws generation_error when the
/// round budget runs out, and std::invalid_argument for unusable parameters
/// (fewer than two values, no variables, or nodes < num_values + 1).
omtbdd generate_diagram(const generator_params& params);

}  // namespace qlearn
