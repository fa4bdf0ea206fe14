#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "qlearn/bitstring.hpp"

namespace qlearn {

using node_index = std::int32_t;
inline constexpr node_index no_node = -1;

/// One vertex of a diagram. var is the 1-based variable tested by an internal
/// node; var == 0 marks a sink carrying `value`.
struct diagram_node {
  int var = 0;
  node_index lo = no_node;
  node_index hi = no_node;
  int value = 0;

  bool is_sink() const { return var == 0; }
};

/// An ordered multi-terminal binary decision diagram: a rooted DAG computing a
/// function {0,1}^num_vars -> {0..num_values-1}. Variable indices strictly
/// increase along every edge; skipped variables are don't-cares. num_values is
/// a capacity declaration (the value range), not necessarily the number of
/// sinks present.
struct omtbdd {
  int num_vars = 0;
  int num_values = 0;
  node_index root = no_node;
  std::vector<diagram_node> nodes;
};

/// The diagram computing the constant function `value`.
omtbdd constant_diagram(int num_vars, int num_values, int value);

/// Value of the diagram at a full assignment; |input| must equal num_vars.
int eval(const omtbdd& d, const bitstring& input);

/// The node "just reached" by partial assignment a: follow branches while the
/// current node tests a variable covered by a, then return that node if its
/// effective variable is |a|+1 (sinks count as testing variable num_vars+1).
/// Returns no_node when |a| ends strictly inside a skipped range.
node_index trace_to_node(const omtbdd& d, const bitstring& a);

/// The unique reduced diagram for the same function: duplicate sinks and
/// internal nodes merged, redundant tests bypassed, unreachable nodes dropped,
/// nodes renumbered in a canonical depth-first preorder (lo before hi) from
/// the root.
omtbdd reduce(const omtbdd& d);

/// True iff d has no duplicate sinks, no duplicate internal nodes, no
/// redundant tests, and no unreachable nodes.
bool is_reduced(const omtbdd& d);

/// Graph equality of the parts reachable from the roots (after canonical
/// renumbering); ignores num_values, which is only a capacity declaration.
bool structurally_equal(const omtbdd& a, const omtbdd& b);

/// A full assignment on which the two diagrams disagree, or nullopt when they
/// compute the same function. Both diagrams must have the same num_vars.
std::optional<bitstring> find_difference(const omtbdd& a, const omtbdd& b);

/// Function equality.
bool equivalent(const omtbdd& a, const omtbdd& b);

/// Structural problems in human-readable form; empty when the diagram is
/// well-formed (indices in range, variable order respected, values in range).
std::vector<std::string> validate(const omtbdd& d);

/// Serializes to the text document format (one node per line).
std::string encode(const omtbdd& d);

/// Parses the text document format; blank lines and lines starting with '#'
/// are ignored. Throws std::runtime_error with a line reference on malformed
/// input and on structurally invalid diagrams.
omtbdd decode(const std::string& text);

/// Graphviz rendering; sinks are boxes, 0-edges dashed.
std::string to_dot(const omtbdd& d);

/// Builds the reduced diagram of an arbitrary function given by evaluation,
/// by tabulating all 2^num_vars inputs. Intended for small num_vars (capped at
/// 20 to bound memory; throws std::invalid_argument beyond).
omtbdd tabulate(int num_vars, int num_values,
                const std::function<int(const bitstring&)>& fn);

}  // namespace qlearn
