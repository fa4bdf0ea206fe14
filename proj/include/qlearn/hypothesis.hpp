#pragma once

#include <array>
#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

#include "qlearn/bitstring.hpp"
#include "qlearn/omtbdd.hpp"

namespace qlearn {

/// An outgoing edge: a bit-string label whose length equals the level gap
/// between endpoints. Only the first label bit is branched on; the rest of
/// the label records skipped (don't-care) positions.
struct hyp_edge {
  bitstring label;
  int target = -1;
};

struct hyp_node {
  bitstring id;   // the node's access string; its length is the node's level
  bool sink = false;
  int value = -1;  // sinks only
  std::array<std::optional<hyp_edge>, 2> out;  // indexed by the label's first bit
  // Incoming edges as (source node, source slot) pairs; kept consistent by the
  // edit operations below.
  std::vector<std::pair<int, int>> incoming;
};

/// A working hypothesis diagram whose nodes carry bit-string identities and
/// whose edges carry bit-string labels. The root is the empty string; it may
/// start as a "dummy" placeholder holding a single unconditional edge to the
/// first real node.
class hypothesis {
 public:
  hypothesis() = default;
  hypothesis(int num_vars, bool dummy_root);

  int num_vars() const { return num_vars_; }
  bool has_dummy_root() const { return dummy_; }
  static constexpr int root_index = 0;
  /// Returned by find() when no node carries the identity.
  static constexpr int no_index = -1;

  int total_nodes() const { return static_cast<int>(nodes_.size()); }
  /// Node count excluding a dummy root.
  int node_count() const { return total_nodes() - (dummy_ ? 1 : 0); }

  const hyp_node& node(int i) const { return nodes_.at(i); }
  int level(int i) const { return static_cast<int>(nodes_.at(i).id.size()); }
  /// Index of the node with this identity, or -1.
  int find(const bitstring& id) const;

  int add_node(bitstring id);
  int add_sink(bitstring id, int value);
  /// Adds an edge; throws std::logic_error when the label length does not
  /// match the level gap, the slot for its first bit is taken, or a second
  /// edge is added to a dummy root.
  void add_edge(int from, int to, const bitstring& label);
  /// Removes the edge leaving `from` whose label starts with the given
  /// label's first bit (the label must match exactly).
  void remove_edge(int from, const bitstring& label);
  /// Redirects an existing edge to a new target, keeping its label.
  void move_edge(int from, const bitstring& label, int new_target);
  /// Turns a dummy root into a real branching node (its existing edge stays).
  void promote_root();

  /// Node indices visited by a full assignment, root first, ending at a sink.
  /// The dummy root's edge is followed unconditionally. Throws
  /// std::logic_error when a needed edge is missing.
  std::vector<int> trace(const bitstring& input) const;
  /// Value at a full assignment.
  int eval_value(const bitstring& input) const;

  /// All edges except a dummy root's placeholder edge, as (from, to, label).
  std::vector<std::tuple<int, int, bitstring>> edges() const;
  /// Snapshot of the incoming edges of a node, as (from, label).
  std::vector<std::pair<int, bitstring>> incoming_edges(int node) const;

  /// Converts to a diagram (dummy root dropped). Every non-sink node must
  /// have both outgoing edges; throws std::logic_error otherwise.
  omtbdd extract(int num_values) const;

  /// Structural problems; empty when consistent.
  std::vector<std::string> validate() const;

 private:
  int num_vars_ = 0;
  bool dummy_ = false;
  std::vector<hyp_node> nodes_;
  std::unordered_map<bitstring, int> index_of_id_;
};

}  // namespace qlearn
