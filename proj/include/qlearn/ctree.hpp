#pragma once

#include <functional>
#include <string>
#include <utility>
#include <vector>

#include "qlearn/bitstring.hpp"

namespace qlearn {

/// Answers a full assignment with its value under the target function.
using membership_fn = std::function<int(const bitstring&)>;

enum class classify_kind {
  at_leaf,   // the string matched a known node identity
  unknown,   // the string matched nothing the tree knows about
  stuck,     // a value test saw a value with no branch yet
};

struct classify_result {
  classify_kind kind = classify_kind::unknown;
  bitstring leaf_id;    // at_leaf only
  int stuck_node = -1;  // stuck only: index of the value test that lacked a branch
  bitstring stuck_test;
  int stuck_value = -1;

  bool operator==(const classify_result&) const = default;
};

/// A decision tree classifying the length-j strings of one level into a known
/// node identity or "unknown". Two test-node shapes exist:
///
///  * pair test: label r; queries the value pair at (a+r, a+flip_first(r)).
///    Its single keyed edge carries the pair observed for a known branching
///    node (two distinct values); everything else falls through toward the
///    unique unknown leaf. Costs two queries.
///  * value test: label r; queries the value at a+r and follows the branch
///    keyed by that value, or reports "stuck" when no such branch exists yet.
///    Costs one query.
///
/// Every pair test lies on the path from the root to the unknown leaf; leaves
/// hang off value-test branches (or directly off a pair test's keyed edge).
/// The bottom level's tree has a value-test root with an empty test and no
/// pair tests or unknown leaf at all.
class ctree {
 public:
  /// A tree that classifies everything as unknown.
  ctree();

  static ctree value_test_root(bitstring test,
                               std::vector<std::pair<int, bitstring>> branches);
  static ctree pair_test_root(bitstring test, std::pair<int, int> seen, bitstring leaf_id);

  classify_result classify(const bitstring& a, const membership_fn& mq) const;

  /// Label of the deepest pair test on the path from the root to this leaf;
  /// throws std::logic_error when the path has none.
  bitstring last_pair_test_label(const bitstring& leaf_id) const;

  struct value_split {
    bitstring test;
    std::vector<std::pair<int, bitstring>> branches;  // (value, leaf identity)
  };

  /// Replaces the leaf carrying this identity by a value test.
  void replace_leaf_with_value_test(const bitstring& leaf_id, const value_split& split);

  /// Converts the unique unknown leaf into a pair test whose keyed edge leads
  /// to a new leaf and whose fall-through leads to a fresh unknown leaf.
  void extend_unknown(bitstring test, std::pair<int, int> seen, bitstring leaf_id);

  /// Adds a branch to an existing value test (index as reported by classify).
  void add_value_branch(int value_test_node, int value, bitstring leaf_id);

  std::vector<bitstring> leaf_ids() const;
  bool unknown_only() const;
  int size() const { return static_cast<int>(nodes_.size()); }

  /// Structural problems for the tree serving level `level` of an
  /// m-variable hypothesis; empty when consistent.
  std::vector<std::string> validate(int level, int num_vars) const;

 private:
  struct tnode {
    enum kind_t { pair_test, value_test, leaf, unknown } kind = unknown;
    bitstring test;
    std::pair<int, int> seen{-1, -1};  // pair test: the keyed edge's value pair
    int matched = -1;                  // pair test: child on the keyed edge
    int fallthrough = -1;              // pair test: child otherwise
    std::vector<std::pair<int, int>> branches;  // value test: (value, child)
    bitstring id;                      // leaf
  };

  int add(tnode n);
  int find_leaf(const bitstring& leaf_id) const;
  int find_unknown() const;
  bool path_to(int node, int goal, std::vector<int>& path) const;

  std::vector<tnode> nodes_;
  int root_ = -1;
};

}  // namespace qlearn
