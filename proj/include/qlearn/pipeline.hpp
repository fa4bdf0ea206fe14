#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "qlearn/bitstring.hpp"
#include "qlearn/omtbdd.hpp"
#include "qlearn/oracles.hpp"

namespace qlearn {

/// One node of a decision tree: an internal threshold split or a class leaf.
/// Splits take the `child_true` branch when the tested feature value is less
/// than or equal to the threshold.
struct classifier_node {
  bool leaf = false;
  int feature = -1;       ///< split: tested feature index
  double threshold = 0.0; ///< split: decision boundary
  int child_true = -1;    ///< split: node index when value <= threshold
  int child_false = -1;   ///< split: node index otherwise
  int label = 0;          ///< leaf: class
};

struct classifier_tree {
  int root = -1;
  std::vector<classifier_node> nodes;
};

/// A tree ensemble that predicts by majority vote over its trees; vote ties
/// resolve toward the smallest class index.
struct tree_classifier {
  int num_classes = 0;
  int num_features = 0;
  std::vector<classifier_tree> trees;
};

/// One threshold test `value[feature] <= threshold`, reused as a binary
/// variable. Two conditions are the same exactly when both fields match.
struct condition {
  int feature = 0;
  double threshold = 0.0;
  friend bool operator==(const condition&, const condition&) = default;
};

/// One real-valued sample with its integer class label.
struct dataset_row {
  std::vector<double> features;
  int label = 0;
};

/// Parses the classifier text document (forest header, per-tree node lines).
/// Blank lines and lines starting with '#' are ignored. Throws
/// std::runtime_error naming the offending line or tree on malformed or
/// structurally invalid input (unknown children, cycles, unreachable nodes,
/// out-of-range features or classes).
tree_classifier load_classifier(const std::string& text);

/// Serializes a classifier back to the document format with per-tree node
/// indices as ids; load_classifier(emit_classifier(c)) reproduces c.
std::string emit_classifier(const tree_classifier& c);

/// Majority-vote prediction on a real-valued sample; the sample must have
/// exactly num_features values.
int predict(const tree_classifier& c, const std::vector<double>& sample);

/// Majority-vote prediction where split outcomes are read from `bits`: the
/// split on ordered[j] takes its true branch exactly when bit j is 1.
int predict_binary(const tree_classifier& c,
                   const std::vector<condition>& ordered,
                   const bitstring& bits);

/// All distinct split conditions in discovery order: trees first to last,
/// within a tree depth-first with the true branch before the false branch.
std::vector<condition> extract_conditions(const tree_classifier& c);

/// Permutes conditions into the learning variable order: conditions that sit
/// above others in the trees more often come first. Ancestor imbalances form
/// a weighted precedence graph; smallest-weight edges are dropped one at a
/// time (ties by discovery order) until a topological order exists, and
/// remaining ties fall back to discovery order.
std::vector<condition> order_variables(const tree_classifier& c,
                                       const std::vector<condition>& conditions);

/// The sample's binary feature string: bit j = 1 iff
/// sample[ordered[j].feature] <= ordered[j].threshold.
bitstring binarize(const std::vector<double>& sample,
                   const std::vector<condition>& ordered);

/// Membership oracle backed by a classifier over binarized features.
class classifier_membership final : public membership_oracle {
 public:
  classifier_membership(tree_classifier c, std::vector<condition> ordered);

 private:
  int answer(const bitstring& input) override;
  tree_classifier classifier_;
  std::vector<condition> ordered_;
  std::vector<std::vector<int>> condition_index_;  // per tree, per node
};

/// Parses CSV text: numeric feature columns followed by one integer label
/// column. A first line with any non-numeric field is treated as a header and
/// skipped. Throws std::runtime_error naming the line on malformed rows or
/// inconsistent column counts.
std::vector<dataset_row> parse_dataset(const std::string& csv_text);

struct compile_options {
  /// Learn against an exhaustively tabulated equivalence oracle instead of
  /// the dataset rows; needs at most 16 conditions.
  bool exact_equivalence = false;
};

struct compile_report {
  int num_conditions = 0;
  int learned_nodes = 0;
  std::uint64_t membership_queries = 0;
  std::uint64_t equivalence_queries = 0;
  int rows_total = 0;
  int rows_used = 0;  ///< rows the classifier predicts correctly
};

struct compile_result {
  omtbdd diagram;
  compile_report report;
  std::vector<condition> ordered;  ///< variable order the diagram reads
};

/// The full compilation: extract and order conditions, keep the rows the
/// classifier predicts correctly, binarize them, and learn a diagram from the
/// classifier membership oracle with the row set (or, on request, an exact
/// tabulation) as the equivalence oracle. A classifier with no split
/// conditions compiles to a constant diagram over one placeholder variable
/// without any queries. Row arity must match the classifier.
compile_result compile_classifier(const tree_classifier& c,
                                  const std::vector<dataset_row>& rows,
                                  const compile_options& options = {});

/// Renders a report as `key value` lines.
std::string format_report(const compile_report& report);

}  // namespace qlearn
