#include "qlearn/pipeline.hpp"

#include <cassert>
#include <charconv>
#include <map>
#include <set>
#include <sstream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <tuple>
#include <utility>
#include <vector>

#include "qlearn/learner.hpp"

namespace qlearn {
namespace {

[[noreturn]] void fail_line(const char* what, int line_no,
                            const std::string& detail) {
  throw std::runtime_error(std::string(what) + ": line " +
                           std::to_string(line_no) + ": " + detail);
}

std::string_view trimmed(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() &&
         (s.back() == ' ' || s.back() == '\t' || s.back() == '\r'))
    s.remove_suffix(1);
  return s;
}

bool parse_ll(std::string_view token, long long& out) {
  const auto res = std::from_chars(token.data(), token.data() + token.size(), out);
  return res.ec == std::errc{} && res.ptr == token.data() + token.size();
}

bool parse_double(std::string_view token, double& out) {
  const auto res = std::from_chars(token.data(), token.data() + token.size(), out);
  return res.ec == std::errc{} && res.ptr == token.data() + token.size();
}

// Parses a `key=<integer>` token.
long long field_ll(const std::string& token, const char* key, int line_no) {
  const std::string prefix = std::string(key) + "=";
  long long value = 0;
  if (token.rfind(prefix, 0) != 0 ||
      !parse_ll(std::string_view(token).substr(prefix.size()), value))
    fail_line("classifier", line_no,
              "expected " + prefix + "<integer>, got \"" + token + "\"");
  return value;
}

// Parses a `key=<decimal>` token.
double field_double(const std::string& token, const char* key, int line_no) {
  const std::string prefix = std::string(key) + "=";
  double value = 0;
  if (token.rfind(prefix, 0) != 0 ||
      !parse_double(std::string_view(token).substr(prefix.size()), value))
    fail_line("classifier", line_no,
              "expected " + prefix + "<decimal>, got \"" + token + "\"");
  return value;
}

std::string format_double(double value) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, value);
  assert(res.ec == std::errc{});
  return std::string(buf, res.ptr);
}

// Majority vote across trees; `take_true(tree_index, node_index, node)`
// decides each split. Ties go to the smallest class.
template <class TakeTrue>
int vote_impl(const tree_classifier& c, TakeTrue&& take_true) {
  if (c.num_classes < 1)
    throw std::invalid_argument("classifier declares no classes");
  std::vector<int> votes(c.num_classes, 0);
  for (std::size_t t = 0; t < c.trees.size(); ++t) {
    const classifier_tree& tree = c.trees[t];
    int at = tree.root;
    const classifier_node* node = &tree.nodes.at(at);
    while (!node->leaf) {
      at = take_true(static_cast<int>(t), at, *node) ? node->child_true
                                                     : node->child_false;
      node = &tree.nodes.at(at);
    }
    ++votes.at(node->label);
  }
  int best = 0;
  for (int k = 1; k < c.num_classes; ++k)
    if (votes[k] > votes[best]) best = k;
  return best;
}

std::map<std::pair<int, double>, int> condition_lookup(
    const std::vector<condition>& ordered) {
  std::map<std::pair<int, double>, int> index;
  for (std::size_t j = 0; j < ordered.size(); ++j)
    index[{ordered[j].feature, ordered[j].threshold}] = static_cast<int>(j);
  return index;
}

// Counts, for every ordered pair of conditions, how often a split on the
// first sits above a split on the second, walking each root-to-leaf path.
void count_ancestors(const classifier_tree& tree, int at,
                     const std::map<std::pair<int, double>, int>& index,
                     std::vector<int>& stack,
                     std::vector<std::vector<long long>>& cnt) {
  const classifier_node& node = tree.nodes.at(at);
  if (node.leaf) return;
  const auto it = index.find({node.feature, node.threshold});
  if (it == index.end())
    throw std::invalid_argument(
        "order_variables: a split condition is missing from the list");
  const int j = it->second;
  for (int i : stack) cnt[i][j] += 1;
  stack.push_back(j);
  count_ancestors(tree, node.child_true, index, stack, cnt);
  count_ancestors(tree, node.child_false, index, stack, cnt);
  stack.pop_back();
}

}  // namespace

tree_classifier load_classifier(const std::string& text) {
  struct raw_node {
    bool leaf = false;
    long long doc_id = 0;
    int feature = -1;
    double threshold = 0.0;
    long long child_true = 0, child_false = 0;
    int label = 0;
    int line_no = 0;
  };
  struct raw_tree {
    long long root_id = 0;
    int line_no = 0;
    std::vector<raw_node> nodes;
    std::map<long long, int> by_id;
  };

  std::istringstream is(text);
  std::string line;
  int line_no = 0;
  bool saw_header = false;
  long long declared_trees = 0, declared_classes = 0, declared_features = 0;
  std::vector<raw_tree> raws;

  while (std::getline(is, line)) {
    ++line_no;
    std::istringstream ls(line);
    std::string word;
    if (!(ls >> word)) continue;  // blank line
    if (word[0] == '#') continue;

    if (!saw_header) {
      if (word != "forest")
        fail_line("classifier", line_no, "expected the forest header line");
      std::string tt, tc, tf;
      if (!(ls >> tt >> tc >> tf))
        fail_line("classifier", line_no,
                  "header needs trees=, classes= and features= fields");
      declared_trees = field_ll(tt, "trees", line_no);
      declared_classes = field_ll(tc, "classes", line_no);
      declared_features = field_ll(tf, "features", line_no);
      if (declared_trees < 1)
        fail_line("classifier", line_no, "a forest needs at least one tree");
      if (declared_classes < 1)
        fail_line("classifier", line_no, "a forest needs at least one class");
      if (declared_features < 0)
        fail_line("classifier", line_no, "feature count cannot be negative");
      saw_header = true;
      continue;
    }

    if (word == "tree") {
      std::string tidx, troot;
      if (!(ls >> tidx >> troot))
        fail_line("classifier", line_no, "tree line needs an index and root=");
      long long idx = 0;
      if (!parse_ll(tidx, idx))
        fail_line("classifier", line_no, "bad tree index \"" + tidx + "\"");
      if (idx != static_cast<long long>(raws.size()))
        fail_line("classifier", line_no,
                  "tree sections must appear in order; expected index " +
                      std::to_string(raws.size()));
      raw_tree rt;
      rt.root_id = field_ll(troot, "root", line_no);
      rt.line_no = line_no;
      raws.push_back(std::move(rt));
      continue;
    }

    if (word == "split" || word == "leaf") {
      if (raws.empty())
        fail_line("classifier", line_no, "node line before the first tree");
      raw_node rn;
      rn.line_no = line_no;
      std::string tid;
      if (!(ls >> tid) || !parse_ll(tid, rn.doc_id))
        fail_line("classifier", line_no, "node line needs a numeric id");
      if (word == "split") {
        std::string tf, tt, ttrue, tfalse;
        if (!(ls >> tf >> tt >> ttrue >> tfalse))
          fail_line("classifier", line_no,
                    "split needs feature=, threshold=, true= and false=");
        rn.feature = static_cast<int>(field_ll(tf, "feature", line_no));
        rn.threshold = field_double(tt, "threshold", line_no);
        rn.child_true = field_ll(ttrue, "true", line_no);
        rn.child_false = field_ll(tfalse, "false", line_no);
      } else {
        rn.leaf = true;
        std::string tc;
        if (!(ls >> tc))
          fail_line("classifier", line_no, "leaf needs a class= field");
        rn.label = static_cast<int>(field_ll(tc, "class", line_no));
      }
      raw_tree& rt = raws.back();
      if (!rt.by_id.emplace(rn.doc_id, static_cast<int>(rt.nodes.size())).second)
        fail_line("classifier", line_no,
                  "duplicate node id " + std::to_string(rn.doc_id));
      rt.nodes.push_back(rn);
      continue;
    }

    fail_line("classifier", line_no, "unknown directive \"" + word + "\"");
  }

  if (!saw_header)
    throw std::runtime_error("classifier: missing the forest header line");
  if (static_cast<long long>(raws.size()) != declared_trees)
    throw std::runtime_error(
        "classifier: header declares " + std::to_string(declared_trees) +
        " trees, found " + std::to_string(raws.size()));

  tree_classifier c;
  c.num_classes = static_cast<int>(declared_classes);
  c.num_features = static_cast<int>(declared_features);
  for (std::size_t t = 0; t < raws.size(); ++t) {
    const raw_tree& rt = raws[t];
    const std::string where = "classifier: tree " + std::to_string(t);
    const auto resolve = [&](long long doc_id, int from_line) {
      const auto it = rt.by_id.find(doc_id);
      if (it == rt.by_id.end())
        fail_line("classifier", from_line,
                  "reference to unknown node " + std::to_string(doc_id));
      return it->second;
    };
    if (rt.nodes.empty())
      throw std::runtime_error(where + ": has no nodes");

    classifier_tree tree;
    tree.root = resolve(rt.root_id, rt.line_no);
    for (const raw_node& rn : rt.nodes) {
      classifier_node node;
      node.leaf = rn.leaf;
      if (rn.leaf) {
        if (rn.label < 0 || rn.label >= c.num_classes)
          fail_line("classifier", rn.line_no,
                    "class " + std::to_string(rn.label) + " out of range");
        node.label = rn.label;
      } else {
        if (rn.feature < 0 || rn.feature >= c.num_features)
          fail_line("classifier", rn.line_no,
                    "feature " + std::to_string(rn.feature) + " out of range");
        node.feature = rn.feature;
        node.threshold = rn.threshold;
        node.child_true = resolve(rn.child_true, rn.line_no);
        node.child_false = resolve(rn.child_false, rn.line_no);
      }
      tree.nodes.push_back(node);
    }

    // Walk from the root: no cycles, and every declared node reachable.
    std::vector<int> color(tree.nodes.size(), 0);  // 0 new, 1 open, 2 done
    std::vector<std::pair<int, int>> stack{{tree.root, 0}};
    color[tree.root] = 1;
    while (!stack.empty()) {
      auto& [at, phase] = stack.back();
      const classifier_node& node = tree.nodes[at];
      if (node.leaf || phase == 2) {
        color[at] = 2;
        stack.pop_back();
        continue;
      }
      const int child = phase == 0 ? node.child_true : node.child_false;
      ++phase;
      if (color[child] == 1)
        throw std::runtime_error(where + ": cycle through node " +
                                 std::to_string(raws[t].nodes[child].doc_id));
      if (color[child] == 0) {
        color[child] = 1;
        stack.emplace_back(child, 0);
      }
    }
    for (std::size_t i = 0; i < color.size(); ++i)
      if (color[i] != 2)
        throw std::runtime_error(where + ": node " +
                                 std::to_string(rt.nodes[i].doc_id) +
                                 " is unreachable from the root");

    c.trees.push_back(std::move(tree));
  }
  return c;
}

std::string emit_classifier(const tree_classifier& c) {
  std::string out = "forest trees=" + std::to_string(c.trees.size()) +
                    " classes=" + std::to_string(c.num_classes) +
                    " features=" + std::to_string(c.num_features) + "\n";
  for (std::size_t t = 0; t < c.trees.size(); ++t) {
    const classifier_tree& tree = c.trees[t];
    out += "tree " + std::to_string(t) + " root=" + std::to_string(tree.root) +
           "\n";
    for (std::size_t i = 0; i < tree.nodes.size(); ++i) {
      const classifier_node& node = tree.nodes[i];
      if (node.leaf) {
        out += "leaf " + std::to_string(i) +
               " class=" + std::to_string(node.label) + "\n";
      } else {
        out += "split " + std::to_string(i) +
               " feature=" + std::to_string(node.feature) +
               " threshold=" + format_double(node.threshold) +
               " true=" + std::to_string(node.child_true) +
               " false=" + std::to_string(node.child_false) + "\n";
      }
    }
  }
  return out;
}

int predict(const tree_classifier& c, const std::vector<double>& sample) {
  if (static_cast<int>(sample.size()) != c.num_features)
    throw std::invalid_argument(
        "predict: sample has " + std::to_string(sample.size()) +
        " features, classifier expects " + std::to_string(c.num_features));
  return vote_impl(c, [&](int, int, const classifier_node& node) {
    return sample[node.feature] <= node.threshold;
  });
}

int predict_binary(const tree_classifier& c,
                   const std::vector<condition>& ordered,
                   const bitstring& bits) {
  if (bits.size() != ordered.size())
    throw std::invalid_argument(
        "predict_binary: got " + std::to_string(bits.size()) +
        " bits for " + std::to_string(ordered.size()) + " conditions");
  const auto index = condition_lookup(ordered);
  return vote_impl(c, [&](int, int, const classifier_node& node) {
    const auto it = index.find({node.feature, node.threshold});
    if (it == index.end())
      throw std::invalid_argument(
          "predict_binary: a split condition is missing from the list");
    return bits.bit(it->second) != 0;
  });
}

std::vector<condition> extract_conditions(const tree_classifier& c) {
  std::vector<condition> out;
  std::set<std::pair<int, double>> seen;
  for (const classifier_tree& tree : c.trees) {
    std::vector<int> stack{tree.root};
    while (!stack.empty()) {
      const classifier_node& node = tree.nodes.at(stack.back());
      stack.pop_back();
      if (node.leaf) continue;
      if (seen.insert({node.feature, node.threshold}).second)
        out.push_back({node.feature, node.threshold});
      stack.push_back(node.child_false);
      stack.push_back(node.child_true);  // popped first: preorder, true first
    }
  }
  return out;
}

std::vector<condition> order_variables(
    const tree_classifier& c, const std::vector<condition>& conditions) {
  const int a = static_cast<int>(conditions.size());
  const auto index = condition_lookup(conditions);
  std::vector<std::vector<long long>> cnt(a, std::vector<long long>(a, 0));
  std::vector<int> anc;
  for (const classifier_tree& tree : c.trees)
    count_ancestors(tree, tree.root, index, anc, cnt);

  // One edge per imbalanced pair, pointing at the condition that sits below
  // more often; built in pair discovery order.
  struct prec_edge {
    int src, dst;
    long long weight;
    bool removed = false;
  };
  std::vector<prec_edge> edges;
  for (int i = 0; i < a; ++i) {
    for (int j = i + 1; j < a; ++j) {
      const long long d = cnt[i][j] - cnt[j][i];
      if (d > 0) edges.push_back({i, j, d});
      else if (d < 0) edges.push_back({j, i, -d});
    }
  }

  for (;;) {
    std::vector<int> indeg(a, 0);
    for (const prec_edge& e : edges)
      if (!e.removed) ++indeg[e.dst];
    std::vector<int> order;
    std::vector<char> placed(a, 0);
    for (;;) {
      int pick = -1;
      for (int v = 0; v < a; ++v)
        if (!placed[v] && indeg[v] == 0) { pick = v; break; }
      if (pick < 0) break;
      placed[pick] = 1;
      order.push_back(pick);
      for (const prec_edge& e : edges)
        if (!e.removed && e.src == pick) --indeg[e.dst];
    }
    if (static_cast<int>(order.size()) == a) {
      std::vector<condition> out;
      out.reserve(a);
      for (int v : order) out.push_back(conditions[v]);
      return out;
    }
    // Still cyclic: drop the lightest edge, ties by (src, dst) order.
    int best = -1;
    for (std::size_t k = 0; k < edges.size(); ++k) {
      if (edges[k].removed) continue;
      if (best < 0 ||
          std::tuple(edges[k].weight, edges[k].src, edges[k].dst) <
              std::tuple(edges[best].weight, edges[best].src, edges[best].dst))
        best = static_cast<int>(k);
    }
    assert(best >= 0);  // a cycle implies a live edge
    edges[best].removed = true;
  }
}

bitstring binarize(const std::vector<double>& sample,
                   const std::vector<condition>& ordered) {
  bitstring bits = bitstring::zeros(ordered.size());
  for (std::size_t j = 0; j < ordered.size(); ++j) {
    const condition& cond = ordered[j];
    if (cond.feature < 0 || cond.feature >= static_cast<int>(sample.size()))
      throw std::invalid_argument(
          "binarize: feature " + std::to_string(cond.feature) +
          " outside the sample arity " + std::to_string(sample.size()));
    if (sample[cond.feature] <= cond.threshold) bits.set_bit(j, 1);
  }
  return bits;
}

classifier_membership::classifier_membership(tree_classifier c,
                                             std::vector<condition> ordered)
    : classifier_(std::move(c)), ordered_(std::move(ordered)) {
  const auto index = condition_lookup(ordered_);
  for (const classifier_tree& tree : classifier_.trees) {
    std::vector<int> per_node(tree.nodes.size(), -1);
    for (std::size_t i = 0; i < tree.nodes.size(); ++i) {
      const classifier_node& node = tree.nodes[i];
      if (node.leaf) continue;
      const auto it = index.find({node.feature, node.threshold});
      if (it == index.end())
        throw std::invalid_argument(
            "classifier membership: a split condition is missing from the "
            "ordered list");
      per_node[i] = it->second;
    }
    condition_index_.push_back(std::move(per_node));
  }
}

int classifier_membership::answer(const bitstring& input) {
  if (input.size() != ordered_.size())
    throw std::invalid_argument(
        "classifier membership: got " + std::to_string(input.size()) +
        " bits for " + std::to_string(ordered_.size()) + " conditions");
  return vote_impl(classifier_, [&](int t, int at, const classifier_node&) {
    return input.bit(condition_index_[t][at]) != 0;
  });
}

std::vector<dataset_row> parse_dataset(const std::string& csv_text) {
  std::istringstream is(csv_text);
  std::string line;
  int line_no = 0;
  bool first_significant = true;
  int width = -1;
  std::vector<dataset_row> rows;
  while (std::getline(is, line)) {
    ++line_no;
    if (trimmed(line).empty()) continue;

    std::vector<std::string> fields;
    std::size_t start = 0;
    for (;;) {
      const std::size_t comma = line.find(',', start);
      fields.emplace_back(
          trimmed(std::string_view(line).substr(start, comma - start)));
      if (comma == std::string::npos) break;
      start = comma + 1;
    }

    if (first_significant) {
      first_significant = false;
      bool numeric = true;
      for (const std::string& f : fields) {
        double v;
        if (!parse_double(f, v)) { numeric = false; break; }
      }
      if (!numeric) continue;  // header line
    }

    if (width < 0)
      width = static_cast<int>(fields.size());
    else if (static_cast<int>(fields.size()) != width)
      fail_line("dataset", line_no,
                "expected " + std::to_string(width) + " columns, got " +
                    std::to_string(fields.size()));

    dataset_row row;
    for (std::size_t i = 0; i + 1 < fields.size(); ++i) {
      double v;
      if (!parse_double(fields[i], v))
        fail_line("dataset", line_no,
                  "bad feature value \"" + fields[i] + "\"");
      row.features.push_back(v);
    }
    long long label;
    if (!parse_ll(fields.back(), label))
      fail_line("dataset", line_no,
                "bad label \"" + fields.back() + "\" (integer expected)");
    row.label = static_cast<int>(label);
    rows.push_back(std::move(row));
  }
  return rows;
}

compile_result compile_classifier(const tree_classifier& c,
                                  const std::vector<dataset_row>& rows,
                                  const compile_options& options) {
  if (c.num_classes < 1)
    throw std::invalid_argument("compile: classifier declares no classes");
  for (std::size_t i = 0; i < rows.size(); ++i)
    if (static_cast<int>(rows[i].features.size()) != c.num_features)
      throw std::invalid_argument(
          "compile: row " + std::to_string(i) + " has " +
          std::to_string(rows[i].features.size()) +
          " features, classifier expects " + std::to_string(c.num_features));

  compile_result out;
  out.ordered = order_variables(c, extract_conditions(c));
  compile_report& report = out.report;
  report.num_conditions = static_cast<int>(out.ordered.size());
  report.rows_total = static_cast<int>(rows.size());
  for (const dataset_row& row : rows)
    if (predict(c, row.features) == row.label) ++report.rows_used;

  if (out.ordered.empty()) {
    // No split anywhere: the prediction is one fixed vote.
    const int value = predict_binary(c, out.ordered, bitstring{});
    out.diagram = constant_diagram(1, c.num_classes, value);
    report.learned_nodes = static_cast<int>(out.diagram.nodes.size());
    return out;
  }

  const int a = report.num_conditions;
  classifier_membership mq(c, out.ordered);
  learn_options lo;
  lo.num_values_hint = c.num_classes;
  learn_result learned;
  if (options.exact_equivalence) {
    if (a > 16)
      throw std::invalid_argument(
          "compile: exact equivalence supports at most 16 conditions");
    const omtbdd table =
        tabulate(a, c.num_classes, [&](const bitstring& x) {
          return predict_binary(c, out.ordered, x);
        });
    diagram_equivalence eq(table);
    learned = learn(a, mq, eq, lo);
  } else {
    std::vector<labeled_row> sample;
    for (const dataset_row& row : rows) {
      if (predict(c, row.features) != row.label) continue;
      sample.push_back({binarize(row.features, out.ordered), row.label});
    }
    dataset_equivalence eq(std::move(sample));
    learned = learn(a, mq, eq, lo);
  }
  out.diagram = std::move(learned.diagram);
  report.learned_nodes = static_cast<int>(out.diagram.nodes.size());
  report.membership_queries = learned.stats.membership_queries;
  report.equivalence_queries = learned.stats.equivalence_queries;
  return out;
}

std::string format_report(const compile_report& report) {
  std::string out;
  out += "conditions " + std::to_string(report.num_conditions) + "\n";
  out += "learned_nodes " + std::to_string(report.learned_nodes) + "\n";
  out += "membership_queries " + std::to_string(report.membership_queries) + "\n";
  out += "equivalence_queries " + std::to_string(report.equivalence_queries) + "\n";
  out += "rows_total " + std::to_string(report.rows_total) + "\n";
  out += "rows_used " + std::to_string(report.rows_used) + "\n";
  return out;
}

}  // namespace qlearn
