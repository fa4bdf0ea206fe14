#include "qlearn/hypothesis.hpp"

#include <algorithm>
#include <cassert>
#include <stdexcept>
#include <tuple>

namespace qlearn {

hypothesis::hypothesis(int num_vars, bool dummy_root)
    : num_vars_(num_vars), dummy_(dummy_root) {
  if (num_vars < 1) throw std::invalid_argument("hypothesis: num_vars must be >= 1");
  hyp_node root;
  root.id = bitstring{};
  nodes_.push_back(std::move(root));
  index_of_id_.emplace(bitstring{}, 0);
}

int hypothesis::find(const bitstring& id) const {
  auto it = index_of_id_.find(id);
  return it == index_of_id_.end() ? -1 : it->second;
}

int hypothesis::add_node(bitstring id) {
  if (static_cast<int>(id.size()) >= num_vars_)
    throw std::logic_error("hypothesis: internal node level must be below num_vars");
  if (find(id) != -1)
    throw std::logic_error("hypothesis: duplicate node id \"" + id.text() + "\"");
  hyp_node n;
  n.id = std::move(id);
  const int idx = total_nodes();
  index_of_id_.emplace(n.id, idx);
  nodes_.push_back(std::move(n));
  return idx;
}

int hypothesis::add_sink(bitstring id, int value) {
  if (static_cast<int>(id.size()) != num_vars_)
    throw std::logic_error("hypothesis: sink level must equal num_vars");
  if (value < 0) throw std::logic_error("hypothesis: negative sink value");
  if (find(id) != -1)
    throw std::logic_error("hypothesis: duplicate node id \"" + id.text() + "\"");
  hyp_node n;
  n.id = std::move(id);
  n.sink = true;
  n.value = value;
  const int idx = total_nodes();
  index_of_id_.emplace(n.id, idx);
  nodes_.push_back(std::move(n));
  return idx;
}

void hypothesis::add_edge(int from, int to, const bitstring& label) {
  hyp_node& src = nodes_.at(from);
  const hyp_node& dst = nodes_.at(to);
  if (src.sink) throw std::logic_error("hypothesis: sinks have no outgoing edges");
  if (label.empty()) throw std::logic_error("hypothesis: empty edge label");
  if (label.size() != dst.id.size() - src.id.size())
    throw std::logic_error("hypothesis: edge label length " + std::to_string(label.size()) +
                           " does not equal the level gap " +
                           std::to_string(dst.id.size() - src.id.size()));
  const int slot = label.bit(0);
  if (src.out[slot].has_value())
    throw std::logic_error("hypothesis: node \"" + src.id.text() +
                           "\" already has an edge whose label starts with " +
                           std::to_string(slot));
  if (dummy_ && from == root_index && src.out[1 - slot].has_value())
    throw std::logic_error("hypothesis: a dummy root holds exactly one edge");
  assert(!(dummy_ && from == root_index) || label == dst.id);
  src.out[slot] = hyp_edge{label, to};
  nodes_.at(to).incoming.emplace_back(from, slot);
}

void hypothesis::remove_edge(int from, const bitstring& label) {
  hyp_node& src = nodes_.at(from);
  if (label.empty()) throw std::logic_error("hypothesis: empty edge label");
  const int slot = label.bit(0);
  if (!src.out[slot].has_value() || src.out[slot]->label != label)
    throw std::logic_error("hypothesis: no edge with label \"" + label.text() +
                           "\" leaving node \"" + src.id.text() + "\"");
  const int to = src.out[slot]->target;
  auto& inc = nodes_.at(to).incoming;
  auto it = std::find(inc.begin(), inc.end(), std::make_pair(from, slot));
  assert(it != inc.end());
  inc.erase(it);
  src.out[slot].reset();
}

void hypothesis::move_edge(int from, const bitstring& label, int new_target) {
  hyp_node& src = nodes_.at(from);
  const int slot = label.empty() ? -1 : label.bit(0);
  if (slot < 0 || !src.out[slot].has_value() || src.out[slot]->label != label)
    throw std::logic_error("hypothesis: no edge with label \"" + label.text() +
                           "\" leaving node \"" + src.id.text() + "\"");
  const hyp_node& dst = nodes_.at(new_target);
  if (label.size() != dst.id.size() - src.id.size())
    throw std::logic_error("hypothesis: move_edge would break the label length rule");
  const int old_target = src.out[slot]->target;
  auto& inc = nodes_.at(old_target).incoming;
  auto it = std::find(inc.begin(), inc.end(), std::make_pair(from, slot));
  assert(it != inc.end());
  inc.erase(it);
  src.out[slot]->target = new_target;
  nodes_.at(new_target).incoming.emplace_back(from, slot);
}

void hypothesis::promote_root() {
  if (!dummy_) throw std::logic_error("hypothesis: the root is not a dummy");
  dummy_ = false;
}

std::vector<int> hypothesis::trace(const bitstring& input) const {
  if (static_cast<int>(input.size()) != num_vars_)
    throw std::invalid_argument("hypothesis: trace input length must equal num_vars");
  std::vector<int> path;
  int cur = root_index;
  path.push_back(cur);
  while (!nodes_[cur].sink) {
    const hyp_node& n = nodes_[cur];
    const std::optional<hyp_edge>* edge;
    if (dummy_ && cur == root_index) {
      edge = n.out[0] ? &n.out[0] : &n.out[1];
    } else {
      edge = &n.out[input.bit(n.id.size())];
    }
    if (!edge->has_value())
      throw std::logic_error("hypothesis: missing edge while tracing from node \"" +
                             n.id.text() + "\"");
    cur = (*edge)->target;
    path.push_back(cur);
  }
  return path;
}

int hypothesis::eval_value(const bitstring& input) const {
  return nodes_[trace(input).back()].value;
}

std::vector<std::tuple<int, int, bitstring>> hypothesis::edges() const {
  std::vector<std::tuple<int, int, bitstring>> result;
  for (int i = 0; i < total_nodes(); ++i) {
    if (dummy_ && i == root_index) continue;
    for (const auto& e : nodes_[i].out)
      if (e) result.emplace_back(i, e->target, e->label);
  }
  return result;
}

std::vector<std::pair<int, bitstring>> hypothesis::incoming_edges(int node) const {
  std::vector<std::pair<int, bitstring>> result;
  for (auto [from, slot] : nodes_.at(node).incoming) {
    assert(!(dummy_ && from == root_index));
    result.emplace_back(from, nodes_[from].out[slot]->label);
  }
  return result;
}

omtbdd hypothesis::extract(int num_values) const {
  omtbdd d;
  d.num_vars = num_vars_;
  d.num_values = num_values;
  // Map stored nodes to diagram indices, skipping a dummy root.
  std::vector<node_index> remap(nodes_.size(), no_node);
  for (int i = 0; i < total_nodes(); ++i) {
    if (dummy_ && i == root_index) continue;
    remap[i] = static_cast<node_index>(d.nodes.size());
    d.nodes.push_back({});
  }
  for (int i = 0; i < total_nodes(); ++i) {
    if (dummy_ && i == root_index) continue;
    const hyp_node& n = nodes_[i];
    diagram_node dn;
    if (n.sink) {
      dn = diagram_node{0, no_node, no_node, n.value};
      if (n.value >= num_values)
        throw std::logic_error("hypothesis: sink value exceeds num_values");
    } else {
      if (!n.out[0] || !n.out[1])
        throw std::logic_error("hypothesis: extract needs both edges at node \"" + n.id.text() +
                               "\"");
      dn = diagram_node{static_cast<int>(n.id.size()) + 1, remap[n.out[0]->target],
                        remap[n.out[1]->target], 0};
    }
    d.nodes[remap[i]] = dn;
  }
  int root = root_index;
  if (dummy_) {
    const hyp_node& r = nodes_[root_index];
    const auto& e = r.out[0] ? r.out[0] : r.out[1];
    if (!e) throw std::logic_error("hypothesis: dummy root has no edge to extract through");
    root = e->target;
  }
  d.root = remap[root];
  return d;
}

std::vector<std::string> hypothesis::validate() const {
  std::vector<std::string> problems;
  auto complain = [&](const std::string& msg) { problems.push_back(msg); };
  if (nodes_.empty() || !nodes_[root_index].id.empty())
    complain("the root must exist and have the empty identity");
  std::vector<std::vector<std::pair<int, int>>> expected_incoming(nodes_.size());
  for (int i = 0; i < total_nodes(); ++i) {
    const hyp_node& n = nodes_[i];
    if (find(n.id) != i) complain("identity index out of sync at node " + std::to_string(i));
    if (n.sink) {
      if (static_cast<int>(n.id.size()) != num_vars_)
        complain("sink \"" + n.id.text() + "\" is not at the bottom level");
      if (n.out[0] || n.out[1]) complain("sink \"" + n.id.text() + "\" has outgoing edges");
      continue;
    }
    if (static_cast<int>(n.id.size()) >= num_vars_)
      complain("internal node \"" + n.id.text() + "\" sits at or below the sink level");
    const bool is_dummy_root = dummy_ && i == root_index;
    int out_count = 0;
    for (int slot = 0; slot < 2; ++slot) {
      const auto& e = n.out[slot];
      if (!e) continue;
      ++out_count;
      if (e->label.empty() || e->label.bit(0) != slot)
        complain("edge slot/label mismatch at node \"" + n.id.text() + "\"");
      if (e->target < 0 || e->target >= total_nodes()) {
        complain("edge target out of range at node \"" + n.id.text() + "\"");
        continue;
      }
      const hyp_node& t = nodes_[e->target];
      if (e->label.size() != t.id.size() - n.id.size())
        complain("edge label length breaks the level rule at node \"" + n.id.text() + "\"");
      expected_incoming[e->target].emplace_back(i, slot);
      if (is_dummy_root && e->label != t.id)
        complain("the dummy root's edge label must equal its child's identity");
    }
    if (is_dummy_root && out_count != 1)
      complain("a dummy root must hold exactly one edge");
    if (!is_dummy_root && out_count != 2)
      complain("internal node \"" + n.id.text() + "\" is missing an outgoing edge");
  }
  for (int i = 0; i < total_nodes(); ++i) {
    auto a = nodes_[i].incoming;
    auto b = expected_incoming[i];
    std::sort(a.begin(), a.end());
    std::sort(b.begin(), b.end());
    if (a != b) complain("incoming-edge index out of sync at node " + std::to_string(i));
  }
  return problems;
}

}  // namespace qlearn
