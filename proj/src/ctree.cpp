#include "qlearn/ctree.hpp"

#include <algorithm>
#include <cassert>
#include <stdexcept>

namespace qlearn {

ctree::ctree() {
  root_ = add(tnode{});  // a lone unknown leaf
}

int ctree::add(tnode n) {
  nodes_.push_back(std::move(n));
  return static_cast<int>(nodes_.size()) - 1;
}

ctree ctree::value_test_root(bitstring test, std::vector<std::pair<int, bitstring>> branches) {
  ctree t;
  t.nodes_.clear();
  tnode root;
  root.kind = tnode::value_test;
  root.test = std::move(test);
  t.root_ = 0;
  t.nodes_.push_back(std::move(root));
  for (auto& [value, id] : branches) {
    tnode leaf;
    leaf.kind = tnode::leaf;
    leaf.id = std::move(id);
    const int child = t.add(std::move(leaf));
    t.nodes_[t.root_].branches.emplace_back(value, child);
  }
  return t;
}

ctree ctree::pair_test_root(bitstring test, std::pair<int, int> seen, bitstring leaf_id) {
  if (seen.first == seen.second)
    throw std::logic_error("ctree: a pair test's keyed edge needs two distinct values");
  ctree t;
  t.nodes_.clear();
  tnode root;
  root.kind = tnode::pair_test;
  root.test = std::move(test);
  root.seen = seen;
  t.root_ = 0;
  t.nodes_.push_back(std::move(root));
  tnode leaf;
  leaf.kind = tnode::leaf;
  leaf.id = std::move(leaf_id);
  t.nodes_[t.root_].matched = t.add(std::move(leaf));
  t.nodes_[t.root_].fallthrough = t.add(tnode{});
  return t;
}

classify_result ctree::classify(const bitstring& a, const membership_fn& mq) const {
  int cur = root_;
  while (true) {
    const tnode& n = nodes_[cur];
    switch (n.kind) {
      case tnode::leaf:
        return {classify_kind::at_leaf, n.id, -1, {}, -1};
      case tnode::unknown:
        return {classify_kind::unknown, {}, -1, {}, -1};
      case tnode::pair_test: {
        const int v1 = mq(a + n.test);
        const int v2 = mq(a + flip_first(n.test));
        cur = (std::pair{v1, v2} == n.seen) ? n.matched : n.fallthrough;
        break;
      }
      case tnode::value_test: {
        const int v = mq(a + n.test);
        int next = -1;
        for (auto [value, child] : n.branches)
          if (value == v) {
            next = child;
            break;
          }
        if (next == -1) return {classify_kind::stuck, {}, cur, n.test, v};
        cur = next;
        break;
      }
    }
  }
}

int ctree::find_leaf(const bitstring& leaf_id) const {
  for (std::size_t i = 0; i < nodes_.size(); ++i)
    if (nodes_[i].kind == tnode::leaf && nodes_[i].id == leaf_id) return static_cast<int>(i);
  return -1;
}

int ctree::find_unknown() const {
  for (std::size_t i = 0; i < nodes_.size(); ++i)
    if (nodes_[i].kind == tnode::unknown) return static_cast<int>(i);
  return -1;
}

bool ctree::path_to(int node, int goal, std::vector<int>& path) const {
  path.push_back(node);
  if (node == goal) return true;
  const tnode& n = nodes_[node];
  if (n.kind == tnode::pair_test) {
    if (path_to(n.matched, goal, path) || path_to(n.fallthrough, goal, path)) return true;
  } else if (n.kind == tnode::value_test) {
    for (auto [value, child] : n.branches) {
      (void)value;
      if (path_to(child, goal, path)) return true;
    }
  }
  path.pop_back();
  return false;
}

bitstring ctree::last_pair_test_label(const bitstring& leaf_id) const {
  const int leaf = find_leaf(leaf_id);
  if (leaf == -1)
    throw std::logic_error("ctree: no leaf carries identity \"" + leaf_id.text() + "\"");
  std::vector<int> path;
  const bool found = path_to(root_, leaf, path);
  assert(found);
  (void)found;
  for (auto it = path.rbegin(); it != path.rend(); ++it)
    if (nodes_[*it].kind == tnode::pair_test) return nodes_[*it].test;
  throw std::logic_error("ctree: the path to leaf \"" + leaf_id.text() +
                         "\" has no pair test");
}

void ctree::replace_leaf_with_value_test(const bitstring& leaf_id, const value_split& split) {
  const int leaf = find_leaf(leaf_id);
  if (leaf == -1)
    throw std::logic_error("ctree: no leaf carries identity \"" + leaf_id.text() + "\"");
  tnode replacement;
  replacement.kind = tnode::value_test;
  replacement.test = split.test;
  for (const auto& [value, id] : split.branches) {
    tnode child;
    child.kind = tnode::leaf;
    child.id = id;
    replacement.branches.emplace_back(value, add(std::move(child)));
  }
  nodes_[leaf] = std::move(replacement);
}

void ctree::extend_unknown(bitstring test, std::pair<int, int> seen, bitstring leaf_id) {
  if (seen.first == seen.second)
    throw std::logic_error("ctree: a pair test's keyed edge needs two distinct values");
  const int u = find_unknown();
  if (u == -1) throw std::logic_error("ctree: no unknown leaf to extend");
  tnode replacement;
  replacement.kind = tnode::pair_test;
  replacement.test = std::move(test);
  replacement.seen = seen;
  tnode leaf;
  leaf.kind = tnode::leaf;
  leaf.id = std::move(leaf_id);
  replacement.matched = add(std::move(leaf));
  replacement.fallthrough = add(tnode{});
  nodes_[u] = std::move(replacement);
}

void ctree::add_value_branch(int value_test_node, int value, bitstring leaf_id) {
  tnode& n = nodes_.at(value_test_node);
  if (n.kind != tnode::value_test)
    throw std::logic_error("ctree: add_value_branch target is not a value test");
  for (auto [existing, child] : n.branches) {
    (void)child;
    if (existing == value)
      throw std::logic_error("ctree: value test already has a branch for value " +
                             std::to_string(value));
  }
  tnode leaf;
  leaf.kind = tnode::leaf;
  leaf.id = std::move(leaf_id);
  const int child = add(std::move(leaf));
  nodes_[value_test_node].branches.emplace_back(value, child);
}

std::vector<bitstring> ctree::leaf_ids() const {
  std::vector<bitstring> ids;
  std::vector<int> stack{root_};
  while (!stack.empty()) {
    const int cur = stack.back();
    stack.pop_back();
    const tnode& n = nodes_[cur];
    if (n.kind == tnode::leaf) ids.push_back(n.id);
    if (n.kind == tnode::pair_test) {
      stack.push_back(n.matched);
      stack.push_back(n.fallthrough);
    }
    if (n.kind == tnode::value_test)
      for (auto [value, child] : n.branches) {
        (void)value;
        stack.push_back(child);
      }
  }
  return ids;
}

bool ctree::unknown_only() const { return nodes_[root_].kind == tnode::unknown; }

std::vector<std::string> ctree::validate(int level, int num_vars) const {
  std::vector<std::string> problems;
  auto complain = [&](const std::string& msg) {
    problems.push_back("level " + std::to_string(level) + ": " + msg);
  };
  const std::size_t test_len = static_cast<std::size_t>(num_vars - level);
  int unknown_count = 0;
  std::vector<int> stack{root_};
  std::vector<bool> seen(nodes_.size(), false);
  while (!stack.empty()) {
    const int cur = stack.back();
    stack.pop_back();
    if (seen[cur]) {
      complain("the tree shares or cycles through node " + std::to_string(cur));
      return problems;
    }
    seen[cur] = true;
    const tnode& n = nodes_[cur];
    switch (n.kind) {
      case tnode::unknown:
        ++unknown_count;
        break;
      case tnode::leaf:
        if (n.id.size() != static_cast<std::size_t>(level))
          complain("leaf \"" + n.id.text() + "\" has the wrong length");
        break;
      case tnode::pair_test: {
        if (n.test.size() != test_len) complain("pair test label has the wrong length");
        if (n.test.empty()) complain("pair test label must be nonempty");
        if (n.seen.first == n.seen.second) complain("pair test edge values must differ");
        if (level == num_vars) complain("the bottom tree cannot hold pair tests");
        // The keyed edge's subtree must be free of pair tests and unknowns:
        // every pair test lies on the root-to-unknown path.
        std::vector<int> sub{n.matched};
        while (!sub.empty()) {
          const int s = sub.back();
          sub.pop_back();
          const tnode& sn = nodes_[s];
          if (sn.kind == tnode::pair_test)
            complain("a pair test hangs off another pair test's keyed edge");
          if (sn.kind == tnode::unknown)
            complain("an unknown leaf hangs off a pair test's keyed edge");
          if (sn.kind == tnode::value_test)
            for (auto [value, child] : sn.branches) {
              (void)value;
              sub.push_back(child);
            }
        }
        stack.push_back(n.matched);
        stack.push_back(n.fallthrough);
        break;
      }
      case tnode::value_test: {
        if (n.test.size() != test_len) complain("value test label has the wrong length");
        std::vector<int> values;
        for (auto [value, child] : n.branches) {
          values.push_back(value);
          stack.push_back(child);
        }
        std::sort(values.begin(), values.end());
        if (std::adjacent_find(values.begin(), values.end()) != values.end())
          complain("value test has duplicate branch values");
        break;
      }
    }
  }
  if (level == num_vars) {
    if (unknown_count != 0) complain("the bottom tree cannot hold an unknown leaf");
    if (nodes_[root_].kind != tnode::value_test)
      complain("the bottom tree's root must be a value test");
  } else if (unknown_count != 1) {
    complain("expected exactly one unknown leaf, found " + std::to_string(unknown_count));
  }
  return problems;
}

}  // namespace qlearn
