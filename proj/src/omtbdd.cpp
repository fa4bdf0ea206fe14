#include "qlearn/omtbdd.hpp"

#include <algorithm>
#include <cassert>
#include <map>
#include <numeric>
#include <sstream>
#include <stdexcept>
#include <tuple>
#include <unordered_map>
#include <unordered_set>

namespace qlearn {

namespace {

int effective_var(const omtbdd& d, node_index n) {
  return d.nodes[n].is_sink() ? d.num_vars + 1 : d.nodes[n].var;
}

void require_valid_index(const omtbdd& d, node_index n) {
  if (n < 0 || n >= static_cast<node_index>(d.nodes.size()))
    throw std::invalid_argument("omtbdd: node index out of range");
}

/// Renumbers the root-reachable part in depth-first preorder (lo before hi),
/// dropping everything else. Shared by structurally_equal and reduce.
omtbdd canonical_renumber(const omtbdd& d) {
  omtbdd out;
  out.num_vars = d.num_vars;
  out.num_values = d.num_values;
  if (d.root == no_node) return out;
  std::vector<node_index> remap(d.nodes.size(), no_node);
  std::vector<node_index> stack{d.root};
  std::vector<node_index> order;
  while (!stack.empty()) {
    node_index n = stack.back();
    stack.pop_back();
    if (remap[n] != no_node) continue;
    remap[n] = static_cast<node_index>(order.size());
    order.push_back(n);
    const diagram_node& dn = d.nodes[n];
    if (!dn.is_sink()) {
      stack.push_back(dn.hi);  // pushed first so lo is visited first
      stack.push_back(dn.lo);
    }
  }
  out.nodes.reserve(order.size());
  for (node_index n : order) {
    diagram_node dn = d.nodes[n];
    if (!dn.is_sink()) {
      dn.lo = remap[dn.lo];
      dn.hi = remap[dn.hi];
    }
    out.nodes.push_back(dn);
  }
  out.root = 0;
  return out;
}

}  // namespace

omtbdd constant_diagram(int num_vars, int num_values, int value) {
  if (num_vars < 1) throw std::invalid_argument("constant_diagram: num_vars must be >= 1");
  if (num_values < 1 || value < 0 || value >= num_values)
    throw std::invalid_argument("constant_diagram: value out of range");
  omtbdd d;
  d.num_vars = num_vars;
  d.num_values = num_values;
  d.nodes.push_back(diagram_node{0, no_node, no_node, value});
  d.root = 0;
  return d;
}

int eval(const omtbdd& d, const bitstring& input) {
  if (static_cast<int>(input.size()) != d.num_vars)
    throw std::invalid_argument("eval: input length does not match num_vars");
  require_valid_index(d, d.root);
  node_index n = d.root;
  while (!d.nodes[n].is_sink()) {
    const diagram_node& dn = d.nodes[n];
    n = input.bit(dn.var - 1) ? dn.hi : dn.lo;
  }
  return d.nodes[n].value;
}

node_index trace_to_node(const omtbdd& d, const bitstring& a) {
  const int len = static_cast<int>(a.size());
  if (len > d.num_vars)
    throw std::invalid_argument("trace_to_node: string longer than num_vars");
  require_valid_index(d, d.root);
  node_index n = d.root;
  while (!d.nodes[n].is_sink() && d.nodes[n].var <= len) {
    const diagram_node& dn = d.nodes[n];
    n = a.bit(dn.var - 1) ? dn.hi : dn.lo;
  }
  return effective_var(d, n) == len + 1 ? n : no_node;
}

omtbdd reduce(const omtbdd& d) {
  {
    auto problems = validate(d);
    if (!problems.empty())
      throw std::invalid_argument("reduce: invalid diagram: " + problems.front());
  }
  const std::size_t n = d.nodes.size();
  std::vector<node_index> order(n);
  std::iota(order.begin(), order.end(), 0);
  // Children always test strictly larger variables, so processing by
  // descending variable (sinks first) sees children before parents.
  std::stable_sort(order.begin(), order.end(), [&](node_index a, node_index b) {
    return effective_var(d, a) > effective_var(d, b);
  });

  omtbdd merged;
  merged.num_vars = d.num_vars;
  merged.num_values = d.num_values;
  std::vector<node_index> repr(n, no_node);
  std::map<int, node_index> sink_of_value;
  std::map<std::tuple<int, node_index, node_index>, node_index> internal_of_key;
  for (node_index idx : order) {
    const diagram_node& dn = d.nodes[idx];
    if (dn.is_sink()) {
      auto [it, inserted] = sink_of_value.try_emplace(dn.value, no_node);
      if (inserted) {
        it->second = static_cast<node_index>(merged.nodes.size());
        merged.nodes.push_back(diagram_node{0, no_node, no_node, dn.value});
      }
      repr[idx] = it->second;
    } else {
      node_index lo = repr[dn.lo];
      node_index hi = repr[dn.hi];
      assert(lo != no_node && hi != no_node);
      if (lo == hi) {
        repr[idx] = lo;
        continue;
      }
      auto [it, inserted] = internal_of_key.try_emplace(std::make_tuple(dn.var, lo, hi), no_node);
      if (inserted) {
        it->second = static_cast<node_index>(merged.nodes.size());
        merged.nodes.push_back(diagram_node{dn.var, lo, hi, 0});
      }
      repr[idx] = it->second;
    }
  }
  merged.root = repr[d.root];
  return canonical_renumber(merged);
}

bool is_reduced(const omtbdd& d) {
  if (!validate(d).empty()) return false;
  // Reachability.
  std::vector<bool> seen(d.nodes.size(), false);
  std::vector<node_index> stack{d.root};
  while (!stack.empty()) {
    node_index n = stack.back();
    stack.pop_back();
    if (seen[n]) continue;
    seen[n] = true;
    if (!d.nodes[n].is_sink()) {
      stack.push_back(d.nodes[n].lo);
      stack.push_back(d.nodes[n].hi);
    }
  }
  if (!std::all_of(seen.begin(), seen.end(), [](bool b) { return b; })) return false;
  std::unordered_set<int> sink_values;
  std::map<std::tuple<int, node_index, node_index>, int> internal_keys;
  for (const diagram_node& dn : d.nodes) {
    if (dn.is_sink()) {
      if (!sink_values.insert(dn.value).second) return false;
    } else {
      if (dn.lo == dn.hi) return false;
      if (!internal_keys.emplace(std::make_tuple(dn.var, dn.lo, dn.hi), 0).second) return false;
    }
  }
  return true;
}

bool structurally_equal(const omtbdd& a, const omtbdd& b) {
  if (a.num_vars != b.num_vars) return false;
  omtbdd ca = canonical_renumber(a);
  omtbdd cb = canonical_renumber(b);
  if (ca.nodes.size() != cb.nodes.size()) return false;
  if ((ca.root == no_node) != (cb.root == no_node)) return false;
  for (std::size_t i = 0; i < ca.nodes.size(); ++i) {
    const diagram_node& x = ca.nodes[i];
    const diagram_node& y = cb.nodes[i];
    if (x.var != y.var || x.lo != y.lo || x.hi != y.hi) return false;
    if (x.is_sink() && x.value != y.value) return false;
  }
  return true;
}

std::optional<bitstring> find_difference(const omtbdd& a, const omtbdd& b) {
  if (a.num_vars != b.num_vars)
    throw std::invalid_argument("find_difference: diagrams have different num_vars");
  require_valid_index(a, a.root);
  require_valid_index(b, b.root);
  const int m = a.num_vars;
  std::unordered_set<std::uint64_t> proven_equal;
  std::vector<std::pair<int, int>> assignment;  // (1-based position, bit) along the path

  // Depth-first product walk; returns true when the sub-diagrams agree
  // everywhere. On disagreement, `assignment` is left holding the failing
  // path. Branch 0 is explored first, so the counterexample is deterministic.
  std::function<bool(node_index, node_index)> walk = [&](node_index na, node_index nb) {
    const int va = a.nodes[na].is_sink() ? m + 1 : a.nodes[na].var;
    const int vb = b.nodes[nb].is_sink() ? m + 1 : b.nodes[nb].var;
    const int v = std::min(va, vb);
    if (v == m + 1) return a.nodes[na].value == b.nodes[nb].value;
    const std::uint64_t key =
        (static_cast<std::uint64_t>(na) << 32) | static_cast<std::uint32_t>(nb);
    if (proven_equal.contains(key)) return true;
    const node_index a0 = va == v ? a.nodes[na].lo : na;
    const node_index a1 = va == v ? a.nodes[na].hi : na;
    const node_index b0 = vb == v ? b.nodes[nb].lo : nb;
    const node_index b1 = vb == v ? b.nodes[nb].hi : nb;
    assignment.emplace_back(v, 0);
    if (!walk(a0, b0)) return false;
    assignment.back().second = 1;
    if (!walk(a1, b1)) return false;
    assignment.pop_back();
    proven_equal.insert(key);
    return true;
  };

  if (walk(a.root, b.root)) return std::nullopt;
  bitstring ce = bitstring::zeros(m);
  for (auto [pos, bit] : assignment) ce.set_bit(pos - 1, bit);
  return ce;
}

bool equivalent(const omtbdd& a, const omtbdd& b) {
  return !find_difference(a, b).has_value();
}

std::vector<std::string> validate(const omtbdd& d) {
  std::vector<std::string> problems;
  auto complain = [&](std::string msg) { problems.push_back(std::move(msg)); };
  if (d.num_vars < 1) complain("num_vars must be >= 1");
  if (d.num_values < 1) complain("num_values must be >= 1");
  if (d.root < 0 || d.root >= static_cast<node_index>(d.nodes.size())) {
    complain("root index out of range");
    return problems;
  }
  for (std::size_t i = 0; i < d.nodes.size(); ++i) {
    const diagram_node& dn = d.nodes[i];
    const std::string where = "node " + std::to_string(i);
    if (dn.is_sink()) {
      if (dn.value < 0 || dn.value >= d.num_values)
        complain(where + ": sink value " + std::to_string(dn.value) + " out of range");
      continue;
    }
    if (dn.var < 1 || dn.var > d.num_vars) {
      complain(where + ": variable " + std::to_string(dn.var) + " out of range");
      continue;
    }
    for (node_index child : {dn.lo, dn.hi}) {
      if (child < 0 || child >= static_cast<node_index>(d.nodes.size())) {
        complain(where + ": child index out of range");
        continue;
      }
      const diagram_node& cn = d.nodes[child];
      if (!cn.is_sink() && cn.var <= dn.var)
        complain(where + ": child tests x" + std::to_string(cn.var) +
                 " which does not follow x" + std::to_string(dn.var) + " in the order");
    }
  }
  return problems;
}

std::string encode(const omtbdd& d) {
  std::ostringstream os;
  os << "omtbdd m=" << d.num_vars << " k=" << d.num_values << " root=" << d.root << "\n";
  for (std::size_t i = 0; i < d.nodes.size(); ++i) {
    const diagram_node& dn = d.nodes[i];
    if (dn.is_sink())
      os << "sink " << i << " value=" << dn.value << "\n";
    else
      os << "node " << i << " var=" << dn.var << " lo=" << dn.lo << " hi=" << dn.hi << "\n";
  }
  return os.str();
}

namespace {

/// Splits "key=value", returning value; throws when key doesn't match.
long long parse_field(const std::string& token, const std::string& key, int line_no) {
  const std::string want = key + "=";
  if (token.size() <= want.size() || token.compare(0, want.size(), want) != 0)
    throw std::runtime_error("decode: line " + std::to_string(line_no) + ": expected " + key +
                             "=<int>, got \"" + token + "\"");
  std::size_t used = 0;
  long long value = 0;
  try {
    value = std::stoll(token.substr(want.size()), &used);
  } catch (const std::exception&) {
    throw std::runtime_error("decode: line " + std::to_string(line_no) + ": bad integer in \"" +
                             token + "\"");
  }
  if (used != token.size() - want.size())
    throw std::runtime_error("decode: line " + std::to_string(line_no) + ": bad integer in \"" +
                             token + "\"");
  return value;
}

}  // namespace

omtbdd decode(const std::string& text) {
  std::istringstream is(text);
  std::string line;
  int line_no = 0;
  bool saw_header = false;
  omtbdd d;
  long long root_id = 0;
  struct raw_node {
    long long id, var, lo, hi, value;
    bool sink;
    int line_no;
  };
  std::vector<raw_node> raw;
  while (std::getline(is, line)) {
    ++line_no;
    std::istringstream ls(line);
    std::string word;
    if (!(ls >> word)) continue;  // blank line
    if (word[0] == '#') continue;
    if (!saw_header) {
      if (word != "omtbdd")
        throw std::runtime_error("decode: line " + std::to_string(line_no) +
                                 ": expected the omtbdd header line");
      std::string tm, tk, troot;
      if (!(ls >> tm >> tk >> troot))
        throw std::runtime_error("decode: line " + std::to_string(line_no) +
                                 ": header needs m=, k= and root= fields");
      d.num_vars = static_cast<int>(parse_field(tm, "m", line_no));
      d.num_values = static_cast<int>(parse_field(tk, "k", line_no));
      root_id = parse_field(troot, "root", line_no);
      saw_header = true;
      continue;
    }
    if (word == "node") {
      long long id;
      std::string tv, tlo, thi;
      if (!(ls >> id >> tv >> tlo >> thi))
        throw std::runtime_error("decode: line " + std::to_string(line_no) +
                                 ": node needs <id> var= lo= hi=");
      raw.push_back({id, parse_field(tv, "var", line_no), parse_field(tlo, "lo", line_no),
                     parse_field(thi, "hi", line_no), 0, false, line_no});
    } else if (word == "sink") {
      long long id;
      std::string tval;
      if (!(ls >> id >> tval))
        throw std::runtime_error("decode: line " + std::to_string(line_no) +
                                 ": sink needs <id> value=");
      raw.push_back({id, 0, 0, 0, parse_field(tval, "value", line_no), true, line_no});
    } else {
      throw std::runtime_error("decode: line " + std::to_string(line_no) +
                               ": unknown directive \"" + word + "\"");
    }
  }
  if (!saw_header) throw std::runtime_error("decode: missing omtbdd header line");

  std::unordered_map<long long, node_index> index_of_id;
  for (const raw_node& rn : raw) {
    if (!index_of_id.emplace(rn.id, static_cast<node_index>(d.nodes.size())).second)
      throw std::runtime_error("decode: line " + std::to_string(rn.line_no) + ": duplicate id " +
                               std::to_string(rn.id));
    d.nodes.push_back({});
  }
  auto lookup = [&](long long id, int at_line) {
    auto it = index_of_id.find(id);
    if (it == index_of_id.end())
      throw std::runtime_error("decode: line " + std::to_string(at_line) + ": unknown id " +
                               std::to_string(id));
    return it->second;
  };
  for (std::size_t i = 0; i < raw.size(); ++i) {
    const raw_node& rn = raw[i];
    diagram_node& dn = d.nodes[i];
    if (rn.sink) {
      dn = diagram_node{0, no_node, no_node, static_cast<int>(rn.value)};
    } else {
      dn = diagram_node{static_cast<int>(rn.var), lookup(rn.lo, rn.line_no),
                        lookup(rn.hi, rn.line_no), 0};
    }
  }
  if (raw.empty()) throw std::runtime_error("decode: document declares no nodes");
  d.root = lookup(root_id, 1);
  auto problems = validate(d);
  if (!problems.empty()) throw std::runtime_error("decode: invalid diagram: " + problems.front());
  return d;
}

std::string to_dot(const omtbdd& d) {
  std::ostringstream os;
  os << "digraph omtbdd {\n";
  for (std::size_t i = 0; i < d.nodes.size(); ++i) {
    const diagram_node& dn = d.nodes[i];
    if (dn.is_sink())
      os << "  n" << i << " [shape=box, label=\"" << dn.value << "\"];\n";
    else
      os << "  n" << i << " [label=\"x" << dn.var << "\"];\n";
  }
  for (std::size_t i = 0; i < d.nodes.size(); ++i) {
    const diagram_node& dn = d.nodes[i];
    if (dn.is_sink()) continue;
    os << "  n" << i << " -> n" << dn.lo << " [style=dashed];\n";
    os << "  n" << i << " -> n" << dn.hi << ";\n";
  }
  os << "}\n";
  return os.str();
}

omtbdd tabulate(int num_vars, int num_values,
                const std::function<int(const bitstring&)>& fn) {
  if (num_vars < 1 || num_vars > 20)
    throw std::invalid_argument("tabulate: num_vars must be in [1, 20]");
  const std::size_t rows = std::size_t{1} << num_vars;
  // Build the complete binary tree over all assignments, then reduce.
  omtbdd full;
  full.num_vars = num_vars;
  full.num_values = num_values;
  // Level-order layout: internal levels 0..num_vars-1, then 2^m sinks.
  // Internal node at level L, offset p sits at index 2^L - 1 + p; its
  // children are the two nodes at level L+1, offsets 2p and 2p+1.
  const std::size_t internals = rows - 1;
  full.nodes.resize(internals + rows);
  for (int level = 0; level < num_vars; ++level) {
    const std::size_t base = (std::size_t{1} << level) - 1;
    const std::size_t child_base = (std::size_t{1} << (level + 1)) - 1;
    for (std::size_t p = 0; p < (std::size_t{1} << level); ++p) {
      full.nodes[base + p] =
          diagram_node{level + 1, static_cast<node_index>(child_base + 2 * p),
                       static_cast<node_index>(child_base + 2 * p + 1), 0};
    }
  }
  for (std::size_t idx = 0; idx < rows; ++idx) {
    bitstring input = bitstring::zeros(num_vars);
    for (int i = 0; i < num_vars; ++i)
      input.set_bit(i, static_cast<int>((idx >> (num_vars - 1 - i)) & 1));
    const int value = fn(input);
    if (value < 0 || value >= num_values)
      throw std::invalid_argument("tabulate: function value out of range");
    full.nodes[internals + idx] = diagram_node{0, no_node, no_node, value};
  }
  full.root = 0;
  return reduce(full);
}

}  // namespace qlearn
