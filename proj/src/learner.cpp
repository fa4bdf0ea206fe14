#include "qlearn/learner.hpp"

#include <algorithm>
#include <map>
#include <stdexcept>
#include <unordered_map>

#include <json.hpp>

namespace qlearn {

namespace {

using nlohmann::json;

[[noreturn]] void protocol_error(const std::string& what) {
  throw std::runtime_error("learn: protocol error: " + what);
}

/// One learning run: owns the counters, the working state, and the query
/// plumbing around the two oracles.
struct session {
  int m;
  membership_oracle& mq_oracle;
  equivalence_oracle& eq_oracle;
  const learn_options& opts;

  learn_stats stats;
  learner_state st;
  std::vector<std::string> violations;
  int max_value_seen = 0;

  session(int num_vars, membership_oracle& mqo, equivalence_oracle& eqo,
          const learn_options& options)
      : m(num_vars), mq_oracle(mqo), eq_oracle(eqo), opts(options) {
    if (m < 1) throw std::invalid_argument("learn: num_vars must be at least 1");
    st.num_vars = m;
  }

  void emit(const json& record) {
    if (opts.event_sink) opts.event_sink(record.dump());
  }

  int mq(const bitstring& x) {
    ++stats.membership_queries;
    const int v = mq_oracle.query(x);
    if (v < 0) protocol_error("membership answer is negative");
    max_value_seen = std::max(max_value_seen, v);
    emit({{"event", "mq"}, {"input", x.text()}, {"value", v}});
    return v;
  }

  std::optional<bitstring> ask_eq(const omtbdd& h) {
    ++stats.equivalence_queries;
    auto ce = eq_oracle.query(h);
    if (ce) {
      if (ce->size() != static_cast<std::size_t>(m))
        protocol_error("counterexample length does not match the variable count");
      emit({{"event", "eq"}, {"result", "counterexample"}, {"input", ce->text()}});
    } else {
      emit({{"event", "eq"}, {"result", "yes"}});
    }
    return ce;
  }

  int num_values() const { return std::max({opts.num_values_hint, max_value_seen + 1, 1}); }

  membership_fn counted_mq() {
    return [this](const bitstring& x) { return mq(x); };
  }

  void after_update() {
    if (opts.check_invariants && opts.reference) {
      auto found = check_conditions(st, *opts.reference);
      violations.insert(violations.end(), found.begin(), found.end());
    }
    if (opts.on_update) opts.on_update(st, stats);
  }

  learn_result finish(const omtbdd& h) { return {reduce(h), stats, violations}; }

  /// The label of the edge the trace of `e` followed out of `from`.
  const hyp_edge& traced_edge(int from, const bitstring& e) const {
    const hyp_node& n = st.hyp.node(from);
    if (st.hyp.has_dummy_root() && from == hypothesis::root_index)
      return n.out[0] ? *n.out[0] : *n.out[1];
    return *n.out[e.bit(n.id.size())];
  }

  // --- Wiring -------------------------------------------------------------

  /// Gives `start` outgoing structure along distinguishing string `t`:
  /// walks prefixes of `t` down the level trees until each frontier node
  /// either connects to a known node or mints a new one, descending
  /// first-bit-flipped and as-is into every minted internal node.
  void wire(int start, const bitstring& t) {
    struct work_item {
      int node;
      bitstring t;
    };
    auto counted = counted_mq();
    std::vector<work_item> stack;
    stack.push_back({start, t});
    while (!stack.empty()) {
      work_item item = std::move(stack.back());
      stack.pop_back();
      const bitstring from_id = st.hyp.node(item.node).id;
      const int lv = static_cast<int>(from_id.size());
      const int cap = std::min<int>(static_cast<int>(item.t.size()), m - lv);
      assert(cap >= 1);
      bool resolved = false;
      for (int j = 1; j <= cap && !resolved; ++j) {
        const bitstring g = prefix(item.t, j);
        const bitstring a = from_id + g;
        const auto res = st.trees[lv + j].classify(a, counted);
        if (res.kind == classify_kind::unknown) continue;
        if (res.kind == classify_kind::at_leaf) {
          const int u = st.hyp.find(res.leaf_id);
          assert(u != hypothesis::no_index);
          st.hyp.add_edge(item.node, u, g);
          resolved = true;
          break;
        }
        // Stuck: `a` is a new branching point at level lv + j.
        if (lv + j == m) {
          // The bottom tree's test is empty, so the dispatching answer the
          // classification already made is exactly the function value at `a`.
          assert(res.stuck_test.empty());
          const int u = st.hyp.add_sink(a, res.stuck_value);
          st.trees[m].add_value_branch(res.stuck_node, res.stuck_value, a);
          st.hyp.add_edge(item.node, u, g);
        } else {
          const int u = st.hyp.add_node(a);
          st.trees[lv + j].add_value_branch(res.stuck_node, res.stuck_value, a);
          st.hyp.add_edge(item.node, u, g);
          const bitstring t2 =
              opts.addedge_suffix ? suffix(item.t, item.t.size() - j) : item.t;
          assert(!t2.empty());
          // Pushed flipped-first so the as-is branch pops (and runs) first.
          stack.push_back({u, flip_first(t2)});
          stack.push_back({u, t2});
        }
        resolved = true;
      }
      if (!resolved)
        protocol_error("classification never resolved while wiring a node");
    }
  }

  // --- Initial hypothesis -------------------------------------------------

  void build_initial(const bitstring& ep, int lp, const bitstring& e, int l) {
    // Walk crossovers of the two counterexamples to find an adjacent pair
    // where the function value leaves lp.
    std::map<int, int> cap_values{{0, lp}, {m, l}};
    auto pred = [&](int x) {
      const int v = mq(crossover(ep, e, x));
      cap_values[x] = v;
      return v == lp;
    };
    const auto [a, b] = find_flip(0, m, true, false, pred);
    (void)a;
    const int i = b;  // first crossover index whose value differs from lp
    const bitstring v = prefix(ep, m - i);
    bitstring r = bitstring::zeros(1);
    r.set_bit(0, ep.bit(m - i));
    r = r + suffix(e, i - 1);
    const bitstring rdot = flip_first(r);
    const int l2 = cap_values.at(i);
    assert(l2 != lp);
    const bitstring s1 = v + r;
    const bitstring s2 = v + rdot;

    const bool dummy = !v.empty();
    st.hyp = hypothesis(m, dummy);
    st.trees.assign(static_cast<std::size_t>(m) + 1, ctree{});
    int v_node = hypothesis::root_index;
    if (dummy) {
      v_node = st.hyp.add_node(v);
      st.hyp.add_edge(hypothesis::root_index, v_node, v);
      st.trees[v.size()] = ctree::pair_test_root(r, {lp, l2}, v);
    }
    const int s1_node = st.hyp.add_sink(s1, lp);
    const int s2_node = st.hyp.add_sink(s2, l2);
    st.hyp.add_edge(v_node, s1_node, r);
    st.hyp.add_edge(v_node, s2_node, rdot);
    st.trees[m] = ctree::value_test_root(bitstring{}, {{lp, s1}, {l2, s2}});
    emit({{"event", "init"},
          {"flip", i},
          {"dummy", dummy},
          {"nodes", st.hyp.node_count()}});
  }

  // --- Refinement ---------------------------------------------------------

  void refine(const bitstring& e, int l) {
    const auto path = st.hyp.trace(e);
    const int k = static_cast<int>(path.size());
    assert(k >= 2);
    const int d_pk = st.hyp.node(path.back()).value;
    assert(l != d_pk);

    // g(x): does the function agree with the hypothesis's answer once the
    // trace is teleported to the x-th path node's identity?
    std::map<int, int> g_values{{1, l}, {k, d_pk}};
    auto gpred = [&](int x) {
      const bitstring& id = st.hyp.node(path[x - 1]).id;
      const int v = mq(id + suffix(e, m - id.size()));
      g_values[x] = v;
      return v == d_pk;
    };
    const auto [i, succ] = find_flip(1, k, false, true, gpred);
    (void)succ;

    const bitstring q = traced_edge(path[i - 1], e).label;
    const bitstring pi1_id = st.hyp.node(path[i]).id;
    const bitstring e_next = suffix(e, m - pi1_id.size());
    const int dispatch = mq(st.hyp.node(path[i - 1]).id + q + e_next);
    ++stats.updates;
    if (dispatch != d_pk)
      split_node(path, i, q, e_next, dispatch, d_pk);
    else
      insert_branching_node(path, i, q, e_next, e, g_values.at(i), d_pk);
  }

  /// The identity p_i + q names the same level as p_{i+1} but provably a
  /// different branching point: carve it out as a new node and re-examine
  /// every other edge into p_{i+1}, distributing them by how they answer
  /// under the distinguishing suffix.
  void split_node(const std::vector<int>& path, int i, const bitstring& q,
                  const bitstring& e_next, int dispatch, int d_pk) {
    const int pi = path[i - 1];
    const int pi1 = path[i];
    const bitstring pi_id = st.hyp.node(pi).id;
    const bitstring pi1_id = st.hyp.node(pi1).id;
    const bitstring v_id = pi_id + q;
    const int level = static_cast<int>(v_id.size());
    if (level >= m) protocol_error("split reached the sink level");

    // The refinement of the level tree, assembled locally and grafted last
    // so classifications made while wiring still see the old tree.
    ctree::value_split local{e_next, {{d_pk, pi1_id}, {dispatch, v_id}}};
    std::unordered_map<int, int> branch_node{{d_pk, pi1}};

    const bitstring t = st.trees[level].last_pair_test_label(pi1_id);
    const int v_node = st.hyp.add_node(v_id);
    st.hyp.remove_edge(pi, q);
    st.hyp.add_edge(pi, v_node, q);
    branch_node[dispatch] = v_node;
    wire(v_node, t);
    wire(v_node, flip_first(t));

    const auto snapshot = st.hyp.incoming_edges(pi1);
    std::size_t removed = 0;
    for (const auto& [src, lbl] : snapshot) {
      const bitstring src_id = st.hyp.node(src).id;
      const int val = mq(src_id + lbl + e_next);
      if (val == d_pk) continue;
      ++removed;
      if (const auto it = branch_node.find(val); it != branch_node.end()) {
        st.hyp.move_edge(src, lbl, it->second);
        continue;
      }
      const bitstring sib_id = src_id + lbl;
      const int sib = st.hyp.add_node(sib_id);
      st.hyp.remove_edge(src, lbl);
      st.hyp.add_edge(src, sib, lbl);
      local.branches.emplace_back(val, sib_id);
      branch_node[val] = sib;
      wire(sib, t);
      wire(sib, flip_first(t));
    }
    // Wiring the carved-out nodes only ever adds edges into strictly deeper
    // levels, so the incoming set of p_{i+1} can only have shrunk.
    assert(st.hyp.incoming_edges(pi1).size() == snapshot.size() - removed);

    st.trees[level].replace_leaf_with_value_test(pi1_id, local);
    ++stats.node_splits;
    emit({{"event", "update"},
          {"kind", "node_split"},
          {"path_index", i},
          {"node", v_id.text()},
          {"level", level},
          {"dummy_promoted", false},
          {"nodes", st.hyp.node_count()}});
  }

  /// The counterexample exposes a branching point strictly inside the edge
  /// p_i -> p_{i+1} (or at p_i itself when only a placeholder root stood
  /// there): insert it, reroute every longer edge that provably passes
  /// through it, and extend the level tree with the new distinction.
  void insert_branching_node(const std::vector<int>& path, int i, const bitstring& q,
                             const bitstring& e_next, const bitstring& e, int g_i,
                             int d_pk) {
    const int pi = path[i - 1];
    const int pi1 = path[i];
    const bitstring pi_id = st.hyp.node(pi).id;
    const int qlen = static_cast<int>(q.size());

    // h(x): crossover of the followed label toward the counterexample's own
    // bits; the flip pins the deepest prefix of q that still answers d_pk.
    const bitstring f = prefix(suffix(e, m - pi_id.size()), qlen);
    std::map<int, int> h_values{{0, d_pk}, {qlen, g_i}};
    auto hpred = [&](int x) {
      const int v = mq(pi_id + crossover(q, f, x) + e_next);
      h_values[x] = v;
      return v == d_pk;
    };
    const auto [pred_idx, j] = find_flip(0, qlen, true, false, hpred);
    (void)pred_idx;

    const bitstring v_id = pi_id + prefix(q, qlen - j);
    const int level = static_cast<int>(v_id.size());
    const bitstring r = suffix(e, m - level);
    const int vr_value = h_values.at(j);
    assert(vr_value != d_pk);

    int v_node;
    bool promoted = false;
    if (j == qlen) {
      // v coincides with p_i, which is only consistent if p_i carried no
      // identity of its own yet.
      if (!(st.hyp.has_dummy_root() && pi == hypothesis::root_index))
        protocol_error("refinement rediscovered an existing node");
      st.hyp.promote_root();
      v_node = pi;
      promoted = true;
    } else {
      v_node = st.hyp.add_node(v_id);
      st.hyp.remove_edge(pi, q);
      st.hyp.add_edge(pi, v_node, prefix(q, qlen - j));
      st.hyp.add_edge(v_node, pi1, suffix(q, j));

      // Any edge spanning the new level might secretly pass through v: two
      // probes against the distinguishing pair (r, flipped r) decide.
      const auto snapshot = st.hyp.edges();
      std::size_t spanning = 0, rerouted = 0;
      for (const auto& [src, dst, lbl] : snapshot) {
        const int src_level = st.hyp.level(src);
        if (!(src_level < level && level < st.hyp.level(dst))) continue;
        ++spanning;
        const bitstring g = prefix(lbl, level - src_level);
        const bitstring a = st.hyp.node(src).id + g;
        const int c1 = mq(a + r);
        const int c2 = mq(a + flip_first(r));
        if (c1 == vr_value && c2 == d_pk) {
          st.hyp.remove_edge(src, lbl);
          st.hyp.add_edge(src, v_node, g);
          ++rerouted;
        }
      }
      std::size_t spanning_now = 0;
      for (const auto& [src, dst, lbl] : st.hyp.edges())
        if (st.hyp.level(src) < level && level < st.hyp.level(dst)) ++spanning_now;
      assert(spanning_now == spanning - rerouted);
      (void)spanning_now;

      st.trees[level].extend_unknown(r, {vr_value, d_pk}, v_id);
    }
    wire(v_node, r);
    ++stats.branch_insertions;
    emit({{"event", "update"},
          {"kind", "branch_insert"},
          {"path_index", i},
          {"node", v_id.text()},
          {"level", level},
          {"dummy_promoted", promoted},
          {"nodes", st.hyp.node_count()}});
  }

  // --- Main loop ----------------------------------------------------------

  learn_result run() {
    omtbdd h = constant_diagram(m, num_values(), 0);
    auto ce = ask_eq(h);
    if (!ce) return finish(h);
    const bitstring ep = *ce;
    const int lp = mq(ep);
    if (lp == 0) protocol_error("counterexample agrees with the rejected hypothesis");

    h = constant_diagram(m, num_values(), lp);
    ce = ask_eq(h);
    if (!ce) return finish(h);
    bitstring e = *ce;
    int l = mq(e);
    if (l == lp) protocol_error("counterexample agrees with the rejected hypothesis");

    build_initial(ep, lp, e, l);
    after_update();

    while (true) {
      if (st.hyp.eval_value(e) == l) {
        h = st.hyp.extract(num_values());
        ce = ask_eq(h);
        if (!ce) return finish(h);
        e = *ce;
        l = mq(e);
        if (st.hyp.eval_value(e) == l)
          protocol_error("counterexample agrees with the rejected hypothesis");
      }
      refine(e, l);
      after_update();
    }
  }
};

}  // namespace

learn_result learn(int num_vars, membership_oracle& mq, equivalence_oracle& eq,
                   const learn_options& opts) {
  session s(num_vars, mq, eq, opts);
  return s.run();
}

std::vector<std::string> check_conditions(const learner_state& st, const omtbdd& target) {
  std::vector<std::string> out;
  const int m = st.num_vars;
  const hypothesis& hyp = st.hyp;
  membership_fn ref = [&target](const bitstring& x) { return eval(target, x); };

  if (target.num_vars != m) {
    out.push_back("reference has a different variable count than the state");
    return out;
  }
  if (st.trees.size() != static_cast<std::size_t>(m) + 1) {
    out.push_back("state does not hold one tree per level");
    return out;
  }

  const bool dummy = hyp.has_dummy_root();
  auto is_dummy = [&](int idx) { return dummy && idx == hypothesis::root_index; };

  // Node identities name real, pairwise-distinct branching points whose
  // values (for sinks) match the target.
  std::map<int, std::map<node_index, bitstring>> reached_per_level;
  for (int idx = 0; idx < hyp.total_nodes(); ++idx) {
    if (is_dummy(idx)) continue;
    const hyp_node& n = hyp.node(idx);
    const node_index tn = trace_to_node(target, n.id);
    if (tn == no_node) {
      out.push_back("identity \"" + n.id.text() +
                    "\" does not name a branching point of the reference");
      continue;
    }
    if (n.sink && target.nodes[static_cast<std::size_t>(tn)].value != n.value)
      out.push_back("sink \"" + n.id.text() + "\" holds value " + std::to_string(n.value) +
                    " but the reference answers " +
                    std::to_string(target.nodes[static_cast<std::size_t>(tn)].value));
    auto [it, inserted] =
        reached_per_level[static_cast<int>(n.id.size())].emplace(tn, n.id);
    if (!inserted)
      out.push_back("identities \"" + it->second.text() + "\" and \"" + n.id.text() +
                    "\" name the same branching point of the reference");
  }

  // Each identity classifies to its own leaf in its level tree.
  for (int idx = 0; idx < hyp.total_nodes(); ++idx) {
    if (is_dummy(idx)) continue;
    const hyp_node& n = hyp.node(idx);
    if (n.id.empty()) continue;
    const auto res = st.trees[n.id.size()].classify(n.id, ref);
    if (!(res.kind == classify_kind::at_leaf && res.leaf_id == n.id))
      out.push_back("identity \"" + n.id.text() +
                    "\" does not classify to its own leaf at level " +
                    std::to_string(n.id.size()));
  }

  // Tree shape per level.
  for (int level = 1; level <= m; ++level)
    for (const auto& msg : st.trees[level].validate(level, m))
      out.push_back("level " + std::to_string(level) + " tree: " + msg);

  // Exhaustive negative check on small variable counts: strings naming no
  // branching point stay unclassified.
  if (m <= 12) {
    for (int level = 1; level < m; ++level) {
      for (std::uint32_t bits = 0; bits < (1u << level); ++bits) {
        bitstring a = bitstring::zeros(level);
        for (int p = 0; p < level; ++p)
          a.set_bit(p, (bits >> (level - 1 - p)) & 1u);
        if (trace_to_node(target, a) != no_node) continue;
        if (st.trees[level].classify(a, ref).kind != classify_kind::unknown)
          out.push_back("string \"" + a.text() +
                        "\" names no branching point but classifies at level " +
                        std::to_string(level));
      }
    }
  }

  // Edges: source identity plus the full label classifies to the target
  // leaf; any proper prefix of the label stays unclassified.
  for (const auto& [src, dst, lbl] : hyp.edges()) {
    const bitstring a = hyp.node(src).id + lbl;
    const bitstring& dst_id = hyp.node(dst).id;
    const auto res = st.trees[a.size()].classify(a, ref);
    if (!(res.kind == classify_kind::at_leaf && res.leaf_id == dst_id))
      out.push_back("edge \"" + hyp.node(src).id.text() + "\"->\"" + dst_id.text() +
                    "\": label endpoint does not classify to the endpoint's leaf");
    const int base = hyp.level(src);
    for (int glen = 1; glen + 1 <= static_cast<int>(lbl.size()); ++glen) {
      const bitstring p = hyp.node(src).id + prefix(lbl, glen);
      if (st.trees[base + glen].classify(p, ref).kind != classify_kind::unknown)
        out.push_back("edge \"" + hyp.node(src).id.text() + "\"->\"" + dst_id.text() +
                      "\": interior prefix \"" + p.text() + "\" is already classified");
    }
  }

  for (const auto& msg : hyp.validate()) out.push_back("graph: " + msg);
  return out;
}

}  // namespace qlearn
