#include "qlearn/learner.hpp"

#include <doctest.h>

#include <json.hpp>
#include <map>
#include <random>
#include <set>
#include <stdexcept>
#include <vector>

#include "qlearn/omtbdd.hpp"
#include "qlearn/oracles.hpp"
#include "support/random_diagram.hpp"
#include "support/truth_table.hpp"

namespace qlearn {
namespace {

bitstring bs(const std::string& s) { return bitstring::from_text(s); }

int ceil_log2(int n) {
  int t = 0;
  while ((1 << t) < n) ++t;
  return t;
}

std::uint64_t mq_budget(int n, int m) {
  return 2ull * n * (ceil_log2(m) + 3ull * n);
}

/// x1 over three variables: three nodes once reduced.
omtbdd first_bit_target() {
  return tabulate(3, 2, [](const bitstring& x) { return static_cast<int>(x.bit(0)); });
}

/// Runs an exact learning session and checks the result is exactly the
/// target, reduced, and that the learner's own counters agree with the
/// oracles'.
learn_result learn_and_check(const omtbdd& target, learn_options opts = {}) {
  target_oracles o(target);
  const learn_result res = learn(target.num_vars, o.mq, o.eq, opts);
  CHECK(equivalent(res.diagram, target));
  CHECK(is_reduced(res.diagram));
  CHECK(res.stats.membership_queries == o.mq.calls());
  CHECK(res.stats.equivalence_queries == o.eq.calls());
  CHECK(res.stats.updates == res.stats.node_splits + res.stats.branch_insertions);
  return res;
}

/// Replays scripted answers; meant for driving the learner off the rails.
class scripted_equivalence final : public equivalence_oracle {
 public:
  explicit scripted_equivalence(std::vector<std::optional<bitstring>> answers)
      : answers_(std::move(answers)) {}

 private:
  std::optional<bitstring> test(const omtbdd&) override { return answers_.at(next_++); }
  std::vector<std::optional<bitstring>> answers_;
  std::size_t next_ = 0;
};

TEST_CASE("find_flip: finds the flip of a monotone predicate, probing little") {
  for (const int n : {2, 3, 5, 8, 64, 100}) {
    for (int flip = 1; flip <= n; ++flip) {
      std::set<int> queried;
      auto pred = [&](int x) {
        queried.insert(x);
        return x < flip;
      };
      const auto [a, b] = find_flip(0, n, true, false, pred);
      CHECK(a == flip - 1);
      CHECK(b == flip);
      CHECK(queried.count(0) == 0);
      CHECK(queried.count(n) == 0);
      CHECK(static_cast<int>(queried.size()) <= ceil_log2(n));
    }
  }
}

TEST_CASE("find_flip: any adjacent flip satisfies a non-monotone predicate") {
  // pred true except on multiples of 3; pred(0) forced true, pred(10) false.
  auto pred = [](int x) { return x == 0 ? true : x % 3 != 0; };
  REQUIRE(pred(0));
  REQUIRE_FALSE(pred(9));
  const auto [a, b] = find_flip(0, 9, true, false, pred);
  CHECK(b == a + 1);
  CHECK(pred(a));
  CHECK_FALSE(pred(b));

  // Inverted polarity, as used when walking a trace towards agreement.
  auto pred2 = [](int x) { return x >= 4; };
  const auto [c, d] = find_flip(1, 7, false, true, pred2);
  CHECK(c == 3);
  CHECK(d == 4);
}

TEST_CASE("learn: the all-zero target costs one equivalence query and no others") {
  target_oracles o(constant_diagram(5, 3, 0));
  const learn_result res = learn(5, o.mq, o.eq);
  CHECK(res.stats.equivalence_queries == 1);
  CHECK(res.stats.membership_queries == 0);
  CHECK(res.stats.updates == 0);
  CHECK(equivalent(res.diagram, o.mq.target()));
  CHECK(o.eq.calls() == 1);
  CHECK(o.mq.calls() == 0);
}

TEST_CASE("learn: any other constant costs two equivalence queries and one probe") {
  target_oracles o(constant_diagram(4, 3, 2));
  const learn_result res = learn(4, o.mq, o.eq);
  CHECK(res.stats.equivalence_queries == 2);
  CHECK(res.stats.membership_queries == 1);
  CHECK(equivalent(res.diagram, o.mq.target()));
}

TEST_CASE("learn: recovers a single-variable function exactly") {
  const learn_result res = learn_and_check(first_bit_target());
  CHECK(res.diagram.nodes.size() == 3);
  CHECK(res.violations.empty());
}

TEST_CASE("learn: recovers parity of the first two of four variables") {
  const omtbdd target =
      tabulate(4, 2, [](const bitstring& x) { return static_cast<int>(x.bit(0) ^ x.bit(1)); });
  const learn_result res = learn_and_check(target);
  CHECK(res.diagram.nodes.size() == 5);
}

TEST_CASE("learn: recovers a three-valued function") {
  const omtbdd target = tabulate(4, 3, [](const bitstring& x) {
    if (x.bit(0) && x.bit(3)) return 2;
    if (x.bit(1)) return 1;
    return 0;
  });
  learn_and_check(target);
}

TEST_CASE("learn: random targets are learned exactly with clean internals") {
  std::mt19937_64 rng(20260822);
  int interesting = 0;
  for (int trial = 0; trial < 150; ++trial) {
    const int m = 1 + static_cast<int>(rng() % 10);
    const int k = 2 + static_cast<int>(rng() % 3);
    const omtbdd target = reduce(testing::random_raw_diagram(rng, m, k));
    const int n = static_cast<int>(target.nodes.size());

    learn_options opts;
    opts.check_invariants = true;
    opts.reference = &target;
    const learn_result res = learn_and_check(target, opts);
    CHECK(res.violations.empty());
    if (!res.violations.empty()) {
      for (const auto& v : res.violations) MESSAGE(v);
      break;
    }
    if (n >= 4) {
      ++interesting;
      CHECK(res.stats.equivalence_queries <= static_cast<std::uint64_t>(n));
      CHECK(res.stats.membership_queries <= mq_budget(n, m));
    }
  }
  CHECK(interesting > 30);  // the battery must not degenerate to constants
}

TEST_CASE("learn: repeated runs on one target are fully deterministic") {
  const omtbdd target = tabulate(5, 3, [](const bitstring& x) {
    return static_cast<int>(x.bit(0)) + static_cast<int>(x.bit(2) & x.bit(4));
  });
  const learn_result a = learn_and_check(target);
  const learn_result b = learn_and_check(target);
  CHECK(a.stats.membership_queries == b.stats.membership_queries);
  CHECK(a.stats.equivalence_queries == b.stats.equivalence_queries);
  CHECK(structurally_equal(a.diagram, b.diagram));
}

TEST_CASE("learn: a caching wrapper is transparent to the learner") {
  const omtbdd target = first_bit_target();
  target_oracles plain(target);
  const learn_result raw = learn(3, plain.mq, plain.eq);

  diagram_membership inner(target);
  caching_membership cached(inner);
  diagram_equivalence eq(target);
  const learn_result wrapped = learn(3, cached, eq);

  CHECK(structurally_equal(raw.diagram, wrapped.diagram));
  CHECK(wrapped.stats.membership_queries == raw.stats.membership_queries);
  CHECK(cached.calls() == wrapped.stats.membership_queries);
  CHECK(inner.calls() == cached.distinct());
  CHECK(inner.calls() <= cached.calls());
}

TEST_CASE("learn: the suffix variant of wiring also learns exactly") {
  std::mt19937_64 rng(77);
  for (int trial = 0; trial < 40; ++trial) {
    const int m = 2 + static_cast<int>(rng() % 8);
    const int k = 2 + static_cast<int>(rng() % 3);
    const omtbdd target = reduce(testing::random_raw_diagram(rng, m, k));
    learn_options opts;
    opts.addedge_suffix = true;
    learn_and_check(target, opts);
  }
}

TEST_CASE("learn: a counterexample that fails to distinguish is a protocol error") {
  diagram_membership mq(constant_diagram(3, 2, 0));
  scripted_equivalence eq({bs("010")});
  CHECK_THROWS_AS(learn(3, mq, eq), std::runtime_error);
}

TEST_CASE("learn: a wrong-length counterexample is a protocol error") {
  diagram_membership mq(first_bit_target());
  scripted_equivalence eq({bs("01")});
  CHECK_THROWS_AS(learn(3, mq, eq), std::runtime_error);
}

TEST_CASE("learn: the event stream mirrors the counters") {
  const omtbdd target = tabulate(4, 2, [](const bitstring& x) {
    return static_cast<int>(x.bit(1) & (x.bit(0) | x.bit(3)));
  });
  std::vector<nlohmann::json> events;
  learn_options opts;
  opts.event_sink = [&events](const std::string& line) {
    events.push_back(nlohmann::json::parse(line));
  };
  const learn_result res = learn_and_check(target, opts);

  std::map<std::string, int> counts;
  for (const auto& e : events) counts[e.at("event").get<std::string>()]++;
  CHECK(counts["mq"] == static_cast<int>(res.stats.membership_queries));
  CHECK(counts["eq"] == static_cast<int>(res.stats.equivalence_queries));
  CHECK(counts["init"] == 1);
  CHECK(counts["update"] == res.stats.updates);

  // Membership records carry true target values; the final record is the
  // accepting equivalence answer.
  diagram_membership probe(target);
  for (const auto& e : events)
    if (e.at("event") == "mq")
      CHECK(probe.query(bitstring::from_text(e.at("input").get<std::string>())) ==
            e.at("value").get<int>());
  CHECK(events.back().at("event") == "eq");
  CHECK(events.back().at("result") == "yes");
}

TEST_CASE("learn: the value-range hint widens the extracted diagram") {
  target_oracles o(constant_diagram(3, 2, 0));
  learn_options opts;
  opts.num_values_hint = 5;
  const learn_result res = learn(3, o.mq, o.eq, opts);
  CHECK(res.diagram.num_values == 5);
  CHECK(equivalent(res.diagram, o.mq.target()));
}

TEST_CASE("learn: intermediate states stay structurally consistent") {
  const omtbdd target = tabulate(6, 3, [](const bitstring& x) {
    int acc = 0;
    for (std::size_t i = 0; i < 6; i += 2) acc += x.bit(i);
    return acc % 3;
  });
  target_oracles o(target);
  int snapshots = 0;
  learn_options opts;
  opts.on_update = [&](const learner_state& st, const learn_stats&) {
    ++snapshots;
    CHECK(st.hyp.validate().empty());
    for (int level = 1; level <= st.num_vars; ++level)
      CHECK(st.trees[level].validate(level, st.num_vars).empty());
  };
  const learn_result res = learn(6, o.mq, o.eq, opts);
  CHECK(equivalent(res.diagram, target));
  CHECK(snapshots == res.stats.updates + 1);
}

}  // namespace
}  // namespace qlearn
