#include "qlearn/hypothesis.hpp"

#include <doctest.h>

#include <stdexcept>

#include "qlearn/bitstring.hpp"
#include "qlearn/omtbdd.hpp"
#include "support/truth_table.hpp"

namespace qlearn {
namespace {

bitstring bs(const std::string& s) { return bitstring::from_text(s); }

/// Dummy root -> node "01" -> two sinks; three variables.
hypothesis dummy_fixture() {
  hypothesis h(3, true);
  const int v = h.add_node(bs("01"));
  h.add_edge(hypothesis::root_index, v, bs("01"));
  const int s0 = h.add_sink(bs("010"), 0);
  const int s1 = h.add_sink(bs("011"), 1);
  h.add_edge(v, s0, bs("0"));
  h.add_edge(v, s1, bs("1"));
  return h;
}

TEST_CASE("hypothesis: construction and lookup") {
  hypothesis h(3, true);
  CHECK(h.num_vars() == 3);
  CHECK(h.has_dummy_root());
  CHECK(h.total_nodes() == 1);
  CHECK(h.node_count() == 0);
  CHECK(h.node(hypothesis::root_index).id.empty());
  CHECK(h.find(bs("01")) == hypothesis::no_index);

  const int v = h.add_node(bs("01"));
  CHECK(h.find(bs("01")) == v);
  CHECK(h.level(v) == 2);
  CHECK(h.node_count() == 1);

  hypothesis plain(2, false);
  CHECK_FALSE(plain.has_dummy_root());
  CHECK(plain.node_count() == 1);
}

TEST_CASE("hypothesis: dummy root edge rules") {
  hypothesis h(3, true);
  const int v = h.add_node(bs("01"));
  h.add_edge(hypothesis::root_index, v, bs("01"));
  // A dummy root holds exactly one edge.
  const int w = h.add_node(bs("1"));
  CHECK_THROWS_AS(h.add_edge(hypothesis::root_index, w, bs("1")), std::logic_error);
}

TEST_CASE("hypothesis: label length must match the level gap") {
  hypothesis h(3, false);
  const int s = h.add_sink(bs("000"), 0);
  CHECK_THROWS_AS(h.add_edge(hypothesis::root_index, s, bs("00")), std::logic_error);
  h.add_edge(hypothesis::root_index, s, bs("000"));
  // The slot for first bit 0 is now taken.
  const int s2 = h.add_sink(bs("011"), 1);
  CHECK_THROWS_AS(h.add_edge(hypothesis::root_index, s2, bs("011")), std::logic_error);
  h.add_edge(hypothesis::root_index, s2, bs("111"));
  CHECK(h.validate().empty());
}

TEST_CASE("hypothesis: trace, eval, edges") {
  const hypothesis h = dummy_fixture();
  const int v = h.find(bs("01"));
  const int s0 = h.find(bs("010"));
  const int s1 = h.find(bs("011"));

  // The dummy edge is followed without looking at the input.
  CHECK(h.trace(bs("110")) == std::vector<int>{hypothesis::root_index, v, s0});
  CHECK(h.trace(bs("001")) == std::vector<int>{hypothesis::root_index, v, s1});
  CHECK(h.eval_value(bs("110")) == 0);
  CHECK(h.eval_value(bs("111")) == 1);

  // The dummy placeholder edge is not reported.
  const auto es = h.edges();
  CHECK(es.size() == 2);
  for (const auto& [from, to, label] : es) {
    CHECK(from == v);
    CHECK((to == s0 || to == s1));
    CHECK(label.size() == 1);
  }

  const auto inc = h.incoming_edges(s0);
  REQUIRE(inc.size() == 1);
  CHECK(inc[0].first == v);
  CHECK(inc[0].second == bs("0"));
}

TEST_CASE("hypothesis: trace requires a present edge") {
  hypothesis h(2, false);
  const int s = h.add_sink(bs("00"), 0);
  h.add_edge(hypothesis::root_index, s, bs("00"));
  CHECK(h.eval_value(bs("01")) == 0);  // label bits beyond the first are skips
  CHECK_THROWS_AS(h.trace(bs("10")), std::logic_error);
}

TEST_CASE("hypothesis: remove and move edges maintain incoming lists") {
  hypothesis h = dummy_fixture();
  const int v = h.find(bs("01"));
  const int s0 = h.find(bs("010"));
  const int s1 = h.find(bs("011"));

  h.move_edge(v, bs("0"), s1);
  CHECK(h.incoming_edges(s0).empty());
  CHECK(h.incoming_edges(s1).size() == 2);
  CHECK(h.eval_value(bs("010")) == 1);

  h.remove_edge(v, bs("0"));
  CHECK(h.incoming_edges(s1).size() == 1);
  CHECK_THROWS_AS(h.remove_edge(v, bs("0")), std::logic_error);
  // Exact-label match is required, not just the first bit.
  CHECK_THROWS_AS(h.remove_edge(v, bs("10")), std::logic_error);

  h.add_edge(v, s0, bs("0"));
  CHECK(h.validate().empty());
}

TEST_CASE("hypothesis: promote_root turns the placeholder into a real node") {
  hypothesis h = dummy_fixture();
  REQUIRE(h.has_dummy_root());
  h.promote_root();
  CHECK_FALSE(h.has_dummy_root());
  CHECK(h.node_count() == 4);
  // The former placeholder edge still stands and a sibling fits now.
  const int v = h.find(bs("01"));
  CHECK(h.trace(bs("010"))[1] == v);
  const int w = h.add_node(bs("1"));
  h.add_edge(hypothesis::root_index, w, bs("1"));
  const auto es = h.edges();
  CHECK(es.size() == 4);
  CHECK(h.validate().size() > 0);  // w has no outgoing edges yet
}

TEST_CASE("hypothesis: extract with a dummy root") {
  const hypothesis h = dummy_fixture();
  const omtbdd d = h.extract(2);
  CHECK(d.num_vars == 3);
  CHECK(d.num_values == 2);
  CHECK(validate(d).empty());
  // The placeholder is gone: the diagram starts at the level-2 node.
  CHECK(d.nodes[static_cast<std::size_t>(d.root)].var == 3);
  for (std::uint32_t bits = 0; bits < 8; ++bits) {
    const bitstring x = testing::input_of_index(3, bits);
    CHECK(eval(d, x) == h.eval_value(x));
  }
}

TEST_CASE("hypothesis: extract keeps label skips as don't-cares") {
  hypothesis h(3, false);
  const int a = h.add_sink(bs("000"), 0);
  const int b = h.add_sink(bs("111"), 1);
  h.add_edge(hypothesis::root_index, a, bs("000"));
  h.add_edge(hypothesis::root_index, b, bs("100"));
  const omtbdd d = h.extract(2);
  CHECK(validate(d).empty());
  for (std::uint32_t bits = 0; bits < 8; ++bits) {
    const bitstring x = testing::input_of_index(3, bits);
    CHECK(eval(d, x) == h.eval_value(x));
    CHECK(eval(d, x) == x.bit(0));
  }
}

TEST_CASE("hypothesis: extract rejects half-wired nodes and bad sink values") {
  hypothesis h(2, false);
  const int s = h.add_sink(bs("00"), 1);
  h.add_edge(hypothesis::root_index, s, bs("00"));
  CHECK_THROWS_AS(h.extract(2), std::logic_error);  // missing 1-edge
  const int s2 = h.add_sink(bs("11"), 1);
  h.add_edge(hypothesis::root_index, s2, bs("11"));
  CHECK_NOTHROW(h.extract(2));
  CHECK_THROWS_AS(h.extract(1), std::logic_error);  // sink value out of range
}

TEST_CASE("hypothesis: validate flags incomplete states") {
  hypothesis h(3, true);
  CHECK_FALSE(h.validate().empty());  // a dummy root must hold its one edge
  const int v = h.add_node(bs("01"));
  h.add_edge(hypothesis::root_index, v, bs("01"));
  CHECK_FALSE(h.validate().empty());  // v lacks outgoing edges
  const int s0 = h.add_sink(bs("010"), 0);
  const int s1 = h.add_sink(bs("011"), 1);
  h.add_edge(v, s0, bs("0"));
  h.add_edge(v, s1, bs("1"));
  CHECK(h.validate().empty());
}

}  // namespace
}  // namespace qlearn
