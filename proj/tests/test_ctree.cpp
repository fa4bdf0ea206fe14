#include "qlearn/ctree.hpp"

#include <doctest.h>

#include <map>
#include <set>
#include <stdexcept>
#include <string>

#include "qlearn/bitstring.hpp"

namespace qlearn {
namespace {

bitstring bs(const std::string& s) { return bitstring::from_text(s); }

/// A membership function scripted from a table; unknown inputs throw, so a
/// test immediately surfaces any query it did not anticipate.
membership_fn scripted(const std::map<std::string, int>& table, int& calls) {
  return [&table, &calls](const bitstring& x) {
    ++calls;
    return table.at(x.text());
  };
}

/// Level-4 tree of an 8-variable function: a pair test with label "0011" and
/// keyed pair (2,0) over a value test with label "0001".
ctree two_stage_fixture() {
  ctree t = ctree::pair_test_root(bs("0011"), {2, 0}, bs("0101"));
  t.replace_leaf_with_value_test(bs("0101"),
                                 {bs("0001"), {{1, bs("0101")}, {2, bs("1101")}}});
  return t;
}

TEST_CASE("ctree: a fresh tree answers unknown without querying") {
  const ctree t;
  CHECK(t.unknown_only());
  int calls = 0;
  const auto res = t.classify(bs("1100"), scripted({}, calls));
  CHECK(res.kind == classify_kind::unknown);
  CHECK(calls == 0);
  CHECK(t.leaf_ids().empty());
}

TEST_CASE("ctree: pair test then value test classifies in three queries") {
  const ctree t = two_stage_fixture();
  const std::map<std::string, int> table{
      {"11000011", 2}, {"11001011", 0}, {"11000001", 1}};
  int calls = 0;
  const auto res = t.classify(bs("1100"), scripted(table, calls));
  CHECK(res.kind == classify_kind::at_leaf);
  CHECK(res.leaf_id == bs("0101"));
  CHECK(calls == 3);
}

TEST_CASE("ctree: a failed pair test falls through to unknown in two queries") {
  const ctree t = two_stage_fixture();
  const std::map<std::string, int> table{{"00000011", 1}, {"00001011", 1}};
  int calls = 0;
  const auto res = t.classify(bs("0000"), scripted(table, calls));
  CHECK(res.kind == classify_kind::unknown);
  CHECK(calls == 2);
}

TEST_CASE("ctree: a value test without the observed branch reports stuck") {
  ctree t = two_stage_fixture();
  const std::map<std::string, int> table{
      {"11100011", 2}, {"11101011", 0}, {"11100001", 0}};
  int calls = 0;
  const auto res = t.classify(bs("1110"), scripted(table, calls));
  REQUIRE(res.kind == classify_kind::stuck);
  CHECK(res.stuck_test == bs("0001"));
  CHECK(res.stuck_value == 0);
  CHECK(calls == 3);

  // Adding the missing branch resolves the same input to its own leaf.
  t.add_value_branch(res.stuck_node, res.stuck_value, bs("1110"));
  calls = 0;
  const auto again = t.classify(bs("1110"), scripted(table, calls));
  CHECK(again.kind == classify_kind::at_leaf);
  CHECK(again.leaf_id == bs("1110"));
  CHECK(calls == 3);

  CHECK_THROWS_AS(t.add_value_branch(res.stuck_node, 0, bs("0011")), std::logic_error);
}

TEST_CASE("ctree: node identities classify to their own leaves") {
  const ctree t = two_stage_fixture();
  const std::map<std::string, int> table{
      {"01010011", 2}, {"01011011", 0}, {"01010001", 1},
      {"11010011", 2}, {"11011011", 0}, {"11010001", 2}};
  int calls = 0;
  const auto mq = scripted(table, calls);
  CHECK(t.classify(bs("0101"), mq) ==
        classify_result{classify_kind::at_leaf, bs("0101"), -1, {}, -1});
  CHECK(t.classify(bs("1101"), mq) ==
        classify_result{classify_kind::at_leaf, bs("1101"), -1, {}, -1});
}

TEST_CASE("ctree: extend_unknown chains a second pair test") {
  ctree t = two_stage_fixture();
  t.extend_unknown(bs("0111"), {1, 2}, bs("0000"));

  const std::map<std::string, int> table{
      {"00000011", 1}, {"00001011", 1}, {"00000111", 1}, {"00001111", 2},
      {"00100011", 0}, {"00101011", 0}, {"00100111", 0}, {"00101111", 0}};
  int calls = 0;
  const auto hit = t.classify(bs("0000"), scripted(table, calls));
  CHECK(hit.kind == classify_kind::at_leaf);
  CHECK(hit.leaf_id == bs("0000"));
  CHECK(calls == 4);

  calls = 0;
  const auto miss = t.classify(bs("0010"), scripted(table, calls));
  CHECK(miss.kind == classify_kind::unknown);
  CHECK(calls == 4);

  // The unknown leaf was consumed and recreated deeper, never duplicated.
  CHECK_FALSE(t.unknown_only());
  const auto ids = t.leaf_ids();
  CHECK(std::set<bitstring>(ids.begin(), ids.end()) ==
        std::set<bitstring>{bs("0101"), bs("1101"), bs("0000")});
  CHECK(t.validate(4, 8).empty());
}

TEST_CASE("ctree: last_pair_test_label finds the deepest pair test") {
  ctree t = two_stage_fixture();
  CHECK(t.last_pair_test_label(bs("0101")) == bs("0011"));
  t.extend_unknown(bs("0111"), {1, 2}, bs("0000"));
  CHECK(t.last_pair_test_label(bs("0000")) == bs("0111"));
  CHECK(t.last_pair_test_label(bs("0101")) == bs("0011"));
  CHECK_THROWS_AS(t.last_pair_test_label(bs("1011")), std::logic_error);
}

TEST_CASE("ctree: bottom-level tree dispatches purely on values") {
  const ctree t = ctree::value_test_root(bitstring{}, {{0, bs("000")}, {1, bs("111")}});
  const std::map<std::string, int> table{{"010", 0}, {"011", 2}};
  int calls = 0;
  const auto hit = t.classify(bs("010"), scripted(table, calls));
  CHECK(hit.kind == classify_kind::at_leaf);
  CHECK(hit.leaf_id == bs("000"));
  CHECK(calls == 1);

  const auto missing = t.classify(bs("011"), scripted(table, calls));
  REQUIRE(missing.kind == classify_kind::stuck);
  CHECK(missing.stuck_test.empty());
  CHECK(missing.stuck_value == 2);

  CHECK(t.validate(3, 3).empty());
  CHECK_THROWS_AS(t.last_pair_test_label(bs("000")), std::logic_error);
}

TEST_CASE("ctree: validate knows the bottom level allows no unknown leaf") {
  const ctree fresh;
  CHECK(fresh.validate(1, 3).empty());
  CHECK_FALSE(fresh.validate(3, 3).empty());

  // Test lengths must fit the level.
  const ctree t = two_stage_fixture();
  CHECK(t.validate(4, 8).empty());
  CHECK_FALSE(t.validate(3, 8).empty());
}

TEST_CASE("ctree: construction guards") {
  CHECK_THROWS_AS(ctree::pair_test_root(bs("01"), {1, 1}, bs("0")), std::logic_error);
  ctree t = ctree::pair_test_root(bs("01"), {1, 0}, bs("0"));
  CHECK_THROWS_AS(t.extend_unknown(bs("11"), {2, 2}, bs("1")), std::logic_error);
  t.extend_unknown(bs("11"), {2, 0}, bs("1"));
  CHECK(t.validate(1, 3).empty());
}

}  // namespace
}  // namespace qlearn
