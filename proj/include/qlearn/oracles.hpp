#pragma once

#include <cstdint>
#include <optional>
#include <random>
#include <unordered_map>
#include <vector>

#include "qlearn/bitstring.hpp"
#include "qlearn/omtbdd.hpp"

namespace qlearn {

/// Answers full assignments with target values. Implementations must be
/// deterministic across a run. query() counts every call.
class membership_oracle {
 public:
  virtual ~membership_oracle() = default;

  int query(const bitstring& input) {
    ++calls_;
    return answer(input);
  }
  std::uint64_t calls() const { return calls_; }

 private:
  virtual int answer(const bitstring& input) = 0;
  std::uint64_t calls_ = 0;
};

/// Answers hypothesis diagrams with a counterexample, or nothing when the
/// hypothesis is accepted. query() counts every call.
class equivalence_oracle {
 public:
  virtual ~equivalence_oracle() = default;

  std::optional<bitstring> query(const omtbdd& hypothesis) {
    ++calls_;
    return test(hypothesis);
  }
  std::uint64_t calls() const { return calls_; }

 private:
  virtual std::optional<bitstring> test(const omtbdd& hypothesis) = 0;
  std::uint64_t calls_ = 0;
};

/// Membership backed by diagram evaluation.
class diagram_membership final : public membership_oracle {
 public:
  explicit diagram_membership(omtbdd target) : target_(std::move(target)) {}
  const omtbdd& target() const { return target_; }

 private:
  int answer(const bitstring& input) override { return eval(target_, input); }
  omtbdd target_;
};

/// Exact equivalence backed by diagram comparison; the target is reduced once
/// at construction to keep comparisons small.
class diagram_equivalence final : public equivalence_oracle {
 public:
  explicit diagram_equivalence(const omtbdd& target) : target_(reduce(target)) {}
  const omtbdd& target() const { return target_; }

 private:
  std::optional<bitstring> test(const omtbdd& hypothesis) override {
    return find_difference(hypothesis, target_);
  }
  omtbdd target_;
};

struct labeled_row {
  bitstring input;
  int label = 0;
};

/// Consistency testing against a fixed sample set: answers with the first
/// stored row (in insertion order) the hypothesis gets wrong, and accepts when
/// there is none -- even when the functions differ elsewhere. Construction
/// rejects conflicting duplicate inputs.
class dataset_equivalence final : public equivalence_oracle {
 public:
  explicit dataset_equivalence(std::vector<labeled_row> rows);
  const std::vector<labeled_row>& rows() const { return rows_; }

 private:
  std::optional<bitstring> test(const omtbdd& hypothesis) override;
  std::vector<labeled_row> rows_;
};

/// Stochastic testing: draws uniform random inputs from a seeded stream and
/// answers with the first disagreement against `mq`, accepting after `trials`
/// consecutive agreements. Queries made here hit the wrapped oracle's counter.
class sampling_equivalence final : public equivalence_oracle {
 public:
  sampling_equivalence(membership_oracle& mq, int num_vars, int trials, std::uint64_t seed);

 private:
  std::optional<bitstring> test(const omtbdd& hypothesis) override;
  membership_oracle& mq_;
  int num_vars_;
  int trials_;
  std::mt19937_64 rng_;
};

/// Memoizing wrapper: repeated inputs are answered from the cache, so the
/// wrapped oracle's counter reports distinct queries while this oracle's own
/// counter reports raw calls.
class caching_membership final : public membership_oracle {
 public:
  explicit caching_membership(membership_oracle& inner) : inner_(inner) {}
  std::uint64_t distinct() const { return cache_.size(); }

 private:
  int answer(const bitstring& input) override;
  membership_oracle& inner_;
  std::unordered_map<bitstring, int> cache_;
};

/// The exact-oracle pair for a known target.
struct target_oracles {
  explicit target_oracles(const omtbdd& target) : mq(target), eq(target) {}
  diagram_membership mq;
  diagram_equivalence eq;
};

}  // namespace qlearn
