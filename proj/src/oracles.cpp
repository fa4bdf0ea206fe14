#include "qlearn/oracles.hpp"

#include <stdexcept>
#include <unordered_map>

namespace qlearn {

dataset_equivalence::dataset_equivalence(std::vector<labeled_row> rows)
    : rows_(std::move(rows)) {
  std::unordered_map<bitstring, int> labels;
  for (const labeled_row& row : rows_) {
    auto [it, inserted] = labels.emplace(row.input, row.label);
    if (!inserted && it->second != row.label)
      throw std::invalid_argument("dataset_equivalence: conflicting labels for input \"" +
                                  row.input.text() + "\"");
  }
}

std::optional<bitstring> dataset_equivalence::test(const omtbdd& hypothesis) {
  for (const labeled_row& row : rows_)
    if (eval(hypothesis, row.input) != row.label) return row.input;
  return std::nullopt;
}

sampling_equivalence::sampling_equivalence(membership_oracle& mq, int num_vars, int trials,
                                           std::uint64_t seed)
    : mq_(mq), num_vars_(num_vars), trials_(trials), rng_(seed) {
  if (trials < 1) throw std::invalid_argument("sampling_equivalence: trials must be >= 1");
  if (num_vars < 1) throw std::invalid_argument("sampling_equivalence: num_vars must be >= 1");
}

std::optional<bitstring> sampling_equivalence::test(const omtbdd& hypothesis) {
  for (int t = 0; t < trials_; ++t) {
    bitstring input = bitstring::zeros(num_vars_);
    std::uint64_t word = 0;
    for (int i = 0; i < num_vars_; ++i) {
      if (i % 64 == 0) word = rng_();
      input.set_bit(i, static_cast<int>((word >> (i % 64)) & 1));
    }
    if (eval(hypothesis, input) != mq_.query(input)) return input;
  }
  return std::nullopt;
}

int caching_membership::answer(const bitstring& input) {
  auto it = cache_.find(input);
  if (it != cache_.end()) return it->second;
  const int value = inner_.query(input);
  cache_.emplace(input, value);
  return value;
}

}  // namespace qlearn
