#pragma once

#include <cstdint>
#include <random>
#include <utility>
#include <vector>

namespace qlearn {

/// SplitMix64 step: advances `state` and returns the next word. Used to
/// derive independent child seeds from one base seed.
inline std::uint64_t splitmix64(std::uint64_t& state) {
  std::uint64_t z = (state += 0x9e3779b97f4a7c15ull);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
  return z ^ (z >> 31);
}

/// Uniform draw from [0, bound) built on raw 64-bit words with rejection, so
/// results are identical across platforms and standard libraries.
inline std::uint64_t uniform_below(std::mt19937_64& rng, std::uint64_t bound) {
  const std::uint64_t threshold = (0 - bound) % bound;
  for (;;) {
    const std::uint64_t r = rng();
    if (r >= threshold) return r % bound;
  }
}

/// In-place Fisher-Yates shuffle with platform-stable draws.
template <class T>
void stable_shuffle(std::vector<T>& v, std::mt19937_64& rng) {
  for (std::size_t i = v.size(); i > 1; --i)
    std::swap(v[i - 1], v[uniform_below(rng, i)]);
}

}  // namespace qlearn
