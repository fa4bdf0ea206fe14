#pragma once

#include <cassert>
#include <compare>
#include <cstddef>
#include <functional>
#include <ostream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>

namespace qlearn {

/// A fixed-length sequence of bits, stored as '0'/'1' characters.
///
/// Bit positions are 0-based in this API. Strings name partial assignments
/// to variables x_1..x_m: bit(i) is the value assigned to x_{i+1}.
class bitstring {
 public:
  bitstring() = default;

  /// Wraps a string that must already consist of '0'/'1' characters only
  /// (checked by assertion; use from_text for untrusted input).
  explicit bitstring(std::string bits) : bits_(std::move(bits)) {
#ifndef NDEBUG
    for (char c : bits_) assert(c == '0' || c == '1');
#endif
  }

  /// Parses untrusted text; throws std::invalid_argument on anything but '0'/'1'.
  static bitstring from_text(std::string_view text) {
    for (char c : text) {
      if (c != '0' && c != '1')
        throw std::invalid_argument("bitstring: invalid character '" + std::string(1, c) +
                                    "' in \"" + std::string(text) + "\"");
    }
    return bitstring(std::string(text));
  }

  static bitstring zeros(std::size_t n) { return bitstring(std::string(n, '0')); }

  std::size_t size() const { return bits_.size(); }
  bool empty() const { return bits_.empty(); }

  int bit(std::size_t i) const {
    assert(i < bits_.size());
    return bits_[i] - '0';
  }

  void set_bit(std::size_t i, int b) {
    assert(i < bits_.size());
    assert(b == 0 || b == 1);
    bits_[i] = static_cast<char>('0' + b);
  }

  void push_back(int b) {
    assert(b == 0 || b == 1);
    bits_.push_back(static_cast<char>('0' + b));
  }

  const std::string& text() const { return bits_; }

  friend bitstring operator+(const bitstring& a, const bitstring& b) {
    return bitstring(a.bits_ + b.bits_);
  }

  bool operator==(const bitstring&) const = default;
  auto operator<=>(const bitstring&) const = default;

 private:
  std::string bits_;
};

/// First n bits of a.
inline bitstring prefix(const bitstring& a, std::size_t n) {
  assert(n <= a.size());
  return bitstring(a.text().substr(0, n));
}

/// Last n bits of a.
inline bitstring suffix(const bitstring& a, std::size_t n) {
  assert(n <= a.size());
  return bitstring(a.text().substr(a.size() - n));
}

/// First |a|-j bits of a followed by the last j bits of b; requires |a| == |b|.
inline bitstring crossover(const bitstring& a, const bitstring& b, std::size_t j) {
  assert(a.size() == b.size());
  assert(j <= a.size());
  return bitstring(a.text().substr(0, a.size() - j) + b.text().substr(b.size() - j));
}

/// Copy of a with its first bit flipped; requires a nonempty.
inline bitstring flip_first(const bitstring& a) {
  assert(!a.empty());
  bitstring r = a;
  r.set_bit(0, 1 - r.bit(0));
  return r;
}

inline std::ostream& operator<<(std::ostream& os, const bitstring& b) {
  return os << b.text();
}

}  // namespace qlearn

template <>
struct std::hash<qlearn::bitstring> {
  std::size_t operator()(const qlearn::bitstring& b) const noexcept {
    return std::hash<std::string>{}(b.text());
  }
};
