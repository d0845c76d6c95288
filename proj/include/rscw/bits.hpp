#pragma once

#include <bit>
#include <cstddef>
#include <cstdint>
#include <stdexcept>
#include <vector>

namespace rscw {

// Fixed-length bit vector over 64-bit words.  All GF(2) algebra in the
// workbench (Pauli components, syndromes, pure-error rows) runs on this type.
// Bit i lives in word i/64 at position i%64 (little-endian bit order, which
// is also the order used when rows are serialized to disk).
class BitVec {
 public:
  BitVec() = default;
  explicit BitVec(std::size_t n) : n_(n), words_((n + 63) / 64, 0) {}

  std::size_t size() const { return n_; }

  bool get(std::size_t i) const {
    return (words_[i >> 6] >> (i & 63)) & 1u;
  }

  void set(std::size_t i, bool v = true) {
    const std::uint64_t mask = std::uint64_t{1} << (i & 63);
    if (v) {
      words_[i >> 6] |= mask;
    } else {
      words_[i >> 6] &= ~mask;
    }
  }

  void flip(std::size_t i) { words_[i >> 6] ^= std::uint64_t{1} << (i & 63); }

  void clear() {
    for (auto& w : words_) w = 0;
  }

  BitVec& operator^=(const BitVec& o) {
    if (o.n_ != n_) throw std::invalid_argument("BitVec size mismatch");
    for (std::size_t i = 0; i < words_.size(); ++i) words_[i] ^= o.words_[i];
    return *this;
  }

  friend BitVec operator^(BitVec a, const BitVec& b) {
    a ^= b;
    return a;
  }

  bool operator==(const BitVec&) const = default;

  std::size_t weight() const {
    std::size_t w = 0;
    for (auto x : words_) w += static_cast<std::size_t>(std::popcount(x));
    return w;
  }

  bool any() const {
    for (auto x : words_)
      if (x) return true;
    return false;
  }

  // Parity of the AND of two vectors: <a, b> over GF(2).
  static bool and_parity(const BitVec& a, const BitVec& b) {
    if (a.n_ != b.n_) throw std::invalid_argument("BitVec size mismatch");
    std::uint64_t acc = 0;
    for (std::size_t i = 0; i < a.words_.size(); ++i)
      acc ^= a.words_[i] & b.words_[i];
    return std::popcount(acc) & 1;
  }

  const std::vector<std::uint64_t>& words() const { return words_; }

 private:
  std::size_t n_ = 0;
  std::vector<std::uint64_t> words_;
};

}  // namespace rscw
