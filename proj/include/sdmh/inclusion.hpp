#pragma once

#include <bit>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

namespace sdmh {

/// Binary inclusion vector over P predictors, packed into 64-bit words.
/// The number of set bits is tracked on every mutation.
class InclusionVector {
 public:
  InclusionVector() = default;
  explicit InclusionVector(std::size_t size);
  static InclusionVector from_indices(std::size_t size, std::span<const std::size_t> active);
  /// From a string of '0'/'1' characters, index 0 first.
  static InclusionVector from_string(const std::string& bits);
  static InclusionVector from_words(std::size_t size, std::span<const std::uint64_t> words);

  std::size_t size() const { return size_; }
  std::size_t popcount() const { return popcount_; }
  bool empty_model() const { return popcount_ == 0; }

  bool test(std::size_t i) const { return (words_[i >> 6] >> (i & 63)) & 1U; }
  void set(std::size_t i, bool value);
  void flip(std::size_t i);
  InclusionVector flipped(std::size_t i) const;

  std::vector<std::size_t> active_indices() const;
  std::span<const std::uint64_t> words() const { return words_; }
  std::size_t hash() const;
  std::string to_string() const;

  friend bool operator==(const InclusionVector& a, const InclusionVector& b) {
    return a.size_ == b.size_ && a.words_ == b.words_;
  }

 private:
  std::size_t size_ = 0;
  std::size_t popcount_ = 0;
  std::vector<std::uint64_t> words_;
};

struct InclusionVectorHash {
  std::size_t operator()(const InclusionVector& v) const { return v.hash(); }
};

/// Number of coordinates at which a and b differ. Throws DomainError on a
/// length mismatch.
std::size_t hamming(const InclusionVector& a, const InclusionVector& b);

/// Fixed-width bit records, one per iteration, stored contiguously.
class ConfigTrace {
 public:
  ConfigTrace() = default;
  explicit ConfigTrace(std::size_t bits) : bits_(bits), stride_((bits + 63) / 64) {}

  std::size_t bits() const { return bits_; }
  std::size_t length() const { return length_; }
  void reserve(std::size_t n) { data_.reserve(n * stride_); }

  void push(const InclusionVector& v);
  InclusionVector at(std::size_t t) const;
  bool test(std::size_t t, std::size_t bit) const {
    return (data_[t * stride_ + (bit >> 6)] >> (bit & 63)) & 1U;
  }
  std::size_t popcount(std::size_t t) const;

  friend bool operator==(const ConfigTrace&, const ConfigTrace&) = default;

 private:
  std::size_t bits_ = 0;
  std::size_t stride_ = 0;
  std::size_t length_ = 0;
  std::vector<std::uint64_t> data_;
};

}  // namespace sdmh

template <>
struct std::hash<sdmh::InclusionVector> {
  std::size_t operator()(const sdmh::InclusionVector& v) const { return v.hash(); }
};
