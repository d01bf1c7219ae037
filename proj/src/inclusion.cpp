#include "sdmh/inclusion.hpp"

#include "sdmh/errors.hpp"
#include "sdmh/rng.hpp"

namespace sdmh {

InclusionVector::InclusionVector(std::size_t size) : size_(size), words_((size + 63) / 64, 0) {}

InclusionVector InclusionVector::from_indices(std::size_t size,
                                              std::span<const std::size_t> active) {
  InclusionVector v(size);
  for (std::size_t i : active) {
    if (i >= size) throw DomainError("InclusionVector: index out of range");
    v.set(i, true);
  }
  return v;
}

InclusionVector InclusionVector::from_string(const std::string& bits) {
  InclusionVector v(bits.size());
  for (std::size_t i = 0; i < bits.size(); ++i) {
    if (bits[i] == '1') {
      v.set(i, true);
    } else if (bits[i] != '0') {
      throw DomainError("InclusionVector: expected '0' or '1'");
    }
  }
  return v;
}

InclusionVector InclusionVector::from_words(std::size_t size,
                                            std::span<const std::uint64_t> words) {
  InclusionVector v(size);
  if (words.size() != v.words_.size()) throw DomainError("InclusionVector: word count mismatch");
  std::size_t count = 0;
  for (std::size_t w = 0; w < words.size(); ++w) {
    v.words_[w] = words[w];
    count += static_cast<std::size_t>(std::popcount(words[w]));
  }
  if (size % 64 != 0 && !v.words_.empty() && (v.words_.back() >> (size % 64)) != 0) {
    throw DomainError("InclusionVector: bits set beyond size");
  }
  v.popcount_ = count;
  return v;
}

void InclusionVector::set(std::size_t i, bool value) {
  if (test(i) != value) flip(i);
}

void InclusionVector::flip(std::size_t i) {
  const std::uint64_t mask = std::uint64_t{1} << (i & 63);
  std::uint64_t& w = words_[i >> 6];
  if (w & mask) {
    --popcount_;
  } else {
    ++popcount_;
  }
  w ^= mask;
}

InclusionVector InclusionVector::flipped(std::size_t i) const {
  InclusionVector v = *this;
  v.flip(i);
  return v;
}

std::vector<std::size_t> InclusionVector::active_indices() const {
  std::vector<std::size_t> out;
  out.reserve(popcount_);
  for (std::size_t w = 0; w < words_.size(); ++w) {
    std::uint64_t bits = words_[w];
    while (bits != 0) {
      out.push_back(w * 64 + static_cast<std::size_t>(std::countr_zero(bits)));
      bits &= bits - 1;
    }
  }
  return out;
}

std::size_t InclusionVector::hash() const {
  std::uint64_t h = splitmix64(size_);
  for (std::uint64_t w : words_) h = splitmix64(h ^ w);
  return static_cast<std::size_t>(h);
}

std::string InclusionVector::to_string() const {
  std::string s(size_, '0');
  for (std::size_t i = 0; i < size_; ++i) {
    if (test(i)) s[i] = '1';
  }
  return s;
}

std::size_t hamming(const InclusionVector& a, const InclusionVector& b) {
  if (a.size() != b.size()) throw DomainError("hamming: length mismatch");
  const auto wa = a.words();
  const auto wb = b.words();
  std::size_t d = 0;
  for (std::size_t w = 0; w < wa.size(); ++w) {
    d += static_cast<std::size_t>(std::popcount(wa[w] ^ wb[w]));
  }
  return d;
}

void ConfigTrace::push(const InclusionVector& v) {
  if (v.size() != bits_) throw DomainError("ConfigTrace: record width mismatch");
  const auto w = v.words();
  data_.insert(data_.end(), w.begin(), w.end());
  ++length_;
}

InclusionVector ConfigTrace::at(std::size_t t) const {
  return InclusionVector::from_words(
      bits_, std::span<const std::uint64_t>(data_.data() + t * stride_, stride_));
}

std::size_t ConfigTrace::popcount(std::size_t t) const {
  std::size_t c = 0;
  for (std::size_t w = 0; w < stride_; ++w) {
    c += static_cast<std::size_t>(std::popcount(data_[t * stride_ + w]));
  }
  return c;
}

}  // namespace sdmh
