// Copyright 2026 The csagg Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <bit>
#include <cstdint>
#include <stdexcept>
#include <utility>
#include <vector>

#include "csagg/random.hpp"

namespace csagg {

// Ring modulus m with 2 <= m <= 2^64. The stored value 0 encodes 2^64 so
// full-machine-word rings work through the same interface.
class Modulus {
 public:
  explicit Modulus(std::uint64_t value) : value_(value) {
    if (value < 2) throw std::invalid_argument("modulus must be at least 2");
  }

  static Modulus pow2(int bits) {
    if (bits < 1 || bits > 64)
      throw std::invalid_argument("power-of-two modulus needs 1 <= bits <= 64");
    Modulus m(2);
    m.value_ = (bits == 64) ? 0 : (std::uint64_t{1} << bits);
    return m;
  }

  // Raw value; 0 means 2^64.
  std::uint64_t value() const { return value_; }
  bool is_full_word() const { return value_ == 0; }

  // Bits needed per element when packing: ceil(log2 m).
  int bits_per_element() const {
    return is_full_word() ? 64 : std::bit_width(value_ - 1);
  }

  bool contains(std::uint64_t x) const { return is_full_word() || x < value_; }

  // a, b must already lie in [0, m). Overflow-free.
  std::uint64_t add(std::uint64_t a, std::uint64_t b) const {
    if (is_full_word()) return a + b;
    return (a >= value_ - b) ? a - (value_ - b) : a + b;
  }

  std::uint64_t sub(std::uint64_t a, std::uint64_t b) const {
    if (is_full_word()) return a - b;
    return (a >= b) ? a - b : value_ - (b - a);
  }

  std::uint64_t neg(std::uint64_t a) const {
    if (is_full_word()) return ~a + 1;
    return a == 0 ? 0 : value_ - a;
  }

  std::uint64_t reduce(std::uint64_t x) const {
    return is_full_word() ? x : x % value_;
  }

  friend bool operator==(const Modulus&, const Modulus&) = default;

 private:
  std::uint64_t value_;
};

// Vector over Z_m. Elements are always kept reduced.
class FieldVector {
 public:
  FieldVector(Modulus modulus, std::size_t size)
      : modulus_(modulus), elems_(size, 0) {}

  FieldVector(Modulus modulus, std::vector<std::uint64_t> elems)
      : modulus_(modulus), elems_(std::move(elems)) {
    for (std::uint64_t e : elems_) {
      if (!modulus_.contains(e))
        throw std::invalid_argument("element outside modulus range");
    }
  }

  const Modulus& modulus() const { return modulus_; }
  std::size_t size() const { return elems_.size(); }
  std::uint64_t operator[](std::size_t i) const { return elems_[i]; }
  const std::vector<std::uint64_t>& elems() const { return elems_; }

  void set(std::size_t i, std::uint64_t value) {
    if (!modulus_.contains(value))
      throw std::invalid_argument("element outside modulus range");
    elems_[i] = value;
  }

  void add_in_place(const FieldVector& other) {
    require_same_shape(other);
    for (std::size_t i = 0; i < elems_.size(); ++i)
      elems_[i] = modulus_.add(elems_[i], other.elems_[i]);
  }

  void sub_in_place(const FieldVector& other) {
    require_same_shape(other);
    for (std::size_t i = 0; i < elems_.size(); ++i)
      elems_[i] = modulus_.sub(elems_[i], other.elems_[i]);
  }

  friend bool operator==(const FieldVector&, const FieldVector&) = default;

 private:
  void require_same_shape(const FieldVector& other) const {
    if (modulus_ != other.modulus_ || elems_.size() != other.elems_.size())
      throw std::invalid_argument("field vector shape mismatch");
  }

  Modulus modulus_;
  std::vector<std::uint64_t> elems_;
};

inline FieldVector vec_add(const FieldVector& a, const FieldVector& b) {
  FieldVector out = a;
  out.add_in_place(b);
  return out;
}

inline FieldVector vec_sub(const FieldVector& a, const FieldVector& b) {
  FieldVector out = a;
  out.sub_in_place(b);
  return out;
}

inline FieldVector sample_uniform(std::size_t size, Modulus modulus,
                                  RandomSource& rng) {
  FieldVector out(modulus, size);
  for (std::size_t i = 0; i < size; ++i)
    out.set(i, uniform_below(rng, modulus.value()));
  return out;
}

// Additive shares: share_count - 1 uniform vectors plus one arranged so that
// all shares sum to x mod m. Any proper subset of shares is uniform.
inline std::vector<FieldVector> make_shares(const FieldVector& x,
                                            int share_count,
                                            RandomSource& rng) {
  if (share_count < 2)
    throw std::invalid_argument("make_shares needs at least 2 shares");
  std::vector<FieldVector> shares;
  shares.reserve(static_cast<std::size_t>(share_count));
  FieldVector last = x;
  for (int j = 0; j + 1 < share_count; ++j) {
    shares.push_back(sample_uniform(x.size(), x.modulus(), rng));
    last.sub_in_place(shares.back());
  }
  shares.push_back(std::move(last));
  return shares;
}

}  // namespace csagg
