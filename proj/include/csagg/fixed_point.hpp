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

#include <cmath>
#include <cstdint>
#include <stdexcept>

#include "csagg/field.hpp"

namespace csagg {

// Unsigned fixed point: a nonnegative real x maps to floor(2^a * x) mod 2^l
// with a fractional bits inside an l-bit word.
struct FixedPointParams {
  int frac_bits = 16;
  int word_bits = 32;
};

inline void validate(const FixedPointParams& fp) {
  if (fp.frac_bits < 1 || fp.word_bits > 64 || fp.frac_bits >= fp.word_bits)
    throw std::invalid_argument("fixed point needs 1 <= frac_bits < word_bits <= 64");
}

inline Modulus fp_modulus(const FixedPointParams& fp) {
  validate(fp);
  return Modulus::pow2(fp.word_bits);
}

// floor(2^a * x) mod 2^l. Wraps by construction; callers that must not wrap
// enforce their own bound before encoding.
inline std::uint64_t fp_encode(double x, const FixedPointParams& fp) {
  validate(fp);
  if (!std::isfinite(x) || x < 0)
    throw std::invalid_argument("fixed point encodes finite nonnegative reals");
  const long double scaled = std::floor(std::ldexp(static_cast<long double>(x), fp.frac_bits));
  const long double word = std::ldexp(1.0L, fp.word_bits);
  long double wrapped = std::fmod(scaled, word);
  if (wrapped < 0) wrapped += word;
  return static_cast<std::uint64_t>(wrapped);
}

inline double fp_decode(std::uint64_t v, const FixedPointParams& fp) {
  validate(fp);
  if (!fp_modulus(fp).contains(v))
    throw std::invalid_argument("encoded value outside fixed point word");
  return std::ldexp(static_cast<double>(v), -fp.frac_bits);
}

}  // namespace csagg
