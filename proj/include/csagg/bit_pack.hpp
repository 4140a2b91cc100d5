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

#include <cstdint>
#include <span>
#include <stdexcept>
#include <vector>

#include "csagg/field.hpp"

namespace csagg {

// Payload bits before byte padding: elements * ceil(log2 m).
inline std::uint64_t packed_bit_count(std::size_t count, Modulus modulus) {
  return static_cast<std::uint64_t>(count) *
         static_cast<std::uint64_t>(modulus.bits_per_element());
}

inline std::size_t packed_byte_count(std::size_t count, Modulus modulus) {
  return static_cast<std::size_t>((packed_bit_count(count, modulus) + 7) / 8);
}

// Packs each element into ceil(log2 m) bits, least significant bit first;
// the trailing byte is zero padded.
inline std::vector<std::uint8_t> pack_bits(const FieldVector& v) {
  const int width = v.modulus().bits_per_element();
  std::vector<std::uint8_t> bytes(packed_byte_count(v.size(), v.modulus()), 0);
  std::size_t cursor = 0;
  for (std::size_t i = 0; i < v.size(); ++i) {
    const std::uint64_t e = v[i];
    for (int b = 0; b < width; ++b, ++cursor) {
      if ((e >> b) & 1) bytes[cursor >> 3] |= std::uint8_t(1u << (cursor & 7));
    }
  }
  return bytes;
}

// Strict inverse of pack_bits: rejects wrong byte length, out-of-range
// elements, and nonzero padding bits.
inline FieldVector unpack_bits(std::span<const std::uint8_t> bytes,
                               std::size_t count, Modulus modulus) {
  if (bytes.size() != packed_byte_count(count, modulus))
    throw std::invalid_argument("packed payload has wrong byte length");
  const int width = modulus.bits_per_element();
  FieldVector out(modulus, count);
  std::size_t cursor = 0;
  for (std::size_t i = 0; i < count; ++i) {
    std::uint64_t e = 0;
    for (int b = 0; b < width; ++b, ++cursor) {
      if ((bytes[cursor >> 3] >> (cursor & 7)) & 1) e |= std::uint64_t{1} << b;
    }
    if (!modulus.contains(e))
      throw std::invalid_argument("packed element outside modulus range");
    out.set(i, e);
  }
  for (; cursor < bytes.size() * 8; ++cursor) {
    if ((bytes[cursor >> 3] >> (cursor & 7)) & 1)
      throw std::invalid_argument("nonzero padding in packed payload");
  }
  return out;
}

}  // namespace csagg
