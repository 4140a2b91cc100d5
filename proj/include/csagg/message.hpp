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

#include <compare>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "csagg/bit_pack.hpp"
#include "csagg/field.hpp"

namespace csagg {

struct ProtocolError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

enum class Role : std::uint8_t { kClient, kServer };

// Party address: client:1..C or server:1..S (indices are 1-based).
struct PartyId {
  Role role = Role::kClient;
  int index = 1;

  friend auto operator<=>(const PartyId&, const PartyId&) = default;

  std::string str() const {
    return (role == Role::kClient ? "client:" : "server:") + std::to_string(index);
  }
};

inline PartyId client(int index) { return {Role::kClient, index}; }
inline PartyId server(int index) { return {Role::kServer, index}; }

// Which sub-protocol a message belongs to, so one transcript can carry a
// whole aggregation round.
enum class ProtocolTag : std::uint8_t { kSecureSum, kUnion, kSigns, kFactors };

inline const char* tag_name(ProtocolTag tag) {
  switch (tag) {
    case ProtocolTag::kSecureSum: return "sum";
    case ProtocolTag::kUnion: return "union";
    case ProtocolTag::kSigns: return "signs";
    case ProtocolTag::kFactors: return "factors";
  }
  throw std::invalid_argument("unknown protocol tag");
}

// Bit-packed field vector plus the shape needed to unpack it. Only payload
// bits count toward communication; the shape fields are envelope metadata.
class Payload {
 public:
  static Payload pack(const FieldVector& v) {
    Payload p(v.modulus(), v.size());
    p.bytes_ = pack_bits(v);
    return p;
  }

  FieldVector unpack() const { return unpack_bits(bytes_, count_, modulus_); }

  const Modulus& modulus() const { return modulus_; }
  std::size_t count() const { return count_; }
  const std::vector<std::uint8_t>& bytes() const { return bytes_; }
  std::uint64_t bit_count() const { return packed_bit_count(count_, modulus_); }

  friend bool operator==(const Payload&, const Payload&) = default;

 private:
  Payload(Modulus m, std::size_t count) : modulus_(m), count_(count) {}

  Modulus modulus_;
  std::size_t count_;
  std::vector<std::uint8_t> bytes_;
};

struct Message {
  PartyId sender;
  PartyId receiver;
  ProtocolTag tag = ProtocolTag::kSecureSum;
  int round = 0;
  Payload payload;
};

}  // namespace csagg
