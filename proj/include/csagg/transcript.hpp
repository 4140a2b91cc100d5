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
#include <map>
#include <ostream>
#include <span>
#include <vector>

#include "csagg/message.hpp"

namespace csagg {

// Bits sent per (sender, receiver) link and per protocol tag. Payload bits
// only; envelope metadata is excluded.
struct CostLedger {
  std::map<std::pair<PartyId, PartyId>, std::uint64_t> link_bits;
  std::map<ProtocolTag, std::uint64_t> tag_bits;
  std::uint64_t total_bits = 0;

  void add(const Message& m) {
    const std::uint64_t bits = m.payload.bit_count();
    link_bits[{m.sender, m.receiver}] += bits;
    tag_bits[m.tag] += bits;
    total_bits += bits;
  }
};

// Append-only ordered record of every message in one or more protocol runs.
class RoundTranscript {
 public:
  void append(Message m) {
    ledger_.add(m);
    messages_.push_back(std::move(m));
  }

  const std::vector<Message>& messages() const { return messages_; }
  const CostLedger& ledger() const { return ledger_; }
  std::uint64_t total_bits() const { return ledger_.total_bits; }

  std::uint64_t bits_for_tag(ProtocolTag tag) const {
    const auto it = ledger_.tag_bits.find(tag);
    return it == ledger_.tag_bits.end() ? 0 : it->second;
  }

  // One line per message: sender receiver tag bits hex-payload.
  void write_log(std::ostream& os) const {
    static constexpr char kHex[] = "0123456789abcdef";
    for (const Message& m : messages_) {
      os << m.sender.str() << ' ' << m.receiver.str() << ' ' << tag_name(m.tag)
         << ' ' << m.payload.bit_count() << ' ';
      for (std::uint8_t b : m.payload.bytes())
        os << kHex[b >> 4] << kHex[b & 0xf];
      os << '\n';
    }
  }

 private:
  std::vector<Message> messages_;
  CostLedger ledger_;
};

// Messages observed by a coalition: everything it sent or received.
inline std::vector<Message> adversary_view(const RoundTranscript& transcript,
                                           std::span<const PartyId> corrupted) {
  std::vector<Message> view;
  for (const Message& m : transcript.messages()) {
    for (const PartyId& p : corrupted) {
      if (m.sender == p || m.receiver == p) {
        view.push_back(m);
        break;
      }
    }
  }
  return view;
}

}  // namespace csagg
