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
#include <memory>
#include <optional>
#include <set>
#include <utility>
#include <vector>

#include "csagg/field.hpp"
#include "csagg/message.hpp"
#include "csagg/random.hpp"
#include "csagg/transport.hpp"

namespace csagg {

// Additive-mask secure vector sum: each client splits its input into S
// shares (S - 1 uniform masks plus one remainder), sends one share per
// server, servers add what they received and broadcast, and every client
// adds the S broadcasts back together. Any coalition of at most S - 1
// servers sees only uniform noise; the reconstructed value is the exact
// modular sum.
struct SecureSumConfig {
  int clients = 0;
  int servers = 0;
  std::size_t length = 0;
  Modulus modulus;

  SecureSumConfig(int clients_, int servers_, std::size_t length_, Modulus m)
      : clients(clients_), servers(servers_), length(length_), modulus(m) {
    if (clients < 1) throw std::invalid_argument("need at least one client");
    if (servers < 2) throw std::invalid_argument("need at least two servers");
    if (length < 1) throw std::invalid_argument("need a nonempty vector");
  }
};

// Client share phase: one outbound message per server, message j carrying
// share j. Shares sum to the input mod m.
inline std::vector<Message> client_share_phase(PartyId self,
                                               const FieldVector& input,
                                               const SecureSumConfig& cfg,
                                               ProtocolTag tag, int round,
                                               RandomSource& rng) {
  if (input.size() != cfg.length || input.modulus() != cfg.modulus)
    throw std::invalid_argument("input does not match secure sum config");
  const std::vector<FieldVector> shares = make_shares(input, cfg.servers, rng);
  std::vector<Message> out;
  out.reserve(shares.size());
  for (int j = 0; j < cfg.servers; ++j)
    out.push_back({self, server(j + 1), tag, round, Payload::pack(shares[j])});
  return out;
}

// Server aggregate phase: requires exactly one share from every client,
// returns their elementwise sum, which the server then broadcasts.
inline FieldVector server_aggregate(const std::vector<Message>& received,
                                    const SecureSumConfig& cfg) {
  if (received.size() != static_cast<std::size_t>(cfg.clients))
    throw ProtocolError("aggregation aborted: expected one share per client");
  std::set<PartyId> seen;
  FieldVector sum(cfg.modulus, cfg.length);
  for (const Message& m : received) {
    if (m.sender.role != Role::kClient || !seen.insert(m.sender).second)
      throw ProtocolError("aggregation aborted: duplicate or non-client share");
    const FieldVector share = m.payload.unpack();
    if (share.size() != cfg.length || share.modulus() != cfg.modulus)
      throw ProtocolError("aggregation aborted: malformed share");
    sum.add_in_place(share);
  }
  return sum;
}

// Client reconstruct phase: adds the S server broadcasts back together.
inline FieldVector client_reconstruct(const std::vector<Message>& broadcasts,
                                      const SecureSumConfig& cfg) {
  if (broadcasts.size() != static_cast<std::size_t>(cfg.servers))
    throw ProtocolError("reconstruction aborted: expected one broadcast per server");
  std::set<PartyId> seen;
  FieldVector sum(cfg.modulus, cfg.length);
  for (const Message& m : broadcasts) {
    if (m.sender.role != Role::kServer || !seen.insert(m.sender).second)
      throw ProtocolError("reconstruction aborted: duplicate or non-server broadcast");
    const FieldVector part = m.payload.unpack();
    if (part.size() != cfg.length || part.modulus() != cfg.modulus)
      throw ProtocolError("reconstruction aborted: malformed broadcast");
    sum.add_in_place(part);
  }
  return sum;
}

// Runs one full secure sum over an existing fabric (so a larger round can
// collect several sub-protocols in one transcript). Returns the sum that
// every client reconstructed.
inline FieldVector run_secure_sum_on(Fabric& fabric,
                                     const std::vector<FieldVector>& inputs,
                                     const SecureSumConfig& cfg,
                                     ProtocolTag tag, int round,
                                     RandomSource& rng, int threads = 1) {
  if (inputs.size() != static_cast<std::size_t>(cfg.clients))
    throw std::invalid_argument("expected one input per client");

  std::vector<std::unique_ptr<RandomSource>> client_rngs;
  client_rngs.reserve(inputs.size());
  for (int i = 1; i <= cfg.clients; ++i)
    client_rngs.push_back(rng.fork(stream_salt(
        static_cast<std::uint64_t>(round), static_cast<std::uint64_t>(tag), 1, i)));

  std::vector<std::optional<FieldVector>> results(inputs.size());
  std::vector<Phase> phases(3);

  phases[0].name = "share";
  for (int i = 1; i <= cfg.clients; ++i) {
    phases[0].steps.push_back(
        {client(i), [&, i](std::vector<Message>) {
           return client_share_phase(client(i), inputs[i - 1], cfg, tag, round,
                                     *client_rngs[i - 1]);
         }});
  }

  phases[1].name = "aggregate";
  for (int j = 1; j <= cfg.servers; ++j) {
    phases[1].steps.push_back(
        {server(j), [&, j](std::vector<Message> inbox) {
           const FieldVector sum = server_aggregate(inbox, cfg);
           std::vector<Message> out;
           out.reserve(static_cast<std::size_t>(cfg.clients));
           for (int i = 1; i <= cfg.clients; ++i)
             out.push_back({server(j), client(i), tag, round, Payload::pack(sum)});
           return out;
         }});
  }

  phases[2].name = "reconstruct";
  for (int i = 1; i <= cfg.clients; ++i) {
    phases[2].steps.push_back(
        {client(i), [&, i](std::vector<Message> inbox) {
           results[i - 1] = client_reconstruct(inbox, cfg);
           return std::vector<Message>{};
         }});
  }

  run_protocol(fabric, phases, threads);

  for (const auto& r : results) {
    if (!r || *r != *results.front())
      throw ProtocolError("clients disagree on the reconstructed sum");
  }
  return *results.front();
}

struct SecureSumRun {
  FieldVector result;
  RoundTranscript transcript;
};

// Convenience one-shot runner with a fresh fabric.
inline SecureSumRun run_secure_sum(const std::vector<FieldVector>& inputs,
                                   const SecureSumConfig& cfg,
                                   RandomSource& rng, int threads = 1) {
  Fabric fabric(cfg.clients, cfg.servers);
  FieldVector result = run_secure_sum_on(fabric, inputs, cfg,
                                         ProtocolTag::kSecureSum, 0, rng, threads);
  return {std::move(result), std::move(fabric.transcript())};
}

}  // namespace csagg
