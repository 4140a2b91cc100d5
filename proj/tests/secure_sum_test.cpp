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

#include "csagg/secure_sum.hpp"

#include <cstdint>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "csagg/random.hpp"
#include "gtest/gtest.h"

namespace csagg {
namespace {

TEST(SecureSumTest, HandExample) {
  const Modulus m(7);
  const std::vector<FieldVector> inputs{FieldVector(m, {1, 2}),
                                        FieldVector(m, {3, 4}),
                                        FieldVector(m, {6, 5})};
  const SecureSumConfig cfg(3, 2, 2, m);
  DeterministicRng rng(61);
  const SecureSumRun run = run_secure_sum(inputs, cfg, rng);
  EXPECT_EQ(run.result.elems(), (std::vector<std::uint64_t>{3, 4}));
}

TEST(SecureSumTest, MessageAndBitCounts) {
  const Modulus m(17);  // 5 bits per element
  const int clients = 5, servers = 2;
  const std::size_t length = 3;
  std::vector<FieldVector> inputs;
  DeterministicRng rng(67);
  for (int i = 0; i < clients; ++i)
    inputs.push_back(sample_uniform(length, m, rng));
  const SecureSumConfig cfg(clients, servers, length, m);
  const SecureSumRun run = run_secure_sum(inputs, cfg, rng);
  // 2*S*C messages of n elements, ceil(log2 m) bits each.
  EXPECT_EQ(run.transcript.messages().size(), 2u * servers * clients);
  EXPECT_EQ(run.transcript.total_bits(), 2ull * servers * clients * length * 5);
}

TEST(SecureSumTest, ExactOnRandomInstances) {
  DeterministicRng rng(71);
  for (int trial = 0; trial < 60; ++trial) {
    const int clients = 1 + static_cast<int>(uniform_below(rng, 8));
    const int servers = 2 + static_cast<int>(uniform_below(rng, 3));
    const std::size_t length = 1 + uniform_below(rng, 32);
    const std::uint64_t mod = 2 + uniform_below(rng, (1ull << 32) - 2);
    const Modulus m(mod);
    std::vector<FieldVector> inputs;
    FieldVector expected(m, length);
    for (int i = 0; i < clients; ++i) {
      inputs.push_back(sample_uniform(length, m, rng));
      expected.add_in_place(inputs.back());
    }
    const SecureSumConfig cfg(clients, servers, length, m);
    const SecureSumRun run = run_secure_sum(inputs, cfg, rng);
    EXPECT_EQ(run.result.elems(), expected.elems());
  }
}

TEST(SecureSumTest, ExactAtFullWordModulus) {
  const Modulus m = Modulus::pow2(64);
  DeterministicRng rng(73);
  std::vector<FieldVector> inputs;
  FieldVector expected(m, 4);
  for (int i = 0; i < 3; ++i) {
    inputs.push_back(sample_uniform(4, m, rng));
    expected.add_in_place(inputs.back());
  }
  const SecureSumConfig cfg(3, 2, 4, m);
  const SecureSumRun run = run_secure_sum(inputs, cfg, rng);
  EXPECT_EQ(run.result.elems(), expected.elems());
}

TEST(SecureSumTest, DeterministicAcrossThreadCounts) {
  const Modulus m(101);
  std::vector<std::string> logs;
  std::vector<std::vector<std::uint64_t>> sums;
  for (int threads : {1, 3, 16}) {
    DeterministicRng rng(79);
    std::vector<FieldVector> inputs;
    for (int i = 0; i < 6; ++i) inputs.push_back(sample_uniform(8, m, rng));
    const SecureSumConfig cfg(6, 3, 8, m);
    const SecureSumRun run = run_secure_sum(inputs, cfg, rng, threads);
    std::ostringstream os;
    run.transcript.write_log(os);
    logs.push_back(os.str());
    sums.push_back(run.result.elems());
  }
  EXPECT_EQ(logs[0], logs[1]);
  EXPECT_EQ(logs[0], logs[2]);
  EXPECT_EQ(sums[0], sums[1]);
  EXPECT_EQ(sums[0], sums[2]);
}

TEST(SecureSumTest, ConfigValidation) {
  const Modulus m(7);
  EXPECT_THROW(SecureSumConfig(0, 2, 1, m), std::invalid_argument);
  EXPECT_THROW(SecureSumConfig(1, 1, 1, m), std::invalid_argument);
  EXPECT_THROW(SecureSumConfig(1, 2, 0, m), std::invalid_argument);
}

TEST(SecureSumTest, InputCountMismatchThrows) {
  const Modulus m(7);
  const std::vector<FieldVector> inputs{FieldVector(m, {1})};
  const SecureSumConfig cfg(2, 2, 1, m);
  DeterministicRng rng(83);
  EXPECT_THROW(run_secure_sum(inputs, cfg, rng), std::invalid_argument);
}

TEST(SecureSumTest, WrongShapeInputThrows) {
  const Modulus m(7);
  const std::vector<FieldVector> inputs{FieldVector(m, {1, 2}),
                                        FieldVector(m, {1, 2})};
  const SecureSumConfig cfg(2, 2, 3, m);
  DeterministicRng rng(89);
  EXPECT_THROW(run_secure_sum(inputs, cfg, rng), std::invalid_argument);
}

TEST(ServerAggregateTest, AbortsOnDuplicateSender) {
  const Modulus m(7);
  const SecureSumConfig cfg(2, 2, 1, m);
  const Payload p = Payload::pack(FieldVector(m, {3}));
  const std::vector<Message> received{
      {client(1), server(1), ProtocolTag::kSecureSum, 0, p},
      {client(1), server(1), ProtocolTag::kSecureSum, 0, p}};
  EXPECT_THROW(server_aggregate(received, cfg), ProtocolError);
}

TEST(ServerAggregateTest, AbortsOnMissingShare) {
  const Modulus m(7);
  const SecureSumConfig cfg(3, 2, 1, m);
  const Payload p = Payload::pack(FieldVector(m, {3}));
  const std::vector<Message> received{
      {client(1), server(1), ProtocolTag::kSecureSum, 0, p},
      {client(2), server(1), ProtocolTag::kSecureSum, 0, p}};
  EXPECT_THROW(server_aggregate(received, cfg), ProtocolError);
}

TEST(ServerAggregateTest, AbortsOnWrongLengthShare) {
  const Modulus m(7);
  const SecureSumConfig cfg(1, 2, 2, m);
  const Payload p = Payload::pack(FieldVector(m, {3}));
  const std::vector<Message> received{
      {client(1), server(1), ProtocolTag::kSecureSum, 0, p}};
  EXPECT_THROW(server_aggregate(received, cfg), ProtocolError);
}

TEST(ClientReconstructTest, AbortsOnNonServerBroadcast) {
  const Modulus m(7);
  const SecureSumConfig cfg(1, 2, 1, m);
  const Payload p = Payload::pack(FieldVector(m, {3}));
  const std::vector<Message> received{
      {server(1), client(1), ProtocolTag::kSecureSum, 0, p},
      {client(1), client(1), ProtocolTag::kSecureSum, 0, p}};
  EXPECT_THROW(client_reconstruct(received, cfg), ProtocolError);
}

TEST(ClientSharePhaseTest, OneMessagePerServer) {
  const Modulus m(7);
  const SecureSumConfig cfg(1, 4, 2, m);
  DeterministicRng rng(97);
  const FieldVector input(m, {5, 6});
  const std::vector<Message> out =
      client_share_phase(client(1), input, cfg, ProtocolTag::kSecureSum, 0, rng);
  ASSERT_EQ(out.size(), 4u);
  FieldVector sum(m, 2);
  for (int j = 0; j < 4; ++j) {
    EXPECT_EQ(out[j].receiver, server(j + 1));
    sum.add_in_place(out[j].payload.unpack());
  }
  EXPECT_EQ(sum.elems(), input.elems());
}

}  // namespace
}  // namespace csagg
