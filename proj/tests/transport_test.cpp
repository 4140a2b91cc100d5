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

#include "csagg/transport.hpp"

#include <sstream>
#include <stdexcept>
#include <vector>

#include "csagg/field.hpp"
#include "csagg/message.hpp"
#include "csagg/transcript.hpp"
#include "gtest/gtest.h"

namespace csagg {
namespace {

Message make_message(PartyId from, PartyId to,
                     std::vector<std::uint64_t> elems = {1, 2, 3}) {
  const Modulus m(7);
  return {from, to, ProtocolTag::kSecureSum, 0,
          Payload::pack(FieldVector(m, std::move(elems)))};
}

TEST(FabricTest, KnowsRegisteredParties) {
  const Fabric fabric(2, 3);
  EXPECT_TRUE(fabric.knows(client(1)));
  EXPECT_TRUE(fabric.knows(client(2)));
  EXPECT_TRUE(fabric.knows(server(3)));
  EXPECT_FALSE(fabric.knows(client(3)));
  EXPECT_FALSE(fabric.knows(server(4)));
}

TEST(FabricTest, SendOutsidePhaseThrows) {
  Fabric fabric(2, 2);
  EXPECT_THROW(fabric.send(make_message(client(1), server(1))), ProtocolError);
}

TEST(FabricTest, SendFromUnregisteredSenderThrows) {
  Fabric fabric(2, 2);
  fabric.open_phase({client(1)});
  EXPECT_THROW(fabric.send(make_message(client(2), server(1))), ProtocolError);
  fabric.close_phase();
}

TEST(FabricTest, SendToUnknownReceiverThrows) {
  Fabric fabric(2, 2);
  fabric.open_phase({client(1)});
  EXPECT_THROW(fabric.send(make_message(client(1), server(5))), ProtocolError);
  fabric.close_phase();
}

TEST(FabricTest, MessagesMatureOnlyAtPhaseClose) {
  Fabric fabric(1, 1);
  fabric.open_phase({client(1)});
  fabric.send(make_message(client(1), server(1)));
  EXPECT_TRUE(fabric.collect(server(1)).empty());
  fabric.close_phase();
  const std::vector<Message> got = fabric.collect(server(1));
  ASSERT_EQ(got.size(), 1u);
  EXPECT_EQ(got[0].sender, client(1));
  EXPECT_TRUE(fabric.collect(server(1)).empty());
}

TEST(FabricTest, DoubleOpenAndCloseRejected) {
  Fabric fabric(1, 1);
  fabric.open_phase({client(1)});
  EXPECT_THROW(fabric.open_phase({client(1)}), ProtocolError);
  fabric.close_phase();
  EXPECT_THROW(fabric.close_phase(), ProtocolError);
}

TEST(FabricTest, TranscriptRecordsPayloadBits) {
  Fabric fabric(1, 1);
  fabric.open_phase({client(1)});
  fabric.send(make_message(client(1), server(1), {1, 2, 3}));  // 3 elems mod 7
  fabric.close_phase();
  EXPECT_EQ(fabric.transcript().total_bits(), 9u);
  EXPECT_EQ(fabric.transcript().messages().size(), 1u);
}

std::vector<Phase> echo_phases(int clients) {
  // Phase 1: each client messages server 1. Phase 2: server echoes back.
  std::vector<Phase> phases(2);
  phases[0].name = "up";
  for (int i = 1; i <= clients; ++i)
    phases[0].steps.push_back({client(i), [i](std::vector<Message>) {
                                 return std::vector<Message>{make_message(
                                     client(i), server(1), {std::uint64_t(i % 7)})};
                               }});
  phases[1].name = "down";
  phases[1].steps.push_back({server(1), [](std::vector<Message> inbox) {
                               std::vector<Message> out;
                               for (const Message& m : inbox)
                                 out.push_back(make_message(
                                     server(1), m.sender,
                                     {m.payload.unpack()[0]}));
                               return out;
                             }});
  return phases;
}

TEST(RunProtocolTest, DeliversAcrossPhases) {
  Fabric fabric(3, 1);
  run_protocol(fabric, echo_phases(3));
  for (int i = 1; i <= 3; ++i) {
    const std::vector<Message> got = fabric.collect(client(i));
    ASSERT_EQ(got.size(), 1u);
    EXPECT_EQ(got[0].payload.unpack()[0], static_cast<std::uint64_t>(i % 7));
  }
}

TEST(RunProtocolTest, TranscriptIdenticalAcrossThreadCounts) {
  std::vector<std::string> logs;
  for (int threads : {1, 2, 8}) {
    Fabric fabric(5, 1);
    run_protocol(fabric, echo_phases(5), threads);
    std::ostringstream os;
    fabric.transcript().write_log(os);
    logs.push_back(os.str());
  }
  EXPECT_EQ(logs[0], logs[1]);
  EXPECT_EQ(logs[0], logs[2]);
  EXPECT_FALSE(logs[0].empty());
}

TEST(RunProtocolTest, ForeignSenderRejected) {
  Fabric fabric(2, 1);
  std::vector<Phase> phases(1);
  phases[0].steps.push_back({client(1), [](std::vector<Message>) {
                               return std::vector<Message>{
                                   make_message(client(2), server(1))};
                             }});
  EXPECT_THROW(run_protocol(fabric, phases), ProtocolError);
}

TEST(RunProtocolTest, StepExceptionPropagates) {
  for (int threads : {1, 4}) {
    Fabric fabric(2, 1);
    std::vector<Phase> phases(1);
    for (int i = 1; i <= 2; ++i)
      phases[0].steps.push_back(
          {client(i), [i](std::vector<Message>) -> std::vector<Message> {
             if (i == 2) throw ProtocolError("boom");
             return {};
           }});
    EXPECT_THROW(run_protocol(fabric, phases, threads), ProtocolError);
  }
}

TEST(AdversaryViewTest, FiltersBySenderOrReceiver) {
  Fabric fabric(3, 1);
  run_protocol(fabric, echo_phases(3));
  const std::vector<PartyId> corrupted{client(2)};
  const std::vector<Message> view =
      adversary_view(fabric.transcript(), corrupted);
  ASSERT_EQ(view.size(), 2u);
  EXPECT_EQ(view[0].sender, client(2));
  EXPECT_EQ(view[1].receiver, client(2));
  const std::vector<PartyId> all{server(1)};
  EXPECT_EQ(adversary_view(fabric.transcript(), all).size(), 6u);
}

TEST(PartyIdTest, OrderingAndNames) {
  EXPECT_LT(client(1), client(2));
  EXPECT_LT(client(9), server(1));
  EXPECT_EQ(client(3).str(), "client:3");
  EXPECT_EQ(server(2).str(), "server:2");
}

TEST(PayloadTest, BitCountAndRoundTrip) {
  const Modulus m(11);
  const FieldVector v(m, {7, 0, 10});
  const Payload p = Payload::pack(v);
  EXPECT_EQ(p.bit_count(), 12u);
  EXPECT_EQ(p.unpack(), v);
}

}  // namespace
}  // namespace csagg
