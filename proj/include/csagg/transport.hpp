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

#include <algorithm>
#include <atomic>
#include <cstddef>
#include <exception>
#include <functional>
#include <map>
#include <mutex>
#include <set>
#include <span>
#include <string>
#include <thread>
#include <utility>
#include <vector>

#include "csagg/message.hpp"
#include "csagg/transcript.hpp"

namespace csagg {

// In-process message fabric. Messages sent during a phase are held back and
// delivered only once the phase closes, which models the synchronous rounds
// the protocols assume: every share arrives before any server aggregates.
class Fabric {
 public:
  Fabric(int clients, int servers) {
    if (clients < 1 || servers < 1)
      throw std::invalid_argument("fabric needs at least one client and server");
    for (int i = 1; i <= clients; ++i) inboxes_[client(i)];
    for (int j = 1; j <= servers; ++j) inboxes_[server(j)];
  }

  bool knows(const PartyId& p) const { return inboxes_.contains(p); }

  // Valid only inside an open phase, from a sender the phase registered.
  void send(Message m) {
    if (!phase_open_) throw ProtocolError("send outside of any phase");
    if (!allowed_senders_.contains(m.sender))
      throw ProtocolError("phase violation: " + m.sender.str() + " may not send now");
    if (!knows(m.receiver))
      throw ProtocolError("undeliverable message to " + m.receiver.str());
    transcript_.append(m);
    pending_.push_back(std::move(m));
  }

  // Matured messages for one party, in delivery order; removes them.
  std::vector<Message> collect(const PartyId& receiver) {
    const auto it = inboxes_.find(receiver);
    if (it == inboxes_.end())
      throw ProtocolError("unknown party " + receiver.str());
    std::vector<Message> out = std::move(it->second);
    it->second.clear();
    return out;
  }

  void open_phase(const std::vector<PartyId>& senders) {
    if (phase_open_) throw ProtocolError("phase already open");
    for (const PartyId& p : senders) {
      if (!knows(p)) throw ProtocolError("unknown sender " + p.str());
    }
    allowed_senders_ = {senders.begin(), senders.end()};
    phase_open_ = true;
  }

  // Closing a phase matures everything sent during it.
  void close_phase() {
    if (!phase_open_) throw ProtocolError("no phase to close");
    for (Message& m : pending_)
      inboxes_[m.receiver].push_back(std::move(m));
    pending_.clear();
    allowed_senders_.clear();
    phase_open_ = false;
  }

  RoundTranscript& transcript() { return transcript_; }
  const RoundTranscript& transcript() const { return transcript_; }

 private:
  std::map<PartyId, std::vector<Message>> inboxes_;
  std::vector<Message> pending_;
  std::set<PartyId> allowed_senders_;
  bool phase_open_ = false;
  RoundTranscript transcript_;
};

// One party's action within a phase: consume the inbox, emit messages.
struct PhaseStep {
  PartyId party;
  std::function<std::vector<Message>(std::vector<Message>)> act;
};

struct Phase {
  std::string name;
  std::vector<PhaseStep> steps;
};

// Runs phases in order. Within a phase, steps may execute on several
// threads; inboxes are collected before any step runs and outgoing messages
// are handed to the fabric in fixed step order afterwards, so transcripts
// are identical for every thread count.
inline void run_protocol(Fabric& fabric, std::span<const Phase> phases,
                         int threads = 1) {
  for (const Phase& phase : phases) {
    const std::size_t n = phase.steps.size();
    std::vector<std::vector<Message>> inboxes(n);
    std::vector<std::vector<Message>> outputs(n);
    for (std::size_t i = 0; i < n; ++i)
      inboxes[i] = fabric.collect(phase.steps[i].party);

    const int workers = std::max(1, std::min<int>(threads, static_cast<int>(n)));
    if (workers == 1) {
      for (std::size_t i = 0; i < n; ++i)
        outputs[i] = phase.steps[i].act(std::move(inboxes[i]));
    } else {
      std::atomic<std::size_t> next{0};
      std::atomic<bool> failed{false};
      std::exception_ptr error;
      std::mutex error_mutex;
      std::vector<std::thread> pool;
      pool.reserve(static_cast<std::size_t>(workers));
      for (int w = 0; w < workers; ++w) {
        pool.emplace_back([&] {
          for (;;) {
            const std::size_t i = next.fetch_add(1);
            if (i >= n || failed.load()) return;
            try {
              outputs[i] = phase.steps[i].act(std::move(inboxes[i]));
            } catch (...) {
              std::scoped_lock lock(error_mutex);
              if (!error) error = std::current_exception();
              failed.store(true);
              return;
            }
          }
        });
      }
      for (std::thread& t : pool) t.join();
      if (error) std::rethrow_exception(error);
    }

    std::vector<PartyId> senders;
    senders.reserve(n);
    for (const PhaseStep& s : phase.steps) senders.push_back(s.party);
    fabric.open_phase(senders);
    for (std::size_t i = 0; i < n; ++i) {
      for (Message& m : outputs[i]) {
        if (m.sender != phase.steps[i].party)
          throw ProtocolError("message sender does not match acting party");
        fabric.send(std::move(m));
      }
    }
    fabric.close_phase();
  }
}

}  // namespace csagg
