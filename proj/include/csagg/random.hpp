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
#include <memory>
#include <random>
#include <stdexcept>

namespace csagg {

// Source of raw 64-bit randomness. fork() derives an independent stream so
// that concurrent parties can draw without sharing mutable state.
class RandomSource {
 public:
  virtual ~RandomSource() = default;
  virtual std::uint64_t next_u64() = 0;
  virtual std::unique_ptr<RandomSource> fork(std::uint64_t salt) = 0;
};

// SplitMix64 counter generator. A fork's seed depends only on the parent's
// seed and the salt, never on how many values the parent has produced, so
// streams are reproducible regardless of scheduling.
class DeterministicRng final : public RandomSource {
 public:
  explicit DeterministicRng(std::uint64_t seed) : seed_(seed), state_(seed) {}

  std::uint64_t next_u64() override {
    state_ += 0x9e3779b97f4a7c15ull;
    return mix(state_);
  }

  std::unique_ptr<RandomSource> fork(std::uint64_t salt) override {
    return std::make_unique<DeterministicRng>(
        mix(seed_ + 0x9e3779b97f4a7c15ull * (salt + 1)));
  }

 private:
  static std::uint64_t mix(std::uint64_t z) {
    z ^= z >> 30;
    z *= 0xbf58476d1ce4e5b9ull;
    z ^= z >> 27;
    z *= 0x94d049bb133111ebull;
    z ^= z >> 31;
    return z;
  }

  std::uint64_t seed_;
  std::uint64_t state_;
};

// Non-reproducible generator backed by std::random_device, for runs where
// fresh entropy matters more than replayability.
class SystemRng final : public RandomSource {
 public:
  std::uint64_t next_u64() override {
    return (static_cast<std::uint64_t>(dev_()) << 32) ^ dev_();
  }

  std::unique_ptr<RandomSource> fork(std::uint64_t) override {
    return std::make_unique<SystemRng>();
  }

 private:
  std::random_device dev_;
};

// Combines stream labels (round, protocol, party, ...) into a fork salt.
inline std::uint64_t stream_salt(std::uint64_t a, std::uint64_t b = 0,
                                 std::uint64_t c = 0, std::uint64_t d = 0) {
  std::uint64_t h = 0x100000001b3ull;
  for (std::uint64_t part : {a, b, c, d}) {
    h ^= part + 0x9e3779b97f4a7c15ull + (h << 6) + (h >> 2);
    h *= 0x100000001b3ull;
  }
  return h;
}

// Uniform draw from [0, n) by masked rejection. n = 0 selects the full
// 2^64 range.
inline std::uint64_t uniform_below(RandomSource& rng, std::uint64_t n) {
  if (n == 0) return rng.next_u64();
  if (n == 1) return 0;
  const int bits = std::bit_width(n - 1);
  const std::uint64_t mask =
      (bits >= 64) ? ~0ull : ((std::uint64_t{1} << bits) - 1);
  for (;;) {
    const std::uint64_t draw = rng.next_u64() & mask;
    if (draw < n) return draw;
  }
}

}  // namespace csagg
