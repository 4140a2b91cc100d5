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
#include <cmath>
#include <cstdint>
#include <optional>
#include <span>
#include <stdexcept>
#include <utility>
#include <vector>

#include "csagg/coder.hpp"
#include "csagg/fixed_point.hpp"
#include "csagg/secure_sum.hpp"
#include "csagg/transport.hpp"

namespace csagg {

// How clients jointly learn the union of their update supports before
// summing signs over it.
//   kPartialSecure: counts in Z_{C+1}; exact union, reveals per-index counts
//                   to clients (not servers).
//   kSecure:        random nonzero masks in Z_{2^q}; may lose indices held
//                   by 2+ clients whose masks cancel, never invents any.
//   kPlaintext:     raw index sets go to server 1, which ORs and broadcasts.
//   kNoUnion:       no union exchange; signs are summed over every index.
enum class UnionStrategy { kNoUnion, kSecure, kPartialSecure, kPlaintext };

struct AggConfig {
  int clients = 0;
  int servers = 2;
  UnionStrategy strategy = UnionStrategy::kPartialSecure;
  int q = 1;                    // mask bits for UnionStrategy::kSecure
  FixedPointParams fp{16, 32};  // factor-sum encoding
  int threads = 1;
};

inline void validate(const AggConfig& cfg) {
  if (cfg.clients < 1) throw std::invalid_argument("need at least one client");
  if (cfg.servers < 2) throw std::invalid_argument("need at least two servers");
  if (cfg.strategy == UnionStrategy::kSecure && (cfg.q < 1 || cfg.q > 63))
    throw std::invalid_argument("mask width q must lie in [1, 63]");
  validate(cfg.fp);
}

namespace detail {

inline void require_valid_supports(
    std::span<const std::vector<std::uint32_t>> supports, std::size_t dim) {
  for (const auto& s : supports) {
    for (std::size_t i = 0; i < s.size(); ++i) {
      if (s[i] >= dim) throw std::invalid_argument("support index out of range");
      if (i > 0 && s[i] <= s[i - 1])
        throw std::invalid_argument("support must be strictly increasing");
    }
  }
}

inline std::vector<std::uint32_t> nonzero_indices(const FieldVector& v) {
  std::vector<std::uint32_t> out;
  for (std::size_t i = 0; i < v.size(); ++i)
    if (v[i] != 0) out.push_back(static_cast<std::uint32_t>(i));
  return out;
}

}  // namespace detail

struct PartialUnionResult {
  std::vector<std::uint32_t> support;  // the union, sorted
  std::vector<std::uint64_t> counts;   // dense per-index holder counts
};

// Exact union via per-index holder counts summed in Z_{C+1}; counts never
// wrap because at most C clients hold an index.
inline PartialUnionResult partial_secure_union_on(
    Fabric& fabric, std::span<const std::vector<std::uint32_t>> supports,
    std::size_t dim, const AggConfig& cfg, int round, RandomSource& rng) {
  validate(cfg);
  if (supports.size() != static_cast<std::size_t>(cfg.clients))
    throw std::invalid_argument("expected one support per client");
  detail::require_valid_supports(supports, dim);

  const Modulus m(static_cast<std::uint64_t>(cfg.clients) + 1);
  std::vector<FieldVector> indicators;
  indicators.reserve(supports.size());
  for (const auto& s : supports) {
    FieldVector b(m, dim);
    for (std::uint32_t idx : s) b.set(idx, 1);
    indicators.push_back(std::move(b));
  }
  const SecureSumConfig sum_cfg(cfg.clients, cfg.servers, dim, m);
  const FieldVector counts = run_secure_sum_on(
      fabric, indicators, sum_cfg, ProtocolTag::kUnion, round, rng, cfg.threads);

  PartialUnionResult out;
  out.support = detail::nonzero_indices(counts);
  out.counts = counts.elems();
  return out;
}

// Probabilistic union: each client masks its held indices with random
// nonzero values mod 2^q. Indices held by one client always survive; an
// index held by several clients is lost exactly when their masks cancel.
inline std::vector<std::uint32_t> secure_union_on(
    Fabric& fabric, std::span<const std::vector<std::uint32_t>> supports,
    std::size_t dim, const AggConfig& cfg, int round, RandomSource& rng) {
  validate(cfg);
  if (supports.size() != static_cast<std::size_t>(cfg.clients))
    throw std::invalid_argument("expected one support per client");
  detail::require_valid_supports(supports, dim);

  const Modulus m = Modulus::pow2(cfg.q);
  const std::uint64_t nonzero_range = (std::uint64_t{1} << cfg.q) - 1;
  std::vector<FieldVector> masked;
  masked.reserve(supports.size());
  for (std::size_t i = 0; i < supports.size(); ++i) {
    const auto mask_rng = rng.fork(stream_salt(
        static_cast<std::uint64_t>(round), 5, 1, static_cast<std::uint64_t>(i + 1)));
    FieldVector a(m, dim);
    for (std::uint32_t idx : supports[i])
      a.set(idx, 1 + uniform_below(*mask_rng, nonzero_range));
    masked.push_back(std::move(a));
  }
  const SecureSumConfig sum_cfg(cfg.clients, cfg.servers, dim, m);
  const FieldVector summed = run_secure_sum_on(
      fabric, masked, sum_cfg, ProtocolTag::kUnion, round, rng, cfg.threads);
  return detail::nonzero_indices(summed);
}

// Exact union with no masking: clients send raw index bitmaps to server 1,
// which ORs them and broadcasts the result. Cheapest, but server 1 learns
// who holds what.
inline std::vector<std::uint32_t> plaintext_union_on(
    Fabric& fabric, std::span<const std::vector<std::uint32_t>> supports,
    std::size_t dim, const AggConfig& cfg, int round) {
  validate(cfg);
  if (supports.size() != static_cast<std::size_t>(cfg.clients))
    throw std::invalid_argument("expected one support per client");
  detail::require_valid_supports(supports, dim);

  const Modulus m(2);
  std::vector<std::optional<FieldVector>> received(supports.size());
  std::vector<Phase> phases(3);

  phases[0].name = "bitmaps";
  for (int i = 1; i <= cfg.clients; ++i) {
    phases[0].steps.push_back({client(i), [&, i](std::vector<Message>) {
      FieldVector b(m, dim);
      for (std::uint32_t idx : supports[i - 1]) b.set(idx, 1);
      return std::vector<Message>{
          {client(i), server(1), ProtocolTag::kUnion, round, Payload::pack(b)}};
    }});
  }

  phases[1].name = "merge";
  phases[1].steps.push_back({server(1), [&](std::vector<Message> inbox) {
    if (inbox.size() != static_cast<std::size_t>(cfg.clients))
      throw ProtocolError("union aborted: expected one bitmap per client");
    FieldVector merged(m, dim);
    for (const Message& msg : inbox) {
      const FieldVector b = msg.payload.unpack();
      if (b.size() != dim || b.modulus() != m)
        throw ProtocolError("union aborted: malformed bitmap");
      for (std::size_t j = 0; j < dim; ++j)
        if (b[j] != 0) merged.set(j, 1);
    }
    std::vector<Message> out;
    out.reserve(static_cast<std::size_t>(cfg.clients));
    for (int i = 1; i <= cfg.clients; ++i)
      out.push_back(
          {server(1), client(i), ProtocolTag::kUnion, round, Payload::pack(merged)});
    return out;
  }});

  phases[2].name = "read";
  for (int i = 1; i <= cfg.clients; ++i) {
    phases[2].steps.push_back({client(i), [&, i](std::vector<Message> inbox) {
      if (inbox.size() != 1)
        throw ProtocolError("union aborted: expected one broadcast");
      received[i - 1] = inbox.front().payload.unpack();
      return std::vector<Message>{};
    }});
  }

  run_protocol(fabric, phases, cfg.threads);
  for (const auto& r : received) {
    if (!r || *r != *received.front())
      throw ProtocolError("clients disagree on the union");
  }
  return detail::nonzero_indices(*received.front());
}

// Maps a sign sum in [-C, C] onto Z_{2C+1} and back.
inline std::uint64_t sign_to_ring(int value, int clients) {
  if (value < -clients || value > clients)
    throw std::invalid_argument("sign value outside [-C, C]");
  return value >= 0 ? static_cast<std::uint64_t>(value)
                    : static_cast<std::uint64_t>(value + 2 * clients + 1);
}

inline int ring_to_sign(std::uint64_t value, int clients) {
  if (value > static_cast<std::uint64_t>(2 * clients))
    throw std::invalid_argument("ring value outside [0, 2C]");
  return value <= static_cast<std::uint64_t>(clients)
             ? static_cast<int>(value)
             : static_cast<int>(value) - (2 * clients + 1);
}

// Exact sum of ternary sign vectors restricted to the agreed support,
// carried out in Z_{2C+1} where sums of C signs cannot wrap. Returns sums
// aligned with `support`. An empty support exchanges no messages.
inline std::vector<int> sum_of_signs_on(
    Fabric& fabric, std::span<const std::vector<std::int8_t>> dense_signs,
    std::span<const std::uint32_t> support, const AggConfig& cfg, int round,
    RandomSource& rng) {
  validate(cfg);
  if (dense_signs.size() != static_cast<std::size_t>(cfg.clients))
    throw std::invalid_argument("expected one sign vector per client");
  if (support.empty()) return {};

  const Modulus m(2 * static_cast<std::uint64_t>(cfg.clients) + 1);
  std::vector<FieldVector> restricted;
  restricted.reserve(dense_signs.size());
  for (const auto& signs : dense_signs) {
    FieldVector r(m, support.size());
    for (std::size_t j = 0; j < support.size(); ++j) {
      const std::int8_t s = signs[support[j]];
      if (s < -1 || s > 1)
        throw std::invalid_argument("sign entries must lie in {-1, 0, 1}");
      r.set(j, sign_to_ring(s, cfg.clients));
    }
    restricted.push_back(std::move(r));
  }
  const SecureSumConfig sum_cfg(cfg.clients, cfg.servers, support.size(), m);
  const FieldVector summed = run_secure_sum_on(
      fabric, restricted, sum_cfg, ProtocolTag::kSigns, round, rng, cfg.threads);

  std::vector<int> out(support.size());
  for (std::size_t j = 0; j < support.size(); ++j)
    out[j] = ring_to_sign(summed[j], cfg.clients);
  return out;
}

// Exact-to-fixed-point sum of nonnegative scale factors in Z_{2^lambda}.
// The no-overflow bound sum < 2^(lambda - a) is enforced up front.
inline double sum_of_factors_on(Fabric& fabric, std::span<const double> factors,
                                const AggConfig& cfg, int round,
                                RandomSource& rng) {
  validate(cfg);
  if (factors.size() != static_cast<std::size_t>(cfg.clients))
    throw std::invalid_argument("expected one factor per client");
  double total = 0.0;
  for (double f : factors) {
    if (!std::isfinite(f) || f < 0)
      throw std::invalid_argument("factors must be finite and nonnegative");
    total += f;
  }
  if (total >= std::ldexp(1.0, cfg.fp.word_bits - cfg.fp.frac_bits))
    throw std::invalid_argument(
        "factor sum would overflow the fixed point word; raise word_bits or "
        "lower frac_bits");

  const Modulus m = fp_modulus(cfg.fp);
  std::vector<FieldVector> encoded;
  encoded.reserve(factors.size());
  for (double f : factors) {
    FieldVector v(m, 1);
    v.set(0, fp_encode(f, cfg.fp));
    encoded.push_back(std::move(v));
  }
  const SecureSumConfig sum_cfg(cfg.clients, cfg.servers, 1, m);
  const FieldVector summed = run_secure_sum_on(
      fabric, encoded, sum_cfg, ProtocolTag::kFactors, round, rng, cfg.threads);
  return fp_decode(summed[0], cfg.fp);
}

// Result of one aggregation round, as every client reconstructs it.
struct AggregationResult {
  std::vector<double> update;          // dense, (1/C^2) * factor_sum * sign sums
  std::vector<std::uint32_t> support;  // the union the round agreed on
  std::vector<int> sign_sums;          // aligned with support, in [-C, C]
  double factor_sum = 0.0;
};

// One full aggregation round over compressed updates: union of supports,
// sign sum over the union, factor sum, then the local combination
// U = (1/C^2) * factor_sum * sign_sums. Sub-protocols run strictly in
// sequence on the same fabric, distinguished by message tags.
inline AggregationResult compressed_secure_agg_on(Fabric& fabric,
                                                  std::span<const TopBinaryUpdate> codes,
                                                  const AggConfig& cfg,
                                                  int round, RandomSource& rng) {
  validate(cfg);
  if (codes.size() != static_cast<std::size_t>(cfg.clients))
    throw std::invalid_argument("expected one code per client");
  const std::size_t dim = codes.front().dim;
  if (dim == 0) throw std::invalid_argument("empty update dimension");
  for (const auto& c : codes) {
    if (c.dim != dim) throw std::invalid_argument("codes have mismatched dimension");
  }

  std::vector<std::vector<std::uint32_t>> supports;
  supports.reserve(codes.size());
  for (const auto& c : codes) supports.push_back(c.support);

  AggregationResult out;
  switch (cfg.strategy) {
    case UnionStrategy::kNoUnion: {
      out.support.resize(dim);
      for (std::size_t i = 0; i < dim; ++i)
        out.support[i] = static_cast<std::uint32_t>(i);
      break;
    }
    case UnionStrategy::kPartialSecure:
      out.support =
          partial_secure_union_on(fabric, supports, dim, cfg, round, rng).support;
      break;
    case UnionStrategy::kSecure:
      out.support = secure_union_on(fabric, supports, dim, cfg, round, rng);
      break;
    case UnionStrategy::kPlaintext:
      out.support = plaintext_union_on(fabric, supports, dim, cfg, round);
      break;
  }

  std::vector<std::vector<std::int8_t>> dense_signs;
  dense_signs.reserve(codes.size());
  for (const auto& c : codes) dense_signs.push_back(c.dense_signs());
  out.sign_sums = sum_of_signs_on(fabric, dense_signs, out.support, cfg, round, rng);

  std::vector<double> factors;
  factors.reserve(codes.size());
  for (const auto& c : codes) factors.push_back(c.factor);
  out.factor_sum = sum_of_factors_on(fabric, factors, cfg, round, rng);

  out.update.assign(dim, 0.0);
  const double scale = out.factor_sum / (static_cast<double>(cfg.clients) *
                                         static_cast<double>(cfg.clients));
  for (std::size_t j = 0; j < out.support.size(); ++j)
    out.update[out.support[j]] = scale * out.sign_sums[j];
  return out;
}

inline std::pair<AggregationResult, RoundTranscript> compressed_secure_agg(
    std::span<const TopBinaryUpdate> codes, const AggConfig& cfg,
    RandomSource& rng) {
  Fabric fabric(cfg.clients, cfg.servers);
  AggregationResult result = compressed_secure_agg_on(fabric, codes, cfg, 0, rng);
  return {std::move(result), std::move(fabric.transcript())};
}

// ---- Union analytics ----

// Probability that exactly t of the clients picked one fixed index, when
// each client picks k of the dim indices uniformly.
inline double collision_probability(std::uint64_t dim, std::uint64_t k,
                                    int clients, int t) {
  if (dim == 0 || k > dim) throw std::invalid_argument("need 0 <= k <= dim");
  if (t < 0 || t > clients) return 0.0;
  const double p = static_cast<double>(k) / static_cast<double>(dim);
  double binom = 1.0;
  for (int i = 0; i < t; ++i)
    binom *= static_cast<double>(clients - i) / static_cast<double>(i + 1);
  return binom * std::pow(p, t) * std::pow(1.0 - p, clients - t);
}

// Probability that an index is held by two or more of the clients.
inline double multi_holder_probability(std::uint64_t dim, std::uint64_t k,
                                       int clients) {
  return std::max(0.0, 1.0 - collision_probability(dim, k, clients, 0) -
                           collision_probability(dim, k, clients, 1));
}

// Expected number of union indices lost to mask cancellation, under the
// model that every multi-held index cancels independently with probability
// 1 / 2^q.
inline double expected_false_negatives(std::uint64_t dim, std::uint64_t k,
                                       int clients, int q) {
  if (q < 1 || q > 63) throw std::invalid_argument("q must lie in [1, 63]");
  return static_cast<double>(dim) * multi_holder_probability(dim, k, clients) /
         std::ldexp(1.0, q);
}

// Exact cancellation law for t independent uniform nonzero masks summed mod
// 2^q: P_t = (1 + (-1)^t (2^q - 1)^(1 - t)) / 2^q. The 1/2^q model above is
// its large-q limit; at q = 1 the two diverge badly (masks are all 1, so
// even-sized collisions always cancel).
inline double expected_false_negatives_exact(std::uint64_t dim, std::uint64_t k,
                                             int clients, int q) {
  if (q < 1 || q > 63) throw std::invalid_argument("q must lie in [1, 63]");
  const double m = std::ldexp(1.0, q);
  double sum = 0.0;
  for (int t = 2; t <= clients; ++t) {
    const double sign = (t % 2 == 0) ? 1.0 : -1.0;
    const double cancel = (1.0 + sign * std::pow(m - 1.0, 1.0 - t)) / m;
    sum += collision_probability(dim, k, clients, t) * cancel;
  }
  return static_cast<double>(dim) * sum;
}

// Probability that an index one client holds appears in the computed union,
// i.e. no cancellation against the other C-1 clients: 1 - Pr[2+ holders
// among the rest] / 2^q.
inline double prob_alone(std::uint64_t dim, std::uint64_t k, int clients, int q) {
  if (q < 1 || q > 63) throw std::invalid_argument("q must lie in [1, 63]");
  if (clients < 1) throw std::invalid_argument("need at least one client");
  return 1.0 -
         multi_holder_probability(dim, k, clients - 1) / std::ldexp(1.0, q);
}

// ---- Intermediate-output diagnostics ----

// What any client can read off the reconstructed update U alone: the union
// support, a factor estimate (exact whenever some index carries sign sum
// +-1), and the implied sign sums. Unavailable when U is identically zero.
struct IntermediateInference {
  std::vector<std::uint32_t> support;
  double factor_sum = 0.0;
  std::vector<double> sign_estimate;  // dense, (C^2 / factor_sum) * U
};

inline std::optional<IntermediateInference> infer_intermediates(
    std::span<const double> update, int clients) {
  if (clients < 1) throw std::invalid_argument("need at least one client");
  IntermediateInference out;
  double min_abs = 0.0;
  for (std::size_t i = 0; i < update.size(); ++i) {
    if (update[i] == 0.0) continue;
    out.support.push_back(static_cast<std::uint32_t>(i));
    const double a = std::fabs(update[i]);
    if (min_abs == 0.0 || a < min_abs) min_abs = a;
  }
  if (out.support.empty()) return std::nullopt;
  const double c_sq = static_cast<double>(clients) * static_cast<double>(clients);
  out.factor_sum = c_sq * min_abs;
  out.sign_estimate.resize(update.size());
  for (std::size_t i = 0; i < update.size(); ++i)
    out.sign_estimate[i] = c_sq * update[i] / out.factor_sum;
  return out;
}

}  // namespace csagg
