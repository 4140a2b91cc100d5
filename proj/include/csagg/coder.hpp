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
#include <numeric>
#include <span>
#include <stdexcept>
#include <vector>

namespace csagg {

// Sparse sign code of a dense update: the top-count largest-magnitude
// coefficients keep only their signs, and a single scale factor
// alpha = ||x||_2 / sqrt(top_count) multiplies them all back.
struct TopBinaryUpdate {
  std::size_t dim = 0;
  double factor = 0.0;
  std::vector<std::uint32_t> support;  // strictly increasing indices
  std::vector<std::int8_t> signs;      // aligned with support, each +1 or -1

  std::vector<double> decode_dense() const {
    std::vector<double> out(dim, 0.0);
    for (std::size_t i = 0; i < support.size(); ++i)
      out[support[i]] = factor * signs[i];
    return out;
  }

  std::vector<std::int8_t> dense_signs() const {
    std::vector<std::int8_t> out(dim, 0);
    for (std::size_t i = 0; i < support.size(); ++i)
      out[support[i]] = signs[i];
    return out;
  }
};

// Nominal kept-coefficient count: max(1, floor(rho * dim)).
inline std::size_t top_count(std::size_t dim, double rho) {
  if (dim == 0) throw std::invalid_argument("empty update");
  if (!(rho > 0.0) || rho > 1.0)
    throw std::invalid_argument("compression ratio must lie in (0, 1]");
  const auto k = static_cast<std::size_t>(std::floor(rho * static_cast<double>(dim)));
  return std::max<std::size_t>(1, std::min(k, dim));
}

// Encodes x: selects the top-count entries by magnitude (ties resolved
// toward the lower index), drops exact zeros, stores signs plus the scale
// ||x||_2 / sqrt(top_count). The scale keeps the nominal sqrt even when
// zeros shrink the support.
inline TopBinaryUpdate topbinary_encode(std::span<const double> x, double rho) {
  const std::size_t k = top_count(x.size(), rho);
  for (double v : x) {
    if (!std::isfinite(v)) throw std::invalid_argument("update has non-finite entry");
  }

  std::vector<std::uint32_t> order(x.size());
  std::iota(order.begin(), order.end(), 0u);
  const auto ranks_before = [&x](std::uint32_t a, std::uint32_t b) {
    const double ma = std::fabs(x[a]), mb = std::fabs(x[b]);
    return ma != mb ? ma > mb : a < b;
  };
  std::nth_element(order.begin(), order.begin() + (k - 1), order.end(), ranks_before);
  order.resize(k);
  std::sort(order.begin(), order.end());

  TopBinaryUpdate code;
  code.dim = x.size();
  double norm_sq = 0.0;
  for (double v : x) norm_sq += v * v;
  code.factor = std::sqrt(norm_sq) / std::sqrt(static_cast<double>(k));
  for (std::uint32_t idx : order) {
    if (x[idx] == 0.0) continue;
    code.support.push_back(idx);
    code.signs.push_back(x[idx] > 0.0 ? std::int8_t{1} : std::int8_t{-1});
  }
  return code;
}

struct EcStepResult {
  TopBinaryUpdate code;
  std::vector<double> residual;
};

// One error-compensation step: encode update + residual, then carry the
// coding error forward, residual' = residual + (update - decode(code)).
inline EcStepResult ec_step(std::span<const double> update,
                            std::span<const double> residual, double rho) {
  if (update.size() != residual.size())
    throw std::invalid_argument("update and residual length mismatch");
  std::vector<double> compensated(update.size());
  for (std::size_t i = 0; i < update.size(); ++i)
    compensated[i] = update[i] + residual[i];

  EcStepResult out;
  out.code = topbinary_encode(compensated, rho);
  const std::vector<double> decoded = out.code.decode_dense();
  out.residual.resize(update.size());
  for (std::size_t i = 0; i < update.size(); ++i)
    out.residual[i] = residual[i] + (update[i] - decoded[i]);
  return out;
}

// Estimated size of one code on the wire: 32 bits of scale plus an
// entropy-coded support mask plus one sign bit per kept coefficient.
// Requires 0 < rho < 1 (the entropy term is undefined at the endpoints).
inline double code_size_bits(std::uint64_t dim, double rho) {
  if (!(rho > 0.0 && rho < 1.0))
    throw std::invalid_argument("code size estimate needs 0 < rho < 1");
  const double h = -(1.0 - rho) * std::log2(1.0 - rho) - rho * std::log2(rho);
  return 32.0 + h * static_cast<double>(dim) + rho * static_cast<double>(dim);
}

namespace detail {
inline void require_same_dim(std::span<const TopBinaryUpdate> codes) {
  if (codes.empty()) throw std::invalid_argument("no codes to aggregate");
  for (const auto& c : codes) {
    if (c.dim != codes.front().dim)
      throw std::invalid_argument("codes have mismatched dimension");
    if (c.support.size() != c.signs.size())
      throw std::invalid_argument("support and signs misaligned");
  }
}
}  // namespace detail

// Mean of the decoded updates: (1/C) sum_i alpha_i * D_i.
inline std::vector<double> direct_agg(std::span<const TopBinaryUpdate> codes) {
  detail::require_same_dim(codes);
  std::vector<double> out(codes.front().dim, 0.0);
  for (const auto& c : codes) {
    for (std::size_t i = 0; i < c.support.size(); ++i)
      out[c.support[i]] += c.factor * c.signs[i];
  }
  const double inv = 1.0 / static_cast<double>(codes.size());
  for (double& v : out) v *= inv;
  return out;
}

struct SeparateAggregate {
  std::vector<double> update;  // (1/C^2) * factor_sum * sign_sums, dense
  std::vector<int> sign_sums;  // dense, entries in [-C, C]
  double factor_sum = 0.0;
};

// Aggregates scales and signs separately: (1/C^2)(sum alpha_i)(sum D_i).
inline SeparateAggregate sep_agg(std::span<const TopBinaryUpdate> codes) {
  detail::require_same_dim(codes);
  SeparateAggregate out;
  out.sign_sums.assign(codes.front().dim, 0);
  for (const auto& c : codes) {
    out.factor_sum += c.factor;
    for (std::size_t i = 0; i < c.support.size(); ++i)
      out.sign_sums[c.support[i]] += c.signs[i];
  }
  const double scale = out.factor_sum /
                       (static_cast<double>(codes.size()) * static_cast<double>(codes.size()));
  out.update.resize(codes.front().dim);
  for (std::size_t j = 0; j < out.update.size(); ++j)
    out.update[j] = scale * out.sign_sums[j];
  return out;
}

struct IdentityCheck {
  double measured = 0.0;     // || direct_agg - sep_agg ||_2^2
  double closed_form = 0.0;  // (1/(C^2 k)) sum_j ( sum_i (L_i - mean L) D_i[j] )^2
};

// Squared distance between direct and separate aggregation, both measured
// and via the closed form in terms of the full norms L_i = alpha_i sqrt(k).
// Requires every code to keep exactly the same support size k.
inline IdentityCheck sep_agg_error_identity(std::span<const TopBinaryUpdate> codes) {
  detail::require_same_dim(codes);
  const std::size_t k = codes.front().support.size();
  for (const auto& c : codes) {
    if (c.support.size() != k)
      throw std::invalid_argument("identity check needs equal support sizes");
  }
  if (k == 0) throw std::invalid_argument("identity check needs nonempty supports");

  const double c_count = static_cast<double>(codes.size());
  const double sqrt_k = std::sqrt(static_cast<double>(k));
  std::vector<double> l_values;
  l_values.reserve(codes.size());
  for (const auto& c : codes) l_values.push_back(c.factor * sqrt_k);
  const double l_mean =
      std::accumulate(l_values.begin(), l_values.end(), 0.0) / c_count;

  const std::vector<double> direct = direct_agg(codes);
  const SeparateAggregate separate = sep_agg(codes);

  IdentityCheck out;
  for (std::size_t j = 0; j < direct.size(); ++j) {
    const double d = direct[j] - separate.update[j];
    out.measured += d * d;
  }
  std::vector<double> weighted(codes.front().dim, 0.0);
  for (std::size_t i = 0; i < codes.size(); ++i) {
    const double w = l_values[i] - l_mean;
    const auto& c = codes[i];
    for (std::size_t t = 0; t < c.support.size(); ++t)
      weighted[c.support[t]] += w * c.signs[t];
  }
  for (double v : weighted) out.closed_form += v * v;
  out.closed_form /= c_count * c_count * static_cast<double>(k);
  return out;
}

}  // namespace csagg
