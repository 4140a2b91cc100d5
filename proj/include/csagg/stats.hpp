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

#include <cmath>
#include <cstdint>
#include <limits>
#include <span>
#include <stdexcept>
#include <vector>

namespace csagg::stats {

namespace detail {

// Lower regularized incomplete gamma P(a, x) by power series; valid x < a+1.
inline double gamma_series_p(double a, double x) {
  double term = 1.0 / a;
  double sum = term;
  for (int n = 1; n < 10000; ++n) {
    term *= x / (a + n);
    sum += term;
    if (std::fabs(term) < std::fabs(sum) * 1e-15) break;
  }
  return sum * std::exp(-x + a * std::log(x) - std::lgamma(a));
}

// Upper regularized incomplete gamma Q(a, x) by modified Lentz continued
// fraction; valid x >= a+1.
inline double gamma_cf_q(double a, double x) {
  constexpr double tiny = 1e-300;
  double b = x + 1.0 - a;
  double c = 1.0 / tiny;
  double d = 1.0 / b;
  double h = d;
  for (int i = 1; i < 10000; ++i) {
    const double an = -static_cast<double>(i) * (i - a);
    b += 2.0;
    d = an * d + b;
    if (std::fabs(d) < tiny) d = tiny;
    c = b + an / c;
    if (std::fabs(c) < tiny) c = tiny;
    d = 1.0 / d;
    const double delta = d * c;
    h *= delta;
    if (std::fabs(delta - 1.0) < 1e-15) break;
  }
  return h * std::exp(-x + a * std::log(x) - std::lgamma(a));
}

}  // namespace detail

// Upper regularized incomplete gamma Q(a, x) = Gamma(a, x) / Gamma(a).
inline double regularized_gamma_q(double a, double x) {
  if (!(a > 0) || x < 0)
    throw std::invalid_argument("regularized_gamma_q needs a > 0, x >= 0");
  if (x == 0) return 1.0;
  if (x < a + 1.0) return 1.0 - detail::gamma_series_p(a, x);
  return detail::gamma_cf_q(a, x);
}

// Survival function of the chi-square distribution.
inline double chi_square_p_value(double stat, int df) {
  if (df < 1) throw std::invalid_argument("chi-square needs df >= 1");
  if (stat <= 0) return 1.0;
  return regularized_gamma_q(df / 2.0, stat / 2.0);
}

struct ChiSquare {
  double stat = 0.0;
  int df = 0;
  double p_value = 1.0;
};

// Goodness of fit against the uniform distribution over the given bins.
inline ChiSquare chi_square_uniform(std::span<const std::uint64_t> counts) {
  if (counts.size() < 2)
    throw std::invalid_argument("uniformity test needs at least 2 bins");
  std::uint64_t total = 0;
  for (std::uint64_t c : counts) total += c;
  if (total == 0) throw std::invalid_argument("uniformity test needs samples");
  const double expected = static_cast<double>(total) / counts.size();
  double stat = 0.0;
  for (std::uint64_t c : counts) {
    const double diff = static_cast<double>(c) - expected;
    stat += diff * diff / expected;
  }
  const int df = static_cast<int>(counts.size()) - 1;
  return {stat, df, chi_square_p_value(stat, df)};
}

// Homogeneity test between two histograms over the same bins. Bins empty in
// both samples are skipped and do not contribute degrees of freedom.
inline ChiSquare chi_square_two_sample(std::span<const std::uint64_t> a,
                                       std::span<const std::uint64_t> b) {
  if (a.size() != b.size() || a.size() < 2)
    throw std::invalid_argument("two-sample test needs matching bins");
  double total_a = 0, total_b = 0;
  for (std::uint64_t c : a) total_a += static_cast<double>(c);
  for (std::uint64_t c : b) total_b += static_cast<double>(c);
  if (total_a == 0 || total_b == 0)
    throw std::invalid_argument("two-sample test needs samples on both sides");
  const double grand = total_a + total_b;
  double stat = 0.0;
  int used_bins = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double col = static_cast<double>(a[i]) + static_cast<double>(b[i]);
    if (col == 0) continue;
    ++used_bins;
    const double ea = col * total_a / grand;
    const double eb = col * total_b / grand;
    const double da = static_cast<double>(a[i]) - ea;
    const double db = static_cast<double>(b[i]) - eb;
    stat += da * da / ea + db * db / eb;
  }
  if (used_bins < 2)
    throw std::invalid_argument("two-sample test needs at least 2 occupied bins");
  const int df = used_bins - 1;
  return {stat, df, chi_square_p_value(stat, df)};
}

struct Interval {
  double lo = 0.0;
  double hi = 0.0;
  bool contains(double x) const { return lo <= x && x <= hi; }
};

// Central normal-approximation interval for a Binomial(n, p) count;
// the default z covers 99%.
inline Interval binomial_interval(std::uint64_t n, double p,
                                  double z = 2.5758293035489004) {
  if (p < 0 || p > 1) throw std::invalid_argument("p must be a probability");
  const double mean = static_cast<double>(n) * p;
  const double sd = std::sqrt(static_cast<double>(n) * p * (1.0 - p));
  return {mean - z * sd, mean + z * sd};
}

inline double mean(std::span<const double> xs) {
  if (xs.empty()) throw std::invalid_argument("mean of empty sample");
  double s = 0;
  for (double x : xs) s += x;
  return s / static_cast<double>(xs.size());
}

}  // namespace csagg::stats
