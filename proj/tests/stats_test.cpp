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

#include "csagg/stats.hpp"

#include <cstdint>
#include <vector>

#include "csagg/random.hpp"
#include "gtest/gtest.h"

namespace csagg::stats {
namespace {

TEST(ChiSquarePValueTest, MatchesKnownQuantiles) {
  // Upper tail values cross-checked against standard chi-square tables.
  EXPECT_NEAR(chi_square_p_value(3.841458820694124, 1), 0.05, 1e-9);
  EXPECT_NEAR(chi_square_p_value(18.307038053275146, 10), 0.05, 1e-9);
  EXPECT_NEAR(chi_square_p_value(23.209251158954356, 10), 0.01, 1e-9);
  EXPECT_NEAR(chi_square_p_value(10.0, 10), 0.44049328506521168, 1e-9);
}

TEST(ChiSquarePValueTest, Extremes) {
  EXPECT_DOUBLE_EQ(chi_square_p_value(0.0, 5), 1.0);
  EXPECT_LT(chi_square_p_value(1000.0, 5), 1e-100);
}

TEST(ChiSquareUniformTest, UniformCountsPass) {
  DeterministicRng rng(31);
  std::vector<std::uint64_t> counts(16, 0);
  for (int i = 0; i < 160000; ++i) ++counts[uniform_below(rng, 16)];
  const ChiSquare r = chi_square_uniform(counts);
  EXPECT_EQ(r.df, 15);
  EXPECT_GT(r.p_value, 0.01);
}

TEST(ChiSquareUniformTest, SkewedCountsFail) {
  std::vector<std::uint64_t> counts(16, 1000);
  counts[0] = 2000;
  EXPECT_LT(chi_square_uniform(counts).p_value, 1e-10);
}

TEST(ChiSquareTwoSampleTest, SameDistributionPasses) {
  DeterministicRng rng(37);
  std::vector<std::uint64_t> a(9, 0), b(9, 0);
  for (int i = 0; i < 90000; ++i) ++a[uniform_below(rng, 9)];
  for (int i = 0; i < 50000; ++i) ++b[uniform_below(rng, 9)];
  EXPECT_GT(chi_square_two_sample(a, b).p_value, 0.01);
}

TEST(ChiSquareTwoSampleTest, DifferentDistributionsFail) {
  DeterministicRng rng(41);
  std::vector<std::uint64_t> a(9, 0), b(9, 0);
  for (int i = 0; i < 50000; ++i) ++a[uniform_below(rng, 9)];
  for (int i = 0; i < 50000; ++i) {
    // Triangular-ish skew: min of two draws.
    const std::uint64_t x = uniform_below(rng, 9);
    const std::uint64_t y = uniform_below(rng, 9);
    ++b[x < y ? x : y];
  }
  EXPECT_LT(chi_square_two_sample(a, b).p_value, 1e-10);
}

TEST(ChiSquareTwoSampleTest, SkipsEmptyBins) {
  const std::vector<std::uint64_t> a{100, 0, 100};
  const std::vector<std::uint64_t> b{100, 0, 100};
  const ChiSquare r = chi_square_two_sample(a, b);
  EXPECT_EQ(r.df, 1);
  EXPECT_GT(r.p_value, 0.99);
}

TEST(BinomialIntervalTest, CoversMean) {
  const Interval ci = binomial_interval(10000, 0.5);
  EXPECT_TRUE(ci.contains(5000));
  EXPECT_FALSE(ci.contains(5400));
  EXPECT_GT(ci.lo, 4800.0);
  EXPECT_LT(ci.hi, 5200.0);
}

TEST(MeanTest, Basics) {
  const std::vector<double> xs{1.0, 2.0, 3.0, 4.0};
  EXPECT_DOUBLE_EQ(mean(xs), 2.5);
  EXPECT_THROW(mean(std::vector<double>{}), std::invalid_argument);
}

}  // namespace
}  // namespace csagg::stats
