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

#include "csagg/cost_model.hpp"

#include <gtest/gtest.h>

#include <cstdint>
#include <stdexcept>
#include <vector>

#include "csagg/coder.hpp"
#include "csagg/field.hpp"
#include "csagg/random.hpp"
#include "csagg/secure_aggregation.hpp"
#include "csagg/secure_sum.hpp"

namespace csagg::cost {
namespace {

TEST(CeilLog2, EdgeCases) {
  EXPECT_THROW(ceil_log2(0), std::invalid_argument);
  EXPECT_THROW(ceil_log2(1), std::invalid_argument);
  EXPECT_EQ(ceil_log2(2), 1);
  EXPECT_EQ(ceil_log2(3), 2);
  EXPECT_EQ(ceil_log2(4), 2);
  EXPECT_EQ(ceil_log2(5), 3);
  EXPECT_EQ(ceil_log2(8), 3);
  EXPECT_EQ(ceil_log2(9), 4);
  EXPECT_EQ(ceil_log2(1ull << 32), 32);
  EXPECT_EQ(ceil_log2((1ull << 32) + 1), 33);
  EXPECT_EQ(ceil_log2(1ull << 63), 63);
  EXPECT_EQ(ceil_log2((1ull << 63) + 1), 64);
  EXPECT_EQ(ceil_log2(~0ull), 64);
}

TEST(CostFormulas, FedAvgRoundBits) {
  EXPECT_EQ(fedavg_round_bits(1, 1), 64u);
  EXPECT_EQ(fedavg_round_bits(5, 61706), 19745920u);
}

TEST(CostFormulas, SecureSumBitsMatchesLiveTranscript) {
  const Modulus m(17);
  const SecureSumConfig cfg(3, 2, 4, m);
  std::vector<FieldVector> inputs;
  for (int i = 0; i < 3; ++i) {
    FieldVector v(m, 4);
    for (std::size_t j = 0; j < 4; ++j) v.set(j, (i * 4 + j) % 17);
    inputs.push_back(std::move(v));
  }
  DeterministicRng rng(7);
  const SecureSumRun run = run_secure_sum(inputs, cfg, rng);
  EXPECT_EQ(secure_sum_bits(3, 2, 4, 17), 240u);
  EXPECT_EQ(run.transcript.total_bits(), secure_sum_bits(3, 2, 4, 17));
}

TEST(CostFormulas, AggregationRoundBitsHandSized) {
  // C=2, S=2, dim=8, |V|=3, q=5: signs cost 2*2*2*3*ceil_log2(5) = 72 and
  // factors cost 2*2*2*32 = 256 in every variant that exchanges them.
  EXPECT_EQ(aggregation_round_bits(UnionStrategy::kNoUnion, 2, 2, 8, 3, 5),
            2ull * 2 * 2 * 8 * 3 + 256);
  EXPECT_EQ(aggregation_round_bits(UnionStrategy::kSecure, 2, 2, 8, 3, 5),
            2ull * 2 * 2 * 8 * 5 + 72 + 256);
  EXPECT_EQ(aggregation_round_bits(UnionStrategy::kPartialSecure, 2, 2, 8, 3, 5),
            2ull * 2 * 2 * 8 * 2 + 72 + 256);
  EXPECT_EQ(aggregation_round_bits(UnionStrategy::kPlaintext, 2, 2, 8, 3, 5),
            2ull * 2 * 8 + 72 + 256);
}

TEST(CostFormulas, PairwiseMaskingBaseline) {
  // C * (2C*key + (5C-4)*share + 2*dim*ceil_log2(field)).
  EXPECT_EQ(baseline_pairwise_masking_bits(2, 1, 8, 8, 4),
            2ull * (2 * 2 * 8 + 6 * 8 + 2 * 1 * 2));
  EXPECT_EQ(baseline_pairwise_masking_bits(5, 61706), 19785600u);
}

TEST(CostFormulas, SharingBaselines) {
  EXPECT_EQ(baseline_sharing_bits(ShareBaseline::kThresholdSecretSharing, 2, 2, 3),
            2ull * 2 * 2 * 3 * 3);
  EXPECT_EQ(baseline_sharing_bits(ShareBaseline::kHomomorphicEncryption, 2, 2, 3,
                                  10, 2),
            4ull * 2 * 3 * 12);
  EXPECT_EQ(baseline_sharing_bits(ShareBaseline::kThresholdSecretSharing, 5, 2,
                                  61706),
            4936480u);
  EXPECT_EQ(baseline_sharing_bits(ShareBaseline::kHomomorphicEncryption, 5, 2,
                                  61706),
            39491840u);
}

// Per-round bit counts behind every reference row, frozen so a formula
// regression is pinned to the exact row it breaks.
TEST(ReferenceTables, FrozenMnistRoundBits) {
  const std::vector<std::uint64_t> expected = {
      19745920, 19785600, 4936480,  39491840, 4937120,  6555560,  12730320,
      4092200,  1006900,  19745920, 19785600, 4936480,  39491840, 4937120,
      2382280,  7614200,  13792000, 5163240,  2077940,
  };
  const auto& rows = mnist_reference_table();
  ASSERT_EQ(rows.size(), expected.size());
  for (std::size_t i = 0; i < rows.size(); ++i)
    EXPECT_EQ(round_bits(rows[i].scenario), expected[i])
        << "row " << i << " (" << rows[i].label << ", E=" << rows[i].local_steps
        << ")";
}

TEST(ReferenceTables, FrozenCifarRoundBits) {
  const std::vector<std::uint64_t> expected = {
      562056320, 562096000, 140514080, 1124112640, 140514720,
      81097080,  228216360, 404149280, 158476600,  70655300,
  };
  const auto& rows = cifar_reference_table();
  ASSERT_EQ(rows.size(), expected.size());
  for (std::size_t i = 0; i < rows.size(); ++i)
    EXPECT_EQ(round_bits(rows[i].scenario), expected[i])
        << "row " << i << " (" << rows[i].label << ")";
}

TEST(ReferenceTables, AllRowsWithinTolerance) {
  for (const ReferenceRow& row : mnist_reference_table()) {
    const double computed = row.gb ? total_gb(row.scenario) : total_mb(row.scenario);
    EXPECT_TRUE(row_within_tolerance(row))
        << row.label << " E=" << row.local_steps << " computed " << computed
        << " reference " << row.reference;
  }
  for (const ReferenceRow& row : cifar_reference_table()) {
    const double computed = row.gb ? total_gb(row.scenario) : total_mb(row.scenario);
    EXPECT_TRUE(row_within_tolerance(row))
        << row.label << " computed " << computed << " reference " << row.reference;
  }
}

TEST(ReferenceTables, TotalsScaleWithRounds) {
  CostScenario s;
  s.method = Method::kFedAvg;
  s.dim = 61706;
  s.rounds = 129;
  EXPECT_NEAR(total_mb(s), 303.65, 0.01);
  s.rounds = 258;
  EXPECT_NEAR(total_mb(s), 2 * 303.654, 0.01);

  CostScenario g;
  g.method = Method::kFedAvg;
  g.dim = 1756426;
  g.rounds = 101;
  EXPECT_NEAR(total_gb(g), 6.61, 0.01);
}

TEST(Reconcile, ExactOnLiveRound) {
  AggConfig cfg;
  cfg.clients = 3;
  cfg.servers = 2;
  cfg.strategy = UnionStrategy::kPartialSecure;
  const std::size_t dim = 12;
  std::vector<TopBinaryUpdate> codes;
  DeterministicRng data_rng(11);
  for (int i = 0; i < cfg.clients; ++i) {
    std::vector<double> x(dim);
    for (double& v : x)
      v = static_cast<double>(uniform_below(data_rng, 2001)) / 1000.0 - 1.0;
    codes.push_back(topbinary_encode(x, 0.25));
  }
  DeterministicRng rng(19);
  const auto [result, transcript] = compressed_secure_agg(codes, cfg, rng);
  ASSERT_FALSE(result.support.empty());

  const ReconcileReport report =
      reconcile(transcript, cfg.strategy, cfg.clients, cfg.servers, dim,
                result.support.size(), cfg.q);
  ASSERT_EQ(report.entries.size(), 3u);
  EXPECT_EQ(report.entries[0].tag, ProtocolTag::kUnion);
  EXPECT_EQ(report.entries[1].tag, ProtocolTag::kSigns);
  EXPECT_EQ(report.entries[2].tag, ProtocolTag::kFactors);
  for (const ReconcileEntry& e : report.entries)
    EXPECT_TRUE(e.matches()) << tag_name(e.tag) << " analytic "
                             << e.analytic_bits << " measured " << e.measured_bits;
  EXPECT_TRUE(report.exact);
}

TEST(Reconcile, NoUnionUsesFullRangeAsSupport) {
  AggConfig cfg;
  cfg.clients = 2;
  cfg.servers = 2;
  cfg.strategy = UnionStrategy::kNoUnion;
  const std::size_t dim = 10;
  std::vector<TopBinaryUpdate> codes;
  DeterministicRng data_rng(13);
  for (int i = 0; i < cfg.clients; ++i) {
    std::vector<double> x(dim);
    for (double& v : x)
      v = static_cast<double>(uniform_below(data_rng, 2001)) / 1000.0 - 1.0;
    codes.push_back(topbinary_encode(x, 0.3));
  }
  DeterministicRng rng(23);
  const auto [result, transcript] = compressed_secure_agg(codes, cfg, rng);
  ASSERT_EQ(result.support.size(), dim);

  const ReconcileReport report = reconcile(
      transcript, cfg.strategy, cfg.clients, cfg.servers, dim, dim, cfg.q);
  EXPECT_EQ(report.entries[0].analytic_bits, 0u);
  EXPECT_EQ(report.entries[0].measured_bits, 0u);
  EXPECT_TRUE(report.exact);
}

TEST(Reconcile, FlagsInjectedTraffic) {
  AggConfig cfg;
  cfg.clients = 3;
  cfg.servers = 2;
  cfg.strategy = UnionStrategy::kPlaintext;
  const std::size_t dim = 8;
  std::vector<TopBinaryUpdate> codes;
  DeterministicRng data_rng(29);
  for (int i = 0; i < cfg.clients; ++i) {
    std::vector<double> x(dim);
    for (double& v : x)
      v = static_cast<double>(uniform_below(data_rng, 2001)) / 1000.0 - 1.0;
    codes.push_back(topbinary_encode(x, 0.5));
  }
  DeterministicRng rng(31);
  auto [result, transcript] = compressed_secure_agg(codes, cfg, rng);
  ASSERT_TRUE(reconcile(transcript, cfg.strategy, cfg.clients, cfg.servers, dim,
                        result.support.size(), cfg.q)
                  .exact);

  FieldVector extra(fp_modulus(FixedPointParams{}), 1);
  extra.set(0, 1);
  transcript.append(Message{client(1), server(1), ProtocolTag::kFactors, 0,
                            Payload::pack(extra)});
  const ReconcileReport report =
      reconcile(transcript, cfg.strategy, cfg.clients, cfg.servers, dim,
                result.support.size(), cfg.q);
  EXPECT_FALSE(report.exact);
  EXPECT_TRUE(report.entries[0].matches());
  EXPECT_TRUE(report.entries[1].matches());
  EXPECT_FALSE(report.entries[2].matches());
  EXPECT_EQ(report.entries[2].measured_bits,
            report.entries[2].analytic_bits + 32);
}

}  // namespace
}  // namespace csagg::cost
