// Copyright 2026 The meanking Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.


#include <cmath>
#include <vector>

#include <gtest/gtest.h>

#include "meanking/attack.hpp"
#include "meanking/bases.hpp"
#include "meanking/protocol.hpp"
#include "meanking/retrodiction.hpp"

namespace meanking {
namespace {

const Strategy& strategy_for(std::size_t d) {
  static const Strategy s2 = build_strategy(gen_mub(2));
  static const Strategy s3 = build_strategy(gen_mub(3));
  return d == 2 ? s2 : s3;
}

ProtocolConfig config(std::size_t d, std::size_t rounds, std::uint64_t seed, double test_fraction = 0.1,
                      std::size_t n = 1) {
  ProtocolConfig cfg;
  cfg.d = d;
  cfg.n = n;
  cfg.rounds = rounds;
  cfg.test_fraction = test_fraction;
  cfg.seed = seed;
  return cfg;
}

double binomial_sigma(double p, std::size_t trials) {
  return std::sqrt(p * (1.0 - p) / static_cast<double>(trials));
}

TEST(StreamRng, StreamsAreReproducibleAndDistinct) {
  StreamRng a(5, 0), b(5, 0), c(5, 1), e(6, 0);
  const auto va = a(), vb = b(), vc = c(), ve = e();
  EXPECT_EQ(va, vb);
  EXPECT_NE(va, vc);
  EXPECT_NE(va, ve);
  StreamRng r(1, 2);
  for (int k = 0; k < 1000; ++k) {
    const double u = r.uniform();
    EXPECT_GE(u, 0.0);
    EXPECT_LT(u, 1.0);
    EXPECT_LT(r.below(7), 7u);
  }
}

TEST(StreamRng, SampleSkipsZeroWeights) {
  StreamRng r(3, 3);
  const std::vector<double> w{0.0, 1.0, 0.0, 3.0, 0.0};
  std::size_t counts[5] = {};
  for (int k = 0; k < 40000; ++k) ++counts[r.sample(w)];
  EXPECT_EQ(counts[0] + counts[2] + counts[4], 0u);
  EXPECT_NEAR(counts[3] / 40000.0, 0.75, 4.0 * binomial_sigma(0.75, 40000));
}

TEST(Honest, PerfectAgreement) {
  for (std::size_t d : {2u, 3u}) {
    for (std::uint64_t seed : {1u, 2u, 99u}) {
      const auto t = run_protocol(config(d, 10000, seed), strategy_for(d));
      ASSERT_EQ(t.records.size(), 10000u);
      EXPECT_EQ(agreement_rate(t), 1.0);
      EXPECT_TRUE(t.accepted);
      const auto sift = sift_and_test(t);
      EXPECT_EQ(sift.keys.alice_key, sift.keys.bob_key);
      EXPECT_EQ(sift.keys.alice_key.size(), 10000u - 1000u);
      EXPECT_EQ(sift.test_indices.size(), 1000u);
    }
  }
}

TEST(Honest, BlocksOfTwoAgree) {
  const auto t = run_protocol(config(2, 2000, 4, 0.2, 2), strategy_for(2));
  EXPECT_EQ(t.records.size(), 4000u);
  EXPECT_EQ(agreement_rate(t), 1.0);
  EXPECT_TRUE(t.accepted);
}

TEST(Honest, BobOutcomesAreUniform) {
  for (std::size_t d : {2u, 3u}) {
    const std::size_t k = d + 1;
    const auto t = run_protocol(config(d, 30000, 7), strategy_for(d));
    std::vector<std::size_t> basis_count(k, 0);
    std::vector<std::size_t> counts(k * d, 0);
    for (const auto& r : t.records) {
      ASSERT_LT(r.b, k);
      ASSERT_LT(r.i, d);
      ++basis_count[r.b];
      ++counts[r.b * d + r.i];
    }
    const double pd = 1.0 / static_cast<double>(d);
    for (std::size_t b = 0; b < k; ++b) {
      const double pk = 1.0 / static_cast<double>(k);
      EXPECT_NEAR(basis_count[b] / 30000.0, pk, 4.0 * binomial_sigma(pk, 30000));
      for (std::size_t i = 0; i < d; ++i) {
        const double f = static_cast<double>(counts[b * d + i]) / static_cast<double>(basis_count[b]);
        EXPECT_NEAR(f, pd, 4.0 * binomial_sigma(pd, basis_count[b])) << d << " " << b << " " << i;
      }
    }
  }
}

TEST(Honest, AliceMarginalIndependentOfBasis) {
  // Chi-square test of independence between b and x over 1e5 rounds at d = 2.
  // 3 x 8 table, 14 degrees of freedom, critical value 36.12 at level 1e-3.
  const Strategy& s = strategy_for(2);
  const auto t = run_protocol(config(2, 100000, 2026), s);
  std::vector<std::vector<double>> table(3, std::vector<double>(s.size(), 0.0));
  for (const auto& r : t.records) table[r.b][guessing_function_index(r.x, 2)] += 1.0;
  std::vector<double> row(3, 0.0), col(s.size(), 0.0);
  for (std::size_t b = 0; b < 3; ++b) {
    for (std::size_t x = 0; x < s.size(); ++x) {
      row[b] += table[b][x];
      col[x] += table[b][x];
    }
  }
  double chi2 = 0.0;
  for (std::size_t b = 0; b < 3; ++b) {
    for (std::size_t x = 0; x < s.size(); ++x) {
      const double expected = row[b] * col[x] / 100000.0;
      chi2 += (table[b][x] - expected) * (table[b][x] - expected) / expected;
    }
  }
  EXPECT_LT(chi2, 36.12);
  // The marginal is the POVM weight itself.
  for (std::size_t x = 0; x < s.size(); ++x) {
    EXPECT_NEAR(col[x] / 100000.0, 0.125, 4.0 * binomial_sigma(0.125, 100000));
  }
}

TEST(Attacked, InterceptResendAgreementMatchesEnumeration) {
  for (std::size_t d : {2u, 3u}) {
    const Strategy& s = strategy_for(d);
    const auto am = intercept_resend(s.basis_set, 1, 0, 1.0);
    const double predicted = 1.0 - detection_probability(ProductStrategy(s, 1), am);
    const std::size_t rounds = 20000;
    const auto t = run_protocol(config(d, rounds, 11), s, am);
    EXPECT_NEAR(agreement_rate(t), predicted, 4.0 * binomial_sigma(predicted, rounds)) << d;
    EXPECT_LT(agreement_rate(t), 1.0);
  }
}

TEST(Attacked, QubitInterceptResendRate) {
  // Eve measuring in one of three mutually unbiased qubit bases is caught in
  // a sixth of all rounds.
  const Strategy& s = strategy_for(2);
  const auto am = intercept_resend(s.basis_set, 1, 0, 1.0);
  EXPECT_NEAR(detection_probability(ProductStrategy(s, 1), am), 1.0 / 6.0, 1e-10);
}

TEST(Attacked, InterceptResendOnPairs) {
  const Strategy& s = strategy_for(2);
  const auto am = intercept_resend(s.basis_set, 2, 1, 1.0);
  const auto t = run_protocol(config(2, 5000, 12, 0.0, 2), s, am);
  const double predicted = 5.0 / 6.0;  // independent per round
  EXPECT_NEAR(agreement_rate(t), predicted, 4.0 * binomial_sigma(predicted, t.records.size()));
}

TEST(Attacked, ScalarFormAttackIsHarmless) {
  const Strategy& s = strategy_for(2);
  CVector e(2);
  e << 0.6, Complex(0.0, 0.8);
  std::vector<CMatrix> v{CMatrix::Identity(2, 2) / std::sqrt(2.0), CMatrix::Identity(2, 2) / std::sqrt(2.0)};
  const auto am = scalar_form_attack(2, 1, e, v);
  const auto t = run_protocol(config(2, 5000, 13), s, am);
  EXPECT_EQ(agreement_rate(t), 1.0);
  EXPECT_TRUE(t.accepted);
}

TEST(Determinism, SameInputsSameTranscript) {
  const Strategy& s = strategy_for(3);
  const auto am = intercept_resend(s.basis_set, 1, 2, 0.5);
  const auto a = run_protocol(config(3, 3000, 77), s, am);
  const auto b = run_protocol(config(3, 3000, 77), s, am);
  ASSERT_EQ(a.records.size(), b.records.size());
  for (std::size_t k = 0; k < a.records.size(); ++k) {
    EXPECT_EQ(a.records[k].b, b.records[k].b);
    EXPECT_EQ(a.records[k].i, b.records[k].i);
    EXPECT_EQ(a.records[k].x.values, b.records[k].x.values);
    EXPECT_EQ(a.records[k].i_prime, b.records[k].i_prime);
  }
  EXPECT_EQ(a.test_indices, b.test_indices);
  EXPECT_EQ(a.accepted, b.accepted);
  const auto c = run_protocol(config(3, 3000, 78), s, am);
  std::size_t differ = 0;
  for (std::size_t k = 0; k < a.records.size(); ++k) differ += a.records[k].b != c.records[k].b;
  EXPECT_GT(differ, 100u);
}

TEST(Sift, InjectedDisagreementIsCaught) {
  auto t = run_protocol(config(2, 500, 5, 1.0), strategy_for(2));
  EXPECT_TRUE(sift_and_test(t).accepted);
  t.records[321].i_prime = 1 - t.records[321].i;
  const auto sift = sift_and_test(t);
  EXPECT_FALSE(sift.accepted);
  EXPECT_EQ(sift.test_indices.size(), 500u);
  EXPECT_TRUE(sift.keys.alice_key.empty());
}

TEST(Sift, TestCountAndKeyPartition) {
  auto t = run_protocol(config(3, 101, 5, 0.25), strategy_for(3));
  const auto sift = sift_and_test(t);
  EXPECT_EQ(sift.test_indices.size(), 26u);  // ceil(0.25 * 101)
  EXPECT_TRUE(std::is_sorted(sift.test_indices.begin(), sift.test_indices.end()));
  EXPECT_EQ(std::adjacent_find(sift.test_indices.begin(), sift.test_indices.end()), sift.test_indices.end());
  EXPECT_EQ(sift.keys.bob_key.size(), 75u);
  t.config.test_fraction = 0.0;
  EXPECT_TRUE(sift_and_test(t).test_indices.empty());
}

TEST(Sift, AcceptanceFollowsPerTestSurvival) {
  // With disagreement rate q and m tested positions, acceptance has
  // probability (1 - q)^m.
  const Strategy& s = strategy_for(2);
  const auto am = intercept_resend(s.basis_set, 1, 0, 1.0);
  const double q = detection_probability(ProductStrategy(s, 1), am);
  const std::size_t rounds = 20;
  const std::size_t runs = 4000;
  std::size_t accepted = 0;
  for (std::size_t seed = 0; seed < runs; ++seed) {
    accepted += run_protocol(config(2, rounds, 1000 + seed, 0.5), s, am).accepted;
  }
  const double predicted = std::pow(1.0 - q, 10.0);
  EXPECT_NEAR(static_cast<double>(accepted) / runs, predicted, 4.0 * binomial_sigma(predicted, runs));
}

TEST(AgreementRate, EdgeCases) {
  Transcript t;
  EXPECT_EQ(agreement_rate(t), 1.0);
  for (std::size_t k = 0; k < 10; ++k) t.records.push_back(RoundRecord{0, 0, GuessingFunction{{1, 1, 1}}, 1});
  EXPECT_EQ(agreement_rate(t), 0.0);
  t.records[3].i_prime = 0;
  EXPECT_DOUBLE_EQ(agreement_rate(t), 0.1);
}

TEST(Config, Validation) {
  const Strategy& s = strategy_for(2);
  EXPECT_THROW(run_protocol(config(3, 10, 1), s), DimensionError);
  EXPECT_THROW(run_protocol(config(2, 0, 1), s), std::invalid_argument);
  EXPECT_THROW(run_protocol(config(2, 10, 1, 1.5), s), std::invalid_argument);
  EXPECT_THROW(run_protocol(config(2, 10, 1, 0.1, 0), s), std::invalid_argument);
  EXPECT_THROW(run_protocol(config(2, 10, 1), s, identity_attack(2, 2)), DimensionError);
  auto broken = identity_attack(2);
  broken.kraus[0] *= 2.0;
  EXPECT_THROW(run_protocol(config(2, 10, 1), s, broken), AttackModelError);
}

}  // namespace
}  // namespace meanking
