// Copyright 2026 The qsettle Authors
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

#include <gtest/gtest.h>

#include <cmath>
#include <set>

#include "helpers.hpp"

using namespace qsettle;
using namespace qsettle::testing;

TEST(QubitCount, KnownConfigurations) {
  EXPECT_EQ(qubit_count(16, 1, 0), 5u);
  EXPECT_EQ(qubit_count(16, 4, 0), 6u);
  EXPECT_EQ(qubit_count(128, 16, 0), 19u);
  EXPECT_EQ(qubit_count(16, 16, 0), 16u);
  EXPECT_EQ(qubit_count(16, 8, 1), 10u);
  EXPECT_EQ(qubit_count(6, 4, 0), 5u);
}

TEST(QubitCount, RejectsTooManyAncillas) {
  EXPECT_THROW(qubit_count(4, 5, 0), std::invalid_argument);
  EXPECT_THROW(qubit_count(4, 0, 0), std::invalid_argument);
}

TEST(Covering, RejectsInvalidSets) {
  EXPECT_THROW(Covering(4, 2, {{0, 1}, {2, 3}, {0, 1}}), std::invalid_argument);  // 3 sets
  EXPECT_THROW(Covering(4, 2, {{0, 1}, {2}}), std::invalid_argument);             // wrong size
  EXPECT_THROW(Covering(4, 2, {{0, 1}, {1, 2}}), std::invalid_argument);          // 3 uncovered
  EXPECT_THROW(Covering(4, 2, {{0, 1}, {2, 7}}), std::invalid_argument);          // out of range
}

TEST(Covering, PositionMapInvertsSets) {
  Covering cov(12, 4, {{1, 2, 3, 5}, {6, 7, 9, 10}, {4, 8, 0, 11}, {}});
  for (std::size_t r = 0; r < cov.registers(); ++r)
    for (std::size_t l = 0; l < cov.set(r).size(); ++l)
      EXPECT_EQ(cov.position(r, cov.set(r)[l]), static_cast<int>(l));
  EXPECT_EQ(cov.position(3, 0), -1);
  EXPECT_EQ(cov.nRegister(), 2u);
  EXPECT_TRUE(cov.disjoint());
}

TEST(BuildCovering, ExactDivisionIsDisjoint) {
  auto p = instance(16, 10, 4, 1);
  auto cov = build_covering(p, 4, 0, 3);
  ASSERT_EQ(cov.registers(), 4u);
  EXPECT_TRUE(cov.disjoint());
  for (std::size_t r = 0; r < 4; ++r) EXPECT_EQ(cov.members(r).size(), 4u);
}

TEST(BuildCovering, RedundantRegisters) {
  auto p = instance(16, 10, 4, 2);
  auto cov = build_covering(p, 8, 1, 5);
  ASSERT_EQ(cov.registers(), 4u);
  std::set<std::size_t> firstTwo;
  for (std::size_t r = 0; r < 2; ++r) {
    EXPECT_EQ(cov.set(r).size(), 8u);
    firstTwo.insert(cov.set(r).begin(), cov.set(r).end());
  }
  EXPECT_EQ(firstTwo.size(), 16u);
  for (std::size_t r = 2; r < 4; ++r) EXPECT_EQ(cov.members(r).size(), 8u);
  for (std::size_t i = 0; i < 16; ++i) EXPECT_GE(cov.cover_count(i), 1u);
  EXPECT_FALSE(cov.disjoint());
}

TEST(BuildCovering, PaddingDuplicatesWithinCluster) {
  auto p = instance(6, 4, 1, 4);
  auto cov = build_covering(p, 4, 0, 0);
  ASSERT_EQ(cov.registers(), 2u);
  std::set<std::size_t> all;
  std::size_t distinct = 0;
  for (std::size_t r = 0; r < 2; ++r) {
    EXPECT_EQ(cov.set(r).size(), 4u);
    all.insert(cov.set(r).begin(), cov.set(r).end());
    distinct += cov.members(r).size();
  }
  EXPECT_EQ(all.size(), 6u);
  EXPECT_EQ(distinct, 6u);
  EXPECT_TRUE(cov.disjoint());
}

TEST(BuildCovering, DeterministicGivenSeed) {
  auto p = instance(16, 8, 4, 9);
  EXPECT_EQ(build_covering(p, 4, 0, 11).sets(), build_covering(p, 4, 0, 11).sets());
}

TEST(BuildCovering, ClustersShareParties) {
  // Two components: transactions among parties {0,1,2} and among {3,4,5}.
  std::vector<Transaction> txs;
  for (std::size_t i = 0; i < 8; ++i) {
    const std::size_t base = (i % 2) ? 3 : 0;
    txs.push_back({base + i % 3, base + (i + 1) % 3, 1, 1.0, 0.0, SettlementKind::FOP});
  }
  auto p = SettlementProblem::make(6, 2, txs, Matrix(6, 2));
  auto d = transaction_distances(p);
  EXPECT_EQ(d[0][1], 9u);  // unreachable
  EXPECT_EQ(d[0][2], 1u);
  auto cov = build_covering(p, 4, 0, 1);
  for (std::size_t r = 0; r < 2; ++r) {
    std::set<std::size_t> parity;
    for (std::size_t i : cov.set(r)) parity.insert(i % 2);
    EXPECT_EQ(parity.size(), 1u);
  }
}

TEST(Partials, RecordFixesItsRegister) {
  // Ancilla bits b = (1, 0, 1, 0) and set (5, 9, 1, 12), counted from one.
  Covering cov(12, 4, {{1, 2, 3, 5}, {6, 7, 9, 10}, {4, 8, 0, 11}, {}});
  MeasurementRecord m{0b0101, 2};
  auto pa = partial_from_record(m, cov);
  EXPECT_EQ(pa.bits[4], 1);
  EXPECT_EQ(pa.bits[8], 0);
  EXPECT_EQ(pa.bits[0], 1);
  EXPECT_EQ(pa.bits[11], 0);
  std::size_t unset = 0;
  for (auto b : pa.bits) unset += b < 0;
  EXPECT_EQ(unset, 8u);
  EXPECT_FALSE(pa.complete());

  auto empty = partial_from_record({0b1111, 3}, cov);
  for (auto b : empty.bits) EXPECT_EQ(b, -1);
}

TEST(Partials, PaddedDuplicateTakesFirstPosition) {
  Covering cov(3, 2, {{0, 1}, {2, 2}});
  for (std::uint64_t b = 0; b < 4; ++b) {
    auto pa = partial_from_record({b, 1}, cov);
    EXPECT_EQ(pa.bits[2], static_cast<std::int8_t>(b & 1u));
    EXPECT_EQ(pa.bits[0], -1);
  }
}

TEST(GreedySampler, OneRecordPerRegister) {
  Covering cov(8, 2, {{0, 1}, {2, 3}, {4, 5}, {6, 7}});
  std::vector<MeasurementRecord> recs{{0b01, 2}, {0b11, 0}, {0b10, 3}, {0b00, 1}};
  auto out = greedy_sample_bitvectors(recs, cov, 1);
  EXPECT_EQ(out.recordsConsumed, 4u);
  EXPECT_EQ(out.vectors[0], (BitVector{1, 1, 0, 0, 1, 0, 0, 1}));
}

TEST(GreedySampler, LeftoversAreReusedFirstInFirstOut) {
  Covering cov(4, 2, {{0, 1}, {2, 3}});
  std::vector<MeasurementRecord> recs{{0b01, 0}, {0b10, 0}, {0b11, 0}, {0b00, 1}, {0b11, 1}};
  GreedySampler s(cov);
  std::size_t pos = 0;
  auto next = [&] { return recs.at(pos++); };
  EXPECT_EQ(s.next_vector(next), (BitVector{1, 0, 0, 0}));
  EXPECT_EQ(s.pending(), 2u);
  // Second vector: first leftover fixes register 0, the next leftover is kept.
  EXPECT_EQ(s.next_vector(next), (BitVector{0, 1, 1, 1}));
  EXPECT_EQ(s.pending(), 1u);
  EXPECT_EQ(s.consumed(), 5u);
}

TEST(GreedySampler, ThrowsWhenExhausted) {
  Covering cov(4, 2, {{0, 1}, {2, 3}});
  std::vector<MeasurementRecord> recs{{0, 0}, {0, 0}};
  EXPECT_THROW(greedy_sample_bitvectors(recs, cov, 1), std::runtime_error);
}

TEST(GreedySampler, RegisterSweepUsesExactlyNrRecords) {
  for (unsigned depth : {1u, 2u, 3u}) {
    auto p = instance(16, 8, 4, 3);
    auto cov = build_covering(p, 4, 0, 1);
    auto c = build_regpres(4, 2, depth);
    auto th = random_params(c.paramCount, depth);
    RegisterSweep sweep(c, th, 7);
    GreedySampler s(cov);
    for (int v = 0; v < 25; ++v) {
      s.next_vector(sweep);
      EXPECT_EQ(s.consumed(), static_cast<std::size_t>(4 * (v + 1)));
    }
    EXPECT_EQ(s.pending(), 0u);
  }
}

TEST(GreedySampler, CrossRegisterBitsDecorrelate) {
  Covering cov(4, 2, {{0, 1}, {2, 3}});
  auto c = build_regpres(2, 1, 2);
  auto th = random_params(c.paramCount, 4);
  StateVector st = run(c, th);
  auto recs = sample(st, 200000, 13, cov.partition());
  auto vecs = greedy_sample_bitvectors(recs, cov, 60000).vectors;
  auto cov_of = [&](std::size_t i, std::size_t j) {
    double mi = 0, mj = 0, mij = 0;
    for (const auto& x : vecs) {
      mi += x[i];
      mj += x[j];
      mij += x[i] * x[j];
    }
    const double n = static_cast<double>(vecs.size());
    return mij / n - (mi / n) * (mj / n);
  };
  for (std::size_t i : {0, 1})
    for (std::size_t j : {2, 3}) EXPECT_NEAR(cov_of(i, j), 0.0, 5.0 * 0.25 / std::sqrt(60000.0));
  // Bits of the same register keep the state's joint distribution.
  auto e = exact_marginals(st, cov);
  EXPECT_NEAR(cov_of(0, 1), e.qHat(0, 1) - e.pHat[0] * e.pHat[1], 0.01);
}

TEST(CouponCollector, UnseenRegisterProbabilityBound) {
  for (unsigned nr : {2u, 3u, 4u}) {
    const std::size_t Nr = std::size_t{1} << nr;
    auto c = build_regpres(1, nr, 1);
    auto th = random_params(c.paramCount, nr);
    StateVector st = run(c, th);
    BasisSampler sampler(st);
    for (std::size_t n : {Nr / 2, Nr, 2 * Nr, 4 * Nr}) {
      const int trials = 10000;
      int unseenFixed = 0, unseenAny = 0;
      CounterRng rng(derive_seed(nr, {n}));
      for (int t = 0; t < trials; ++t) {
        std::vector<std::uint8_t> hit(Nr, 0);
        for (std::size_t k = 0; k < n; ++k) hit[sampler.draw(rng) >> 1] = 1;
        unseenFixed += !hit[0];
        unseenAny += std::count(hit.begin(), hit.end(), 0) > 0;
      }
      const double bound = std::exp(-static_cast<double>(n) / static_cast<double>(Nr));
      const double sd = std::sqrt(bound * (1 - bound) / trials);
      EXPECT_LE(unseenFixed / double(trials), bound + 3 * sd) << "N_r=" << Nr << " n=" << n;
      EXPECT_LE(unseenAny / double(trials), std::min(1.0, Nr * bound) + 3 * sd);
    }
  }
}
