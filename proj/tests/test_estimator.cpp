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
#include <numbers>

#include "helpers.hpp"

using namespace qsettle;
using namespace qsettle::testing;

namespace {

std::vector<PartialAssignment> partials(const std::vector<std::vector<int>>& rows, std::vector<std::uint64_t> regs) {
  std::vector<PartialAssignment> out;
  for (std::size_t m = 0; m < rows.size(); ++m) {
    PartialAssignment pa;
    for (int b : rows[m]) pa.bits.push_back(static_cast<std::int8_t>(b));
    pa.registerIndex = regs[m];
    out.push_back(pa);
  }
  return out;
}

// Cost by central differences of circuit_cost.
std::vector<double> finite_difference(const ParamCircuit& c, std::vector<double> th, const QuboData& q,
                                      const Covering& cov, const GradientOptions& go, double h = 1e-5) {
  std::vector<double> g(th.size());
  for (std::size_t d = 0; d < th.size(); ++d) {
    const double t0 = th[d];
    th[d] = t0 + h;
    const double fp = circuit_cost(c, th, q, cov, go).total();
    th[d] = t0 - h;
    const double fm = circuit_cost(c, th, q, cov, go).total();
    th[d] = t0;
    g[d] = (fp - fm) / (2 * h);
  }
  return g;
}

}  // namespace

TEST(Marginals, HandCountedStream) {
  Covering cov(3, 2, {{0, 1}, {1, 2}});
  // Four shots: two on register 0, two on register 1.
  auto pa = partials({{1, 1, -1}, {0, 1, -1}, {-1, 0, 1}, {-1, 1, 1}}, {0, 0, 1, 1});
  EstimatorOptions opt;
  opt.eps = 0.0;
  auto e = estimate_marginals(std::span<const PartialAssignment>(pa), cov, opt);
  EXPECT_DOUBLE_EQ(e.pHat[0], 0.5);
  EXPECT_DOUBLE_EQ(e.pHat[1], 0.75);
  EXPECT_DOUBLE_EQ(e.pHat[2], 1.0);
  EXPECT_DOUBLE_EQ(e.qHat(0, 1), 0.5);
  EXPECT_DOUBLE_EQ(e.qHat(1, 2), 0.5);
  EXPECT_DOUBLE_EQ(e.qHat(0, 2), 0.0);
  // Bits 0 and 2 never share a register: pure product.
  EXPECT_DOUBLE_EQ(e.muHat(0, 2), 1.0);
  EXPECT_DOUBLE_EQ(e.pij(0, 2), 0.5);
  // Bit 1 is seen twice without bit 0 and bit 0 never without bit 1.
  EXPECT_DOUBLE_EQ(e.muHat(0, 1), 0.0);
  EXPECT_DOUBLE_EQ(e.regFreq[0], 0.5);
  EXPECT_DOUBLE_EQ(e.counts.exclusive(1, 0), 2.0);

  opt.mode = MuMode::SeenProduct;
  auto lit = estimate_marginals(std::span<const PartialAssignment>(pa), cov, opt);
  EXPECT_DOUBLE_EQ(lit.muHat(0, 1), std::sqrt(2.0 * 4.0) / (std::sqrt(8.0) + 2.0));
}

TEST(Marginals, DisjointCoveringMuStructure) {
  auto p = instance(8, 6, 2, 1);
  auto cov = build_covering(p, 2, 0, 1);
  auto c = build_regpres(2, 2, 2);
  StateVector st = run(c, random_params(c.paramCount, 3));
  auto recs = sample(st, 5000, 1, cov.partition());
  auto e = estimate_marginals(std::span<const MeasurementRecord>(recs), cov);
  auto lit = estimate_marginals(std::span<const MeasurementRecord>(recs), cov, {MuMode::SeenProduct});
  for (std::size_t i = 0; i < 8; ++i)
    for (std::size_t j = 0; j < 8; ++j) {
      if (i == j) continue;
      const bool same = cov.joint_count(i, j) > 0;
      if (same) {
        EXPECT_EQ(e.muHat(i, j), 0.0);
        EXPECT_DOUBLE_EQ(e.pij(i, j), e.qHat(i, j));
        EXPECT_DOUBLE_EQ(lit.muHat(i, j), 0.5);
      } else {
        EXPECT_EQ(e.muHat(i, j), 1.0);
        EXPECT_DOUBLE_EQ(e.pij(i, j), e.pHat[i] * e.pHat[j]);
      }
    }
}

TEST(Marginals, FallbackForUnseenBits) {
  Covering cov(4, 2, {{0, 1}, {2, 3}});
  auto pa = partials({{1, 0, -1, -1}}, {0});
  auto e = estimate_marginals(std::span<const PartialAssignment>(pa), cov);
  EXPECT_EQ(e.pHat[2], 0.5);
  EXPECT_EQ(e.pFallback[2], 1);
  EXPECT_EQ(e.qHat(2, 3), 0.0);
  EXPECT_EQ(e.pHat[0], 1.0);
}

TEST(Marginals, SmallSeenFractionUsesNeutralValues) {
  Covering cov(4, 2, {{0, 1}, {2, 3}});
  std::vector<std::vector<int>> rows(100, {1, 1, -1, -1});
  std::vector<std::uint64_t> regs(100, 0);
  rows.push_back({-1, -1, 1, 1});
  regs.push_back(1);
  auto pa = partials(rows, regs);
  auto e = estimate_marginals(std::span<const PartialAssignment>(pa), cov);
  // Register 1 seen in 1/101 of the shots, below 1/(10 N_r) = 1/20.
  EXPECT_EQ(e.pHat[2], 0.5);
  EXPECT_EQ(e.qHat(2, 3), 0.25);
  EXPECT_EQ(e.pHat[0], 1.0);
}

TEST(ExactMarginals, BasisAndUniformStates) {
  Covering cov(8, 2, {{0, 1}, {2, 3}, {4, 5}, {6, 7}});
  StateVector basis(4, (2u << 2) | 0b11);
  auto e = exact_marginals(basis, cov);
  EXPECT_EQ(e.pHat[4], 1.0);
  EXPECT_EQ(e.pHat[5], 1.0);
  EXPECT_EQ(e.pHat[0], 0.5);  // never seen
  EXPECT_EQ(e.regFreq[2], 1.0);

  auto c = build_regpres(2, 2, 1);
  auto u = exact_marginals(run(c, std::vector<double>(c.paramCount, 0.0)), cov);
  for (double p : u.pHat) EXPECT_NEAR(p, 0.5, 1e-12);
  for (double f : u.regFreq) EXPECT_NEAR(f, 0.25, 1e-12);
}

TEST(ExactMarginals, ShotEstimatesConverge) {
  for (unsigned na : {1u, 2u, 4u}) {
    auto p = instance(8, 6, 2, na);
    auto cov = build_covering(p, na, 0, na);
    const unsigned nr = cov.nRegister();
    auto c = build_regpres(na, nr, 2);
    StateVector st = run(c, random_params(c.paramCount, 10 + na));
    auto exact = exact_marginals(st, cov);
    const std::size_t shots = 100000;
    auto recs = sample(st, shots, 77, cov.partition());
    auto e = estimate_marginals(std::span<const MeasurementRecord>(recs), cov);
    const double Nr = static_cast<double>(cov.registers());
    for (std::size_t i = 0; i < 8; ++i) {
      const double pi = exact.pHat[i];
      EXPECT_NEAR(e.pHat[i], pi, 5 * std::sqrt(pi * (1 - pi) * Nr / shots) + 1e-12);
      for (std::size_t j = 0; j < 8; ++j) {
        if (i == j) continue;
        const double pij = exact.pij(i, j);
        EXPECT_NEAR(e.pij(i, j), pij, 5 * std::sqrt(std::max(pij * (1 - pij), 1e-6) * Nr / shots));
      }
    }
  }
}

TEST(ExactMarginals, SampledHistogramMatchesRecordCounting) {
  auto p = instance(8, 6, 2, 5);
  auto cov = build_covering(p, 2, 0, 5);
  auto c = build_hwe(2, 2, 2);
  StateVector st = run(c, random_params(c.paramCount, 5));
  auto probs = st.probabilities();
  auto hist = multinomial_histogram(probs, 3000, 8);
  std::vector<MeasurementRecord> recs;
  for (std::uint64_t b = 0; b < hist.size(); ++b)
    for (std::uint32_t k = 0; k < hist[b]; ++k) recs.push_back(split_basis(b, cov.partition()));
  auto a = finalize(aggregate(mass_table(std::span<const std::uint32_t>(hist), cov.partition()), cov), cov);
  auto b = estimate_marginals(std::span<const MeasurementRecord>(recs), cov);
  for (std::size_t i = 0; i < 8; ++i) {
    EXPECT_NEAR(a.pHat[i], b.pHat[i], 1e-12);
    for (std::size_t j = 0; j < 8; ++j) EXPECT_NEAR(a.pij(i, j), b.pij(i, j), 1e-12);
  }
}

TEST(Slack, ClosedFormIsOptimal) {
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    auto p = instance(8, 5, 2, seed);
    auto q = build_qubo(p, 1.0);
    auto cov = build_covering(p, 2, 0, seed);
    auto c = build_regpres(2, 2, 2);
    auto e = exact_marginals(run(c, random_params(c.paramCount, seed)), cov);
    auto s = optimal_slack(e.pHat, q);
    const double best = cost_at(e, q, s);
    CounterRng rng(seed);
    for (int probe = 0; probe < 1000; ++probe) {
      std::vector<double> t(q.L());
      for (std::size_t l = 0; l < t.size(); ++l)
        t[l] = (probe % 2) ? std::max(0.0, s[l] + rng.uniform(-0.5, 0.5)) : rng.uniform(0.0, 3.0);
      EXPECT_LE(best, cost_at(e, q, t) + 1e-9);
    }
  }
}

TEST(Slack, ZeroMarginalsBalancedAccounts) {
  auto p = SettlementProblem::make(2, 2, {{0, 1, 1, 2.0, 1.0, SettlementKind::DVP}}, Matrix(2, 2));
  auto q = build_qubo(p, 1.0);
  for (double v : optimal_slack(std::vector<double>{0.0}, q)) EXPECT_EQ(v, 0.0);
  // Settling drains the sender's security below zero: its slack clips at zero.
  auto s = optimal_slack(std::vector<double>{1.0}, q);
  EXPECT_EQ(s[0 * 2 + 1], 0.0);
  EXPECT_EQ(s[1 * 2 + 1], 2.0);
}

TEST(Cost, UniformStateWithoutPenalty) {
  auto p = instance(8, 5, 2, 3);
  auto q = build_qubo(p, 0.0);
  auto cov = build_covering(p, 2, 0, 3);
  auto c = build_regpres(2, 2, 1);
  auto e = exact_marginals(run(c, std::vector<double>(c.paramCount, 0.0)), cov);
  auto rep = cost(e, q, 1.0);
  EXPECT_NEAR(rep.cost, -4.0, 1e-12);
  EXPECT_NEAR(rep.regPenalty, 0.0, 1e-20);
}

TEST(Cost, FullEncodingIsShotMean) {
  auto p = instance(6, 4, 1, 2);
  auto q = build_qubo(p, 1.0);
  auto cov = full_covering(6);
  auto c = build_hwe(6, 0, 2);
  StateVector st = run(c, random_params(c.paramCount, 2));
  auto recs = sample(st, 4000, 9, cov.partition());
  auto e = estimate_marginals(std::span<const MeasurementRecord>(recs), cov);
  CounterRng rng(1);
  for (int trial = 0; trial < 5; ++trial) {
    std::vector<double> s(q.L());
    for (double& v : s) v = rng.uniform(0.0, 2.0);
    double mean = 0.0;
    for (const auto& m : recs) mean += quadratic_objective(q, bits(m.ancillaBits, 6), s);
    mean /= static_cast<double>(recs.size());
    EXPECT_NEAR(cost_at(e, q, s), mean, 1e-12 * std::max(1.0, std::abs(mean)));
  }
}

TEST(Cost, RegularizationVanishesOnlyWhenUniform) {
  EXPECT_EQ(regularization(std::vector<double>{0.25, 0.25, 0.25, 0.25}, 2.0), 0.0);
  EXPECT_NEAR(regularization(std::vector<double>{0.5, 0.5, 0.0, 0.0}, 2.0), 2.0 * 0.25, 1e-15);
  auto p = instance(8, 5, 2, 6);
  auto cov = build_covering(p, 2, 0, 6);
  auto c = build_regpres(2, 2, 3);
  StateVector st = run(c, random_params(c.paramCount, 6));
  double prev = 1.0;
  for (std::size_t shots : {1000u, 100000u}) {
    auto r = cost(sampled_marginals(st, cov, shots, 3), build_qubo(p, 1.0), 1.0).regPenalty;
    EXPECT_GE(r, 0.0);
    EXPECT_LT(r, 40.0 / shots);
    prev = r;
  }
  EXPECT_LT(prev, 1e-3);
}

TEST(Gradient, MatchesFiniteDifferences) {
  for (std::uint64_t seed = 0; seed < 2; ++seed)
    for (unsigned depth : {1u, 2u, 3u})
      for (bool regpres : {true, false}) {
        auto p = instance(8, 5, 2, seed + 20);
        auto q = build_qubo(p, 1.0);
        auto cov = build_covering(p, 2, 0, seed);
        auto c = regpres ? build_regpres(2, 2, depth) : build_hwe(2, 2, depth);
        auto th = random_params(c.paramCount, seed * 7 + depth);
        GradientOptions go;
        go.eta = regpres ? 0.0 : 1.0;
        auto rep = cost_and_gradient(c, th, q, cov, go);
        auto fd = finite_difference(c, th, q, cov, go);
        for (std::size_t d = 0; d < fd.size(); ++d)
          EXPECT_NEAR((*rep.gradient)[d], fd[d], 1e-6) << (regpres ? "regpres" : "hwe") << " d=" << depth;
      }
}

TEST(Gradient, QuotientRuleForRegisterPreservingCircuits) {
  auto p = instance(8, 5, 2, 4);
  auto q = build_qubo(p, 0.7);
  auto cov = build_covering(p, 2, 0, 4);
  auto c = build_regpres(2, 2, 2);
  auto th = random_params(c.paramCount, 4);
  GradientOptions go;
  go.fixedRegisterMass = false;
  auto a = cost_and_gradient(c, th, q, cov, go);
  go.fixedRegisterMass = true;
  auto b = cost_and_gradient(c, th, q, cov, go);
  for (std::size_t d = 0; d < c.paramCount; ++d) EXPECT_NEAR((*a.gradient)[d], (*b.gradient)[d], 1e-10);
}

TEST(Gradient, SymmetricPointWithoutPenalty) {
  // theta = 0, lambda = 0: cost = -sum p_i, each RY on |+> moves p by 1/2 per radian.
  Covering cov(8, 2, {{0, 1}, {2, 3}, {4, 5}, {6, 7}});
  auto p = instance(8, 5, 2, 1);
  auto q = build_qubo(p, 0.0);
  auto c = build_regpres(2, 2, 1);
  auto rep = cost_and_gradient(c, std::vector<double>(c.paramCount, 0.0), q, cov, {});
  const auto& g = *rep.gradient;
  EXPECT_NEAR(g[0], -2.0, 1e-12);  // every register's bit at position 0
  EXPECT_NEAR(g[1], -2.0, 1e-12);
  for (std::size_t d = 2; d < g.size(); ++d) EXPECT_NEAR(g[d], -1.0, 1e-12);  // half the registers
}

TEST(Gradient, RejectsNonShiftableCircuits) {
  auto p = instance(4, 3, 1, 1);
  auto q = build_qubo(p, 1.0);
  auto qc = qaoa_circuit(q, std::vector<double>(q.L(), 0.0), 1);
  EXPECT_THROW(cost_and_gradient(qc, std::vector<double>(2, 0.1), q, full_covering(4), {}), std::invalid_argument);

  ParamCircuit shared = build_hwe(1, 1, 1);
  shared.gates[shared.prepCount + 1].slot = 0;
  shared.paramCount = 1;
  Covering cov(2, 1, {{0}, {1}});
  auto q2 = build_qubo(instance(2, 3, 0, 1), 1.0);
  EXPECT_THROW(cost_and_gradient(shared, std::vector<double>{0.3}, q2, cov, {}), std::invalid_argument);

  ParamCircuit cry = build_regpres(1, 1, 1);
  cry.kind = AnsatzKind::Custom;
  EXPECT_THROW(cost_and_gradient(cry, std::vector<double>{0.1, 0.2}, q2, cov, {}), std::invalid_argument);
}

TEST(Gradient, ShotModeIsUnbiasedOnAverage) {
  auto p = instance(8, 5, 2, 2);
  auto q = build_qubo(p, 1.0);
  auto cov = build_covering(p, 2, 0, 2);
  auto c = build_regpres(2, 2, 2);
  auto th = random_params(c.paramCount, 2);
  auto exact = *cost_and_gradient(c, th, q, cov, {}).gradient;
  std::vector<double> acc(exact.size(), 0.0);
  const int reps = 20;
  GradientOptions go;
  go.nShots = 20000;
  for (int k = 0; k < reps; ++k) {
    go.seed = static_cast<std::uint64_t>(k);
    auto g = *cost_and_gradient(c, th, q, cov, go).gradient;
    for (std::size_t d = 0; d < g.size(); ++d) acc[d] += g[d] / reps;
  }
  for (std::size_t d = 0; d < exact.size(); ++d) EXPECT_NEAR(acc[d], exact[d], 0.05 + 0.05 * std::abs(exact[d]));
}
