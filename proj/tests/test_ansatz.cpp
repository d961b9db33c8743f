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

#include <numbers>

#include "helpers.hpp"

using namespace qsettle;

namespace {

std::vector<double> random_theta(std::size_t n, CounterRng& rng) {
  std::vector<double> th(n);
  for (double& t : th) t = rng.uniform(-std::numbers::pi, std::numbers::pi);
  return th;
}

double max_imag(const StateVector& st) {
  double m = 0.0;
  for (const auto& a : st.amplitudes) m = std::max(m, std::abs(a.imag()));
  return m;
}

}  // namespace

TEST(ParamCounts, HardwareEfficient) {
  EXPECT_EQ(build_hwe(1, 4, 1).paramCount, 5u);
  EXPECT_EQ(build_hwe(4, 2, 4).paramCount, 24u);
  EXPECT_THROW(build_hwe(0, 0, 1), std::invalid_argument);
  EXPECT_THROW(build_hwe(1, 1, 0), std::invalid_argument);
}

TEST(ParamCounts, RegisterPreserving) {
  EXPECT_EQ(build_regpres(4, 2, 1).paramCount, 12u);
  for (unsigned d = 1; d <= 5; ++d) EXPECT_EQ(build_regpres(3, 2, d).paramCount, 3u + d * 6u);
  EXPECT_THROW(build_regpres(2, 0, 1), std::invalid_argument);
  EXPECT_THROW(build_regpres(2, 2, 0), std::invalid_argument);
}

TEST(RegisterPreserving, PermutationLayerOmittedAtDepthOne) {
  auto count_cnot = [](const ParamCircuit& c) {
    std::size_t n = 0;
    for (const auto& g : c.gates) n += g.kind == GateKind::CNOT;
    return n;
  };
  EXPECT_EQ(count_cnot(build_regpres(2, 3, 1)), 0u);
  EXPECT_GT(count_cnot(build_regpres(2, 3, 2)), 0u);
}

TEST(RegisterPreserving, ZeroAnglesGiveUniformSuperposition) {
  auto c = build_regpres(2, 2, 3);
  StateVector st = run(c, std::vector<double>(c.paramCount, 0.0));
  for (const auto& a : st.amplitudes) EXPECT_NEAR(std::abs(a - Amplitude(0.25, 0)), 0.0, 1e-14);
}

TEST(RegisterPreserving, OutputRegisterUniform) {
  CounterRng rng(4);
  for (unsigned d = 1; d <= 4; ++d) {
    auto c = build_regpres(2, 2, d);
    for (int t = 0; t < 100; ++t) {
      StateVector st = run(c, random_theta(c.paramCount, rng));
      EXPECT_LE(register_uniformity_deviation(st, c.partition()), 1e-10);
    }
  }
}

TEST(RegisterPreserving, AmplitudesStayReal) {
  CounterRng rng(5);
  for (unsigned d = 1; d <= 3; ++d) {
    auto rp = build_regpres(2, 3, d);
    auto hw = build_hwe(2, 3, d);
    EXPECT_LT(max_imag(run(rp, random_theta(rp.paramCount, rng))), 1e-10);
    EXPECT_LT(max_imag(run(hw, random_theta(hw.paramCount, rng))), 1e-10);
  }
  auto hw = build_hwe(4, 2, 2);
  EXPECT_LT(max_imag(run(hw, std::vector<double>(hw.paramCount, 0.0))), 1e-12);
}

TEST(Preservation, RegpresPasses) {
  for (unsigned d = 1; d <= 4; ++d) {
    auto res = is_register_preserving(build_regpres(2, 2, d), 50, 1e-10, d);
    EXPECT_TRUE(res.preserving) << "depth " << d << " deviation " << res.maxDeviation;
  }
}

TEST(Preservation, HardwareEfficientFailsWithWitness) {
  auto res = is_register_preserving(build_hwe(2, 2, 2), 20, 1e-10, 3);
  EXPECT_FALSE(res.preserving);
  ASSERT_TRUE(res.witness.has_value());
  EXPECT_GT(res.witness->deviation, 1e-10);
  EXPECT_EQ(res.witness->params.size(), build_hwe(2, 2, 2).paramCount);
}

TEST(Preservation, IdentityPasses) {
  ParamCircuit id;
  id.nAncilla = 2;
  id.nRegister = 2;
  id.kind = AnsatzKind::Custom;
  EXPECT_TRUE(is_register_preserving(id, 10, 1e-12).preserving);
}

TEST(Preservation, ClosedUnderConcatenation) {
  auto c = concatenate(build_regpres(2, 2, 2), build_regpres(2, 2, 3));
  EXPECT_EQ(c.paramCount, build_regpres(2, 2, 2).paramCount + build_regpres(2, 2, 3).paramCount);
  EXPECT_TRUE(is_register_preserving(c, 50, 1e-10).preserving);
  auto mixed = concatenate(build_regpres(2, 2, 2), build_hwe(2, 2, 1));
  EXPECT_FALSE(is_register_preserving(mixed, 20, 1e-10).preserving);
}

TEST(PermutedInput, DepthOneIsIdentity) {
  auto c = build_regpres(2, 2, 1);
  for (std::uint64_t r = 0; r < 4; ++r) {
    RunInput in = build_permuted_register_input(c, r);
    EXPECT_EQ(in.basis >> 2, r);
    EXPECT_FALSE(in.registerHadamard);
  }
}

TEST(PermutedInput, DeterministicRegisterAfterPermutation) {
  CounterRng rng(8);
  for (unsigned d : {2u, 3u, 4u}) {
    auto c = build_regpres(2, 3, d);
    auto f = register_permutation(c);
    ASSERT_TRUE(f.has_value());
    std::vector<int> hit(8, 0);
    auto th = random_theta(c.paramCount, rng);
    for (std::uint64_t r = 0; r < 8; ++r) {
      StateVector st = run(c, th, build_permuted_register_input(c, r));
      auto probs = exact_register_probs(st, c.partition());
      EXPECT_NEAR(probs[r], 1.0, 1e-12) << "depth " << d << " register " << r;
      hit[r] = 1;
    }
    for (int h : hit) EXPECT_EQ(h, 1);
  }
}

TEST(PermutedInput, Errors) {
  EXPECT_THROW(build_permuted_register_input(build_hwe(2, 2, 1), 0), std::invalid_argument);
  auto c = build_regpres(2, 2, 2);
  c.gates.push_back(Gate::h(3));
  EXPECT_THROW(build_permuted_register_input(c, 0), std::invalid_argument);
}

TEST(InvolutionRotation, SwapRotationPreservesRealInputs) {
  // SWAP of the two register qubits on 2-bit labels: 01 <-> 10.
  std::vector<std::uint64_t> swap{0, 2, 1, 3};
  for (std::uint64_t seed = 1; seed <= 10; ++seed) {
    auto res = check_involution_rotation(swap, 2, std::numbers::pi / 3, seed);
    EXPECT_TRUE(res.preserved) << res.deviation;
  }
  EXPECT_TRUE(check_involution_rotation(swap, 2, 0.0).preserved);
}

TEST(InvolutionRotation, ComplexInputsMayFail) {
  std::vector<std::uint64_t> swap{0, 2, 1, 3};
  double worst = 0.0;
  for (std::uint64_t seed = 1; seed <= 10; ++seed)
    worst = std::max(worst, check_involution_rotation(swap, 2, std::numbers::pi / 3, seed, true).deviation);
  RecordProperty("complex_input_max_deviation", std::to_string(worst));
  SUCCEED();
}

TEST(InvolutionRotation, RejectsNonInvolution) {
  std::vector<std::uint64_t> cycle{1, 2, 3, 0};
  EXPECT_THROW(check_involution_rotation(cycle, 1, 0.5), std::invalid_argument);
}

TEST(Qaoa, Layout) {
  auto diag = std::make_shared<const std::vector<double>>(std::vector<double>(8, 1.0));
  auto c = build_qaoa(3, 2, diag);
  EXPECT_EQ(c.paramCount, 4u);
  EXPECT_EQ(c.nAncilla, 3u);
  EXPECT_EQ(c.nRegister, 0u);
  StateVector st = run(c, std::vector<double>(4, 0.0));
  for (double p : st.probabilities()) EXPECT_NEAR(p, 1.0 / 8, 1e-14);
}
