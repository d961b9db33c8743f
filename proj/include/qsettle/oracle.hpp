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

#pragma once

// Reference solvers for desk-scale instances.

#include <cmath>
#include <cstdint>
#include <limits>
#include <span>
#include <stdexcept>
#include <vector>

#include "qsettle/circuit.hpp"
#include "qsettle/encoding.hpp"
#include "qsettle/estimator.hpp"
#include "qsettle/problem.hpp"
#include "qsettle/simulator.hpp"

namespace qsettle {

inline constexpr std::size_t kMaxBruteForceBits = 22;
inline constexpr double kTieTolerance = 1e-9;

/// Bit i of index is x_i.
inline BitVector bits_of_index(std::uint64_t index, std::size_t I) {
  BitVector x(I);
  for (std::size_t i = 0; i < I; ++i) x[i] = (index >> i) & 1u;
  return x;
}

inline std::uint64_t index_of_bits(std::span<const std::uint8_t> x) {
  std::uint64_t idx = 0;
  for (std::size_t i = 0; i < x.size(); ++i)
    if (x[i]) idx |= std::uint64_t{1} << i;
  return idx;
}

struct BruteForceResult {
  BitVector xOpt;
  std::uint64_t indexOpt = 0;
  double costOpt = 0.0;
  std::vector<double> table;  // cost by index, when requested

  /// Indices whose cost is within tol of the optimum (needs the table).
  std::vector<std::uint64_t> optima(double tol = kTieTolerance) const {
    std::vector<std::uint64_t> out;
    for (std::uint64_t k = 0; k < table.size(); ++k)
      if (table[k] <= costOpt + tol) out.push_back(k);
    return out;
  }
};

/// Exhaustive minimization of cost_of_bitvector; the lowest index wins ties.
inline BruteForceResult brute_force(const QuboData& q, bool keepTable = false) {
  const std::size_t I = q.I();
  if (I > kMaxBruteForceBits) throw std::invalid_argument("brute_force: at most 22 transactions supported");
  BruteForceResult res;
  res.costOpt = std::numeric_limits<double>::infinity();
  const std::uint64_t n = std::uint64_t{1} << I;
  if (keepTable) res.table.resize(n);
  for (std::uint64_t k = 0; k < n; ++k) {
    BitVector x = bits_of_index(k, I);
    double c = cost_of_bitvector(q, x);
    if (keepTable) res.table[k] = c;
    if (c < res.costOpt - kTieTolerance) {
      res.costOpt = c;
      res.indexOpt = k;
    }
  }
  res.xOpt = bits_of_index(res.indexOpt, I);
  return res;
}

/// Depth-first branch and bound on the penalty form
/// -w.x + lambda * sum_l min(0, bal_l - lim_l + (V^T x)_l)^2.
inline BruteForceResult branch_and_bound(const QuboData& q) {
  const std::size_t I = q.I(), L = q.L();
  if (I > 40) throw std::invalid_argument("branch_and_bound: too many transactions");
  std::vector<double> freeGain(I + 1, 0.0);
  Matrix freeUp(I + 1, L);
  for (std::size_t k = I; k-- > 0;) {
    freeGain[k] = freeGain[k + 1] + q.wbase[k];
    for (std::size_t l = 0; l < L; ++l) freeUp(k, l) = freeUp(k + 1, l) + std::max(0.0, q.V(k, l));
  }
  BruteForceResult res;
  res.costOpt = std::numeric_limits<double>::infinity();
  std::vector<double> y(q.constParts);
  auto penalty = [&](std::size_t depth, bool bound) {
    double pen = 0.0;
    for (std::size_t l = 0; l < L; ++l) {
      double v = std::min(0.0, y[l] + (bound ? freeUp(depth, l) : 0.0));
      pen += v * v;
    }
    return q.lambda * pen;
  };
  auto rec = [&](auto&& self, std::size_t depth, double gain, std::uint64_t index) -> void {
    if (depth == I) {
      double c = -gain + penalty(depth, false);
      if (c < res.costOpt - kTieTolerance) {
        res.costOpt = c;
        res.indexOpt = index;
      } else if (c <= res.costOpt + kTieTolerance && index < res.indexOpt) {
        res.costOpt = std::min(res.costOpt, c);
        res.indexOpt = index;
      }
      return;
    }
    double lower = -(gain + freeGain[depth]) + penalty(depth, true);
    if (lower > res.costOpt + kTieTolerance) return;
    self(self, depth + 1, gain, index);
    for (std::size_t l = 0; l < L; ++l) y[l] += q.V(depth, l);
    self(self, depth + 1, gain + q.wbase[depth], index | (std::uint64_t{1} << depth));
    for (std::size_t l = 0; l < L; ++l) y[l] -= q.V(depth, l);
  };
  rec(rec, 0, 0.0, 0);
  res.xOpt = bits_of_index(res.indexOpt, I);
  return res;
}

struct ExpectationResult {
  double expectation = 0.0;    // E over greedy-sampled vectors at fixed slack
  double estimatorCost = 0.0;  // cost(exact_marginals) at the same slack
  std::vector<double> slack;
};

/// Exact expectation of the quadratic objective over the vectors produced by
/// greedy sampling with a disjoint covering, where each register's bits
/// follow that register's conditional ancilla distribution independently.
/// The slack is the estimator's optimal slack from the exact marginals.
inline ExpectationResult exact_expectation(const ParamCircuit& c, std::span<const double> params,
                                           const QuboData& q, const Covering& cov,
                                           const EstimatorOptions& opt = {MuMode::CrossRegister, 0.0, false}) {
  if (!cov.disjoint()) throw std::invalid_argument("exact_expectation: covering must be disjoint");
  require(q.I() == cov.bits(), "exact_expectation: covering mismatch");
  StateVector st = run(c, params);
  const auto part = cov.partition();
  const unsigned na = cov.nAncilla();
  const std::uint64_t nOut = std::uint64_t{1} << na;

  std::vector<std::size_t> regs;
  std::vector<std::vector<double>> cond;
  for (std::size_t r = 0; r < cov.registers(); ++r) {
    if (cov.members(r).empty()) continue;
    std::vector<double> pr(nOut, 0.0);
    double mass = 0.0;
    for (std::uint64_t a = 0; a < nOut; ++a) {
      pr[a] = std::norm(st.amplitudes[(r << part.nAncilla) | a]);
      mass += pr[a];
    }
    if (mass <= 0.0) throw std::invalid_argument("exact_expectation: a used register has zero probability");
    for (double& v : pr) v /= mass;
    regs.push_back(r);
    cond.push_back(std::move(pr));
  }
  require(regs.size() * na <= kMaxBruteForceBits + 8, "exact_expectation: enumeration too large");

  ExpectationResult out;
  MarginalEstimates e = exact_marginals(st, cov, opt);
  out.slack = optimal_slack(e.pHat, q);
  out.estimatorCost = cost_at(e, q, out.slack);

  const std::size_t G = regs.size();
  std::vector<std::uint64_t> digit(G, 0);
  BitVector x(q.I(), 0);
  while (true) {
    double prob = 1.0;
    for (std::size_t g = 0; g < G && prob > 0.0; ++g) prob *= cond[g][digit[g]];
    if (prob > 0.0) {
      for (std::size_t g = 0; g < G; ++g)
        for (std::size_t i : cov.members(regs[g])) x[i] = (digit[g] >> cov.position(regs[g], i)) & 1u;
      out.expectation += prob * quadratic_objective(q, x, out.slack);
    }
    std::size_t g = 0;
    while (g < G && ++digit[g] == nOut) digit[g++] = 0;
    if (g == G) break;
  }
  return out;
}

}  // namespace qsettle
