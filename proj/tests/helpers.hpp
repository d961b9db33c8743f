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

#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "qsettle/qsettle.hpp"

namespace qsettle::testing {

inline std::string data_path(const std::string& name) { return std::string(QSETTLE_DATA_DIR) + "/" + name; }

inline const std::vector<Transaction>& sample_source() {
  static const std::vector<Transaction> src = load_transactions(data_path("sample_trades.csv"));
  return src;
}

/// Normalized single-security instance drawn from the sample trades.
inline SettlementProblem instance(std::size_t I, std::size_t K, std::size_t R, std::uint64_t seed) {
  GenerateOptions opts;
  opts.single_security = true;
  return normalize(generate_instance(sample_source(), I, K, R, seed, opts));
}

/// Direct evaluation of -w.x + lambda * sum_l (bal_l - lim_l + (V^T x)_l - s_l)^2.
inline double penalty_objective(const SettlementProblem& p, double lambda, const BitVector& x,
                                const std::vector<double>& s) {
  double val = 0.0;
  for (std::size_t i = 0; i < p.I; ++i) val -= p.weights[i] * x[i];
  for (std::size_t k = 0; k < p.K; ++k)
    for (std::size_t j = 0; j < p.J; ++j) {
      double y = p.balances(k, j) - p.limits(k, j) - s[k * p.J + j];
      for (std::size_t i = 0; i < p.I; ++i)
        if (x[i]) y += p.transfer(i, k, j);
      val += lambda * y * y;
    }
  return val;
}

/// Post-settlement balance minus limit for every (party, asset).
inline std::vector<double> headroom(const SettlementProblem& p, const BitVector& x) {
  std::vector<double> y(p.K * p.J);
  for (std::size_t k = 0; k < p.K; ++k)
    for (std::size_t j = 0; j < p.J; ++j) {
      double v = p.balances(k, j) - p.limits(k, j);
      for (std::size_t i = 0; i < p.I; ++i)
        if (x[i]) v += p.transfer(i, k, j);
      y[k * p.J + j] = v;
    }
  return y;
}

inline bool feasible(const SettlementProblem& p, const BitVector& x, double tol = 1e-9) {
  for (double v : headroom(p, x))
    if (v < -tol) return false;
  return true;
}

inline std::size_t popcount(const BitVector& x) {
  std::size_t n = 0;
  for (auto b : x) n += b;
  return n;
}

inline BitVector bits(std::uint64_t index, std::size_t n) {
  BitVector x(n);
  for (std::size_t i = 0; i < n; ++i) x[i] = (index >> i) & 1u;
  return x;
}

}  // namespace qsettle::testing
