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

// Transaction-settlement instances and their mixed-binary QUBO data.
//
// A settlement problem has K parties, J assets (asset 0 is cash) and I
// transactions. Transaction i changes the balance of party k by the vector
// v_ik in R^J. Settling a subset x in {0,1}^I is feasible when
//   sum_i x_i v_ik + bal_k - lim_k >= 0   for every party k.
// With slack s_k >= 0 and penalty weight lambda the problem becomes
//   min_{x, s>=0}  x^T A x + b(s)^T x + c(s)
// with A = lambda V V^T, b_i(s) = -w_i + 2 lambda sum_k (bal_k - lim_k - s_k) . v_ik
// and c(s) = lambda sum_k |bal_k - lim_k - s_k|^2.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numeric>
#include <span>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <vector>

#include "qsettle/matrix.hpp"
#include "qsettle/rng.hpp"

namespace qsettle {

using BitVector = std::vector<std::uint8_t>;

enum class SettlementKind { DVP, FOP };

inline const char* to_string(SettlementKind k) { return k == SettlementKind::DVP ? "DVP" : "FOP"; }

inline SettlementKind settlement_kind_from_string(const std::string& s) {
  if (s == "DVP") return SettlementKind::DVP;
  if (s == "FOP") return SettlementKind::FOP;
  throw std::invalid_argument("unknown SETTLEMENT_TYPE '" + s + "'");
}

/// One settlement instruction. The security leg moves `quantity` units of
/// asset `security` from sender to receiver; for DVP the cash leg moves
/// `consideration` from receiver to sender. FOP ignores `consideration`.
struct Transaction {
  std::size_t sender = 0;
  std::size_t receiver = 1;
  std::size_t security = 1;
  double quantity = 0.0;
  double consideration = 0.0;
  SettlementKind kind = SettlementKind::DVP;

  double cash_leg() const { return kind == SettlementKind::DVP ? consideration : 0.0; }

  friend bool operator==(const Transaction&, const Transaction&) = default;
};

inline void validate_transaction(const Transaction& t) {
  require(t.sender != t.receiver, "transaction sender equals receiver");
  require(std::isfinite(t.quantity) && t.quantity > 0.0, "transaction quantity must be positive");
  require(std::isfinite(t.consideration) && t.consideration >= 0.0,
          "transaction consideration must be non-negative");
  require(t.security >= 1, "transaction security index 0 is reserved for cash");
}

struct SettlementProblem {
  std::size_t I = 0;  // transactions
  std::size_t K = 0;  // parties
  std::size_t J = 0;  // assets, 0 = cash
  std::vector<Transaction> transactions;
  Matrix balances;  // K x J
  Matrix limits;    // K x J
  // Per (party, asset) divisor applied to every transfer; set by normalize().
  Matrix scales;    // K x J
  std::vector<double> weights;
  std::uint64_t seed = 0;

  friend bool operator==(const SettlementProblem&, const SettlementProblem&) = default;

  /// Builds a problem with unit weights, zero limits and unit scales unless given.
  static SettlementProblem make(std::size_t K, std::size_t J, std::vector<Transaction> txs,
                                Matrix balances, Matrix limits = {}, std::vector<double> weights = {},
                                std::uint64_t seed = 0) {
    SettlementProblem p;
    p.I = txs.size();
    p.K = K;
    p.J = J;
    p.transactions = std::move(txs);
    p.balances = std::move(balances);
    p.limits = limits.empty() ? Matrix(K, J) : std::move(limits);
    p.scales = Matrix(K, J, 1.0);
    p.weights = weights.empty() ? std::vector<double>(p.I, 1.0) : std::move(weights);
    p.seed = seed;
    p.validate();
    return p;
  }

  void validate() const {
    require(transactions.size() == I, "transaction count does not match I");
    require(K >= 2, "need at least two parties");
    require(J >= 1, "need at least one asset");
    require(balances.rows() == K && balances.cols() == J, "balances must be K x J");
    require(limits.rows() == K && limits.cols() == J, "limits must be K x J");
    require(scales.rows() == K && scales.cols() == J, "scales must be K x J");
    require(weights.size() == I, "weights must have length I");
    for (const auto& t : transactions) {
      validate_transaction(t);
      require(t.sender < K && t.receiver < K, "transaction party index out of range");
      require(t.security < J, "transaction security index out of range");
    }
    for (double w : weights) require(std::isfinite(w) && w > 0.0, "weights must be strictly positive");
    for (double b : balances.flat()) require(std::isfinite(b), "balances must be finite");
    for (double l : limits.flat()) require(std::isfinite(l), "limits must be finite");
    for (double g : scales.flat()) require(std::isfinite(g) && g > 0.0, "scales must be positive");
  }

  /// Unscaled balance change of party k in asset j caused by transaction i.
  double raw_transfer(std::size_t i, std::size_t k, std::size_t j) const {
    const Transaction& t = transactions[i];
    double v = 0.0;
    if (j == t.security) {
      if (k == t.sender) v -= t.quantity;
      if (k == t.receiver) v += t.quantity;
    }
    if (j == 0) {
      if (k == t.receiver) v -= t.cash_leg();
      if (k == t.sender) v += t.cash_leg();
    }
    return v;
  }

  /// (v_ik)_j after normalization.
  double transfer(std::size_t i, std::size_t k, std::size_t j) const {
    return raw_transfer(i, k, j) / scales(k, j);
  }

  /// V in R^{I x KJ} with column l = k*J + j.
  Matrix transfer_matrix() const {
    Matrix V(I, K * J);
    for (std::size_t i = 0; i < I; ++i) {
      const Transaction& t = transactions[i];
      for (std::size_t k : {t.sender, t.receiver})
        for (std::size_t j : {std::size_t{0}, t.security}) V(i, k * J + j) = transfer(i, k, j);
    }
    return V;
  }

  /// Number of transactions touching each party.
  std::vector<std::size_t> party_degrees() const {
    std::vector<std::size_t> deg(K, 0);
    for (const auto& t : transactions) {
      ++deg[t.sender];
      ++deg[t.receiver];
    }
    return deg;
  }
};

// ---------------------------------------------------------------------------
// Instance generation

struct GenerateOptions {
  // Restrict the source to its most frequent security so the instance has
  // exactly cash plus one security (J = 2).
  bool single_security = false;
};

/// Draws I transactions from `source` and assigns random distinct party pairs.
/// Balances are the minimal non-negative matrix that lets the first I-R
/// transactions settle jointly; the last R transactions leave balances alone.
inline SettlementProblem generate_instance(std::span<const Transaction> source, std::size_t I,
                                           std::size_t K, std::size_t R, std::uint64_t seed,
                                           const GenerateOptions& opts = {}) {
  require(!source.empty(), "generate_instance: empty transaction source");
  require(K >= 2, "generate_instance: need K >= 2");
  require(I >= 1, "generate_instance: need I >= 1");
  require(R <= I, "generate_instance: R must not exceed I");

  std::vector<Transaction> pool(source.begin(), source.end());
  if (opts.single_security) {
    std::unordered_map<std::size_t, std::size_t> freq;
    for (const auto& t : pool) ++freq[t.security];
    std::size_t best = pool.front().security;
    for (const auto& t : pool)
      if (freq[t.security] > freq[best] || (freq[t.security] == freq[best] && t.security < best))
        best = t.security;
    std::erase_if(pool, [&](const Transaction& t) { return t.security != best; });
  }

  CounterRng rng(derive_seed(seed, {0x67656e}));
  std::vector<Transaction> txs;
  txs.reserve(I);
  std::unordered_map<std::size_t, std::size_t> security_index;  // source -> compact, 1-based
  for (std::size_t i = 0; i < I; ++i) {
    Transaction t = pool[rng.below(pool.size())];
    t.sender = rng.below(K);
    t.receiver = rng.below(K - 1);
    if (t.receiver >= t.sender) ++t.receiver;
    auto [it, inserted] = security_index.try_emplace(t.security, security_index.size() + 1);
    t.security = it->second;
    if (t.kind == SettlementKind::FOP) t.consideration = 0.0;
    txs.push_back(t);
  }
  const std::size_t J = security_index.size() + 1;

  SettlementProblem p = SettlementProblem::make(K, J, std::move(txs), Matrix(K, J), Matrix(K, J), {}, seed);
  Matrix net(K, J);
  for (std::size_t i = 0; i + R < I; ++i)
    for (std::size_t k = 0; k < K; ++k)
      for (std::size_t j = 0; j < J; ++j) net(k, j) += p.raw_transfer(i, k, j);
  for (std::size_t k = 0; k < K; ++k)
    for (std::size_t j = 0; j < J; ++j) p.balances(k, j) = std::max(0.0, -net(k, j));
  return p;
}

/// Rescales every (party, asset) pair by the mean nonzero transfer magnitude.
/// Feasibility of every x is unchanged.
inline SettlementProblem normalize(const SettlementProblem& p) {
  SettlementProblem out = p;
  for (std::size_t k = 0; k < p.K; ++k) {
    for (std::size_t j = 0; j < p.J; ++j) {
      double sum = 0.0;
      std::size_t n = 0;
      for (std::size_t i = 0; i < p.I; ++i) {
        double v = std::abs(p.transfer(i, k, j));
        if (v != 0.0) {
          sum += v;
          ++n;
        }
      }
      double gamma = n ? sum / static_cast<double>(n) : 1.0;
      out.scales(k, j) = p.scales(k, j) * gamma;
      out.balances(k, j) = p.balances(k, j) / gamma;
      out.limits(k, j) = p.limits(k, j) / gamma;
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// QUBO data

struct QuboData {
  Matrix A;                     // I x I, lambda V V^T
  Matrix V;                     // I x KJ
  double lambda = 1.0;
  std::vector<double> wbase;    // w_i
  std::vector<double> constParts;  // bal - lim, flattened k*J + j

  std::size_t I() const { return A.rows(); }
  std::size_t L() const { return V.cols(); }
};

inline QuboData build_qubo(const SettlementProblem& p, double lambda) {
  require(std::isfinite(lambda) && lambda >= 0.0, "build_qubo: lambda must be non-negative");
  p.validate();
  QuboData q;
  q.lambda = lambda;
  q.V = p.transfer_matrix();
  q.wbase = p.weights;
  q.constParts.resize(p.K * p.J);
  for (std::size_t k = 0; k < p.K; ++k)
    for (std::size_t j = 0; j < p.J; ++j) q.constParts[k * p.J + j] = p.balances(k, j) - p.limits(k, j);
  const std::size_t I = p.I, L = q.V.cols();
  q.A = Matrix(I, I);
  for (std::size_t i = 0; i < I; ++i) {
    for (std::size_t j = i; j < I; ++j) {
      double dot = 0.0;
      for (std::size_t l = 0; l < L; ++l) dot += q.V(i, l) * q.V(j, l);
      q.A(i, j) = q.A(j, i) = lambda * dot;
    }
  }
  return q;
}

struct LinearTerms {
  std::vector<double> b;
  double c = 0.0;
};

/// b(s) and c(s) for a slack vector flattened as k*J + j.
inline LinearTerms eval_b_c(const QuboData& q, std::span<const double> s) {
  require(s.size() == q.L(), "eval_b_c: slack has wrong length");
  for (double v : s) require(v >= 0.0, "eval_b_c: slack entries must be non-negative");
  LinearTerms out;
  out.b.assign(q.I(), 0.0);
  std::vector<double> resid(q.L());
  for (std::size_t l = 0; l < q.L(); ++l) {
    resid[l] = q.constParts[l] - s[l];
    out.c += q.lambda * resid[l] * resid[l];
  }
  for (std::size_t i = 0; i < q.I(); ++i) {
    double acc = 0.0;
    for (std::size_t l = 0; l < q.L(); ++l) acc += resid[l] * q.V(i, l);
    out.b[i] = -q.wbase[i] + 2.0 * q.lambda * acc;
  }
  return out;
}

inline LinearTerms eval_b_c(const QuboData& q, const Matrix& s) { return eval_b_c(q, std::span<const double>(s.flat())); }

/// x^T A x + b(s)^T x + c(s).
inline double quadratic_objective(const QuboData& q, std::span<const std::uint8_t> x,
                                  std::span<const double> s) {
  require(x.size() == q.I(), "quadratic_objective: bit-vector has wrong length");
  LinearTerms bc = eval_b_c(q, s);
  double val = bc.c;
  for (std::size_t i = 0; i < q.I(); ++i) {
    if (!x[i]) continue;
    val += bc.b[i];
    for (std::size_t j = 0; j < q.I(); ++j)
      if (x[j]) val += q.A(i, j);
  }
  return val;
}

/// Optimal slack for a bit-vector: max(0, sum_i x_i v_ik + bal_k - lim_k).
inline std::vector<double> bitvector_slack(const QuboData& q, std::span<const std::uint8_t> x) {
  std::vector<double> s(q.constParts);
  for (std::size_t i = 0; i < q.I(); ++i)
    if (x[i])
      for (std::size_t l = 0; l < q.L(); ++l) s[l] += q.V(i, l);
  for (double& v : s) v = std::max(0.0, v);
  return s;
}

/// Cost of settling x with its own optimal slack. Lower is better.
inline double cost_of_bitvector(const QuboData& q, std::span<const std::uint8_t> x) {
  std::vector<double> s = bitvector_slack(q, x);
  return quadratic_objective(q, x, s);
}

struct ConnectivityStats {
  double avgNonzerosPerRow = 0.0;
  double bound = 0.0;
};

/// Average nonzeros per row of Q = A + Diag(b(s)) against the degree bound
/// 4I/K + (K/I) Var_k[N_k] - 1. Uses s = 0 unless a slack is given.
inline ConnectivityStats connectivity_stats(const QuboData& q, const SettlementProblem& p,
                                            std::span<const double> s = {}) {
  constexpr double kNonzero = 1e-12;
  std::vector<double> zero(q.L(), 0.0);
  LinearTerms bc = eval_b_c(q, s.empty() ? std::span<const double>(zero) : s);
  std::size_t nnz = 0;
  for (std::size_t i = 0; i < q.I(); ++i)
    for (std::size_t j = 0; j < q.I(); ++j) {
      double v = q.A(i, j) + (i == j ? bc.b[i] : 0.0);
      if (std::abs(v) > kNonzero) ++nnz;
    }
  ConnectivityStats st;
  const double I = static_cast<double>(p.I), K = static_cast<double>(p.K);
  st.avgNonzerosPerRow = static_cast<double>(nnz) / I;
  auto deg = p.party_degrees();
  double mean = 0.0, sq = 0.0;
  for (std::size_t d : deg) {
    mean += static_cast<double>(d);
    sq += static_cast<double>(d) * static_cast<double>(d);
  }
  mean /= K;
  double var = sq / K - mean * mean;
  st.bound = 4.0 * I / K + (K / I) * var - 1.0;
  return st;
}

}  // namespace qsettle
