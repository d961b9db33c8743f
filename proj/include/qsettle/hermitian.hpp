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

// Cost at fixed slack and fixed mu as a diagonal observable on two copies of
// the compressed state. Register masses are replaced by 1/N_r, so P_i and
// Q_ij are projector sums scaled by N_r/n_i and N_r/n_ij.

#include <cstdint>
#include <span>
#include <vector>

#include "qsettle/encoding.hpp"
#include "qsettle/matrix.hpp"
#include "qsettle/problem.hpp"
#include "qsettle/simulator.hpp"

namespace qsettle {

class HermitianCost {
 public:
  static constexpr unsigned kMaxFactorQubits = 12;

  HermitianCost(const QuboData& q, const Covering& cov, std::span<const double> slack, const Matrix& mu)
      : cov_(cov), A_(q.A), mu_(mu) {
    require(cov.bits() == q.I(), "HermitianCost: covering mismatch");
    require(mu.rows() == q.I() && mu.cols() == q.I(), "HermitianCost: mu has wrong shape");
    LinearTerms bc = eval_b_c(q, slack);
    c_ = bc.c;
    linear_.resize(q.I());
    for (std::size_t i = 0; i < q.I(); ++i) linear_[i] = q.A(i, i) + bc.b[i];
  }

  unsigned nQubits() const { return cov_.partition().nQubits(); }

  /// Value of P_i on basis state x of one copy.
  double P(std::size_t i, std::uint64_t x) const {
    const std::uint64_t r = x >> cov_.nAncilla();
    const int l = cov_.position(r, i);
    if (l < 0 || !((x >> l) & 1u)) return 0.0;
    return static_cast<double>(cov_.registers()) / static_cast<double>(cov_.cover_count(i));
  }

  /// Value of Q_ij on basis state x of one copy.
  double Q(std::size_t i, std::size_t j, std::uint64_t x) const {
    const std::uint64_t r = x >> cov_.nAncilla();
    const int li = cov_.position(r, i), lj = cov_.position(r, j);
    if (li < 0 || lj < 0 || !((x >> li) & 1u) || !((x >> lj) & 1u)) return 0.0;
    return static_cast<double>(cov_.registers()) / static_cast<double>(cov_.joint_count(i, j));
  }

  /// <psi (x) psi| C |psi (x) psi>, from single-copy expectations of P and Q.
  double expectation(const StateVector& st) const {
    require(st.nQubits == nQubits(), "HermitianCost: state size mismatch");
    const std::size_t I = A_.rows();
    std::vector<double> p(I, 0.0);
    Matrix qv(I, I);
    for (std::uint64_t x = 0; x < st.dim(); ++x) {
      const double w = std::norm(st.amplitudes[x]);
      if (w == 0.0) continue;
      for (std::size_t i = 0; i < I; ++i) {
        const double pi = P(i, x);
        if (pi == 0.0) continue;
        p[i] += w * pi;
        for (std::size_t j = 0; j < I; ++j)
          if (j != i) qv(i, j) += w * Q(i, j, x);
      }
    }
    double val = c_;
    for (std::size_t i = 0; i < I; ++i) {
      val += linear_[i] * p[i];
      for (std::size_t j = 0; j < I; ++j)
        if (j != i) val += A_(i, j) * ((1.0 - mu_(i, j)) * qv(i, j) + mu_(i, j) * p[i] * p[j]);
    }
    return val;
  }

  /// Diagonal of C over 2 n_q qubits; index = (second copy << n_q) | first copy.
  std::vector<double> diagonal() const {
    require(nQubits() <= kMaxFactorQubits, "HermitianCost: too many qubits to materialize the diagonal");
    const unsigned n = nQubits();
    const std::size_t I = A_.rows();
    const std::uint64_t dim = std::uint64_t{1} << n;
    std::vector<double> out(dim * dim, c_);
    for (std::uint64_t y = 0; y < dim; ++y)
      for (std::uint64_t x = 0; x < dim; ++x) {
        double v = c_;
        for (std::size_t i = 0; i < I; ++i) {
          const double px = P(i, x);
          v += linear_[i] * px;
          for (std::size_t j = 0; j < I; ++j)
            if (j != i) v += A_(i, j) * ((1.0 - mu_(i, j)) * Q(i, j, x) + mu_(i, j) * px * P(j, y));
        }
        out[(y << n) | x] = v;
      }
    return out;
  }

 private:
  Covering cov_;
  Matrix A_;
  Matrix mu_;
  std::vector<double> linear_;
  double c_ = 0.0;
};

inline HermitianCost build_hermitian_cost(const QuboData& q, const Covering& cov, std::span<const double> slack,
                                          const Matrix& mu) {
  return HermitianCost(q, cov, slack, mu);
}

}  // namespace qsettle
