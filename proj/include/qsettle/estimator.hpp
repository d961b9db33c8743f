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

// Marginal estimators, slack substitution, cost and gradients.
//
// Measurements are reduced to per-register mass tables (probability of each
// register, of each ancilla bit being 1, of each ancilla pair being 11) and
// then aggregated through the covering into per-bit tallies. The same tally
// type is filled directly from partial assignments, which keeps the
// record-level definition and the amplitude-level limit comparable.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "qsettle/encoding.hpp"
#include "qsettle/matrix.hpp"
#include "qsettle/problem.hpp"
#include "qsettle/rng.hpp"
#include "qsettle/simulator.hpp"

namespace qsettle {

enum class MuMode { CrossRegister, SeenProduct };

inline const char* to_string(MuMode m) { return m == MuMode::CrossRegister ? "crossRegister" : "seenProduct"; }

inline MuMode mu_mode_from_string(const std::string& s) {
  if (s == "crossRegister") return MuMode::CrossRegister;
  if (s == "seenProduct") return MuMode::SeenProduct;
  throw std::invalid_argument("unknown mu mode '" + s + "' (expected crossRegister or seenProduct)");
}

struct EstimatorOptions {
  MuMode mode = MuMode::CrossRegister;
  /// Fallback threshold on seen-fraction; negative selects 1/(10 N_r).
  double eps = -1.0;
  /// Replace the register-mass denominators by the constant 1/N_r.
  bool fixedRegisterMass = false;
};

/// Per-register ancilla statistics in arbitrary (count or probability) units.
struct MassTable {
  unsigned nAncilla = 0;
  double total = 0.0;
  std::vector<double> mass;                // N_r
  std::vector<std::vector<double>> ones;   // N_r x n_a
  std::vector<std::vector<double>> pairs;  // N_r x (n_a*n_a), symmetric

  MassTable() = default;
  explicit MassTable(QubitPartition part)
      : nAncilla(part.nAncilla),
        mass(part.registers(), 0.0),
        ones(part.registers(), std::vector<double>(part.nAncilla, 0.0)),
        pairs(part.registers(), std::vector<double>(std::size_t{part.nAncilla} * part.nAncilla, 0.0)) {}

  void add(std::uint64_t ancillaBits, std::uint64_t reg, double weight) {
    total += weight;
    mass[reg] += weight;
    unsigned set[64];
    unsigned n = 0;
    for (unsigned l = 0; l < nAncilla; ++l)
      if ((ancillaBits >> l) & 1u) set[n++] = l;
    auto& o = ones[reg];
    auto& pr = pairs[reg];
    for (unsigned u = 0; u < n; ++u) {
      o[set[u]] += weight;
      for (unsigned v = 0; v < n; ++v) pr[std::size_t{set[u]} * nAncilla + set[v]] += weight;
    }
  }
};

/// Mass table from a distribution (or histogram) over basis states.
template <class T>
MassTable mass_table(std::span<const T> weights, QubitPartition part) {
  require(weights.size() == (std::size_t{1} << part.nQubits()), "mass_table: size does not match partition");
  MassTable t(part);
  const std::uint64_t mask = part.ancillaMask();
  for (std::uint64_t b = 0; b < weights.size(); ++b)
    if (weights[b] != T{0}) t.add(b & mask, b >> part.nAncilla, static_cast<double>(weights[b]));
  return t;
}

inline MassTable mass_table(const StateVector& st, QubitPartition part) {
  auto probs = st.probabilities();
  return mass_table(std::span<const double>(probs), part);
}

/// Bit-level tallies. seen_i counts measurements fixing bit i, ones_i those
/// setting it to 1; joint* count measurements fixing both i and j.
struct Tallies {
  double total = 0.0;
  std::vector<double> seen, ones;
  Matrix jointSeen, jointOnes;
  std::vector<double> regMass;

  Tallies() = default;
  Tallies(std::size_t I, std::size_t nRegisters)
      : seen(I, 0.0), ones(I, 0.0), jointSeen(I, I), jointOnes(I, I), regMass(nRegisters, 0.0) {}

  std::size_t bits() const { return seen.size(); }

  /// Measurements fixing i but not j.
  double exclusive(std::size_t i, std::size_t j) const { return std::max(0.0, seen[i] - jointSeen(i, j)); }

  void scale(double f) {
    total *= f;
    for (auto& v : seen) v *= f;
    for (auto& v : ones) v *= f;
    for (auto& v : jointSeen.flat()) v *= f;
    for (auto& v : jointOnes.flat()) v *= f;
    for (auto& v : regMass) v *= f;
  }
};

inline Tallies aggregate(const MassTable& t, const Covering& cov) {
  require(t.mass.size() == cov.registers() && t.nAncilla == cov.nAncilla(), "aggregate: covering mismatch");
  Tallies out(cov.bits(), cov.registers());
  out.total = t.total;
  out.regMass = t.mass;
  const unsigned na = cov.nAncilla();
  for (std::size_t r = 0; r < cov.registers(); ++r) {
    const auto& mem = cov.members(r);
    for (std::size_t i : mem) {
      const int li = cov.position(r, i);
      out.seen[i] += t.mass[r];
      out.ones[i] += t.ones[r][li];
      for (std::size_t j : mem) {
        const int lj = cov.position(r, j);
        out.jointSeen(i, j) += t.mass[r];
        out.jointOnes(i, j) += t.pairs[r][std::size_t(li) * na + std::size_t(lj)];
      }
    }
  }
  return out;
}

/// Tallies counted record by record from partial assignments.
inline Tallies count_partials(std::span<const PartialAssignment> partials, std::size_t nRegisters) {
  require(!partials.empty(), "count_partials: no measurements");
  const std::size_t I = partials.front().bits.size();
  Tallies out(I, nRegisters);
  std::vector<std::size_t> fixed;
  for (const auto& pa : partials) {
    require(pa.bits.size() == I, "count_partials: inconsistent bit-vector lengths");
    require(pa.registerIndex < nRegisters, "count_partials: register index out of range");
    out.total += 1.0;
    out.regMass[pa.registerIndex] += 1.0;
    fixed.clear();
    for (std::size_t i = 0; i < I; ++i)
      if (pa.bits[i] >= 0) fixed.push_back(i);
    for (std::size_t i : fixed) {
      out.seen[i] += 1.0;
      out.ones[i] += pa.bits[i] == 1;
      for (std::size_t j : fixed) {
        out.jointSeen(i, j) += 1.0;
        out.jointOnes(i, j) += pa.bits[i] == 1 && pa.bits[j] == 1;
      }
    }
  }
  return out;
}

struct MarginalEstimates {
  std::vector<double> pHat;
  Matrix qHat, muHat;
  std::vector<double> regFreq;
  Tallies counts;
  /// Denominators actually used (fixed or measured).
  std::vector<double> pDenom;
  Matrix qDenom;
  std::vector<std::uint8_t> pFallback;
  Matrix qFallback;  // 1.0 where the fallback value was used

  std::size_t bits() const { return pHat.size(); }

  /// Estimated P(x_i = 1, x_j = 1) for i != j.
  double pij(std::size_t i, std::size_t j) const {
    const double mu = muHat(i, j);
    return (1.0 - mu) * qHat(i, j) + mu * pHat[i] * pHat[j];
  }
};

inline double default_eps(std::size_t nRegisters) { return 1.0 / (10.0 * static_cast<double>(nRegisters)); }

/// Turns tallies into estimates.
///
/// p_i = ones_i / seen_i and q_ij = jointOnes_ij / jointSeen_ij, both set to
/// a neutral fallback (1/2 and 1/4) when the seen fraction drops below eps.
/// mu_ij = s / (s + jointSeen_ij) where s = sqrt(seen_i seen_j) for
/// SeenProduct and sqrt(excl_ij excl_ji) for CrossRegister.
inline MarginalEstimates finalize(const Tallies& t, const Covering& cov, const EstimatorOptions& opt = {}) {
  const std::size_t I = t.bits();
  require(I == cov.bits(), "finalize: covering mismatch");
  require(t.total > 0.0, "finalize: no measurements");
  const double eps = opt.eps < 0.0 ? default_eps(cov.registers()) : opt.eps;
  MarginalEstimates e;
  e.counts = t;
  e.pHat.assign(I, 0.5);
  e.pDenom.assign(I, 0.0);
  e.pFallback.assign(I, 0);
  e.qHat = Matrix(I, I);
  e.muHat = Matrix(I, I);
  e.qDenom = Matrix(I, I);
  e.qFallback = Matrix(I, I);
  const double Nr = static_cast<double>(cov.registers());

  std::vector<double> seen(I);
  Matrix jointSeen(I, I);
  for (std::size_t i = 0; i < I; ++i) {
    seen[i] = opt.fixedRegisterMass ? t.total * static_cast<double>(cov.cover_count(i)) / Nr : t.seen[i];
    for (std::size_t j = 0; j < I; ++j)
      jointSeen(i, j) =
          opt.fixedRegisterMass ? t.total * static_cast<double>(cov.joint_count(i, j)) / Nr : t.jointSeen(i, j);
  }
  for (std::size_t i = 0; i < I; ++i) {
    e.pDenom[i] = seen[i];
    if (seen[i] <= 0.0 || seen[i] / t.total < eps) {
      e.pFallback[i] = 1;
      e.pHat[i] = 0.5;
    } else {
      e.pHat[i] = std::clamp(t.ones[i] / seen[i], 0.0, 1.0);
    }
  }
  for (std::size_t i = 0; i < I; ++i)
    for (std::size_t j = 0; j < I; ++j) {
      const double js = jointSeen(i, j);
      e.qDenom(i, j) = js;
      if (js <= 0.0) {
        e.qHat(i, j) = 0.0;
      } else if (js / t.total < eps) {
        e.qHat(i, j) = 0.25;
        e.qFallback(i, j) = 1.0;
      } else {
        e.qHat(i, j) = std::clamp(t.jointOnes(i, j) / js, 0.0, 1.0);
      }
      double num;
      if (opt.mode == MuMode::SeenProduct) {
        num = std::sqrt(seen[i] * seen[j]);
      } else {
        num = std::sqrt(std::max(0.0, seen[i] - js) * std::max(0.0, seen[j] - js));
      }
      e.muHat(i, j) = num + js > 0.0 ? num / (num + js) : 1.0;
    }
  e.regFreq.resize(t.regMass.size());
  for (std::size_t r = 0; r < t.regMass.size(); ++r) e.regFreq[r] = t.regMass[r] / t.total;
  return e;
}

/// Estimates from a set of measurements, counted directly.
inline MarginalEstimates estimate_marginals(std::span<const PartialAssignment> partials, const Covering& cov,
                                            const EstimatorOptions& opt = {}) {
  return finalize(count_partials(partials, cov.registers()), cov, opt);
}

inline MarginalEstimates estimate_marginals(std::span<const MeasurementRecord> records, const Covering& cov,
                                            const EstimatorOptions& opt = {}) {
  auto partials = partials_from_records(records, cov);
  return estimate_marginals(std::span<const PartialAssignment>(partials), cov, opt);
}

/// Infinite-shot limit: tallies taken from |amplitude|^2.
inline MarginalEstimates exact_marginals(const StateVector& st, const Covering& cov, const EstimatorOptions& opt = {}) {
  return finalize(aggregate(mass_table(st, cov.partition()), cov), cov, opt);
}

/// Estimates from nShots multinomial draws of the state.
inline MarginalEstimates sampled_marginals(const StateVector& st, const Covering& cov, std::size_t nShots,
                                           std::uint64_t seed, const EstimatorOptions& opt = {}) {
  auto probs = st.probabilities();
  auto hist = multinomial_histogram(probs, nShots, seed);
  return finalize(aggregate(mass_table(std::span<const std::uint32_t>(hist), cov.partition()), cov), cov, opt);
}

// ---------------------------------------------------------------------------
// Cost

/// s_l = max(0, sum_i p_i V_il + bal_l - lim_l), flattened k*J + j.
inline std::vector<double> optimal_slack(std::span<const double> pHat, const QuboData& q) {
  require(pHat.size() == q.I(), "optimal_slack: wrong length");
  std::vector<double> s(q.constParts);
  for (std::size_t i = 0; i < q.I(); ++i)
    for (std::size_t l = 0; l < q.L(); ++l) s[l] += pHat[i] * q.V(i, l);
  for (double& v : s) v = std::max(0.0, v);
  return s;
}

struct CostReport {
  double cost = 0.0;
  std::vector<double> slack;
  double regPenalty = 0.0;
  std::optional<std::vector<double>> gradient;

  double total() const { return cost + regPenalty; }
};

/// Estimated cost at a given slack.
inline double cost_at(const MarginalEstimates& e, const QuboData& q, std::span<const double> s) {
  require(e.bits() == q.I(), "cost_at: dimension mismatch");
  LinearTerms bc = eval_b_c(q, s);
  double val = bc.c;
  for (std::size_t i = 0; i < q.I(); ++i) {
    val += e.pHat[i] * (q.A(i, i) + bc.b[i]);
    for (std::size_t j = 0; j < q.I(); ++j)
      if (j != i) val += e.pij(i, j) * q.A(i, j);
  }
  return val;
}

inline double regularization(std::span<const double> regFreq, double eta) {
  const double target = 1.0 / static_cast<double>(regFreq.size());
  double r = 0.0;
  for (double f : regFreq) r += (f - target) * (f - target);
  return eta * r;
}

inline CostReport cost(const MarginalEstimates& e, const QuboData& q, double eta) {
  CostReport rep;
  rep.slack = optimal_slack(e.pHat, q);
  rep.cost = cost_at(e, q, rep.slack);
  rep.regPenalty = regularization(e.regFreq, eta);
  return rep;
}

// ---------------------------------------------------------------------------
// Gradient

struct GradientOptions {
  std::size_t nShots = 0;  // 0 selects exact expectations
  double eta = 0.0;
  std::uint64_t seed = 0;
  EstimatorOptions estimator{};
  /// Fixed register mass for register-preserving circuits unless overridden.
  std::optional<bool> fixedRegisterMass;
};

/// Throws unless every parameter slot drives exactly one RY/CRY/RX gate with
/// unit scale. CRY is only accepted in register-preserving circuits, where
/// all observables are block diagonal in the register basis and the
/// two-term shift stays exact.
inline void check_shiftable(const ParamCircuit& c) {
  std::vector<int> uses(c.paramCount, 0);
  for (const Gate& g : c.gates) {
    if (!g.parameterized()) continue;
    bool ok = (g.kind == GateKind::RY || g.kind == GateKind::RX ||
               (g.kind == GateKind::CRY && c.kind == AnsatzKind::RegisterPreserving)) &&
              g.scale == 1.0 && (g.kind != GateKind::RX || g.targets.size() == 1);
    if (!ok) throw std::invalid_argument(std::string("gradient: gate ") + to_string(g.kind) + " is not shiftable");
    ++uses[static_cast<std::size_t>(g.slot)];
  }
  for (int u : uses)
    if (u > 1) throw std::invalid_argument("gradient: shared parameter slots are not supported");
}

/// Normalized tallies of the circuit output, exact or from nShots draws.
inline Tallies circuit_tallies(const ParamCircuit& c, std::span<const double> params, const Covering& cov,
                               std::size_t nShots, std::uint64_t seed) {
  StateVector st = run(c, params);
  Tallies t;
  if (nShots == 0) {
    t = aggregate(mass_table(st, cov.partition()), cov);
  } else {
    auto hist = multinomial_histogram(st.probabilities(), nShots, seed);
    t = aggregate(mass_table(std::span<const std::uint32_t>(hist), cov.partition()), cov);
  }
  t.scale(1.0 / t.total);
  return t;
}

/// Cost at params plus its parameter-shift gradient, with mu held constant.
inline CostReport cost_and_gradient(const ParamCircuit& c, std::span<const double> params, const QuboData& q,
                                    const Covering& cov, const GradientOptions& opt) {
  check_shiftable(c);
  require(c.nAncilla == cov.nAncilla() && c.nRegister == cov.nRegister(), "gradient: circuit/covering mismatch");
  EstimatorOptions eo = opt.estimator;
  eo.fixedRegisterMass = opt.fixedRegisterMass.value_or(c.kind == AnsatzKind::RegisterPreserving);
  const std::size_t I = q.I(), L = q.L();

  Tallies base = circuit_tallies(c, params, cov, opt.nShots, derive_seed(opt.seed, {0}));
  MarginalEstimates e = finalize(base, cov, eo);
  CostReport rep = cost(e, q, opt.eta);
  LinearTerms bc = eval_b_c(q, rep.slack);

  std::vector<double> gradS(L), sumPB(L, 0.0);
  for (std::size_t l = 0; l < L; ++l) gradS[l] = -2.0 * q.lambda * (q.constParts[l] - rep.slack[l]);
  for (std::size_t i = 0; i < I; ++i)
    for (std::size_t l = 0; l < L; ++l) sumPB[l] += e.pHat[i] * (-2.0 * q.lambda * q.V(i, l));

  std::vector<double> grad(c.paramCount, 0.0), shifted(params.begin(), params.end());
  std::vector<double> dp(I), ds(L);
  Matrix dq(I, I);
  const double halfPi = std::acos(0.0);
  for (std::size_t d = 0; d < c.paramCount; ++d) {
    shifted[d] = params[d] + halfPi;
    Tallies plus = circuit_tallies(c, shifted, cov, opt.nShots, derive_seed(opt.seed, {d + 1, 1}));
    shifted[d] = params[d] - halfPi;
    Tallies minus = circuit_tallies(c, shifted, cov, opt.nShots, derive_seed(opt.seed, {d + 1, 2}));
    shifted[d] = params[d];

    for (std::size_t i = 0; i < I; ++i) {
      if (e.pFallback[i]) {
        dp[i] = 0.0;
        continue;
      }
      const double dOnes = 0.5 * (plus.ones[i] - minus.ones[i]);
      if (eo.fixedRegisterMass) {
        dp[i] = dOnes / e.pDenom[i];
      } else {
        const double dSeen = 0.5 * (plus.seen[i] - minus.seen[i]);
        dp[i] = (dOnes * base.seen[i] - base.ones[i] * dSeen) / (base.seen[i] * base.seen[i]);
      }
    }
    for (std::size_t i = 0; i < I; ++i)
      for (std::size_t j = 0; j < I; ++j) {
        const double den = e.qDenom(i, j);
        if (i == j || den <= 0.0 || e.qFallback(i, j) != 0.0) {
          dq(i, j) = 0.0;
          continue;
        }
        const double dOnes = 0.5 * (plus.jointOnes(i, j) - minus.jointOnes(i, j));
        if (eo.fixedRegisterMass) {
          dq(i, j) = dOnes / den;
        } else {
          const double dSeen = 0.5 * (plus.jointSeen(i, j) - minus.jointSeen(i, j));
          dq(i, j) = (dOnes * den - base.jointOnes(i, j) * dSeen) / (den * den);
        }
      }
    for (std::size_t l = 0; l < L; ++l) {
      ds[l] = 0.0;
      if (rep.slack[l] > 0.0)
        for (std::size_t i = 0; i < I; ++i) ds[l] += dp[i] * q.V(i, l);
    }

    double g = 0.0;
    for (std::size_t i = 0; i < I; ++i) {
      g += dp[i] * (q.A(i, i) + bc.b[i]);
      for (std::size_t j = 0; j < I; ++j) {
        if (j == i) continue;
        const double mu = e.muHat(i, j);
        const double dpij = (1.0 - mu) * dq(i, j) + mu * (e.pHat[j] * dp[i] + e.pHat[i] * dp[j]);
        g += dpij * q.A(i, j);
      }
    }
    for (std::size_t l = 0; l < L; ++l) g += (sumPB[l] + gradS[l]) * ds[l];
    if (opt.eta != 0.0) {
      const double target = 1.0 / static_cast<double>(cov.registers());
      for (std::size_t r = 0; r < cov.registers(); ++r)
        g += 2.0 * opt.eta * (e.regFreq[r] - target) * 0.5 * (plus.regMass[r] - minus.regMass[r]);
    }
    grad[d] = g;
  }
  rep.gradient = std::move(grad);
  return rep;
}

/// Cost (without gradient) at params, using the same estimator settings.
inline CostReport circuit_cost(const ParamCircuit& c, std::span<const double> params, const QuboData& q,
                               const Covering& cov, const GradientOptions& opt) {
  EstimatorOptions eo = opt.estimator;
  eo.fixedRegisterMass = opt.fixedRegisterMass.value_or(c.kind == AnsatzKind::RegisterPreserving);
  Tallies t = circuit_tallies(c, params, cov, opt.nShots, derive_seed(opt.seed, {0}));
  return cost(finalize(t, cov, eo), q, opt.eta);
}

}  // namespace qsettle
