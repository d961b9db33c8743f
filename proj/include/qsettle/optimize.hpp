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

// Training loops for the compressed ansatz, the QAOA baseline, sampling-based
// evaluation and the shot-noise study of gradient estimators.

#include <chrono>
#include <cmath>
#include <cstdint>
#include <limits>
#include <memory>
#include <numbers>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "qsettle/ansatz.hpp"
#include "qsettle/encoding.hpp"
#include "qsettle/estimator.hpp"
#include "qsettle/gfree.hpp"
#include "qsettle/problem.hpp"
#include "qsettle/rng.hpp"
#include "qsettle/simulator.hpp"
#include "qsettle/stats.hpp"

namespace qsettle {

enum class OptimizerKind { DESC, GFREE };

inline const char* to_string(OptimizerKind k) { return k == OptimizerKind::DESC ? "desc" : "gfree"; }

inline OptimizerKind optimizer_kind_from_string(const std::string& s) {
  if (s == "desc") return OptimizerKind::DESC;
  if (s == "gfree") return OptimizerKind::GFREE;
  throw std::invalid_argument("unknown optimizer '" + s + "' (expected desc or gfree)");
}

struct TrainConfig {
  OptimizerKind optimizer = OptimizerKind::DESC;
  double learningRate = 0.03;
  std::size_t decayEvery = 100;
  double decayFactor = 0.5;
  std::size_t maxIters = 200;
  std::size_t nShots = 20000;
  std::uint64_t seed = 0;
  double eta = 0.0;
  bool exactMode = false;
  MuMode muMode = MuMode::CrossRegister;
  double rhoBegin = 0.5;
  double rhoEnd = 1e-3;
};

struct TraceEntry {
  std::size_t iter = 0;
  double cost = 0.0;
  double regPenalty = 0.0;
  double slackNorm = 0.0;
  std::optional<double> gradNorm;
  double wallMillis = 0.0;
};

struct TrainResult {
  std::vector<double> initialParams;
  std::vector<double> params;
  std::vector<TraceEntry> trace;
};

inline double l2_norm(std::span<const double> v) {
  double s = 0.0;
  for (double x : v) s += x * x;
  return std::sqrt(s);
}

inline std::vector<double> random_params(std::size_t n, std::uint64_t seed) {
  CounterRng rng(derive_seed(seed, {0x7468}));
  std::vector<double> th(n);
  for (double& t : th) t = rng.uniform(-std::numbers::pi, std::numbers::pi);
  return th;
}

/// Trains the circuit parameters against the marginal cost estimator.
/// DESC follows the parameter-shift gradient with a step-decayed learning
/// rate; GFREE runs the trust-region linear-model search on the estimated
/// cost. Every estimate uses a fresh seed derived from (seed, iteration).
inline TrainResult train(const ParamCircuit& c, const QuboData& q, const Covering& cov, const TrainConfig& cfg,
                         std::optional<std::vector<double>> init = std::nullopt) {
  require(c.nAncilla == cov.nAncilla() && c.nRegister == cov.nRegister(), "train: circuit/covering mismatch");
  if (cfg.optimizer == OptimizerKind::DESC) require(cfg.learningRate > 0.0, "train: learning rate must be positive");
  TrainResult res;
  res.initialParams = init ? *init : random_params(c.paramCount, cfg.seed);
  require(res.initialParams.size() == c.paramCount, "train: initial parameter count mismatch");
  GradientOptions go;
  go.nShots = cfg.exactMode ? 0 : cfg.nShots;
  go.eta = cfg.eta;
  go.estimator.mode = cfg.muMode;
  const auto start = std::chrono::steady_clock::now();
  auto millis = [&] {
    return std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start).count();
  };

  if (cfg.optimizer == OptimizerKind::DESC) {
    std::vector<double> th = res.initialParams;
    for (std::size_t t = 0; t < cfg.maxIters; ++t) {
      go.seed = derive_seed(cfg.seed, {1, t});
      CostReport rep = cost_and_gradient(c, th, q, cov, go);
      const auto& g = *rep.gradient;
      res.trace.push_back({t, rep.cost, rep.regPenalty, l2_norm(rep.slack), l2_norm(g), millis()});
      const double lr =
          cfg.learningRate * std::pow(cfg.decayFactor, static_cast<double>(cfg.decayEvery ? t / cfg.decayEvery : 0));
      for (std::size_t d = 0; d < th.size(); ++d) th[d] -= lr * g[d];
    }
    res.params = th;
    return res;
  }

  std::vector<CostReport> reports;
  auto objective = [&](const std::vector<double>& th) {
    go.seed = derive_seed(cfg.seed, {2, reports.size()});
    reports.push_back(circuit_cost(c, th, q, cov, go));
    return reports.back().total();
  };
  GfreeOptions opt{cfg.rhoBegin, cfg.rhoEnd, cfg.maxIters, 0};
  auto onIter = [&](std::size_t it, const std::vector<double>&, double, std::size_t evalIndex) {
    const CostReport& rep = reports[evalIndex];
    res.trace.push_back({it, rep.cost, rep.regPenalty, l2_norm(rep.slack), std::nullopt, millis()});
  };
  GfreeResult g = minimize_gfree(objective, res.initialParams, opt, onIter);
  res.params = g.x;
  return res;
}

// ---------------------------------------------------------------------------
// Sampling bit-vectors from a trained circuit

/// Deterministic register sweep: the k-th record comes from the circuit run
/// on the permuted input for register k mod N_r, so every N_r consecutive
/// records cover each register once.
class RegisterSweep {
 public:
  RegisterSweep(const ParamCircuit& c, std::span<const double> params, std::uint64_t seed) : rng_(seed) {
    part_ = c.partition();
    for (std::uint64_t r = 0; r < part_.registers(); ++r)
      samplers_.emplace_back(run(c, params, build_permuted_register_input(c, r)));
  }

  MeasurementRecord operator()() {
    const auto& s = samplers_[count_++ % samplers_.size()];
    return split_basis(s.draw(rng_), part_);
  }

  std::size_t drawn() const { return count_; }

 private:
  QubitPartition part_{};
  std::vector<BasisSampler> samplers_;
  CounterRng rng_;
  std::size_t count_ = 0;
};

struct EvalConfig {
  std::size_t nVectors = 1000;
  std::size_t nShots = 24000;
  std::uint64_t seed = 0;
  bool registerSweep = false;
};

struct EvalResult {
  std::vector<double> costs;  // in sampling order
  std::vector<EcdfPoint> ecdf;
  std::vector<double> randomCosts;
  std::vector<EcdfPoint> randomEcdf;
  BitVector bestVector;
  double bestCost = 0.0;
  std::size_t shotsUsed = 0;
  std::size_t shotBatches = 0;
};

/// Scores uniformly random bit-vectors.
inline std::vector<double> random_baseline_costs(const QuboData& q, std::size_t n, std::uint64_t seed) {
  CounterRng rng(derive_seed(seed, {0x72616e64}));
  std::vector<double> out;
  out.reserve(n);
  BitVector x(q.I());
  for (std::size_t v = 0; v < n; ++v) {
    for (auto& b : x) b = static_cast<std::uint8_t>(rng() >> 63);
    out.push_back(cost_of_bitvector(q, x));
  }
  return out;
}

/// Draws nVectors bit-vectors by greedy sampling and scores each with its own
/// optimal slack. Shots come in batches of nShots; a fresh batch (new derived
/// seed) is drawn whenever the current one is used up.
inline EvalResult evaluate(const ParamCircuit& c, std::span<const double> params, const Covering& cov,
                           const QuboData& q, const EvalConfig& cfg) {
  require(cfg.nShots >= 1 && cfg.nVectors >= 1, "evaluate: need at least one shot and one vector");
  require(c.nAncilla == cov.nAncilla() && c.nRegister == cov.nRegister(), "evaluate: circuit/covering mismatch");
  EvalResult out;
  GreedySampler sampler(cov);
  std::optional<RegisterSweep> sweep;
  std::optional<BasisSampler> basis;
  if (cfg.registerSweep)
    sweep.emplace(c, params, derive_seed(cfg.seed, {0x7377}));
  else
    basis.emplace(run(c, params));
  const auto part = c.partition();
  std::size_t inBatch = 0;
  CounterRng rng(derive_seed(cfg.seed, {0x73686f74, 0}));
  auto next = [&]() -> MeasurementRecord {
    if (inBatch == 0) {
      rng = CounterRng(derive_seed(cfg.seed, {0x73686f74, out.shotBatches}));
      ++out.shotBatches;
    }
    inBatch = (inBatch + 1) % cfg.nShots;
    ++out.shotsUsed;
    return sweep ? (*sweep)() : split_basis(basis->draw(rng), part);
  };
  out.bestCost = std::numeric_limits<double>::infinity();
  for (std::size_t v = 0; v < cfg.nVectors; ++v) {
    BitVector x = sampler.next_vector(next);
    double cst = cost_of_bitvector(q, x);
    out.costs.push_back(cst);
    if (cst < out.bestCost) {
      out.bestCost = cst;
      out.bestVector = x;
    }
  }
  out.ecdf = ecdf(out.costs);
  out.randomCosts = random_baseline_costs(q, cfg.nVectors, cfg.seed);
  out.randomEcdf = ecdf(out.randomCosts);
  return out;
}

// ---------------------------------------------------------------------------
// QAOA baseline

struct QaoaConfig {
  unsigned pDepth = 1;
  std::size_t cycles = 50;
  std::size_t innerIters = 1000;
  std::size_t nShots = 20000;
  std::uint64_t seed = 0;
  double rhoBegin = 0.5;
  double rhoEnd = 1e-3;
};

struct QaoaResult {
  std::vector<double> params;
  std::vector<double> slack;
  std::vector<TraceEntry> trace;
};

/// x^T Q(s) x + c(s) for every basis state, bit i of the index being x_i.
inline std::vector<double> qubo_diagonal(const QuboData& q, std::span<const double> s) {
  const std::size_t I = q.I();
  require(I <= kMaxQubits, "qubo_diagonal: too many bits for the simulator");
  LinearTerms bc = eval_b_c(q, s);
  const std::uint64_t dim = std::uint64_t{1} << I;
  std::vector<double> diag(dim);
  diag[0] = bc.c;
  for (std::uint64_t x = 1; x < dim; ++x) {
    const unsigned top = 63u - static_cast<unsigned>(__builtin_clzll(x));
    const std::uint64_t rest = x ^ (std::uint64_t{1} << top);
    double add = bc.b[top] + q.A(top, top);
    for (std::size_t j = 0; j < top; ++j)
      if ((rest >> j) & 1u) add += 2.0 * q.A(top, j);
    diag[x] = diag[rest] + add;
  }
  return diag;
}

/// Sampled mean of `diag` and per-bit frequencies of ones.
struct QaoaSample {
  double mean = 0.0;
  std::vector<double> pHat;
};

inline QaoaSample qaoa_sample(const StateVector& st, std::span<const double> diag, std::size_t nBits,
                              std::size_t nShots, std::uint64_t seed) {
  auto probs = st.probabilities();
  auto hist = multinomial_histogram(probs, nShots, seed);
  QaoaSample out;
  out.pHat.assign(nBits, 0.0);
  for (std::uint64_t x = 0; x < hist.size(); ++x) {
    if (!hist[x]) continue;
    out.mean += hist[x] * diag[x];
    for (std::size_t i = 0; i < nBits; ++i)
      if ((x >> i) & 1u) out.pHat[i] += hist[x];
  }
  out.mean /= static_cast<double>(nShots);
  for (double& p : out.pHat) p /= static_cast<double>(nShots);
  return out;
}

inline ParamCircuit qaoa_circuit(const QuboData& q, std::span<const double> s, unsigned pDepth) {
  auto diag = std::make_shared<const std::vector<double>>(qubo_diagonal(q, s));
  return build_qaoa(static_cast<unsigned>(q.I()), pDepth, diag);
}

/// Alternates gradient-free updates of (beta, gamma) at fixed slack with the
/// closed-form slack update from the sampled bit marginals.
inline QaoaResult qaoa_train(const QuboData& q, const QaoaConfig& cfg) {
  require(q.I() <= kMaxQubits, "qaoa_train: instance exceeds the simulator qubit cap");
  require(cfg.pDepth >= 1 && cfg.cycles >= 1, "qaoa_train: need p >= 1 and at least one cycle");
  QaoaResult res;
  std::vector<double> half(q.I(), 0.5);
  res.slack = optimal_slack(half, q);
  res.params = random_params(2 * cfg.pDepth, cfg.seed);
  const auto start = std::chrono::steady_clock::now();
  std::size_t globalIter = 0, evals = 0;
  for (std::size_t cycle = 0; cycle < cfg.cycles; ++cycle) {
    ParamCircuit c = qaoa_circuit(q, res.slack, cfg.pDepth);
    const auto& diag = *c.gates[c.prepCount].diagonal;
    auto objective = [&](const std::vector<double>& th) {
      StateVector st = run(c, th);
      return qaoa_sample(st, diag, q.I(), cfg.nShots, derive_seed(cfg.seed, {3, evals++})).mean;
    };
    GfreeOptions opt{cfg.rhoBegin, cfg.rhoEnd, cfg.innerIters, 0};
    auto onIter = [&](std::size_t, const std::vector<double>&, double f, std::size_t) {
      double ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start).count();
      res.trace.push_back({globalIter++, f, 0.0, l2_norm(res.slack), std::nullopt, ms});
    };
    GfreeResult g = minimize_gfree(objective, res.params, opt, onIter);
    res.params = g.x;
    StateVector st = run(c, res.params);
    QaoaSample smp = qaoa_sample(st, diag, q.I(), cfg.nShots, derive_seed(cfg.seed, {4, cycle}));
    res.slack = optimal_slack(smp.pHat, q);
  }
  return res;
}

// ---------------------------------------------------------------------------
// Shot noise of the gradient estimator

/// Variance of each gradient entry over `resamples` independent shot sets,
/// averaged over entries.
inline double gradient_variance(const ParamCircuit& c, std::span<const double> params, const QuboData& q,
                                const Covering& cov, std::size_t nShots, std::size_t resamples, double eta,
                                std::uint64_t seed) {
  require(resamples >= 2, "gradient_variance: need at least two resamples");
  std::vector<std::vector<double>> grads;
  GradientOptions go;
  go.nShots = nShots;
  go.eta = eta;
  for (std::size_t k = 0; k < resamples; ++k) {
    go.seed = derive_seed(seed, {k});
    grads.push_back(*cost_and_gradient(c, params, q, cov, go).gradient);
  }
  double acc = 0.0;
  std::vector<double> col(resamples);
  for (std::size_t d = 0; d < c.paramCount; ++d) {
    for (std::size_t k = 0; k < resamples; ++k) col[k] = grads[k][d];
    acc += variance(col);
  }
  return c.paramCount ? acc / static_cast<double>(c.paramCount) : 0.0;
}

}  // namespace qsettle
