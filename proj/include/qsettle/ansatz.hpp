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

// Circuit builders for the compressed encoding plus the QAOA baseline, and
// numerical checks of register preservation.

#include <bit>
#include <cmath>
#include <complex>
#include <cstdint>
#include <memory>
#include <numbers>
#include <optional>
#include <random>
#include <vector>

#include "qsettle/circuit.hpp"
#include "qsettle/rng.hpp"
#include "qsettle/simulator.hpp"

namespace qsettle {

namespace detail {

inline void push_hadamards(ParamCircuit& c) {
  for (unsigned q = 0; q < c.nQubits(); ++q) c.gates.push_back(Gate::h(q));
  c.prepCount = c.gates.size();
}

}  // namespace detail

/// Hardware-efficient ansatz: H on every qubit, then `depth` layers of
/// RY on every qubit followed by two brick rows of neighbour CNOTs
/// (control on the higher index; odd pairs first, then even pairs).
inline ParamCircuit build_hwe(unsigned nAncilla, unsigned nRegister, unsigned depth) {
  require(nAncilla + nRegister >= 1, "build_hwe: need at least one qubit");
  require(depth >= 1, "build_hwe: depth must be >= 1");
  ParamCircuit c;
  c.nAncilla = nAncilla;
  c.nRegister = nRegister;
  c.depth = depth;
  c.kind = AnsatzKind::HardwareEfficient;
  detail::push_hadamards(c);
  const unsigned n = c.nQubits();
  int slot = 0;
  for (unsigned layer = 0; layer < depth; ++layer) {
    for (unsigned q = 0; q < n; ++q) c.gates.push_back(Gate::ry(q, slot++));
    for (unsigned start : {1u, 0u})
      for (unsigned q = start; q + 1 < n; q += 2) c.gates.push_back(Gate::cnot(q + 1, q));
  }
  c.paramCount = static_cast<std::size_t>(slot);
  return c;
}

/// Register-preserving ansatz: H on every qubit, an RY on each ancilla, then
/// `depth` layers. Each layer rotates every ancilla conditioned on every
/// register qubit (ancilla a, layer l starts at register qubit (a + l) mod n_r)
/// and, when depth > 1, ends with a CNOT ring c -> c+1 over the register qubits.
inline ParamCircuit build_regpres(unsigned nAncilla, unsigned nRegister, unsigned depth) {
  require(nRegister >= 1, "build_regpres: need at least one register qubit");
  require(nAncilla >= 1, "build_regpres: need at least one ancilla");
  require(depth >= 1, "build_regpres: depth must be >= 1");
  ParamCircuit c;
  c.nAncilla = nAncilla;
  c.nRegister = nRegister;
  c.depth = depth;
  c.kind = AnsatzKind::RegisterPreserving;
  detail::push_hadamards(c);
  int slot = 0;
  for (unsigned a = 0; a < nAncilla; ++a) c.gates.push_back(Gate::ry(a, slot++));
  for (unsigned layer = 0; layer < depth; ++layer) {
    for (unsigned a = 0; a < nAncilla; ++a)
      for (unsigned t = 0; t < nRegister; ++t) {
        unsigned reg = (a + layer + t) % nRegister;
        c.gates.push_back(Gate::cry(a, {nAncilla + reg}, slot++));
      }
    if (depth > 1 && nRegister > 1)
      for (unsigned r = 0; r < nRegister; ++r)
        c.gates.push_back(Gate::cnot(nAncilla + r, nAncilla + (r + 1) % nRegister));
  }
  c.paramCount = static_cast<std::size_t>(slot);
  return c;
}

/// Full-encoding QAOA: one qubit per bit, p rounds of exp(-i beta H_Q) followed
/// by exp(-i gamma sum_j X_j). Parameters are (beta_1, gamma_1, ..., beta_p, gamma_p).
/// `costDiagonal` holds x^T Q x for every basis state x.
inline ParamCircuit build_qaoa(unsigned nBits, unsigned pDepth, std::shared_ptr<const std::vector<double>> costDiagonal) {
  require(nBits >= 1 && nBits <= kMaxQubits, "build_qaoa: bit count exceeds simulator cap");
  require(pDepth >= 1, "build_qaoa: p must be >= 1");
  require(costDiagonal && costDiagonal->size() == (std::size_t{1} << nBits), "build_qaoa: diagonal has wrong size");
  ParamCircuit c;
  c.nAncilla = nBits;
  c.nRegister = 0;
  c.depth = pDepth;
  c.kind = AnsatzKind::QAOA;
  detail::push_hadamards(c);
  std::vector<unsigned> all(nBits);
  for (unsigned q = 0; q < nBits; ++q) all[q] = q;
  for (unsigned layer = 0; layer < pDepth; ++layer) {
    c.gates.push_back(Gate::phase(costDiagonal, static_cast<int>(2 * layer)));
    c.gates.push_back(Gate::rx(all, static_cast<int>(2 * layer + 1), 2.0));
  }
  c.paramCount = 2 * pDepth;
  return c;
}

// ---------------------------------------------------------------------------
// Register permutation tracking

/// Net map f of the body on register labels, if every gate that touches a
/// register qubit as a target is a classical permutation among register qubits.
inline std::optional<std::vector<std::uint64_t>> register_permutation(const ParamCircuit& c) {
  const unsigned na = c.nAncilla;
  for (std::size_t n = c.prepCount; n < c.gates.size(); ++n) {
    const Gate& g = c.gates[n];
    bool touchesRegister = false;
    for (unsigned t : g.targets) touchesRegister |= t >= na;
    if (g.kind == GateKind::DiagonalPhase) touchesRegister = true;
    if (!touchesRegister) continue;
    bool classical = g.kind == GateKind::X || g.kind == GateKind::CNOT || g.kind == GateKind::SWAP;
    if (!classical) return std::nullopt;
    for (unsigned t : g.targets)
      if (t < na) return std::nullopt;
    for (unsigned q : g.controls)
      if (q < na) return std::nullopt;
  }
  const std::uint64_t N = std::uint64_t{1} << c.nRegister;
  std::vector<std::uint64_t> f(N);
  for (std::uint64_t r = 0; r < N; ++r) {
    std::uint64_t x = r;
    for (std::size_t n = c.prepCount; n < c.gates.size(); ++n) {
      const Gate& g = c.gates[n];
      auto bit = [&](unsigned q) { return std::uint64_t{1} << (q - na); };
      bool onRegister = !g.targets.empty() && g.targets[0] >= na;
      if (!onRegister) continue;
      switch (g.kind) {
        case GateKind::X: x ^= bit(g.targets[0]); break;
        case GateKind::CNOT:
          if (x & bit(g.controls[0])) x ^= bit(g.targets[0]);
          break;
        case GateKind::SWAP: {
          bool a = x & bit(g.targets[0]), b = x & bit(g.targets[1]);
          if (a != b) x ^= bit(g.targets[0]) | bit(g.targets[1]);
          break;
        }
        default: break;
      }
    }
    f[r] = x;
  }
  return f;
}

/// Input label H^{n_a}|0>_anc (x) |f^{-1}(r)>_reg whose output always measures
/// register r. Run it with RunInput{label, /*registerHadamard=*/false}.
inline RunInput build_permuted_register_input(const ParamCircuit& c, std::uint64_t r) {
  require(c.kind == AnsatzKind::RegisterPreserving, "build_permuted_register_input: circuit is not register-preserving");
  auto f = register_permutation(c);
  if (!f) throw std::invalid_argument("build_permuted_register_input: register permutation is not tracked");
  require(r < f->size(), "build_permuted_register_input: register out of range");
  for (std::uint64_t src = 0; src < f->size(); ++src)
    if ((*f)[src] == r) return {src << c.nAncilla, false};
  throw std::logic_error("build_permuted_register_input: register map is not bijective");
}

// ---------------------------------------------------------------------------
// Register-preservation checks

/// Random register-uniform state: an independent normalized ancilla state per register.
inline StateVector random_register_uniform_state(QubitPartition part, CounterRng& rng, bool realAmplitudes = false) {
  StateVector st(part.nQubits());
  std::mt19937_64 eng(rng());
  std::normal_distribution<double> gauss;
  const std::uint64_t nAnc = std::uint64_t{1} << part.nAncilla;
  const double w = 1.0 / std::sqrt(static_cast<double>(part.registers()));
  for (std::uint64_t r = 0; r < part.registers(); ++r) {
    double norm = 0.0;
    for (std::uint64_t b = 0; b < nAnc; ++b) {
      Amplitude a(gauss(eng), realAmplitudes ? 0.0 : gauss(eng));
      st.amplitudes[(r << part.nAncilla) | b] = a;
      norm += std::norm(a);
    }
    double scale = w / std::sqrt(norm);
    for (std::uint64_t b = 0; b < nAnc; ++b) st.amplitudes[(r << part.nAncilla) | b] *= scale;
  }
  return st;
}

inline double register_uniformity_deviation(const StateVector& st, QubitPartition part) {
  auto probs = exact_register_probs(st, part);
  double target = 1.0 / static_cast<double>(part.registers()), dev = 0.0;
  for (double p : probs) dev = std::max(dev, std::abs(p - target));
  return dev;
}

struct PreservationWitness {
  std::size_t trial = 0;
  std::vector<double> params;
  double deviation = 0.0;
};

struct PreservationResult {
  bool preserving = true;
  double maxDeviation = 0.0;
  std::optional<PreservationWitness> witness;
};

/// Runs the circuit body on random register-uniform inputs at random
/// parameters and checks that the register marginal stays uniform.
inline PreservationResult is_register_preserving(const ParamCircuit& c, std::size_t trials, double tol,
                                                 std::uint64_t seed = 1) {
  require(trials >= 1, "is_register_preserving: need at least one trial");
  PreservationResult res;
  CounterRng rng(derive_seed(seed, {0x7270}));
  const QubitPartition part = c.partition();
  for (std::size_t t = 0; t < trials; ++t) {
    std::vector<double> params(c.paramCount);
    for (double& v : params) v = rng.uniform(-std::numbers::pi, std::numbers::pi);
    StateVector st = random_register_uniform_state(part, rng);
    apply_body(st, c, params);
    double dev = register_uniformity_deviation(st, part);
    res.maxDeviation = std::max(res.maxDeviation, dev);
    if (dev > tol && res.preserving) {
      res.preserving = false;
      res.witness = PreservationWitness{t, params, dev};
    }
  }
  return res;
}

struct InvolutionCheck {
  bool preserved = false;
  double deviation = 0.0;
};

/// Applies exp(-i theta/2 P) for a self-inverse register permutation P to a
/// random register-uniform state (real amplitudes unless `complexInput`).
inline InvolutionCheck check_involution_rotation(const std::vector<std::uint64_t>& perm, unsigned nAncilla,
                                                 double theta, std::uint64_t seed = 1, bool complexInput = false,
                                                 double tol = 1e-10) {
  const std::uint64_t N = perm.size();
  require(N >= 1 && (N & (N - 1)) == 0, "check_involution_rotation: permutation size must be a power of two");
  for (std::uint64_t r = 0; r < N; ++r) {
    require(perm[r] < N, "check_involution_rotation: permutation entry out of range");
    if (perm[perm[r]] != r) throw std::invalid_argument("check_involution_rotation: permutation is not self-inverse");
  }
  QubitPartition part{nAncilla, static_cast<unsigned>(std::countr_zero(N))};
  CounterRng rng(derive_seed(seed, {0x6c32}));
  StateVector in = random_register_uniform_state(part, rng, !complexInput);
  StateVector out = in;
  const double c = std::cos(theta / 2), s = std::sin(theta / 2);
  const std::uint64_t nAnc = std::uint64_t{1} << nAncilla;
  for (std::uint64_t r = 0; r < N; ++r)
    for (std::uint64_t b = 0; b < nAnc; ++b)
      out.amplitudes[(r << nAncilla) | b] =
          c * in.amplitudes[(r << nAncilla) | b] - Amplitude(0, s) * in.amplitudes[(perm[r] << nAncilla) | b];
  InvolutionCheck res;
  res.deviation = register_uniformity_deviation(out, part);
  res.preserved = res.deviation <= tol;
  return res;
}

}  // namespace qsettle
