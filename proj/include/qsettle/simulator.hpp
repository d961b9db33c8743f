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

// Dense statevector simulation. Qubit q is bit q of the basis index.

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstdint>
#include <random>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "qsettle/circuit.hpp"
#include "qsettle/rng.hpp"

namespace qsettle {

using Amplitude = std::complex<double>;

inline constexpr unsigned kMaxQubits = 24;

struct StateVector {
  unsigned nQubits = 0;
  std::vector<Amplitude> amplitudes;

  StateVector() = default;
  explicit StateVector(unsigned n, std::uint64_t basis = 0) : nQubits(n) {
    require(n <= kMaxQubits, "StateVector: at most " + std::to_string(kMaxQubits) + " qubits");
    amplitudes.assign(std::size_t{1} << n, Amplitude{});
    require(basis < amplitudes.size(), "StateVector: basis label out of range");
    amplitudes[basis] = 1.0;
  }

  std::size_t dim() const { return amplitudes.size(); }

  double norm2() const {
    double s = 0.0;
    for (const auto& a : amplitudes) s += std::norm(a);
    return s;
  }

  std::vector<double> probabilities() const {
    std::vector<double> p(dim());
    for (std::size_t i = 0; i < dim(); ++i) p[i] = std::norm(amplitudes[i]);
    return p;
  }
};

namespace detail {

// Applies the 2x2 matrix [[m00, m01], [m10, m11]] to qubit t on every basis
// pair whose control bits (mask) match `value`.
inline void apply_1q(StateVector& st, unsigned t, Amplitude m00, Amplitude m01, Amplitude m10, Amplitude m11,
                     std::uint64_t mask = 0, std::uint64_t value = 0) {
  const std::uint64_t bit = std::uint64_t{1} << t;
  auto* a = st.amplitudes.data();
  const std::uint64_t n = st.dim();
  for (std::uint64_t base = 0; base < n; base += 2 * bit)
    for (std::uint64_t i = base; i < base + bit; ++i) {
      if ((i & mask) != value) continue;
      Amplitude x0 = a[i], x1 = a[i | bit];
      a[i] = m00 * x0 + m01 * x1;
      a[i | bit] = m10 * x0 + m11 * x1;
    }
}

// Real-valued rotation fast path (RY family).
inline void apply_ry(StateVector& st, unsigned t, double angle, std::uint64_t mask = 0, std::uint64_t value = 0) {
  const double c = std::cos(angle / 2), s = std::sin(angle / 2);
  const std::uint64_t bit = std::uint64_t{1} << t;
  auto* a = st.amplitudes.data();
  const std::uint64_t n = st.dim();
  for (std::uint64_t base = 0; base < n; base += 2 * bit)
    for (std::uint64_t i = base; i < base + bit; ++i) {
      if ((i & mask) != value) continue;
      Amplitude x0 = a[i], x1 = a[i | bit];
      a[i] = c * x0 - s * x1;
      a[i | bit] = s * x0 + c * x1;
    }
}

// exp(-i angle X / 2) on qubit t, in real arithmetic.
inline void apply_rx(StateVector& st, unsigned t, double angle) {
  const double c = std::cos(angle / 2), s = std::sin(angle / 2);
  const std::uint64_t bit = std::uint64_t{1} << t;
  auto* a = reinterpret_cast<double*>(st.amplitudes.data());
  const std::uint64_t n = st.dim();
  for (std::uint64_t base = 0; base < n; base += 2 * bit)
    for (std::uint64_t i = base; i < base + bit; ++i) {
      double* x = a + 2 * i;
      double* y = a + 2 * (i | bit);
      const double xr = x[0], xi = x[1], yr = y[0], yi = y[1];
      x[0] = c * xr + s * yi;
      x[1] = c * xi - s * yr;
      y[0] = c * yr + s * xi;
      y[1] = c * yi - s * xr;
    }
}

inline void check_qubit(const StateVector& st, unsigned q) {
  if (q >= st.nQubits)
    throw std::out_of_range("gate qubit " + std::to_string(q) + " out of range for " +
                            std::to_string(st.nQubits) + " qubits");
}

}  // namespace detail

inline void validate_gate(const Gate& g, unsigned nQubits) {
  auto in_range = [&](unsigned q) {
    if (q >= nQubits)
      throw std::out_of_range(std::string(to_string(g.kind)) + ": qubit " + std::to_string(q) + " out of range");
  };
  for (unsigned q : g.targets) in_range(q);
  for (unsigned q : g.controls) in_range(q);
  for (std::size_t a = 0; a < g.targets.size(); ++a)
    for (std::size_t b = a + 1; b < g.targets.size(); ++b)
      require(g.targets[a] != g.targets[b], std::string(to_string(g.kind)) + ": repeated target");
  for (unsigned c : g.controls)
    require(std::find(g.targets.begin(), g.targets.end(), c) == g.targets.end(),
            std::string(to_string(g.kind)) + ": control overlaps target");
  require(g.controlValues.size() == g.controls.size(), "gate control values do not match controls");
  switch (g.kind) {
    case GateKind::H:
    case GateKind::X:
    case GateKind::RY:
      require(g.targets.size() == 1 && g.controls.empty(), "single-qubit gate expects one target");
      break;
    case GateKind::CRY:
      require(g.targets.size() == 1 && !g.controls.empty(), "CRY expects one target and controls");
      break;
    case GateKind::CNOT:
      require(g.targets.size() == 1 && g.controls.size() == 1, "CNOT expects one control and one target");
      break;
    case GateKind::SWAP:
      require(g.targets.size() == 2, "SWAP expects two targets");
      break;
    case GateKind::DiagonalPhase:
      require(g.diagonal && g.diagonal->size() == (std::size_t{1} << nQubits),
              "DiagonalPhase needs 2^n diagonal values");
      break;
    case GateKind::RX:
      require(!g.targets.empty(), "RX expects at least one target");
      break;
  }
}

inline double gate_angle(const Gate& g, std::span<const double> params) {
  if (g.slot < 0) return 0.0;
  if (static_cast<std::size_t>(g.slot) >= params.size())
    throw std::out_of_range("gate parameter slot " + std::to_string(g.slot) + " out of range");
  return g.scale * params[static_cast<std::size_t>(g.slot)];
}

/// Applies one gate in place.
inline void apply(StateVector& st, const Gate& g, std::span<const double> params = {}) {
  validate_gate(g, st.nQubits);
  const double angle = gate_angle(g, params);
  switch (g.kind) {
    case GateKind::H: {
      const double r = 1.0 / std::sqrt(2.0);
      detail::apply_1q(st, g.targets[0], r, r, r, -r);
      break;
    }
    case GateKind::X:
      detail::apply_1q(st, g.targets[0], 0.0, 1.0, 1.0, 0.0);
      break;
    case GateKind::RY:
      detail::apply_ry(st, g.targets[0], angle);
      break;
    case GateKind::CRY: {
      std::uint64_t mask = 0, value = 0;
      for (std::size_t c = 0; c < g.controls.size(); ++c) {
        mask |= std::uint64_t{1} << g.controls[c];
        if (g.controlValues[c]) value |= std::uint64_t{1} << g.controls[c];
      }
      detail::apply_ry(st, g.targets[0], angle, mask, value);
      break;
    }
    case GateKind::CNOT: {
      std::uint64_t c = std::uint64_t{1} << g.controls[0];
      detail::apply_1q(st, g.targets[0], 0.0, 1.0, 1.0, 0.0, c, c);
      break;
    }
    case GateKind::SWAP: {
      const std::uint64_t a = std::uint64_t{1} << g.targets[0], b = std::uint64_t{1} << g.targets[1];
      for (std::uint64_t i = 0; i < st.dim(); ++i)
        if ((i & a) && !(i & b)) std::swap(st.amplitudes[i], st.amplitudes[(i & ~a) | b]);
      break;
    }
    case GateKind::DiagonalPhase: {
      const auto& d = *g.diagonal;
      auto* a = reinterpret_cast<double*>(st.amplitudes.data());
      for (std::size_t i = 0; i < st.dim(); ++i) {
        const double phi = -angle * d[i], c = std::cos(phi), s = std::sin(phi);
        const double re = a[2 * i], im = a[2 * i + 1];
        a[2 * i] = c * re - s * im;
        a[2 * i + 1] = s * re + c * im;
      }
      break;
    }
    case GateKind::RX: {
      for (unsigned t : g.targets) detail::apply_rx(st, t, angle);
      break;
    }
  }
}

/// Initial state for run(): a computational basis label, optionally with the
/// circuit's Hadamard preparation skipped on the register qubits.
struct RunInput {
  std::uint64_t basis = 0;
  bool registerHadamard = true;
};

inline StateVector run(const ParamCircuit& circuit, std::span<const double> params, RunInput input = {}) {
  if (params.size() != circuit.paramCount)
    throw std::invalid_argument("run: expected " + std::to_string(circuit.paramCount) + " parameters, got " +
                                std::to_string(params.size()));
  StateVector st(circuit.nQubits(), input.basis);
  for (std::size_t n = 0; n < circuit.gates.size(); ++n) {
    const Gate& g = circuit.gates[n];
    if (n < circuit.prepCount && !input.registerHadamard && g.kind == GateKind::H &&
        g.targets[0] >= circuit.nAncilla)
      continue;
    apply(st, g, params);
  }
  return st;
}

/// Runs only the gates after the preparation layer on a given state.
inline void apply_body(StateVector& st, const ParamCircuit& circuit, std::span<const double> params) {
  require(params.size() == circuit.paramCount, "apply_body: parameter count mismatch");
  for (std::size_t n = circuit.prepCount; n < circuit.gates.size(); ++n) apply(st, circuit.gates[n], params);
}

// ---------------------------------------------------------------------------
// Measurement

struct MeasurementRecord {
  std::uint64_t ancillaBits = 0;  // bit l-1 holds ancilla l
  std::uint64_t registerIndex = 0;

  friend bool operator==(const MeasurementRecord&, const MeasurementRecord&) = default;
};

/// Inverse-CDF sampler over a fixed probability vector.
class BasisSampler {
 public:
  explicit BasisSampler(std::span<const double> probs) : cdf_(probs.size()) {
    double acc = 0.0;
    for (std::size_t i = 0; i < probs.size(); ++i) cdf_[i] = acc += probs[i];
    require(acc > 0.0, "BasisSampler: zero total probability");
  }
  explicit BasisSampler(const StateVector& st) : BasisSampler(st.probabilities()) {}

  std::uint64_t draw(CounterRng& rng) const {
    double u = rng.uniform() * cdf_.back();
    auto it = std::upper_bound(cdf_.begin(), cdf_.end(), u);
    if (it == cdf_.end()) --it;
    return static_cast<std::uint64_t>(it - cdf_.begin());
  }

  std::size_t dim() const { return cdf_.size(); }

 private:
  std::vector<double> cdf_;
};

inline MeasurementRecord split_basis(std::uint64_t basis, QubitPartition part) {
  return {basis & part.ancillaMask(), basis >> part.nAncilla};
}

inline std::vector<MeasurementRecord> sample(const StateVector& st, std::size_t nShots, std::uint64_t seed,
                                             QubitPartition part) {
  require(part.nQubits() == st.nQubits, "sample: partition does not match state");
  require(nShots >= 1, "sample: need at least one shot");
  BasisSampler sampler(st);
  CounterRng rng(seed);
  std::vector<MeasurementRecord> out;
  out.reserve(nShots);
  for (std::size_t n = 0; n < nShots; ++n) out.push_back(split_basis(sampler.draw(rng), part));
  return out;
}

/// Histogram of nShots inverse-CDF draws over basis states.
inline std::vector<std::uint32_t> sample_histogram(const StateVector& st, std::size_t nShots, std::uint64_t seed) {
  BasisSampler sampler(st);
  CounterRng rng(seed);
  std::vector<std::uint32_t> hist(st.dim(), 0);
  for (std::size_t n = 0; n < nShots; ++n) ++hist[sampler.draw(rng)];
  return hist;
}

/// Multinomial counts of nShots draws, via conditional binomials. Cheaper
/// than sample_histogram for large shot counts, with a different stream.
inline std::vector<std::uint32_t> multinomial_histogram(std::span<const double> probs, std::size_t nShots,
                                                        std::uint64_t seed) {
  CounterRng rng(seed);
  std::vector<std::uint32_t> hist(probs.size(), 0);
  double rest = 0.0;
  for (double v : probs) rest += v;
  auto left = static_cast<long long>(nShots);
  for (std::size_t i = 0; i < probs.size() && left > 0; ++i) {
    if (probs[i] <= 0.0) continue;
    double q = rest > 0.0 ? std::clamp(probs[i] / rest, 0.0, 1.0) : 1.0;
    long long k = q >= 1.0 ? left : std::binomial_distribution<long long>(left, q)(rng);
    hist[i] = static_cast<std::uint32_t>(k);
    left -= k;
    rest -= probs[i];
  }
  return hist;
}

/// Diagonal of the register-reduced density matrix.
inline std::vector<double> exact_register_probs(const StateVector& st, QubitPartition part) {
  require(part.nQubits() == st.nQubits, "exact_register_probs: partition does not match state");
  std::vector<double> probs(part.registers(), 0.0);
  for (std::size_t i = 0; i < st.dim(); ++i) probs[i >> part.nAncilla] += std::norm(st.amplitudes[i]);
  return probs;
}

}  // namespace qsettle
