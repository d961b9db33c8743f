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

#include <cstdint>
#include <memory>
#include <string>
#include <vector>

#include "qsettle/matrix.hpp"

namespace qsettle {

enum class GateKind { H, X, RY, CRY, CNOT, SWAP, DiagonalPhase, RX };

inline const char* to_string(GateKind k) {
  switch (k) {
    case GateKind::H: return "H";
    case GateKind::X: return "X";
    case GateKind::RY: return "RY";
    case GateKind::CRY: return "CRY";
    case GateKind::CNOT: return "CNOT";
    case GateKind::SWAP: return "SWAP";
    case GateKind::DiagonalPhase: return "DiagonalPhase";
    case GateKind::RX: return "RX";
  }
  return "?";
}

/// One gate of a parameterized program. Rotation angles are
/// `scale * params[slot]`; slot < 0 means the gate is fixed.
///
/// RY/CRY: exp(-i angle Y / 2) on targets[0], conditioned on every controls[c]
/// reading controlValues[c]. RX applies exp(-i angle X / 2) to every target.
/// DiagonalPhase multiplies amplitude x by exp(-i angle diagonal[x]).
struct Gate {
  GateKind kind = GateKind::H;
  std::vector<unsigned> targets;
  std::vector<unsigned> controls;
  std::vector<std::uint8_t> controlValues;
  int slot = -1;
  double scale = 1.0;
  std::shared_ptr<const std::vector<double>> diagonal;

  static Gate make(GateKind kind, std::vector<unsigned> targets, std::vector<unsigned> controls = {},
                   std::vector<std::uint8_t> values = {}, int slot = -1, double scale = 1.0,
                   std::shared_ptr<const std::vector<double>> diag = nullptr) {
    Gate g;
    g.kind = kind;
    g.targets = std::move(targets);
    g.controls = std::move(controls);
    g.controlValues = std::move(values);
    g.slot = slot;
    g.scale = scale;
    g.diagonal = std::move(diag);
    return g;
  }
  static Gate h(unsigned q) { return make(GateKind::H, {q}); }
  static Gate x(unsigned q) { return make(GateKind::X, {q}); }
  static Gate cnot(unsigned control, unsigned target) { return make(GateKind::CNOT, {target}, {control}, {1}); }
  static Gate swap(unsigned a, unsigned b) { return make(GateKind::SWAP, {a, b}); }
  static Gate ry(unsigned q, int slot) { return make(GateKind::RY, {q}, {}, {}, slot); }
  static Gate cry(unsigned target, std::vector<unsigned> controls, int slot,
                  std::vector<std::uint8_t> values = {}) {
    if (values.empty()) values.assign(controls.size(), 1);
    return make(GateKind::CRY, {target}, std::move(controls), std::move(values), slot);
  }
  static Gate rx(std::vector<unsigned> targets, int slot, double scale = 1.0) {
    return make(GateKind::RX, std::move(targets), {}, {}, slot, scale);
  }
  static Gate phase(std::shared_ptr<const std::vector<double>> diag, int slot, double scale = 1.0) {
    return make(GateKind::DiagonalPhase, {}, {}, {}, slot, scale, std::move(diag));
  }

  bool parameterized() const { return slot >= 0; }
};

/// Split of the qubits into measured ancillas (low indices) and the register
/// address (high indices). Register r is basis >> nAncilla.
struct QubitPartition {
  unsigned nAncilla = 0;
  unsigned nRegister = 0;

  unsigned nQubits() const { return nAncilla + nRegister; }
  std::uint64_t registers() const { return std::uint64_t{1} << nRegister; }
  std::uint64_t ancillaMask() const { return (std::uint64_t{1} << nAncilla) - 1; }
};

enum class AnsatzKind { HardwareEfficient, RegisterPreserving, QAOA, Custom };

inline const char* to_string(AnsatzKind k) {
  switch (k) {
    case AnsatzKind::HardwareEfficient: return "hwe";
    case AnsatzKind::RegisterPreserving: return "regpres";
    case AnsatzKind::QAOA: return "qaoa";
    case AnsatzKind::Custom: return "custom";
  }
  return "?";
}

inline AnsatzKind ansatz_kind_from_string(const std::string& s) {
  if (s == "hwe") return AnsatzKind::HardwareEfficient;
  if (s == "regpres") return AnsatzKind::RegisterPreserving;
  if (s == "qaoa") return AnsatzKind::QAOA;
  if (s == "custom") return AnsatzKind::Custom;
  throw std::invalid_argument("unknown ansatz kind '" + s + "'");
}

/// Parameterized gate program. The first `prepCount` gates form the Hadamard
/// preparation layer; run() can restrict it to the ancillas for register sweeps.
struct ParamCircuit {
  unsigned nAncilla = 0;
  unsigned nRegister = 0;
  unsigned depth = 0;
  AnsatzKind kind = AnsatzKind::Custom;
  std::vector<Gate> gates;
  std::size_t paramCount = 0;
  std::size_t prepCount = 0;

  unsigned nQubits() const { return nAncilla + nRegister; }
  QubitPartition partition() const { return {nAncilla, nRegister}; }
};

/// Appends the body of `tail` (its gates after the preparation layer) to `head`.
/// Parameter slots of `tail` are shifted past `head`'s.
inline ParamCircuit concatenate(const ParamCircuit& head, const ParamCircuit& tail) {
  require(head.nAncilla == tail.nAncilla && head.nRegister == tail.nRegister,
          "concatenate: circuits act on different qubit partitions");
  ParamCircuit out = head;
  out.depth = head.depth + tail.depth;
  if (head.kind != tail.kind) out.kind = AnsatzKind::Custom;
  for (std::size_t n = tail.prepCount; n < tail.gates.size(); ++n) {
    Gate g = tail.gates[n];
    if (g.slot >= 0) g.slot += static_cast<int>(head.paramCount);
    out.gates.push_back(std::move(g));
  }
  out.paramCount = head.paramCount + tail.paramCount;
  return out;
}

}  // namespace qsettle
