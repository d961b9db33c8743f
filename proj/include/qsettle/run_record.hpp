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

// Run records: everything needed to re-create a trained circuit and its
// sampling distribution, stored as JSON.

#include <fstream>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "json.hpp"
#include "qsettle/ansatz.hpp"
#include "qsettle/encoding.hpp"
#include "qsettle/optimize.hpp"
#include "qsettle/problem_io.hpp"

namespace qsettle {

inline nlohmann::json circuit_to_json(const ParamCircuit& c) {
  return {{"kind", to_string(c.kind)}, {"nAncilla", c.nAncilla}, {"nRegister", c.nRegister}, {"depth", c.depth},
          {"paramCount", c.paramCount}};
}

/// Rebuilds a hardware-efficient or register-preserving circuit.
inline ParamCircuit circuit_from_json(const nlohmann::json& j) {
  AnsatzKind kind = ansatz_kind_from_string(j.at("kind").get<std::string>());
  const auto na = j.at("nAncilla").get<unsigned>(), nr = j.at("nRegister").get<unsigned>();
  const auto d = j.at("depth").get<unsigned>();
  switch (kind) {
    case AnsatzKind::HardwareEfficient: return build_hwe(na, nr, d);
    case AnsatzKind::RegisterPreserving: return build_regpres(na, nr, d);
    default: throw std::invalid_argument(std::string("circuit_from_json: cannot rebuild a circuit of kind ") + to_string(kind));
  }
}

inline nlohmann::json covering_to_json(const Covering& cov) {
  return {{"bits", cov.bits()}, {"nAncilla", cov.nAncilla()}, {"sets", cov.sets()}};
}

inline Covering covering_from_json(const nlohmann::json& j) {
  return Covering(j.at("bits").get<std::size_t>(), j.at("nAncilla").get<unsigned>(),
                  j.at("sets").get<std::vector<std::vector<std::size_t>>>());
}

inline nlohmann::json trace_to_json(const std::vector<TraceEntry>& trace) {
  auto arr = nlohmann::json::array();
  for (const auto& t : trace) {
    nlohmann::json e = {{"iter", t.iter},
                        {"cost", t.cost},
                        {"regPenalty", t.regPenalty},
                        {"slackNorm", t.slackNorm},
                        {"wallMillis", t.wallMillis}};
    if (t.gradNorm) e["gradNorm"] = *t.gradNorm;
    arr.push_back(std::move(e));
  }
  return arr;
}

inline std::vector<TraceEntry> trace_from_json(const nlohmann::json& arr) {
  std::vector<TraceEntry> out;
  for (const auto& e : arr) {
    TraceEntry t;
    t.iter = e.at("iter").get<std::size_t>();
    t.cost = e.at("cost").get<double>();
    t.regPenalty = e.at("regPenalty").get<double>();
    t.slackNorm = e.at("slackNorm").get<double>();
    t.wallMillis = e.at("wallMillis").get<double>();
    if (e.contains("gradNorm")) t.gradNorm = e.at("gradNorm").get<double>();
    out.push_back(t);
  }
  return out;
}

struct RunRecord {
  nlohmann::json config;  // command-line settings, including the problem path and lambda
  std::string problemHash;
  nlohmann::json circuit;
  std::optional<Covering> covering;
  std::vector<TraceEntry> trace;
  std::vector<double> initialParams;
  std::vector<double> finalParams;
  std::optional<std::vector<double>> slack;  // QAOA runs only
  std::optional<double> bestCost;
  std::optional<BitVector> bestVector;
};

inline nlohmann::json run_to_json(const RunRecord& r) {
  nlohmann::json j;
  j["config"] = r.config;
  j["problemHash"] = r.problemHash;
  j["circuit"] = r.circuit;
  if (r.covering) j["covering"] = covering_to_json(*r.covering);
  j["trace"] = trace_to_json(r.trace);
  j["initialParams"] = r.initialParams;
  j["finalParams"] = r.finalParams;
  if (r.slack) j["slack"] = *r.slack;
  if (r.bestCost) j["bestCost"] = *r.bestCost;
  if (r.bestVector) j["bestVector"] = *r.bestVector;
  return j;
}

inline RunRecord run_from_json(const nlohmann::json& j) {
  try {
    RunRecord r;
    r.config = j.at("config");
    r.problemHash = j.at("problemHash").get<std::string>();
    r.circuit = j.at("circuit");
    if (j.contains("covering")) r.covering = covering_from_json(j.at("covering"));
    r.trace = trace_from_json(j.at("trace"));
    r.initialParams = j.at("initialParams").get<std::vector<double>>();
    r.finalParams = j.at("finalParams").get<std::vector<double>>();
    if (j.contains("slack")) r.slack = j.at("slack").get<std::vector<double>>();
    if (j.contains("bestCost")) r.bestCost = j.at("bestCost").get<double>();
    if (j.contains("bestVector")) r.bestVector = j.at("bestVector").get<BitVector>();
    return r;
  } catch (const nlohmann::json::exception& e) {
    throw std::invalid_argument(std::string("run record: ") + e.what());
  }
}

inline void save_run(const RunRecord& r, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write run record '" + path + "'");
  out << run_to_json(r).dump(2) << '\n';
}

inline RunRecord load_run(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open run record '" + path + "'");
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw std::invalid_argument("run record '" + path + "' is not valid JSON: " + e.what());
  }
  return run_from_json(j);
}

}  // namespace qsettle
