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

// End-to-end walk through the library: generate a 12-transaction batch, train
// a register-preserving circuit on it and compare sampled settlements with
// the exhaustive optimum.
//
//   qsettle_demo [path/to/trades.csv]

#include <cstdio>
#include <exception>
#include <string>

#include "qsettle/qsettle.hpp"

int main(int argc, char** argv) try {
  using namespace qsettle;
  const std::string csv = argc > 1 ? argv[1] : "data/sample_trades.csv";

  GenerateOptions gen;
  gen.single_security = true;
  const auto source = load_transactions(csv);
  const SettlementProblem problem = normalize(generate_instance(source, 12, 8, 3, 7, gen));
  const QuboData q = build_qubo(problem, 1.0);

  const Covering cov = build_covering(problem, 4, 0, 7);
  const ParamCircuit circuit = build_regpres(4, cov.nRegister(), 3);
  std::printf("%zu transactions, %zu parties, %u qubits, %zu parameters\n", problem.I, problem.K,
              circuit.nQubits(), circuit.paramCount);

  TrainConfig train_cfg;
  train_cfg.maxIters = 150;
  train_cfg.seed = 7;
  const TrainResult trained = train(circuit, q, cov, train_cfg);
  std::printf("estimated cost %.4f -> %.4f\n", trained.trace.front().cost, trained.trace.back().cost);

  EvalConfig eval_cfg;
  eval_cfg.nVectors = 500;
  const EvalResult ev = evaluate(circuit, trained.params, cov, q, eval_cfg);
  const auto test = rank_sum_test(ev.costs, ev.randomCosts);
  const auto opt = brute_force(q);

  std::printf("median sampled cost %.4f, random %.4f (rank-sum p = %.2g)\n", median(ev.costs),
              median(ev.randomCosts), test.pLess);
  std::printf("best sampled %.4f, optimum %.4f\nbest vector ", ev.bestCost, opt.costOpt);
  for (auto b : ev.bestVector) std::putchar(b ? '1' : '0');
  std::putchar('\n');
  return 0;
} catch (const std::exception& e) {
  std::fprintf(stderr, "qsettle_demo: %s\n", e.what());
  return 1;
}
