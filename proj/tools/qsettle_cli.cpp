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

// qsettle: batch front end for instance generation, training, evaluation,
// the QAOA baseline, brute-force reference tables and gradient-noise studies.

#include <CLI11.hpp>

#include <algorithm>
#include <cstdint>
#include <exception>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <locale>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "qsettle/qsettle.hpp"

namespace {

using namespace qsettle;

// CSV writer with classic-locale, round-trip formatting and '#' header lines.
class CsvOut {
 public:
  explicit CsvOut(const std::string& path) : path_(path) {
    buf_.imbue(std::locale::classic());
    buf_.precision(17);
  }

  void comment(const std::string& key, const std::string& value) { buf_ << "# " << key << '=' << value << '\n'; }
  std::ostream& row() { return buf_; }

  void write() {
    std::ofstream out(path_, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write '" + path_ + "'");
    out << buf_.str();
  }

 private:
  std::string path_;
  std::ostringstream buf_;
};

std::string bit_string(const BitVector& x) {
  std::string s;
  for (auto b : x) s.push_back(b ? '1' : '0');
  return s;
}

std::string absolute(const std::string& path) { return std::filesystem::absolute(path).lexically_normal().string(); }

std::string num(double v) {
  std::ostringstream s;
  s.imbue(std::locale::classic());
  s.precision(17);
  s << v;
  return s.str();
}

void comment_config(CsvOut& csv, const std::string& prefix, const nlohmann::json& cfg) {
  for (const auto& [k, v] : cfg.items()) csv.comment(prefix + k, v.is_string() ? v.get<std::string>() : v.dump());
}

// "1..8", "2,4,6" or a mix such as "1..3,6".
std::vector<unsigned> parse_depths(const std::string& text) {
  std::vector<unsigned> out;
  std::stringstream ss(text);
  std::string part;
  auto parse = [&](const std::string& s) {
    std::size_t used = 0;
    unsigned long v = 0;
    try {
      v = std::stoul(s, &used);
    } catch (const std::exception&) {
      used = 0;
    }
    if (used != s.size() || s.empty() || v == 0) throw std::invalid_argument("bad depth list '" + text + "'");
    return static_cast<unsigned>(v);
  };
  while (std::getline(ss, part, ',')) {
    auto dots = part.find("..");
    if (dots == std::string::npos) {
      out.push_back(parse(part));
      continue;
    }
    unsigned lo = parse(part.substr(0, dots)), hi = parse(part.substr(dots + 2));
    if (hi < lo) throw std::invalid_argument("bad depth range '" + part + "'");
    for (unsigned d = lo; d <= hi; ++d) out.push_back(d);
  }
  if (out.empty()) throw std::invalid_argument("empty depth list");
  return out;
}

ParamCircuit build_ansatz(const std::string& kind, unsigned na, unsigned nr, unsigned depth) {
  if (kind == "regpres") return build_regpres(na, nr, depth);
  if (kind == "hwe") return build_hwe(na, nr, depth);
  throw std::invalid_argument("unknown ansatz '" + kind + "' (expected hwe or regpres)");
}

void check_qubits(const Covering& cov) {
  const unsigned n = cov.nAncilla() + cov.nRegister();
  if (n > kMaxQubits)
    throw std::invalid_argument("circuit needs " + std::to_string(n) + " qubits; the simulator cap is " +
                                std::to_string(kMaxQubits));
}

// ---------------------------------------------------------------------------

struct GenArgs {
  std::string source, out;
  std::size_t I = 16, K = 10;
  std::optional<std::size_t> R;
  std::uint64_t seed = 0;
  bool allSecurities = false, raw = false;
};

void run_gen(const GenArgs& a) {
  GenerateOptions opts;
  opts.single_security = !a.allSecurities;
  const std::size_t R = a.R.value_or(a.I / 4);
  SettlementProblem p = generate_instance(load_transactions(a.source), a.I, a.K, R, a.seed, opts);
  if (!a.raw) p = normalize(p);
  save_problem(p, a.out);
  std::cout << "instance: I=" << p.I << " K=" << p.K << " J=" << p.J << " R=" << R << " seed=" << a.seed
            << " hash=" << problem_hash(p) << '\n';
}

struct TrainArgs {
  std::string problem, ansatz = "regpres", optimizer = "desc", mu = "crossRegister", out;
  unsigned na = 4, nrPlus = 0, depth = 4;
  std::size_t shots = 20000, iters = 200;
  double lambda = 1.0, lr = 0.03;
  std::optional<double> eta;
  std::uint64_t seed = 0;
  bool exact = false;
};

void run_train(const TrainArgs& a) {
  SettlementProblem p = load_problem(a.problem);
  QuboData q = build_qubo(p, a.lambda);
  Covering cov = build_covering(p, a.na, a.nrPlus, a.seed);
  check_qubits(cov);
  ParamCircuit c = build_ansatz(a.ansatz, cov.nAncilla(), cov.nRegister(), a.depth);
  TrainConfig cfg;
  cfg.optimizer = optimizer_kind_from_string(a.optimizer);
  cfg.learningRate = a.lr;
  cfg.maxIters = a.iters;
  cfg.nShots = a.shots;
  cfg.seed = a.seed;
  cfg.eta = a.eta.value_or(a.ansatz == "hwe" ? 1.0 : 0.0);
  cfg.exactMode = a.exact;
  cfg.muMode = mu_mode_from_string(a.mu);
  TrainResult res = train(c, q, cov, cfg);

  RunRecord rec;
  rec.config = {{"command", "train"},     {"problem", absolute(a.problem)}, {"ansatz", a.ansatz},
                {"ancillas", a.na},       {"extraRegisters", a.nrPlus},     {"depth", a.depth},
                {"optimizer", a.optimizer}, {"shots", a.shots},             {"lambda", a.lambda},
                {"eta", cfg.eta},         {"learningRate", a.lr},           {"iters", a.iters},
                {"mu", a.mu},             {"exact", a.exact},               {"seed", a.seed}};
  rec.problemHash = problem_hash(p);
  rec.circuit = circuit_to_json(c);
  rec.covering = cov;
  rec.trace = res.trace;
  rec.initialParams = res.initialParams;
  rec.finalParams = res.params;
  save_run(rec, a.out);
  const auto& last = res.trace.back();
  std::cout << "trained " << a.ansatz << " (" << c.nQubits() << " qubits, " << c.paramCount
            << " parameters): cost " << res.trace.front().cost << " -> " << last.cost << " in " << res.trace.size()
            << " iterations\n";
}

struct QaoaArgs {
  std::string problem, out;
  unsigned pDepth = 1;
  std::size_t cycles = 50, innerIters = 1000, shots = 20000;
  double lambda = 1.0;
  std::uint64_t seed = 0;
};

void run_qaoa(const QaoaArgs& a) {
  SettlementProblem p = load_problem(a.problem);
  QuboData q = build_qubo(p, a.lambda);
  QaoaConfig cfg;
  cfg.pDepth = a.pDepth;
  cfg.cycles = a.cycles;
  cfg.innerIters = a.innerIters;
  cfg.nShots = a.shots;
  cfg.seed = a.seed;
  QaoaResult res = qaoa_train(q, cfg);

  RunRecord rec;
  rec.config = {{"command", "qaoa"},   {"problem", absolute(a.problem)}, {"pDepth", a.pDepth},
                {"cycles", a.cycles},  {"innerIters", a.innerIters},     {"shots", a.shots},
                {"lambda", a.lambda},  {"seed", a.seed}};
  rec.problemHash = problem_hash(p);
  rec.circuit = {{"kind", "qaoa"}, {"nAncilla", p.I}, {"nRegister", 0}, {"depth", a.pDepth}, {"paramCount", 2 * a.pDepth}};
  rec.covering = full_covering(p.I);
  rec.trace = res.trace;
  rec.finalParams = res.params;
  rec.slack = res.slack;
  save_run(rec, a.out);
  std::cout << "qaoa p=" << a.pDepth << ": " << res.trace.size() << " optimizer steps, final sampled mean "
            << res.trace.back().cost << '\n';
}

struct EvalArgs {
  std::string run, out, problem;
  std::size_t vectors = 1000, shots = 24000;
  std::optional<std::uint64_t> seed;
  bool sweep = false, updateRun = false;
};

void run_evaluate(const EvalArgs& a) {
  RunRecord rec = load_run(a.run);
  const std::string problemPath = a.problem.empty() ? rec.config.at("problem").get<std::string>() : a.problem;
  SettlementProblem p = load_problem(problemPath);
  if (problem_hash(p) != rec.problemHash)
    throw std::invalid_argument("problem '" + problemPath + "' does not match the run record (hash " +
                                problem_hash(p) + " vs " + rec.problemHash + ")");
  QuboData q = build_qubo(p, rec.config.at("lambda").get<double>());
  const bool isQaoa = rec.circuit.at("kind").get<std::string>() == "qaoa";
  ParamCircuit c = isQaoa ? qaoa_circuit(q, rec.slack.value(), rec.circuit.at("depth").get<unsigned>())
                          : circuit_from_json(rec.circuit);
  Covering cov = rec.covering ? *rec.covering : full_covering(p.I);
  if (rec.finalParams.size() != c.paramCount)
    throw std::invalid_argument("run record has " + std::to_string(rec.finalParams.size()) +
                                " parameters, circuit expects " + std::to_string(c.paramCount));
  EvalConfig ec;
  ec.nVectors = a.vectors;
  ec.nShots = a.shots;
  ec.seed = a.seed.value_or(rec.config.value("seed", std::uint64_t{0}));
  ec.registerSweep = a.sweep;
  EvalResult r = evaluate(c, rec.finalParams, cov, q, ec);

  CsvOut csv(a.out);
  csv.comment("command", "evaluate");
  csv.comment("run", absolute(a.run));
  csv.comment("vectors", std::to_string(a.vectors));
  csv.comment("shots", std::to_string(a.shots));
  csv.comment("evalSeed", std::to_string(ec.seed));
  csv.comment("registerSweep", a.sweep ? "true" : "false");
  comment_config(csv, "run.", rec.config);
  csv.comment("shotsUsed", std::to_string(r.shotsUsed));
  csv.comment("bestVector", bit_string(r.bestVector));
  csv.comment("bestCost", num(r.bestCost));
  csv.row() << "cost,ecdf,random_cost,random_ecdf\n";
  for (std::size_t k = 0; k < r.ecdf.size(); ++k)
    csv.row() << r.ecdf[k].cost << ',' << r.ecdf[k].ecdf << ',' << r.randomEcdf[k].cost << ','
              << r.randomEcdf[k].ecdf << '\n';
  csv.write();
  if (a.updateRun) {
    rec.bestCost = r.bestCost;
    rec.bestVector = r.bestVector;
    save_run(rec, a.run);
  }
  auto test = rank_sum_test(r.costs, r.randomCosts);
  std::cout << "evaluated " << a.vectors << " vectors from " << r.shotsUsed << " shots: best " << r.bestCost
            << " (" << bit_string(r.bestVector) << "), median " << median(r.costs) << " vs random "
            << median(r.randomCosts) << ", rank-sum p(less)=" << test.pLess << '\n';
}

struct OracleArgs {
  std::string problem, out;
  double lambda = 1.0;
};

void run_oracle(const OracleArgs& a) {
  SettlementProblem p = load_problem(a.problem);
  QuboData q = build_qubo(p, a.lambda);
  const bool dump = !a.out.empty() && p.I <= 16;
  BruteForceResult bf = brute_force(q, dump);
  std::cout << "optimum " << bf.costOpt << " at " << bit_string(bf.xOpt) << " (settles "
            << std::count(bf.xOpt.begin(), bf.xOpt.end(), 1) << " of " << p.I << ")\n";
  if (a.out.empty()) return;
  CsvOut csv(a.out);
  csv.comment("command", "oracle");
  csv.comment("problem", absolute(a.problem));
  csv.comment("problemHash", problem_hash(p));
  csv.comment("lambda", num(a.lambda));
  csv.comment("optimum", bit_string(bf.xOpt));
  csv.row() << "index,bits,cost\n";
  if (dump) {
    for (std::uint64_t k = 0; k < bf.table.size(); ++k)
      csv.row() << k << ',' << bit_string(bits_of_index(k, p.I)) << ',' << bf.table[k] << '\n';
  } else {
    if (p.I > 16) std::cerr << "note: table dump is limited to I <= 16; writing the optimum only\n";
    csv.row() << bf.indexOpt << ',' << bit_string(bf.xOpt) << ',' << bf.costOpt << '\n';
  }
  csv.write();
}

struct GradvarArgs {
  std::string problem, out, depths = "1..8", ansatze = "hwe,regpres";
  unsigned na = 4, nrPlus = 0;
  std::size_t thetaSamples = 25, resamples = 10, shots = 10000;
  double lambda = 1.0, etaHwe = 0.0;
  std::uint64_t seed = 0;
};

void run_gradvar(const GradvarArgs& a, unsigned jobs) {
  SettlementProblem p = load_problem(a.problem);
  QuboData q = build_qubo(p, a.lambda);
  Covering cov = build_covering(p, a.na, a.nrPlus, a.seed);
  check_qubits(cov);
  const auto depths = parse_depths(a.depths);
  std::vector<std::string> kinds;
  {
    std::stringstream ss(a.ansatze);
    for (std::string k; std::getline(ss, k, ',');) {
      build_ansatz(k, 1, 1, 1);
      kinds.push_back(k);
    }
  }
  struct Task {
    std::string kind;
    unsigned depth;
    std::size_t sample;
    double variance = 0.0;
  };
  std::vector<Task> tasks;
  for (const auto& k : kinds)
    for (unsigned d : depths)
      for (std::size_t s = 0; s < a.thetaSamples; ++s) tasks.push_back({k, d, s});
  parallel_for(tasks.size(), jobs, [&](std::size_t t) {
    Task& task = tasks[t];
    ParamCircuit c = build_ansatz(task.kind, cov.nAncilla(), cov.nRegister(), task.depth);
    auto th = random_params(c.paramCount, derive_seed(a.seed, {task.depth, task.sample}));
    const double eta = task.kind == "hwe" ? a.etaHwe : 0.0;
    task.variance = gradient_variance(c, th, q, cov, a.shots, a.resamples, eta,
                                      derive_seed(a.seed, {task.depth, task.sample, 1}));
  });

  CsvOut csv(a.out);
  csv.comment("command", "gradvar");
  csv.comment("problem", absolute(a.problem));
  csv.comment("problemHash", problem_hash(p));
  csv.comment("ancillas", std::to_string(a.na));
  csv.comment("extraRegisters", std::to_string(a.nrPlus));
  csv.comment("qubits", std::to_string(cov.nAncilla() + cov.nRegister()));
  csv.comment("thetaSamples", std::to_string(a.thetaSamples));
  csv.comment("resamples", std::to_string(a.resamples));
  csv.comment("shots", std::to_string(a.shots));
  csv.comment("lambda", num(a.lambda));
  csv.comment("etaHwe", num(a.etaHwe));
  csv.comment("seed", std::to_string(a.seed));
  csv.row() << "ansatz,depth,theta_sample,variance\n";
  std::map<std::pair<std::string, unsigned>, std::vector<double>> groups;
  for (const auto& t : tasks) {
    csv.row() << t.kind << ',' << t.depth << ',' << t.sample << ',' << t.variance << '\n';
    groups[{t.kind, t.depth}].push_back(t.variance);
  }
  csv.write();
  for (const auto& [key, v] : groups)
    std::cout << key.first << " d=" << key.second << ": median variance " << median(v) << '\n';
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"qsettle: qubit-efficient variational settlement optimization (classical simulation)"};
  app.require_subcommand(1);
  unsigned jobs = 0;
  app.add_option("--jobs", jobs, "Worker threads (0 = all cores)");

  GenArgs gen;
  auto* g = app.add_subcommand("gen", "Generate a settlement instance from a trade table");
  g->add_option("--source", gen.source, "Trade CSV")->required()->check(CLI::ExistingFile);
  g->add_option("--transactions", gen.I, "Number of transactions I")->required();
  g->add_option("--parties", gen.K, "Number of parties K")->required();
  g->add_option("--r-extra", gen.R, "Transactions left out of the balance construction (default floor(I/4))");
  g->add_option("--seed", gen.seed, "Random seed");
  g->add_option("--out", gen.out, "Problem JSON")->required();
  g->add_flag("--all-securities", gen.allSecurities, "Keep every security of the source (default: most frequent only)");
  g->add_flag("--no-normalize", gen.raw, "Skip per-party volume normalization");

  TrainArgs tr;
  auto* t = app.add_subcommand("train", "Train a compressed-encoding circuit");
  t->add_option("--problem", tr.problem, "Problem JSON")->required()->check(CLI::ExistingFile);
  t->add_option("--ansatz", tr.ansatz, "hwe or regpres")->check(CLI::IsMember({"hwe", "regpres"}));
  t->add_option("--ancillas", tr.na, "Ancilla qubits n_a");
  t->add_option("--extra-registers", tr.nrPlus, "Additional register qubits n_r+");
  t->add_option("--depth", tr.depth, "Circuit depth d");
  t->add_option("--optimizer", tr.optimizer, "desc or gfree")->check(CLI::IsMember({"desc", "gfree"}));
  t->add_option("--shots", tr.shots, "Shots per cost evaluation");
  t->add_option("--lambda", tr.lambda, "Penalty weight");
  t->add_option("--eta", tr.eta, "Register regularization weight (default 0 for regpres, 1 for hwe)");
  t->add_option("--lr", tr.lr, "Learning rate for desc");
  t->add_option("--mu", tr.mu, "Cross-register correction: crossRegister or seenProduct")
      ->check(CLI::IsMember({"crossRegister", "seenProduct"}));
  t->add_flag("--exact", tr.exact, "Use exact marginals instead of shots");
  t->add_option("--seed", tr.seed, "Random seed");
  t->add_option("--iters", tr.iters, "Optimizer iterations");
  t->add_option("--out", tr.out, "Run record JSON")->required();

  QaoaArgs qa;
  auto* qc = app.add_subcommand("qaoa", "Train the full-encoding QAOA baseline");
  qc->add_option("--problem", qa.problem, "Problem JSON")->required()->check(CLI::ExistingFile);
  qc->add_option("--p-depth", qa.pDepth, "QAOA rounds p");
  qc->add_option("--cycles", qa.cycles, "Slack/angle alternations");
  qc->add_option("--inner-iters", qa.innerIters, "Gradient-free steps per cycle");
  qc->add_option("--shots", qa.shots, "Shots per evaluation");
  qc->add_option("--lambda", qa.lambda, "Penalty weight");
  qc->add_option("--seed", qa.seed, "Random seed");
  qc->add_option("--out", qa.out, "Run record JSON")->required();

  EvalArgs ev;
  auto* e = app.add_subcommand("evaluate", "Sample bit-vectors from a trained run and write their ECDF");
  e->add_option("--run", ev.run, "Run record JSON")->required()->check(CLI::ExistingFile);
  e->add_option("--problem", ev.problem, "Problem JSON (default: the path stored in the run)");
  e->add_option("--vectors", ev.vectors, "Bit-vectors to draw");
  e->add_option("--shots", ev.shots, "Shots per batch");
  e->add_option("--seed", ev.seed, "Sampling seed (default: the run's seed)");
  e->add_flag("--register-sweep", ev.sweep, "Cycle the register input instead of sampling registers at random");
  e->add_flag("--update-run", ev.updateRun, "Store the best vector and cost in the run record");
  e->add_option("--out", ev.out, "ECDF CSV")->required();

  OracleArgs orc;
  auto* o = app.add_subcommand("oracle", "Brute-force optimum and cost table");
  o->add_option("--problem", orc.problem, "Problem JSON")->required()->check(CLI::ExistingFile);
  o->add_option("--lambda", orc.lambda, "Penalty weight");
  o->add_option("--out", orc.out, "Cost table CSV (full table for I <= 16)");

  GradvarArgs gv;
  auto* v = app.add_subcommand("gradvar", "Shot-noise variance of the gradient estimator by depth");
  v->add_option("--problem", gv.problem, "Problem JSON")->required()->check(CLI::ExistingFile);
  v->add_option("--ancillas", gv.na, "Ancilla qubits n_a");
  v->add_option("--extra-registers", gv.nrPlus, "Additional register qubits n_r+");
  v->add_option("--depths", gv.depths, "Depths, e.g. 1..8 or 1,2,4");
  v->add_option("--ansatze", gv.ansatze, "Comma-separated ansatz kinds");
  v->add_option("--theta-samples", gv.thetaSamples, "Random parameter points per depth");
  v->add_option("--resamples", gv.resamples, "Independent shot sets per point");
  v->add_option("--shots", gv.shots, "Shots per gradient estimate");
  v->add_option("--lambda", gv.lambda, "Penalty weight");
  v->add_option("--eta-hwe", gv.etaHwe, "Register regularization weight for hwe (regpres uses none)");
  v->add_option("--seed", gv.seed, "Random seed");
  v->add_option("--out", gv.out, "Variance CSV")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& err) {
    return app.exit(err);
  }

  try {
    if (*g) run_gen(gen);
    if (*t) run_train(tr);
    if (*qc) run_qaoa(qa);
    if (*e) run_evaluate(ev);
    if (*o) run_oracle(orc);
    if (*v) run_gradvar(gv, jobs);
  } catch (const std::exception& ex) {
    std::cerr << "qsettle: error: " << ex.what() << '\n';
    return 1;
  }
  return 0;
}
