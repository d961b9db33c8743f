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

#include <charconv>
#include <cstdint>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "json.hpp"
#include "qsettle/problem.hpp"

namespace qsettle {

inline constexpr std::string_view kTransactionsHeader =
    "PARTICIPANT,COUNTERPARTY,INSTRUMENT,QUANTITY,CONSIDERATION,SETTLEMENT_TYPE";

/// Parsed transaction file. Party and instrument ids are mapped to dense
/// indices in order of first appearance; instruments start at 1 (0 is cash).
struct TransactionTable {
  std::vector<Transaction> transactions;
  std::vector<std::string> partyIds;
  std::vector<std::string> instrumentIds;  // instrumentIds[s - 1] names security s
};

namespace detail {

inline std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

inline double parse_number(std::string_view field, std::size_t line, const char* name) {
  field = trim(field);
  double v = 0.0;
  auto [ptr, ec] = std::from_chars(field.data(), field.data() + field.size(), v);
  if (ec != std::errc() || ptr != field.data() + field.size() || field.empty())
    throw std::invalid_argument("line " + std::to_string(line) + ": non-numeric " + name + " '" +
                                std::string(field) + "'");
  return v;
}

inline std::vector<std::string_view> split_commas(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  for (;;) {
    std::size_t pos = line.find(',', start);
    if (pos == std::string_view::npos) {
      out.push_back(line.substr(start));
      return out;
    }
    out.push_back(line.substr(start, pos - start));
    start = pos + 1;
  }
}

}  // namespace detail

inline TransactionTable parse_transactions(std::istream& in) {
  TransactionTable table;
  std::unordered_map<std::string, std::size_t> parties, instruments;
  std::string line;
  std::size_t lineNo = 0;
  bool header = false;
  while (std::getline(in, line)) {
    ++lineNo;
    std::string_view view = detail::trim(line);
    if (view.empty()) continue;
    if (!header) {
      if (view != kTransactionsHeader)
        throw std::invalid_argument("transactions CSV: expected header '" + std::string(kTransactionsHeader) + "'");
      header = true;
      continue;
    }
    auto fields = detail::split_commas(view);
    if (fields.size() != 6)
      throw std::invalid_argument("line " + std::to_string(lineNo) + ": expected 6 fields, got " +
                                  std::to_string(fields.size()));
    auto id = [](std::unordered_map<std::string, std::size_t>& m, std::vector<std::string>& names,
                 std::string_view key, std::size_t base) {
      auto [it, inserted] = m.try_emplace(std::string(key), names.size() + base);
      if (inserted) names.emplace_back(key);
      return it->second;
    };
    std::string_view sender = detail::trim(fields[0]), receiver = detail::trim(fields[1]);
    std::string_view instrument = detail::trim(fields[2]);
    if (sender.empty() || receiver.empty() || instrument.empty())
      throw std::invalid_argument("line " + std::to_string(lineNo) + ": empty identifier");
    Transaction t;
    t.sender = id(parties, table.partyIds, sender, 0);
    t.receiver = id(parties, table.partyIds, receiver, 0);
    t.security = id(instruments, table.instrumentIds, instrument, 1);
    t.quantity = detail::parse_number(fields[3], lineNo, "QUANTITY");
    t.consideration = detail::parse_number(fields[4], lineNo, "CONSIDERATION");
    try {
      t.kind = settlement_kind_from_string(std::string(detail::trim(fields[5])));
    } catch (const std::invalid_argument& e) {
      throw std::invalid_argument("line " + std::to_string(lineNo) + ": " + e.what());
    }
    if (t.kind == SettlementKind::FOP) t.consideration = 0.0;
    try {
      validate_transaction(t);
    } catch (const std::invalid_argument& e) {
      throw std::invalid_argument("line " + std::to_string(lineNo) + ": " + e.what());
    }
    table.transactions.push_back(t);
  }
  if (!header) throw std::invalid_argument("transactions CSV: missing header");
  return table;
}

inline TransactionTable load_transaction_table(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open transactions file '" + path + "'");
  return parse_transactions(in);
}

inline std::vector<Transaction> load_transactions(const std::string& path) {
  return load_transaction_table(path).transactions;
}

// ---------------------------------------------------------------------------
// Problem JSON

inline nlohmann::json matrix_to_json(const Matrix& m) { return m.to_rows(); }

inline Matrix matrix_from_json(const nlohmann::json& j, std::size_t rows, std::size_t cols, const char* name) {
  if (!j.is_array() || j.size() != rows)
    throw std::invalid_argument(std::string("problem JSON: '") + name + "' must have " + std::to_string(rows) + " rows");
  Matrix m(rows, cols);
  for (std::size_t r = 0; r < rows; ++r) {
    if (!j[r].is_array() || j[r].size() != cols)
      throw std::invalid_argument(std::string("problem JSON: '") + name + "' rows must have " +
                                  std::to_string(cols) + " entries");
    for (std::size_t c = 0; c < cols; ++c) m(r, c) = j[r][c].get<double>();
  }
  return m;
}

inline nlohmann::json problem_to_json(const SettlementProblem& p) {
  nlohmann::json j;
  j["I"] = p.I;
  j["K"] = p.K;
  j["J"] = p.J;
  j["seed"] = p.seed;
  auto& txs = j["transactions"] = nlohmann::json::array();
  for (const auto& t : p.transactions)
    txs.push_back({{"sender", t.sender},
                   {"receiver", t.receiver},
                   {"security", t.security},
                   {"quantity", t.quantity},
                   {"consideration", t.consideration},
                   {"kind", to_string(t.kind)}});
  j["balances"] = matrix_to_json(p.balances);
  j["limits"] = matrix_to_json(p.limits);
  j["weights"] = p.weights;
  bool unitScales = std::all_of(p.scales.flat().begin(), p.scales.flat().end(), [](double g) { return g == 1.0; });
  if (!unitScales) j["scales"] = matrix_to_json(p.scales);
  return j;
}

inline SettlementProblem problem_from_json(const nlohmann::json& j) {
  try {
    SettlementProblem p;
    p.I = j.at("I").get<std::size_t>();
    p.K = j.at("K").get<std::size_t>();
    p.J = j.at("J").get<std::size_t>();
    p.seed = j.at("seed").get<std::uint64_t>();
    for (const auto& t : j.at("transactions")) {
      Transaction tx;
      tx.sender = t.at("sender").get<std::size_t>();
      tx.receiver = t.at("receiver").get<std::size_t>();
      tx.security = t.at("security").get<std::size_t>();
      tx.quantity = t.at("quantity").get<double>();
      tx.consideration = t.at("consideration").get<double>();
      tx.kind = settlement_kind_from_string(t.at("kind").get<std::string>());
      p.transactions.push_back(tx);
    }
    p.balances = matrix_from_json(j.at("balances"), p.K, p.J, "balances");
    p.limits = matrix_from_json(j.at("limits"), p.K, p.J, "limits");
    p.scales = j.contains("scales") ? matrix_from_json(j.at("scales"), p.K, p.J, "scales") : Matrix(p.K, p.J, 1.0);
    p.weights = j.at("weights").get<std::vector<double>>();
    p.validate();
    return p;
  } catch (const nlohmann::json::exception& e) {
    throw std::invalid_argument(std::string("problem JSON: ") + e.what());
  }
}

inline void save_problem(const SettlementProblem& p, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write '" + path + "'");
  out << problem_to_json(p).dump(2) << '\n';
}

inline SettlementProblem load_problem(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open problem file '" + path + "'");
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw std::invalid_argument(std::string("problem JSON: ") + e.what());
  }
  return problem_from_json(j);
}

/// FNV-1a over the canonical JSON text; identifies the problem in run records.
inline std::string problem_hash(const SettlementProblem& p) {
  std::string text = problem_to_json(p).dump();
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char ch : text) {
    h ^= ch;
    h *= 0x100000001b3ULL;
  }
  std::ostringstream os;
  os << std::hex << h;
  return os.str();
}

}  // namespace qsettle
