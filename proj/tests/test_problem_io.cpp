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

#include <gtest/gtest.h>

#include <cstdio>
#include <filesystem>
#include <sstream>

#include "helpers.hpp"

using namespace qsettle;
using namespace qsettle::testing;

namespace {

std::string header() { return std::string(kTransactionsHeader) + "\n"; }

TransactionTable parse(const std::string& text) {
  std::istringstream in(text);
  return parse_transactions(in);
}

std::string temp_file(const std::string& name) {
  return (std::filesystem::temp_directory_path() / ("qsettle_" + name)).string();
}

}  // namespace

TEST(TransactionsCsv, TableRowParses) {
  auto t = parse(header() + "205,270,nc157,1300,441.85,DVP\n");
  ASSERT_EQ(t.transactions.size(), 1u);
  const auto& tx = t.transactions[0];
  EXPECT_EQ(tx.kind, SettlementKind::DVP);
  EXPECT_DOUBLE_EQ(tx.quantity, 1300.0);
  EXPECT_DOUBLE_EQ(tx.consideration, 441.85);
  EXPECT_EQ(t.partyIds[tx.sender], "205");
  EXPECT_EQ(t.partyIds[tx.receiver], "270");
  EXPECT_EQ(tx.security, 1u);
  EXPECT_EQ(t.instrumentIds[0], "nc157");
}

TEST(TransactionsCsv, FopIgnoresConsideration) {
  auto t = parse(header() + "1,2,bd,10,99.5,FOP\n");
  ASSERT_EQ(t.transactions.size(), 1u);
  EXPECT_EQ(t.transactions[0].kind, SettlementKind::FOP);
  EXPECT_EQ(t.transactions[0].consideration, 0.0);
}

TEST(TransactionsCsv, IdsIndexedByFirstAppearance) {
  auto t = parse(header() + "a,b,x,1,1,DVP\nb,c,y,2,1,DVP\nc,a,x,3,1,FOP\n");
  EXPECT_EQ(t.partyIds, (std::vector<std::string>{"a", "b", "c"}));
  EXPECT_EQ(t.transactions[1].security, 2u);
  EXPECT_EQ(t.transactions[2].security, 1u);
  EXPECT_EQ(t.transactions[2].receiver, 0u);
}

TEST(TransactionsCsv, Errors) {
  EXPECT_THROW(parse("A,B,C,D,E,F\n1,2,x,1,1,DVP\n"), std::invalid_argument);
  EXPECT_THROW(parse(""), std::invalid_argument);
  EXPECT_THROW(parse(header() + "1,2,x,1,1\n"), std::invalid_argument);
  EXPECT_THROW(parse(header() + "1,2,x,1,1,RVP\n"), std::invalid_argument);
  EXPECT_THROW(parse(header() + "1,2,x,ten,1,DVP\n"), std::invalid_argument);
  EXPECT_THROW(parse(header() + "1,2,x,5,1.2.3,DVP\n"), std::invalid_argument);
  EXPECT_THROW(parse(header() + "1,1,x,5,1,DVP\n"), std::invalid_argument);
  EXPECT_THROW(parse(header() + "1,2,x,-5,1,DVP\n"), std::invalid_argument);
  EXPECT_THROW(load_transactions("/nonexistent/trades.csv"), std::runtime_error);
}

TEST(TransactionsCsv, SampleFileLoads) {
  auto t = load_transaction_table(data_path("sample_trades.csv"));
  EXPECT_GE(t.transactions.size(), 200u);
  EXPECT_EQ(t.partyIds[t.transactions[0].sender], "205");
  EXPECT_DOUBLE_EQ(t.transactions[0].consideration, 441.85);
}

TEST(ProblemJson, RoundTripIsIdentity) {
  for (bool norm : {false, true}) {
    auto raw = generate_instance(sample_source(), 12, 6, 3, 77);
    auto p = norm ? normalize(raw) : raw;
    auto j = problem_to_json(p);
    auto back = problem_from_json(j);
    EXPECT_EQ(back, p);
    EXPECT_EQ(problem_to_json(back), j);
    EXPECT_EQ(j.contains("scales"), norm);
  }
}

TEST(ProblemJson, FileRoundTrip) {
  auto p = instance(10, 5, 2, 4);
  auto path = temp_file("problem.json");
  save_problem(p, path);
  auto back = load_problem(path);
  EXPECT_EQ(back, p);
  EXPECT_EQ(problem_hash(back), problem_hash(p));
  std::remove(path.c_str());
}

TEST(ProblemJson, SchemaFields) {
  auto j = problem_to_json(instance(6, 3, 1, 2));
  for (const char* key : {"I", "K", "J", "seed", "transactions", "balances", "limits", "weights"})
    EXPECT_TRUE(j.contains(key)) << key;
  const auto& t = j["transactions"][0];
  for (const char* key : {"sender", "receiver", "security", "quantity", "consideration", "kind"})
    EXPECT_TRUE(t.contains(key)) << key;
  EXPECT_EQ(j["balances"].size(), j["K"].get<std::size_t>());
}

TEST(ProblemJson, Errors) {
  auto j = problem_to_json(instance(6, 3, 1, 2));
  auto bad = j;
  bad["I"] = 7;
  EXPECT_THROW(problem_from_json(bad), std::invalid_argument);
  bad = j;
  bad["transactions"][0]["kind"] = "XYZ";
  EXPECT_THROW(problem_from_json(bad), std::invalid_argument);
  bad = j;
  bad.erase("balances");
  EXPECT_THROW(problem_from_json(bad), std::invalid_argument);
  EXPECT_THROW(load_problem("/nonexistent/problem.json"), std::runtime_error);
}

TEST(ProblemJson, HashDistinguishesProblems) {
  EXPECT_NE(problem_hash(instance(8, 4, 2, 1)), problem_hash(instance(8, 4, 2, 2)));
}
