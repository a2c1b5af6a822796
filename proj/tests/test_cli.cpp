/*
Copyright 2026 The hspmv Authors

   Licensed under the Apache License, Version 2.0 (the "License");
   you may not use this file except in compliance with the License.
   You may obtain a copy of the License at

       http://www.apache.org/licenses/LICENSE-2.0

   Unless required by applicable law or agreed to in writing, software
   distributed under the License is distributed on an "AS IS" BASIS,
   WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
   See the License for the specific language governing permissions and
   limitations under the License.
*/

#include <gtest/gtest.h>

#include <filesystem>
#include <map>
#include "json.hpp"

#include "cli_runner.hpp"

using hspmv::testing::parse_csv;
using hspmv::testing::read_file;
using hspmv::testing::run_cli;
namespace fs = std::filesystem;

namespace {

class Cli : public ::testing::Test {
 protected:
  void SetUp() override {
    dir_ = fs::temp_directory_path() /
           ("hspmv_cli_" + std::string(::testing::UnitTest::GetInstance()->current_test_info()->name()));
    fs::remove_all(dir_);
    fs::create_directories(dir_);
  }
  void TearDown() override { fs::remove_all(dir_); }
  std::string dir() const { return dir_.string(); }

  fs::path dir_;
};

std::map<std::string, std::string> parse_text(const std::string& text) {
  std::map<std::string, std::string> out;
  std::istringstream in(text);
  std::string key, value;
  while (in >> key >> value) out[key] = value;
  return out;
}

}  // namespace

TEST_F(Cli, ModelTextAndJsonAgree) {
  const std::string args = "model --nnzr 7 --kappa 1.5 --bandwidth 18.1 --perf 2.25";
  const auto text = run_cli(args);
  const auto js = run_cli("--format json " + args);
  ASSERT_EQ(text.exit_code, 0);
  ASSERT_EQ(js.exit_code, 0);
  const auto fields = parse_text(text.out);
  const auto j = nlohmann::json::parse(js.out);
  ASSERT_EQ(fields.size(), j.size());
  for (const auto& [k, v] : j.items()) {
    ASSERT_TRUE(fields.count(k)) << k;
    if (v.is_boolean()) EXPECT_EQ(fields.at(k), v.get<bool>() ? "true" : "false") << k;
    else EXPECT_EQ(std::stod(fields.at(k)), v.get<double>()) << k;
  }
  EXPECT_NEAR(j["code_balance"].get<double>(), 6.0 + 12.0 / 7.0 + 0.75, 1e-12);
  EXPECT_NEAR(j["perf_bound"].get<double>(), 18.1 / j["code_balance"].get<double>(), 1e-12);
  EXPECT_NEAR(j["kappa_estimate"].get<double>(), 2.0 * (18.1 / 2.25 - 6.0 - 12.0 / 7.0), 1e-12);
}

TEST_F(Cli, ModelWritesFileAndCsv) {
  ASSERT_EQ(run_cli("--output " + dir() + " --format csv model --nnzr 15").exit_code, 0);
  const auto t = parse_csv(read_file(dir() + "/model.csv"));
  ASSERT_EQ(t.header.size(), 2u);
  bool seen = false;
  for (const auto& row : t.rows) {
    if (row[0] == "code_balance") {
      EXPECT_NEAR(std::stod(row[1]), 6.8, 1e-9);
      seen = true;
    }
  }
  EXPECT_TRUE(seen);
}

TEST_F(Cli, UsageErrorsExitWithTwo) {
  EXPECT_EQ(run_cli("model").exit_code, 2);
  EXPECT_EQ(run_cli("").exit_code, 2);
  EXPECT_EQ(run_cli("frobnicate").exit_code, 2);
  EXPECT_EQ(run_cli("--format xml model --nnzr 3").exit_code, 2);
  EXPECT_EQ(run_cli("model --nnzr -3").exit_code, 2);
  EXPECT_EQ(run_cli("bench --matrix banded:n=10,nnzr=1 --mode fast").exit_code, 2);
}

TEST_F(Cli, RuntimeFailuresExitWithOne) {
  EXPECT_EQ(run_cli("partition-info --matrix /nonexistent.mtx").exit_code, 1);
  EXPECT_EQ(run_cli("gen --spec banded:n=10,nnzr=9,band=1 --out " + dir() + "/x.mtx").exit_code, 1);
}

TEST_F(Cli, BenchSingleRankMedianRate) {
  const auto r = run_cli("--output " + dir() +
                         " bench --matrix banded:n=20000,nnzr=12,band=30,seed=1 --mode noovl --ranks 1 --iterations 8");
  ASSERT_EQ(r.exit_code, 0);
  const auto t = parse_csv(read_file(dir() + "/summary.csv"));
  ASSERT_EQ(t.rows.size(), 1u);
  const auto& row = t.rows[0];
  const double nnz = std::stod(row[t.column("nnz")]);
  const double median = std::stod(row[t.column("median_iteration_s")]);
  const double gm = std::stod(row[t.column("gflops_median")]);
  EXPECT_NEAR(gm, 2.0 * nnz / median * 1e-9, 0.01 * gm);
  EXPECT_EQ(row[t.column("check_passed")], "1");
  EXPECT_EQ(row[t.column("max_rel_error")], "0");
  EXPECT_EQ(row[t.column("efficiency")], "1");
}

TEST_F(Cli, BenchSweepWritesAllTables) {
  const auto r = run_cli("--output " + dir() +
                         " bench --matrix banded:n=5000,nnzr=9,band=40,seed=2 --mode noovl,task --ranks 1,2,4"
                         " --iterations 3 --ranks-per-node 2");
  ASSERT_EQ(r.exit_code, 0);
  const auto summary = parse_csv(read_file(dir() + "/summary.csv"));
  ASSERT_EQ(summary.rows.size(), 6u);
  std::map<std::string, int> per_mode;
  for (const auto& row : summary.rows) {
    ++per_mode[row[summary.column("mode")]];
    EXPECT_EQ(row[summary.column("check_passed")], "1");
  }
  EXPECT_EQ(per_mode["noovl"], 3);
  EXPECT_EQ(per_mode["task"], 3);

  const auto iters = parse_csv(read_file(dir() + "/iterations.csv"));
  // noovl: 5 phases, task: 7 phases; (1+2+4) ranks, 3 iterations each
  EXPECT_EQ(iters.rows.size(), 7u * 3u * (5u + 7u));
  const auto costs = parse_csv(read_file(dir() + "/costs.csv"));
  EXPECT_EQ(costs.rows.size(), 3u * (5u + 7u));
  for (const auto& row : costs.rows) {
    for (const char* c : {"p10", "p25", "p50", "p75"}) {
      const std::string next = c == std::string("p10") ? "p25" : c == std::string("p25") ? "p50"
                              : c == std::string("p50")   ? "p75"
                                                          : "p90";
      EXPECT_LE(std::stod(row[costs.column(c)]), std::stod(row[costs.column(next)]));
    }
  }
  const auto scaling = parse_csv(read_file(dir() + "/scaling.csv"));
  EXPECT_EQ(scaling.header, (std::vector<std::string>{"mode", "efficiency_50_ranks"}));
  EXPECT_EQ(scaling.rows.size(), 2u);
  EXPECT_TRUE(read_file(dir() + "/summary.csv").starts_with("# hspmv-csv v1 summary\n"));
}

TEST_F(Cli, BenchJson) {
  const auto r = run_cli("--output " + dir() +
                         " --format json bench --matrix banded:n=2000,nnzr=5,band=10 --mode naive --ranks 2"
                         " --iterations 2");
  ASSERT_EQ(r.exit_code, 0);
  const auto j = nlohmann::json::parse(read_file(dir() + "/bench.json"));
  ASSERT_EQ(j["runs"].size(), 1u);
  EXPECT_EQ(j["runs"][0]["mode"], "naive");
  EXPECT_TRUE(j["runs"][0]["check_passed"].get<bool>());
  EXPECT_EQ(j["runs"][0]["iterations_detail"].size(), 4u);
}

TEST_F(Cli, PartitionInfoCsv) {
  const auto r = run_cli("partition-info --matrix banded:n=1000,nnzr=7,band=20,seed=4 --ranks 4 --policy rows");
  ASSERT_EQ(r.exit_code, 0);
  const auto t = parse_csv(r.out);
  EXPECT_EQ(t.header,
            (std::vector<std::string>{"rank", "rows", "nnz", "halo_size", "send_bytes", "recv_bytes"}));
  ASSERT_EQ(t.rows.size(), 4u);
  std::size_t rows = 0, send = 0, recv = 0;
  for (const auto& row : t.rows) {
    rows += std::stoul(row[1]);
    EXPECT_EQ(std::stoul(row[1]), 250u);
    EXPECT_EQ(std::stoul(row[5]), 8 * std::stoul(row[3]));
    send += std::stoul(row[4]);
    recv += std::stoul(row[5]);
  }
  EXPECT_EQ(rows, 1000u);
  EXPECT_EQ(send, recv);
}

TEST_F(Cli, ProbeCsv) {
  const auto r = run_cli("probe --bytes 2000000 --bandwidth 1 --work-steps 0.001,0.004 --async on");
  ASSERT_EQ(r.exit_code, 0);
  const auto t = parse_csv(r.out);
  EXPECT_EQ(t.header, (std::vector<std::string>{"work_s", "total_s"}));
  ASSERT_EQ(t.rows.size(), 2u);
  for (const auto& row : t.rows) {
    const double expect = std::max(std::stod(row[0]), 0.002);
    EXPECT_NEAR(std::stod(row[1]), expect, 0.3 * expect);
  }
}

TEST_F(Cli, GenIsSeedDeterministic) {
  const std::string spec = " gen --spec banded:n=300,nnzr=6,band=9 --out ";
  ASSERT_EQ(run_cli("--seed 5" + spec + dir() + "/a.mtx").exit_code, 0);
  ASSERT_EQ(run_cli(spec + dir() + "/b.mtx", "SPMV_SEED=5").exit_code, 0);
  ASSERT_EQ(run_cli("--seed 6" + spec + dir() + "/c.mtx").exit_code, 0);
  ASSERT_EQ(run_cli("--output " + dir() + " --seed 5" + spec + "d.mtx").exit_code, 0);
  const auto a = read_file(dir() + "/a.mtx");
  EXPECT_TRUE(a.starts_with("%%MatrixMarket matrix coordinate real general\n300 300 "));
  EXPECT_EQ(a, read_file(dir() + "/b.mtx"));
  EXPECT_EQ(a, read_file(dir() + "/d.mtx"));
  EXPECT_NE(a, read_file(dir() + "/c.mtx"));
  // the generated file loads back as a benchmark input
  EXPECT_EQ(run_cli("partition-info --matrix " + dir() + "/a.mtx --ranks 2").exit_code, 0);
}

TEST_F(Cli, Version) {
  const auto r = run_cli("--version");
  EXPECT_EQ(r.exit_code, 0);
  EXPECT_NE(r.out.find("0.1.0"), std::string::npos);
}
