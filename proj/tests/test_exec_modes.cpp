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

#include <algorithm>
#include <cmath>
#include <cstring>
#include <random>

#include "hspmv/error.hpp"
#include "hspmv/exec_modes.hpp"
#include "test_support.hpp"

using namespace hspmv;
using namespace hspmv::exec;
using hspmv::testing::block_diagonal;
using hspmv::testing::random_square;
using hspmv::testing::random_vector;
using hspmv::testing::storage_order_product;
using hspmv::testing::tridiagonal;

namespace {

constexpr Mode kModes[] = {Mode::VectorNoOverlap, Mode::VectorNaiveOverlap, Mode::Task};

DistributedConfig make_config(Mode mode, std::size_t ranks, std::size_t workers = 1, std::size_t iterations = 1) {
  DistributedConfig c;
  c.mode = mode;
  c.ranks = ranks;
  c.workers = workers;
  c.iterations = iterations;
  return c;
}

bool same_bits(const std::vector<double>& a, const std::vector<double>& b) {
  return a.size() == b.size() && std::memcmp(a.data(), b.data(), a.size() * sizeof(double)) == 0;
}

void expect_matches(const CrsMatrix& a, const std::vector<double>& x, const std::vector<double>& y, Mode mode) {
  const auto ref = storage_order_product(a, x);
  if (mode == Mode::VectorNoOverlap) {
    EXPECT_TRUE(same_bits(y, ref)) << mode_name(mode);
  } else {
    EXPECT_LE(relative_row_error(a, x, ref, y), split_tolerance(a)) << mode_name(mode);
  }
}

double median(std::vector<double> v) { return percentile(v, 0.5); }

}  // namespace

TEST(Modes, SingleRankEqualsSerial) {
  const auto a = random_square(300, 20, 0.3, 1);
  const auto x = random_vector(300, 2);
  for (auto mode : kModes) {
    const auto r = run_distributed(a, x, make_config(mode, 1));
    EXPECT_TRUE(same_bits(r.y, storage_order_product(a, x))) << mode_name(mode);
  }
}

TEST(Modes, TridiagonalTwoRanks) {
  const auto a = tridiagonal(10);
  std::vector<double> x(10);
  for (std::size_t i = 0; i < 10; ++i) x[i] = 1.0 + static_cast<double>(i);
  for (auto mode : kModes) {
    for (std::size_t w : {1, 2}) {
      const auto r = run_distributed(a, x, make_config(mode, 2, w));
      ASSERT_EQ(r.y.size(), 10u);
      for (std::size_t i = 0; i < 10; ++i) {
        double expect = (2.0 + 0.1 * static_cast<double>(i)) * x[i];
        if (i > 0) expect -= x[i - 1];
        if (i + 1 < 10) expect -= x[i + 1];
        EXPECT_NEAR(r.y[i], expect, 1e-12) << mode_name(mode) << " row " << i;
      }
    }
  }
}

TEST(Modes, EveryIterationMatchesSerial) {
  const auto a = random_square(2000, 60, 0.2, 3);
  const auto x = random_vector(2000, 4);
  for (auto mode : kModes) {
    auto cfg = make_config(mode, 4, 2, 10);
    cfg.record_history = true;
    const auto r = run_distributed(a, x, cfg);
    ASSERT_EQ(r.y_history.size(), 10u);
    for (const auto& y : r.y_history) expect_matches(a, x, y, mode);
    expect_matches(a, x, r.y, mode);
    EXPECT_EQ(r.timings.size(), 40u);
    EXPECT_EQ(r.iteration_seconds.size(), 10u);
  }
}

TEST(Modes, BlockDiagonalOverlapIsExact) {
  const auto a = block_diagonal({50, 50, 50, 50}, 5);
  const auto x = random_vector(200, 6);
  for (auto mode : kModes) {
    auto cfg = make_config(mode, 4);
    cfg.policy = BalancePolicy::BalanceRows;
    const auto r = run_distributed(a, x, cfg);
    EXPECT_TRUE(same_bits(r.y, storage_order_product(a, x))) << mode_name(mode);
  }
}

TEST(Modes, EquivalenceProperty) {
  std::mt19937_64 rng(7);
  for (int trial = 0; trial < 30; ++trial) {
    const std::size_t n = 20 + rng() % 600;
    const std::size_t band = 1 + rng() % 80;
    const double density = 0.05 + 0.5 * static_cast<double>(rng() % 100) / 100.0;
    const auto a = random_square(n, band, density, rng(), trial % 3 == 0);
    const auto x = random_vector(n, rng());
    const std::size_t ranks = 1 + rng() % 5;
    const std::size_t workers = 1 + rng() % 3;
    for (auto mode : kModes) {
      auto cfg = make_config(mode, ranks, workers, 2);
      cfg.policy = trial % 2 ? BalancePolicy::BalanceRows : BalancePolicy::BalanceNonzeros;
      cfg.transport.async_progress = trial % 4 == 1;
      const auto r = run_distributed(a, x, cfg);
      expect_matches(a, x, r.y, mode);
    }
  }
}

TEST(Modes, ContractErrors) {
  const auto a = tridiagonal(8);
  const auto x = random_vector(8, 1);
  auto cfg = make_config(Mode::Task, 2, 0);
  EXPECT_THROW(run_distributed(a, x, cfg), ContractViolation);
  cfg.workers = 1;
  cfg.iterations = 0;
  EXPECT_THROW(run_distributed(a, x, cfg), ContractViolation);
  cfg.iterations = 1;
  EXPECT_THROW(run_distributed(a, std::vector<double>(7), cfg), ContractViolation);

  const auto part = partition_rows(a, 1, BalancePolicy::BalanceRows);
  const auto plan = build_comm_plan(a, part, 0);
  auto whole = build_workset(a, part, plan, 0, false);
  auto split = build_workset(a, part, plan, 0, true);
  transport::Fabric fabric(1);
  RunOptions opts;
  EXPECT_THROW(run_vector_naive(whole, plan, fabric.endpoint(0), x, opts), ContractViolation);
  EXPECT_THROW(run_task_mode(whole, plan, fabric.endpoint(0), x, opts), ContractViolation);
  EXPECT_THROW(run_vector_noovl(split, plan, fabric.endpoint(0), x, opts), ContractViolation);
  EXPECT_THROW(run_vector_noovl(whole, plan, fabric.endpoint(0), std::span(x).first(4), opts), ContractViolation);
  opts.workers = 0;
  EXPECT_THROW(run_task_mode(split, plan, fabric.endpoint(0), x, opts), ContractViolation);
}

TEST(Phases, PresencePerMode) {
  const auto a = random_square(400, 10, 0.5, 8);
  const auto x = random_vector(400, 9);
  const std::vector<std::vector<Phase>> expected = {
      {Phase::RecvPost, Phase::BufferAssembly, Phase::SendPost, Phase::WaitAll, Phase::FullCompute},
      {Phase::RecvPost, Phase::BufferAssembly, Phase::SendPost, Phase::WaitAll, Phase::LocalCompute,
       Phase::NonlocalCompute},
      {Phase::RecvPost, Phase::BufferAssembly, Phase::SendPost, Phase::WaitAll, Phase::LocalCompute,
       Phase::NonlocalCompute, Phase::ParallelRegion},
  };
  for (std::size_t m = 0; m < 3; ++m) {
    const auto r = run_distributed(a, x, make_config(kModes[m], 2, 1, 3));
    for (const auto& t : r.timings) {
      for (std::size_t p = 0; p < kPhaseCount; ++p) {
        const bool want = std::count(expected[m].begin(), expected[m].end(), static_cast<Phase>(p)) > 0;
        EXPECT_EQ(t.seconds[p].has_value(), want) << mode_name(kModes[m]) << " " << phase_name(static_cast<Phase>(p));
        if (t.seconds[p]) { EXPECT_GE(*t.seconds[p], 0.0); }
      }
      EXPECT_GT(t.iteration_seconds, 0.0);
    }
  }
}

TEST(Phases, NamesAndLabelsRoundTrip) {
  for (std::size_t p = 0; p < kPhaseCount; ++p) {
    const auto ph = static_cast<Phase>(p);
    EXPECT_EQ(parse_phase(phase_name(ph)), ph);
    EXPECT_EQ(parse_phase(phase_label(ph)), ph);
  }
  EXPECT_EQ(phase_label(Phase::WaitAll), "wa");
  EXPECT_FALSE(parse_phase("nope"));
  for (auto m : kModes) EXPECT_EQ(parse_mode(mode_name(m)), m);
  EXPECT_FALSE(parse_mode("vector"));
}

TEST(Percentile, LinearInterpolation) {
  const std::vector<double> v = {10, 3, 7, 1, 5, 9, 2, 8, 4, 6};
  EXPECT_DOUBLE_EQ(percentile(v, 0.5), 5.5);
  EXPECT_DOUBLE_EQ(percentile(v, 0.0), 1.0);
  EXPECT_DOUBLE_EQ(percentile(v, 1.0), 10.0);
  EXPECT_DOUBLE_EQ(percentile(v, 0.1), 1.9);
  EXPECT_DOUBLE_EQ(percentile(v, 0.25), 3.25);
  const std::vector<double> one = {4.0};
  EXPECT_DOUBLE_EQ(percentile(one, 0.9), 4.0);
  EXPECT_THROW(percentile(std::vector<double>{}, 0.5), ContractViolation);
  EXPECT_THROW(percentile(v, 1.5), ContractViolation);
}

TEST(Costs, SingleRankCollapses) {
  PhaseTimings t;
  t.set(Phase::WaitAll, 0.25);
  std::vector<PhaseTimings> ts = {t};
  const auto s = summarize_costs(ts, 2.0);
  ASSERT_EQ(s.size(), 1u);
  EXPECT_EQ(s[0].phase, Phase::WaitAll);
  for (double v : {s[0].p10, s[0].p25, s[0].p50, s[0].p75, s[0].p90}) EXPECT_DOUBLE_EQ(v, 0.5);
}

TEST(Costs, UniformSpreadAcrossRanks) {
  std::vector<PhaseTimings> ts(5);
  for (std::size_t r = 0; r < 5; ++r) {
    ts[r].rank = r;
    ts[r].set(Phase::LocalCompute, 1.0 + static_cast<double>(r));  // 1..5
    if (r % 2 == 0) ts[r].set(Phase::FullCompute, 1.0);
  }
  const auto s = summarize_costs(ts, 3.0);
  ASSERT_EQ(s.size(), 2u);
  EXPECT_EQ(s[0].phase, Phase::LocalCompute);
  EXPECT_DOUBLE_EQ(s[0].p10, 3.0 * 1.4);
  EXPECT_DOUBLE_EQ(s[0].p25, 3.0 * 2.0);
  EXPECT_DOUBLE_EQ(s[0].p50, 3.0 * 3.0);
  EXPECT_DOUBLE_EQ(s[0].p75, 3.0 * 4.0);
  EXPECT_DOUBLE_EQ(s[0].p90, 3.0 * 4.6);
  EXPECT_EQ(s[1].phase, Phase::FullCompute);
  EXPECT_DOUBLE_EQ(s[1].p90, 3.0);
  EXPECT_THROW(summarize_costs(std::vector<PhaseTimings>{}, 1.0), ContractViolation);
  EXPECT_THROW(summarize_costs(ts, 0.0), ContractViolation);
}

TEST(Costs, MedianPerRank) {
  std::vector<PhaseTimings> ts;
  for (std::size_t r = 0; r < 2; ++r) {
    for (std::size_t it = 0; it < 3; ++it) {
      PhaseTimings t;
      t.rank = r;
      t.iteration = it;
      t.set(Phase::WaitAll, static_cast<double>(10 * r + it));
      t.iteration_seconds = static_cast<double>(it * it);
      ts.push_back(t);
    }
  }
  const auto m = median_per_rank(ts);
  ASSERT_EQ(m.size(), 2u);
  EXPECT_DOUBLE_EQ(*m[0].get(Phase::WaitAll), 1.0);
  EXPECT_DOUBLE_EQ(*m[1].get(Phase::WaitAll), 11.0);
  EXPECT_DOUBLE_EQ(m[1].iteration_seconds, 1.0);
  EXPECT_FALSE(m[0].get(Phase::LocalCompute));
}

// ---- timed -----------------------------------------------------------------

// With asynchronous progress off, the halo transfer of the naive mode only
// moves inside WaitAll, so WaitAll carries the whole transfer time.
TEST(ModesTimed, NaiveWaitCarriesTransfer) {
  const auto a = tridiagonal(1000);
  const auto x = random_vector(1000, 1);
  auto cfg = make_config(Mode::VectorNaiveOverlap, 2, 1, 7);
  cfg.transport.synthetic_bandwidth_gbps = 1e-6;  // 8 bytes take 8 ms
  const auto r = run_distributed(a, x, cfg);
  std::vector<double> wa;
  for (const auto& t : r.timings) wa.push_back(*t.get(Phase::WaitAll));
  const double m = median(wa);
  EXPECT_GE(m, 0.008 * 0.95);
  EXPECT_LE(m, 0.008 * 1.25 + 0.002);
}

// Task mode: the communication agent waits while workers compute the local
// part, so an iteration costs about max(transfer, local) + nonlocal.
TEST(ModesTimed, TaskModeOverlapsTransferWithLocalWork) {
  const auto a = tridiagonal(600000);
  const auto x = random_vector(600000, 3);
  for (double bw : {4e-6, 8e-7}) {  // one 8-byte halo entry: 2 ms and 10 ms
    auto cfg = make_config(Mode::Task, 2, 1, 7);
    cfg.transport.synthetic_bandwidth_gbps = bw;
    const auto r = run_distributed(a, x, cfg);
    std::vector<double> measured, predicted;
    for (const auto& t : r.timings) {
      measured.push_back(*t.get(Phase::ParallelRegion));
      const double transfer = *t.get(Phase::WaitAll);
      predicted.push_back(std::max(transfer, *t.get(Phase::LocalCompute)) + *t.get(Phase::NonlocalCompute));
    }
    const double mm = median(measured), mp = median(predicted);
    EXPECT_NEAR(mm, mp, 0.25 * mp + 0.002) << "bw " << bw;
    // Overlap is real: the region is shorter than transfer plus local work.
    std::vector<double> additive;
    for (const auto& t : r.timings) {
      additive.push_back(*t.get(Phase::WaitAll) + *t.get(Phase::LocalCompute));
    }
    EXPECT_LE(mm, median(additive) + 0.002);
  }
}
