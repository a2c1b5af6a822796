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

// Acceptance checks: prints one PASS/FAIL line per criterion and exits
// nonzero if any fails.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstring>
#include <functional>
#include <iostream>
#include "json.hpp"
#include <random>
#include <set>
#include <sstream>

#include "cli_runner.hpp"
#include "hspmv/exec_modes.hpp"
#include "hspmv/io_gen.hpp"
#include "hspmv/perf_model.hpp"
#include "hspmv/transport.hpp"

using namespace hspmv;

namespace {

// Collects failure messages of one criterion.
struct Check {
  std::vector<std::string> failures;

  void expect(bool ok, const std::string& what) {
    if (!ok) failures.push_back(what);
  }
  void near(double value, double expected, double tol, const std::string& what) {
    std::ostringstream s;
    s << what << ": " << value << " not within " << tol << " of " << expected;
    expect(std::fabs(value - expected) <= tol, s.str());
  }
};

double median(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  const std::size_t n = v.size();
  return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

bool same_bits(std::span<const double> a, std::span<const double> b) {
  return a.size() == b.size() && std::memcmp(a.data(), b.data(), a.size() * sizeof(double)) == 0;
}

std::vector<double> random_x(std::size_t n, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  std::vector<double> x(n);
  for (auto& v : x) v = u(rng);
  return x;
}

std::vector<double> serial(const CrsMatrix& a, std::span<const double> x) {
  std::vector<double> y(a.n_rows());
  spmv_full(a, x, y);
  return y;
}

// Median over iterations of one phase, taking the slowest rank each time.
double median_phase(const exec::DistributedResult& r, exec::Phase p) {
  std::map<std::size_t, double> per_iter;
  for (const auto& t : r.timings) per_iter[t.iteration] = std::max(per_iter[t.iteration], t.get(p).value_or(0.0));
  std::vector<double> v;
  for (const auto& [it, s] : per_iter) v.push_back(s);
  return median(v);
}

// ---- 1 ---------------------------------------------------------------------

nlohmann::json cli_model(const std::string& args, Check& c) {
  const auto r = testing::run_cli("--format json model " + args);
  c.expect(r.exit_code == 0, "model " + args + " exited with " + std::to_string(r.exit_code));
  try {
    return nlohmann::json::parse(r.out);
  } catch (const std::exception& e) {
    c.expect(false, std::string("model output is not JSON: ") + e.what());
    return nlohmann::json::object();
  }
}

double field(const nlohmann::json& j, const char* key) {
  return j.contains(key) && j[key].is_number() ? j[key].get<double>() : NAN;
}

Check model_regression() {
  Check c;
  const auto k1 = cli_model("--nnzr 15 --bandwidth 18.1 --perf 2.25", c);
  c.near(field(k1, "kappa_estimate"), 2.5, 0.05, "kappa(2.25, 18.1, 15)");
  c.near(field(k1, "perf_bound"), 2.66, 0.01, "bound(18.1, B(15,0))");
  const auto k2 = cli_model("--nnzr 123 --bandwidth 18.9 --perf 2.99", c);
  c.near(field(k2, "kappa_estimate"), 0.43, 0.02, "kappa(2.99, 18.9, 123)");
  const auto b = cli_model("--nnzr 15 --bandwidth 21.2", c);
  c.near(field(b, "perf_bound"), 3.12, 0.01, "bound(21.2, B(15,0))");
  c.near(field(b, "split_penalty"), 0.08, 0.01, "split penalty at nnzr 15");
  const auto p7 = cli_model("--nnzr 7", c);
  c.near(field(p7, "split_penalty"), 0.15, 0.01, "split penalty at nnzr 7");
  return c;
}

// ---- 2 ---------------------------------------------------------------------

Check oracle_equivalence() {
  Check c;
  std::mt19937_64 rng(2024);
  const std::size_t rank_choices[] = {1, 2, 3, 4, 7};
  const exec::Mode modes[] = {exec::Mode::VectorNoOverlap, exec::Mode::VectorNaiveOverlap, exec::Mode::Task};
  int combos = 0;
  for (int trial = 0; trial < 60; ++trial) {
    gen::GenSpec s;
    s.n = 50 + rng() % 4951;
    s.seed = rng();
    s.n_nzr_target = 1.0 + static_cast<double>(rng() % 1500) / 100.0;
    if (trial % 2 == 0) {
      s.kind = gen::Kind::BandedRandom;
      s.band_halfwidth = static_cast<std::size_t>(s.n_nzr_target) + rng() % 200;
    } else {
      s.kind = gen::Kind::BlockCoupled;
      s.blocks = 1 + rng() % 8;
      s.coupling = static_cast<double>(rng() % 50) / 100.0;
      if (s.coupling == 0.0) s.n_nzr_target = std::min(s.n_nzr_target, static_cast<double>(s.n / s.blocks));
    }
    const auto a = gen::generate(s);
    const auto x = random_x(s.n, rng());
    const auto ref = serial(a, x);

    exec::DistributedConfig cfg;
    cfg.mode = modes[rng() % 3];
    cfg.ranks = rank_choices[rng() % 5];
    cfg.policy = rng() % 2 ? BalancePolicy::BalanceRows : BalancePolicy::BalanceNonzeros;
    cfg.workers = 1 + rng() % 3;
    cfg.iterations = 2;
    cfg.transport.async_progress = rng() % 2;
    const auto r = exec::run_distributed(a, x, cfg);
    const std::string tag = gen::format_gen_spec(s) + " P=" + std::to_string(cfg.ranks) + " " +
                            std::string(exec::mode_name(cfg.mode));
    if (cfg.mode == exec::Mode::VectorNoOverlap) {
      c.expect(same_bits(r.y, ref), "not bitwise equal: " + tag);
    } else {
      // componentwise error relative to the row's magnitude sum
      const double tol = 1e-13 * std::max<double>(1.0, static_cast<double>(a.max_row_nnz()));
      for (std::size_t i = 0; i < a.n_rows(); ++i) {
        double scale = 0.0;
        for (offset_t j = a.row_ptr()[i]; j < a.row_ptr()[i + 1]; ++j) {
          scale += std::fabs(a.values()[j] * x[a.col_idx()[j]]);
        }
        const double err = std::fabs(r.y[i] - ref[i]);
        if (scale == 0.0 ? err != 0.0 : err / scale > tol) {
          c.expect(false, "row " + std::to_string(i) + " off: " + tag);
          break;
        }
      }
    }
    ++combos;
  }
  c.expect(combos >= 50, "too few combinations");
  return c;
}

// ---- 3 ---------------------------------------------------------------------

Check plan_duality() {
  Check c;
  for (std::uint64_t seed = 0; seed < 120; ++seed) {
    std::mt19937_64 rng(seed);
    gen::GenSpec s;
    s.kind = seed % 3 == 0 ? gen::Kind::BlockCoupled : gen::Kind::BandedRandom;
    s.n = 30 + rng() % 800;
    s.n_nzr_target = 1.0 + static_cast<double>(rng() % 800) / 100.0;
    s.band_halfwidth = 8 + rng() % 100;
    s.blocks = 1 + rng() % 4;
    s.coupling = 0.2;
    s.seed = seed;
    const auto a = gen::generate(s);
    const std::size_t P = 1 + rng() % 9;
    const auto part = partition_rows(a, P, seed % 2 ? BalancePolicy::BalanceRows : BalancePolicy::BalanceNonzeros);
    const auto plans = build_all_comm_plans(a, part);
    const std::string tag = " (seed " + std::to_string(seed) + ")";
    for (std::size_t r = 0; r < P; ++r) {
      for (std::size_t q = 0; q < P; ++q) {
        const auto rf = plans[r].recv_from.find(q);
        const auto st = plans[q].send_to.find(r);
        const bool has_r = rf != plans[r].recv_from.end(), has_s = st != plans[q].send_to.end();
        c.expect(has_r == has_s && (!has_r || rf->second == st->second),
                 "recv_from/send_to mismatch " + std::to_string(r) + "<-" + std::to_string(q) + tag);
      }
      // remote columns referenced by rank r's rows
      std::set<index_t> remote;
      for (std::size_t i = part.begin(r); i < part.end(r); ++i) {
        for (offset_t j = a.row_ptr()[i]; j < a.row_ptr()[i + 1]; ++j) {
          const index_t col = a.col_idx()[j];
          if (col < part.begin(r) || col >= part.end(r)) remote.insert(col);
        }
      }
      const std::vector<index_t> expect(remote.begin(), remote.end());
      c.expect(plans[r].halo_columns == expect, "halo does not cover remote columns exactly" + tag);
      std::vector<index_t> from_lists;
      for (const auto& [q, cols] : plans[r].recv_from) {
        c.expect(q != r, "rank receives from itself" + tag);
        for (auto col : cols) c.expect(part.owner(col) == q, "column requested from a non-owner" + tag);
        from_lists.insert(from_lists.end(), cols.begin(), cols.end());
      }
      std::sort(from_lists.begin(), from_lists.end());
      c.expect(from_lists == expect, "receive lists do not partition the halo" + tag);
    }
  }
  return c;
}

// ---- 4 ---------------------------------------------------------------------

Check probe_shape() {
  Check c;
  const std::vector<double> work = {0.001, 0.004, 0.008, 0.016, 0.032};
  const double transfer = 0.008;
  for (bool async : {true, false}) {
    transport::TransportConfig cfg;
    cfg.async_progress = async;
    cfg.synthetic_bandwidth_gbps = 10.0;
    transport::Fabric fabric(2, cfg);
    const auto samples = transport::probe_overlap(fabric, 80'000'000, work);
    for (const auto& s : samples) {
      const double expect = async ? std::max(s.work_seconds, transfer) : s.work_seconds + transfer;
      c.near(s.total_seconds, expect, 0.2 * expect,
             std::string(async ? "async" : "sync") + " w=" + std::to_string(s.work_seconds));
    }
  }
  return c;
}

// ---- 5 ---------------------------------------------------------------------

Check overlap_benefit() {
  Check c;
  gen::GenSpec s;
  s.n = 1'600'000;
  s.n_nzr_target = 15;
  s.band_halfwidth = 2000;
  s.seed = 5;
  const auto a = gen::generate(s);
  const auto x = random_x(a.n_cols(), 6);

  exec::DistributedConfig cfg;
  cfg.ranks = 2;
  cfg.workers = 1;
  cfg.iterations = 25;
  cfg.transport.async_progress = false;

  // Calibrate the link so that one halo message takes half the local compute.
  cfg.mode = exec::Mode::VectorNaiveOverlap;
  cfg.iterations = 9;
  const auto probe = exec::run_distributed(a, x, cfg);
  const double t_local = median_phase(probe, exec::Phase::LocalCompute);
  const auto plans = build_all_comm_plans(a, probe.partition);
  std::size_t max_bytes = 0;
  for (const auto& p : plans) {
    for (const auto& [q, rows] : p.send_to) max_bytes = std::max(max_bytes, rows.size() * sizeof(double));
  }
  c.expect(max_bytes > 0, "calibration instance has no halo");
  if (max_bytes == 0) return c;
  cfg.transport.synthetic_bandwidth_gbps = static_cast<double>(max_bytes) / (0.5 * t_local) * 1e-9;
  cfg.iterations = 25;

  cfg.mode = exec::Mode::VectorNaiveOverlap;
  const auto naive = exec::run_distributed(a, x, cfg);
  cfg.mode = exec::Mode::Task;
  const auto task = exec::run_distributed(a, x, cfg);
  const double tn = median(naive.iteration_seconds), tt = median(task.iteration_seconds);
  std::ostringstream msg;
  msg << "task " << tt << " s vs naive " << tn << " s (local " << t_local << " s)";
  c.expect(tt <= 0.85 * tn, msg.str());
  std::cerr << "  criterion 5: " << msg.str() << '\n';
  return c;
}

// ---- 6 ---------------------------------------------------------------------

Check split_penalty_direction() {
  Check c;
  gen::GenSpec s;
  s.kind = gen::Kind::BlockCoupled;
  s.n = 2'000'000;
  s.n_nzr_target = 7;
  s.blocks = 2;
  s.coupling = 0.0;
  s.seed = 6;
  const auto a = gen::generate(s);
  const auto x = random_x(a.n_cols(), 7);

  exec::DistributedConfig cfg;
  cfg.ranks = 2;
  cfg.workers = 1;
  cfg.iterations = 31;
  cfg.policy = BalancePolicy::BalanceRows;
  cfg.mode = exec::Mode::VectorNoOverlap;
  const auto noovl = exec::run_distributed(a, x, cfg);
  cfg.mode = exec::Mode::VectorNaiveOverlap;
  const auto naive = exec::run_distributed(a, x, cfg);
  const auto plans = build_all_comm_plans(a, noovl.partition);
  for (const auto& p : plans) c.expect(p.halo_size() == 0, "instance has communication");

  const double t0 = median(noovl.iteration_seconds), t1 = median(naive.iteration_seconds);
  const double n_nzr = static_cast<double>(a.nnz()) / static_cast<double>(a.n_rows());
  const double predicted = model::split_penalty(n_nzr, 0.0);
  const double measured = t1 / t0 - 1.0;
  std::ostringstream msg;
  msg << "naive " << t1 << " s vs noovl " << t0 << " s: slowdown " << measured << ", predicted " << predicted;
  c.expect(t1 >= t0, "naive faster than noovl: " + msg.str());
  c.expect(measured <= 2.0 * predicted, "slowdown above twice the prediction: " + msg.str());
  std::cerr << "  criterion 6: " << msg.str() << '\n';
  return c;
}

// ---- 7 ---------------------------------------------------------------------

exec::PhaseTimings record(std::size_t rank, std::initializer_list<std::pair<exec::Phase, double>> phases) {
  exec::PhaseTimings t;
  t.rank = rank;
  for (const auto& [p, s] : phases) t.set(p, s);
  return t;
}

void expect_costs(Check& c, const exec::CostSummary& s, exec::Phase phase, std::array<double, 5> want,
                  const std::string& what) {
  c.expect(s.phase == phase, what + ": wrong phase");
  const std::array<double, 5> got = {s.p10, s.p25, s.p50, s.p75, s.p90};
  for (std::size_t i = 0; i < 5; ++i) {
    std::ostringstream m;
    m.precision(17);
    m << what << ": percentile " << i << " is " << got[i] << ", want " << want[i];
    c.expect(got[i] == want[i], m.str());
  }
}

Check cost_accounting() {
  Check c;
  using exec::Phase;
  // 11 ranks: positions q*10 = 1, 2.5, 5, 7.5, 9 over the sorted costs.
  const double wait[] = {7, 1, 9, 3, 10, 0, 4, 2, 8, 6, 5};  // sorted: 0..10
  std::vector<exec::PhaseTimings> eleven;
  for (std::size_t r = 0; r < 11; ++r) {
    eleven.push_back(record(r, {{Phase::WaitAll, wait[r]}, {Phase::LocalCompute, 1.0}}));
  }
  auto s = exec::summarize_costs(eleven, 2.0);
  c.expect(s.size() == 2, "eleven ranks: expected two phases");
  if (s.size() == 2) {
    expect_costs(c, s[0], Phase::WaitAll, {2.0, 5.0, 10.0, 15.0, 18.0}, "eleven ranks");
    expect_costs(c, s[1], Phase::LocalCompute, {2.0, 2.0, 2.0, 2.0, 2.0}, "constant phase");
  }
  // two ranks: fractional positions
  std::vector<exec::PhaseTimings> two = {record(0, {{Phase::FullCompute, 8.0}}), record(1, {{Phase::FullCompute, 0.0}})};
  s = exec::summarize_costs(two, 1.0);
  c.expect(s.size() == 1, "two ranks: expected one phase");
  if (s.size() == 1) expect_costs(c, s[0], Phase::FullCompute, {0.8, 2.0, 4.0, 6.0, 7.2}, "two ranks");
  // single rank: every percentile is the one cost
  std::vector<exec::PhaseTimings> one = {record(0, {{Phase::RecvPost, 0.375}})};
  s = exec::summarize_costs(one, 4.0);
  c.expect(s.size() == 1, "single rank: expected one phase");
  if (s.size() == 1) expect_costs(c, s[0], Phase::RecvPost, {1.5, 1.5, 1.5, 1.5, 1.5}, "single rank");
  // the interpolation definition itself
  const std::vector<double> ten = {1, 2, 3, 4, 5, 6, 7, 8, 9, 10};
  c.expect(exec::percentile(ten, 0.5) == 5.5, "median of 1..10 is not 5.5");
  return c;
}

// ---- 8 ---------------------------------------------------------------------

Check matrix_market_round_trip() {
  Check c;
  std::mt19937_64 rng(88);
  std::uniform_real_distribution<double> val(-1e3, 1e3);
  for (int m = 0; m < 20; ++m) {
    const std::size_t rows = 1 + rng() % 300, cols = 1 + rng() % 300;
    const std::size_t nnz = rng() % (rows * cols / 3 + 1);
    std::set<std::pair<std::size_t, std::size_t>> pos;
    while (pos.size() < nnz) pos.insert({rng() % rows, rng() % cols});
    std::vector<Triplet> t;
    for (const auto& [i, j] : pos) t.push_back({static_cast<index_t>(i), static_cast<index_t>(j), val(rng)});
    std::shuffle(t.begin(), t.end(), rng);
    const auto a = CrsMatrix::from_triplets(rows, cols, t);
    std::stringstream buf;
    io::write_matrix_market(a, buf);
    const auto b = io::read_matrix_market(buf);
    // compare as sorted per-row (column, value) sets
    auto entries = [](const CrsMatrix& x) {
      std::vector<std::tuple<std::size_t, index_t, double>> e;
      for (std::size_t i = 0; i < x.n_rows(); ++i) {
        for (offset_t j = x.row_ptr()[i]; j < x.row_ptr()[i + 1]; ++j) e.emplace_back(i, x.col_idx()[j], x.values()[j]);
      }
      std::sort(e.begin(), e.end());
      return e;
    };
    c.expect(a.n_rows() == b.n_rows() && a.n_cols() == b.n_cols() && entries(a) == entries(b),
             "round trip changed matrix " + std::to_string(m));
  }
  // symmetric: d diagonal and k strictly lower entries become d + 2k
  std::ostringstream sym;
  const std::size_t n = 50;
  std::vector<std::pair<std::size_t, std::size_t>> lower;
  for (std::size_t i = 1; i < n; i += 2) lower.push_back({i, i / 2});
  sym << "%%MatrixMarket matrix coordinate real symmetric\n" << n << ' ' << n << ' ' << n + lower.size() << '\n';
  for (std::size_t i = 1; i <= n; ++i) sym << i << ' ' << i << " 4.0\n";
  for (const auto& [i, j] : lower) sym << i + 1 << ' ' << j + 1 << " -1.5\n";
  std::istringstream in(sym.str());
  const auto s = io::read_matrix_market(in);
  c.expect(s.nnz() == n + 2 * lower.size(), "symmetric expansion count " + std::to_string(s.nnz()));
  std::size_t upper = 0;
  for (std::size_t i = 0; i < n; ++i) {
    for (offset_t j = s.row_ptr()[i]; j < s.row_ptr()[i + 1]; ++j) upper += s.col_idx()[j] > i;
  }
  c.expect(upper == lower.size(), "mirrored entries missing");
  return c;
}

}  // namespace

int main() {
  struct Criterion {
    const char* name;
    std::function<Check()> run;
  };
  const std::vector<Criterion> criteria = {
      {"model regression", model_regression},
      {"oracle equivalence", oracle_equivalence},
      {"comm-plan duality", plan_duality},
      {"probe shape", probe_shape},
      {"explicit-overlap benefit", overlap_benefit},
      {"split-mode penalty direction", split_penalty_direction},
      {"cost accounting", cost_accounting},
      {"matrix market round trip", matrix_market_round_trip},
  };
  int failed = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    const auto t0 = std::chrono::steady_clock::now();
    Check c;
    try {
      c = criteria[i].run();
    } catch (const std::exception& e) {
      c.failures.push_back(std::string("exception: ") + e.what());
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    const bool ok = c.failures.empty();
    failed += !ok;
    std::printf("%s %zu %s (%.2f s)\n", ok ? "PASS" : "FAIL", i + 1, criteria[i].name, secs);
    for (std::size_t k = 0; k < std::min<std::size_t>(c.failures.size(), 10); ++k) {
      std::printf("    %s\n", c.failures[k].c_str());
    }
    std::fflush(stdout);
  }
  return failed ? 1 : 0;
}
