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

// Command-line front end. Talks to the engine only through the C API.

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <map>
#include <memory>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "hspmv/hspmv.h"
#include "json.hpp"

namespace fs = std::filesystem;
using json = nlohmann::ordered_json;

namespace {

constexpr int kExitFailure = 1;
constexpr int kExitUsage = 2;
constexpr std::size_t kRunWarnLimit = 1000;

struct CliError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

void check(hspmv_status status, const std::string& context) {
  if (status != HSPMV_OK) {
    throw CliError(context + ": " + hspmv_status_string(status) + ": " + hspmv_last_error());
  }
}

struct MatrixDeleter {
  void operator()(hspmv_matrix* m) const { hspmv_matrix_free(m); }
};
struct RunDeleter {
  void operator()(hspmv_run* r) const { hspmv_run_free(r); }
};
using MatrixPtr = std::unique_ptr<hspmv_matrix, MatrixDeleter>;
using RunPtr = std::unique_ptr<hspmv_run, RunDeleter>;

MatrixPtr load_matrix(const std::string& source, std::uint64_t seed) {
  hspmv_matrix* m = nullptr;
  check(hspmv_matrix_load(source.c_str(), seed, &m), "loading '" + source + "'");
  return MatrixPtr(m);
}

struct GlobalOptions {
  std::string output;
  std::string format;
  std::optional<std::uint64_t> seed;

  std::uint64_t effective_seed() const {
    if (seed) return *seed;
    if (const char* env = std::getenv("SPMV_SEED")) {
      try {
        std::size_t used = 0;
        const auto v = std::stoull(env, &used);
        if (used == std::string(env).size()) return v;
      } catch (const std::exception&) {
      }
      throw CliError(std::string("SPMV_SEED is not an unsigned integer: '") + env + "'");
    }
    return 0;
  }

  std::string format_or(const std::string& fallback) const { return format.empty() ? fallback : format; }
};

// Destination for one named output: a file in --output, or stdout.
class Sink {
 public:
  Sink(const GlobalOptions& g, const std::string& file_name) {
    if (g.output.empty()) return;
    fs::create_directories(g.output);
    path_ = fs::path(g.output) / file_name;
    file_.open(path_);
    if (!file_) throw CliError("cannot open " + path_.string() + " for writing");
  }
  std::ostream& stream() { return file_.is_open() ? static_cast<std::ostream&>(file_) : std::cout; }
  void close() {
    if (!file_.is_open()) return;
    file_.close();
    if (!file_) throw CliError("writing " + path_.string() + " failed");
  }

 private:
  fs::path path_;
  std::ofstream file_;
};

void csv_header(std::ostream& out, const std::string& table, const std::string& columns) {
  out << "# hspmv-csv v1 " << table << '\n' << columns << '\n';
}

std::string num(double v) {
  if (std::isnan(v)) return "";
  std::ostringstream s;
  s << std::setprecision(9) << v;
  return s.str();
}

bool parse_on_off(const std::string& v) { return v == "on"; }

hspmv_policy parse_policy(const std::string& v) { return v == "rows" ? HSPMV_BALANCE_ROWS : HSPMV_BALANCE_NONZEROS; }

// ---- model ---------------------------------------------------------------

struct ModelArgs {
  double n_nzr = 0;
  double kappa = 0;
  std::optional<double> bandwidth;
  std::optional<double> perf;
  int index_bytes = 4;
  bool triad = false;
  std::size_t triad_length = 20'000'000;
  int triad_reps = 10;
  int triad_workers = 1;
};

int cmd_model(const GlobalOptions& g, const ModelArgs& a) {
  json r;
  r["n_nzr"] = a.n_nzr;
  r["kappa"] = a.kappa;
  r["index_bytes"] = a.index_bytes;
  double balance = 0, balance_split = 0, penalty = 0;
  check(hspmv_model_code_balance(a.n_nzr, a.kappa, a.index_bytes, &balance), "code balance");
  check(hspmv_model_code_balance_split(a.n_nzr, a.kappa, a.index_bytes, &balance_split), "split code balance");
  check(hspmv_model_split_penalty(a.n_nzr, a.kappa, a.index_bytes, &penalty), "split penalty");
  r["code_balance"] = balance;
  r["code_balance_split"] = balance_split;
  r["split_penalty"] = penalty;

  std::optional<double> bandwidth = a.bandwidth;
  if (a.triad) {
    hspmv_triad_options opts;
    hspmv_triad_options_default(&opts);
    opts.array_length = a.triad_length;
    opts.repetitions = a.triad_reps;
    opts.workers = a.triad_workers;
    hspmv_triad_result t{};
    check(hspmv_measure_triad(&opts, &t), "triad measurement");
    r["triad_bandwidth"] = t.bandwidth_gbps;
    r["triad_bandwidth_naive"] = t.naive_bandwidth_gbps;
    r["triad_cache_tainted"] = t.cache_tainted != 0;
    if (!bandwidth) bandwidth = t.bandwidth_gbps;
  }
  if (bandwidth) {
    double bound = 0, bound_split = 0;
    check(hspmv_model_perf_bound(*bandwidth, balance, &bound), "performance bound");
    check(hspmv_model_perf_bound(*bandwidth, balance_split, &bound_split), "split performance bound");
    r["bandwidth"] = *bandwidth;
    r["perf_bound"] = bound;
    r["perf_bound_split"] = bound_split;
    if (a.perf) {
      double kappa = 0;
      int negative = 0;
      check(hspmv_model_estimate_kappa(*a.perf, *bandwidth, a.n_nzr, a.index_bytes, &kappa, &negative),
            "kappa estimate");
      r["perf"] = *a.perf;
      r["kappa_estimate"] = kappa;
      r["kappa_negative_warning"] = negative != 0;
      if (negative) std::cerr << "warning: negative kappa, measurements disagree with the model\n";
    }
  } else if (a.perf) {
    throw CliError("--perf needs --bandwidth or --triad");
  }

  const std::string fmt = g.format_or("text");
  Sink sink(g, "model." + std::string(fmt == "json" ? "json" : fmt == "csv" ? "csv" : "txt"));
  auto& out = sink.stream();
  if (fmt == "json") {
    out << r.dump(2) << '\n';
  } else if (fmt == "csv") {
    csv_header(out, "model", "field,value");
    for (const auto& [k, v] : r.items()) out << k << ',' << (v.is_number() ? num(v.get<double>()) : v.dump()) << '\n';
  } else {
    for (const auto& [k, v] : r.items()) {
      out << std::left << std::setw(24) << k << ' ';
      if (v.is_boolean()) out << (v.get<bool>() ? "true" : "false");
      else if (v.is_number_integer()) out << v.get<long long>();
      else out << std::setprecision(17) << v.get<double>();
      out << '\n';
    }
  }
  sink.close();
  return 0;
}

// ---- probe ---------------------------------------------------------------

struct ProbeArgs {
  std::size_t bytes = 80'000'000;
  std::string direction = "recv";
  std::string async = "off";
  double bandwidth = 10.0;
  std::size_t eager_threshold = 64 * 1024;
  std::vector<double> work = {0.001, 0.004, 0.008, 0.016, 0.032};
};

int cmd_probe(const GlobalOptions& g, const ProbeArgs& a) {
  hspmv_transport_config cfg;
  hspmv_transport_config_default(&cfg);
  cfg.async_progress = parse_on_off(a.async);
  cfg.synthetic_bandwidth_gbps = a.bandwidth;
  cfg.eager_threshold = a.eager_threshold;
  std::vector<double> total(a.work.size());
  check(hspmv_probe(&cfg, a.bytes, a.work.data(), a.work.size(),
                    a.direction == "send" ? HSPMV_PROBE_SEND : HSPMV_PROBE_RECV, total.data()),
        "probe");
  const double transfer = static_cast<double>(a.bytes) / (a.bandwidth * 1e9);
  std::optional<double> ratio;
  double value = 0;
  if (hspmv_overlap_ratio(a.work.data(), total.data(), a.work.size(), transfer, &value) == HSPMV_OK) ratio = value;

  const std::string fmt = g.format_or("csv");
  Sink sink(g, fmt == "json" ? "probe.json" : "probe.csv");
  auto& out = sink.stream();
  if (fmt == "json") {
    json r;
    r["bytes"] = a.bytes;
    r["direction"] = a.direction;
    r["async"] = a.async;
    r["bandwidth"] = a.bandwidth;
    r["transfer_s"] = transfer;
    r["samples"] = json::array();
    for (std::size_t i = 0; i < total.size(); ++i) r["samples"].push_back({{"work_s", a.work[i]}, {"total_s", total[i]}});
    if (ratio) r["overlap_ratio"] = *ratio;
    out << r.dump(2) << '\n';
  } else {
    csv_header(out, "probe", "work_s,total_s");
    for (std::size_t i = 0; i < total.size(); ++i) out << num(a.work[i]) << ',' << num(total[i]) << '\n';
  }
  sink.close();
  if (ratio && fmt != "json") std::cerr << "overlap ratio " << num(*ratio) << '\n';
  return 0;
}

// ---- gen -----------------------------------------------------------------

struct GenArgs {
  std::string spec;
  std::string out;
};

int cmd_gen(const GlobalOptions& g, const GenArgs& a) {
  hspmv_matrix* raw = nullptr;
  check(hspmv_matrix_generate(a.spec.c_str(), g.effective_seed(), &raw), "generating '" + a.spec + "'");
  MatrixPtr m(raw);
  fs::path path(a.out);
  if (!g.output.empty() && path.is_relative()) {
    fs::create_directories(g.output);
    path = fs::path(g.output) / path;
  }
  check(hspmv_matrix_write_mm(m.get(), path.c_str()), "writing " + path.string());
  hspmv_matrix_info info{};
  check(hspmv_matrix_get_info(m.get(), &info), "matrix info");
  std::cerr << "wrote " << path.string() << ": " << info.n_rows << " rows, " << info.nnz << " nonzeros, "
            << num(info.avg_nnz_per_row) << " per row\n";
  return 0;
}

// ---- partition-info ------------------------------------------------------

struct PartitionArgs {
  std::string matrix;
  std::size_t ranks = 1;
  std::string policy = "nnz";
};

int cmd_partition_info(const GlobalOptions& g, const PartitionArgs& a) {
  auto m = load_matrix(a.matrix, g.effective_seed());
  std::vector<hspmv_rank_info> info(a.ranks);
  check(hspmv_partition_info(m.get(), a.ranks, parse_policy(a.policy), info.data()), "partitioning");
  const std::string fmt = g.format_or("csv");
  Sink sink(g, fmt == "json" ? "partition.json" : "partition.csv");
  auto& out = sink.stream();
  if (fmt == "json") {
    json r = json::array();
    for (const auto& i : info) {
      r.push_back({{"rank", i.rank},
                   {"rows", i.rows},
                   {"nnz", i.nnz},
                   {"halo_size", i.halo_size},
                   {"send_bytes", i.send_bytes},
                   {"recv_bytes", i.recv_bytes}});
    }
    out << r.dump(2) << '\n';
  } else {
    csv_header(out, "partition", "rank,rows,nnz,halo_size,send_bytes,recv_bytes");
    for (const auto& i : info) {
      out << i.rank << ',' << i.rows << ',' << i.nnz << ',' << i.halo_size << ',' << i.send_bytes << ','
          << i.recv_bytes << '\n';
    }
  }
  sink.close();
  return 0;
}

// ---- bench ---------------------------------------------------------------

struct BenchArgs {
  std::string matrix;
  std::vector<std::string> modes = {"noovl"};
  std::vector<std::size_t> ranks = {1};
  std::size_t workers = 1;
  std::string policy = "nnz";
  std::size_t iterations = 10;
  std::string async = "off";
  std::optional<double> bandwidth;
  std::size_t eager_threshold = 64 * 1024;
  std::size_t ranks_per_node = 1;
};

struct BenchRun {
  std::size_t id;
  std::string mode;
  std::size_t ranks;
  hspmv_run_stats stats;
  std::vector<hspmv_timing_record> records;
  std::vector<hspmv_cost_summary> costs;
  double efficiency = std::nan("");
};

int cmd_bench(const GlobalOptions& g, const BenchArgs& a) {
  std::vector<hspmv_mode> modes;
  for (const auto& name : a.modes) {
    hspmv_mode m;
    check(hspmv_parse_mode(name.c_str(), &m), "--mode");
    modes.push_back(m);
  }
  const std::size_t n_runs = modes.size() * a.ranks.size();
  if (n_runs > kRunWarnLimit) std::cerr << "warning: sweep has " << n_runs << " runs\n";

  const auto seed = g.effective_seed();
  auto matrix = load_matrix(a.matrix, seed);
  hspmv_matrix_info info{};
  check(hspmv_matrix_get_info(matrix.get(), &info), "matrix info");

  std::vector<BenchRun> runs;
  bool all_passed = true;
  for (auto mode : modes) {
    for (auto p : a.ranks) {
      hspmv_run_config cfg;
      hspmv_run_config_default(&cfg);
      cfg.mode = mode;
      cfg.ranks = p;
      cfg.workers = a.workers;
      cfg.policy = parse_policy(a.policy);
      cfg.iterations = a.iterations;
      cfg.transport.async_progress = parse_on_off(a.async);
      cfg.transport.synthetic_bandwidth_gbps = a.bandwidth.value_or(0.0);
      cfg.transport.eager_threshold = a.eager_threshold;
      cfg.x_seed = seed;

      BenchRun br{runs.size(), hspmv_mode_name(mode), p, {}, {}, {}};
      hspmv_run* raw = nullptr;
      const auto status = hspmv_run_execute(matrix.get(), &cfg, nullptr, 0, &raw);
      if (status != HSPMV_OK) {
        std::cerr << "run " << br.id << " (" << br.mode << ", P=" << p << ") failed: " << hspmv_status_string(status)
                  << ": " << hspmv_last_error() << '\n';
        all_passed = false;
        continue;
      }
      RunPtr run(raw);
      check(hspmv_run_get_stats(run.get(), &br.stats), "run statistics");
      br.records.resize(br.stats.n_records);
      std::size_t count = 0;
      check(hspmv_run_get_records(run.get(), br.records.data(), br.records.size(), &count), "timing records");
      const double nodes = std::ceil(static_cast<double>(p) / static_cast<double>(a.ranks_per_node));
      br.costs.resize(HSPMV_PHASE_COUNT);
      check(hspmv_run_summarize(run.get(), nodes, br.costs.data(), br.costs.size(), &count), "cost summary");
      br.costs.resize(count);
      if (!br.stats.check_passed) {
        std::cerr << "run " << br.id << " (" << br.mode << ", P=" << p << ") failed the serial check: error "
                  << num(br.stats.max_rel_error) << '\n';
        all_passed = false;
      }
      std::cerr << "run " << br.id << ": " << br.mode << " P=" << p << " " << num(br.stats.gflops) << " GFlop/s\n";
      runs.push_back(std::move(br));
    }
  }

  // Strong-scaling efficiency and 50% marker, per mode.
  std::map<std::string, std::optional<std::size_t>> markers;
  for (const auto& name : a.modes) {
    std::vector<std::size_t> ps;
    std::vector<double> perf;
    std::vector<BenchRun*> members;
    for (auto& r : runs) {
      if (r.mode == name && r.stats.gflops > 0) {
        ps.push_back(r.ranks);
        perf.push_back(r.stats.gflops);
        members.push_back(&r);
      }
    }
    if (ps.empty()) continue;
    std::vector<double> eff(ps.size());
    std::size_t marker = 0;
    int found = 0;
    check(hspmv_efficiency_marker(ps.data(), perf.data(), ps.size(), eff.data(), &marker, &found), "efficiency");
    for (std::size_t i = 0; i < members.size(); ++i) members[i]->efficiency = eff[i];
    markers[name] = found ? std::optional(marker) : std::nullopt;
  }

  const std::string policy = a.policy == "rows" ? "rows" : "nnz";
  const std::string fmt = g.format_or("csv");
  GlobalOptions to_dir = g;
  if (to_dir.output.empty()) to_dir.output = ".";
  if (fmt == "json") {
    json r;
    r["matrix"] = a.matrix;
    r["n_rows"] = info.n_rows;
    r["nnz"] = info.nnz;
    r["runs"] = json::array();
    for (const auto& br : runs) {
      json j{{"run_id", br.id},
             {"mode", br.mode},
             {"ranks", br.ranks},
             {"workers", a.workers},
             {"policy", policy},
             {"iterations", br.stats.iterations},
             {"total_s", br.stats.total_seconds},
             {"median_iteration_s", br.stats.median_iteration_seconds},
             {"gflops", br.stats.gflops},
             {"gflops_median", br.stats.gflops_median},
             {"efficiency", br.efficiency},
             {"check_passed", br.stats.check_passed != 0},
             {"max_rel_error", br.stats.max_rel_error}};
      j["costs"] = json::array();
      for (const auto& c : br.costs) {
        j["costs"].push_back({{"phase", hspmv_phase_name(c.phase)},
                              {"p10", c.p10},
                              {"p25", c.p25},
                              {"p50", c.p50},
                              {"p75", c.p75},
                              {"p90", c.p90}});
      }
      j["iterations_detail"] = json::array();
      for (const auto& rec : br.records) {
        json phases = json::object();
        for (int p = 0; p < HSPMV_PHASE_COUNT; ++p) {
          if (!std::isnan(rec.seconds[p])) phases[hspmv_phase_name(p)] = rec.seconds[p];
        }
        j["iterations_detail"].push_back({{"rank", rec.rank}, {"iteration", rec.iteration}, {"phases", phases}});
      }
      r["runs"].push_back(j);
    }
    r["efficiency_50_marker"] = json::object();
    for (const auto& [mode, m] : markers) r["efficiency_50_marker"][mode] = m ? json(*m) : json(nullptr);
    Sink sink(to_dir, "bench.json");
    sink.stream() << r.dump(2) << '\n';
    sink.close();
  } else {
    {
      Sink sink(to_dir, "iterations.csv");
      auto& out = sink.stream();
      csv_header(out, "iterations", "run_id,mode,ranks,workers,rank,iteration,phase,seconds");
      for (const auto& br : runs) {
        for (const auto& rec : br.records) {
          for (int p = 0; p < HSPMV_PHASE_COUNT; ++p) {
            if (std::isnan(rec.seconds[p])) continue;
            out << br.id << ',' << br.mode << ',' << br.ranks << ',' << a.workers << ',' << rec.rank << ','
                << rec.iteration << ',' << hspmv_phase_name(p) << ',' << num(rec.seconds[p]) << '\n';
          }
        }
      }
      sink.close();
    }
    {
      Sink sink(to_dir, "costs.csv");
      auto& out = sink.stream();
      csv_header(out, "costs", "run_id,mode,ranks,workers,phase,p10,p25,p50,p75,p90");
      for (const auto& br : runs) {
        for (const auto& c : br.costs) {
          out << br.id << ',' << br.mode << ',' << br.ranks << ',' << a.workers << ',' << hspmv_phase_name(c.phase)
              << ',' << num(c.p10) << ',' << num(c.p25) << ',' << num(c.p50) << ',' << num(c.p75) << ','
              << num(c.p90) << '\n';
        }
      }
      sink.close();
    }
    {
      Sink sink(to_dir, "summary.csv");
      auto& out = sink.stream();
      csv_header(out, "summary",
                 "run_id,mode,ranks,workers,policy,iterations,nnz,total_s,median_iteration_s,gflops,gflops_median,"
                 "efficiency,check_passed,max_rel_error");
      for (const auto& br : runs) {
        out << br.id << ',' << br.mode << ',' << br.ranks << ',' << a.workers << ',' << policy << ','
            << br.stats.iterations << ',' << info.nnz << ',' << num(br.stats.total_seconds) << ','
            << num(br.stats.median_iteration_seconds) << ',' << num(br.stats.gflops) << ','
            << num(br.stats.gflops_median) << ',' << num(br.efficiency) << ',' << br.stats.check_passed << ','
            << num(br.stats.max_rel_error) << '\n';
      }
      sink.close();
    }
    {
      Sink sink(to_dir, "scaling.csv");
      auto& out = sink.stream();
      csv_header(out, "scaling", "mode,efficiency_50_ranks");
      for (const auto& [mode, m] : markers) out << mode << ',' << (m ? std::to_string(*m) : "") << '\n';
      sink.close();
    }
  }
  return all_passed ? 0 : kExitFailure;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Distributed sparse matrix-vector multiplication benchmarks"};
  app.require_subcommand(1);
  app.set_version_flag("--version", hspmv_version());

  GlobalOptions g;
  app.add_option("--output", g.output, "Directory for output files (default: stdout, bench: .)");
  app.add_option("--format", g.format, "Output format")->check(CLI::IsMember({"csv", "json", "text"}));
  std::uint64_t seed = 0;
  auto* seed_opt = app.add_option("--seed", seed, "Seed for generators and the RHS (fallback: SPMV_SEED)");
  app.fallthrough();

  const auto on_off = CLI::IsMember({"on", "off"});
  const auto policies = CLI::IsMember({"nnz", "rows"});

  ModelArgs model;
  auto* model_cmd = app.add_subcommand("model", "Evaluate the code-balance model");
  model_cmd->add_option("--nnzr", model.n_nzr, "Average nonzeros per row")->required()->check(CLI::PositiveNumber);
  model_cmd->add_option("--kappa", model.kappa, "Extra RHS traffic in bytes per inner iteration")
      ->check(CLI::NonNegativeNumber);
  model_cmd->add_option("--bandwidth", model.bandwidth, "Memory bandwidth in GB/s")->check(CLI::PositiveNumber);
  model_cmd->add_option("--perf", model.perf, "Measured performance in GFlop/s, to estimate kappa")
      ->check(CLI::PositiveNumber);
  model_cmd->add_option("--index-bytes", model.index_bytes, "Bytes per column index")->check(CLI::Range(1, 16));
  model_cmd->add_flag("--triad", model.triad, "Measure triad bandwidth and use it when --bandwidth is absent");
  model_cmd->add_option("--triad-length", model.triad_length, "Triad array length")->check(CLI::PositiveNumber);
  model_cmd->add_option("--triad-reps", model.triad_reps, "Triad repetitions")->check(CLI::PositiveNumber);
  model_cmd->add_option("--triad-workers", model.triad_workers, "Triad workers")->check(CLI::PositiveNumber);

  ProbeArgs probe;
  auto* probe_cmd = app.add_subcommand("probe", "Measure communication/computation overlap between two ranks");
  probe_cmd->add_option("--bytes", probe.bytes, "Message size in bytes");
  probe_cmd->add_option("--direction", probe.direction, "Side posted by the measuring rank")
      ->check(CLI::IsMember({"send", "recv"}));
  probe_cmd->add_option("--async", probe.async, "Asynchronous progress")->check(on_off);
  probe_cmd->add_option("--bandwidth", probe.bandwidth, "Synthetic link bandwidth in GB/s")
      ->check(CLI::PositiveNumber);
  probe_cmd->add_option("--eager-threshold", probe.eager_threshold, "Eager protocol limit in bytes");
  probe_cmd->add_option("--work-steps", probe.work, "Busy-work durations in seconds")
      ->delimiter(',')
      ->check(CLI::PositiveNumber);

  GenArgs gen;
  auto* gen_cmd = app.add_subcommand("gen", "Generate a synthetic matrix as Matrix Market");
  gen_cmd->add_option("--spec", gen.spec, "e.g. banded:n=2000,nnzr=15,band=40")->required();
  gen_cmd->add_option("--out", gen.out, "Output .mtx path")->required();

  PartitionArgs part;
  auto* part_cmd = app.add_subcommand("partition-info", "Per-rank rows, nonzeros and halo volume");
  part_cmd->add_option("--matrix", part.matrix, "Matrix Market path or generator spec")->required();
  part_cmd->add_option("--ranks", part.ranks, "Number of ranks")->check(CLI::PositiveNumber);
  part_cmd->add_option("--policy", part.policy, "Balance nonzeros or rows")->check(policies);

  BenchArgs bench;
  auto* bench_cmd = app.add_subcommand("bench", "Run execution modes over a sweep of rank counts");
  bench_cmd->add_option("--matrix", bench.matrix, "Matrix Market path or generator spec")->required();
  bench_cmd->add_option("--mode", bench.modes, "Execution modes")
      ->delimiter(',')
      ->check(CLI::IsMember({"noovl", "naive", "task"}));
  bench_cmd->add_option("--ranks", bench.ranks, "Rank counts")->delimiter(',')->check(CLI::PositiveNumber);
  bench_cmd->add_option("--workers", bench.workers, "Compute workers per rank")->check(CLI::PositiveNumber);
  bench_cmd->add_option("--policy", bench.policy, "Balance nonzeros or rows")->check(policies);
  bench_cmd->add_option("--iterations", bench.iterations, "Iterations per run")->check(CLI::PositiveNumber);
  bench_cmd->add_option("--async", bench.async, "Asynchronous progress")->check(on_off);
  bench_cmd->add_option("--bandwidth", bench.bandwidth, "Synthetic link bandwidth in GB/s")
      ->check(CLI::PositiveNumber);
  bench_cmd->add_option("--eager-threshold", bench.eager_threshold, "Eager protocol limit in bytes");
  bench_cmd->add_option("--ranks-per-node", bench.ranks_per_node, "Ranks sharing one node, for cost scaling")
      ->check(CLI::PositiveNumber);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitUsage;
  }
  if (seed_opt->count() > 0) g.seed = seed;

  try {
    if (model_cmd->parsed()) return cmd_model(g, model);
    if (probe_cmd->parsed()) return cmd_probe(g, probe);
    if (gen_cmd->parsed()) return cmd_gen(g, gen);
    if (part_cmd->parsed()) return cmd_partition_info(g, part);
    if (bench_cmd->parsed()) return cmd_bench(g, bench);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitFailure;
  }
  return kExitUsage;
}
