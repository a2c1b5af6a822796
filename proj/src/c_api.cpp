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

#include "hspmv/hspmv.h"

#include <algorithm>
#include <cmath>
#include <limits>
#include <memory>
#include <new>
#include <random>
#include <string>

#include "hspmv/exec_modes.hpp"
#include "hspmv/io_gen.hpp"
#include "hspmv/partition.hpp"
#include "hspmv/perf_model.hpp"
#include "hspmv/transport.hpp"

struct hspmv_matrix {
  hspmv::CrsMatrix a;
};

struct hspmv_run {
  hspmv::exec::DistributedResult result;
  hspmv_run_stats stats{};
};

namespace {

thread_local std::string last_error;

hspmv_status fail(hspmv_status status, const std::string& message) {
  last_error = message;
  return status;
}

hspmv_status map_code(hspmv::ErrorCode code) {
  switch (code) {
    case hspmv::ErrorCode::ContractViolation: return HSPMV_ERR_CONTRACT;
    case hspmv::ErrorCode::Parse: return HSPMV_ERR_PARSE;
    case hspmv::ErrorCode::UnsupportedShape: return HSPMV_ERR_UNSUPPORTED_SHAPE;
    case hspmv::ErrorCode::Resource: return HSPMV_ERR_RESOURCE;
    case hspmv::ErrorCode::Internal: return HSPMV_ERR_INTERNAL;
    case hspmv::ErrorCode::Io: return HSPMV_ERR_IO;
  }
  return HSPMV_ERR_UNKNOWN;
}

// Runs body and turns any exception into a status code.
template <class F>
hspmv_status guarded(F&& body) {
  try {
    body();
    last_error.clear();
    return HSPMV_OK;
  } catch (const hspmv::Error& e) {
    return fail(map_code(e.code()), e.what());
  } catch (const std::bad_alloc&) {
    return fail(HSPMV_ERR_RESOURCE, "out of memory");
  } catch (const std::exception& e) {
    return fail(HSPMV_ERR_UNKNOWN, e.what());
  } catch (...) {
    return fail(HSPMV_ERR_UNKNOWN, "unknown exception");
  }
}

#define HSPMV_NONNULL(p) \
  if (!(p)) return fail(HSPMV_ERR_NULL_ARGUMENT, #p " must not be NULL")

hspmv::model::ModelOptions model_options(int index_bytes) {
  hspmv::require(index_bytes > 0, "index_bytes must be positive");
  return hspmv::model::ModelOptions{index_bytes};
}

hspmv::transport::TransportConfig to_cpp(const hspmv_transport_config& c) {
  hspmv::transport::TransportConfig out;
  out.async_progress = c.async_progress != 0;
  if (c.synthetic_bandwidth_gbps > 0.0) out.synthetic_bandwidth_gbps = c.synthetic_bandwidth_gbps;
  out.eager_threshold = c.eager_threshold;
  return out;
}

hspmv::BalancePolicy to_cpp(hspmv_policy p) {
  hspmv::require(p == HSPMV_BALANCE_NONZEROS || p == HSPMV_BALANCE_ROWS, "unknown balance policy");
  return p == HSPMV_BALANCE_ROWS ? hspmv::BalancePolicy::BalanceRows : hspmv::BalancePolicy::BalanceNonzeros;
}

hspmv::exec::Mode to_cpp(hspmv_mode m) {
  switch (m) {
    case HSPMV_MODE_NOOVL: return hspmv::exec::Mode::VectorNoOverlap;
    case HSPMV_MODE_NAIVE: return hspmv::exec::Mode::VectorNaiveOverlap;
    case HSPMV_MODE_TASK: return hspmv::exec::Mode::Task;
  }
  throw hspmv::ContractViolation("unknown execution mode");
}

std::vector<double> random_rhs(std::size_t n, std::uint64_t seed) {
  std::mt19937_64 engine(seed);
  std::vector<double> x(n);
  for (auto& v : x) v = 2.0 * (static_cast<double>(engine() >> 11) * 0x1.0p-53) - 1.0;
  return x;
}

hspmv_timing_record to_c(const hspmv::exec::PhaseTimings& t) {
  hspmv_timing_record r{};
  r.rank = t.rank;
  r.iteration = t.iteration;
  for (std::size_t p = 0; p < HSPMV_PHASE_COUNT; ++p) {
    r.seconds[p] = t.seconds[p] ? *t.seconds[p] : std::numeric_limits<double>::quiet_NaN();
  }
  r.iteration_seconds = t.iteration_seconds;
  return r;
}

hspmv::exec::PhaseTimings to_cpp(const hspmv_timing_record& r) {
  hspmv::exec::PhaseTimings t;
  t.rank = r.rank;
  t.iteration = r.iteration;
  for (std::size_t p = 0; p < HSPMV_PHASE_COUNT; ++p) {
    if (!std::isnan(r.seconds[p])) t.seconds[p] = r.seconds[p];
  }
  t.iteration_seconds = r.iteration_seconds;
  return t;
}

hspmv_status write_summaries(const std::vector<hspmv::exec::CostSummary>& sums, hspmv_cost_summary* out,
                             size_t capacity, size_t* count) {
  *count = sums.size();
  if (capacity < sums.size()) return fail(HSPMV_ERR_BUFFER_TOO_SMALL, "summary buffer too small");
  for (std::size_t i = 0; i < sums.size(); ++i) {
    out[i] = {static_cast<int>(sums[i].phase), sums[i].p10, sums[i].p25, sums[i].p50, sums[i].p75, sums[i].p90};
  }
  return HSPMV_OK;
}

}  // namespace

extern "C" {

HSPMV_API const char* hspmv_status_string(hspmv_status status) {
  switch (status) {
    case HSPMV_OK: return "ok";
    case HSPMV_ERR_CONTRACT: return "contract violation";
    case HSPMV_ERR_PARSE: return "parse error";
    case HSPMV_ERR_UNSUPPORTED_SHAPE: return "unsupported shape";
    case HSPMV_ERR_RESOURCE: return "resource error";
    case HSPMV_ERR_INTERNAL: return "internal error";
    case HSPMV_ERR_IO: return "i/o error";
    case HSPMV_ERR_NULL_ARGUMENT: return "null argument";
    case HSPMV_ERR_BUFFER_TOO_SMALL: return "buffer too small";
    case HSPMV_ERR_UNKNOWN: return "unknown error";
  }
  return "unknown status";
}

HSPMV_API const char* hspmv_last_error(void) { return last_error.c_str(); }

HSPMV_API const char* hspmv_version(void) { return "0.1.0"; }

HSPMV_API hspmv_status hspmv_matrix_read_mm(const char* path, hspmv_matrix** out) {
  HSPMV_NONNULL(path);
  HSPMV_NONNULL(out);
  return guarded([&] { *out = new hspmv_matrix{hspmv::io::read_matrix_market(std::filesystem::path(path))}; });
}

HSPMV_API hspmv_status hspmv_matrix_generate(const char* spec, uint64_t default_seed, hspmv_matrix** out) {
  HSPMV_NONNULL(spec);
  HSPMV_NONNULL(out);
  return guarded([&] {
    *out = new hspmv_matrix{hspmv::gen::generate(hspmv::gen::parse_gen_spec(spec, default_seed))};
  });
}

HSPMV_API hspmv_status hspmv_matrix_load(const char* path_or_spec, uint64_t default_seed, hspmv_matrix** out) {
  HSPMV_NONNULL(path_or_spec);
  return hspmv::gen::looks_like_gen_spec(path_or_spec) ? hspmv_matrix_generate(path_or_spec, default_seed, out)
                                                       : hspmv_matrix_read_mm(path_or_spec, out);
}

HSPMV_API hspmv_status hspmv_matrix_from_crs(size_t n_rows, size_t n_cols, const size_t* row_ptr,
                                             const uint32_t* col_idx, const double* values, hspmv_matrix** out) {
  HSPMV_NONNULL(row_ptr);
  HSPMV_NONNULL(out);
  const size_t nnz = row_ptr[n_rows];
  if (nnz > 0) {
    HSPMV_NONNULL(col_idx);
    HSPMV_NONNULL(values);
  }
  return guarded([&] {
    *out = new hspmv_matrix{hspmv::CrsMatrix(n_rows, n_cols, std::vector<hspmv::offset_t>(row_ptr, row_ptr + n_rows + 1),
                                             std::vector<hspmv::index_t>(col_idx, col_idx + nnz),
                                             std::vector<double>(values, values + nnz))};
  });
}

HSPMV_API hspmv_status hspmv_matrix_write_mm(const hspmv_matrix* m, const char* path) {
  HSPMV_NONNULL(m);
  HSPMV_NONNULL(path);
  return guarded([&] { hspmv::io::write_matrix_market(m->a, std::filesystem::path(path)); });
}

HSPMV_API hspmv_status hspmv_matrix_get_info(const hspmv_matrix* m, hspmv_matrix_info* out) {
  HSPMV_NONNULL(m);
  HSPMV_NONNULL(out);
  *out = {m->a.n_rows(), m->a.n_cols(), m->a.nnz(), m->a.max_row_nnz(), m->a.avg_nnz_per_row()};
  return HSPMV_OK;
}

HSPMV_API hspmv_status hspmv_matrix_spmv(const hspmv_matrix* m, const double* x, size_t nx, double* y, size_t ny,
                                         int accumulate) {
  HSPMV_NONNULL(m);
  if (nx) HSPMV_NONNULL(x);
  if (ny) HSPMV_NONNULL(y);
  return guarded([&] { hspmv::spmv_full(m->a, std::span(x, nx), std::span(y, ny), accumulate != 0); });
}

HSPMV_API void hspmv_matrix_free(hspmv_matrix* m) { delete m; }

HSPMV_API hspmv_status hspmv_model_code_balance(double n_nzr, double kappa, int index_bytes, double* out) {
  HSPMV_NONNULL(out);
  return guarded([&] { *out = hspmv::model::code_balance(n_nzr, kappa, model_options(index_bytes)); });
}

HSPMV_API hspmv_status hspmv_model_code_balance_split(double n_nzr, double kappa, int index_bytes, double* out) {
  HSPMV_NONNULL(out);
  return guarded([&] { *out = hspmv::model::code_balance_split(n_nzr, kappa, model_options(index_bytes)); });
}

HSPMV_API hspmv_status hspmv_model_perf_bound(double bandwidth_gbps, double balance, double* out) {
  HSPMV_NONNULL(out);
  return guarded([&] { *out = hspmv::model::perf_bound(bandwidth_gbps, balance); });
}

HSPMV_API hspmv_status hspmv_model_estimate_kappa(double perf_gflops, double bandwidth_gbps, double n_nzr,
                                                  int index_bytes, double* kappa, int* negative_warning) {
  HSPMV_NONNULL(kappa);
  return guarded([&] {
    const auto k = hspmv::model::estimate_kappa(perf_gflops, bandwidth_gbps, n_nzr, model_options(index_bytes));
    *kappa = k.kappa;
    if (negative_warning) *negative_warning = k.negative_warning ? 1 : 0;
  });
}

HSPMV_API hspmv_status hspmv_model_split_penalty(double n_nzr, double kappa, int index_bytes, double* out) {
  HSPMV_NONNULL(out);
  return guarded([&] { *out = hspmv::model::split_penalty(n_nzr, kappa, model_options(index_bytes)); });
}

HSPMV_API void hspmv_triad_options_default(hspmv_triad_options* opts) {
  if (!opts) return;
  const hspmv::model::TriadOptions d;
  *opts = {d.array_length, d.repetitions, d.workers, d.cache_size_hint};
}

HSPMV_API hspmv_status hspmv_measure_triad(const hspmv_triad_options* opts, hspmv_triad_result* out) {
  HSPMV_NONNULL(opts);
  HSPMV_NONNULL(out);
  return guarded([&] {
    const auto r = hspmv::model::measure_triad_bandwidth(
        {opts->array_length, opts->repetitions, opts->workers, opts->cache_size_hint});
    *out = {r.bandwidth_gbps, r.naive_bandwidth_gbps, r.best_seconds, r.cache_tainted ? 1 : 0};
  });
}

HSPMV_API void hspmv_transport_config_default(hspmv_transport_config* cfg) {
  if (!cfg) return;
  const hspmv::transport::TransportConfig d;
  *cfg = {d.async_progress ? 1 : 0, 0.0, d.eager_threshold};
}

HSPMV_API hspmv_status hspmv_probe(const hspmv_transport_config* cfg, size_t message_bytes,
                                   const double* work_seconds, size_t n_work, hspmv_probe_direction direction,
                                   double* total_seconds) {
  HSPMV_NONNULL(cfg);
  if (n_work) {
    HSPMV_NONNULL(work_seconds);
    HSPMV_NONNULL(total_seconds);
  }
  return guarded([&] {
    hspmv::require(direction == HSPMV_PROBE_RECV || direction == HSPMV_PROBE_SEND, "unknown probe direction");
    hspmv::transport::Fabric fabric(2, to_cpp(*cfg));
    const auto samples = hspmv::transport::probe_overlap(
        fabric, message_bytes, std::span(work_seconds, n_work),
        direction == HSPMV_PROBE_SEND ? hspmv::transport::ProbeDirection::Send
                                      : hspmv::transport::ProbeDirection::Recv);
    for (std::size_t i = 0; i < samples.size(); ++i) total_seconds[i] = samples[i].total_seconds;
  });
}

HSPMV_API hspmv_status hspmv_overlap_ratio(const double* work_seconds, const double* total_seconds, size_t n,
                                           double transfer_seconds, double* out) {
  HSPMV_NONNULL(out);
  if (n) {
    HSPMV_NONNULL(work_seconds);
    HSPMV_NONNULL(total_seconds);
  }
  return guarded([&] {
    std::vector<hspmv::transport::ProbeSample> samples(n);
    for (std::size_t i = 0; i < n; ++i) samples[i] = {work_seconds[i], total_seconds[i]};
    *out = hspmv::transport::overlap_ratio(samples, transfer_seconds);
  });
}

HSPMV_API hspmv_status hspmv_partition_info(const hspmv_matrix* m, size_t ranks, hspmv_policy policy,
                                            hspmv_rank_info* out) {
  HSPMV_NONNULL(m);
  HSPMV_NONNULL(out);
  return guarded([&] {
    const auto part = hspmv::partition_rows(m->a, ranks, to_cpp(policy));
    const auto plans = hspmv::build_all_comm_plans(m->a, part);
    const auto volume = hspmv::communication_volume(plans);
    const auto ptr = m->a.row_ptr();
    for (std::size_t r = 0; r < ranks; ++r) {
      out[r] = {r,
                part.begin(r),
                part.rows(r),
                ptr[part.end(r)] - ptr[part.begin(r)],
                plans[r].halo_size(),
                volume.per_rank[r].send_bytes,
                volume.per_rank[r].recv_bytes};
    }
  });
}

HSPMV_API const char* hspmv_mode_name(hspmv_mode mode) {
  switch (mode) {
    case HSPMV_MODE_NOOVL: return "noovl";
    case HSPMV_MODE_NAIVE: return "naive";
    case HSPMV_MODE_TASK: return "task";
  }
  return nullptr;
}

HSPMV_API hspmv_status hspmv_parse_mode(const char* name, hspmv_mode* out) {
  HSPMV_NONNULL(name);
  HSPMV_NONNULL(out);
  const auto mode = hspmv::exec::parse_mode(name);
  if (!mode) return fail(HSPMV_ERR_PARSE, std::string("unknown mode '") + name + "'");
  *out = *mode == hspmv::exec::Mode::VectorNoOverlap ? HSPMV_MODE_NOOVL
         : *mode == hspmv::exec::Mode::VectorNaiveOverlap ? HSPMV_MODE_NAIVE
                                                          : HSPMV_MODE_TASK;
  return HSPMV_OK;
}

HSPMV_API const char* hspmv_phase_name(int phase) {
  if (phase < 0 || phase >= HSPMV_PHASE_COUNT) return nullptr;
  return hspmv::exec::phase_name(static_cast<hspmv::exec::Phase>(phase)).data();
}

HSPMV_API const char* hspmv_phase_label(int phase) {
  if (phase < 0 || phase >= HSPMV_PHASE_COUNT) return nullptr;
  return hspmv::exec::phase_label(static_cast<hspmv::exec::Phase>(phase)).data();
}

HSPMV_API void hspmv_run_config_default(hspmv_run_config* cfg) {
  if (!cfg) return;
  cfg->mode = HSPMV_MODE_NOOVL;
  cfg->ranks = 1;
  cfg->workers = 1;
  cfg->policy = HSPMV_BALANCE_NONZEROS;
  cfg->iterations = 10;
  hspmv_transport_config_default(&cfg->transport);
  cfg->x_seed = 0;
}

HSPMV_API hspmv_status hspmv_run_execute(const hspmv_matrix* m, const hspmv_run_config* cfg, const double* x,
                                         size_t nx, hspmv_run** out) {
  HSPMV_NONNULL(m);
  HSPMV_NONNULL(cfg);
  HSPMV_NONNULL(out);
  return guarded([&] {
    const auto& a = m->a;
    std::vector<double> rhs;
    if (x) {
      hspmv::require(nx == a.n_cols(), "x length must equal n_cols");
      rhs.assign(x, x + nx);
    } else {
      rhs = random_rhs(a.n_cols(), cfg->x_seed);
    }
    hspmv::exec::DistributedConfig dc;
    dc.mode = to_cpp(cfg->mode);
    dc.ranks = cfg->ranks;
    dc.workers = cfg->workers;
    dc.policy = to_cpp(cfg->policy);
    dc.iterations = cfg->iterations;
    dc.transport = to_cpp(cfg->transport);

    auto run = std::make_unique<hspmv_run>();
    run->result = hspmv::exec::run_distributed(a, rhs, dc);

    std::vector<double> reference(a.n_rows());
    hspmv::spmv_full(a, rhs, reference);
    auto& s = run->stats;
    s.iterations = cfg->iterations;
    s.n_records = run->result.timings.size();
    for (double t : run->result.iteration_seconds) s.total_seconds += t;
    s.median_iteration_seconds = hspmv::exec::percentile(run->result.iteration_seconds, 0.5);
    const double flops = 2.0 * static_cast<double>(a.nnz());
    s.gflops = s.total_seconds > 0 ? flops * static_cast<double>(s.iterations) / s.total_seconds * 1e-9 : 0.0;
    s.gflops_median = s.median_iteration_seconds > 0 ? flops / s.median_iteration_seconds * 1e-9 : 0.0;
    s.max_rel_error = hspmv::relative_row_error(a, rhs, reference, run->result.y);
    if (cfg->mode == HSPMV_MODE_NOOVL) {
      s.tolerance = 0.0;
      s.check_passed = run->result.y == reference ? 1 : 0;
    } else {
      s.tolerance = hspmv::split_tolerance(a);
      s.check_passed = s.max_rel_error <= s.tolerance ? 1 : 0;
    }
    *out = run.release();
  });
}

HSPMV_API hspmv_status hspmv_run_get_stats(const hspmv_run* run, hspmv_run_stats* out) {
  HSPMV_NONNULL(run);
  HSPMV_NONNULL(out);
  *out = run->stats;
  return HSPMV_OK;
}

HSPMV_API hspmv_status hspmv_run_get_records(const hspmv_run* run, hspmv_timing_record* out, size_t capacity,
                                             size_t* count) {
  HSPMV_NONNULL(run);
  HSPMV_NONNULL(count);
  const auto& t = run->result.timings;
  *count = t.size();
  if (capacity < t.size()) return fail(HSPMV_ERR_BUFFER_TOO_SMALL, "record buffer too small");
  if (!t.empty()) HSPMV_NONNULL(out);
  for (std::size_t i = 0; i < t.size(); ++i) out[i] = to_c(t[i]);
  return HSPMV_OK;
}

HSPMV_API hspmv_status hspmv_run_summarize(const hspmv_run* run, double node_count, hspmv_cost_summary* out,
                                           size_t capacity, size_t* count) {
  HSPMV_NONNULL(run);
  HSPMV_NONNULL(count);
  std::vector<hspmv::exec::CostSummary> sums;
  const auto status = guarded([&] {
    const auto per_rank = hspmv::exec::median_per_rank(run->result.timings);
    sums = hspmv::exec::summarize_costs(per_rank, node_count);
  });
  if (status != HSPMV_OK) return status;
  if (capacity && !out) return fail(HSPMV_ERR_NULL_ARGUMENT, "out must not be NULL");
  return write_summaries(sums, out, capacity, count);
}

HSPMV_API hspmv_status hspmv_run_get_y(const hspmv_run* run, double* out, size_t n) {
  HSPMV_NONNULL(run);
  const auto& y = run->result.y;
  if (n < y.size()) return fail(HSPMV_ERR_BUFFER_TOO_SMALL, "y buffer too small");
  if (!y.empty()) HSPMV_NONNULL(out);
  std::copy(y.begin(), y.end(), out);
  return HSPMV_OK;
}

HSPMV_API void hspmv_run_free(hspmv_run* run) { delete run; }

HSPMV_API hspmv_status hspmv_summarize_costs(const hspmv_timing_record* records, size_t n, double node_count,
                                             hspmv_cost_summary* out, size_t capacity, size_t* count) {
  HSPMV_NONNULL(count);
  if (n) HSPMV_NONNULL(records);
  std::vector<hspmv::exec::CostSummary> sums;
  const auto status = guarded([&] {
    std::vector<hspmv::exec::PhaseTimings> t;
    t.reserve(n);
    for (std::size_t i = 0; i < n; ++i) t.push_back(to_cpp(records[i]));
    sums = hspmv::exec::summarize_costs(t, node_count);
  });
  if (status != HSPMV_OK) return status;
  if (capacity && !out) return fail(HSPMV_ERR_NULL_ARGUMENT, "out must not be NULL");
  return write_summaries(sums, out, capacity, count);
}

HSPMV_API hspmv_status hspmv_efficiency_marker(const size_t* ranks, const double* gflops, size_t n,
                                               double* efficiency, size_t* marker, int* found) {
  HSPMV_NONNULL(marker);
  HSPMV_NONNULL(found);
  if (n == 0) return fail(HSPMV_ERR_CONTRACT, "efficiency needs at least one point");
  HSPMV_NONNULL(ranks);
  HSPMV_NONNULL(gflops);
  std::size_t base = 0;
  for (std::size_t i = 0; i < n; ++i) {
    if (ranks[i] == 0 || !(gflops[i] > 0.0)) return fail(HSPMV_ERR_CONTRACT, "ranks and performance must be positive");
    if (ranks[i] < ranks[base]) base = i;
  }
  *found = 0;
  *marker = 0;
  for (std::size_t i = 0; i < n; ++i) {
    const double eff = gflops[i] * static_cast<double>(ranks[base]) / (static_cast<double>(ranks[i]) * gflops[base]);
    if (efficiency) efficiency[i] = eff;
    if (eff < 0.5 && (!*found || ranks[i] < *marker)) {
      *marker = ranks[i];
      *found = 1;
    }
  }
  return HSPMV_OK;
}

}  // extern "C"
