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

#ifndef HSPMV_HSPMV_H
#define HSPMV_HSPMV_H

#include <stddef.h>
#include <stdint.h>

#if defined(HSPMV_BUILDING_LIBRARY)
#define HSPMV_API __attribute__((visibility("default")))
#else
#define HSPMV_API
#endif

#ifdef __cplusplus
extern "C" {
#endif

/* Every fallible call returns a status; on failure a message describing the
   cause is kept per thread and can be read with hspmv_last_error(). Output
   parameters are left untouched on failure. */
typedef enum hspmv_status {
  HSPMV_OK = 0,
  HSPMV_ERR_CONTRACT = 1,          /* precondition violated */
  HSPMV_ERR_PARSE = 2,             /* malformed input text */
  HSPMV_ERR_UNSUPPORTED_SHAPE = 3, /* e.g. non-square matrix for a halo plan */
  HSPMV_ERR_RESOURCE = 4,          /* allocation failure */
  HSPMV_ERR_INTERNAL = 5,
  HSPMV_ERR_IO = 6,
  HSPMV_ERR_NULL_ARGUMENT = 7,
  HSPMV_ERR_BUFFER_TOO_SMALL = 8,
  HSPMV_ERR_UNKNOWN = 99
} hspmv_status;

HSPMV_API const char* hspmv_status_string(hspmv_status status);
/* Message of the last failed call on this thread; "" if none. */
HSPMV_API const char* hspmv_last_error(void);
HSPMV_API const char* hspmv_version(void);

/* ---- matrices ---------------------------------------------------------- */

typedef struct hspmv_matrix hspmv_matrix;

typedef struct hspmv_matrix_info {
  size_t n_rows;
  size_t n_cols;
  size_t nnz;
  size_t max_row_nnz;
  double avg_nnz_per_row;
} hspmv_matrix_info;

HSPMV_API hspmv_status hspmv_matrix_read_mm(const char* path, hspmv_matrix** out);
/* spec: "banded:n=..,nnzr=..,band=..[,seed=..]" or
   "block:n=..,nnzr=..,blocks=..,coupling=..[,seed=..]". */
HSPMV_API hspmv_status hspmv_matrix_generate(const char* spec, uint64_t default_seed, hspmv_matrix** out);
/* Generator spec if the text starts with "banded:" or "block:", otherwise a
   Matrix Market path. */
HSPMV_API hspmv_status hspmv_matrix_load(const char* path_or_spec, uint64_t default_seed, hspmv_matrix** out);
/* Copies the arrays. row_ptr has n_rows + 1 entries. */
HSPMV_API hspmv_status hspmv_matrix_from_crs(size_t n_rows, size_t n_cols, const size_t* row_ptr,
                                             const uint32_t* col_idx, const double* values, hspmv_matrix** out);
HSPMV_API hspmv_status hspmv_matrix_write_mm(const hspmv_matrix* m, const char* path);
HSPMV_API hspmv_status hspmv_matrix_get_info(const hspmv_matrix* m, hspmv_matrix_info* out);
/* y (+)= A x, serial kernel. */
HSPMV_API hspmv_status hspmv_matrix_spmv(const hspmv_matrix* m, const double* x, size_t nx, double* y, size_t ny,
                                         int accumulate);
HSPMV_API void hspmv_matrix_free(hspmv_matrix* m);

/* ---- performance model ------------------------------------------------- */
/* Units: GB/s = 1e9 bytes/s, GFlop/s = 1e9 flop/s. index_bytes = 4 gives the
   standard constants. */

HSPMV_API hspmv_status hspmv_model_code_balance(double n_nzr, double kappa, int index_bytes, double* out);
HSPMV_API hspmv_status hspmv_model_code_balance_split(double n_nzr, double kappa, int index_bytes, double* out);
HSPMV_API hspmv_status hspmv_model_perf_bound(double bandwidth_gbps, double balance, double* out);
HSPMV_API hspmv_status hspmv_model_estimate_kappa(double perf_gflops, double bandwidth_gbps, double n_nzr,
                                                  int index_bytes, double* kappa, int* negative_warning);
HSPMV_API hspmv_status hspmv_model_split_penalty(double n_nzr, double kappa, int index_bytes, double* out);

typedef struct hspmv_triad_options {
  size_t array_length;
  int repetitions;
  int workers;
  size_t cache_size_hint;
} hspmv_triad_options;

typedef struct hspmv_triad_result {
  double bandwidth_gbps;
  double naive_bandwidth_gbps;
  double best_seconds;
  int cache_tainted;
} hspmv_triad_result;

HSPMV_API void hspmv_triad_options_default(hspmv_triad_options* opts);
HSPMV_API hspmv_status hspmv_measure_triad(const hspmv_triad_options* opts, hspmv_triad_result* out);

/* ---- transport and probe ----------------------------------------------- */

typedef struct hspmv_transport_config {
  int async_progress;
  double synthetic_bandwidth_gbps; /* <= 0: transfers are not delayed */
  size_t eager_threshold;
} hspmv_transport_config;

HSPMV_API void hspmv_transport_config_default(hspmv_transport_config* cfg);

typedef enum hspmv_probe_direction { HSPMV_PROBE_RECV = 0, HSPMV_PROBE_SEND = 1 } hspmv_probe_direction;

/* Two-rank overlap probe; total_seconds receives one entry per work time. */
HSPMV_API hspmv_status hspmv_probe(const hspmv_transport_config* cfg, size_t message_bytes,
                                   const double* work_seconds, size_t n_work, hspmv_probe_direction direction,
                                   double* total_seconds);
HSPMV_API hspmv_status hspmv_overlap_ratio(const double* work_seconds, const double* total_seconds, size_t n,
                                           double transfer_seconds, double* out);

/* ---- partitioning ------------------------------------------------------ */

typedef enum hspmv_policy { HSPMV_BALANCE_NONZEROS = 0, HSPMV_BALANCE_ROWS = 1 } hspmv_policy;

typedef struct hspmv_rank_info {
  size_t rank;
  size_t row_begin;
  size_t rows;
  size_t nnz;
  size_t halo_size;
  size_t send_bytes;
  size_t recv_bytes;
} hspmv_rank_info;

/* out must hold `ranks` entries. */
HSPMV_API hspmv_status hspmv_partition_info(const hspmv_matrix* m, size_t ranks, hspmv_policy policy,
                                            hspmv_rank_info* out);

/* ---- distributed runs -------------------------------------------------- */

typedef enum hspmv_mode { HSPMV_MODE_NOOVL = 0, HSPMV_MODE_NAIVE = 1, HSPMV_MODE_TASK = 2 } hspmv_mode;

#define HSPMV_PHASE_COUNT 8

HSPMV_API const char* hspmv_mode_name(hspmv_mode mode);
HSPMV_API hspmv_status hspmv_parse_mode(const char* name, hspmv_mode* out);
/* Phase index in [0, HSPMV_PHASE_COUNT); NULL when out of range. */
HSPMV_API const char* hspmv_phase_name(int phase);
HSPMV_API const char* hspmv_phase_label(int phase);

typedef struct hspmv_run_config {
  hspmv_mode mode;
  size_t ranks;
  size_t workers;
  hspmv_policy policy;
  size_t iterations;
  hspmv_transport_config transport;
  uint64_t x_seed; /* RHS entries drawn uniformly from [-1, 1) */
} hspmv_run_config;

HSPMV_API void hspmv_run_config_default(hspmv_run_config* cfg);

typedef struct hspmv_run hspmv_run;

typedef struct hspmv_run_stats {
  size_t iterations;
  size_t n_records;
  double total_seconds;            /* sum over iterations of the slowest rank */
  double median_iteration_seconds;
  double gflops;                   /* 2 nnz iterations / total_seconds */
  double gflops_median;            /* 2 nnz / median_iteration_seconds */
  double max_rel_error;            /* against the serial product */
  double tolerance;
  int check_passed;                /* bitwise for noovl, tolerance otherwise */
} hspmv_run_stats;

typedef struct hspmv_timing_record {
  size_t rank;
  size_t iteration;
  double seconds[HSPMV_PHASE_COUNT]; /* NaN for phases the mode lacks */
  double iteration_seconds;
} hspmv_timing_record;

typedef struct hspmv_cost_summary {
  int phase;
  double p10, p25, p50, p75, p90;
} hspmv_cost_summary;

/* x may be NULL, in which case it is generated from cfg->x_seed. */
HSPMV_API hspmv_status hspmv_run_execute(const hspmv_matrix* m, const hspmv_run_config* cfg, const double* x,
                                         size_t nx, hspmv_run** out);
HSPMV_API hspmv_status hspmv_run_get_stats(const hspmv_run* run, hspmv_run_stats* out);
/* *count receives the number of available entries; at most capacity are
   written. HSPMV_ERR_BUFFER_TOO_SMALL when capacity < *count. */
HSPMV_API hspmv_status hspmv_run_get_records(const hspmv_run* run, hspmv_timing_record* out, size_t capacity,
                                             size_t* count);
/* Cost percentiles over the per-rank median phase times, scaled by
   node_count. */
HSPMV_API hspmv_status hspmv_run_summarize(const hspmv_run* run, double node_count, hspmv_cost_summary* out,
                                           size_t capacity, size_t* count);
HSPMV_API hspmv_status hspmv_run_get_y(const hspmv_run* run, double* out, size_t n);
HSPMV_API void hspmv_run_free(hspmv_run* run);

/* Cost percentiles of arbitrary per-rank timing records. */
HSPMV_API hspmv_status hspmv_summarize_costs(const hspmv_timing_record* records, size_t n, double node_count,
                                             hspmv_cost_summary* out, size_t capacity, size_t* count);

/* Parallel efficiency perf(P) * P0 / (P * perf(P0)) against the entry with
   the smallest P. *marker is the smallest P whose efficiency drops below
   0.5; *found is 0 when there is none. efficiency may be NULL. */
HSPMV_API hspmv_status hspmv_efficiency_marker(const size_t* ranks, const double* gflops, size_t n,
                                               double* efficiency, size_t* marker, int* found);

#ifdef __cplusplus
}
#endif

#endif /* HSPMV_HSPMV_H */
