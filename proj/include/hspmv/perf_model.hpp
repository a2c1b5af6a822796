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

#pragma once

#include <cstddef>

namespace hspmv::model {

// Units: GB/s = 1e9 bytes/s, GFlop/s = 1e9 flop/s (decimal, STREAM style).

/// Options for the traffic model. index_bytes is the size of one column
/// index; 4 gives the standard 32-bit index constants.
struct ModelOptions {
  int index_bytes = 4;
};

/// Bytes of memory traffic per flop for the CRS kernel:
///   (8 + index_bytes + 24/n_nzr + kappa) / 2
/// which is 6 + 12/n_nzr + kappa/2 for 4-byte indices. Throws
/// ContractViolation for n_nzr <= 0 or kappa < 0.
double code_balance(double n_nzr, double kappa, const ModelOptions& opts = {});

/// Same, for the split kernel that writes the result twice (+16/n_nzr bytes
/// per inner iteration): 6 + 20/n_nzr + kappa/2 for 4-byte indices.
double code_balance_split(double n_nzr, double kappa, const ModelOptions& opts = {});

/// Upper performance bound in GFlop/s from bandwidth (GB/s) and balance.
double perf_bound(double bandwidth_gbps, double balance);

struct KappaEstimate {
  double kappa = 0.0;
  /// Set when kappa < 0: measurements are inconsistent with the model.
  bool negative_warning = false;
};

/// Inverts code_balance at the measured performance. Negative results are
/// returned as-is with the warning flag raised.
KappaEstimate estimate_kappa(double perf_gflops, double bandwidth_gbps, double n_nzr, const ModelOptions& opts = {});

/// Predicted relative slowdown of the split kernel: split/plain balance - 1.
double split_penalty(double n_nzr, double kappa, const ModelOptions& opts = {});

struct TriadOptions {
  std::size_t array_length = 20'000'000;
  int repetitions = 10;
  int workers = 1;
  /// Results are flagged cache-tainted when the arrays touched per worker
  /// amount to less than 4x this many bytes.
  std::size_t cache_size_hint = 32u << 20;
};

struct TriadResult {
  double bandwidth_gbps = 0.0;        ///< 4 arrays per iteration (write-allocate counted)
  double naive_bandwidth_gbps = 0.0;  ///< 3 arrays per iteration
  double best_seconds = 0.0;
  bool cache_tainted = false;
};

/// a[i] = b[i] + s*c[i] on per-worker disjoint arrays, best of repetitions.
/// Throws ResourceError if the arrays cannot be allocated.
TriadResult measure_triad_bandwidth(const TriadOptions& opts);

/// Accounting helpers, shared with tests.
double triad_bytes_naive(std::size_t array_length, int workers);
double triad_bytes_corrected(std::size_t array_length, int workers);
bool triad_cache_tainted(std::size_t array_length, std::size_t cache_size_hint);

}  // namespace hspmv::model
