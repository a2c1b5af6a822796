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

#include "hspmv/perf_model.hpp"

#include <algorithm>
#include <barrier>
#include <chrono>
#include <limits>
#include <memory>
#include <new>
#include <thread>
#include <vector>

#include "hspmv/error.hpp"

namespace hspmv::model {

namespace {

void check_inputs(double n_nzr, double kappa, const ModelOptions& opts) {
  require(n_nzr > 0.0, "n_nzr must be positive");
  require(kappa >= 0.0, "kappa must be non-negative");
  require(opts.index_bytes > 0, "index_bytes must be positive");
}

// Per inner iteration: value (8) + index + result update (16/n_nzr) + one
// load of the RHS (8/n_nzr) + kappa, divided by 2 flops.
double base_bytes(double n_nzr, const ModelOptions& opts) {
  return 8.0 + opts.index_bytes + 16.0 / n_nzr + 8.0 / n_nzr;
}

}  // namespace

double code_balance(double n_nzr, double kappa, const ModelOptions& opts) {
  check_inputs(n_nzr, kappa, opts);
  return (base_bytes(n_nzr, opts) + kappa) / 2.0;
}

double code_balance_split(double n_nzr, double kappa, const ModelOptions& opts) {
  check_inputs(n_nzr, kappa, opts);
  return (base_bytes(n_nzr, opts) + 16.0 / n_nzr + kappa) / 2.0;
}

double perf_bound(double bandwidth_gbps, double balance) {
  require(bandwidth_gbps > 0.0, "bandwidth must be positive");
  require(balance > 0.0, "code balance must be positive");
  return bandwidth_gbps / balance;
}

KappaEstimate estimate_kappa(double perf_gflops, double bandwidth_gbps, double n_nzr, const ModelOptions& opts) {
  require(perf_gflops > 0.0, "performance must be positive");
  require(bandwidth_gbps > 0.0, "bandwidth must be positive");
  check_inputs(n_nzr, 0.0, opts);
  KappaEstimate est;
  est.kappa = 2.0 * (bandwidth_gbps / perf_gflops) - base_bytes(n_nzr, opts);
  est.negative_warning = est.kappa < 0.0;
  return est;
}

double split_penalty(double n_nzr, double kappa, const ModelOptions& opts) {
  return code_balance_split(n_nzr, kappa, opts) / code_balance(n_nzr, kappa, opts) - 1.0;
}

double triad_bytes_naive(std::size_t array_length, int workers) {
  return 3.0 * sizeof(double) * static_cast<double>(array_length) * workers;
}

double triad_bytes_corrected(std::size_t array_length, int workers) {
  return triad_bytes_naive(array_length, workers) * 4.0 / 3.0;
}

bool triad_cache_tainted(std::size_t array_length, std::size_t cache_size_hint) {
  const double footprint = 3.0 * sizeof(double) * static_cast<double>(array_length);
  return footprint < 4.0 * static_cast<double>(cache_size_hint);
}

TriadResult measure_triad_bandwidth(const TriadOptions& opts) {
  require(opts.array_length > 0, "array length must be positive");
  require(opts.repetitions > 0, "repetitions must be positive");
  require(opts.workers > 0, "workers must be positive");

  using clock = std::chrono::steady_clock;
  const std::size_t n = opts.array_length;
  const int workers = opts.workers;
  std::vector<double> worker_seconds(workers, 0.0);
  std::barrier sync(workers);
  double best = std::numeric_limits<double>::infinity();
  std::vector<std::vector<double>> per_worker(workers);

  auto body = [&](int w) {
    std::unique_ptr<double[]> a, b, c;
    try {
      a.reset(new double[n]);
      b.reset(new double[n]);
      c.reset(new double[n]);
    } catch (const std::bad_alloc&) {
      throw ResourceError("cannot allocate triad arrays of " + std::to_string(n) + " doubles");
    }
    // first touch by the owning worker
    for (std::size_t i = 0; i < n; ++i) {
      a[i] = 0.0;
      b[i] = 1.0;
      c[i] = 2.0;
    }
    const double s = 3.0;
    for (int rep = 0; rep < opts.repetitions; ++rep) {
      sync.arrive_and_wait();
      const auto t0 = clock::now();
      double* __restrict pa = a.get();
      const double* __restrict pb = b.get();
      const double* __restrict pc = c.get();
      for (std::size_t i = 0; i < n; ++i) pa[i] = pb[i] + s * pc[i];
      const auto t1 = clock::now();
      per_worker[w].push_back(std::chrono::duration<double>(t1 - t0).count());
      sync.arrive_and_wait();
    }
    // keep the stores observable
    volatile double sink = a[n / 2];
    (void)sink;
  };

  if (workers == 1) {
    body(0);
  } else {
    std::vector<std::exception_ptr> errors(workers);
    std::vector<std::jthread> threads;
    for (int w = 0; w < workers; ++w) {
      threads.emplace_back([&, w] {
        try {
          body(w);
        } catch (...) {
          errors[w] = std::current_exception();
          sync.arrive_and_drop();
        }
      });
    }
    threads.clear();
    for (auto& e : errors) {
      if (e) std::rethrow_exception(e);
    }
  }

  for (int rep = 0; rep < opts.repetitions; ++rep) {
    double slowest = 0.0;
    for (int w = 0; w < workers; ++w) slowest = std::max(slowest, per_worker[w][rep]);
    best = std::min(best, slowest);
  }

  TriadResult result;
  result.best_seconds = best;
  result.naive_bandwidth_gbps = triad_bytes_naive(n, workers) / best * 1e-9;
  result.bandwidth_gbps = triad_bytes_corrected(n, workers) / best * 1e-9;
  result.cache_tainted = triad_cache_tainted(n, opts.cache_size_hint);
  return result;
}

}  // namespace hspmv::model
