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

#include <array>
#include <cstddef>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

#include "hspmv/crs_matrix.hpp"
#include "hspmv/partition.hpp"
#include "hspmv/transport.hpp"

namespace hspmv::exec {

/// Labeled phases of one distributed spMVM. Short labels: ir, ca, sp, wa,
/// lc, nl, fc, pr.
enum class Phase {
  RecvPost,
  BufferAssembly,
  SendPost,
  WaitAll,
  LocalCompute,
  NonlocalCompute,
  FullCompute,
  ParallelRegion,
};
inline constexpr std::size_t kPhaseCount = 8;

std::string_view phase_name(Phase phase);
std::string_view phase_label(Phase phase);
std::optional<Phase> parse_phase(std::string_view name);

/// Wall time per phase for one rank and iteration. Phases that the executed
/// mode does not have stay empty.
struct PhaseTimings {
  std::size_t rank = 0;
  std::size_t iteration = 0;
  std::array<std::optional<double>, kPhaseCount> seconds{};
  double iteration_seconds = 0.0;

  void set(Phase p, double s) { seconds[static_cast<std::size_t>(p)] = s; }
  std::optional<double> get(Phase p) const { return seconds[static_cast<std::size_t>(p)]; }
};

enum class Mode { VectorNoOverlap, VectorNaiveOverlap, Task };

std::string_view mode_name(Mode mode);
std::optional<Mode> parse_mode(std::string_view name);

struct RunOptions {
  std::size_t iterations = 1;
  /// Compute threads per rank. Vector modes run them as a team driven by the
  /// rank's thread; task mode adds them next to the communication agent.
  std::size_t workers = 1;
  bool record_history = false;
};

struct RankRun {
  std::vector<double> y;
  std::vector<PhaseTimings> timings;
  std::vector<std::vector<double>> y_history;  ///< per iteration, if requested
};

/// No overlap: post receives, fill send buffers, post sends, wait, then one
/// full spMVM. Needs a no-split workset.
RankRun run_vector_noovl(RankWorkset& ws, const CommPlan& plan, transport::Endpoint& ep,
                         std::span<const double> x_local, const RunOptions& opts);

/// Naive overlap: local part is computed between posting and waiting, the
/// remote part afterwards. Needs a split workset.
RankRun run_vector_naive(RankWorkset& ws, const CommPlan& plan, transport::Endpoint& ep,
                         std::span<const double> x_local, const RunOptions& opts);

/// Explicit overlap: the calling thread is the communication agent while
/// opts.workers compute workers fill send buffers (one release per
/// destination) and compute the local part; after a rank-internal join the
/// workers compute the remote part. Needs a split workset.
RankRun run_task_mode(RankWorkset& ws, const CommPlan& plan, transport::Endpoint& ep,
                      std::span<const double> x_local, const RunOptions& opts);

struct CostSummary {
  Phase phase = Phase::RecvPost;
  double p10 = 0, p25 = 0, p50 = 0, p75 = 0, p90 = 0;
};

/// Linear interpolation between closest ranks: position q * (n - 1).
double percentile(std::span<const double> values, double q);

/// Per-phase percentiles of cost = seconds * node_count over the given
/// records (normally one per rank). Phases absent from every record are
/// omitted. Throws ContractViolation on empty input.
std::vector<CostSummary> summarize_costs(std::span<const PhaseTimings> timings, double node_count);

/// Collapses iterations into one record per rank holding per-phase medians.
std::vector<PhaseTimings> median_per_rank(std::span<const PhaseTimings> timings);

struct DistributedConfig {
  Mode mode = Mode::VectorNoOverlap;
  std::size_t ranks = 1;
  std::size_t workers = 1;
  BalancePolicy policy = BalancePolicy::BalanceNonzeros;
  std::size_t iterations = 1;
  transport::TransportConfig transport{};
  bool record_history = false;
};

struct DistributedResult {
  std::vector<double> y;
  std::vector<PhaseTimings> timings;        ///< all ranks, all iterations
  std::vector<double> iteration_seconds;    ///< per iteration, slowest rank
  std::vector<std::vector<double>> y_history;
  Partition partition;
};

/// Partitions, plans and runs one mode with one thread per rank on a fresh
/// in-process fabric; y is gathered into global order.
DistributedResult run_distributed(const CrsMatrix& a, std::span<const double> x, const DistributedConfig& cfg);

}  // namespace hspmv::exec
