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

#include "hspmv/exec_modes.hpp"

#include <algorithm>
#include <atomic>
#include <barrier>
#include <chrono>
#include <memory>
#include <thread>

#include "hspmv/worker_team.hpp"

namespace hspmv::exec {

namespace {

using clock = std::chrono::steady_clock;

double since(clock::time_point t0) { return std::chrono::duration<double>(clock::now() - t0).count(); }

constexpr int kHaloTag = 4242;

constexpr std::array<std::string_view, kPhaseCount> kPhaseNames = {
    "recv_post", "buffer_assembly", "send_post", "wait_all",
    "local_compute", "nonlocal_compute", "full_compute", "parallel_region"};
constexpr std::array<std::string_view, kPhaseCount> kPhaseLabels = {"ir", "ca", "sp", "wa", "lc", "nl", "fc", "pr"};

void load_rhs(RankWorkset& ws, std::span<const double> x_local) {
  require(x_local.size() == ws.n_local, "x slice length must equal the rank's row count");
  std::copy(x_local.begin(), x_local.end(), ws.rhs.begin());
}

void post_receives(RankWorkset& ws, const CommPlan& plan, transport::Endpoint& ep,
                   std::vector<transport::RequestHandle>& handles) {
  auto halo = ws.halo();
  for (const auto& [q, cols] : plan.recv_from) {
    handles.push_back(
        ep.post_recv(static_cast<int>(q), kHaloTag, halo.subspan(plan.recv_offset.at(q), cols.size())));
  }
}

void assemble(RankWorkset& ws, std::size_t dest, const std::vector<index_t>& rows) {
  auto& buf = ws.send_buffers.at(dest);
  const double* x = ws.rhs.data();
  for (std::size_t k = 0; k < rows.size(); ++k) buf[k] = x[rows[k] - ws.row_begin];
}

void post_sends(RankWorkset& ws, const CommPlan& plan, transport::Endpoint& ep,
                std::vector<transport::RequestHandle>& handles) {
  for (const auto& [q, rows] : plan.send_to) {
    handles.push_back(ep.post_send(static_cast<int>(q), kHaloTag, std::span<const double>(ws.send_buffers.at(q))));
  }
}

// Single-threaded or team-driven kernel over a chunk plan.
void compute(const CrsMatrix& a, std::span<const double> x, std::span<double> y, const ChunkPlan& chunks,
             bool accumulate, WorkerTeam* team) {
  if (team) spmv_threaded(a, x, y, chunks, accumulate, team);
  else spmv_full(a, x, y, accumulate);
}

void finish_iteration(RankRun& run, PhaseTimings& t, clock::time_point t0, const RankWorkset& ws,
                      const RunOptions& opts) {
  t.iteration_seconds = since(t0);
  run.timings.push_back(t);
  if (opts.record_history) run.y_history.push_back(ws.y);
}

}  // namespace

std::string_view phase_name(Phase phase) { return kPhaseNames[static_cast<std::size_t>(phase)]; }
std::string_view phase_label(Phase phase) { return kPhaseLabels[static_cast<std::size_t>(phase)]; }

std::optional<Phase> parse_phase(std::string_view name) {
  for (std::size_t i = 0; i < kPhaseCount; ++i) {
    if (kPhaseNames[i] == name || kPhaseLabels[i] == name) return static_cast<Phase>(i);
  }
  return std::nullopt;
}

std::string_view mode_name(Mode mode) {
  switch (mode) {
    case Mode::VectorNoOverlap: return "noovl";
    case Mode::VectorNaiveOverlap: return "naive";
    case Mode::Task: return "task";
  }
  return "?";
}

std::optional<Mode> parse_mode(std::string_view name) {
  if (name == "noovl") return Mode::VectorNoOverlap;
  if (name == "naive") return Mode::VectorNaiveOverlap;
  if (name == "task") return Mode::Task;
  return std::nullopt;
}

RankRun run_vector_noovl(RankWorkset& ws, const CommPlan& plan, transport::Endpoint& ep,
                         std::span<const double> x_local, const RunOptions& opts) {
  require(!ws.split, "vector mode without overlap needs a no-split workset");
  require(opts.workers >= 1, "need at least one worker");
  load_rhs(ws, x_local);
  std::unique_ptr<WorkerTeam> team;
  ChunkPlan chunks;
  if (opts.workers > 1) {
    team = std::make_unique<WorkerTeam>(opts.workers);
    chunks = chunk_for_workers(ws.full, opts.workers);
  }
  RankRun run;
  std::vector<transport::RequestHandle> handles;
  for (std::size_t it = 0; it < opts.iterations; ++it) {
    ep.barrier();
    PhaseTimings t;
    t.rank = ws.rank;
    t.iteration = it;
    handles.clear();
    const auto t0 = clock::now();
    auto mark = t0;

    post_receives(ws, plan, ep, handles);
    t.set(Phase::RecvPost, since(mark));
    mark = clock::now();
    for (const auto& [q, rows] : plan.send_to) assemble(ws, q, rows);
    t.set(Phase::BufferAssembly, since(mark));
    mark = clock::now();
    post_sends(ws, plan, ep, handles);
    t.set(Phase::SendPost, since(mark));
    mark = clock::now();
    ep.wait_all(handles);
    t.set(Phase::WaitAll, since(mark));
    mark = clock::now();
    compute(ws.full, ws.rhs, ws.y, chunks, false, team.get());
    t.set(Phase::FullCompute, since(mark));
    finish_iteration(run, t, t0, ws, opts);
  }
  run.y = ws.y;
  return run;
}

RankRun run_vector_naive(RankWorkset& ws, const CommPlan& plan, transport::Endpoint& ep,
                         std::span<const double> x_local, const RunOptions& opts) {
  require(ws.split, "vector mode with naive overlap needs a split workset");
  require(opts.workers >= 1, "need at least one worker");
  load_rhs(ws, x_local);
  std::unique_ptr<WorkerTeam> team;
  ChunkPlan local_chunks, remote_chunks;
  if (opts.workers > 1) {
    team = std::make_unique<WorkerTeam>(opts.workers);
    local_chunks = chunk_for_workers(ws.local, opts.workers);
    remote_chunks = chunk_for_workers(ws.remote, opts.workers);
  }
  RankRun run;
  std::vector<transport::RequestHandle> handles;
  for (std::size_t it = 0; it < opts.iterations; ++it) {
    ep.barrier();
    PhaseTimings t;
    t.rank = ws.rank;
    t.iteration = it;
    handles.clear();
    const auto t0 = clock::now();
    auto mark = t0;

    post_receives(ws, plan, ep, handles);
    t.set(Phase::RecvPost, since(mark));
    mark = clock::now();
    for (const auto& [q, rows] : plan.send_to) assemble(ws, q, rows);
    t.set(Phase::BufferAssembly, since(mark));
    mark = clock::now();
    post_sends(ws, plan, ep, handles);
    t.set(Phase::SendPost, since(mark));
    mark = clock::now();
    compute(ws.local, ws.x_local(), ws.y, local_chunks, false, team.get());
    t.set(Phase::LocalCompute, since(mark));
    mark = clock::now();
    ep.wait_all(handles);
    t.set(Phase::WaitAll, since(mark));
    mark = clock::now();
    compute(ws.remote, ws.halo(), ws.y, remote_chunks, true, team.get());
    t.set(Phase::NonlocalCompute, since(mark));
    finish_iteration(run, t, t0, ws, opts);
  }
  run.y = ws.y;
  return run;
}

RankRun run_task_mode(RankWorkset& ws, const CommPlan& plan, transport::Endpoint& ep,
                      std::span<const double> x_local, const RunOptions& opts) {
  require(ws.split, "task mode needs a split workset");
  require(opts.workers >= 1, "task mode needs at least one compute worker");
  load_rhs(ws, x_local);
  const std::size_t n = opts.workers;
  WorkerTeam team(n);
  const ChunkPlan local_chunks = chunk_for_workers(ws.local, n);
  const ChunkPlan remote_chunks = chunk_for_workers(ws.remote, n);

  struct Destination {
    std::size_t rank;
    const std::vector<index_t>* rows;
  };
  std::vector<Destination> dests;
  for (const auto& [q, rows] : plan.send_to) dests.push_back({q, &rows});
  const auto released = std::make_unique<std::atomic<bool>[]>(std::max<std::size_t>(dests.size(), 1));
  std::barrier join(static_cast<std::ptrdiff_t>(n + 1));
  std::vector<double> ca(n), lc(n), nl(n);

  auto worker = [&](std::size_t w) {
    auto mark = clock::now();
    for (std::size_t d = w; d < dests.size(); d += n) {
      assemble(ws, dests[d].rank, *dests[d].rows);
      released[d].store(true, std::memory_order_release);
      released[d].notify_one();
    }
    // Let the agent post the sends before the local part starts; without
    // this a worker sharing a core with it delays the sends by a time slice.
    if (w < dests.size()) std::this_thread::yield();
    ca[w] = since(mark);
    mark = clock::now();
    spmv_rows(ws.local, ws.x_local(), ws.y, local_chunks.boundaries[w], local_chunks.boundaries[w + 1], false);
    lc[w] = since(mark);
    join.arrive_and_wait();
    mark = clock::now();
    spmv_rows(ws.remote, ws.halo(), ws.y, remote_chunks.boundaries[w], remote_chunks.boundaries[w + 1], true);
    nl[w] = since(mark);
  };

  RankRun run;
  std::vector<transport::RequestHandle> handles;
  for (std::size_t it = 0; it < opts.iterations; ++it) {
    ep.barrier();
    PhaseTimings t;
    t.rank = ws.rank;
    t.iteration = it;
    handles.clear();
    for (std::size_t d = 0; d < dests.size(); ++d) released[d].store(false, std::memory_order_relaxed);
    const auto t0 = clock::now();
    team.launch(worker);

    auto mark = clock::now();
    post_receives(ws, plan, ep, handles);
    t.set(Phase::RecvPost, since(mark));
    mark = clock::now();
    for (std::size_t d = 0; d < dests.size(); ++d) {
      released[d].wait(false, std::memory_order_acquire);
      handles.push_back(ep.post_send(static_cast<int>(dests[d].rank), kHaloTag,
                                     std::span<const double>(ws.send_buffers.at(dests[d].rank))));
    }
    t.set(Phase::SendPost, since(mark));
    mark = clock::now();
    ep.wait_all(handles);
    t.set(Phase::WaitAll, since(mark));
    join.arrive_and_wait();
    team.join();
    t.set(Phase::ParallelRegion, since(t0));
    t.set(Phase::BufferAssembly, *std::max_element(ca.begin(), ca.end()));
    t.set(Phase::LocalCompute, *std::max_element(lc.begin(), lc.end()));
    t.set(Phase::NonlocalCompute, *std::max_element(nl.begin(), nl.end()));
    finish_iteration(run, t, t0, ws, opts);
  }
  run.y = ws.y;
  return run;
}

double percentile(std::span<const double> values, double q) {
  require(!values.empty(), "percentile of an empty set");
  require(q >= 0.0 && q <= 1.0, "percentile fraction must lie in [0, 1]");
  std::vector<double> v(values.begin(), values.end());
  std::sort(v.begin(), v.end());
  const double pos = q * static_cast<double>(v.size() - 1);
  const auto lo = static_cast<std::size_t>(pos);
  const std::size_t hi = std::min(lo + 1, v.size() - 1);
  const double frac = pos - static_cast<double>(lo);
  return v[lo] + frac * (v[hi] - v[lo]);
}

std::vector<CostSummary> summarize_costs(std::span<const PhaseTimings> timings, double node_count) {
  require(!timings.empty(), "cost summary needs at least one timing record");
  require(node_count > 0.0, "node count must be positive");
  std::vector<CostSummary> out;
  for (std::size_t p = 0; p < kPhaseCount; ++p) {
    std::vector<double> costs;
    for (const auto& t : timings) {
      if (t.seconds[p]) costs.push_back(*t.seconds[p] * node_count);
    }
    if (costs.empty()) continue;
    CostSummary s;
    s.phase = static_cast<Phase>(p);
    s.p10 = percentile(costs, 0.10);
    s.p25 = percentile(costs, 0.25);
    s.p50 = percentile(costs, 0.50);
    s.p75 = percentile(costs, 0.75);
    s.p90 = percentile(costs, 0.90);
    out.push_back(s);
  }
  return out;
}

std::vector<PhaseTimings> median_per_rank(std::span<const PhaseTimings> timings) {
  std::size_t n_ranks = 0;
  for (const auto& t : timings) n_ranks = std::max(n_ranks, t.rank + 1);
  std::vector<PhaseTimings> out(n_ranks);
  for (std::size_t r = 0; r < n_ranks; ++r) {
    out[r].rank = r;
    std::vector<double> total;
    for (std::size_t p = 0; p <= kPhaseCount; ++p) {
      std::vector<double> v;
      for (const auto& t : timings) {
        if (t.rank != r) continue;
        if (p == kPhaseCount) v.push_back(t.iteration_seconds);
        else if (t.seconds[p]) v.push_back(*t.seconds[p]);
      }
      if (v.empty()) continue;
      if (p == kPhaseCount) out[r].iteration_seconds = percentile(v, 0.5);
      else out[r].seconds[p] = percentile(v, 0.5);
    }
  }
  return out;
}

DistributedResult run_distributed(const CrsMatrix& a, std::span<const double> x, const DistributedConfig& cfg) {
  require(x.size() == a.n_cols(), "x length must equal n_cols");
  require(cfg.iterations >= 1, "need at least one iteration");
  require(cfg.workers >= 1, "need at least one worker per rank");
  DistributedResult result;
  result.partition = partition_rows(a, cfg.ranks, cfg.policy);
  const auto& part = result.partition;
  const auto plans = build_all_comm_plans(a, part);
  const bool split = cfg.mode != Mode::VectorNoOverlap;
  std::vector<RankWorkset> worksets;
  worksets.reserve(cfg.ranks);
  for (std::size_t r = 0; r < cfg.ranks; ++r) worksets.push_back(build_workset(a, part, plans[r], r, split));

  transport::Fabric fabric(static_cast<int>(cfg.ranks), cfg.transport);
  std::vector<RankRun> runs(cfg.ranks);
  std::vector<std::exception_ptr> errors(cfg.ranks);
  const RunOptions opts{cfg.iterations, cfg.workers, cfg.record_history};
  {
    std::vector<std::jthread> threads;
    for (std::size_t r = 0; r < cfg.ranks; ++r) {
      threads.emplace_back([&, r] {
        try {
          auto& ep = fabric.endpoint(static_cast<int>(r));
          auto x_local = x.subspan(part.begin(r), part.rows(r));
          switch (cfg.mode) {
            case Mode::VectorNoOverlap: runs[r] = run_vector_noovl(worksets[r], plans[r], ep, x_local, opts); break;
            case Mode::VectorNaiveOverlap: runs[r] = run_vector_naive(worksets[r], plans[r], ep, x_local, opts); break;
            case Mode::Task: runs[r] = run_task_mode(worksets[r], plans[r], ep, x_local, opts); break;
          }
        } catch (...) {
          errors[r] = std::current_exception();
        }
      });
    }
  }
  for (auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }

  result.y.assign(a.n_rows(), 0.0);
  result.iteration_seconds.assign(cfg.iterations, 0.0);
  if (cfg.record_history) result.y_history.assign(cfg.iterations, std::vector<double>(a.n_rows(), 0.0));
  for (std::size_t r = 0; r < cfg.ranks; ++r) {
    std::copy(runs[r].y.begin(), runs[r].y.end(), result.y.begin() + part.begin(r));
    for (const auto& t : runs[r].timings) {
      result.timings.push_back(t);
      result.iteration_seconds[t.iteration] = std::max(result.iteration_seconds[t.iteration], t.iteration_seconds);
    }
    for (std::size_t it = 0; it < runs[r].y_history.size(); ++it) {
      std::copy(runs[r].y_history[it].begin(), runs[r].y_history[it].end(),
                result.y_history[it].begin() + part.begin(r));
    }
  }
  return result;
}

}  // namespace hspmv::exec
