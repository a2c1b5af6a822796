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

#include "hspmv/partition.hpp"

#include <algorithm>
#include <limits>
#include <string>

#include "hspmv/transport.hpp"

namespace hspmv {

std::size_t Partition::owner(std::size_t global_index) const {
  if (row_start.empty() || global_index >= row_start.back()) {
    throw InternalError("index " + std::to_string(global_index) + " is owned by no rank");
  }
  auto it = std::upper_bound(row_start.begin(), row_start.end(), global_index);
  return static_cast<std::size_t>(it - row_start.begin()) - 1;
}

Partition partition_rows(const CrsMatrix& a, std::size_t n_ranks, BalancePolicy policy) {
  require(n_ranks >= 1 && n_ranks <= a.n_rows(), "rank count must lie in [1, n_rows]");
  Partition part;
  part.n_ranks = n_ranks;
  part.policy = policy;
  if (policy == BalancePolicy::BalanceRows) {
    part.row_start.resize(n_ranks + 1);
    for (std::size_t r = 0; r <= n_ranks; ++r) part.row_start[r] = r * a.n_rows() / n_ranks;
  } else {
    part.row_start = balanced_cuts(a.row_ptr(), n_ranks);
  }
  return part;
}

std::optional<std::size_t> CommPlan::halo_slot(index_t global_column) const {
  auto it = std::lower_bound(halo_columns.begin(), halo_columns.end(), global_column);
  if (it == halo_columns.end() || *it != global_column) return std::nullopt;
  return static_cast<std::size_t>(it - halo_columns.begin());
}

namespace {

void require_square(const CrsMatrix& a) {
  if (a.n_rows() != a.n_cols()) {
    throw UnsupportedShape("halo exchange needs a square matrix, got " + std::to_string(a.n_rows()) + "x" +
                           std::to_string(a.n_cols()));
  }
}

std::vector<index_t> remote_columns(std::span<const index_t> cols, std::size_t begin, std::size_t end) {
  std::vector<index_t> out;
  for (index_t c : cols) {
    if (c < begin || c >= end) out.push_back(c);
  }
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

std::span<const index_t> block_columns(const CrsMatrix& a, const Partition& part, std::size_t rank) {
  const auto ptr = a.row_ptr();
  return a.col_idx().subspan(ptr[part.begin(rank)], ptr[part.end(rank)] - ptr[part.begin(rank)]);
}

void fill_receive_side(CommPlan& plan, const Partition& part, std::vector<index_t> halo) {
  plan.halo_columns = std::move(halo);
  for (std::size_t s = 0; s < plan.halo_columns.size(); ++s) {
    const std::size_t q = part.owner(plan.halo_columns[s]);
    auto [it, inserted] = plan.recv_from.try_emplace(q);
    if (inserted) plan.recv_offset[q] = s;
    it->second.push_back(plan.halo_columns[s]);
  }
}

}  // namespace

CommPlan build_comm_plan(const CrsMatrix& a, const Partition& part, std::size_t rank) {
  require_square(a);
  require(part.row_start.size() == part.n_ranks + 1 && part.row_start.back() == a.n_rows(),
          "partition does not match the matrix");
  require(rank < part.n_ranks, "rank out of range");
  CommPlan plan;
  plan.rank = rank;
  fill_receive_side(plan, part, remote_columns(block_columns(a, part, rank), part.begin(rank), part.end(rank)));

  const std::size_t lo = part.begin(rank), hi = part.end(rank);
  for (std::size_t q = 0; q < part.n_ranks; ++q) {
    if (q == rank) continue;
    std::vector<index_t> needed;
    for (index_t c : block_columns(a, part, q)) {
      if (c >= lo && c < hi) needed.push_back(c);
    }
    if (needed.empty()) continue;
    std::sort(needed.begin(), needed.end());
    needed.erase(std::unique(needed.begin(), needed.end()), needed.end());
    plan.send_to.emplace(q, std::move(needed));
  }
  return plan;
}

std::vector<CommPlan> build_all_comm_plans(const CrsMatrix& a, const Partition& part) {
  require_square(a);
  require(part.row_start.size() == part.n_ranks + 1 && part.row_start.back() == a.n_rows(),
          "partition does not match the matrix");
  std::vector<CommPlan> plans(part.n_ranks);
  for (std::size_t r = 0; r < part.n_ranks; ++r) {
    plans[r].rank = r;
    fill_receive_side(plans[r], part, remote_columns(block_columns(a, part, r), part.begin(r), part.end(r)));
  }
  for (std::size_t r = 0; r < part.n_ranks; ++r) {
    for (const auto& [q, cols] : plans[r].recv_from) plans[q].send_to.emplace(r, cols);
  }
  return plans;
}

CommPlan build_comm_plan_exchange(const CrsMatrix& local_rows, const Partition& part, transport::Endpoint& ep) {
  const auto rank = static_cast<std::size_t>(ep.rank());
  require(static_cast<std::size_t>(ep.size()) == part.n_ranks, "fabric size must equal the partition rank count");
  require(local_rows.n_rows() == part.rows(rank), "local row block does not match the partition");
  if (local_rows.n_cols() != part.row_start.back()) {
    throw UnsupportedShape("halo exchange needs a square matrix");
  }
  CommPlan plan;
  plan.rank = rank;
  fill_receive_side(plan, part, remote_columns(local_rows.col_idx(), part.begin(rank), part.end(rank)));

  constexpr int kCountTag = 9101;
  constexpr int kListTag = 9102;
  const std::size_t p = part.n_ranks;
  std::vector<std::uint64_t> incoming_count(p, 0), outgoing_count(p, 0);
  std::vector<transport::RequestHandle> handles;
  for (std::size_t q = 0; q < p; ++q) {
    if (q == rank) continue;
    auto it = plan.recv_from.find(q);
    outgoing_count[q] = it == plan.recv_from.end() ? 0 : it->second.size();
    handles.push_back(ep.post_recv(static_cast<int>(q), kCountTag, std::span(&incoming_count[q], 1)));
  }
  for (std::size_t q = 0; q < p; ++q) {
    if (q == rank) continue;
    handles.push_back(
        ep.post_send(static_cast<int>(q), kCountTag, std::span<const std::uint64_t>(&outgoing_count[q], 1)));
  }
  ep.wait_all(handles);
  handles.clear();

  std::vector<std::vector<index_t>> requested(p);
  for (std::size_t q = 0; q < p; ++q) {
    if (q == rank || incoming_count[q] == 0) continue;
    requested[q].resize(incoming_count[q]);
    handles.push_back(ep.post_recv(static_cast<int>(q), kListTag, std::span(requested[q])));
  }
  for (const auto& [q, cols] : plan.recv_from) {
    handles.push_back(ep.post_send(static_cast<int>(q), kListTag, std::span<const index_t>(cols)));
  }
  ep.wait_all(handles);
  for (std::size_t q = 0; q < p; ++q) {
    if (!requested[q].empty()) plan.send_to.emplace(q, std::move(requested[q]));
  }
  return plan;
}

RankWorkset build_workset(const CrsMatrix& a, const Partition& part, const CommPlan& plan, std::size_t rank,
                          bool split) {
  require_square(a);
  require(rank < part.n_ranks && plan.rank == rank, "plan does not belong to this rank");
  RankWorkset ws;
  ws.rank = rank;
  ws.row_begin = part.begin(rank);
  ws.n_local = part.rows(rank);
  ws.split = split;

  const auto ptr = a.row_ptr();
  const auto col = a.col_idx();
  const auto val = a.values();
  const std::size_t lo = part.begin(rank), hi = part.end(rank);
  std::vector<offset_t> row_ptr(ws.n_local + 1, 0);
  std::vector<index_t> cols;
  std::vector<double> vals(val.begin() + ptr[lo], val.begin() + ptr[hi]);
  cols.reserve(vals.size());
  for (std::size_t i = lo; i < hi; ++i) {
    for (offset_t j = ptr[i]; j < ptr[i + 1]; ++j) {
      const index_t c = col[j];
      if (c >= lo && c < hi) {
        cols.push_back(static_cast<index_t>(c - lo));
      } else {
        auto slot = plan.halo_slot(c);
        if (!slot) throw InternalError("column " + std::to_string(c) + " missing from the halo map");
        cols.push_back(static_cast<index_t>(ws.n_local + *slot));
      }
    }
    row_ptr[i - lo + 1] = cols.size();
  }
  CrsMatrix full(ws.n_local, ws.n_local + plan.halo_size(), std::move(row_ptr), std::move(cols), std::move(vals));

  if (split) {
    auto parts = split_columns(full, 0, ws.n_local);
    ws.local = std::move(parts.local);
    std::vector<index_t> rcols(parts.remote.col_idx().begin(), parts.remote.col_idx().end());
    for (auto& c : rcols) c = static_cast<index_t>(c - ws.n_local);
    ws.remote = CrsMatrix(ws.n_local, plan.halo_size(),
                          std::vector<offset_t>(parts.remote.row_ptr().begin(), parts.remote.row_ptr().end()),
                          std::move(rcols),
                          std::vector<double>(parts.remote.values().begin(), parts.remote.values().end()));
  } else {
    ws.full = std::move(full);
  }
  ws.rhs.assign(ws.n_local + plan.halo_size(), 0.0);
  ws.y.assign(ws.n_local, 0.0);
  for (const auto& [q, rows] : plan.send_to) ws.send_buffers[q].assign(rows.size(), 0.0);
  return ws;
}

index_t global_column(const RankWorkset& ws, const CommPlan& plan, index_t local_column) {
  if (local_column < ws.n_local) return static_cast<index_t>(ws.row_begin + local_column);
  const std::size_t slot = local_column - ws.n_local;
  require(slot < plan.halo_size(), "column outside the workset");
  return plan.halo_columns[slot];
}

CommVolume communication_volume(std::span<const CommPlan> plans) {
  CommVolume v;
  v.per_rank.resize(plans.size());
  for (std::size_t r = 0; r < plans.size(); ++r) {
    for (const auto& [q, rows] : plans[r].send_to) v.per_rank[r].send_bytes += rows.size() * sizeof(double);
    for (const auto& [q, cols] : plans[r].recv_from) v.per_rank[r].recv_bytes += cols.size() * sizeof(double);
    v.total_bytes += v.per_rank[r].send_bytes;
  }
  if (!plans.empty()) {
    v.min_rank_bytes = std::numeric_limits<std::size_t>::max();
    for (const auto& rv : v.per_rank) {
      v.max_rank_bytes = std::max(v.max_rank_bytes, rv.send_bytes + rv.recv_bytes);
      v.min_rank_bytes = std::min(v.min_rank_bytes, rv.send_bytes + rv.recv_bytes);
    }
  }
  return v;
}

}  // namespace hspmv
