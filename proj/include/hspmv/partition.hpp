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
#include <map>
#include <optional>
#include <span>
#include <vector>

#include "hspmv/crs_matrix.hpp"

namespace hspmv {

namespace transport {
class Endpoint;
}

enum class BalancePolicy { BalanceNonzeros, BalanceRows };

/// Contiguous row ownership: rank r owns rows [row_start[r], row_start[r+1]).
/// For square matrices the same ranges define ownership of RHS entries.
struct Partition {
  std::size_t n_ranks = 0;
  std::vector<std::size_t> row_start;
  BalancePolicy policy = BalancePolicy::BalanceNonzeros;

  std::size_t begin(std::size_t rank) const { return row_start[rank]; }
  std::size_t end(std::size_t rank) const { return row_start[rank + 1]; }
  std::size_t rows(std::size_t rank) const { return end(rank) - begin(rank); }
  /// Rank owning the global index; throws InternalError when none does.
  std::size_t owner(std::size_t global_index) const;
};

Partition partition_rows(const CrsMatrix& a, std::size_t n_ranks, BalancePolicy policy);

/// Halo-exchange bookkeeping for one rank.
///
/// recv_from[q]: sorted global columns this rank needs from rank q.
/// send_to[q]: sorted global rows of this rank that rank q needs.
/// Halo slots are ordered by (source rank, global index); since ownership is
/// row-contiguous this is plain ascending global order, and every source
/// lands in one contiguous halo segment.
struct CommPlan {
  std::size_t rank = 0;
  std::map<std::size_t, std::vector<index_t>> recv_from;
  std::map<std::size_t, std::vector<index_t>> send_to;
  std::vector<index_t> halo_columns;            ///< slot -> global column
  std::map<std::size_t, std::size_t> recv_offset;  ///< source rank -> first halo slot

  std::size_t halo_size() const noexcept { return halo_columns.size(); }
  std::optional<std::size_t> halo_slot(index_t global_column) const;
};

/// Plan from global matrix knowledge. Throws UnsupportedShape for
/// non-square matrices.
CommPlan build_comm_plan(const CrsMatrix& a, const Partition& part, std::size_t rank);

/// All ranks at once; send lists are derived by transposing receive lists.
std::vector<CommPlan> build_all_comm_plans(const CrsMatrix& a, const Partition& part);

/// Plan from this rank's row block only (global column indices), obtaining
/// send lists through one all-to-all exchange of receive lists over the
/// endpoint. Every rank of the fabric must call this collectively.
CommPlan build_comm_plan_exchange(const CrsMatrix& local_rows, const Partition& part, transport::Endpoint& ep);

/// Local matrices and buffers of one rank.
///
/// rhs holds [owned x | halo]; halo slot s lives at rhs[n_local + s].
/// No-split form: `full` addresses rhs directly (owned column c maps to
/// c - row_begin, remote column to n_local + slot) and keeps each row's entry
/// order. Split form: `local` addresses the owned part, `remote` the halo.
struct RankWorkset {
  std::size_t rank = 0;
  std::size_t row_begin = 0;
  std::size_t n_local = 0;
  bool split = false;
  CrsMatrix full;
  CrsMatrix local;
  CrsMatrix remote;
  std::vector<double> rhs;
  std::map<std::size_t, std::vector<double>> send_buffers;
  std::vector<double> y;

  std::span<double> x_local() { return std::span(rhs).first(n_local); }
  std::span<double> halo() { return std::span(rhs).subspan(n_local); }
  std::span<const double> x_local() const { return std::span(rhs).first(n_local); }
  std::span<const double> halo() const { return std::span(rhs).subspan(n_local); }
};

RankWorkset build_workset(const CrsMatrix& a, const Partition& part, const CommPlan& plan, std::size_t rank,
                          bool split);

/// Maps a column of a no-split workset matrix back to its global index.
index_t global_column(const RankWorkset& ws, const CommPlan& plan, index_t local_column);

struct RankVolume {
  std::size_t send_bytes = 0;
  std::size_t recv_bytes = 0;
};

struct CommVolume {
  std::vector<RankVolume> per_rank;
  std::size_t total_bytes = 0;  ///< sum of all sends (= sum of all receives)
  std::size_t max_rank_bytes = 0;
  std::size_t min_rank_bytes = 0;  ///< over per-rank send + recv
};

/// 8 bytes per exchanged RHS element.
CommVolume communication_volume(std::span<const CommPlan> plans);

}  // namespace hspmv
