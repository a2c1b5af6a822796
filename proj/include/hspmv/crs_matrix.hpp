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
#include <cstdint>
#include <span>
#include <vector>

#include "hspmv/error.hpp"

namespace hspmv {

class WorkerTeam;

/// Column index type. The code-balance model charges 4 bytes per index;
/// widening this to 64 bits changes the model constants (see
/// ModelOptions::index_bytes).
using index_t = std::uint32_t;
using offset_t = std::size_t;

struct Triplet {
  index_t row;
  index_t col;
  double value;
};

/// Compressed row storage. Immutable once constructed; every constructor
/// validates the structural invariants and throws ContractViolation.
class CrsMatrix {
 public:
  CrsMatrix() : row_ptr_{0} {}
  CrsMatrix(std::size_t n_rows, std::size_t n_cols, std::vector<offset_t> row_ptr,
            std::vector<index_t> col_idx, std::vector<double> values);

  /// Entries are grouped by row with a stable sort, so within-row order is
  /// the input order. Duplicates are kept and act additively.
  static CrsMatrix from_triplets(std::size_t n_rows, std::size_t n_cols, std::span<const Triplet> entries);

  static CrsMatrix identity(std::size_t n);

  std::size_t n_rows() const noexcept { return n_rows_; }
  std::size_t n_cols() const noexcept { return n_cols_; }
  std::size_t nnz() const noexcept { return values_.size(); }

  std::span<const offset_t> row_ptr() const noexcept { return row_ptr_; }
  std::span<const index_t> col_idx() const noexcept { return col_idx_; }
  std::span<const double> values() const noexcept { return values_; }

  std::size_t row_nnz(std::size_t row) const { return row_ptr_[row + 1] - row_ptr_[row]; }
  std::size_t max_row_nnz() const noexcept;

  /// nnz / n_rows, empty rows included; 0 for a matrix without rows.
  double avg_nnz_per_row() const noexcept;

  /// Rows [begin, end) as a new matrix with the same column space.
  CrsMatrix row_block(std::size_t begin, std::size_t end) const;

  friend bool operator==(const CrsMatrix&, const CrsMatrix&) = default;

 private:
  std::size_t n_rows_ = 0;
  std::size_t n_cols_ = 0;
  std::vector<offset_t> row_ptr_;
  std::vector<index_t> col_idx_;
  std::vector<double> values_;
};

/// k contiguous row chunks: chunk c covers rows [boundaries[c], boundaries[c+1]).
struct ChunkPlan {
  std::vector<std::size_t> boundaries;

  std::size_t count() const noexcept { return boundaries.empty() ? 0 : boundaries.size() - 1; }
  friend bool operator==(const ChunkPlan&, const ChunkPlan&) = default;
};

/// Row kernel over [row_begin, row_end). With accumulate the row sum starts
/// from the existing y[i]; otherwise from zero.
void spmv_rows(const CrsMatrix& a, std::span<const double> x, std::span<double> y, std::size_t row_begin,
               std::size_t row_end, bool accumulate);

void spmv_full(const CrsMatrix& a, std::span<const double> x, std::span<double> y, bool accumulate = false);

/// Runs one chunk per worker. Without a team, one thread is spawned per chunk.
void spmv_threaded(const CrsMatrix& a, std::span<const double> x, std::span<double> y, const ChunkPlan& chunks,
                   bool accumulate, WorkerTeam* team = nullptr);

/// Contiguous cuts of a prefix-count array into k parts whose totals differ
/// by at most the largest single item. Greedy cuts are placed before the
/// item that crosses each target; if that leaves a spread above the largest
/// item, a window search over feasible part sizes repairs it.
/// prefix has n+1 entries, prefix[0] = 0.
std::vector<std::size_t> balanced_cuts(std::span<const offset_t> prefix, std::size_t k);

ChunkPlan chunk_by_nonzeros(const CrsMatrix& a, std::size_t k);

/// Like chunk_by_nonzeros, but accepts k > n_rows (including n_rows = 0) by
/// padding with empty trailing chunks, so the plan always has k entries.
ChunkPlan chunk_for_workers(const CrsMatrix& a, std::size_t k);

void validate_chunks(const CrsMatrix& a, const ChunkPlan& chunks);

struct ColumnSplit {
  CrsMatrix local;   ///< columns inside the range, rebased to 0, n_cols = range width
  CrsMatrix remote;  ///< all other entries, original column indices
};

/// Partition entries by column membership in [col_begin, col_end).
ColumnSplit split_columns(const CrsMatrix& a, std::size_t col_begin, std::size_t col_end);

/// Largest componentwise deviation of y from y_ref, measured against the
/// row's magnitude sum  sum_j |a_ij * x_j|. This is the scale of the rounding
/// error a reordered summation can produce. Rows whose magnitude sum is zero
/// must match exactly, otherwise the result is infinite.
double relative_row_error(const CrsMatrix& a, std::span<const double> x, std::span<const double> y_ref,
                          std::span<const double> y);

/// Accepted relative_row_error for split kernels: 1e-13 * max row nnz.
double split_tolerance(const CrsMatrix& a);

}  // namespace hspmv
