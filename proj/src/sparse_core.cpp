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

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <string>
#include <thread>

#include "hspmv/crs_matrix.hpp"
#include "hspmv/worker_team.hpp"

namespace hspmv {

CrsMatrix::CrsMatrix(std::size_t n_rows, std::size_t n_cols, std::vector<offset_t> row_ptr,
                     std::vector<index_t> col_idx, std::vector<double> values)
    : n_rows_(n_rows),
      n_cols_(n_cols),
      row_ptr_(std::move(row_ptr)),
      col_idx_(std::move(col_idx)),
      values_(std::move(values)) {
  require(row_ptr_.size() == n_rows_ + 1, "row_ptr must have n_rows + 1 entries");
  require(row_ptr_.front() == 0, "row_ptr[0] must be 0");
  require(col_idx_.size() == values_.size(), "col_idx and values must have the same length");
  require(row_ptr_.back() == values_.size(), "row_ptr[n_rows] must equal nnz");
  require(std::is_sorted(row_ptr_.begin(), row_ptr_.end()), "row_ptr must be nondecreasing");
  require(n_cols_ <= std::size_t{1} + std::numeric_limits<index_t>::max(), "column count exceeds index type");
  for (index_t c : col_idx_) {
    if (c >= n_cols_) throw ContractViolation("column index " + std::to_string(c) + " out of range");
  }
}

CrsMatrix CrsMatrix::from_triplets(std::size_t n_rows, std::size_t n_cols, std::span<const Triplet> entries) {
  std::vector<offset_t> row_ptr(n_rows + 1, 0);
  for (const auto& t : entries) {
    if (t.row >= n_rows || t.col >= n_cols) {
      throw ContractViolation("triplet (" + std::to_string(t.row) + ", " + std::to_string(t.col) +
                              ") outside " + std::to_string(n_rows) + "x" + std::to_string(n_cols));
    }
    ++row_ptr[t.row + 1];
  }
  std::partial_sum(row_ptr.begin(), row_ptr.end(), row_ptr.begin());
  std::vector<index_t> col_idx(entries.size());
  std::vector<double> values(entries.size());
  std::vector<offset_t> fill(row_ptr.begin(), row_ptr.end() - 1);
  for (const auto& t : entries) {
    offset_t pos = fill[t.row]++;
    col_idx[pos] = t.col;
    values[pos] = t.value;
  }
  return CrsMatrix(n_rows, n_cols, std::move(row_ptr), std::move(col_idx), std::move(values));
}

CrsMatrix CrsMatrix::identity(std::size_t n) {
  std::vector<offset_t> row_ptr(n + 1);
  std::iota(row_ptr.begin(), row_ptr.end(), offset_t{0});
  std::vector<index_t> col_idx(n);
  std::iota(col_idx.begin(), col_idx.end(), index_t{0});
  return CrsMatrix(n, n, std::move(row_ptr), std::move(col_idx), std::vector<double>(n, 1.0));
}

std::size_t CrsMatrix::max_row_nnz() const noexcept {
  std::size_t m = 0;
  for (std::size_t i = 0; i < n_rows_; ++i) m = std::max(m, row_nnz(i));
  return m;
}

double CrsMatrix::avg_nnz_per_row() const noexcept {
  return n_rows_ == 0 ? 0.0 : static_cast<double>(nnz()) / static_cast<double>(n_rows_);
}

CrsMatrix CrsMatrix::row_block(std::size_t begin, std::size_t end) const {
  require(begin <= end && end <= n_rows_, "row block out of range");
  const offset_t first = row_ptr_[begin];
  const offset_t last = row_ptr_[end];
  std::vector<offset_t> ptr(end - begin + 1);
  for (std::size_t i = begin; i <= end; ++i) ptr[i - begin] = row_ptr_[i] - first;
  return CrsMatrix(end - begin, n_cols_, std::move(ptr),
                   std::vector<index_t>(col_idx_.begin() + first, col_idx_.begin() + last),
                   std::vector<double>(values_.begin() + first, values_.begin() + last));
}

void spmv_rows(const CrsMatrix& a, std::span<const double> x, std::span<double> y, std::size_t row_begin,
               std::size_t row_end, bool accumulate) {
  const offset_t* row_ptr = a.row_ptr().data();
  const index_t* col = a.col_idx().data();
  const double* val = a.values().data();
  const double* xp = x.data();
  double* yp = y.data();
  for (std::size_t i = row_begin; i < row_end; ++i) {
    double sum = accumulate ? yp[i] : 0.0;
    for (offset_t j = row_ptr[i]; j < row_ptr[i + 1]; ++j) sum += val[j] * xp[col[j]];
    yp[i] = sum;
  }
}

void spmv_full(const CrsMatrix& a, std::span<const double> x, std::span<double> y, bool accumulate) {
  require(x.size() == a.n_cols(), "x length must equal n_cols");
  require(y.size() == a.n_rows(), "y length must equal n_rows");
  spmv_rows(a, x, y, 0, a.n_rows(), accumulate);
}

void validate_chunks(const CrsMatrix& a, const ChunkPlan& chunks) {
  const auto& b = chunks.boundaries;
  require(b.size() >= 2, "chunk plan needs at least one chunk");
  require(b.front() == 0, "chunk plan must start at row 0");
  require(b.back() == a.n_rows(), "chunk plan must end at n_rows");
  require(std::is_sorted(b.begin(), b.end()), "chunk boundaries must be nondecreasing");
}

void spmv_threaded(const CrsMatrix& a, std::span<const double> x, std::span<double> y, const ChunkPlan& chunks,
                   bool accumulate, WorkerTeam* team) {
  require(x.size() == a.n_cols(), "x length must equal n_cols");
  require(y.size() == a.n_rows(), "y length must equal n_rows");
  validate_chunks(a, chunks);
  const auto& b = chunks.boundaries;
  auto body = [&](std::size_t c) { spmv_rows(a, x, y, b[c], b[c + 1], accumulate); };
  if (team) {
    require(team->size() == chunks.count(), "chunk count must equal worker count");
    team->run(body);
    return;
  }
  if (chunks.count() == 1) {
    body(0);
    return;
  }
  std::vector<std::jthread> workers;
  workers.reserve(chunks.count());
  for (std::size_t c = 0; c < chunks.count(); ++c) workers.emplace_back(body, c);
}

namespace {

bool spread_ok(std::span<const offset_t> prefix, const std::vector<std::size_t>& cuts, offset_t max_item,
               bool allow_empty) {
  offset_t lo = std::numeric_limits<offset_t>::max();
  offset_t hi = 0;
  for (std::size_t c = 0; c + 1 < cuts.size(); ++c) {
    offset_t part = prefix[cuts[c + 1]] - prefix[cuts[c]];
    if (part == 0 && !allow_empty) return false;
    lo = std::min(lo, part);
    hi = std::max(hi, part);
  }
  return hi - lo <= max_item;
}

// Every part must fall inside [low, low + width]. Reachable cut indices after
// c parts form a contiguous range because consecutive prefix gaps never
// exceed width, so only the range ends need tracking.
bool window_cuts(std::span<const offset_t> prefix, std::size_t k, offset_t low, offset_t width,
                 std::vector<std::size_t>& cuts) {
  const std::size_t n = prefix.size() - 1;
  const offset_t total = prefix[n];
  auto first_at_least = [&](offset_t v) {
    return static_cast<std::size_t>(std::lower_bound(prefix.begin(), prefix.end(), v) - prefix.begin());
  };
  auto last_at_most = [&](offset_t v) {
    return static_cast<std::size_t>(std::upper_bound(prefix.begin(), prefix.end(), v) - prefix.begin()) - 1;
  };
  std::vector<std::size_t> lo(k + 1), hi(k + 1);
  lo[0] = hi[0] = 0;
  for (std::size_t c = 1; c <= k; ++c) {
    const offset_t need = prefix[lo[c - 1]] + low;
    if (need > total) return false;
    lo[c] = first_at_least(need);
    hi[c] = last_at_most(prefix[hi[c - 1]] + low + width);
    if (lo[c] > hi[c]) return false;
  }
  if (n < lo[k] || n > hi[k]) return false;
  cuts.assign(k + 1, 0);
  cuts[k] = n;
  for (std::size_t c = k; c-- > 1;) {
    const offset_t end_value = prefix[cuts[c + 1]];
    bool found = false;
    for (std::size_t p = std::min(hi[c], cuts[c + 1]) + 1; p-- > lo[c];) {
      const offset_t part = end_value - prefix[p];
      if (part > low + width) break;
      if (part >= low) {
        cuts[c] = p;
        found = true;
        break;
      }
    }
    if (!found) return false;
  }
  return prefix[cuts[1]] - prefix[0] >= low && prefix[cuts[1]] <= low + width;
}

}  // namespace

std::vector<std::size_t> balanced_cuts(std::span<const offset_t> prefix, std::size_t k) {
  require(!prefix.empty(), "prefix array must not be empty");
  require(k >= 1, "need at least one part");
  const std::size_t n = prefix.size() - 1;
  const offset_t total = prefix[n];
  offset_t max_item = 0;
  std::size_t nonempty = 0;
  for (std::size_t i = 0; i < n; ++i) {
    max_item = std::max(max_item, prefix[i + 1] - prefix[i]);
    nonempty += prefix[i + 1] > prefix[i];
  }
  const bool allow_empty = k > nonempty;

  std::vector<std::size_t> cuts(k + 1, 0);
  cuts[k] = n;
  for (std::size_t c = 1; c < k; ++c) {
    // largest i with prefix[i] <= c * total / k
    const unsigned __int128 target = static_cast<unsigned __int128>(total) * c;
    std::size_t lo = cuts[c - 1], hi = n;
    while (lo < hi) {
      std::size_t mid = lo + (hi - lo + 1) / 2;
      if (static_cast<unsigned __int128>(prefix[mid]) * k <= target) lo = mid;
      else hi = mid - 1;
    }
    cuts[c] = lo;
  }
  if (spread_ok(prefix, cuts, max_item, allow_empty)) return cuts;

  const offset_t mean_floor = total / k;
  const offset_t mean_ceil = (total + k - 1) / k;
  const offset_t low_min = mean_ceil > max_item ? mean_ceil - max_item : 0;
  std::vector<std::size_t> repaired;
  for (offset_t low = mean_floor + 1; low-- > low_min;) {
    if (low == 0 && !allow_empty) break;
    if (window_cuts(prefix, k, low, max_item, repaired) && spread_ok(prefix, repaired, max_item, allow_empty)) {
      return repaired;
    }
  }
  if (!allow_empty && low_min == 0 && window_cuts(prefix, k, 0, max_item, repaired)) return repaired;
  return cuts;
}

ChunkPlan chunk_by_nonzeros(const CrsMatrix& a, std::size_t k) {
  require(k >= 1, "chunk count must be at least 1");
  require(k <= a.n_rows(), "chunk count must not exceed n_rows");
  return ChunkPlan{balanced_cuts(a.row_ptr(), k)};
}

ChunkPlan chunk_for_workers(const CrsMatrix& a, std::size_t k) {
  require(k >= 1, "worker count must be at least 1");
  const std::size_t used = std::min(k, a.n_rows());
  ChunkPlan plan;
  if (used == 0) {
    plan.boundaries.assign(k + 1, 0);
    return plan;
  }
  plan = chunk_by_nonzeros(a, used);
  plan.boundaries.resize(k + 1, a.n_rows());
  return plan;
}

ColumnSplit split_columns(const CrsMatrix& a, std::size_t col_begin, std::size_t col_end) {
  require(col_begin <= col_end && col_end <= a.n_cols(), "local column range outside the matrix");
  const auto row_ptr = a.row_ptr();
  const auto col = a.col_idx();
  const auto val = a.values();
  std::vector<offset_t> lp(a.n_rows() + 1, 0), rp(a.n_rows() + 1, 0);
  std::vector<index_t> lc, rc;
  std::vector<double> lv, rv;
  for (std::size_t i = 0; i < a.n_rows(); ++i) {
    for (offset_t j = row_ptr[i]; j < row_ptr[i + 1]; ++j) {
      if (col[j] >= col_begin && col[j] < col_end) {
        lc.push_back(static_cast<index_t>(col[j] - col_begin));
        lv.push_back(val[j]);
      } else {
        rc.push_back(col[j]);
        rv.push_back(val[j]);
      }
    }
    lp[i + 1] = lc.size();
    rp[i + 1] = rc.size();
  }
  return ColumnSplit{CrsMatrix(a.n_rows(), col_end - col_begin, std::move(lp), std::move(lc), std::move(lv)),
                     CrsMatrix(a.n_rows(), a.n_cols(), std::move(rp), std::move(rc), std::move(rv))};
}

double relative_row_error(const CrsMatrix& a, std::span<const double> x, std::span<const double> y_ref,
                          std::span<const double> y) {
  require(x.size() == a.n_cols() && y_ref.size() == a.n_rows() && y.size() == a.n_rows(),
          "vector lengths must match the matrix");
  const auto ptr = a.row_ptr();
  const auto col = a.col_idx();
  const auto val = a.values();
  double worst = 0.0;
  for (std::size_t i = 0; i < a.n_rows(); ++i) {
    double scale = 0.0;
    for (offset_t j = ptr[i]; j < ptr[i + 1]; ++j) scale += std::abs(val[j] * x[col[j]]);
    const double diff = std::abs(y[i] - y_ref[i]);
    if (diff == 0.0) continue;
    if (scale == 0.0 || !std::isfinite(diff)) return std::numeric_limits<double>::infinity();
    worst = std::max(worst, diff / scale);
  }
  return worst;
}

double split_tolerance(const CrsMatrix& a) {
  return 1e-13 * static_cast<double>(std::max<std::size_t>(1, a.max_row_nnz()));
}

}  // namespace hspmv
