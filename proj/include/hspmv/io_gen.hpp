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

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <string>
#include <string_view>

#include "hspmv/crs_matrix.hpp"

namespace hspmv::io {

/// Reads "%%MatrixMarket matrix coordinate real {general|symmetric}".
/// Indices become 0-based; symmetric files gain the mirror of every
/// off-diagonal entry, placed right after it; duplicates are kept. Rows are
/// grouped by a stable sort, so within-row order is file order.
/// Throws ParseError (with the offending line) or IoError.
CrsMatrix read_matrix_market(const std::filesystem::path& path);
CrsMatrix read_matrix_market(std::istream& in);

/// Writes the general coordinate format, 1-based, in storage order, with
/// shortest round-trip decimal values.
void write_matrix_market(const CrsMatrix& a, const std::filesystem::path& path);
void write_matrix_market(const CrsMatrix& a, std::ostream& out);

}  // namespace hspmv::io

namespace hspmv::gen {

enum class Kind { BandedRandom, BlockCoupled };

/// BandedRandom: each row holds its diagonal plus entries drawn uniformly
/// from columns within band_halfwidth of it.
/// BlockCoupled: `blocks` contiguous diagonal blocks; a fraction `coupling`
/// of each row's off-diagonal entries falls into other blocks.
/// The realized per-row count is floor(n_nzr_target) or one more, chosen so
/// the expected average hits the target. The seed fully determines output.
struct GenSpec {
  Kind kind = Kind::BandedRandom;
  std::size_t n = 0;
  double n_nzr_target = 1.0;
  std::size_t band_halfwidth = 0;
  std::size_t blocks = 1;
  double coupling = 0.0;
  std::uint64_t seed = 0;
};

/// Throws ContractViolation for infeasible specs.
CrsMatrix generate(const GenSpec& spec);

/// "banded:n=2000,nnzr=15,band=40,seed=1" or
/// "block:n=2000,nnzr=15,blocks=8,coupling=0.05,seed=1". A missing seed
/// falls back to default_seed. Throws ParseError.
GenSpec parse_gen_spec(std::string_view text, std::uint64_t default_seed = 0);
bool looks_like_gen_spec(std::string_view text);
std::string format_gen_spec(const GenSpec& spec);

}  // namespace hspmv::gen
