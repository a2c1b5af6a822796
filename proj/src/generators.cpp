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
#include <charconv>
#include <cmath>
#include <random>
#include <sstream>
#include <unordered_set>

#include "hspmv/io_gen.hpp"

namespace hspmv::gen {

namespace {

// Distribution code is spelled out rather than taken from <random> so the
// output does not depend on the standard library implementation.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  double unit() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

  std::uint64_t below(std::uint64_t bound) {
    const std::uint64_t limit = std::numeric_limits<std::uint64_t>::max() -
                                std::numeric_limits<std::uint64_t>::max() % bound;
    std::uint64_t r;
    do {
      r = engine_();
    } while (r >= limit);
    return r % bound;
  }

  double value() { return 2.0 * unit() - 1.0; }

 private:
  std::mt19937_64 engine_;
};

std::size_t row_count(Rng& rng, double target) {
  const double base = std::floor(target);
  return static_cast<std::size_t>(base) + (rng.unit() < target - base ? 1 : 0);
}

// k distinct values in [0, range) by Floyd's algorithm.
std::vector<std::size_t> sample_distinct(Rng& rng, std::size_t range, std::size_t k) {
  std::unordered_set<std::size_t> chosen;
  std::vector<std::size_t> out;
  out.reserve(k);
  for (std::size_t j = range - k; j < range; ++j) {
    const std::size_t t = rng.below(j + 1);
    const std::size_t pick = chosen.insert(t).second ? t : j;
    if (pick == j) chosen.insert(j);
    out.push_back(pick);
  }
  return out;
}

CrsMatrix banded(const GenSpec& s) {
  const std::size_t width = 2 * s.band_halfwidth + 1;
  require(s.n_nzr_target <= static_cast<double>(std::min(width, s.n)),
          "nonzeros per row exceed what the band can hold");
  Rng rng(s.seed);
  std::vector<offset_t> row_ptr{0};
  std::vector<index_t> cols;
  std::vector<double> vals;
  std::vector<std::pair<index_t, double>> row;
  for (std::size_t i = 0; i < s.n; ++i) {
    const std::size_t lo = i > s.band_halfwidth ? i - s.band_halfwidth : 0;
    const std::size_t hi = std::min(i + s.band_halfwidth, s.n - 1);
    const std::size_t available = hi - lo + 1;
    const std::size_t count = std::min(row_count(rng, s.n_nzr_target), available);
    row.clear();
    row.emplace_back(static_cast<index_t>(i), rng.value());
    if (count > 1) {
      for (std::size_t pick : sample_distinct(rng, available - 1, count - 1)) {
        std::size_t c = lo + pick;
        if (c >= i) ++c;
        row.emplace_back(static_cast<index_t>(c), rng.value());
      }
    }
    std::sort(row.begin(), row.end(), [](const auto& a, const auto& b) { return a.first < b.first; });
    for (const auto& [c, v] : row) {
      cols.push_back(c);
      vals.push_back(v);
    }
    row_ptr.push_back(cols.size());
  }
  return CrsMatrix(s.n, s.n, std::move(row_ptr), std::move(cols), std::move(vals));
}

CrsMatrix block_coupled(const GenSpec& s) {
  require(s.blocks >= 1 && s.blocks <= s.n, "block count must lie in [1, n]");
  require(s.coupling >= 0.0 && s.coupling <= 1.0, "coupling must lie in [0, 1]");
  std::vector<std::size_t> start(s.blocks + 1);
  for (std::size_t b = 0; b <= s.blocks; ++b) start[b] = b * s.n / s.blocks;
  std::size_t min_block = s.n;
  for (std::size_t b = 0; b < s.blocks; ++b) min_block = std::min(min_block, start[b + 1] - start[b]);
  if (s.coupling == 0.0 || s.blocks == 1) {
    require(s.n_nzr_target <= static_cast<double>(min_block), "nonzeros per row exceed the smallest block");
  } else {
    require(s.n_nzr_target <= static_cast<double>(s.n), "nonzeros per row exceed n");
  }

  Rng rng(s.seed);
  std::vector<offset_t> row_ptr{0};
  std::vector<index_t> cols;
  std::vector<double> vals;
  std::vector<std::pair<index_t, double>> row;
  std::size_t block = 0;
  for (std::size_t i = 0; i < s.n; ++i) {
    while (i >= start[block + 1]) ++block;
    const std::size_t b0 = start[block], b1 = start[block + 1];
    const std::size_t inside = b1 - b0 - 1;  // excluding the diagonal
    const std::size_t outside = s.n - (b1 - b0);
    const std::size_t off = std::min(row_count(rng, s.n_nzr_target), s.n) - 1;
    std::size_t inter = 0;
    for (std::size_t k = 0; k < off; ++k) inter += rng.unit() < s.coupling ? 1 : 0;
    std::size_t intra = off - inter;
    if (intra > inside) {
      inter += intra - inside;
      intra = inside;
    }
    inter = std::min(inter, outside);

    row.clear();
    row.emplace_back(static_cast<index_t>(i), rng.value());
    for (std::size_t pick : sample_distinct(rng, inside, intra)) {
      std::size_t c = b0 + pick;
      if (c >= i) ++c;
      row.emplace_back(static_cast<index_t>(c), rng.value());
    }
    for (std::size_t pick : sample_distinct(rng, outside, inter)) {
      const std::size_t c = pick < b0 ? pick : pick + (b1 - b0);
      row.emplace_back(static_cast<index_t>(c), rng.value());
    }
    std::sort(row.begin(), row.end(), [](const auto& a, const auto& b) { return a.first < b.first; });
    for (const auto& [c, v] : row) {
      cols.push_back(c);
      vals.push_back(v);
    }
    row_ptr.push_back(cols.size());
  }
  return CrsMatrix(s.n, s.n, std::move(row_ptr), std::move(cols), std::move(vals));
}

}  // namespace

CrsMatrix generate(const GenSpec& spec) {
  require(spec.n >= 1, "matrix dimension must be positive");
  require(spec.n_nzr_target >= 1.0, "at least one nonzero (the diagonal) per row");
  return spec.kind == Kind::BandedRandom ? banded(spec) : block_coupled(spec);
}

bool looks_like_gen_spec(std::string_view text) {
  return text.starts_with("banded:") || text.starts_with("block:");
}

GenSpec parse_gen_spec(std::string_view text, std::uint64_t default_seed) {
  GenSpec spec;
  spec.seed = default_seed;
  const auto colon = text.find(':');
  if (colon == std::string_view::npos) throw ParseError(0, "generator spec needs 'banded:' or 'block:'");
  const auto kind = text.substr(0, colon);
  if (kind == "banded") spec.kind = Kind::BandedRandom;
  else if (kind == "block") spec.kind = Kind::BlockCoupled;
  else throw ParseError(0, "unknown generator kind '" + std::string(kind) + "'");

  bool have_n = false, have_nnzr = false;
  std::string_view rest = text.substr(colon + 1);
  while (!rest.empty()) {
    const auto comma = rest.find(',');
    const auto item = rest.substr(0, comma);
    rest = comma == std::string_view::npos ? std::string_view{} : rest.substr(comma + 1);
    if (item.empty()) continue;
    const auto eq = item.find('=');
    if (eq == std::string_view::npos) throw ParseError(0, "expected key=value, got '" + std::string(item) + "'");
    const auto key = item.substr(0, eq);
    const auto value = item.substr(eq + 1);
    auto number = [&](auto& out) {
      auto [ptr, ec] = std::from_chars(value.data(), value.data() + value.size(), out);
      if (ec != std::errc() || ptr != value.data() + value.size()) {
        throw ParseError(0, "invalid value for '" + std::string(key) + "': '" + std::string(value) + "'");
      }
    };
    if (key == "n") number(spec.n), have_n = true;
    else if (key == "nnzr") number(spec.n_nzr_target), have_nnzr = true;
    else if (key == "band") number(spec.band_halfwidth);
    else if (key == "blocks") number(spec.blocks);
    else if (key == "coupling") number(spec.coupling);
    else if (key == "seed") number(spec.seed);
    else throw ParseError(0, "unknown generator key '" + std::string(key) + "'");
  }
  if (!have_n || !have_nnzr) throw ParseError(0, "generator spec needs n= and nnzr=");
  return spec;
}

std::string format_gen_spec(const GenSpec& spec) {
  std::ostringstream out;
  out.precision(17);
  if (spec.kind == Kind::BandedRandom) {
    out << "banded:n=" << spec.n << ",nnzr=" << spec.n_nzr_target << ",band=" << spec.band_halfwidth;
  } else {
    out << "block:n=" << spec.n << ",nnzr=" << spec.n_nzr_target << ",blocks=" << spec.blocks
        << ",coupling=" << spec.coupling;
  }
  out << ",seed=" << spec.seed;
  return out.str();
}

}  // namespace hspmv::gen
