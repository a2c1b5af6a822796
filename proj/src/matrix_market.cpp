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
#include <cctype>
#include <charconv>
#include <fstream>
#include <limits>
#include <sstream>
#include <vector>

#include "hspmv/io_gen.hpp"

namespace hspmv::io {

namespace {

std::string lower(std::string s) {
  std::transform(s.begin(), s.end(), s.begin(), [](unsigned char c) { return std::tolower(c); });
  return s;
}

std::vector<std::string_view> split_ws(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t i = 0;
  while (i < line.size()) {
    while (i < line.size() && std::isspace(static_cast<unsigned char>(line[i]))) ++i;
    std::size_t j = i;
    while (j < line.size() && !std::isspace(static_cast<unsigned char>(line[j]))) ++j;
    if (j > i) out.push_back(line.substr(i, j - i));
    i = j;
  }
  return out;
}

template <class T>
T parse_number(std::string_view token, std::size_t line, const char* what) {
  T value{};
  if (!token.empty() && token.front() == '+') token.remove_prefix(1);
  auto [ptr, ec] = std::from_chars(token.data(), token.data() + token.size(), value);
  if (ec != std::errc() || ptr != token.data() + token.size()) {
    throw ParseError(line, std::string("invalid ") + what + " '" + std::string(token) + "'");
  }
  return value;
}

bool blank(std::string_view line) {
  return std::all_of(line.begin(), line.end(), [](unsigned char c) { return std::isspace(c); });
}

}  // namespace

CrsMatrix read_matrix_market(std::istream& in) {
  std::string line;
  std::size_t line_no = 0;
  if (!std::getline(in, line)) throw ParseError(1, "empty file, expected a %%MatrixMarket header");
  ++line_no;
  const auto header = split_ws(line);
  if (header.size() != 5 || header[0] != "%%MatrixMarket") {
    throw ParseError(line_no, "malformed %%MatrixMarket header");
  }
  const std::string object = lower(std::string(header[1]));
  const std::string format = lower(std::string(header[2]));
  const std::string field = lower(std::string(header[3]));
  const std::string symmetry = lower(std::string(header[4]));
  if (object != "matrix") throw ParseError(line_no, "unsupported object '" + object + "'");
  if (format != "coordinate") throw ParseError(line_no, "unsupported format '" + format + "', need coordinate");
  if (field != "real") throw ParseError(line_no, "unsupported field '" + field + "', need real");
  if (symmetry != "general" && symmetry != "symmetric") {
    throw ParseError(line_no, "unsupported symmetry '" + symmetry + "'");
  }
  const bool symmetric = symmetry == "symmetric";

  std::size_t n_rows = 0, n_cols = 0, n_entries = 0;
  bool have_size = false;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.starts_with('%') || blank(line)) continue;
    const auto tok = split_ws(line);
    if (tok.size() != 3) throw ParseError(line_no, "size line needs rows, columns and entry count");
    n_rows = parse_number<std::size_t>(tok[0], line_no, "row count");
    n_cols = parse_number<std::size_t>(tok[1], line_no, "column count");
    n_entries = parse_number<std::size_t>(tok[2], line_no, "entry count");
    have_size = true;
    break;
  }
  if (!have_size) throw ParseError(line_no, "missing size line");
  if (symmetric && n_rows != n_cols) throw ParseError(line_no, "symmetric matrix must be square");
  if (n_cols > std::size_t{1} + std::numeric_limits<index_t>::max()) {
    throw ParseError(line_no, "column count exceeds the index type");
  }

  std::vector<Triplet> entries;
  entries.reserve(symmetric ? 2 * n_entries : n_entries);
  std::size_t read = 0;
  while (read < n_entries && std::getline(in, line)) {
    ++line_no;
    if (line.starts_with('%') || blank(line)) continue;
    const auto tok = split_ws(line);
    if (tok.size() != 3) throw ParseError(line_no, "entry needs row, column and value");
    const auto i = parse_number<std::size_t>(tok[0], line_no, "row index");
    const auto j = parse_number<std::size_t>(tok[1], line_no, "column index");
    const auto v = parse_number<double>(tok[2], line_no, "value");
    if (i < 1 || i > n_rows || j < 1 || j > n_cols) {
      throw ParseError(line_no, "index (" + std::to_string(i) + ", " + std::to_string(j) + ") out of bounds");
    }
    entries.push_back({static_cast<index_t>(i - 1), static_cast<index_t>(j - 1), v});
    if (symmetric && i != j) entries.push_back({static_cast<index_t>(j - 1), static_cast<index_t>(i - 1), v});
    ++read;
  }
  if (read < n_entries) {
    throw ParseError(line_no, "truncated file: expected " + std::to_string(n_entries) + " entries, found " +
                                  std::to_string(read));
  }
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.starts_with('%') && !blank(line)) throw ParseError(line_no, "unexpected data after the last entry");
  }
  return CrsMatrix::from_triplets(n_rows, n_cols, entries);
}

CrsMatrix read_matrix_market(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path.string());
  return read_matrix_market(in);
}

void write_matrix_market(const CrsMatrix& a, std::ostream& out) {
  out << "%%MatrixMarket matrix coordinate real general\n";
  out << a.n_rows() << ' ' << a.n_cols() << ' ' << a.nnz() << '\n';
  const auto ptr = a.row_ptr();
  const auto col = a.col_idx();
  const auto val = a.values();
  char buf[64];
  for (std::size_t i = 0; i < a.n_rows(); ++i) {
    for (offset_t j = ptr[i]; j < ptr[i + 1]; ++j) {
      auto [end, ec] = std::to_chars(buf, buf + sizeof buf, val[j]);
      out << (i + 1) << ' ' << (col[j] + 1) << ' ' << std::string_view(buf, end - buf) << '\n';
    }
  }
}

void write_matrix_market(const CrsMatrix& a, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot open " + path.string() + " for writing");
  write_matrix_market(a, out);
  out.flush();
  if (!out) throw IoError("write to " + path.string() + " failed");
}

}  // namespace hspmv::io
