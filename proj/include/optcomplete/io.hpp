#pragma once

#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <string>
#include <string_view>
#include <utility>

#include "optcomplete/rng.hpp"
#include "optcomplete/types.hpp"

namespace optcomplete {

namespace detail {

inline std::string strip(std::string_view line) {
  std::size_t b = 0, e = line.size();
  while (b < e && (line[b] == ' ' || line[b] == '\t' || line[b] == '\r')) ++b;
  while (e > b && (line[e - 1] == ' ' || line[e - 1] == '\t' || line[e - 1] == '\r')) --e;
  return std::string(line.substr(b, e - b));
}

[[noreturn]] inline void parse_fail(const std::string& path, std::size_t line_no,
                                    const std::string& what) {
  throw std::runtime_error(path + ":" + std::to_string(line_no) + ": " + what);
}

inline double parse_double(std::string_view field, const std::string& path,
                           std::size_t line_no) {
  const std::string token = strip(field);
  double value = 0;
  const auto result =
      std::from_chars(token.data(), token.data() + token.size(), value);
  if (result.ec != std::errc{} || result.ptr != token.data() + token.size())
    parse_fail(path, line_no, "expected a number, got '" + token + "'");
  return value;
}

inline long long parse_index(std::string_view field, const std::string& path,
                             std::size_t line_no) {
  const std::string token = strip(field);
  long long value = 0;
  const auto result =
      std::from_chars(token.data(), token.data() + token.size(), value);
  if (result.ec != std::errc{} || result.ptr != token.data() + token.size())
    parse_fail(path, line_no, "expected an integer, got '" + token + "'");
  return value;
}

inline std::vector<std::string_view> split_fields(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  for (std::size_t i = 0; i <= line.size(); ++i) {
    if (i == line.size() || line[i] == ',') {
      out.push_back(line.substr(start, i - start));
      start = i + 1;
    }
  }
  return out;
}

/// Round-trip exact text for a double: 17 significant digits.
inline std::string fmt17(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

}  // namespace detail

/// Reads a sparse matrix file: header line `i,j,value`, then one 0-based
/// coordinate per line. Dimensions are inferred from the largest indices and
/// can only grow beyond the hints.
inline MaskedMatrix load_masked_matrix(const std::string& path,
                                       Index min_rows = 0, Index min_cols = 0) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open '" + path + "'");
  std::string line;
  std::size_t line_no = 0;
  if (!std::getline(in, line))
    throw std::runtime_error(path + ": empty file, expected 'i,j,value' header");
  ++line_no;
  if (detail::strip(line) != "i,j,value")
    detail::parse_fail(path, line_no, "expected header 'i,j,value'");
  std::vector<std::tuple<Index, Index, double>> entries;
  Index max_row = -1, max_col = -1;
  while (std::getline(in, line)) {
    ++line_no;
    const std::string body = detail::strip(line);
    if (body.empty()) continue;
    const auto fields = detail::split_fields(body);
    if (fields.size() != 3)
      detail::parse_fail(path, line_no, "expected 3 comma-separated fields");
    const long long i = detail::parse_index(fields[0], path, line_no);
    const long long j = detail::parse_index(fields[1], path, line_no);
    const double v = detail::parse_double(fields[2], path, line_no);
    if (i < 0 || j < 0) detail::parse_fail(path, line_no, "indices must be >= 0");
    if (!std::isfinite(v)) detail::parse_fail(path, line_no, "value must be finite");
    entries.emplace_back(static_cast<Index>(i), static_cast<Index>(j), v);
    max_row = std::max<Index>(max_row, static_cast<Index>(i));
    max_col = std::max<Index>(max_col, static_cast<Index>(j));
  }
  if (entries.empty())
    throw std::runtime_error(path + ": no observed entries");
  const Index n_rows = std::max(min_rows, max_row + 1);
  const Index n_cols = std::max(min_cols, max_col + 1);
  try {
    return MaskedMatrix::from_triplets(n_rows, n_cols, std::move(entries));
  } catch (const std::runtime_error& e) {
    throw std::runtime_error(path + ": " + e.what());
  }
}

inline void save_masked_matrix(const std::string& path, const MaskedMatrix& M) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write '" + path + "'");
  out << "i,j,value\n";
  for (Index i = 0; i < M.n_rows; ++i) {
    const auto cols = M.row_cols(i);
    const auto vals = M.row_values(i);
    for (std::size_t t = 0; t < cols.size(); ++t)
      out << i << ',' << cols[t] << ',' << detail::fmt17(vals[t]) << '\n';
  }
  if (!out) throw std::runtime_error("write failed for '" + path + "'");
}

/// Reads a dense feature table: one row per matrix column, comma-separated,
/// optionally with a header line to skip.
inline FeatureMatrix load_features(const std::string& path, bool has_header) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open '" + path + "'");
  std::string line;
  std::size_t line_no = 0;
  std::vector<std::vector<double>> rows;
  while (std::getline(in, line)) {
    ++line_no;
    if (has_header && line_no == 1) continue;
    const std::string body = detail::strip(line);
    if (body.empty()) continue;
    const auto fields = detail::split_fields(body);
    std::vector<double> row;
    row.reserve(fields.size());
    for (const auto& field : fields)
      row.push_back(detail::parse_double(field, path, line_no));
    if (!rows.empty() && row.size() != rows.front().size())
      detail::parse_fail(path, line_no,
                         "expected " + std::to_string(rows.front().size()) +
                             " fields, got " + std::to_string(row.size()));
    rows.push_back(std::move(row));
  }
  if (rows.empty()) throw std::runtime_error(path + ": no feature rows");
  FeatureMatrix B;
  B.values.resize(static_cast<Index>(rows.size()),
                  static_cast<Index>(rows.front().size()));
  for (std::size_t r = 0; r < rows.size(); ++r)
    for (std::size_t c = 0; c < rows[r].size(); ++c)
      B.values(static_cast<Index>(r), static_cast<Index>(c)) = rows[r][c];
  B.require_valid();
  return B;
}

inline void save_features(const std::string& path, const FeatureMatrix& B) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write '" + path + "'");
  for (Index r = 0; r < B.n_cols(); ++r) {
    for (Index c = 0; c < B.n_features(); ++c) {
      if (c) out << ',';
      out << detail::fmt17(B.values(r, c));
    }
    out << '\n';
  }
  if (!out) throw std::runtime_error("write failed for '" + path + "'");
}

struct Problem {
  MaskedMatrix matrix;
  FeatureMatrix features;
};

/// Loads and cross-validates a completion problem. The feature table fixes
/// the column count; the matrix file may not reference columns beyond it.
inline Problem load_problem(const std::string& matrix_path,
                            const std::string& features_path,
                            bool features_header = false) {
  Problem p;
  p.features = load_features(features_path, features_header);
  p.matrix = load_masked_matrix(matrix_path, 0, p.features.n_cols());
  if (p.matrix.n_cols != p.features.n_cols())
    throw std::runtime_error(
        matrix_path + ": column index " + std::to_string(p.matrix.n_cols - 1) +
        " out of range; feature table has " +
        std::to_string(p.features.n_cols()) + " rows");
  p.matrix.require_valid();
  return p;
}

/// Deterministic holdout split of the observed entries. `fraction` of them
/// (rounded) move to the validation matrix; both keep the original shape.
template <class Scalar>
std::pair<MaskedMatrixT<Scalar>, MaskedMatrixT<Scalar>> split_validation(
    const MaskedMatrixT<Scalar>& M, double fraction, std::uint64_t seed) {
  if (!(fraction >= 0.0) || fraction >= 1.0)
    throw std::invalid_argument("split_validation: fraction must be in [0, 1)");
  const Index total = M.entry_count();
  const Index held = static_cast<Index>(std::llround(fraction * static_cast<double>(total)));
  if (held >= total)
    throw std::invalid_argument("split_validation: no training entries would remain");
  std::vector<char> in_validation(static_cast<std::size_t>(total), 0);
  if (held > 0) {
    SplitMix64 rng(seed ^ stream::split);
    for (Index e : sample_without_replacement(rng, total, held))
      in_validation[static_cast<std::size_t>(e)] = 1;
  }
  MaskedMatrixT<Scalar> train, validation;
  for (auto* part : {&train, &validation}) {
    part->n_rows = M.n_rows;
    part->n_cols = M.n_cols;
    part->row_offsets.assign(static_cast<std::size_t>(M.n_rows) + 1, 0);
  }
  for (Index i = 0; i < M.n_rows; ++i) {
    const auto cols = M.row_cols(i);
    const auto vals = M.row_values(i);
    for (std::size_t t = 0; t < cols.size(); ++t) {
      const Index entry = M.row_offsets[i] + static_cast<Index>(t);
      auto& part = in_validation[static_cast<std::size_t>(entry)] ? validation : train;
      part.col_index.push_back(cols[t]);
      part.values.push_back(vals[t]);
    }
    train.row_offsets[i + 1] = static_cast<Index>(train.values.size());
    validation.row_offsets[i + 1] = static_cast<Index>(validation.values.size());
  }
  return {std::move(train), std::move(validation)};
}

/// Result JSON. Numbers are written with 17 significant digits so values
/// round-trip exactly.
template <class Scalar>
void write_result_json(const std::string& path,
                       const CompletionResultT<Scalar>& result,
                       Algorithm algorithm,
                       const ProblemConfigT<Scalar>& config) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write '" + path + "'");
  out << "{\n";
  out << "  \"algorithm\": \"" << algorithm_name(algorithm) << "\",\n";
  out << "  \"k\": " << config.k << ",\n";
  out << "  \"gamma\": " << detail::fmt17(static_cast<double>(config.gamma)) << ",\n";
  out << "  \"seed\": " << config.seed << ",\n";
  out << "  \"support\": [";
  for (std::size_t t = 0; t < result.support.indices.size(); ++t) {
    if (t) out << ", ";
    out << result.support.indices[t];
  }
  out << "],\n";
  out << "  \"objective_trace\": [";
  for (std::size_t t = 0; t < result.objective_trace.size(); ++t) {
    if (t) out << ", ";
    out << "{\"eta\": "
        << detail::fmt17(static_cast<double>(result.objective_trace[t].first))
        << ", \"cost\": "
        << detail::fmt17(static_cast<double>(result.objective_trace[t].second))
        << "}";
  }
  out << "],\n";
  out << "  \"elapsed_seconds\": " << detail::fmt17(result.elapsed_seconds) << ",\n";
  out << "  \"exact_certified\": " << (result.exact_certified ? "true" : "false") << ",\n";
  out << "  \"warnings\": [";
  for (std::size_t t = 0; t < result.diagnostics.warnings.size(); ++t) {
    if (t) out << ", ";
    out << '"';
    for (char ch : result.diagnostics.warnings[t]) {
      if (ch == '"' || ch == '\\') out << '\\';
      out << ch;
    }
    out << '"';
  }
  out << "]\n";
  out << "}\n";
  if (!out) throw std::runtime_error("write failed for '" + path + "'");
}

}  // namespace optcomplete
