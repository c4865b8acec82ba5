#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace optcomplete {

using Index = Eigen::Index;

template <class Scalar>
using MatrixX = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
template <class Scalar>
using VectorX = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

/// Partially observed matrix in CSR layout. Column indices are strictly
/// increasing within each row; unobserved entries are simply absent.
template <class Scalar>
struct MaskedMatrixT {
  Index n_rows = 0;
  Index n_cols = 0;
  std::vector<Index> row_offsets;  // size n_rows + 1
  std::vector<Index> col_index;    // size entry_count(), ascending per row
  std::vector<Scalar> values;      // size entry_count()

  Index entry_count() const { return static_cast<Index>(values.size()); }
  Index row_nnz(Index i) const { return row_offsets[i + 1] - row_offsets[i]; }

  std::span<const Index> row_cols(Index i) const {
    return {col_index.data() + row_offsets[i],
            static_cast<std::size_t>(row_nnz(i))};
  }
  std::span<const Scalar> row_values(Index i) const {
    return {values.data() + row_offsets[i], static_cast<std::size_t>(row_nnz(i))};
  }

  Index max_row_nnz() const {
    Index best = 0;
    for (Index i = 0; i < n_rows; ++i) best = std::max(best, row_nnz(i));
    return best;
  }

  /// Builds from unordered (row, col, value) triplets. Throws on duplicate
  /// coordinates, out-of-range indices, or non-finite values.
  static MaskedMatrixT from_triplets(
      Index n_rows, Index n_cols,
      std::vector<std::tuple<Index, Index, Scalar>> entries);

  /// Structural checks; throws std::runtime_error on violation.
  void require_valid() const;
};

/// Feature columns for the completion: n_cols() items (the columns of the
/// matrix being completed), n_features() candidate columns to select among.
template <class Scalar>
struct FeatureMatrixT {
  MatrixX<Scalar> values;  // n_cols x n_features

  Index n_cols() const { return values.rows(); }
  Index n_features() const { return values.cols(); }

  void require_valid() const {
    if (values.rows() < 1 || values.cols() < 1)
      throw std::runtime_error("feature matrix must be at least 1x1");
    if (!values.allFinite())
      throw std::runtime_error("feature matrix contains non-finite values");
  }
};

/// Strictly increasing feature indices; exactly the selected subset.
struct Support {
  std::vector<Index> indices;

  Index k() const { return static_cast<Index>(indices.size()); }
  bool contains(Index j) const {
    return std::binary_search(indices.begin(), indices.end(), j);
  }
  void require_valid(Index n_features) const {
    for (std::size_t t = 0; t < indices.size(); ++t) {
      if (indices[t] < 0 || indices[t] >= n_features)
        throw std::invalid_argument("support index out of range");
      if (t > 0 && indices[t] <= indices[t - 1])
        throw std::invalid_argument("support indices must be strictly increasing");
    }
  }
  friend bool operator==(const Support&, const Support&) = default;
};

/// Lexicographic order on the sorted index sequences.
inline bool lex_less(const Support& a, const Support& b) {
  return std::lexicographical_compare(a.indices.begin(), a.indices.end(),
                                      b.indices.begin(), b.indices.end());
}

template <class Scalar>
struct ProblemConfigT {
  Index k = 1;
  Scalar gamma = Scalar(1);
  Scalar tolerance = Scalar(1e-6);  // relative certificate slack
  std::uint64_t seed = 0;
  Index g0 = 100;          // row-sample budget before clamping to n
  Scalar c_const = Scalar(1);  // column-sample size multiplier
  Index max_iterations = 500;

  void require_valid() const {
    if (k < 1) throw std::invalid_argument("k must be >= 1");
    if (!(gamma > Scalar(0))) throw std::invalid_argument("gamma must be > 0");
    if (!(tolerance >= Scalar(0))) throw std::invalid_argument("tolerance must be >= 0");
    if (g0 < 1) throw std::invalid_argument("g0 must be >= 1");
    if (!(c_const > Scalar(0))) throw std::invalid_argument("c must be > 0");
    if (max_iterations < 1) throw std::invalid_argument("max_iterations must be >= 1");
  }
};

/// One linear under-estimator of the objective: value + gradient . (s - anchor)
/// for indicator vectors s.
template <class Scalar>
struct CutT {
  Support anchor;
  Scalar value = Scalar(0);
  VectorX<Scalar> gradient;  // length n_features, componentwise <= 0
  bool stochastic = false;
};

/// Row/column subsample: `rows` are the g sampled row ids (ascending);
/// `row_cols[t]` are the f sampled column ids for rows[t] (ascending).
struct SamplePlan {
  Index f = 0;
  Index g = 0;
  std::vector<Index> rows;
  std::vector<std::vector<Index>> row_cols;

  void require_valid(Index n_rows, Index n_cols) const {
    if (g != static_cast<Index>(rows.size()))
      throw std::invalid_argument("sample plan: g != rows.size()");
    if (rows.size() != row_cols.size())
      throw std::invalid_argument("sample plan: rows/row_cols size mismatch");
    if (f < 1 || f > n_cols || g < 1 || g > n_rows)
      throw std::invalid_argument("sample plan: f or g out of range");
    for (std::size_t t = 0; t < rows.size(); ++t) {
      if (rows[t] < 0 || rows[t] >= n_rows)
        throw std::invalid_argument("sample plan: row id out of range");
      if (t > 0 && rows[t] <= rows[t - 1])
        throw std::invalid_argument("sample plan: rows must be strictly increasing");
      if (static_cast<Index>(row_cols[t].size()) != f)
        throw std::invalid_argument("sample plan: row sample has wrong size");
    }
  }
};

struct Diagnostics {
  std::vector<std::string> warnings;
  Index empty_rows = 0;
  int certification_retries = 0;
  std::uint64_t master_nodes = 0;
  Index exact_evaluations = 0;
  Index stochastic_evaluations = 0;
};

template <class Scalar>
struct CompletionResultT {
  Support support;
  MatrixX<Scalar> row_coefficients;  // n_rows x k; row i holds u_i
  std::vector<std::pair<Scalar, Scalar>> objective_trace;  // (eta_t, c(s_t))
  double elapsed_seconds = 0;
  bool exact_certified = false;
  Diagnostics diagnostics;
};

enum class Algorithm { exact, stochastic };

inline const char* algorithm_name(Algorithm a) {
  return a == Algorithm::exact ? "exact" : "stochastic";
}

using MaskedMatrix = MaskedMatrixT<double>;
using FeatureMatrix = FeatureMatrixT<double>;
using ProblemConfig = ProblemConfigT<double>;
using Cut = CutT<double>;
using CompletionResult = CompletionResultT<double>;

// --- implementation ---

template <class Scalar>
MaskedMatrixT<Scalar> MaskedMatrixT<Scalar>::from_triplets(
    Index n_rows, Index n_cols,
    std::vector<std::tuple<Index, Index, Scalar>> entries) {
  if (n_rows < 1 || n_cols < 1)
    throw std::invalid_argument("matrix dimensions must be positive");
  for (const auto& [i, j, v] : entries) {
    if (i < 0 || i >= n_rows || j < 0 || j >= n_cols)
      throw std::runtime_error("entry (" + std::to_string(i) + "," +
                               std::to_string(j) + ") out of range for " +
                               std::to_string(n_rows) + "x" + std::to_string(n_cols));
    if (!std::isfinite(static_cast<double>(v)))
      throw std::runtime_error("entry (" + std::to_string(i) + "," +
                               std::to_string(j) + ") has non-finite value");
  }
  std::sort(entries.begin(), entries.end(), [](const auto& a, const auto& b) {
    return std::get<0>(a) != std::get<0>(b) ? std::get<0>(a) < std::get<0>(b)
                                            : std::get<1>(a) < std::get<1>(b);
  });
  for (std::size_t t = 1; t < entries.size(); ++t) {
    if (std::get<0>(entries[t]) == std::get<0>(entries[t - 1]) &&
        std::get<1>(entries[t]) == std::get<1>(entries[t - 1]))
      throw std::runtime_error("duplicate entry at (" +
                               std::to_string(std::get<0>(entries[t])) + "," +
                               std::to_string(std::get<1>(entries[t])) + ")");
  }
  MaskedMatrixT out;
  out.n_rows = n_rows;
  out.n_cols = n_cols;
  out.row_offsets.assign(static_cast<std::size_t>(n_rows) + 1, 0);
  out.col_index.reserve(entries.size());
  out.values.reserve(entries.size());
  for (const auto& [i, j, v] : entries) ++out.row_offsets[static_cast<std::size_t>(i) + 1];
  for (Index i = 0; i < n_rows; ++i) out.row_offsets[i + 1] += out.row_offsets[i];
  for (const auto& [i, j, v] : entries) {
    out.col_index.push_back(j);
    out.values.push_back(v);
  }
  return out;
}

template <class Scalar>
void MaskedMatrixT<Scalar>::require_valid() const {
  if (n_rows < 1 || n_cols < 1)
    throw std::runtime_error("masked matrix dimensions must be positive");
  if (row_offsets.size() != static_cast<std::size_t>(n_rows) + 1 ||
      row_offsets.front() != 0 ||
      row_offsets.back() != entry_count() ||
      col_index.size() != values.size())
    throw std::runtime_error("masked matrix: inconsistent CSR structure");
  for (Index i = 0; i < n_rows; ++i) {
    if (row_offsets[i] > row_offsets[i + 1])
      throw std::runtime_error("masked matrix: row offsets not monotone");
    auto cols = row_cols(i);
    for (std::size_t t = 0; t < cols.size(); ++t) {
      if (cols[t] < 0 || cols[t] >= n_cols)
        throw std::runtime_error("masked matrix: column index out of range");
      if (t > 0 && cols[t] <= cols[t - 1])
        throw std::runtime_error("masked matrix: columns not strictly increasing in row " +
                                 std::to_string(i));
    }
  }
  for (const Scalar& v : values)
    if (!std::isfinite(static_cast<double>(v)))
      throw std::runtime_error("masked matrix: non-finite value");
}

}  // namespace optcomplete
