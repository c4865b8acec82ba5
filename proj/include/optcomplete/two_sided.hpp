#pragma once

#include <cmath>
#include <cstdio>
#include <fstream>
#include <string>

#include "optcomplete/io.hpp"
#include "optcomplete/types.hpp"

namespace optcomplete {

/// Completion with feature sides on both axes reduces to one sparse
/// regression: entry (i, j) gets the design row u_i (x) b_j (the outer
/// product of row features and column features, flattened), with the
/// observed value as its target. Coefficient (q, l) lives at flat index
/// q * p2 + l.
template <class Scalar>
struct TwoSidedInstanceT {
  MatrixX<Scalar> design;   // one row per observed entry, p1 * p2 columns
  VectorX<Scalar> targets;
  std::vector<std::pair<Index, Index>> entries;  // (i, j) per design row
  Index p1 = 0;
  Index p2 = 0;
  Index k = 0;
  Scalar gamma = Scalar(0);

  Index flat_index(Index q, Index l) const { return q * p2 + l; }
  std::pair<Index, Index> unflatten(Index flat) const {
    return {flat / p2, flat % p2};
  }
};

using TwoSidedInstance = TwoSidedInstanceT<double>;

/// Materializes the dense design matrix in row-major entry order. Guarded by
/// an element cap since |observed| * p1 * p2 grows quickly.
template <class Scalar>
TwoSidedInstanceT<Scalar> reduce_two_sided(
    const MaskedMatrixT<Scalar>& A, const FeatureMatrixT<Scalar>& row_features,
    const FeatureMatrixT<Scalar>& col_features, Index k, Scalar gamma,
    double max_elements = 5e7) {
  A.require_valid();
  row_features.require_valid();
  col_features.require_valid();
  if (row_features.n_cols() != A.n_rows)
    throw std::invalid_argument(
        "row feature table must have one row per matrix row");
  if (col_features.n_cols() != A.n_cols)
    throw std::invalid_argument(
        "column feature table must have one row per matrix column");
  const Index p1 = row_features.n_features();
  const Index p2 = col_features.n_features();
  if (k < 1 || k > p1 * p2)
    throw std::invalid_argument("k must be between 1 and p1 * p2");
  if (!(gamma > Scalar(0)) || !std::isfinite(static_cast<double>(gamma)))
    throw std::invalid_argument("gamma must be positive and finite");
  const Index nnz = A.entry_count();
  const double elements = static_cast<double>(nnz) *
                          static_cast<double>(p1) * static_cast<double>(p2);
  if (elements > max_elements) {
    char msg[160];
    std::snprintf(msg, sizeof(msg),
                  "design matrix would hold %.0f elements, above the cap of "
                  "%.0f; raise the cap to proceed",
                  elements, max_elements);
    throw std::runtime_error(msg);
  }

  TwoSidedInstanceT<Scalar> out;
  out.p1 = p1;
  out.p2 = p2;
  out.k = k;
  out.gamma = gamma;
  out.design.resize(nnz, p1 * p2);
  out.targets.resize(nnz);
  out.entries.reserve(static_cast<std::size_t>(nnz));
  Index r = 0;
  for (Index i = 0; i < A.n_rows; ++i) {
    const auto cols = A.row_cols(i);
    const auto vals = A.row_values(i);
    for (std::size_t t = 0; t < cols.size(); ++t, ++r) {
      const Index j = cols[t];
      out.entries.emplace_back(i, j);
      out.targets[r] = vals[t];
      for (Index q = 0; q < p1; ++q) {
        const Scalar u = row_features.values(i, q);
        for (Index l = 0; l < p2; ++l)
          out.design(r, q * p2 + l) = u * col_features.values(j, l);
      }
    }
  }
  return out;
}

/// CSV with the design columns then the target; plus an index-map sidecar
/// explaining flat column -> (row-feature, column-feature) indices.
template <class Scalar>
void save_two_sided(const std::string& csv_path, const std::string& map_path,
                    const TwoSidedInstanceT<Scalar>& instance) {
  {
    std::ofstream out(csv_path);
    if (!out) throw std::runtime_error("cannot write '" + csv_path + "'");
    for (Index c = 0; c < instance.design.cols(); ++c)
      out << 'd' << c << ',';
    out << "target\n";
    for (Index r = 0; r < instance.design.rows(); ++r) {
      for (Index c = 0; c < instance.design.cols(); ++c)
        out << detail::fmt17(static_cast<double>(instance.design(r, c))) << ',';
      out << detail::fmt17(static_cast<double>(instance.targets[r])) << '\n';
    }
    if (!out) throw std::runtime_error("write failed for '" + csv_path + "'");
  }
  {
    std::ofstream out(map_path);
    if (!out) throw std::runtime_error("cannot write '" + map_path + "'");
    out << "# sparsity k=" << instance.k << " gamma="
        << detail::fmt17(static_cast<double>(instance.gamma)) << '\n';
    out << "flat,row_feature,col_feature\n";
    for (Index flat = 0; flat < instance.p1 * instance.p2; ++flat) {
      const auto [q, l] = instance.unflatten(flat);
      out << flat << ',' << q << ',' << l << '\n';
    }
    if (!out) throw std::runtime_error("write failed for '" + map_path + "'");
  }
}

}  // namespace optcomplete
