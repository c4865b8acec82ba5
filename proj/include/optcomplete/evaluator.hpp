#pragma once

#include <Eigen/Cholesky>

#include <optional>

#include "optcomplete/parallel.hpp"
#include "optcomplete/types.hpp"

namespace optcomplete {

// Objective being minimized over supports s of size k:
//   c(s) = (1/(n m)) sum_i  a_i . r_i(s)
// where, per row i with observed columns O_i (values a_i),
//   V_hat = B(O_i, s)                      (|O_i| x k)
//   M     = I/gamma + V_hat^T V_hat        (SPD)
//   z     = M^{-1} V_hat^T a_i
//   r_i   = a_i - V_hat z                  (the observed part of gamma_i(s))
// and the full-length gamma_i(s) is r_i scattered into zeros. The gradient is
//   dc/ds_j = -(gamma/(n m)) sum_i ( sum_t r_i[t] B(O_i[t], j) )^2  <= 0.
// Subsampled evaluation restricts rows to a sampled set G and each row's
// columns to F_i (intersected with O_i) and normalizes by g=|G|, f=|F_i|
// instead of n, m. Both paths run the identical code so a full-sample plan
// reproduces the exact numbers bit for bit, independent of worker count.

namespace detail {

template <class Scalar>
struct RowWorkspace {
  MatrixX<Scalar> V;      // cap_q x k
  VectorX<Scalar> a;      // cap_q
  VectorX<Scalar> r;      // cap_q
  VectorX<Scalar> y;      // k
  VectorX<Scalar> z;      // k
  MatrixX<Scalar> M;      // k x k
  VectorX<Scalar> w;      // n_features (gradient scratch)
  Eigen::LDLT<MatrixX<Scalar>> ldlt;
  std::vector<Index> positions;  // scratch for plan/row intersection

  RowWorkspace(Index cap_q, Index k, Index n_features)
      : V(cap_q, k), a(cap_q), r(cap_q), y(k), z(k), M(k, k), w(n_features) {
    positions.reserve(static_cast<std::size_t>(cap_q));
  }
};

// Positions of the participating entries inside row `i` of A: all observed
// entries for the exact path, or those whose column is in `sampled_cols`.
template <class Scalar>
void row_positions(const MaskedMatrixT<Scalar>& A, Index i,
                   const std::vector<Index>* sampled_cols,
                   std::vector<Index>& out) {
  out.clear();
  const Index nnz = A.row_nnz(i);
  if (!sampled_cols) {
    for (Index t = 0; t < nnz; ++t) out.push_back(t);
    return;
  }
  const auto cols = A.row_cols(i);
  std::size_t a = 0, b = 0;
  while (a < cols.size() && b < sampled_cols->size()) {
    const Index ca = cols[a], cb = (*sampled_cols)[b];
    if (ca < cb) ++a;
    else if (cb < ca) ++b;
    else { out.push_back(static_cast<Index>(a)); ++a; ++b; }
  }
}

// Ridge solve for one row over the given entry positions. Fills ws.a, ws.r
// (length q) and ws.z (length k); returns q. q == 0 means nothing observed.
template <class Scalar>
Index solve_row(const MaskedMatrixT<Scalar>& A, const FeatureMatrixT<Scalar>& B,
                const Support& s, Scalar gamma, Index i,
                const std::vector<Index>& positions, RowWorkspace<Scalar>& ws) {
  const Index q = static_cast<Index>(positions.size());
  if (q == 0) return 0;
  const Index k = s.k();
  const auto cols = A.row_cols(i);
  const auto vals = A.row_values(i);
  for (Index t = 0; t < q; ++t) ws.a[t] = vals[static_cast<std::size_t>(positions[static_cast<std::size_t>(t)])];
  for (Index c = 0; c < k; ++c) {
    const auto feature = B.values.col(s.indices[static_cast<std::size_t>(c)]);
    for (Index t = 0; t < q; ++t)
      ws.V(t, c) = feature[cols[static_cast<std::size_t>(positions[static_cast<std::size_t>(t)])]];
  }
  auto Vq = ws.V.topRows(q);
  auto aq = ws.a.head(q);
  ws.M.noalias() = Vq.transpose() * Vq;
  ws.M.diagonal().array() += Scalar(1) / gamma;
  ws.ldlt.compute(ws.M);
  ws.y.noalias() = Vq.transpose() * aq;
  ws.z = ws.ldlt.solve(ws.y);
  ws.r.head(q) = aq;
  ws.r.head(q).noalias() -= Vq * ws.z;
  return q;
}

template <class Scalar>
struct EvalSums {
  Scalar value_sum = Scalar(0);
  VectorX<Scalar> square_sum;  // per-feature, only when gradient requested
};

template <class Scalar>
EvalSums<Scalar> accumulate_masked(const MaskedMatrixT<Scalar>& A,
                                   const FeatureMatrixT<Scalar>& B,
                                   const Support& s, Scalar gamma,
                                   const SamplePlan* plan, bool want_gradient) {
  const Index p = B.n_features();
  const Index k = s.k();
  const Index items = plan ? static_cast<Index>(plan->rows.size()) : A.n_rows;
  const Index cap_q =
      plan ? std::min(A.max_row_nnz(), plan->f) : A.max_row_nnz();
  const Index blocks = parallel::block_count(items);

  std::vector<Scalar> block_value(static_cast<std::size_t>(blocks), Scalar(0));
  MatrixX<Scalar> block_squares;
  if (want_gradient) block_squares = MatrixX<Scalar>::Zero(p, blocks);

  parallel::for_each_block(
      items,
      [&] { return RowWorkspace<Scalar>(std::max<Index>(cap_q, 1), k, p); },
      [&](RowWorkspace<Scalar>& ws, Index block, Index begin, Index end) {
        for (Index item = begin; item < end; ++item) {
          const Index row = plan ? plan->rows[static_cast<std::size_t>(item)] : item;
          row_positions(A, row,
                        plan ? &plan->row_cols[static_cast<std::size_t>(item)] : nullptr,
                        ws.positions);
          const Index q = solve_row(A, B, s, gamma, row, ws.positions, ws);
          if (q == 0) continue;
          block_value[static_cast<std::size_t>(block)] +=
              ws.a.head(q).dot(ws.r.head(q));
          if (want_gradient) {
            const auto cols = A.row_cols(row);
            ws.w.setZero();
            for (Index t = 0; t < q; ++t)
              ws.w += ws.r[t] *
                      B.values.row(cols[static_cast<std::size_t>(
                                       ws.positions[static_cast<std::size_t>(t)])])
                          .transpose();
            block_squares.col(block) += ws.w.array().square().matrix();
          }
        }
      });

  EvalSums<Scalar> sums;
  for (Index b = 0; b < blocks; ++b)
    sums.value_sum += block_value[static_cast<std::size_t>(b)];
  if (want_gradient) {
    sums.square_sum = VectorX<Scalar>::Zero(p);
    for (Index b = 0; b < blocks; ++b) sums.square_sum += block_squares.col(b);
  }
  return sums;
}

template <class Scalar>
void check_problem(const MaskedMatrixT<Scalar>& A, const FeatureMatrixT<Scalar>& B,
                   const Support& s, Scalar gamma) {
  if (A.n_cols != B.n_cols())
    throw std::invalid_argument("matrix/feature column count mismatch");
  if (s.k() < 1) throw std::invalid_argument("support must be nonempty");
  s.require_valid(B.n_features());
  if (!(gamma > Scalar(0))) throw std::invalid_argument("gamma must be > 0");
}

}  // namespace detail

/// Exact objective value c(s).
template <class Scalar>
Scalar cost(const MaskedMatrixT<Scalar>& A, const FeatureMatrixT<Scalar>& B,
            const Support& s, Scalar gamma) {
  detail::check_problem(A, B, s, gamma);
  const auto sums = detail::accumulate_masked(A, B, s, gamma, nullptr, false);
  return sums.value_sum / (Scalar(A.n_cols) * Scalar(A.n_rows));
}

/// Exact gradient of c at s; every component is <= 0.
template <class Scalar>
VectorX<Scalar> cost_gradient(const MaskedMatrixT<Scalar>& A,
                              const FeatureMatrixT<Scalar>& B, const Support& s,
                              Scalar gamma) {
  detail::check_problem(A, B, s, gamma);
  const auto sums = detail::accumulate_masked(A, B, s, gamma, nullptr, true);
  return sums.square_sum *
         (-gamma / (Scalar(A.n_cols) * Scalar(A.n_rows)));
}

/// Exact value and gradient at s packaged as a cut.
template <class Scalar>
CutT<Scalar> make_cut(const MaskedMatrixT<Scalar>& A,
                      const FeatureMatrixT<Scalar>& B, const Support& s,
                      Scalar gamma) {
  detail::check_problem(A, B, s, gamma);
  const auto sums = detail::accumulate_masked(A, B, s, gamma, nullptr, true);
  const Scalar scale = Scalar(A.n_cols) * Scalar(A.n_rows);
  CutT<Scalar> cut;
  cut.anchor = s;
  cut.value = sums.value_sum / scale;
  cut.gradient = sums.square_sum * (-gamma / scale);
  cut.stochastic = false;
  return cut;
}

/// Cut evaluated at another support: value + gradient . (s' - anchor) for
/// indicator vectors. Summation runs in ascending index order, matching the
/// master solver's arithmetic exactly.
template <class Scalar>
Scalar cut_value_at(const CutT<Scalar>& cut, const Support& at) {
  Scalar offset = cut.value;
  for (Index j : cut.anchor.indices) offset -= cut.gradient[j];
  Scalar v = offset;
  for (Index j : at.indices) v += cut.gradient[j];
  return v;
}

/// Full-length gamma_i(s) for one row: zero at unobserved coordinates.
template <class Scalar>
VectorX<Scalar> row_gamma(const MaskedMatrixT<Scalar>& A,
                          const FeatureMatrixT<Scalar>& B, const Support& s,
                          Scalar gamma, Index i) {
  detail::check_problem(A, B, s, gamma);
  if (i < 0 || i >= A.n_rows) throw std::invalid_argument("row index out of range");
  detail::RowWorkspace<Scalar> ws(std::max<Index>(A.row_nnz(i), 1), s.k(),
                                  B.n_features());
  detail::row_positions(A, i, nullptr, ws.positions);
  const Index q = detail::solve_row(A, B, s, gamma, i, ws.positions, ws);
  VectorX<Scalar> dense = VectorX<Scalar>::Zero(A.n_cols);
  const auto cols = A.row_cols(i);
  for (Index t = 0; t < q; ++t) dense[cols[static_cast<std::size_t>(t)]] = ws.r[t];
  return dense;
}

template <class Scalar>
struct FillResult {
  MatrixX<Scalar> row_coefficients;  // n_rows x k
  Index empty_rows = 0;              // rows with no observations (coeffs = 0)
};

/// Per-row ridge coefficients for the chosen support. Row i of the completed
/// matrix is row_coefficients.row(i) * B(:, s)^T; see predict_entry.
template <class Scalar>
FillResult<Scalar> fill_rows(const MaskedMatrixT<Scalar>& A,
                             const FeatureMatrixT<Scalar>& B, const Support& s,
                             Scalar gamma) {
  detail::check_problem(A, B, s, gamma);
  const Index k = s.k();
  FillResult<Scalar> out;
  out.row_coefficients = MatrixX<Scalar>::Zero(A.n_rows, k);
  const Index cap_q = std::max<Index>(A.max_row_nnz(), 1);
  std::vector<Index> empty_per_block(
      static_cast<std::size_t>(parallel::block_count(A.n_rows)), 0);
  parallel::for_each_block(
      A.n_rows,
      [&] { return detail::RowWorkspace<Scalar>(cap_q, k, B.n_features()); },
      [&](detail::RowWorkspace<Scalar>& ws, Index block, Index begin, Index end) {
        for (Index i = begin; i < end; ++i) {
          detail::row_positions(A, i, nullptr, ws.positions);
          const Index q = detail::solve_row(A, B, s, gamma, i, ws.positions, ws);
          if (q == 0) {
            ++empty_per_block[static_cast<std::size_t>(block)];
            continue;
          }
          out.row_coefficients.row(i) = ws.z.transpose();
        }
      });
  for (Index count : empty_per_block) out.empty_rows += count;
  return out;
}

/// Completed value at (i, j) from fill_rows coefficients.
template <class Scalar>
Scalar predict_entry(const MatrixX<Scalar>& row_coefficients,
                     const FeatureMatrixT<Scalar>& B, const Support& s,
                     Index i, Index j) {
  Scalar v = Scalar(0);
  for (Index c = 0; c < s.k(); ++c)
    v += row_coefficients(i, c) * B.values(j, s.indices[static_cast<std::size_t>(c)]);
  return v;
}

}  // namespace optcomplete
