#pragma once

#include <cmath>

#include "optcomplete/evaluator.hpp"
#include "optcomplete/rng.hpp"
#include "optcomplete/types.hpp"

namespace optcomplete {

struct SampleSizes {
  Index f = 1;  // columns per sampled row
  Index g = 1;  // sampled rows
};

/// Sample-size rule balancing estimator noise against cost: g rows capped at
/// g0, then f ~ c k sqrt(mn) ln(sqrt(mn)) / (alpha g) columns, where alpha is
/// the observed fraction. Both clamped to [1, m] / [1, n].
template <class Scalar>
SampleSizes sample_sizes(Index n, Index m, Scalar alpha, Index k, Index g0,
                         Scalar c_const) {
  if (n < 1 || m < 1) throw std::invalid_argument("sample_sizes: n, m must be >= 1");
  if (!(alpha > Scalar(0)) || alpha > Scalar(1))
    throw std::invalid_argument("sample_sizes: alpha must be in (0, 1]");
  if (k < 1) throw std::invalid_argument("sample_sizes: k must be >= 1");
  if (g0 < 1) throw std::invalid_argument("sample_sizes: g0 must be >= 1");
  if (!(c_const > Scalar(0)))
    throw std::invalid_argument("sample_sizes: c must be > 0");
  SampleSizes out;
  out.g = std::min(g0, n);
  const double root = std::sqrt(static_cast<double>(m) * static_cast<double>(n));
  const double raw = static_cast<double>(c_const) * static_cast<double>(k) *
                     root * std::log(root) /
                     (static_cast<double>(alpha) * static_cast<double>(out.g));
  const double ceiled = std::ceil(raw);
  out.f = ceiled >= static_cast<double>(m) ? m : static_cast<Index>(ceiled);
  if (out.f < 1) out.f = 1;
  return out;
}

/// Draws the row set G and one column set F_i per sampled row, all uniform
/// without replacement. Every set is keyed by (seed, iteration, row), so a
/// plan can be regenerated piecewise and is independent of draw order.
inline SamplePlan draw_plan(Index n, Index m, Index f, Index g,
                            std::uint64_t seed, Index iteration) {
  if (f < 1 || f > m || g < 1 || g > n)
    throw std::invalid_argument("draw_plan: f or g out of range");
  SamplePlan plan;
  plan.f = f;
  plan.g = g;
  {
    SplitMix64 rows_rng(seed ^ stream::plan_rows,
                        static_cast<std::uint64_t>(iteration));
    plan.rows = sample_without_replacement(rows_rng, n, g);
  }
  plan.row_cols.resize(static_cast<std::size_t>(g));
  for (Index t = 0; t < g; ++t) {
    SplitMix64 cols_rng(seed ^ stream::plan_cols,
                        static_cast<std::uint64_t>(iteration),
                        static_cast<std::uint64_t>(plan.rows[static_cast<std::size_t>(t)]));
    plan.row_cols[static_cast<std::size_t>(t)] =
        sample_without_replacement(cols_rng, m, f);
  }
  return plan;
}

/// Subsampled estimate of the objective and its gradient at s, packaged as a
/// cut. With f = n_cols and g = n_rows this reproduces make_cut bit for bit.
template <class Scalar>
CutT<Scalar> stochastic_cost_gradient(const MaskedMatrixT<Scalar>& A,
                                      const FeatureMatrixT<Scalar>& B,
                                      const Support& s, Scalar gamma,
                                      const SamplePlan& plan) {
  detail::check_problem(A, B, s, gamma);
  plan.require_valid(A.n_rows, A.n_cols);
  const auto sums = detail::accumulate_masked(A, B, s, gamma, &plan, true);
  const Scalar scale = Scalar(plan.f) * Scalar(plan.g);
  CutT<Scalar> cut;
  cut.anchor = s;
  cut.value = sums.value_sum / scale;
  cut.gradient = sums.square_sum * (-gamma / scale);
  cut.stochastic = true;
  return cut;
}

/// Value-only variant (same arithmetic as the cut's value).
template <class Scalar>
Scalar stochastic_cost(const MaskedMatrixT<Scalar>& A,
                       const FeatureMatrixT<Scalar>& B, const Support& s,
                       Scalar gamma, const SamplePlan& plan) {
  detail::check_problem(A, B, s, gamma);
  plan.require_valid(A.n_rows, A.n_cols);
  const auto sums = detail::accumulate_masked(A, B, s, gamma, &plan, false);
  return sums.value_sum / (Scalar(plan.f) * Scalar(plan.g));
}

}  // namespace optcomplete
