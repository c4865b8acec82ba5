#pragma once

#include <chrono>
#include <limits>
#include <map>
#include <optional>

#include "optcomplete/evaluator.hpp"
#include "optcomplete/master_solver.hpp"
#include "optcomplete/sampler.hpp"
#include "optcomplete/types.hpp"

namespace optcomplete {

namespace detail {

inline constexpr double kCertifyFloor = 1e-12;  // roundoff guard at tolerance 0
inline constexpr int kMaxCertificationRetries = 8;

// Termination test: the lower bound has closed to within `tolerance` of the
// evaluated objective (absolute gap). The floor keeps a tolerance of zero
// from spinning on last-bit roundoff.
template <class Scalar>
bool certificate_holds(Scalar eta, Scalar value, Scalar tolerance) {
  return value - eta <= std::max<Scalar>(tolerance, Scalar(kCertifyFloor));
}

template <class Scalar>
struct Incumbent {
  bool valid = false;
  Scalar value = std::numeric_limits<Scalar>::infinity();
  Support support;

  void offer(const Support& s, Scalar v) {
    if (!valid || v < value || (v == value && lex_less(s, support))) {
      valid = true;
      value = v;
      support = s;
    }
  }
};

}  // namespace detail

/// Uniform random size-k support, deterministic in the seed.
inline Support random_support(Index n_features, Index k, std::uint64_t seed) {
  if (k < 1 || k > n_features)
    throw std::invalid_argument("random_support: need 1 <= k <= n_features");
  SplitMix64 rng(seed ^ stream::warm_start);
  Support s;
  s.indices = sample_without_replacement(rng, n_features, k);
  return s;
}

/// Starting support for a driver. The exact driver seeds with greedy forward
/// selection scored on one small fixed subsample; the stochastic driver with
/// a uniform random subset. With k == n_features there is nothing to choose.
template <class Scalar>
Support warm_start(const MaskedMatrixT<Scalar>& A, const FeatureMatrixT<Scalar>& B,
                   const ProblemConfigT<Scalar>& config, Algorithm algo) {
  config.require_valid();
  const Index p = B.n_features();
  const Index k = config.k;
  if (k > p) throw std::invalid_argument("warm_start: k exceeds feature count");
  if (k == p) {
    Support s;
    for (Index j = 0; j < p; ++j) s.indices.push_back(j);
    return s;
  }
  if (algo == Algorithm::stochastic) return random_support(p, k, config.seed);

  const Index g = std::min<Index>(50, A.n_rows);
  const Index f = std::min<Index>(200, A.n_cols);
  const SamplePlan plan = draw_plan(A.n_rows, A.n_cols, f, g, config.seed, 0);
  Support chosen;
  for (Index step = 0; step < k; ++step) {
    Index best_j = -1;
    Scalar best_v = std::numeric_limits<Scalar>::infinity();
    for (Index j = 0; j < p; ++j) {
      if (chosen.contains(j)) continue;
      Support trial = chosen;
      trial.indices.insert(
          std::lower_bound(trial.indices.begin(), trial.indices.end(), j), j);
      const Scalar v = stochastic_cost(A, B, trial, config.gamma, plan);
      if (v < best_v) {
        best_v = v;
        best_j = j;
      }
    }
    chosen.indices.insert(
        std::lower_bound(chosen.indices.begin(), chosen.indices.end(), best_j),
        best_j);
  }
  return chosen;
}

namespace detail {

template <class Scalar>
void check_driver_inputs(const MaskedMatrixT<Scalar>& A,
                         const FeatureMatrixT<Scalar>& B,
                         const ProblemConfigT<Scalar>& config) {
  config.require_valid();
  A.require_valid();
  B.require_valid();
  if (A.n_cols != B.n_cols())
    throw std::invalid_argument("matrix/feature column count mismatch");
  if (config.k > B.n_features())
    throw std::invalid_argument("k exceeds feature count");
  if (A.entry_count() < 1)
    throw std::invalid_argument("matrix has no observed entries");
}

template <class Scalar>
void finalize(const MaskedMatrixT<Scalar>& A, const FeatureMatrixT<Scalar>& B,
              Scalar gamma, CompletionResultT<Scalar>& result,
              std::chrono::steady_clock::time_point start) {
  auto fill = fill_rows(A, B, result.support, gamma);
  result.row_coefficients = std::move(fill.row_coefficients);
  result.diagnostics.empty_rows = fill.empty_rows;
  if (fill.empty_rows > 0)
    result.diagnostics.warnings.push_back(
        std::to_string(fill.empty_rows) +
        " row(s) have no observed entries; their completions are zero");
  result.elapsed_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start)
          .count();
}

// Both drivers share this loop. The exact driver cuts with the true value and
// gradient each round; the stochastic driver cuts with subsampled estimates
// and, once the certificate test passes, re-checks it against one exact cut,
// doubling the row sample and continuing on failure (bounded retries).
template <class Scalar>
CompletionResultT<Scalar> run_cutting_planes(
    const MaskedMatrixT<Scalar>& A, const FeatureMatrixT<Scalar>& B,
    const ProblemConfigT<Scalar>& config, Algorithm algo,
    std::optional<Support> initial) {
  const auto start = std::chrono::steady_clock::now();
  check_driver_inputs(A, B, config);
  const Index n = A.n_rows, m = A.n_cols, p = B.n_features(), k = config.k;
  const Scalar gamma = config.gamma;

  CompletionResultT<Scalar> result;
  Diagnostics& diag = result.diagnostics;

  Support s;
  if (initial) {
    initial->require_valid(p);
    if (initial->k() != k)
      throw std::invalid_argument("initial support has wrong size");
    s = std::move(*initial);
  } else {
    s = warm_start(A, B, config, algo);
  }

  if (k == p) {
    // Unique feasible support: one exact evaluation settles everything.
    const Scalar c = cost(A, B, s, gamma);
    ++diag.exact_evaluations;
    result.support = std::move(s);
    result.objective_trace.emplace_back(Scalar(0), c);
    result.exact_certified = true;
    finalize(A, B, gamma, result, start);
    return result;
  }

  SampleSizes sizes;
  if (algo == Algorithm::stochastic) {
    const Scalar alpha = Scalar(A.entry_count()) / (Scalar(n) * Scalar(m));
    sizes = sample_sizes(n, m, alpha, k, config.g0, config.c_const);
  }

  MasterProblemT<Scalar> pool;
  pool.n_features = p;
  pool.k = k;
  Scalar eta = Scalar(0);
  Incumbent<Scalar> incumbent;
  std::map<std::vector<Index>, Scalar> cost_cache;
  int retries = 0;
  bool certified = false;
  bool have_final = false;

  auto exact_cost_of = [&](const Support& at) {
    auto found = cost_cache.find(at.indices);
    if (found != cost_cache.end()) return found->second;
    const Scalar v = cost(A, B, at, gamma);
    ++diag.exact_evaluations;
    cost_cache.emplace(at.indices, v);
    return v;
  };

  for (Index t = 1; t <= config.max_iterations; ++t) {
    std::optional<CutT<Scalar>> exact_cut;
    Scalar c_s;
    if (algo == Algorithm::exact) {
      exact_cut = make_cut(A, B, s, gamma);
      ++diag.exact_evaluations;
      c_s = exact_cut->value;
    } else {
      c_s = exact_cost_of(s);
    }
    result.objective_trace.emplace_back(eta, c_s);
    incumbent.offer(s, c_s);

    if (certificate_holds(eta, c_s, config.tolerance)) {
      if (algo == Algorithm::exact) {
        result.support = std::move(s);
        certified = have_final = true;
        break;
      }
      // Stochastic certificate: back it with one exact cut at s.
      pool.cuts.push_back(make_cut(A, B, s, gamma));
      ++diag.exact_evaluations;
      auto sol = solve_master(pool, s);
      diag.master_nodes += sol.nodes;
      const Scalar eta2 = std::max<Scalar>(Scalar(0), sol.eta);
      if (certificate_holds(eta2, c_s, config.tolerance)) {
        result.support = std::move(s);
        certified = have_final = true;
        break;
      }
      ++retries;
      ++diag.certification_retries;
      if (retries >= kMaxCertificationRetries) {
        diag.warnings.push_back(
            "certification retries exhausted; returning best support seen");
        break;
      }
      sizes.g = std::min<Index>(sizes.g * 2, n);
      eta = eta2;
      s = std::move(sol.support);
      continue;
    }

    if (algo == Algorithm::exact) {
      pool.cuts.push_back(std::move(*exact_cut));
    } else {
      const SamplePlan plan = draw_plan(n, m, sizes.f, sizes.g, config.seed, t);
      pool.cuts.push_back(stochastic_cost_gradient(A, B, s, gamma, plan));
      ++diag.stochastic_evaluations;
    }
    auto sol = solve_master(pool, s);
    diag.master_nodes += sol.nodes;
    eta = std::max<Scalar>(Scalar(0), sol.eta);
    s = std::move(sol.support);
  }

  if (!have_final) {
    if (result.objective_trace.size() ==
        static_cast<std::size_t>(config.max_iterations))
      diag.warnings.push_back(
          "iteration limit reached without an optimality certificate");
    result.support = incumbent.support;
  }
  result.exact_certified = certified;
  finalize(A, B, gamma, result, start);
  return result;
}

}  // namespace detail

/// Exact cutting-plane driver: every cut carries the true objective value and
/// gradient, so the returned support is optimal within config.tolerance
/// whenever exact_certified is true.
template <class Scalar>
CompletionResultT<Scalar> cutting_planes(const MaskedMatrixT<Scalar>& A,
                                         const FeatureMatrixT<Scalar>& B,
                                         const ProblemConfigT<Scalar>& config,
                                         std::optional<Support> initial = {}) {
  return detail::run_cutting_planes(A, B, config, Algorithm::exact,
                                    std::move(initial));
}

/// Stochastic driver: cuts are subsampled estimates (sample sizes from
/// config.g0 / config.c_const), with an exact certification pass before any
/// claimed optimality. With full-sample settings it matches cutting_planes.
template <class Scalar>
CompletionResultT<Scalar> stochastic_cutting_planes(
    const MaskedMatrixT<Scalar>& A, const FeatureMatrixT<Scalar>& B,
    const ProblemConfigT<Scalar>& config, std::optional<Support> initial = {}) {
  return detail::run_cutting_planes(A, B, config, Algorithm::stochastic,
                                    std::move(initial));
}

/// Dispatch by algorithm tag.
template <class Scalar>
CompletionResultT<Scalar> complete(const MaskedMatrixT<Scalar>& A,
                                   const FeatureMatrixT<Scalar>& B,
                                   const ProblemConfigT<Scalar>& config,
                                   Algorithm algo,
                                   std::optional<Support> initial = {}) {
  return detail::run_cutting_planes(A, B, config, algo, std::move(initial));
}

}  // namespace optcomplete
