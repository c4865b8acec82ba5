#pragma once

#include <algorithm>
#include <fstream>
#include <functional>
#include <limits>
#include <string>

#include "optcomplete/drivers.hpp"
#include "optcomplete/io.hpp"
#include "optcomplete/rng.hpp"
#include "optcomplete/types.hpp"

namespace optcomplete::bench {

struct SyntheticSpec {
  Index n = 100;       // matrix rows
  Index m = 100;       // matrix columns
  Index p = 15;        // candidate feature columns
  Index k = 5;         // planted rank / selected columns
  double mu = 0.5;     // masked fraction
  double noise_sd = 0; // additive Gaussian noise on every entry
  std::uint64_t seed = 0;

  void require_valid() const {
    if (n < 1 || m < 1) throw std::invalid_argument("synthetic spec: n, m must be >= 1");
    if (k < 1 || k > p) throw std::invalid_argument("synthetic spec: need 1 <= k <= p");
    if (!(mu >= 0.0) || mu >= 1.0)
      throw std::invalid_argument("synthetic spec: mu must be in [0, 1)");
    if (!(noise_sd >= 0.0))
      throw std::invalid_argument("synthetic spec: noise_sd must be >= 0");
    if (static_cast<double>(n) * static_cast<double>(m) > 5e8)
      throw std::invalid_argument("synthetic spec: n*m too large for dense truth");
  }
};

template <class Scalar>
struct SyntheticInstanceT {
  MaskedMatrixT<Scalar> observed;
  FeatureMatrixT<Scalar> features;           // k planted + (p - k) decoys, shuffled
  Support true_support;                      // where the planted columns landed
  MatrixX<Scalar> truth;                     // n x m, includes the noise
  std::vector<std::pair<Index, Index>> masked;  // row-major order
};

using SyntheticInstance = SyntheticInstanceT<double>;

/// Planted low-rank instance: truth = U V + noise with U (n x k), V (k x m),
/// decoy rows Z ((p-k) x m), all entries uniform on [0, 1). The feature table
/// holds the k rows of V and the decoys in shuffled column order. Exactly
/// round(mu * n * m) entries are masked, uniformly without replacement.
template <class Scalar = double>
SyntheticInstanceT<Scalar> generate(const SyntheticSpec& spec) {
  spec.require_valid();
  const Index n = spec.n, m = spec.m, p = spec.p, k = spec.k;
  SyntheticInstanceT<Scalar> inst;

  MatrixX<Scalar> U(n, k), V(k, m), Z(p - k, m);
  {
    SplitMix64 rng(spec.seed ^ stream::factor_u);
    for (Index i = 0; i < n; ++i)
      for (Index t = 0; t < k; ++t) U(i, t) = Scalar(rng.next_double());
  }
  {
    SplitMix64 rng(spec.seed ^ stream::factor_v);
    for (Index t = 0; t < k; ++t)
      for (Index j = 0; j < m; ++j) V(t, j) = Scalar(rng.next_double());
  }
  {
    SplitMix64 rng(spec.seed ^ stream::extra_z);
    for (Index t = 0; t < p - k; ++t)
      for (Index j = 0; j < m; ++j) Z(t, j) = Scalar(rng.next_double());
  }

  inst.truth.noalias() = U * V;
  if (spec.noise_sd > 0) {
    SplitMix64 rng(spec.seed ^ stream::noise);
    for (Index i = 0; i < n; ++i)
      for (Index j = 0; j < m; ++j)
        inst.truth(i, j) += Scalar(spec.noise_sd * rng.next_normal());
  }

  inst.features.values.resize(m, p);
  {
    SplitMix64 rng(spec.seed ^ stream::shuffle);
    const std::vector<Index> perm = random_permutation(rng, p);
    for (Index t = 0; t < k; ++t)
      inst.features.values.col(perm[static_cast<std::size_t>(t)]) =
          V.row(t).transpose();
    for (Index t = 0; t < p - k; ++t)
      inst.features.values.col(perm[static_cast<std::size_t>(k + t)]) =
          Z.row(t).transpose();
    inst.true_support.indices.assign(perm.begin(), perm.begin() + k);
    std::sort(inst.true_support.indices.begin(), inst.true_support.indices.end());
  }

  const Index total = n * m;
  Index masked_count = static_cast<Index>(
      std::llround(spec.mu * static_cast<double>(total)));
  masked_count = std::min(masked_count, total - 1);  // keep >= 1 observation
  std::vector<char> is_masked(static_cast<std::size_t>(total), 0);
  if (masked_count > 0) {
    SplitMix64 rng(spec.seed ^ stream::mask);
    // Sample whichever side is smaller; complement flips the flag meaning.
    const bool sample_observed = masked_count > total / 2;
    const Index draw = sample_observed ? total - masked_count : masked_count;
    for (Index flat : sample_without_replacement(rng, total, draw))
      is_masked[static_cast<std::size_t>(flat)] = 1;
    if (sample_observed)
      for (auto& flag : is_masked) flag = !flag;
  }

  inst.masked.reserve(static_cast<std::size_t>(masked_count));
  auto& M = inst.observed;
  M.n_rows = n;
  M.n_cols = m;
  M.row_offsets.assign(static_cast<std::size_t>(n) + 1, 0);
  M.col_index.reserve(static_cast<std::size_t>(total - masked_count));
  M.values.reserve(static_cast<std::size_t>(total - masked_count));
  for (Index i = 0; i < n; ++i) {
    for (Index j = 0; j < m; ++j) {
      if (is_masked[static_cast<std::size_t>(i * m + j)]) {
        inst.masked.emplace_back(i, j);
      } else {
        M.col_index.push_back(j);
        M.values.push_back(inst.truth(i, j));
      }
    }
    M.row_offsets[i + 1] = static_cast<Index>(M.values.size());
  }
  return inst;
}

template <class Scalar>
struct MapeResult {
  Scalar percent = std::numeric_limits<Scalar>::quiet_NaN();
  Index used = 0;
  Index skipped = 0;  // |truth| <= 1e-12, excluded from the mean
};

/// Mean absolute percentage error of `predict(i, j)` against `truth(i, j)`
/// over the given entries. Near-zero truth values are skipped, not scored.
template <class Scalar, class Predict, class Truth>
MapeResult<Scalar> mape(Predict&& predict, Truth&& truth,
                        const std::vector<std::pair<Index, Index>>& entries) {
  if (entries.empty())
    throw std::invalid_argument("mape: entry set must be nonempty");
  MapeResult<Scalar> out;
  Scalar sum = Scalar(0);
  for (const auto& [i, j] : entries) {
    const Scalar t = truth(i, j);
    if (std::abs(static_cast<double>(t)) <= 1e-12) {
      ++out.skipped;
      continue;
    }
    sum += std::abs((predict(i, j) - t) / t);
    ++out.used;
  }
  if (out.used > 0) out.percent = Scalar(100) * sum / Scalar(out.used);
  return out;
}

template <class Scalar>
MapeResult<Scalar> completion_mape(const CompletionResultT<Scalar>& result,
                                   const FeatureMatrixT<Scalar>& B,
                                   const MatrixX<Scalar>& truth,
                                   const std::vector<std::pair<Index, Index>>& entries) {
  return mape<Scalar>(
      [&](Index i, Index j) {
        return predict_entry(result.row_coefficients, B, result.support, i, j);
      },
      [&](Index i, Index j) { return truth(i, j); }, entries);
}

template <class Scalar>
struct GammaScore {
  Scalar gamma = Scalar(0);
  Scalar mape_percent = std::numeric_limits<Scalar>::quiet_NaN();
  bool ok = false;
  std::string error;
};

template <class Scalar>
struct GammaSelection {
  Scalar gamma = Scalar(0);
  std::vector<GammaScore<Scalar>> scores;
};

/// Holdout selection of gamma: split the observed entries, fit on the train
/// part for every grid value, score MAPE on the held-out part, keep the best
/// (ties -> smaller gamma). Individual failures are recorded; throws only if
/// every grid value fails.
template <class Scalar>
GammaSelection<Scalar> select_gamma(const MaskedMatrixT<Scalar>& A,
                                    const FeatureMatrixT<Scalar>& B,
                                    const ProblemConfigT<Scalar>& config,
                                    const std::vector<Scalar>& grid,
                                    Algorithm algo,
                                    double validation_fraction = 0.2) {
  if (grid.empty()) throw std::invalid_argument("select_gamma: empty grid");
  auto [train, validation] = split_validation(A, validation_fraction, config.seed);
  if (validation.entry_count() < 1)
    throw std::invalid_argument("select_gamma: validation split is empty");
  std::vector<std::pair<Index, Index>> entries;
  entries.reserve(static_cast<std::size_t>(validation.entry_count()));
  for (Index i = 0; i < validation.n_rows; ++i)
    for (Index j : validation.row_cols(i)) entries.emplace_back(i, j);

  GammaSelection<Scalar> out;
  bool any_ok = false;
  Scalar best_mape = std::numeric_limits<Scalar>::infinity();
  for (const Scalar gamma : grid) {
    GammaScore<Scalar> score;
    score.gamma = gamma;
    try {
      ProblemConfigT<Scalar> local = config;
      local.gamma = gamma;
      const auto result = complete(train, B, local, algo);
      const auto err = mape<Scalar>(
          [&](Index i, Index j) {
            return predict_entry(result.row_coefficients, B, result.support, i, j);
          },
          [&](Index i, Index j) {
            const auto cols = validation.row_cols(i);
            const auto vals = validation.row_values(i);
            const auto pos = std::lower_bound(cols.begin(), cols.end(), j);
            return vals[static_cast<std::size_t>(pos - cols.begin())];
          },
          entries);
      if (err.used < 1)
        throw std::runtime_error("no scorable validation entries");
      score.mape_percent = err.percent;
      score.ok = true;
      if (!any_ok || score.mape_percent < best_mape ||
          (score.mape_percent == best_mape && gamma < out.gamma)) {
        any_ok = true;
        best_mape = score.mape_percent;
        out.gamma = gamma;
      }
    } catch (const std::exception& e) {
      score.error = e.what();
    }
    out.scores.push_back(std::move(score));
  }
  if (!any_ok)
    throw std::runtime_error("select_gamma: every grid value failed");
  return out;
}

struct SuiteEntry {
  SyntheticSpec spec;
  double gamma = 0;  // <= 0 means select automatically
  std::vector<double> gamma_grid = {0.1, 1.0, 10.0, 100.0, 1000.0};
  double tolerance = 1e-6;
  Index g0 = 100;
  double c_const = 1.0;
  Index max_iterations = 500;
};

struct BenchCell {
  SyntheticSpec spec;
  Algorithm algorithm = Algorithm::exact;
  int trials = 0;
  int failures = 0;
  double time_median_s = std::numeric_limits<double>::quiet_NaN();
  double mape_median_pct = std::numeric_limits<double>::quiet_NaN();
  double recovery_rate = std::numeric_limits<double>::quiet_NaN();
  std::vector<std::string> errors;
};

namespace detail {

inline double median(std::vector<double> v) {
  if (v.empty()) return std::numeric_limits<double>::quiet_NaN();
  std::sort(v.begin(), v.end());
  const std::size_t h = v.size() / 2;
  return v.size() % 2 ? v[h] : 0.5 * (v[h - 1] + v[h]);
}

inline std::string cell_text(double v, const char* format) {
  if (std::isnan(v)) return "N/A";
  char buf[64];
  std::snprintf(buf, sizeof(buf), format, v);
  return buf;
}

}  // namespace detail

inline constexpr int kBenchTrials = 10;

/// One benchmark cell: 10 trials at seeds spec.seed + 0..9, each a fresh
/// instance solved by the given algorithm; reports median wall time (solve
/// only), median MAPE over the masked entries, and the fraction of trials
/// recovering the planted support exactly. Failing trials are skipped and
/// counted, never fatal.
inline BenchCell run_cell(const SuiteEntry& entry, Algorithm algo) {
  BenchCell cell;
  cell.spec = entry.spec;
  cell.algorithm = algo;
  std::vector<double> times, mapes;
  int recovered = 0;
  for (int trial = 0; trial < kBenchTrials; ++trial) {
    ++cell.trials;
    try {
      SyntheticSpec spec = entry.spec;
      spec.seed = entry.spec.seed + static_cast<std::uint64_t>(trial);
      const auto inst = generate(spec);
      ProblemConfig config;
      config.k = spec.k;
      config.seed = spec.seed;
      config.tolerance = entry.tolerance;
      config.g0 = entry.g0;
      config.c_const = entry.c_const;
      config.max_iterations = entry.max_iterations;
      if (entry.gamma > 0) {
        config.gamma = entry.gamma;
      } else {
        std::vector<double> grid(entry.gamma_grid.begin(), entry.gamma_grid.end());
        config.gamma = select_gamma(inst.observed, inst.features, config, grid, algo).gamma;
      }
      const auto result = complete(inst.observed, inst.features, config, algo);
      times.push_back(result.elapsed_seconds);
      if (!inst.masked.empty()) {
        const auto err = completion_mape(result, inst.features, inst.truth, inst.masked);
        if (err.used > 0) mapes.push_back(err.percent);
      }
      if (result.support == inst.true_support) ++recovered;
    } catch (const std::exception& e) {
      ++cell.failures;
      cell.errors.push_back("trial " + std::to_string(trial) + ": " + e.what());
    }
  }
  if (!times.empty()) cell.time_median_s = detail::median(times);
  if (!mapes.empty()) cell.mape_median_pct = detail::median(mapes);
  if (cell.failures < cell.trials)
    cell.recovery_rate = static_cast<double>(recovered) / kBenchTrials;
  return cell;
}

/// Runs every suite entry with both algorithms. CSV columns:
/// n,m,p,k,mu,algorithm,time_median_s,mape_median_pct,recovery_rate.
inline std::vector<BenchCell> run_benchmark(const std::vector<SuiteEntry>& suite) {
  std::vector<BenchCell> cells;
  for (const auto& entry : suite)
    for (Algorithm algo : {Algorithm::exact, Algorithm::stochastic})
      cells.push_back(run_cell(entry, algo));
  return cells;
}

inline void write_benchmark_csv(const std::string& path,
                                const std::vector<BenchCell>& cells) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write '" + path + "'");
  out << "n,m,p,k,mu,algorithm,time_median_s,mape_median_pct,recovery_rate\n";
  for (const auto& cell : cells) {
    out << cell.spec.n << ',' << cell.spec.m << ',' << cell.spec.p << ','
        << cell.spec.k << ',' << cell.spec.mu << ','
        << algorithm_name(cell.algorithm) << ','
        << detail::cell_text(cell.time_median_s, "%.4f") << ','
        << detail::cell_text(cell.mape_median_pct, "%.6g") << ','
        << detail::cell_text(cell.recovery_rate, "%.2f") << '\n';
  }
  if (!out) throw std::runtime_error("write failed for '" + path + "'");
}

/// Suite file: `key=value` lines; a line `[anything]` or a blank line starts
/// the next entry. Keys: n, m, p, k, mu, noise_sd, seed, gamma, gamma_grid
/// (comma-separated), tol, g0, c, max_iterations.
inline std::vector<SuiteEntry> load_suite(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open '" + path + "'");
  std::vector<SuiteEntry> suite;
  SuiteEntry current;
  bool dirty = false;
  std::string line;
  std::size_t line_no = 0;
  auto flush = [&] {
    if (dirty) {
      current.spec.require_valid();
      suite.push_back(current);
      current = SuiteEntry{};
      dirty = false;
    }
  };
  while (std::getline(in, line)) {
    ++line_no;
    const std::string body = optcomplete::detail::strip(line);
    if (body.empty() || body.front() == '[') {
      flush();
      continue;
    }
    if (body.front() == '#') continue;
    const auto eq = body.find('=');
    if (eq == std::string::npos)
      optcomplete::detail::parse_fail(path, line_no, "expected key=value");
    const std::string key = optcomplete::detail::strip(body.substr(0, eq));
    const std::string value = optcomplete::detail::strip(body.substr(eq + 1));
    auto as_double = [&] { return optcomplete::detail::parse_double(value, path, line_no); };
    auto as_index = [&] {
      return static_cast<Index>(optcomplete::detail::parse_index(value, path, line_no));
    };
    if (key == "n") current.spec.n = as_index();
    else if (key == "m") current.spec.m = as_index();
    else if (key == "p") current.spec.p = as_index();
    else if (key == "k") current.spec.k = as_index();
    else if (key == "mu") current.spec.mu = as_double();
    else if (key == "noise_sd") current.spec.noise_sd = as_double();
    else if (key == "seed") current.spec.seed = static_cast<std::uint64_t>(as_index());
    else if (key == "gamma") current.gamma = as_double();
    else if (key == "tol") current.tolerance = as_double();
    else if (key == "g0") current.g0 = as_index();
    else if (key == "c") current.c_const = as_double();
    else if (key == "max_iterations") current.max_iterations = as_index();
    else if (key == "gamma_grid") {
      current.gamma_grid.clear();
      for (const auto& field : optcomplete::detail::split_fields(value))
        current.gamma_grid.push_back(
            optcomplete::detail::parse_double(field, path, line_no));
    } else {
      optcomplete::detail::parse_fail(path, line_no, "unknown key '" + key + "'");
    }
    dirty = true;
  }
  flush();
  if (suite.empty()) throw std::runtime_error(path + ": no benchmark entries");
  return suite;
}

}  // namespace optcomplete::bench
