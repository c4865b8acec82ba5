#include "doctest.h"

#include <fstream>

#include "oracles.hpp"
#include "optcomplete/optcomplete.hpp"

using namespace optcomplete;
using bench::SyntheticSpec;

namespace {

SyntheticSpec small_spec() {
  SyntheticSpec spec;
  spec.n = 50;
  spec.m = 40;
  spec.p = 6;
  spec.k = 2;
  spec.mu = 0.5;
  spec.noise_sd = 0.0;
  spec.seed = 0;
  return spec;
}

}  // namespace

TEST_CASE("generate: masking count and consistency") {
  auto spec = small_spec();
  const auto inst = bench::generate(spec);
  const Index total = spec.n * spec.m;
  const Index expected_masked =
      static_cast<Index>(std::llround(spec.mu * static_cast<double>(total)));
  CHECK(static_cast<Index>(inst.masked.size()) == expected_masked);
  CHECK(inst.observed.entry_count() == total - expected_masked);
  CHECK(inst.truth.rows() == spec.n);
  CHECK(inst.truth.cols() == spec.m);
  CHECK(inst.features.n_cols() == spec.m);
  CHECK(inst.features.n_features() == spec.p);
  CHECK(inst.true_support.k() == spec.k);
  inst.true_support.require_valid(spec.p);
  inst.observed.require_valid();

  // observed values equal the truth at their coordinates
  for (Index i = 0; i < spec.n; ++i) {
    const auto cols = inst.observed.row_cols(i);
    const auto vals = inst.observed.row_values(i);
    for (std::size_t t = 0; t < cols.size(); ++t)
      CHECK(vals[t] == inst.truth(i, cols[t]));
  }
  // masked coordinates are exactly the complement, in row-major order
  std::vector<char> masked_flags(static_cast<std::size_t>(total), 0);
  for (const auto& [i, j] : inst.masked)
    masked_flags[static_cast<std::size_t>(i * spec.m + j)] = 1;
  Index nnz = 0;
  for (Index i = 0; i < spec.n; ++i)
    for (Index j : inst.observed.row_cols(i)) {
      CHECK(!masked_flags[static_cast<std::size_t>(i * spec.m + j)]);
      ++nnz;
    }
  CHECK(nnz + static_cast<Index>(inst.masked.size()) == total);
  CHECK(std::is_sorted(inst.masked.begin(), inst.masked.end()));
}

TEST_CASE("generate: mu = 0 observes everything") {
  auto spec = small_spec();
  spec.mu = 0.0;
  const auto inst = bench::generate(spec);
  CHECK(inst.masked.empty());
  CHECK(inst.observed.entry_count() == spec.n * spec.m);
}

TEST_CASE("generate: planted columns span the noiseless truth") {
  auto spec = small_spec();
  spec.seed = 3;
  const auto inst = bench::generate(spec);
  // every truth row must lie in the span of the k planted feature columns
  Eigen::MatrixXd planted(spec.m, spec.k);
  for (Index t = 0; t < spec.k; ++t)
    planted.col(t) = inst.features.values.col(inst.true_support.indices[t]);
  for (Index i = 0; i < spec.n; ++i) {
    const Eigen::VectorXd row = inst.truth.row(i).transpose();
    const Eigen::VectorXd fitted =
        planted * planted.colPivHouseholderQr().solve(row);
    CHECK((fitted - row).norm() <= 1e-10 * std::max(1.0, row.norm()));
  }
}

TEST_CASE("generate: entry statistics match the planted model") {
  SyntheticSpec spec;
  spec.n = 100;
  spec.m = 100;
  spec.p = 15;
  spec.k = 5;
  spec.mu = 0.0;
  spec.seed = 9;
  const auto inst = bench::generate(spec);
  // each entry is a sum of k products of independent U[0,1): mean k/4
  CHECK(inst.truth.mean() == doctest::Approx(spec.k / 4.0).epsilon(0.08));

  auto noisy_spec = spec;
  noisy_spec.noise_sd = 0.1;
  const auto noisy = bench::generate(noisy_spec);
  const Eigen::MatrixXd diff = noisy.truth - inst.truth;
  const double sd = std::sqrt(diff.array().square().mean());
  CHECK(sd == doctest::Approx(0.1).epsilon(0.2));
}

TEST_CASE("generate is deterministic in the seed") {
  const auto a = bench::generate(small_spec());
  const auto b = bench::generate(small_spec());
  CHECK(a.truth == b.truth);
  CHECK(a.observed.values == b.observed.values);
  CHECK(a.true_support.indices == b.true_support.indices);
  auto other = small_spec();
  other.seed = 1;
  const auto c = bench::generate(other);
  CHECK(a.truth != c.truth);
}

TEST_CASE("mape hand-computed cases") {
  const std::vector<std::pair<Index, Index>> entries = {{0, 0}, {0, 1}, {0, 2}};
  Eigen::MatrixXd truth(1, 3);
  truth << 1.0, 2.0, 4.0;
  Eigen::MatrixXd pred(1, 3);
  pred << 1.1, 1.9, 4.4;

  auto lookup = [](const Eigen::MatrixXd& M) {
    return [&M](Index i, Index j) { return M(i, j); };
  };

  const auto r = bench::mape<double>(lookup(pred), lookup(truth), entries);
  CHECK(r.used == 3);
  CHECK(r.skipped == 0);
  CHECK(r.percent == doctest::Approx(25.0 / 3.0).epsilon(1e-12));

  const auto exact = bench::mape<double>(lookup(truth), lookup(truth), entries);
  CHECK(exact.percent == 0.0);

  Eigen::MatrixXd doubled = 2.0 * truth;
  const auto twice = bench::mape<double>(lookup(doubled), lookup(truth), entries);
  CHECK(twice.percent == doctest::Approx(100.0).epsilon(1e-12));

  // scale invariance: scaling both sides leaves the error unchanged
  Eigen::MatrixXd pred_s = 7.5 * pred, truth_s = 7.5 * truth;
  const auto scaled = bench::mape<double>(lookup(pred_s), lookup(truth_s), entries);
  CHECK(scaled.percent == doctest::Approx(r.percent).epsilon(1e-12));
}

TEST_CASE("mape skips near-zero truth entries") {
  const std::vector<std::pair<Index, Index>> entries = {{0, 0}, {0, 1}};
  Eigen::MatrixXd truth(1, 2);
  truth << 0.0, 2.0;
  Eigen::MatrixXd pred(1, 2);
  pred << 5.0, 2.2;
  const auto r = bench::mape<double>(
      [&](Index i, Index j) { return pred(i, j); },
      [&](Index i, Index j) { return truth(i, j); }, entries);
  CHECK(r.used == 1);
  CHECK(r.skipped == 1);
  CHECK(r.percent == doctest::Approx(10.0).epsilon(1e-12));

  CHECK_THROWS_AS(bench::mape<double>([](Index, Index) { return 0.0; },
                                      [](Index, Index) { return 1.0; }, {}),
                  std::invalid_argument);
}

TEST_CASE("select_gamma picks the best holdout score") {
  auto spec = small_spec();
  spec.noise_sd = 0.01;
  spec.seed = 4;
  const auto inst = bench::generate(spec);
  ProblemConfig config;
  config.k = spec.k;
  config.seed = 4;
  const std::vector<double> grid = {0.1, 1.0, 10.0, 100.0};
  const auto sel = bench::select_gamma(inst.observed, inst.features, config,
                                       grid, Algorithm::exact);
  REQUIRE(sel.scores.size() == 4);
  double best = std::numeric_limits<double>::infinity();
  double best_gamma = 0;
  for (const auto& score : sel.scores) {
    REQUIRE(score.ok);
    if (score.mape_percent < best) {
      best = score.mape_percent;
      best_gamma = score.gamma;
    }
  }
  CHECK(sel.gamma == best_gamma);

  const auto single = bench::select_gamma(inst.observed, inst.features, config,
                                          {42.0}, Algorithm::exact);
  CHECK(single.gamma == 42.0);
  CHECK_THROWS_AS(bench::select_gamma(inst.observed, inst.features, config, {},
                                      Algorithm::exact),
                  std::invalid_argument);
}

TEST_CASE("run_benchmark produces one cell per spec and algorithm") {
  bench::SuiteEntry entry;
  entry.spec = small_spec();
  // noiseless instance: the coefficient shrinkage floor scales like 1/gamma,
  // so a large gamma makes near-exact recovery the expected outcome
  entry.gamma = 1e4;
  const auto cells = bench::run_benchmark({entry});
  REQUIRE(cells.size() == 2);
  CHECK(cells[0].algorithm == Algorithm::exact);
  CHECK(cells[1].algorithm == Algorithm::stochastic);
  for (const auto& cell : cells) {
    CHECK(cell.trials == 10);
    CHECK(cell.failures == 0);
    CHECK(cell.time_median_s > 0.0);
    CHECK(cell.mape_median_pct >= 0.0);
    CHECK(cell.mape_median_pct < 0.02);  // noiseless planted recovery
    CHECK(cell.recovery_rate >= 0.9);
  }

  const auto csv = oracles::temp_path("bench.csv");
  bench::write_benchmark_csv(csv, cells);
  std::ifstream in(csv);
  std::string line;
  REQUIRE(std::getline(in, line));
  CHECK(line == "n,m,p,k,mu,algorithm,time_median_s,mape_median_pct,recovery_rate");
  int rows = 0;
  while (std::getline(in, line))
    if (!line.empty()) ++rows;
  CHECK(rows == 2);
}

TEST_CASE("suite files parse sections, comments, and defaults") {
  const auto path = oracles::temp_path("suite.cfg");
  oracles::write_text(path,
                      "# comment\n"
                      "[first]\n"
                      "n=20\nm=30\np=5\nk=2\nmu=0.25\nnoise_sd=0.01\nseed=3\n"
                      "gamma=10\n"
                      "\n"
                      "n=40\nm=10\np=4\nk=1\nmu=0.5\ngamma_grid=1,10\n");
  const auto suite = bench::load_suite(path);
  REQUIRE(suite.size() == 2);
  CHECK(suite[0].spec.n == 20);
  CHECK(suite[0].spec.mu == 0.25);
  CHECK(suite[0].spec.seed == 3);
  CHECK(suite[0].gamma == 10.0);
  CHECK(suite[1].spec.n == 40);
  CHECK(suite[1].spec.k == 1);
  CHECK(suite[1].gamma == 0.0);  // auto-select
  REQUIRE(suite[1].gamma_grid.size() == 2);
  CHECK(suite[1].gamma_grid[1] == 10.0);

  const auto bad = oracles::temp_path("suite_bad.cfg");
  oracles::write_text(bad, "n=20\nbogus=1\n");
  CHECK_THROWS_WITH_AS(bench::load_suite(bad), doctest::Contains("unknown key"),
                       std::runtime_error);
}
