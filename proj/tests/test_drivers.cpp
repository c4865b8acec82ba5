#include "doctest.h"

#include "oracles.hpp"
#include "optcomplete/optcomplete.hpp"

using namespace optcomplete;
using oracles::make_support;

namespace {

ProblemConfig basic_config(Index k, double gamma, std::uint64_t seed = 0) {
  ProblemConfig config;
  config.k = k;
  config.gamma = gamma;
  config.seed = seed;
  return config;
}

}  // namespace

TEST_CASE("k equal to the feature count needs one exact evaluation") {
  auto [A, B] = oracles::random_problem(10, 8, 4, 0.6, 3);
  const auto result = cutting_planes(A, B, basic_config(4, 5.0));
  CHECK(result.support.indices == std::vector<Index>{0, 1, 2, 3});
  CHECK(result.exact_certified);
  REQUIRE(result.objective_trace.size() == 1);
  CHECK(result.objective_trace[0].first == 0.0);
  CHECK(result.objective_trace[0].second == cost(A, B, result.support, 5.0));
  CHECK(result.diagnostics.exact_evaluations == 1);

  const auto stochastic = stochastic_cutting_planes(A, B, basic_config(4, 5.0));
  CHECK(stochastic.support.indices == result.support.indices);
  CHECK(stochastic.exact_certified);
}

TEST_CASE("zero matrix certifies immediately") {
  std::vector<std::tuple<Index, Index, double>> entries;
  for (Index i = 0; i < 5; ++i) entries.emplace_back(i, i % 3, 0.0);
  auto A = MaskedMatrix::from_triplets(5, 3, std::move(entries));
  FeatureMatrix B;
  B.values.resize(3, 5);
  B.values.setRandom();
  const auto result = cutting_planes(A, B, basic_config(2, 3.0));
  CHECK(result.exact_certified);
  REQUIRE(result.objective_trace.size() == 1);
  CHECK(result.objective_trace[0].second == 0.0);
}

TEST_CASE("exact driver finds the brute-force optimum on planted instances") {
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    bench::SyntheticSpec spec;
    spec.n = 60;
    spec.m = 50;
    spec.p = 8;
    spec.k = 2;
    spec.mu = 0.4;
    spec.noise_sd = 0.0;
    spec.seed = seed;
    const auto inst = bench::generate(spec);
    const double gamma = 50.0;

    const auto result =
        cutting_planes(inst.observed, inst.features, basic_config(2, gamma, seed));
    CHECK(result.exact_certified);

    const auto [brute_s, brute_v] = oracles::brute_force_best_support(
        inst.observed, inst.features, 2, gamma);
    CHECK(result.support.indices == brute_s.indices);
    CHECK(result.objective_trace.back().second ==
          doctest::Approx(brute_v).epsilon(1e-10));

    // the certificate is a true lower bound on every support
    const double eta = result.objective_trace.back().first;
    CHECK(eta <= brute_v + 1e-12);
  }
}

TEST_CASE("trace invariants: eta starts at zero, never decreases, certificate holds") {
  auto [A, B] = oracles::random_problem(40, 25, 9, 0.5, 8);
  const auto config = basic_config(3, 20.0, 1);
  const auto result = cutting_planes(A, B, config);
  REQUIRE(!result.objective_trace.empty());
  CHECK(result.objective_trace.front().first == 0.0);
  for (std::size_t t = 1; t < result.objective_trace.size(); ++t)
    CHECK(result.objective_trace[t].first >=
          result.objective_trace[t - 1].first);
  REQUIRE(result.exact_certified);
  const auto [eta, c] = result.objective_trace.back();
  CHECK(c - eta <= config.tolerance);  // the certified optimality gap
  CHECK(eta <= c + 1e-12);  // exact cuts: eta is a valid lower bound
}

TEST_CASE("iteration cap returns the best support seen, uncertified") {
  auto [A, B] = oracles::random_problem(40, 25, 10, 0.5, 9);
  auto config = basic_config(3, 20.0, 1);
  config.max_iterations = 1;
  const auto result = cutting_planes(A, B, config);
  CHECK_FALSE(result.exact_certified);
  CHECK(result.objective_trace.size() == 1);
  CHECK(result.support.k() == 3);
  REQUIRE(!result.diagnostics.warnings.empty());
  CHECK(result.diagnostics.warnings.front().find("iteration limit") !=
        std::string::npos);
}

TEST_CASE("greedy warm start lands close to the optimum on planted data") {
  bench::SyntheticSpec spec;
  spec.n = 60;
  spec.m = 50;
  spec.p = 8;
  spec.k = 2;
  spec.mu = 0.4;
  spec.seed = 11;
  const auto inst = bench::generate(spec);
  const double gamma = 50.0;
  const auto s =
      warm_start(inst.observed, inst.features, basic_config(2, gamma, 11),
                 Algorithm::exact);
  s.require_valid(8);
  CHECK(s.k() == 2);
  const double greedy_cost = cost(inst.observed, inst.features, s, gamma);
  const auto [brute_s, brute_v] = oracles::brute_force_best_support(
      inst.observed, inst.features, 2, gamma);
  CHECK(greedy_cost <= 1.1 * brute_v + 1e-12);
}

TEST_CASE("random warm start is deterministic and covers indices uniformly") {
  const auto a = random_support(10, 3, 4);
  const auto b = random_support(10, 3, 4);
  CHECK(a.indices == b.indices);
  a.require_valid(10);

  std::vector<int> hits(10, 0);
  const int draws = 4000;
  for (int seedv = 0; seedv < draws; ++seedv)
    for (Index j : random_support(10, 3, static_cast<std::uint64_t>(seedv)).indices)
      ++hits[static_cast<std::size_t>(j)];
  for (int h : hits) {
    const double freq = static_cast<double>(h) / draws;  // expect 0.3
    CHECK(freq > 0.3 - 0.03);
    CHECK(freq < 0.3 + 0.03);
  }
}

TEST_CASE("full-sample stochastic driver reproduces the exact driver") {
  bench::SyntheticSpec spec;
  spec.n = 24;
  spec.m = 18;
  spec.p = 6;
  spec.k = 2;
  spec.mu = 0.5;
  spec.seed = 2;
  const auto inst = bench::generate(spec);

  auto config = basic_config(2, 30.0, 7);
  config.g0 = 1000;     // >= n: every row sampled
  config.c_const = 50;  // forces f = m
  CHECK(sample_sizes<double>(24, 18, 0.5, 2, config.g0, config.c_const).f == 18);

  Support start = make_support({0, 1});
  const auto exact = cutting_planes(inst.observed, inst.features, config, start);
  const auto sampled =
      stochastic_cutting_planes(inst.observed, inst.features, config, start);

  CHECK(exact.exact_certified);
  CHECK(sampled.exact_certified);
  CHECK(exact.support.indices == sampled.support.indices);
  REQUIRE(exact.objective_trace.size() == sampled.objective_trace.size());
  for (std::size_t t = 0; t < exact.objective_trace.size(); ++t) {
    CHECK(exact.objective_trace[t].first == sampled.objective_trace[t].first);
    CHECK(exact.objective_trace[t].second == sampled.objective_trace[t].second);
  }
  CHECK(exact.row_coefficients == sampled.row_coefficients);
}

TEST_CASE("stochastic driver agrees with the exact driver on planted data") {
  bench::SyntheticSpec spec;
  spec.n = 200;
  spec.m = 60;
  spec.p = 10;
  spec.k = 3;
  spec.mu = 0.5;
  spec.seed = 5;
  const auto inst = bench::generate(spec);
  const auto config = basic_config(3, 100.0, 5);
  const auto exact = cutting_planes(inst.observed, inst.features, config);
  const auto sampled =
      stochastic_cutting_planes(inst.observed, inst.features, config);
  CHECK(exact.support.indices == sampled.support.indices);
  CHECK(exact.exact_certified);
  CHECK(sampled.exact_certified);
  CHECK(sampled.support.indices == inst.true_support.indices);
}

TEST_CASE("rows without observations complete to zero with a warning") {
  auto A = MaskedMatrix::from_triplets(
      4, 6, {{0, 0, 1.0}, {0, 3, 2.0}, {2, 1, 0.5}, {3, 4, 1.5}, {2, 5, 2.5}});
  FeatureMatrix B;
  B.values.resize(6, 4);
  SplitMix64 rng(9);
  for (Index r = 0; r < 6; ++r)
    for (Index c = 0; c < 4; ++c) B.values(r, c) = rng.next_double();
  const auto result = cutting_planes(A, B, basic_config(2, 10.0));
  CHECK(result.diagnostics.empty_rows == 1);
  CHECK(result.row_coefficients.row(1).isZero(0.0));
  bool warned = false;
  for (const auto& w : result.diagnostics.warnings)
    warned |= w.find("no observed entries") != std::string::npos;
  CHECK(warned);
}

TEST_CASE("drivers are deterministic end to end") {
  auto [A, B] = oracles::random_problem(50, 30, 8, 0.5, 15);
  const auto config = basic_config(3, 25.0, 3);
  const auto r1 = stochastic_cutting_planes(A, B, config);
  const auto r2 = stochastic_cutting_planes(A, B, config);
  CHECK(r1.support.indices == r2.support.indices);
  REQUIRE(r1.objective_trace.size() == r2.objective_trace.size());
  for (std::size_t t = 0; t < r1.objective_trace.size(); ++t) {
    CHECK(r1.objective_trace[t].first == r2.objective_trace[t].first);
    CHECK(r1.objective_trace[t].second == r2.objective_trace[t].second);
  }
  CHECK(r1.row_coefficients == r2.row_coefficients);
  CHECK(r1.exact_certified == r2.exact_certified);
}

TEST_CASE("driver input validation") {
  auto [A, B] = oracles::random_problem(6, 5, 4, 0.7, 1);
  CHECK_THROWS_AS(cutting_planes(A, B, basic_config(5, 1.0)),
                  std::invalid_argument);  // k > p
  CHECK_THROWS_AS(cutting_planes(A, B, basic_config(0, 1.0)),
                  std::invalid_argument);
  CHECK_THROWS_AS(cutting_planes(A, B, basic_config(2, -1.0)),
                  std::invalid_argument);
  CHECK_THROWS_AS(
      cutting_planes(A, B, basic_config(2, 1.0), make_support({0, 1, 2})),
      std::invalid_argument);  // initial support with the wrong size
  FeatureMatrix narrow;
  narrow.values.resize(4, 4);
  narrow.values.setZero();
  CHECK_THROWS_AS(cutting_planes(A, narrow, basic_config(2, 1.0)),
                  std::invalid_argument);  // column count mismatch
}
