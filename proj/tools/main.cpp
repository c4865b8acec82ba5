// Command-line front end: generate synthetic instances, run completion,
// execute benchmark suites, and reduce two-sided problems to standard form.
#include <cstdio>
#include <exception>
#include <fstream>
#include <optional>
#include <string>

#include "CLI11.hpp"
#include "optcomplete/optcomplete.hpp"

namespace {

using namespace optcomplete;

int run_generate(const bench::SyntheticSpec& spec, const std::string& prefix) {
  const auto inst = bench::generate(spec);
  save_masked_matrix(prefix + ".matrix.coo", inst.observed);
  save_features(prefix + ".features.csv", inst.features);

  // truth sidecar: planted support plus the masked coordinates and values,
  // enough to score a completion without regenerating the instance
  std::ofstream out(prefix + ".truth.json");
  if (!out) throw std::runtime_error("cannot open " + prefix + ".truth.json");
  out << "{\n  \"support\": [";
  for (std::size_t t = 0; t < inst.true_support.indices.size(); ++t) {
    if (t) out << ", ";
    out << inst.true_support.indices[t];
  }
  out << "],\n  \"masked\": [";
  for (std::size_t t = 0; t < inst.masked.size(); ++t) {
    if (t) out << ", ";
    const auto& [i, j] = inst.masked[t];
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.17g", inst.truth(i, j));
    out << "[" << i << ", " << j << ", " << buf << "]";
  }
  out << "]\n}\n";
  std::printf("wrote %s.matrix.coo, %s.features.csv, %s.truth.json\n",
              prefix.c_str(), prefix.c_str(), prefix.c_str());
  return 0;
}

int run_complete(const std::string& matrix_path,
                 const std::string& features_path, bool features_header,
                 const ProblemConfig& config, Algorithm algo,
                 const std::string& out_path) {
  const auto problem = load_problem(matrix_path, features_path, features_header);
  const auto result = complete(problem.matrix, problem.features, config, algo);
  write_result_json(out_path, result, algo, config);
  std::printf("support:");
  for (Index j : result.support.indices) std::printf(" %lld", static_cast<long long>(j));
  const double final_cost = result.objective_trace.back().second;
  std::printf("\ncost: %.17g\ncertified: %s\nelapsed: %.3fs\nwrote %s\n",
              final_cost, result.exact_certified ? "true" : "false",
              result.elapsed_seconds, out_path.c_str());
  for (const auto& w : result.diagnostics.warnings)
    std::fprintf(stderr, "warning: %s\n", w.c_str());
  return 0;
}

int run_benchmark_cmd(const std::string& suite_path, const std::string& out_path) {
  const auto suite = bench::load_suite(suite_path);
  const auto cells = bench::run_benchmark(suite);
  bench::write_benchmark_csv(out_path, cells);
  std::printf("wrote %s (%zu rows)\n", out_path.c_str(), cells.size());
  return 0;
}

int run_reduce(const std::string& matrix_path, const std::string& row_path,
               const std::string& col_path, Index k, double gamma,
               double max_elements, const std::string& prefix) {
  const auto A = load_masked_matrix(matrix_path);
  const auto row_f = load_features(row_path, false);
  const auto col_f = load_features(col_path, false);
  const auto inst = reduce_two_sided(A, row_f, col_f, k, gamma, max_elements);
  save_two_sided(prefix + ".csv", prefix + ".map.csv", inst);
  std::printf("wrote %s.csv (%lld x %lld) and %s.map.csv\n", prefix.c_str(),
              static_cast<long long>(inst.design.rows()),
              static_cast<long long>(inst.design.cols()), prefix.c_str());
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"interpretable matrix completion over side-information features"};
  app.require_subcommand(1);

  // generate
  auto* gen = app.add_subcommand("generate", "write a synthetic instance");
  bench::SyntheticSpec spec;
  std::string gen_prefix = "instance";
  gen->add_option("--n", spec.n, "matrix rows");
  gen->add_option("--m", spec.m, "matrix columns");
  gen->add_option("--p", spec.p, "feature columns");
  gen->add_option("--k", spec.k, "planted sparsity");
  gen->add_option("--mu", spec.mu, "masked fraction in [0,1)");
  gen->add_option("--noise-sd", spec.noise_sd, "additive noise level");
  gen->add_option("--seed", spec.seed, "random seed");
  gen->add_option("--out", gen_prefix, "output path prefix");

  // complete
  auto* comp = app.add_subcommand("complete", "select features and fill a matrix");
  std::string matrix_path, features_path, out_path = "result.json";
  std::string algo_name = "exact";
  bool features_header = false;
  int threads = 1;
  ProblemConfig config;
  comp->add_option("--matrix", matrix_path, "observed entries, i,j,value CSV")
      ->required();
  comp->add_option("--features", features_path, "feature matrix CSV")->required();
  comp->add_option("--k", config.k, "number of features to select")->required();
  comp->add_option("--gamma", config.gamma, "regularization weight");
  comp->add_option("--algorithm", algo_name, "exact or stochastic")
      ->check(CLI::IsMember({"exact", "stochastic"}));
  comp->add_option("--g0", config.g0, "baseline sampled rows per iteration");
  comp->add_option("--c", config.c_const, "sample-size constant");
  comp->add_option("--tol", config.tolerance, "relative optimality tolerance");
  comp->add_option("--seed", config.seed, "random seed");
  comp->add_option("--max-iterations", config.max_iterations,
                   "cutting-plane iteration cap");
  comp->add_option("--threads", threads, "worker threads");
  comp->add_flag("--features-header", features_header,
                 "skip the first line of the feature CSV");
  comp->add_option("--out", out_path, "result JSON path");

  // benchmark
  auto* benchc = app.add_subcommand("benchmark", "run a benchmark suite");
  std::string suite_path, bench_out = "benchmark.csv";
  int bench_threads = 1;
  benchc->add_option("--suite", suite_path, "suite definition file")->required();
  benchc->add_option("--out", bench_out, "output CSV path");
  benchc->add_option("--threads", bench_threads, "worker threads");

  // reduce
  auto* red = app.add_subcommand("reduce", "flatten a two-sided problem");
  std::string red_matrix, row_path, col_path, red_prefix = "reduced";
  Index red_k = 1;
  double red_gamma = 1.0, max_elements = 5e7;
  red->add_option("--matrix", red_matrix, "observed entries CSV")->required();
  red->add_option("--row-features", row_path, "row-side feature CSV")->required();
  red->add_option("--col-features", col_path, "column-side feature CSV")
      ->required();
  red->add_option("--k", red_k, "sparsity for the reduced problem")->required();
  red->add_option("--gamma", red_gamma, "regularization weight");
  red->add_option("--max-elements", max_elements,
                  "cap on design rows*cols before aborting");
  red->add_option("--out", red_prefix, "output path prefix");

  CLI11_PARSE(app, argc, argv);

  try {
    if (gen->parsed()) return run_generate(spec, gen_prefix);
    if (comp->parsed()) {
      parallel::set_worker_count(threads);
      const Algorithm algo =
          algo_name == "exact" ? Algorithm::exact : Algorithm::stochastic;
      return run_complete(matrix_path, features_path, features_header, config,
                          algo, out_path);
    }
    if (benchc->parsed()) {
      parallel::set_worker_count(bench_threads);
      return run_benchmark_cmd(suite_path, bench_out);
    }
    if (red->parsed())
      return run_reduce(red_matrix, row_path, col_path, red_k, red_gamma,
                        max_elements, red_prefix);
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
  return 0;
}
