#include <CLI11.hpp>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <thread>

#include "sfma/io.hpp"

namespace {

constexpr int kExitConfig = 2;
constexpr int kExitData = 3;
constexpr int kExitSolver = 4;

int thread_cap() {
  if (const char* env = std::getenv("SFMA_THREADS")) {
    const int v = std::atoi(env);
    if (v > 0) return v;
  }
  const unsigned hw = std::thread::hardware_concurrency();
  return hw > 0 ? int(hw) : 1;
}

sfma::json load_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw sfma::ConfigError("cannot open config file: " + path);
  try {
    return sfma::json::parse(in);
  } catch (const std::exception& err) {
    throw sfma::ConfigError("config parse failure in " + path + ": " +
                            err.what());
  }
}

struct FitCli {
  std::string config_path;
  std::optional<std::string> input;
  std::optional<std::string> output;
  std::optional<std::uint64_t> seed;
  std::optional<double> trim;
  std::optional<long long> knots;
  std::optional<int> degree;
};

int run_fit_command(const FitCli& cli) {
  sfma::RunConfig cfg = sfma::parse_run_config(load_json_file(cli.config_path));
  if (cli.input) cfg.input_path = *cli.input;
  if (cli.output) cfg.output_dir = *cli.output;
  if (cli.seed) cfg.seed = *cli.seed;
  if (cli.trim) cfg.trim_proportion = *cli.trim;
  if (cli.knots) cfg.knot_count = sfma::Index(*cli.knots);
  if (cli.degree) cfg.degree = *cli.degree;
  cfg.validate();

  try {
    const sfma::FitArtifacts art = sfma::run_fit(cfg);
    sfma::write_fit_artifacts(cfg, art);
    for (sfma::Index row : art.load_report.dropped_rows)
      std::cerr << "note: dropped row " << row << " (missing y or x)\n";
    std::cout << "fit complete: objective " << art.result.objective << ", "
              << art.excluded.size() << " rows excluded, outputs in "
              << cfg.output_dir << "\n";
    return 0;
  } catch (const sfma::SolverError& err) {
    sfma::json diag;
    diag["error_class"] = "solver";
    diag["message"] = err.what();
    sfma::write_file_atomic(
        std::filesystem::path(cfg.output_dir) / "diagnostic.json",
        diag.dump(2) + "\n");
    throw;
  }
}

struct SimulateCli {
  int sim = 1;
  std::uint64_t seed = 0;
  long long n = 0;
  std::string output = "sfma_sim";
  bool sd_reading = false;
};

int run_simulate_command(const SimulateCli& cli) {
  sfma::SimSpec spec = sfma::SimSpec::table_row(cli.sim, cli.seed);
  if (cli.n > 0) spec.n = sfma::Index(cli.n);
  spec.sim2_sd_reading = cli.sd_reading;
  const sfma::SimDraw draw = sfma::generate_sim(spec);

  const std::filesystem::path dir = cli.output;
  sfma::write_sim_draw(dir / "dataset.csv", draw);
  sfma::json echo;
  echo["sim"] = spec.sim_id;
  echo["n"] = spec.n;
  echo["sigma_u2"] = spec.sigma_u2;
  echo["outlier_fraction"] = spec.outlier_fraction;
  echo["seed"] = spec.seed;
  echo["sim2_sd_reading"] = spec.sim2_sd_reading;
  sfma::write_file_atomic(dir / "sim_config.json", echo.dump(2) + "\n");
  std::cout << "wrote " << (dir / "dataset.csv").string() << " (" << spec.n
            << " rows)\n";
  return 0;
}

struct BenchCli {
  std::string config_path;
  std::optional<std::string> output;
  std::optional<std::uint64_t> seed;
  std::optional<int> replications;
  std::optional<int> threads;
};

int run_benchmark_command(const BenchCli& cli) {
  sfma::BenchConfig cfg =
      sfma::parse_bench_config(load_json_file(cli.config_path));
  if (cli.output) cfg.output_dir = *cli.output;
  if (cli.seed) cfg.seed = *cli.seed;
  if (cli.replications) cfg.replications = *cli.replications;
  cfg.options.threads = cli.threads ? *cli.threads : thread_cap();
  sfma::run_benchmark(cfg);
  std::cout << "benchmark table written to "
            << (std::filesystem::path(cfg.output_dir) / "bench.csv").string()
            << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"sfma: stochastic frontier meta-analysis toolkit"};
  app.require_subcommand(1);

  FitCli fit_cli;
  auto* fit = app.add_subcommand("fit", "fit a frontier to a dataset");
  fit->add_option("--config", fit_cli.config_path, "run configuration (JSON)")
      ->required();
  std::string fit_input, fit_output;
  std::uint64_t fit_seed = 0;
  double fit_trim = 0;
  long long fit_knots = 0;
  int fit_degree = 0;
  fit->add_option("--input", fit_input, "override input path");
  fit->add_option("--output", fit_output, "override output directory");
  auto* fit_seed_opt = fit->add_option("--seed", fit_seed, "override seed");
  auto* fit_trim_opt =
      fit->add_option("--trim", fit_trim, "override trim proportion");
  auto* fit_knots_opt = fit->add_option("--knots", fit_knots, "override knot count");
  auto* fit_degree_opt = fit->add_option("--degree", fit_degree, "override degree");

  SimulateCli sim_cli;
  auto* sim = app.add_subcommand("simulate", "generate a synthetic dataset");
  sim->add_option("--sim", sim_cli.sim, "design number (1-4)")->required();
  sim->add_option("--seed", sim_cli.seed, "random seed");
  sim->add_option("--n", sim_cli.n, "override sample size");
  sim->add_option("--output", sim_cli.output, "output directory");
  sim->add_flag("--sd-reading", sim_cli.sd_reading,
                "read the mixed-noise rule of design 2 as a standard deviation");

  BenchCli bench_cli;
  auto* bench = app.add_subcommand("benchmark", "run the method comparison");
  bench->add_option("--config", bench_cli.config_path, "benchmark spec (JSON)")
      ->required();
  std::string bench_output;
  std::uint64_t bench_seed = 0;
  int bench_reps = 0, bench_threads = 0;
  bench->add_option("--output", bench_output, "override output directory");
  auto* bench_seed_opt = bench->add_option("--seed", bench_seed, "override seed");
  auto* bench_reps_opt =
      bench->add_option("--replications", bench_reps, "override replication count");
  auto* bench_threads_opt =
      bench->add_option("--threads", bench_threads, "worker threads");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& err) {
    const int code = app.exit(err);
    return code == 0 ? 0 : kExitConfig;
  }

  try {
    if (*fit) {
      if (!fit_input.empty()) fit_cli.input = fit_input;
      if (!fit_output.empty()) fit_cli.output = fit_output;
      if (*fit_seed_opt) fit_cli.seed = fit_seed;
      if (*fit_trim_opt) fit_cli.trim = fit_trim;
      if (*fit_knots_opt) fit_cli.knots = fit_knots;
      if (*fit_degree_opt) fit_cli.degree = fit_degree;
      return run_fit_command(fit_cli);
    }
    if (*sim) return run_simulate_command(sim_cli);
    if (*bench) {
      if (!bench_output.empty()) bench_cli.output = bench_output;
      if (*bench_seed_opt) bench_cli.seed = bench_seed;
      if (*bench_reps_opt) bench_cli.replications = bench_reps;
      if (*bench_threads_opt) bench_cli.threads = bench_threads;
      return run_benchmark_command(bench_cli);
    }
  } catch (const sfma::ConfigError& err) {
    std::cerr << "config error: " << err.what() << "\n";
    return kExitConfig;
  } catch (const sfma::DataError& err) {
    std::cerr << "data error: " << err.what() << "\n";
    return kExitData;
  } catch (const sfma::SolverError& err) {
    std::cerr << "solver error: " << err.what() << "\n";
    return kExitSolver;
  } catch (const sfma::Error& err) {
    std::cerr << "error: " << err.what() << "\n";
    return 1;
  } catch (const std::exception& err) {
    std::cerr << "unexpected error: " << err.what() << "\n";
    return 1;
  }
  return kExitConfig;
}
