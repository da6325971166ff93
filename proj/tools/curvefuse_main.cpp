#include <CLI11.hpp>
#include <cstdio>
#include <exception>
#include <iostream>

#include "curvefuse/commands.hpp"
#include "curvefuse/version.hpp"

namespace {

using curvefuse::commands::BenchOptions;
using curvefuse::commands::CorrectOptions;
using curvefuse::commands::EvaluateOptions;
using curvefuse::commands::FitOptions;

struct SharedFlags {
  std::string config_file;
  std::string mode = "average";
  double bins = 0.0;
  std::vector<double> truncate;
  int parallel = 1;
};

void add_shared(CLI::App* cmd, FitOptions& options, SharedFlags& flags) {
  cmd->add_option("input", options.input_csv, "long-format CSV (subject,replicate,time,value)")
      ->required();
  cmd->add_option("-o,--output", options.output_dir, "output directory (default .)");
  cmd->add_option("--seed", options.seed, "random seed");
  cmd->add_option("--config", flags.config_file, "flat key = value config file");
  cmd->add_option("--mode", flags.mode, "average|single: which observed curve to cluster")
      ->check(CLI::IsMember({"average", "single"}));
  cmd->add_option("--bins", flags.bins, "bin width for time averaging (input time units)");
  cmd->add_option("--truncate", flags.truncate, "keep observations with t0 <= time <= t1")
      ->expected(2);
  cmd->add_option("--parallel", flags.parallel, "worker threads (results are thread-count invariant)");
  cmd->add_flag("--center", options.ingest.center, "subtract each replicate curve's mean");
  cmd->add_option("--replicates", options.ingest.replicates_required,
                  "replicates required per subject (0 = minimum present)");
  cmd->add_flag("!--no-impute", options.ingest.impute_missing, "fail on missing values");
  cmd->add_flag("!--no-rescale", options.ingest.rescale_time, "keep the original time axis");
}

void finish_shared(FitOptions& options, const SharedFlags& flags, int* max_outer) {
  if (!flags.config_file.empty())
    curvefuse::commands::apply_config(curvefuse::load_config_file(flags.config_file), options,
                                      max_outer);
  options.mode = curvefuse::correction_mode_from_string(flags.mode);
  if (flags.bins > 0.0) options.ingest.bin_width = flags.bins;
  if (!flags.truncate.empty()) {
    options.ingest.truncate_lo = flags.truncate[0];
    options.ingest.truncate_hi = flags.truncate[1];
  }
  options.threads = flags.parallel;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"curvefuse: fusion-penalized clustering of error-prone functional data"};
  app.set_version_flag("--version", curvefuse::kVersion);
  app.require_subcommand(1);

  FitOptions fit_options;
  SharedFlags fit_flags;
  CLI::App* fit = app.add_subcommand("fit", "cluster observed curves (no error correction)");
  add_shared(fit, fit_options, fit_flags);

  CorrectOptions correct_options;
  SharedFlags correct_flags;
  CLI::App* correct =
      app.add_subcommand("correct", "iterative measurement-error-corrected clustering");
  add_shared(correct, correct_options.base, correct_flags);
  correct->add_option("--max-outer", correct_options.max_outer_iterations,
                      "correction passes before giving up");
  correct->add_flag("--emit-data", correct_options.emit_pseudo,
                    "also write the pseudo-data behind the returned fit");

  EvaluateOptions evaluate_options;
  CLI::App* evaluate = app.add_subcommand("evaluate", "compare two membership CSVs");
  evaluate->add_option("truth", evaluate_options.truth_csv, "truth membership CSV")->required();
  evaluate->add_option("estimate", evaluate_options.estimate_csv, "estimated membership CSV")
      ->required();
  evaluate->add_option("-o,--output", evaluate_options.output_dir, "output directory (default .)");

  BenchOptions bench_options;
  std::uint64_t bench_seed = 0;
  bool bench_seed_set = false;
  CLI::App* bench = app.add_subcommand("bench", "replicated synthetic-scenario comparison");
  bench->add_option("scenario", bench_options.scenario_file, "scenario config file")->required();
  bench->add_option("-o,--output", bench_options.output_dir, "output directory (default .)");
  bench->add_option_function<std::uint64_t>(
      "--seed", [&](const std::uint64_t& v) { bench_seed = v; bench_seed_set = true; },
      "master seed (overrides the scenario file)");
  bench->add_option("--parallel", bench_options.threads, "replication worker threads");
  bench->add_flag("--emit-data", bench_options.emit_data,
                  "write replication-0 datasets and truth labels per scenario");

  CLI11_PARSE(app, argc, argv);

  try {
    std::string report;
    if (*fit) {
      finish_shared(fit_options, fit_flags, nullptr);
      report = curvefuse::commands::cmd_fit(fit_options);
    } else if (*correct) {
      finish_shared(correct_options.base, correct_flags, &correct_options.max_outer_iterations);
      report = curvefuse::commands::cmd_correct(correct_options);
    } else if (*evaluate) {
      report = curvefuse::commands::cmd_evaluate(evaluate_options);
    } else if (*bench) {
      if (bench_seed_set) bench_options.seed_override = bench_seed;
      report = curvefuse::commands::cmd_bench(bench_options);
    }
    std::cout << report;
    return 0;
  } catch (const curvefuse::DataError& ex) {
    std::cerr << "data error: " << ex.what() << '\n';
    return 2;
  } catch (const std::invalid_argument& ex) {
    std::cerr << "usage error: " << ex.what() << '\n';
    return 1;
  } catch (const std::exception& ex) {
    std::cerr << "numerical failure: " << ex.what() << '\n';
    return 3;
  }
}
