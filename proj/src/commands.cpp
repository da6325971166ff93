#include "curvefuse/commands.hpp"

#include <algorithm>
#include <set>
#include <sstream>
#include <stdexcept>

#include <json.hpp>

#include "curvefuse/metrics.hpp"
#include "curvefuse/rng.hpp"
#include "curvefuse/version.hpp"

namespace curvefuse::commands {

namespace fs = std::filesystem;

namespace {

double to_double(const std::string& key, const std::string& value) {
  try {
    std::size_t used = 0;
    double out = std::stod(value, &used);
    if (used != value.size()) throw std::invalid_argument(value);
    return out;
  } catch (const std::exception&) {
    throw DataError("config key '" + key + "': not a number: '" + value + "'");
  }
}

int to_int(const std::string& key, const std::string& value) {
  try {
    std::size_t used = 0;
    int out = std::stoi(value, &used);
    if (used != value.size()) throw std::invalid_argument(value);
    return out;
  } catch (const std::exception&) {
    throw DataError("config key '" + key + "': not an integer: '" + value + "'");
  }
}

bool to_bool(const std::string& key, const std::string& value) {
  if (value == "true" || value == "1" || value == "yes") return true;
  if (value == "false" || value == "0" || value == "no") return false;
  throw DataError("config key '" + key + "': not a boolean: '" + value + "'");
}

std::vector<double> to_double_list(const std::string& key, const std::string& value) {
  std::vector<double> out;
  for (const auto& item : split_csv_list(value)) out.push_back(to_double(key, item));
  if (out.empty()) throw DataError("config key '" + key + "': empty list");
  return out;
}

void append_fusion_config(std::vector<std::pair<std::string, std::string>>& dst,
                          const FusionConfig& fusion, const SplineConfig& spline) {
  dst.emplace_back("fusion.lambda1_grid_size", std::to_string(fusion.lambda1_grid.size()));
  dst.emplace_back("fusion.lambda1_min", format_double(fusion.lambda1_grid.front()));
  dst.emplace_back("fusion.lambda1_max", format_double(fusion.lambda1_grid.back()));
  dst.emplace_back("fusion.lambda2_grid_size", std::to_string(fusion.lambda2_grid.size()));
  dst.emplace_back("fusion.lambda2_min", format_double(fusion.lambda2_grid.front()));
  dst.emplace_back("fusion.lambda2_max", format_double(fusion.lambda2_grid.back()));
  dst.emplace_back("fusion.gamma", format_double(fusion.mcp_gamma));
  dst.emplace_back("fusion.theta", format_double(fusion.admm_theta));
  dst.emplace_back("fusion.max_iterations", std::to_string(fusion.max_iterations));
  dst.emplace_back("fusion.primal_tolerance", format_double(fusion.primal_tolerance));
  dst.emplace_back("fusion.fuse_tolerance", format_double(fusion.fuse_tolerance));
  dst.emplace_back("spline.degree", std::to_string(spline.degree));
  dst.emplace_back("spline.interior_knots", std::to_string(spline.interior_knots));
  dst.emplace_back("spline.penalty_order", std::to_string(spline.penalty_order));
}

std::string group_means_csv(const CurveSet& curves, const std::vector<SplineDesign>& designs,
                            const FusionFit& fit) {
  std::ostringstream os;
  os << "cluster,time,value\n";
  std::set<int> written;
  for (int i = 0; i < curves.size(); ++i) {
    const int label = fit.partition[static_cast<std::size_t>(i)];
    if (!written.insert(label).second) continue;
    const auto& design = designs[static_cast<std::size_t>(i)];
    Vector fitted = design.basis * fit.beta.row(i).transpose();
    const auto& grid = curves.subjects[static_cast<std::size_t>(i)].grid;
    for (int k = 0; k < grid.size(); ++k)
      os << label << ',' << format_double(grid[k]) << ',' << format_double(fitted(k)) << '\n';
  }
  return os.str();
}

std::string trace_csv(const IterationTrace& trace) {
  std::ostringstream os;
  os << "iteration,k_hat,lambda1,lambda2,bic2,membership_changes,stop_reason\n";
  for (std::size_t r = 0; r < trace.records.size(); ++r) {
    const auto& rec = trace.records[r];
    os << rec.iteration << ',' << rec.k_hat << ',' << format_double(rec.lambda1) << ','
       << format_double(rec.lambda2) << ',' << format_double(rec.bic2) << ','
       << rec.membership_changes << ','
       << (r + 1 == trace.records.size() ? trace.stop_reason : "") << '\n';
  }
  return os.str();
}

std::string pseudo_csv(const FunctionalDataset& data, const Matrix& pseudo) {
  std::ostringstream os;
  os << "subject,time,value\n";
  for (int i = 0; i < data.n_subjects(); ++i)
    for (int k = 0; k < data.grid_size(); ++k)
      os << data.subject_ids[static_cast<std::size_t>(i)] << ',' << format_double(data.grid[k])
         << ',' << format_double(pseudo(i, k)) << '\n';
  return os.str();
}

void write_output(RunManifest& manifest, const fs::path& dir, const std::string& name,
                  const std::string& content) {
  atomic_write(dir / name, content);
  manifest.outputs.emplace_back(name, fnv1a_digest(content));
}

void append_ingest_config(RunManifest& manifest, const IngestOptions& ingest) {
  manifest.config.emplace_back("ingest.impute", ingest.impute_missing ? "true" : "false");
  manifest.config.emplace_back("ingest.bin_width", format_double(ingest.bin_width));
  manifest.config.emplace_back("ingest.center", ingest.center ? "true" : "false");
  if (ingest.truncate_lo)
    manifest.config.emplace_back("ingest.truncate_lo", format_double(*ingest.truncate_lo));
  if (ingest.truncate_hi)
    manifest.config.emplace_back("ingest.truncate_hi", format_double(*ingest.truncate_hi));
  manifest.config.emplace_back("ingest.rescale_time", ingest.rescale_time ? "true" : "false");
  manifest.config.emplace_back("ingest.replicates_required",
                               std::to_string(ingest.replicates_required));
}

}  // namespace

void apply_config(const std::map<std::string, std::string>& config, FitOptions& options,
                  int* max_outer) {
  for (const auto& [key, value] : config) {
    if (key == "seed")
      options.seed = static_cast<std::uint64_t>(std::stoull(value));
    else if (key == "fusion.lambda1_grid")
      options.fusion.lambda1_grid = to_double_list(key, value);
    else if (key == "fusion.lambda2_grid")
      options.fusion.lambda2_grid = to_double_list(key, value);
    else if (key == "fusion.lambda1_min" || key == "fusion.lambda1_max" ||
             key == "fusion.lambda1_count" || key == "fusion.lambda2_min" ||
             key == "fusion.lambda2_max" || key == "fusion.lambda2_count")
      continue;  // handled jointly below
    else if (key == "fusion.gamma")
      options.fusion.mcp_gamma = to_double(key, value);
    else if (key == "fusion.theta")
      options.fusion.admm_theta = to_double(key, value);
    else if (key == "fusion.max_iterations")
      options.fusion.max_iterations = to_int(key, value);
    else if (key == "fusion.primal_tolerance")
      options.fusion.primal_tolerance = to_double(key, value);
    else if (key == "fusion.fuse_tolerance")
      options.fusion.fuse_tolerance = to_double(key, value);
    else if (key == "spline.degree")
      options.spline.degree = to_int(key, value);
    else if (key == "spline.interior_knots")
      options.spline.interior_knots = to_int(key, value);
    else if (key == "spline.penalty_order")
      options.spline.penalty_order = to_int(key, value);
    else if (key == "pipeline.mode")
      options.mode = correction_mode_from_string(value);
    else if (key == "pipeline.max_outer_iterations") {
      if (max_outer) *max_outer = to_int(key, value);
    } else if (key == "ingest.impute")
      options.ingest.impute_missing = to_bool(key, value);
    else if (key == "ingest.bin_width")
      options.ingest.bin_width = to_double(key, value);
    else if (key == "ingest.center")
      options.ingest.center = to_bool(key, value);
    else if (key == "ingest.truncate_lo")
      options.ingest.truncate_lo = to_double(key, value);
    else if (key == "ingest.truncate_hi")
      options.ingest.truncate_hi = to_double(key, value);
    else if (key == "ingest.rescale_time")
      options.ingest.rescale_time = to_bool(key, value);
    else if (key == "ingest.replicates_required")
      options.ingest.replicates_required = to_int(key, value);
    else
      throw DataError("unknown config key '" + key + "'");
  }

  // Grid bounds come as min/max/count triples.
  auto grid_from = [&](const char* prefix, const std::vector<double>& current) {
    const std::string min_key = std::string(prefix) + "_min";
    const std::string max_key = std::string(prefix) + "_max";
    const std::string count_key = std::string(prefix) + "_count";
    const bool any = config.count(min_key) || config.count(max_key) || config.count(count_key);
    if (!any) return current;
    double lo = config.count(min_key) ? to_double(min_key, config.at(min_key)) : current.front();
    double hi = config.count(max_key) ? to_double(max_key, config.at(max_key)) : current.back();
    int count = config.count(count_key) ? to_int(count_key, config.at(count_key))
                                        : static_cast<int>(current.size());
    return log_grid(lo, hi, count);
  };
  if (!config.count("fusion.lambda1_grid"))
    options.fusion.lambda1_grid = grid_from("fusion.lambda1", options.fusion.lambda1_grid);
  if (!config.count("fusion.lambda2_grid"))
    options.fusion.lambda2_grid = grid_from("fusion.lambda2", options.fusion.lambda2_grid);
}

std::string cmd_fit(const FitOptions& options) {
  IngestResult ingested = ingest(options.input_csv, options.ingest);

  CurveSet curves = curves_from_dataset(ingested.data, options.mode);
  auto designs = build_designs(curves, options.spline);
  FusionConfig fusion = options.fusion;
  fusion.threads = options.threads;
  FusionFit fit = select_and_fit(curves, designs, fusion);

  RunManifest manifest;
  manifest.command = "fit";
  manifest.seed = options.seed;
  manifest.config.emplace_back("mode", to_string(options.mode));
  append_ingest_config(manifest, options.ingest);
  append_fusion_config(manifest.config, fusion, options.spline);
  manifest.inputs.emplace_back(options.input_csv.string(), file_digest(options.input_csv));

  write_output(manifest, options.output_dir, "membership.csv",
               membership_csv(ingested.data.subject_ids, fit.partition));
  write_output(manifest, options.output_dir, "group_means.csv",
               group_means_csv(curves, designs, fit));
  atomic_write(options.output_dir / "manifest.txt", manifest.render());

  std::ostringstream os;
  for (const auto& w : ingested.warnings) os << "warning: " << w << '\n';
  for (const auto& w : fit.warnings) os << "warning: " << w << '\n';
  os << "subjects: " << curves.size() << "\nclusters: " << fit.k_hat
     << "\nlambda1: " << format_double(fit.lambda1) << "\nlambda2: " << format_double(fit.lambda2)
     << "\nbic1: " << format_double(fit.bic1) << "\nbic2: " << format_double(fit.bic2) << '\n';
  return os.str();
}

std::string cmd_correct(const CorrectOptions& options) {
  const FitOptions& base = options.base;
  IngestResult ingested = ingest(base.input_csv, base.ingest);

  PipelineConfig pipe;
  pipe.mode = base.mode;
  pipe.max_outer_iterations = options.max_outer_iterations;
  pipe.seed = base.seed;
  pipe.fusion = base.fusion;
  pipe.fusion.threads = base.threads;
  pipe.spline = base.spline;

  PipelineResult result = run(ingested.data, pipe);

  RunManifest manifest;
  manifest.command = "correct";
  manifest.seed = base.seed;
  manifest.config.emplace_back("mode", to_string(base.mode));
  manifest.config.emplace_back("pipeline.max_outer_iterations",
                               std::to_string(options.max_outer_iterations));
  append_ingest_config(manifest, base.ingest);
  append_fusion_config(manifest.config, pipe.fusion, base.spline);
  manifest.inputs.emplace_back(base.input_csv.string(), file_digest(base.input_csv));

  CurveSet curves = curves_from_dataset(ingested.data, base.mode);
  auto designs = build_designs(curves, base.spline);

  write_output(manifest, base.output_dir, "membership.csv",
               membership_csv(ingested.data.subject_ids, result.partition));
  write_output(manifest, base.output_dir, "group_means.csv",
               group_means_csv(curves, designs, result.fit));
  write_output(manifest, base.output_dir, "trace.csv", trace_csv(result.trace));

  if (options.emit_pseudo && result.pseudo_data.size() > 0)
    write_output(manifest, base.output_dir, "pseudo_data.csv",
                 pseudo_csv(ingested.data, result.pseudo_data));
  atomic_write(base.output_dir / "manifest.txt", manifest.render());

  std::ostringstream os;
  for (const auto& w : ingested.warnings) os << "warning: " << w << '\n';
  for (const auto& w : result.trace.warnings) os << "warning: " << w << '\n';
  os << "subjects: " << ingested.data.n_subjects() << "\nclusters: " << result.fit.k_hat
     << "\nstop_reason: " << result.trace.stop_reason
     << "\niterations: " << result.trace.records.back().iteration << '\n';
  return os.str();
}

std::string cmd_evaluate(const EvaluateOptions& options) {
  auto truth_map = read_membership_csv(options.truth_csv);
  auto estimate_map = read_membership_csv(options.estimate_csv);

  std::vector<std::string> missing;
  for (const auto& [subject, label] : truth_map)
    if (!estimate_map.count(subject)) missing.push_back("estimate lacks '" + subject + "'");
  for (const auto& [subject, label] : estimate_map)
    if (!truth_map.count(subject)) missing.push_back("truth lacks '" + subject + "'");
  if (!missing.empty()) {
    std::string detail;
    for (const auto& item : missing) detail += "\n  " + item;
    throw DataError("subject sets differ between the two membership files:" + detail);
  }

  std::vector<int> truth, estimate;
  truth.reserve(truth_map.size());
  estimate.reserve(truth_map.size());
  for (const auto& [subject, label] : truth_map) {
    truth.push_back(label);
    estimate.push_back(estimate_map.at(subject));
  }

  PairCounts pc = pair_counts(truth, estimate);
  nlohmann::json out;
  out["pair_counts"] = {{"tp", pc.tp}, {"tn", pc.tn}, {"fp", pc.fp}, {"fn", pc.fn}};
  out["rand"] = rand_index(pc);
  out["jaccard"] = jaccard_index(pc);
  out["arand"] = adjusted_rand_index(truth, estimate);
  std::string text = out.dump(2) + "\n";

  RunManifest manifest;
  manifest.command = "evaluate";
  manifest.inputs.emplace_back(options.truth_csv.string(), file_digest(options.truth_csv));
  manifest.inputs.emplace_back(options.estimate_csv.string(), file_digest(options.estimate_csv));
  write_output(manifest, options.output_dir, "metrics.json", text);
  atomic_write(options.output_dir / "manifest.txt", manifest.render());
  return text;
}

std::string cmd_bench(const BenchOptions& options) {
  auto config = load_config_file(options.scenario_file);

  ScenarioConfig base;
  std::vector<double> c_values{base.c};
  std::vector<double> sigmas{base.sigma};
  std::vector<int> group_sizes{base.group_size};
  std::vector<Method> methods{Method::Oracle, Method::Naive, Method::Corrected};

  FitOptions shared;  // reuse fusion/spline/seed parsing
  int max_outer = base.max_outer_iterations;
  std::map<std::string, std::string> passthrough;
  for (const auto& [key, value] : config) {
    if (key == "bench.models") {
      c_values.clear();
      for (const auto& item : split_csv_list(value)) {
        if (item == "far")
          c_values.push_back(-3.5);
        else if (item == "close")
          c_values.push_back(-0.5);
        else
          c_values.push_back(to_double(key, item));
      }
    } else if (key == "bench.sigmas")
      sigmas = to_double_list(key, value);
    else if (key == "bench.group_sizes") {
      group_sizes.clear();
      for (const auto& item : split_csv_list(value)) group_sizes.push_back(to_int(key, item));
    } else if (key == "bench.methods") {
      methods.clear();
      for (const auto& item : split_csv_list(value)) {
        if (item == "oracle")
          methods.push_back(Method::Oracle);
        else if (item == "naive")
          methods.push_back(Method::Naive);
        else if (item == "corrected")
          methods.push_back(Method::Corrected);
        else
          throw DataError("unknown method '" + item + "' in bench.methods");
      }
    } else if (key == "bench.mode")
      base.correction_mode = correction_mode_from_string(value);
    else if (key == "bench.n_mc")
      base.n_mc = to_int(key, value);
    else if (key == "bench.replicates")
      base.replicates = to_int(key, value);
    else if (key == "bench.grid_size")
      base.grid_size = to_int(key, value);
    else if (key == "bench.noise_sd")
      base.noise_sd = to_double(key, value);
    else if (key == "bench.max_outer_iterations")
      base.max_outer_iterations = to_int(key, value);
    else
      passthrough.emplace(key, value);
  }
  apply_config(passthrough, shared, &max_outer);
  base.fusion = shared.fusion;
  base.spline = shared.spline;
  base.master_seed = options.seed_override.value_or(shared.seed);
  base.threads = options.threads;

  RunManifest manifest;
  manifest.command = "bench";
  manifest.seed = base.master_seed;
  manifest.inputs.emplace_back(options.scenario_file.string(),
                               file_digest(options.scenario_file));
  manifest.config.emplace_back("bench.mode", to_string(base.correction_mode));
  manifest.config.emplace_back("bench.n_mc", std::to_string(base.n_mc));
  manifest.config.emplace_back("bench.replicates", std::to_string(base.replicates));
  manifest.config.emplace_back("bench.grid_size", std::to_string(base.grid_size));
  manifest.config.emplace_back("bench.noise_sd", format_double(base.noise_sd));
  append_fusion_config(manifest.config, base.fusion, base.spline);

  std::vector<BenchRow> rows;
  for (int group_size : group_sizes)
    for (double sigma : sigmas)
      for (double c : c_values) {
        ScenarioConfig scenario = base;
        scenario.group_size = group_size;
        scenario.sigma = sigma;
        scenario.c = c;
        auto scenario_rows = run_benchmark(scenario, methods);
        rows.insert(rows.end(), scenario_rows.begin(), scenario_rows.end());

        if (options.emit_data) {
          SyntheticDataset ds =
              generate(scenario, derive_seed(scenario.master_seed, 0x5EED, 0));
          std::ostringstream stem;
          stem << "data_" << scenario.model_label() << "_sigma" << sigma << "_n"
               << 2 * group_size;
          write_output(manifest, options.output_dir, stem.str() + ".csv", long_csv(ds.data));
          write_output(manifest, options.output_dir, stem.str() + "_truth.csv",
                       membership_csv(ds.data.subject_ids, ds.truth));
        }
      }

  const std::string csv = table_csv(rows);
  const std::string txt = render_table(rows);
  write_output(manifest, options.output_dir, "table.csv", csv);
  write_output(manifest, options.output_dir, "table.txt", txt);
  atomic_write(options.output_dir / "manifest.txt", manifest.render());
  return txt;
}

}  // namespace curvefuse::commands
