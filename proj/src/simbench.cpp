#include "curvefuse/simbench.hpp"

#include <cmath>
#include <cstdio>
#include <sstream>
#include <stdexcept>

#include "curvefuse/metrics.hpp"
#include "curvefuse/rng.hpp"

#ifdef CURVEFUSE_HAVE_OPENMP
#include <omp.h>
#endif

namespace curvefuse {

namespace {
constexpr double kPi = 3.14159265358979323846;
}

void ScenarioConfig::validate() const {
  if (group_size < 1) throw std::invalid_argument("group_size must be >= 1");
  if (sigma <= 0.0) throw std::invalid_argument("sigma must be positive");
  if (replicates < 1) throw std::invalid_argument("replicates must be >= 1");
  if (grid_size < 2) throw std::invalid_argument("grid_size must be >= 2");
  if (noise_sd < 0.0) throw std::invalid_argument("noise_sd must be nonnegative");
  if (n_mc < 1) throw std::invalid_argument("n_mc must be >= 1");
  if (max_outer_iterations < 1) throw std::invalid_argument("max_outer_iterations must be >= 1");
  fusion.validate();
  spline.validate();
}

std::string ScenarioConfig::model_label() const {
  if (c == -3.5) return "far";
  if (c == -0.5) return "close";
  std::ostringstream os;
  os << "c=" << c;
  return os.str();
}

double mean_function_one(double t) { return std::cos(1.5 * kPi * t) + 2.5; }
double mean_function_two(double t, double c) { return std::sin(1.5 * kPi * t) + c; }

SyntheticDataset generate(const ScenarioConfig& config, std::uint64_t seed) {
  config.validate();
  const int n = 2 * config.group_size;
  const int m = config.grid_size;
  const int j = config.replicates;

  SyntheticDataset out;
  out.seed = seed;
  out.truth.assign(static_cast<std::size_t>(n), 0);
  for (int i = config.group_size; i < n; ++i) out.truth[static_cast<std::size_t>(i)] = 1;

  out.data.grid = TimeGrid::equally_spaced(m);
  out.data.subject_ids.reserve(static_cast<std::size_t>(n));
  out.data.observations.reserve(static_cast<std::size_t>(n));
  out.true_curves.resize(n, m);

  RandomStream stream(derive_seed(seed, 0xDA7A));
  const double error_sd = config.sigma / 2.0;  // gamma and gamma' are N(0, sigma^2/4)

  for (int i = 0; i < n; ++i) {
    char buf[16];
    std::snprintf(buf, sizeof(buf), "s%03d", i);
    out.data.subject_ids.emplace_back(buf);

    for (int k = 0; k < m; ++k) {
      const double t = out.data.grid[k];
      const double mean = out.truth[static_cast<std::size_t>(i)] == 0
                              ? mean_function_one(t)
                              : mean_function_two(t, config.c);
      out.true_curves(i, k) = mean + stream.normal(0.0, config.noise_sd);
    }

    Matrix w(j, m);
    for (int r = 0; r < j; ++r) {
      const double shared = stream.normal(0.0, error_sd);
      for (int k = 0; k < m; ++k)
        w(r, k) = out.true_curves(i, k) + shared + stream.normal(0.0, error_sd);
    }
    out.data.observations.push_back(std::move(w));
  }
  return out;
}

const char* to_string(Method method) {
  switch (method) {
    case Method::Oracle:
      return "oracle";
    case Method::Naive:
      return "naive";
    case Method::Corrected:
      return "corrected";
  }
  return "?";
}

namespace {

RepOutcome evaluate_partition(const std::vector<int>& truth, const std::vector<int>& estimate) {
  RepOutcome rep;
  rep.ok = true;
  rep.k_hat = static_cast<double>(cluster_count(estimate));
  PairCounts pc = pair_counts(truth, estimate);
  rep.rand = rand_index(pc);
  rep.jaccard = jaccard_index(pc);
  rep.arand = adjusted_rand_index(truth, estimate);
  return rep;
}

RepOutcome run_one(const ScenarioConfig& config, Method method, int replication) {
  const std::uint64_t rep_seed = derive_seed(config.master_seed, 0x5EED,
                                             static_cast<std::uint64_t>(replication));
  SyntheticDataset ds = generate(config, rep_seed);

  // Inner solves stay serial; the fan-out happens across replications.
  FusionConfig fusion = config.fusion;
  fusion.threads = 1;

  try {
    switch (method) {
      case Method::Oracle: {
        CurveSet curves = curves_from_matrix(ds.data, ds.true_curves);
        auto designs = build_designs(curves, config.spline);
        FusionFit fit = select_and_fit(curves, designs, fusion);
        return evaluate_partition(ds.truth, fit.partition);
      }
      case Method::Naive: {
        CurveSet curves = curves_from_dataset(ds.data, config.correction_mode);
        auto designs = build_designs(curves, config.spline);
        FusionFit fit = select_and_fit(curves, designs, fusion);
        return evaluate_partition(ds.truth, fit.partition);
      }
      case Method::Corrected: {
        PipelineConfig pipe;
        pipe.mode = config.correction_mode;
        pipe.max_outer_iterations = config.max_outer_iterations;
        pipe.seed = derive_seed(rep_seed, 0xC0DE);
        pipe.fusion = fusion;
        pipe.spline = config.spline;
        PipelineResult result = run(ds.data, pipe);
        return evaluate_partition(ds.truth, result.partition);
      }
    }
  } catch (const std::exception& ex) {
    RepOutcome rep;
    rep.ok = false;
    rep.error = ex.what();
    return rep;
  }
  RepOutcome rep;
  rep.error = "unreachable";
  return rep;
}

}  // namespace

std::vector<RepOutcome> run_method(const ScenarioConfig& config, Method method) {
  config.validate();
  std::vector<RepOutcome> outcomes(static_cast<std::size_t>(config.n_mc));

#ifdef CURVEFUSE_HAVE_OPENMP
  if (config.threads > 1) {
#pragma omp parallel for num_threads(config.threads) schedule(dynamic)
    for (int r = 0; r < config.n_mc; ++r)
      outcomes[static_cast<std::size_t>(r)] = run_one(config, method, r);
    return outcomes;
  }
#endif
  for (int r = 0; r < config.n_mc; ++r)
    outcomes[static_cast<std::size_t>(r)] = run_one(config, method, r);
  return outcomes;
}

std::vector<BenchRow> run_benchmark(const ScenarioConfig& config,
                                    const std::vector<Method>& methods) {
  config.validate();
  std::vector<BenchRow> rows;
  rows.reserve(methods.size());
  for (Method method : methods) {
    std::vector<RepOutcome> outcomes = run_method(config, method);
    BenchRow row;
    row.model = config.model_label();
    row.sigma = config.sigma;
    row.n = 2 * config.group_size;
    row.method = to_string(method);
    row.n_mc = config.n_mc;
    int ok = 0;
    for (const auto& rep : outcomes) {
      if (!rep.ok) {
        row.failures++;
        continue;
      }
      ++ok;
      row.mean_clusters += rep.k_hat;
      row.mean_rand += rep.rand;
      row.mean_jaccard += rep.jaccard;
      row.mean_arand += rep.arand;
    }
    if (ok > 0) {
      row.mean_clusters /= ok;
      row.mean_rand /= ok;
      row.mean_jaccard /= ok;
      row.mean_arand /= ok;
    }
    rows.push_back(std::move(row));
  }
  return rows;
}

std::string table_csv(const std::vector<BenchRow>& rows) {
  std::ostringstream os;
  os << "model,sigma,n,method,mean_clusters,mean_rand,mean_jaccard,mean_arand,failures,n_mc\n";
  char buf[64];
  for (const auto& r : rows) {
    os << r.model << ',';
    std::snprintf(buf, sizeof(buf), "%.17g", r.sigma);
    os << buf << ',' << r.n << ',' << r.method << ',';
    std::snprintf(buf, sizeof(buf), "%.17g", r.mean_clusters);
    os << buf << ',';
    std::snprintf(buf, sizeof(buf), "%.17g", r.mean_rand);
    os << buf << ',';
    std::snprintf(buf, sizeof(buf), "%.17g", r.mean_jaccard);
    os << buf << ',';
    std::snprintf(buf, sizeof(buf), "%.17g", r.mean_arand);
    os << buf << ',' << r.failures << ',' << r.n_mc << '\n';
  }
  return os.str();
}

std::string render_table(const std::vector<BenchRow>& rows) {
  std::ostringstream os;
  char line[160];
  std::snprintf(line, sizeof(line), "%-8s %-6s %-5s %-10s %10s %8s %9s %8s %9s\n", "model",
                "sigma", "n", "method", "#clusters", "Rand", "Jaccard", "aRand", "failures");
  os << line;
  for (const auto& r : rows) {
    std::snprintf(line, sizeof(line), "%-8s %-6.3g %-5d %-10s %10.3f %8.3f %9.3f %8.3f %6d/%d\n",
                  r.model.c_str(), r.sigma, r.n, r.method.c_str(), r.mean_clusters, r.mean_rand,
                  r.mean_jaccard, r.mean_arand, r.failures, r.n_mc);
    os << line;
  }
  return os.str();
}

}  // namespace curvefuse
