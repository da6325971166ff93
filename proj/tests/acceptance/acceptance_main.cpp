// Acceptance suite: each criterion prints one PASS/FAIL line with the
// measured quantities next to the thresholds it was held to.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <functional>
#include <sstream>
#include <string>
#include <vector>

#include "brute_force.hpp"
#include "curvefuse/commands.hpp"
#include "curvefuse/metrics.hpp"
#include "curvefuse/pipeline.hpp"
#include "curvefuse/rng.hpp"
#include "curvefuse/simbench.hpp"
#include "test_util.hpp"

using namespace curvefuse;
namespace fs = std::filesystem;

namespace {

struct Check {
  bool ok;
  std::string detail;
};

struct Outcome {
  bool pass = true;
  std::vector<std::string> failures;
  std::ostringstream summary;

  void require(bool ok, const std::string& what) {
    if (!ok) {
      pass = false;
      failures.push_back(what);
    }
  }
};

double seconds_since(const std::chrono::steady_clock::time_point& start) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
}

struct MethodMeans {
  double k = 0.0, rand = 0.0;
  int failures = 0;
};

MethodMeans summarize(const std::vector<RepOutcome>& outcomes) {
  MethodMeans m;
  int ok = 0;
  for (const auto& rep : outcomes) {
    if (!rep.ok) {
      ++m.failures;
      continue;
    }
    ++ok;
    m.k += rep.k_hat;
    m.rand += rep.rand;
  }
  if (ok > 0) {
    m.k /= ok;
    m.rand /= ok;
  }
  return m;
}

ScenarioConfig table_scenario(CorrectionMode mode, int n_mc, std::uint64_t seed) {
  ScenarioConfig config;
  config.group_size = 20;
  config.c = -3.5;
  config.sigma = 2.0;
  config.correction_mode = mode;
  config.n_mc = n_mc;
  config.master_seed = seed;
  return config;
}

// ---- criterion 1: oracle exactness --------------------------------------
Outcome criterion1() {
  const auto start = std::chrono::steady_clock::now();
  Outcome out;
  ScenarioConfig config = table_scenario(CorrectionMode::Average, 20, 1001);
  auto reps = run_method(config, Method::Oracle);

  int exact = 0;
  double rand_sum = 0.0;
  for (const auto& rep : reps) {
    out.require(rep.ok, "oracle replication failed: " + rep.error);
    if (rep.ok && rep.k_hat == 2.0 && rep.rand == 1.0) ++exact;
    rand_sum += rep.rand;
  }
  const double exact_rate = static_cast<double>(exact) / config.n_mc;
  const double mean_rand = rand_sum / config.n_mc;
  const double elapsed = seconds_since(start);

  out.require(exact_rate >= 0.90, "exact-recovery rate below 0.90");
  out.require(mean_rand >= 0.98, "mean Rand below 0.98");
  out.require(elapsed <= 300.0, "runtime above 5 minutes");
  out.summary << "K=2&Rand=1 in " << exact << "/20, mean Rand " << mean_rand << ", "
              << static_cast<int>(elapsed) << "s";
  return out;
}

// ---- criteria 2 and 3: corrected beats naive -----------------------------
Outcome corrected_vs_naive(CorrectionMode mode, double naive_k_ref, double naive_rand_ref,
                           double corrected_k_ref, double corrected_rand_ref) {
  const auto start = std::chrono::steady_clock::now();
  Outcome out;
  ScenarioConfig config = table_scenario(mode, 50, 2002);

  MethodMeans naive = summarize(run_method(config, Method::Naive));
  MethodMeans corrected = summarize(run_method(config, Method::Corrected));
  const double elapsed = seconds_since(start);

  out.require(naive.failures == 0 && corrected.failures == 0, "replications failed");
  out.require(corrected.rand >= naive.rand + 0.02,
              "corrected Rand does not beat naive by 0.02");
  out.require(corrected.k >= 2.0 && corrected.k <= 3.2, "corrected K outside [2.0, 3.2]");
  out.require(naive.k >= corrected.k + 0.8, "naive K not above corrected K by 0.8");
  out.require(std::abs(naive.rand - naive_rand_ref) <= 0.06, "naive Rand off the reported value");
  out.require(std::abs(corrected.rand - corrected_rand_ref) <= 0.06,
              "corrected Rand off the reported value");
  out.require(std::abs(naive.k - naive_k_ref) <= 1.0, "naive K off the reported value");
  out.require(std::abs(corrected.k - corrected_k_ref) <= 1.0,
              "corrected K off the reported value");
  out.require(elapsed <= 1800.0, "runtime above 30 minutes");

  out.summary << "naive K=" << naive.k << " Rand=" << naive.rand << "; corrected K="
              << corrected.k << " Rand=" << corrected.rand << "; "
              << static_cast<int>(elapsed) << "s";
  return out;
}

Outcome criterion2() { return corrected_vs_naive(CorrectionMode::Average, 4.48, 0.924, 2.42, 0.972); }
Outcome criterion3() { return corrected_vs_naive(CorrectionMode::Single, 4.8, 0.918, 2.34, 0.966); }

// ---- criterion 4: generator fidelity -------------------------------------
Outcome criterion4() {
  Outcome out;
  for (double sigma : {2.0, 3.0}) {
    ScenarioConfig config;
    config.group_size = 25000;  // 1e5 error draws over m=2
    config.replicates = 1;
    config.grid_size = 2;
    config.sigma = sigma;
    SyntheticDataset ds = generate(config, 4004 + static_cast<std::uint64_t>(sigma));

    double eps_sq = 0.0, u_sum = 0.0, u_sq = 0.0, cross = 0.0;
    const int n = ds.data.n_subjects();
    for (int i = 0; i < n; ++i) {
      double u[2];
      for (int k = 0; k < 2; ++k) {
        const double t = ds.data.grid[k];
        const double mean = ds.truth[static_cast<std::size_t>(i)] == 0
                                ? mean_function_one(t)
                                : mean_function_two(t, config.c);
        eps_sq += std::pow(ds.true_curves(i, k) - mean, 2);
        u[k] = ds.data.observations[static_cast<std::size_t>(i)](0, k) - ds.true_curves(i, k);
        u_sum += u[k];
        u_sq += u[k] * u[k];
      }
      cross += u[0] * u[1];
    }
    const double draws = 2.0 * n;
    const double eps_var = eps_sq / draws;
    const double u_mean = u_sum / draws;
    const double u_var = u_sq / draws - u_mean * u_mean;
    const double u_cov = cross / n - u_mean * u_mean;
    const double ratio = u_var / eps_var;
    const double correlation = u_cov / u_var;

    const double ratio_ref = sigma * sigma / 2.0 / 0.16;
    out.require(std::abs(ratio - ratio_ref) <= 0.05 * ratio_ref,
                "variance ratio off by more than 5%");
    out.require(std::abs(correlation - 0.5) <= 0.03, "cross-time correlation off by 0.03");
    out.summary << "sigma=" << sigma << ": ratio " << ratio << " (ref " << ratio_ref
                << "), corr " << correlation << (sigma == 2.0 ? "; " : "");
  }
  return out;
}

// ---- criterion 5: metrics exactness ---------------------------------------
Outcome criterion5() {
  Outcome out;
  std::vector<int> truth{0, 0, 1};
  std::vector<int> estimate{0, 1, 1};
  PairCounts pc = pair_counts(truth, estimate);
  out.require(pc.tp == 0 && pc.tn == 1 && pc.fp == 1 && pc.fn == 1, "worked-example counts");
  out.require(rand_index(pc) == 1.0 / 3.0, "worked-example rand != 1/3");
  out.require(jaccard_index(pc) == 0.0, "worked-example jaccard != 0");
  out.require(std::abs(adjusted_rand_index(truth, estimate) + 0.5) < 1e-12,
              "worked-example arand != -0.5");

  RandomStream stream(5005);
  int mismatches = 0;
  for (int rep = 0; rep < 200; ++rep) {
    const int n = 2 + static_cast<int>(stream.next_u64() % 59);
    auto a = testutil::random_partition(n, 1 + static_cast<int>(stream.next_u64() % 6), stream);
    auto b = testutil::random_partition(n, 1 + static_cast<int>(stream.next_u64() % 6), stream);
    PairCounts fast = pair_counts(a, b);
    PairCounts slow = oracle::pair_counts_bruteforce(a, b);
    if (fast.tp != slow.tp || fast.tn != slow.tn || fast.fp != slow.fp || fast.fn != slow.fn)
      ++mismatches;
  }
  out.require(mismatches == 0, "pair counts disagree with the enumeration oracle");
  out.summary << "worked example exact; 200/200 random pairs bit-identical";
  return out;
}

// ---- criterion 6: fusion limits -------------------------------------------
Outcome criterion6() {
  Outcome out;
  RandomStream stream(6006);
  FusionConfig config;
  config.lambda1_grid = {1e-3};
  config.lambda2_grid = {1.0};

  int unfused_ok = 0, fused_ok = 0;
  for (int rep = 0; rep < 10; ++rep) {
    TimeGrid grid = TimeGrid::equally_spaced(8);
    std::vector<Vector> rows;
    const int n = 8;
    for (int i = 0; i < n; ++i)
      rows.push_back(testutil::noisy_curve(grid, stream.normal(0.0, 2.0), stream.normal(0.0, 1.0),
                                           0.5, stream));
    CurveSet curves = testutil::make_curves(grid, rows);
    auto designs = build_designs(curves, SplineConfig{2, 1, 1});

    FusionFit unfused = fit_fixed(curves, designs, 1e-3, 0.0, config);
    if (unfused.k_hat == n) ++unfused_ok;

    FusionFit fused = fit_fixed(curves, designs, 1e-3, 1e6, config);
    if (fused.k_hat == 1) ++fused_ok;
  }
  out.require(unfused_ok == 10, "lambda2=0 did not give K=n on every dataset");
  out.require(fused_ok == 10, "lambda2=1e6 did not give K=1 on every dataset");
  out.summary << "lambda2=0 -> K=n on " << unfused_ok << "/10; lambda2=1e6 -> K=1 on "
              << fused_ok << "/10";
  return out;
}

// ---- criterion 7: brute-force solver equivalence ---------------------------
Outcome criterion7() {
  Outcome out;
  RandomStream stream(7007);
  double worst_gap = -1e9;
  for (int rep = 0; rep < 5; ++rep) {
    TimeGrid grid = TimeGrid::equally_spaced(4);
    std::vector<Vector> rows;
    for (int i = 0; i < 3; ++i)
      rows.push_back(testutil::noisy_curve(grid, stream.normal(0.0, 0.7), stream.normal(0.0, 0.4),
                                           0.15, stream));
    CurveSet curves = testutil::make_curves(grid, rows);
    auto designs = build_designs(curves, SplineConfig{1, 0, 1});

    FusionConfig config;
    config.lambda1_grid = {0.05};
    config.lambda2_grid = {0.4};
    config.max_iterations = 5000;
    const double lambda1 = 0.05;
    const double lambda2 = 0.35 + 0.1 * stream.uniform();

    FusionFit fit = fit_fixed(curves, designs, lambda1, lambda2, config);
    const double ours = objective(curves, designs, fit.beta, lambda1, lambda2, config.mcp_gamma);
    const double grid_min = oracle::grid_search_minimum(curves, designs, lambda1, lambda2,
                                                        config.mcp_gamma, -3.0, 3.0, 0.05);
    worst_gap = std::max(worst_gap, ours - grid_min);
    out.require(ours <= grid_min + 1e-2, "solver objective above grid minimum + 1e-2");
  }
  out.summary << "worst objective gap vs dense grid: " << worst_gap << " (allowed 1e-2)";
  return out;
}

// ---- criterion 8: conditional-law identities -------------------------------
Outcome criterion8() {
  Outcome out;

  // Sigma_U = 0: pseudo-data reproduces the averaged curves bit for bit.
  RandomStream stream(8008);
  std::vector<Vector> bases;
  TimeGrid grid = TimeGrid::equally_spaced(6);
  for (int i = 0; i < 6; ++i)
    bases.push_back(testutil::noisy_curve(grid, i < 3 ? 0.0 : 4.0, 1.0, 0.2, stream));
  FunctionalDataset data = testutil::make_dataset(bases, 3, 0.0, stream);
  std::vector<int> partition{0, 0, 0, 1, 1, 1};
  CovarianceEstimates est = estimate_covariances(data, partition);
  out.require(est.sigma_u.norm() == 0.0, "sigma_u not exactly zero for identical replicates");
  Matrix pseudo = simulate_pseudo(data, partition, est, 31337);
  out.require((pseudo - data.replicate_means()).norm() == 0.0, "Y* != W-bar under zero error");

  // Loewner order: Sigma_bar <= sigma_eps.
  Matrix sigma_eps(3, 3);
  sigma_eps << 1.5, 0.3, 0.1, 0.3, 1.1, 0.2, 0.1, 0.2, 0.9;
  Matrix sigma_u(3, 3);
  sigma_u << 1.0, 0.4, 0.2, 0.4, 1.3, 0.1, 0.2, 0.1, 0.8;
  Vector zero = Vector::Zero(3);
  auto [mu, sigma_bar] = conditional_params(zero, zero, sigma_eps, sigma_u, 3.0);
  Eigen::SelfAdjointEigenSolver<Matrix> eig(Matrix(sigma_eps - sigma_bar));
  out.require(eig.eigenvalues().minCoeff() >= -1e-10, "sigma_eps - sigma_bar not PSD");

  // Scalar shrinkage worked example.
  Matrix se(1, 1), su(1, 1);
  se << 1.0;
  su << 1.0;
  Vector wbar(1), gm(1);
  wbar << 2.0;
  gm << 0.0;
  auto [mu1, cov1] = conditional_params(wbar, gm, se, su, 1.0);
  out.require(std::abs(mu1(0) - 1.0) <= 1e-12, "scalar mu != 1 within 1e-12");
  out.require(std::abs(cov1(0, 0) - 0.5) <= 1e-12, "scalar sigma != 0.5 within 1e-12");

  out.summary << "zero-error identity exact; Loewner min eig "
              << eig.eigenvalues().minCoeff() << "; scalar example to 1e-12";
  return out;
}

// ---- criterion 9: byte-identical reruns, incl. --parallel ------------------
Outcome criterion9() {
  Outcome out;
  const fs::path root = fs::temp_directory_path() / "curvefuse_acceptance9";
  fs::remove_all(root);
  fs::create_directories(root);

  const fs::path scenario = root / "scenario.cfg";
  atomic_write(scenario,
               "bench.models = far\n"
               "bench.sigmas = 2\n"
               "bench.group_sizes = 4\n"
               "bench.grid_size = 8\n"
               "bench.n_mc = 3\n"
               "fusion.lambda1_min = 1e-3\nfusion.lambda1_max = 1\nfusion.lambda1_count = 4\n"
               "fusion.lambda2_min = 0.1\nfusion.lambda2_max = 5\nfusion.lambda2_count = 8\n"
               "spline.degree = 2\nspline.interior_knots = 1\nspline.penalty_order = 1\n"
               "seed = 99\n");

  auto bench = [&](const fs::path& dir, int threads) {
    commands::BenchOptions options;
    options.scenario_file = scenario;
    options.output_dir = dir;
    options.threads = threads;
    options.emit_data = true;
    commands::cmd_bench(options);
  };
  bench(root / "a", 1);
  bench(root / "b", 1);
  bench(root / "c", 4);

  auto same = [&](const char* name) {
    const std::string a = read_file(root / "a" / name);
    out.require(a == read_file(root / "b" / name), std::string(name) + " differs across reruns");
    out.require(a == read_file(root / "c" / name), std::string(name) + " differs under --parallel");
  };
  same("table.csv");
  same("table.txt");
  same("data_far_sigma2_n8.csv");
  same("data_far_sigma2_n8_truth.csv");

  // fit / correct / evaluate on the emitted dataset.
  commands::CorrectOptions correct;
  correct.base.input_csv = root / "a" / "data_far_sigma2_n8.csv";
  correct.base.output_dir = root / "fit1";
  correct.base.seed = 7;
  correct.base.fusion.lambda1_grid = log_grid(1e-3, 1.0, 4);
  correct.base.fusion.lambda2_grid = log_grid(0.1, 5.0, 8);
  correct.base.spline = SplineConfig{2, 1, 1};
  correct.emit_pseudo = true;
  commands::cmd_correct(correct);
  correct.base.output_dir = root / "fit2";
  correct.base.threads = 4;
  commands::cmd_correct(correct);

  for (const char* name : {"membership.csv", "group_means.csv", "trace.csv", "pseudo_data.csv"})
    out.require(read_file(root / "fit1" / name) == read_file(root / "fit2" / name),
                std::string(name) + " differs across correct reruns");

  commands::EvaluateOptions evaluate;
  evaluate.truth_csv = root / "a" / "data_far_sigma2_n8_truth.csv";
  evaluate.estimate_csv = root / "fit1" / "membership.csv";
  evaluate.output_dir = root / "eval1";
  commands::cmd_evaluate(evaluate);
  evaluate.output_dir = root / "eval2";
  commands::cmd_evaluate(evaluate);
  out.require(read_file(root / "eval1" / "metrics.json") == read_file(root / "eval2" / "metrics.json"),
              "metrics.json differs across reruns");

  out.summary << "bench/correct/evaluate outputs byte-identical across reruns and thread counts";
  fs::remove_all(root);
  return out;
}

}  // namespace

int main(int argc, char** argv) {
  using Fn = std::function<Outcome()>;
  const std::vector<std::pair<const char*, Fn>> criteria{
      {"oracle exactness on Far/sigma=2/n=40", criterion1},
      {"correction beats naive, averaged data", criterion2},
      {"correction beats naive, single measure", criterion3},
      {"generator fidelity", criterion4},
      {"metrics exactness", criterion5},
      {"fusion limits", criterion6},
      {"brute-force solver equivalence", criterion7},
      {"conditional-law identities", criterion8},
      {"determinism", criterion9},
  };

  int selected = 0;  // 0 = all
  if (argc > 1 && std::strcmp(argv[1], "all") != 0) selected = std::atoi(argv[1]);
  if (argc > 1 && (selected < 0 || selected > static_cast<int>(criteria.size()))) {
    std::fprintf(stderr, "usage: %s [1-%zu|all]\n", argv[0], criteria.size());
    return 2;
  }

  bool all_pass = true;
  for (std::size_t k = 0; k < criteria.size(); ++k) {
    if (selected != 0 && static_cast<int>(k + 1) != selected) continue;
    Outcome outcome = criteria[k].second();
    std::printf("criterion %zu (%s): %s — %s", k + 1, criteria[k].first,
                outcome.pass ? "PASS" : "FAIL", outcome.summary.str().c_str());
    if (!outcome.pass) {
      all_pass = false;
      for (const auto& f : outcome.failures) std::printf(" [%s]", f.c_str());
    }
    std::printf("\n");
    std::fflush(stdout);
  }
  return all_pass ? 0 : 1;
}
