#include "curvefuse/pipeline.hpp"

#include <stdexcept>
#include <utility>

#include "curvefuse/metrics.hpp"
#include "curvefuse/rng.hpp"

namespace curvefuse {

void PipelineConfig::validate() const {
  if (max_outer_iterations < 1)
    throw std::invalid_argument("max_outer_iterations must be >= 1");
  fusion.validate();
  spline.validate();
}

CurveSet curves_from_matrix(const FunctionalDataset& data, const Matrix& values) {
  CurveSet curves;
  curves.subjects.reserve(static_cast<std::size_t>(data.n_subjects()));
  for (int i = 0; i < data.n_subjects(); ++i) {
    SubjectCurve s;
    s.id = data.subject_ids[static_cast<std::size_t>(i)];
    s.grid = data.grid;
    s.values = values.row(i).transpose();
    curves.subjects.push_back(std::move(s));
  }
  return curves;
}

CurveSet curves_from_dataset(const FunctionalDataset& data, CorrectionMode mode) {
  return curves_from_matrix(data, data.conditioning_curves(mode));
}

std::pair<std::vector<int>, FusionFit> initial_cluster(const FunctionalDataset& data,
                                                       const PipelineConfig& config) {
  data.validate();
  config.validate();
  CurveSet curves = curves_from_dataset(data, config.mode);
  auto designs = build_designs(curves, config.spline);
  FusionFit fit = select_and_fit(curves, designs, config.fusion);
  std::vector<int> partition = fit.partition;
  return {std::move(partition), std::move(fit)};
}

namespace {

int count_changes(const std::vector<int>& a, const std::vector<int>& b) {
  auto ca = canonicalize_labels(a);
  auto cb = canonicalize_labels(b);
  int changes = 0;
  for (std::size_t i = 0; i < ca.size(); ++i)
    if (ca[i] != cb[i]) ++changes;
  return changes;
}

IterationRecord make_record(int iteration, const FusionFit& fit,
                            const std::vector<int>* previous) {
  IterationRecord rec;
  rec.iteration = iteration;
  rec.partition = fit.partition;
  rec.k_hat = fit.k_hat;
  rec.lambda1 = fit.lambda1;
  rec.lambda2 = fit.lambda2;
  rec.bic2 = fit.bic2;
  rec.membership_changes = previous ? count_changes(*previous, fit.partition) : 0;
  return rec;
}

}  // namespace

PipelineResult run(const FunctionalDataset& data, const PipelineConfig& config) {
  data.validate();
  config.validate();

  PipelineResult result;
  auto [partition, fit] = initial_cluster(data, config);
  result.trace.records.push_back(make_record(0, fit, nullptr));

  // The spline design is shared by every re-clustering pass (common grid).
  CurveSet scratch = curves_from_dataset(data, config.mode);
  auto designs = build_designs(scratch, config.spline);

  FusionFit previous_fit = fit;
  std::vector<int> previous_partition = partition;
  Matrix previous_pseudo;

  for (int iteration = 1; iteration <= config.max_outer_iterations; ++iteration) {
    CovarianceEstimates estimates;
    try {
      estimates = estimate_covariances(data, previous_partition, config.fusion.threads);
    } catch (const std::exception& ex) {
      result.trace.warnings.push_back("covariance estimation failed at iteration " +
                                      std::to_string(iteration) + ": " + ex.what() +
                                      "; returning the initial clustering");
      result.trace.stop_reason = "covariance-fallback";
      result.partition = result.trace.records.front().partition;
      result.fit = std::move(fit);
      return result;
    }

    const std::uint64_t iter_seed = derive_seed(config.seed, 0x70C0, static_cast<std::uint64_t>(iteration));
    Matrix pseudo = simulate_pseudo(data, previous_partition, estimates, iter_seed, config.mode,
                                    config.fusion.threads);
    CurveSet pseudo_curves = curves_from_matrix(data, pseudo);
    FusionFit refit = select_and_fit(pseudo_curves, designs, config.fusion);

    result.trace.records.push_back(make_record(iteration, refit, &previous_partition));

    const bool stable = partitions_equal(refit.partition, previous_partition);
    if (stable) {
      result.trace.stop_reason = "membership-stable";
      result.partition = refit.partition;
      result.fit = std::move(refit);
      result.pseudo_data = std::move(pseudo);
      return result;
    }

    // BIC comparison runs across correction passes only (iteration >= 2),
    // matching the repeated Steps 2-4 block; the rise returns the previous pass.
    if (iteration >= 2 && refit.bic2 > previous_fit.bic2) {
      result.trace.stop_reason = "bic-increase";
      result.partition = previous_fit.partition;
      result.fit = std::move(previous_fit);
      result.pseudo_data = std::move(previous_pseudo);
      return result;
    }

    previous_fit = std::move(refit);
    previous_partition = previous_fit.partition;
    previous_pseudo = std::move(pseudo);
  }

  result.trace.stop_reason = "max-iterations";
  result.partition = previous_fit.partition;
  result.fit = std::move(previous_fit);
  result.pseudo_data = std::move(previous_pseudo);
  return result;
}

}  // namespace curvefuse
