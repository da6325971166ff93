#pragma once

#include <string>
#include <vector>

#include "curvefuse/errorcorr.hpp"
#include "curvefuse/fusion.hpp"
#include "curvefuse/rng.hpp"

namespace testutil {

inline curvefuse::CurveSet make_curves(const curvefuse::TimeGrid& grid,
                                       const std::vector<curvefuse::Vector>& rows) {
  curvefuse::CurveSet curves;
  for (std::size_t i = 0; i < rows.size(); ++i) {
    curvefuse::SubjectCurve s;
    s.id = "s" + std::to_string(i);
    s.grid = grid;
    s.values = rows[i];
    curves.subjects.push_back(std::move(s));
  }
  return curves;
}

inline curvefuse::Vector noisy_curve(const curvefuse::TimeGrid& grid, double level, double slope,
                                     double noise_sd, curvefuse::RandomStream& stream) {
  curvefuse::Vector v(grid.size());
  for (int k = 0; k < grid.size(); ++k)
    v(k) = level + slope * grid[k] + stream.normal(0.0, noise_sd);
  return v;
}

// n subjects x J replicates around per-subject base curves plus iid
// measurement noise; grid equally spaced on [0,1].
inline curvefuse::FunctionalDataset make_dataset(const std::vector<curvefuse::Vector>& bases,
                                                 int replicates, double error_sd,
                                                 curvefuse::RandomStream& stream) {
  curvefuse::FunctionalDataset data;
  const int m = static_cast<int>(bases.front().size());
  data.grid = curvefuse::TimeGrid::equally_spaced(m);
  for (std::size_t i = 0; i < bases.size(); ++i) {
    data.subject_ids.push_back("s" + std::to_string(i));
    curvefuse::Matrix w(replicates, m);
    for (int r = 0; r < replicates; ++r)
      for (int k = 0; k < m; ++k) w(r, k) = bases[i](k) + stream.normal(0.0, error_sd);
    data.observations.push_back(std::move(w));
  }
  return data;
}

inline std::vector<int> random_partition(int n, int max_clusters, curvefuse::RandomStream& stream) {
  std::vector<int> labels(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i)
    labels[static_cast<std::size_t>(i)] =
        static_cast<int>(stream.next_u64() % static_cast<std::uint64_t>(max_clusters));
  return labels;
}

}  // namespace testutil
