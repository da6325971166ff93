#pragma once

#include <vector>

namespace curvefuse {

struct PairCounts {
  long long tp = 0;  // same cluster in both
  long long tn = 0;  // different in both
  long long fp = 0;  // together in estimate only
  long long fn = 0;  // together in truth only

  long long total() const { return tp + tn + fp + fn; }
};

// Relabel clusters in first-occurrence order (0-based). Partitions that are
// equal up to a label permutation canonicalize identically.
std::vector<int> canonicalize_labels(const std::vector<int>& labels);

bool partitions_equal(const std::vector<int>& a, const std::vector<int>& b);

int cluster_count(const std::vector<int>& labels);

// Pair counts over all unordered subject pairs, computed from the
// truth x estimate contingency table.
PairCounts pair_counts(const std::vector<int>& truth, const std::vector<int>& estimate);

double rand_index(const PairCounts& pc);

// 1 when both partitions are all-singletons (no pair is joined anywhere).
double jaccard_index(const PairCounts& pc);

// Hubert-Arabie adjusted Rand (permutation-model expectation).
double adjusted_rand_index(const std::vector<int>& truth, const std::vector<int>& estimate);

}  // namespace curvefuse
