#include "curvefuse/metrics.hpp"

#include <algorithm>
#include <stdexcept>
#include <unordered_map>

namespace curvefuse {

std::vector<int> canonicalize_labels(const std::vector<int>& labels) {
  std::unordered_map<int, int> seen;
  std::vector<int> out(labels.size());
  int next = 0;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    auto [it, inserted] = seen.emplace(labels[i], next);
    if (inserted) ++next;
    out[i] = it->second;
  }
  return out;
}

bool partitions_equal(const std::vector<int>& a, const std::vector<int>& b) {
  if (a.size() != b.size()) return false;
  return canonicalize_labels(a) == canonicalize_labels(b);
}

int cluster_count(const std::vector<int>& labels) {
  if (labels.empty()) return 0;
  auto canon = canonicalize_labels(labels);
  return 1 + *std::max_element(canon.begin(), canon.end());
}

namespace {

inline long long choose2(long long x) { return x * (x - 1) / 2; }

struct Contingency {
  std::vector<std::vector<long long>> table;  // truth clusters x estimate clusters
  std::vector<long long> row_sums;
  std::vector<long long> col_sums;
  long long n = 0;
};

Contingency contingency(const std::vector<int>& truth, const std::vector<int>& estimate) {
  if (truth.size() != estimate.size())
    throw std::invalid_argument("partitions cover different numbers of subjects");
  if (truth.empty()) throw std::invalid_argument("partitions are empty");
  auto t = canonicalize_labels(truth);
  auto e = canonicalize_labels(estimate);
  int kt = 1 + *std::max_element(t.begin(), t.end());
  int ke = 1 + *std::max_element(e.begin(), e.end());
  Contingency c;
  c.table.assign(static_cast<std::size_t>(kt), std::vector<long long>(static_cast<std::size_t>(ke), 0));
  c.row_sums.assign(static_cast<std::size_t>(kt), 0);
  c.col_sums.assign(static_cast<std::size_t>(ke), 0);
  c.n = static_cast<long long>(t.size());
  for (std::size_t i = 0; i < t.size(); ++i) {
    c.table[static_cast<std::size_t>(t[i])][static_cast<std::size_t>(e[i])]++;
    c.row_sums[static_cast<std::size_t>(t[i])]++;
    c.col_sums[static_cast<std::size_t>(e[i])]++;
  }
  return c;
}

}  // namespace

PairCounts pair_counts(const std::vector<int>& truth, const std::vector<int>& estimate) {
  Contingency c = contingency(truth, estimate);

  long long pairs_both = 0;
  for (const auto& row : c.table)
    for (long long cell : row) pairs_both += choose2(cell);
  long long pairs_truth = 0;
  for (long long a : c.row_sums) pairs_truth += choose2(a);
  long long pairs_estimate = 0;
  for (long long b : c.col_sums) pairs_estimate += choose2(b);

  PairCounts pc;
  pc.tp = pairs_both;
  pc.fn = pairs_truth - pairs_both;
  pc.fp = pairs_estimate - pairs_both;
  pc.tn = choose2(c.n) - pc.tp - pc.fn - pc.fp;
  return pc;
}

double rand_index(const PairCounts& pc) {
  return static_cast<double>(pc.tp + pc.tn) / static_cast<double>(pc.total());
}

double jaccard_index(const PairCounts& pc) {
  const long long denom = pc.tp + pc.fp + pc.fn;
  if (denom == 0) return 1.0;  // both partitions all-singletons
  return static_cast<double>(pc.tp) / static_cast<double>(denom);
}

double adjusted_rand_index(const std::vector<int>& truth, const std::vector<int>& estimate) {
  Contingency c = contingency(truth, estimate);

  double sum_cells = 0.0;
  for (const auto& row : c.table)
    for (long long cell : row) sum_cells += static_cast<double>(choose2(cell));
  double sum_rows = 0.0;
  for (long long a : c.row_sums) sum_rows += static_cast<double>(choose2(a));
  double sum_cols = 0.0;
  for (long long b : c.col_sums) sum_cols += static_cast<double>(choose2(b));

  const double expected = sum_rows * sum_cols / static_cast<double>(choose2(c.n));
  const double maximum = 0.5 * (sum_rows + sum_cols);
  if (maximum == expected) {
    // Degenerate (both trivial partitions): perfect agreement iff identical.
    return partitions_equal(truth, estimate) ? 1.0 : 0.0;
  }
  return (sum_cells - expected) / (maximum - expected);
}

}  // namespace curvefuse
