#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "curvefuse/errorcorr.hpp"

namespace curvefuse {

struct LongRecord {
  std::string subject;
  std::string replicate;
  double time = 0.0;
  std::optional<double> value;  // empty field = missing
};

struct IngestOptions {
  bool impute_missing = true;   // natural cubic spline over observed points
  double bin_width = 0.0;       // 0 = no binning; otherwise fixed-width time bins
  bool center = false;          // subtract each replicate curve's own mean
  std::optional<double> truncate_lo;
  std::optional<double> truncate_hi;
  bool rescale_time = true;     // affine map of the final grid onto [0,1]
  int replicates_required = 0;  // 0 = the minimum count across subjects
};

struct IngestResult {
  FunctionalDataset data;
  std::vector<std::string> warnings;
};

// Natural cubic spline through (x, y), evaluated at q. Boundary queries use
// the nearest segment's polynomial. Reproduces linear data exactly.
double natural_cubic_interp(const std::vector<double>& x, const std::vector<double>& y, double q);

std::vector<LongRecord> parse_long_csv(const std::string& content, const std::string& origin);

IngestResult ingest_records(std::vector<LongRecord> records, const IngestOptions& options);

IngestResult ingest(const std::filesystem::path& csv_path, const IngestOptions& options);

}  // namespace curvefuse
