#include "curvefuse/ingest.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdlib>
#include <limits>
#include <map>
#include <set>
#include <sstream>

#include "curvefuse/io.hpp"

namespace curvefuse {

double natural_cubic_interp(const std::vector<double>& x, const std::vector<double>& y, double q) {
  const std::size_t n = x.size();
  if (n == 0 || y.size() != n) throw std::invalid_argument("interpolation needs matching points");
  if (n == 1) return y[0];

  // Second derivatives from the natural-spline tridiagonal system.
  std::vector<double> m2(n, 0.0);
  if (n > 2) {
    const std::size_t sys = n - 2;
    std::vector<double> diag(sys), rhs(sys), sub(sys), sup(sys);
    for (std::size_t i = 0; i < sys; ++i) {
      const double h0 = x[i + 1] - x[i];
      const double h1 = x[i + 2] - x[i + 1];
      if (h0 <= 0.0 || h1 <= 0.0)
        throw std::invalid_argument("interpolation abscissae must be strictly increasing");
      sub[i] = h0;
      diag[i] = 2.0 * (h0 + h1);
      sup[i] = h1;
      rhs[i] = 6.0 * ((y[i + 2] - y[i + 1]) / h1 - (y[i + 1] - y[i]) / h0);
    }
    // Thomas algorithm.
    for (std::size_t i = 1; i < sys; ++i) {
      const double w = sub[i] / diag[i - 1];
      diag[i] -= w * sup[i - 1];
      rhs[i] -= w * rhs[i - 1];
    }
    m2[sys] = rhs[sys - 1] / diag[sys - 1];
    for (std::size_t i = sys - 1; i-- > 0;)
      m2[i + 1] = (rhs[i] - sup[i] * m2[i + 2]) / diag[i];
  }

  std::size_t seg = 0;
  if (q >= x[n - 2])
    seg = n - 2;
  else
    while (seg + 2 < n && q >= x[seg + 1]) ++seg;

  const double h = x[seg + 1] - x[seg];
  const double a = (x[seg + 1] - q) / h;
  const double b = (q - x[seg]) / h;
  return a * y[seg] + b * y[seg + 1] +
         ((a * a * a - a) * m2[seg] + (b * b * b - b) * m2[seg + 1]) * h * h / 6.0;
}

std::vector<LongRecord> parse_long_csv(const std::string& content, const std::string& origin) {
  std::istringstream in(content);
  std::string line;
  if (!std::getline(in, line)) throw DataError(origin + ": empty file");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  if (line != "subject,replicate,time,value")
    throw DataError(origin + ": expected header 'subject,replicate,time,value', got '" + line + "'");

  std::vector<LongRecord> records;
  int lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;

    std::array<std::string, 4> fields;
    std::size_t start = 0;
    int field = 0;
    for (; field < 3; ++field) {
      std::size_t comma = line.find(',', start);
      if (comma == std::string::npos)
        throw DataError(origin + " line " + std::to_string(lineno) + ": expected 4 fields");
      fields[static_cast<std::size_t>(field)] = line.substr(start, comma - start);
      start = comma + 1;
    }
    if (line.find(',', start) != std::string::npos)
      throw DataError(origin + " line " + std::to_string(lineno) + ": expected 4 fields");
    fields[3] = line.substr(start);

    LongRecord rec;
    rec.subject = fields[0];
    rec.replicate = fields[1];
    if (rec.subject.empty() || rec.replicate.empty())
      throw DataError(origin + " line " + std::to_string(lineno) + ": empty subject or replicate");
    try {
      std::size_t used = 0;
      rec.time = std::stod(fields[2], &used);
      if (used != fields[2].size()) throw std::invalid_argument(fields[2]);
    } catch (const std::exception&) {
      throw DataError(origin + " line " + std::to_string(lineno) + ": bad time '" + fields[2] + "'");
    }
    if (!fields[3].empty()) {
      try {
        std::size_t used = 0;
        rec.value = std::stod(fields[3], &used);
        if (used != fields[3].size()) throw std::invalid_argument(fields[3]);
      } catch (const std::exception&) {
        throw DataError(origin + " line " + std::to_string(lineno) + ": bad value '" + fields[3] + "'");
      }
    }
    records.push_back(std::move(rec));
  }
  return records;
}

namespace {

struct Series {
  std::vector<double> times;
  std::vector<std::optional<double>> values;
};

using SeriesKey = std::pair<std::string, std::string>;  // subject, replicate

// Numeric-aware replicate ordering so "2" sorts before "10".
bool replicate_less(const std::string& a, const std::string& b) {
  char* end_a = nullptr;
  char* end_b = nullptr;
  double na = std::strtod(a.c_str(), &end_a);
  double nb = std::strtod(b.c_str(), &end_b);
  const bool numeric_a = end_a && *end_a == '\0' && !a.empty();
  const bool numeric_b = end_b && *end_b == '\0' && !b.empty();
  if (numeric_a && numeric_b) {
    if (na != nb) return na < nb;
    return a < b;
  }
  if (numeric_a != numeric_b) return numeric_a;
  return a < b;
}

}  // namespace

IngestResult ingest_records(std::vector<LongRecord> records, const IngestOptions& options) {
  if (records.empty()) throw DataError("no observations in input");
  if (options.bin_width < 0.0) throw std::invalid_argument("bin width must be nonnegative");
  if (options.truncate_lo && options.truncate_hi && *options.truncate_lo >= *options.truncate_hi)
    throw std::invalid_argument("truncation window is empty");

  IngestResult result;

  std::map<SeriesKey, Series> series;
  {
    std::map<SeriesKey, std::set<double>> seen;
    for (const auto& rec : records) {
      SeriesKey key{rec.subject, rec.replicate};
      if (!seen[key].insert(rec.time).second)
        throw DataError("duplicate observation for subject '" + rec.subject + "', replicate '" +
                        rec.replicate + "', time " + format_double(rec.time));
      series[key].times.push_back(rec.time);
      series[key].values.push_back(rec.value);
    }
  }

  for (auto& [key, s] : series) {
    // Sort by time.
    std::vector<std::size_t> order(s.times.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    std::sort(order.begin(), order.end(),
              [&](std::size_t a, std::size_t b) { return s.times[a] < s.times[b]; });
    Series sorted;
    sorted.times.reserve(order.size());
    sorted.values.reserve(order.size());
    for (std::size_t idx : order) {
      sorted.times.push_back(s.times[idx]);
      sorted.values.push_back(s.values[idx]);
    }
    s = std::move(sorted);

    // (1) impute missing values from the observed part of the same series
    std::vector<double> obs_t, obs_v;
    for (std::size_t i = 0; i < s.times.size(); ++i)
      if (s.values[i]) {
        obs_t.push_back(s.times[i]);
        obs_v.push_back(*s.values[i]);
      }
    if (obs_t.size() < s.times.size()) {
      if (!options.impute_missing)
        throw DataError("missing values for subject '" + key.first + "', replicate '" +
                        key.second + "' and imputation is disabled");
      if (obs_t.empty())
        throw DataError("subject '" + key.first + "', replicate '" + key.second +
                        "' has no observed values to impute from");
      for (std::size_t i = 0; i < s.times.size(); ++i)
        if (!s.values[i]) s.values[i] = natural_cubic_interp(obs_t, obs_v, s.times[i]);
    }
  }

  // (2) fixed-width bin averaging on a common bin layout. A bin's time is the
  // mean of its members' times, so re-binning already-binned data is a no-op.
  if (options.bin_width > 0.0) {
    double t_min = std::numeric_limits<double>::infinity();
    for (const auto& [key, s] : series) t_min = std::min(t_min, s.times.front());
    for (auto& [key, s] : series) {
      struct Bin {
        double value_sum = 0.0;
        double time_sum = 0.0;
        int count = 0;
      };
      std::map<long long, Bin> bins;
      for (std::size_t i = 0; i < s.times.size(); ++i) {
        const long long bin = static_cast<long long>(
            std::floor((s.times[i] - t_min) / options.bin_width + 1e-12));
        bins[bin].value_sum += *s.values[i];
        bins[bin].time_sum += s.times[i];
        bins[bin].count += 1;
      }
      Series binned;
      for (const auto& [bin, acc] : bins) {
        binned.times.push_back(acc.time_sum / acc.count);
        binned.values.emplace_back(acc.value_sum / acc.count);
      }
      s = std::move(binned);
    }
  }

  // (3) center each replicate curve at its own mean
  if (options.center) {
    for (auto& [key, s] : series) {
      double mean = 0.0;
      for (const auto& v : s.values) mean += *v;
      mean /= static_cast<double>(s.values.size());
      for (auto& v : s.values) v = *v - mean;
    }
  }

  // (4) truncate to the requested window
  if (options.truncate_lo || options.truncate_hi) {
    const double lo = options.truncate_lo.value_or(-std::numeric_limits<double>::infinity());
    const double hi = options.truncate_hi.value_or(std::numeric_limits<double>::infinity());
    for (auto& [key, s] : series) {
      Series kept;
      for (std::size_t i = 0; i < s.times.size(); ++i)
        if (s.times[i] >= lo && s.times[i] <= hi) {
          kept.times.push_back(s.times[i]);
          kept.values.push_back(s.values[i]);
        }
      if (kept.times.empty())
        throw DataError("truncation removed every observation of subject '" + key.first +
                        "', replicate '" + key.second + "'");
      s = std::move(kept);
    }
  }

  // (5) affine time rescaling onto [0,1] (shared across all series)
  if (options.rescale_time) {
    double t_min = std::numeric_limits<double>::infinity();
    double t_max = -std::numeric_limits<double>::infinity();
    for (const auto& [key, s] : series) {
      t_min = std::min(t_min, s.times.front());
      t_max = std::max(t_max, s.times.back());
    }
    const double span = t_max - t_min;
    if (span <= 0.0) throw DataError("cannot rescale: all observations share one time point");
    for (auto& [key, s] : series)
      for (auto& t : s.times) t = (t - t_min) / span;
  }

  // Assemble per-subject replicate lists.
  std::map<std::string, std::vector<std::string>> replicate_names;
  for (const auto& [key, s] : series) replicate_names[key.first].push_back(key.second);
  for (auto& [subject, reps] : replicate_names) std::sort(reps.begin(), reps.end(), replicate_less);

  int j_required = options.replicates_required;
  if (j_required <= 0) {
    std::size_t j_min = std::numeric_limits<std::size_t>::max();
    for (const auto& [subject, reps] : replicate_names) j_min = std::min(j_min, reps.size());
    j_required = static_cast<int>(j_min);
  }

  // Common grid check across every surviving series.
  const std::vector<double>* reference = nullptr;
  std::string reference_name;
  std::vector<std::string> subjects;
  for (const auto& [subject, reps] : replicate_names) {
    if (static_cast<int>(reps.size()) < j_required) {
      result.warnings.push_back("subject '" + subject + "' excluded: " +
                                std::to_string(reps.size()) + " replicate(s), " +
                                std::to_string(j_required) + " required");
      continue;
    }
    subjects.push_back(subject);
    for (int r = 0; r < j_required; ++r) {
      const Series& s = series.at({subject, reps[static_cast<std::size_t>(r)]});
      if (!reference) {
        reference = &s.times;
        reference_name = subject + "/" + reps[static_cast<std::size_t>(r)];
        continue;
      }
      if (s.times.size() != reference->size() ||
          !std::equal(s.times.begin(), s.times.end(), reference->begin(),
                      [](double a, double b) { return std::abs(a - b) <= 1e-9; }))
        throw DataError("subject '" + subject + "', replicate '" +
                        reps[static_cast<std::size_t>(r)] +
                        "' is not on the common time grid (reference: " + reference_name +
                        "); bin with --bins to align grids");
    }
  }
  if (subjects.empty()) throw DataError("no subject provides the required replicate count");
  if (!reference || reference->size() < 2)
    throw DataError("common grid needs at least two time points");

  // Range validation is deferred to spline fitting: without rescaling the
  // grid legitimately lives outside [0,1].
  result.data.grid = TimeGrid(*reference);
  result.data.subject_ids = subjects;
  const int m = static_cast<int>(reference->size());
  for (const auto& subject : subjects) {
    const auto& reps = replicate_names[subject];
    Matrix w(j_required, m);
    for (int r = 0; r < j_required; ++r) {
      const Series& s = series.at({subject, reps[static_cast<std::size_t>(r)]});
      for (int k = 0; k < m; ++k) w(r, k) = *s.values[static_cast<std::size_t>(k)];
    }
    result.data.observations.push_back(std::move(w));
  }
  result.data.validate();
  return result;
}

IngestResult ingest(const std::filesystem::path& csv_path, const IngestOptions& options) {
  return ingest_records(parse_long_csv(read_file(csv_path), csv_path.string()), options);
}

}  // namespace curvefuse
