#include <doctest.h>

#include <cmath>
#include <sstream>

#include "curvefuse/ingest.hpp"
#include "curvefuse/io.hpp"
#include "curvefuse/simbench.hpp"

using namespace curvefuse;

namespace {

std::string csv_header() { return "subject,replicate,time,value\n"; }

std::string simple_csv(int subjects, int replicates, int points, double offset = 0.0) {
  std::ostringstream os;
  os << csv_header();
  for (int s = 0; s < subjects; ++s)
    for (int r = 1; r <= replicates; ++r)
      for (int t = 0; t < points; ++t)
        os << "s" << s << ',' << r << ',' << t << ',' << (offset + s + 0.1 * r + 0.01 * t) << '\n';
  return os.str();
}

}  // namespace

TEST_CASE("pass-through ingestion rescales time onto [0,1]") {
  auto records = parse_long_csv(simple_csv(2, 2, 5), "test");
  IngestResult result = ingest_records(records, IngestOptions{});
  CHECK(result.warnings.empty());
  CHECK(result.data.n_subjects() == 2);
  CHECK(result.data.n_replicates() == 2);
  CHECK(result.data.grid_size() == 5);
  CHECK(result.data.grid[0] == 0.0);
  CHECK(result.data.grid[4] == 1.0);
  CHECK(result.data.observations[0](0, 0) == doctest::Approx(0.1));
  CHECK(result.data.observations[1](1, 4) == doctest::Approx(1.24));
}

TEST_CASE("five-minute binning averages its members") {
  // 135 minute-level points, value = minute index.
  std::ostringstream os;
  os << csv_header();
  for (int t = 0; t < 135; ++t) os << "a,1," << t << ',' << t << "\nb,1," << t << ',' << 2 * t << '\n';
  auto records = parse_long_csv(os.str(), "test");
  IngestOptions options;
  options.bin_width = 5.0;
  options.rescale_time = false;
  IngestResult result = ingest_records(records, options);
  REQUIRE(result.data.grid_size() == 27);
  for (int b = 0; b < 27; ++b) {
    CHECK(result.data.grid[b] == doctest::Approx(5.0 * b + 2.0));  // mean of {5b..5b+4}
    CHECK(result.data.observations[0](0, b) == doctest::Approx(5.0 * b + 2.0));
    CHECK(result.data.observations[1](0, b) == doctest::Approx(2.0 * (5.0 * b + 2.0)));
  }
}

TEST_CASE("cubic-spline imputation reproduces linear data") {
  std::ostringstream os;
  os << csv_header();
  for (int t = 0; t <= 10; ++t) {
    os << "a,1," << t << ',';
    if (t == 4)
      os << '\n';  // missing interior point on the line y = t
    else
      os << t << '\n';
  }
  os << "b,1,0,0\n";
  for (int t = 1; t <= 10; ++t) os << "b,1," << t << ',' << t << '\n';
  auto records = parse_long_csv(os.str(), "test");
  IngestResult result = ingest_records(records, IngestOptions{});
  const double imputed = result.data.observations[0](0, 4);
  CHECK(std::abs(imputed - 4.0) < 1e-6);
}

TEST_CASE("natural cubic interpolation hits the nodes and the linear case") {
  std::vector<double> x{0.0, 1.0, 2.5, 4.0};
  std::vector<double> y{1.0, 3.0, 6.0, 9.0};
  for (std::size_t i = 0; i < x.size(); ++i)
    CHECK(natural_cubic_interp(x, y, x[i]) == doctest::Approx(y[i]));
  std::vector<double> linear{0.5, 1.5, 3.0, 4.5};  // y = 0.5 + x
  for (double q : {0.25, 1.7, 3.9})
    CHECK(natural_cubic_interp(x, linear, q) == doctest::Approx(0.5 + q).epsilon(1e-12));
}

TEST_CASE("binning and centering are idempotent") {
  auto records = parse_long_csv(simple_csv(2, 2, 20, 3.0), "test");
  IngestOptions options;
  options.bin_width = 4.0;
  options.center = true;
  options.rescale_time = false;
  IngestResult once = ingest_records(records, options);

  auto records2 = parse_long_csv(long_csv(once.data), "roundtrip");
  IngestResult twice = ingest_records(records2, options);

  REQUIRE(twice.data.grid_size() == once.data.grid_size());
  for (int k = 0; k < once.data.grid_size(); ++k)
    CHECK(twice.data.grid[k] == doctest::Approx(once.data.grid[k]).epsilon(1e-12));
  for (int i = 0; i < once.data.n_subjects(); ++i)
    CHECK((twice.data.observations[static_cast<std::size_t>(i)] -
           once.data.observations[static_cast<std::size_t>(i)])
              .cwiseAbs()
              .maxCoeff() < 1e-12);
}

TEST_CASE("CSV round trip preserves values") {
  ScenarioConfig config;
  config.group_size = 3;
  config.grid_size = 6;
  SyntheticDataset ds = generate(config, 77);
  auto records = parse_long_csv(long_csv(ds.data), "roundtrip");
  IngestResult result = ingest_records(records, IngestOptions{});
  REQUIRE(result.data.n_subjects() == ds.data.n_subjects());
  REQUIRE(result.data.grid_size() == ds.data.grid_size());
  for (int i = 0; i < ds.data.n_subjects(); ++i)
    CHECK((result.data.observations[static_cast<std::size_t>(i)] -
           ds.data.observations[static_cast<std::size_t>(i)])
              .cwiseAbs()
              .maxCoeff() < 1e-12);
  for (int k = 0; k < ds.data.grid_size(); ++k)
    CHECK(std::abs(result.data.grid[k] - ds.data.grid[k]) < 1e-12);
}

TEST_CASE("truncation keeps the requested window") {
  auto records = parse_long_csv(simple_csv(1, 1, 10), "test");
  IngestOptions options;
  options.truncate_lo = 2.0;
  options.truncate_hi = 6.0;
  options.rescale_time = false;
  IngestResult result = ingest_records(records, options);
  CHECK(result.data.grid_size() == 5);
  CHECK(result.data.grid[0] == 2.0);
  CHECK(result.data.grid[4] == 6.0);
}

TEST_CASE("subjects lacking replicates are excluded with a warning") {
  std::ostringstream os;
  os << csv_header();
  for (int t = 0; t < 4; ++t) {
    os << "full,1," << t << ",1\n";
    os << "full,2," << t << ",2\n";
    os << "short,1," << t << ",3\n";
  }
  auto records = parse_long_csv(os.str(), "test");
  IngestOptions options;
  options.replicates_required = 2;
  IngestResult result = ingest_records(records, options);
  CHECK(result.data.n_subjects() == 1);
  CHECK(result.data.subject_ids[0] == "full");
  REQUIRE(result.warnings.size() == 1);
  CHECK(result.warnings[0].find("short") != std::string::npos);
}

TEST_CASE("replicate ids sort numerically when possible") {
  std::ostringstream os;
  os << csv_header();
  for (const char* rep : {"10", "2", "1"})
    for (int t = 0; t < 3; ++t) os << "a," << rep << ',' << t << ',' << rep << '\n';
  auto records = parse_long_csv(os.str(), "test");
  IngestResult result = ingest_records(records, IngestOptions{});
  CHECK(result.data.observations[0](0, 0) == 1.0);
  CHECK(result.data.observations[0](1, 0) == 2.0);
  CHECK(result.data.observations[0](2, 0) == 10.0);
}

TEST_CASE("parse errors carry line numbers") {
  CHECK_THROWS_WITH_AS(parse_long_csv("subject,time,value\n", "f"),
                       "f: expected header 'subject,replicate,time,value', got "
                       "'subject,time,value'",
                       DataError);
  try {
    parse_long_csv(csv_header() + "a,1,0,1\na,1,zero,1\n", "f");
    FAIL("expected DataError");
  } catch (const DataError& ex) {
    CHECK(std::string(ex.what()).find("line 3") != std::string::npos);
  }
  try {
    parse_long_csv(csv_header() + "a,1,0\n", "f");
    FAIL("expected DataError");
  } catch (const DataError& ex) {
    CHECK(std::string(ex.what()).find("line 2") != std::string::npos);
  }
}

TEST_CASE("duplicate observations are rejected") {
  auto records = parse_long_csv(csv_header() + "a,1,0,1\na,1,0,2\nb,1,0,0\nb,1,1,1\n", "f");
  CHECK_THROWS_AS(ingest_records(records, IngestOptions{}), DataError);
}

TEST_CASE("mismatched grids without binning are rejected") {
  std::string text = csv_header();
  text += "a,1,0,1\na,1,1,2\na,1,2,3\n";
  text += "b,1,0,1\nb,1,1.5,2\nb,1,2,3\n";
  auto records = parse_long_csv(text, "f");
  CHECK_THROWS_AS(ingest_records(records, IngestOptions{}), DataError);
}

TEST_CASE("missing values with imputation disabled fail loudly") {
  auto records = parse_long_csv(csv_header() + "a,1,0,\na,1,1,2\nb,1,0,1\nb,1,1,2\n", "f");
  IngestOptions options;
  options.impute_missing = false;
  CHECK_THROWS_AS(ingest_records(records, options), DataError);
}
