#include <doctest.h>

#include <set>

#include "twinpipe/rng.hpp"
#include "twinpipe/split.hpp"

using namespace twinpipe;

namespace {

TimeTable rows_table(std::size_t n, std::uint64_t seed = 1) {
  TimeGrid grid{0, 1000, static_cast<std::int64_t>(n)};
  Rng rng(seed);
  std::vector<double> target(n), feat(n);
  for (std::size_t i = 0; i < n; ++i) {
    target[i] = rng.gaussian();
    feat[i] = static_cast<double>(i);
  }
  return TimeTable(grid, {{"row", "", feat}, {"y", "", target}});
}

SplitSpec spec_of(const char* text) { return SplitSpec::from_json(json::parse(text)); }

}  // namespace

TEST_CASE("600 rows at 5/6 split exactly 500/100") {
  TimeTable t = rows_table(600);
  SplitResult r = split(t, spec_of(R"({"mode":"chronological","train_fraction":"5/6","target_column":"y"})"));
  CHECK(r.train.row_count() == 500);
  CHECK(r.test.row_count() == 100);
  // a float fraction snaps to the same exact cut
  SplitResult f = split(
      t, spec_of(R"({"mode":"chronological","train_fraction":0.8333333333333333,"target_column":"y"})"));
  CHECK(f.train.row_count() == 500);
}

TEST_CASE("chronological split keeps all train rows before all test rows") {
  TimeTable t = rows_table(101);
  SplitResult r = split(t, spec_of(R"({"mode":"chronological","train_fraction":"4/5","target_column":"y"})"));
  CHECK(r.train.timestamps().back() < r.test.timestamps().front());
}

TEST_CASE("random split of 4 rows at 0.5 is always 2/2") {
  TimeTable t = rows_table(4);
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    json j = {{"mode", "random"}, {"seed", seed}, {"train_fraction", "1/2"}, {"target_column", "y"}};
    SplitResult r = split(t, SplitSpec::from_json(j));
    CHECK(r.train.row_count() == 2);
    CHECK(r.test.row_count() == 2);
  }
}

TEST_CASE("same seed twice gives identical membership") {
  TimeTable t = rows_table(97);
  SplitSpec spec = spec_of(R"({"mode":"random","seed":1234,"train_fraction":"7/10","target_column":"y"})");
  SplitResult a = split(t, spec);
  SplitResult b = split(t, spec);
  CHECK(a.train.timestamps() == b.train.timestamps());
  CHECK(a.test.timestamps() == b.test.timestamps());
}

TEST_CASE("every row lands in exactly one output, in original order") {
  TimeTable t = rows_table(83);
  SplitResult r = split(t, spec_of(R"({"mode":"random","seed":9,"train_fraction":"3/5","target_column":"y"})"));
  CHECK(r.train.row_count() + r.test.row_count() == 83);
  std::set<Timestamp> seen;
  for (Timestamp ts : r.train.timestamps()) seen.insert(ts);
  for (Timestamp ts : r.test.timestamps()) seen.insert(ts);
  CHECK(seen.size() == 83);
  // internal order preserved
  for (std::size_t i = 1; i < r.train.row_count(); ++i)
    CHECK(r.train.timestamps()[i - 1] < r.train.timestamps()[i]);
  for (std::size_t i = 1; i < r.test.row_count(); ++i)
    CHECK(r.test.timestamps()[i - 1] < r.test.timestamps()[i]);
  // row values travel with their rows
  for (std::size_t i = 0; i < r.train.row_count(); ++i)
    CHECK(r.train.column("row").values[i] * 1000.0 ==
          static_cast<double>(r.train.timestamps()[i]));
}

TEST_CASE("random membership frequency approaches 1 - train_fraction") {
  TimeTable t = rows_table(40);
  const int trials = 1000;
  std::vector<int> test_hits(40, 0);
  for (int s = 0; s < trials; ++s) {
    json j = {{"mode", "random"}, {"seed", s}, {"train_fraction", "7/10"}, {"target_column", "y"}};
    SplitResult r = split(t, SplitSpec::from_json(j));
    for (Timestamp ts : r.test.timestamps()) test_hits[static_cast<std::size_t>(ts / 1000)]++;
  }
  for (int hits : test_hits) {
    double freq = static_cast<double>(hits) / trials;
    CHECK(freq == doctest::Approx(0.3).epsilon(0.05 / 0.3));  // within ±5 percentage points
  }
}

TEST_CASE("split error paths") {
  TimeTable t = rows_table(10);
  CHECK_THROWS_AS(split(t, spec_of(R"({"mode":"chronological","train_fraction":"1/2","target_column":"nope"})")),
                  Error);
  // all-missing target
  TimeGrid grid{0, 1000, 3};
  TimeTable bad(grid, {{"y", "", {missing(), missing(), missing()}}});
  CHECK_THROWS_AS(split(bad, spec_of(R"({"mode":"chronological","train_fraction":"1/2","target_column":"y"})")),
                  Error);
  CHECK_THROWS_AS(spec_of(R"({"mode":"chronological","train_fraction":"7/6","target_column":"y"})"),
                  Error);
}
