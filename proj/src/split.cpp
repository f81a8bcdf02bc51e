#include "twinpipe/split.hpp"

#include <algorithm>
#include <cmath>

#include "twinpipe/rng.hpp"
#include "twinpipe/util.hpp"

namespace twinpipe {

SplitSpec SplitSpec::from_json(const json& doc) {
  SplitSpec spec;
  std::string mode = doc.value("mode", "chronological");
  if (mode == "chronological") {
    spec.mode = Mode::chronological;
  } else if (mode == "random") {
    spec.mode = Mode::random;
    spec.seed = doc.value("seed", std::uint64_t{0});
  } else {
    raise(Errc::invalid_argument, "unknown split mode '" + mode + "'");
  }
  if (doc.contains("train_fraction")) {
    const auto& f = doc["train_fraction"];
    if (f.is_string()) {
      spec.train_fraction = Rational::parse(f.get<std::string>());
    } else {
      // Snap a float fraction to a small exact rational so cut indices are
      // stable (0.8333333333333333 means 5/6, not 500.0000000002/600).
      double v = f.get<double>();
      if (!(v > 0.0 && v < 1.0))
        raise(Errc::invalid_argument, "train_fraction must be in (0,1)");
      std::int64_t best_num = 0, best_den = 1;
      double best_err = 1e9;
      for (std::int64_t den = 1; den <= 1000; ++den) {
        std::int64_t num = static_cast<std::int64_t>(std::llround(v * static_cast<double>(den)));
        if (num <= 0 || num >= den) continue;
        double err = std::fabs(v - static_cast<double>(num) / static_cast<double>(den));
        if (err < best_err - 1e-15) {
          best_err = err;
          best_num = num;
          best_den = den;
          if (err < 1e-12) break;
        }
      }
      spec.train_fraction = Rational(best_num, best_den);
    }
  }
  if (!(spec.train_fraction.num > 0 && spec.train_fraction.num < spec.train_fraction.den))
    raise(Errc::invalid_argument, "train_fraction must be in (0,1)");
  spec.target_column = doc.value("target_column", "");
  return spec;
}

SplitSpec SplitSpec::load(const std::string& path) { return from_json(load_json_file(path)); }

namespace {

TimeTable select_rows(const TimeTable& table, const std::vector<std::size_t>& rows) {
  std::vector<Timestamp> ts;
  ts.reserve(rows.size());
  for (std::size_t r : rows) ts.push_back(table.timestamps()[r]);
  std::vector<TimeTable::Column> cols;
  cols.reserve(table.columns().size());
  for (const auto& col : table.columns()) {
    TimeTable::Column c{col.name, col.unit, {}};
    c.values.reserve(rows.size());
    for (std::size_t r : rows) c.values.push_back(col.values[r]);
    cols.push_back(std::move(c));
  }
  bool regular = ts.size() >= 2;
  std::int64_t period = regular ? ts[1] - ts[0] : 0;
  for (std::size_t i = 2; i < ts.size() && regular; ++i)
    if (ts[i] - ts[i - 1] != period) regular = false;
  return TimeTable(std::move(ts), std::move(cols), regular, regular ? period : 0);
}

}  // namespace

SplitResult split(const TimeTable& table, const SplitSpec& spec) {
  if (spec.target_column.empty() || !table.has_column(spec.target_column))
    raise(Errc::missing_target_column, "target column '" + spec.target_column + "' not in table");

  const auto& target = table.column(spec.target_column).values;
  std::size_t usable = 0;
  for (double v : target)
    if (!is_missing(v)) ++usable;
  if (usable < 2)
    raise(Errc::too_few_rows, "need >= 2 rows with a non-missing target, have " +
                                  std::to_string(usable));

  const std::size_t n = table.row_count();
  // ceil(n * num / den): train is never smaller than requested.
  std::size_t cut = static_cast<std::size_t>(
      (static_cast<__int128>(n) * spec.train_fraction.num + spec.train_fraction.den - 1) /
      spec.train_fraction.den);
  if (cut == 0) cut = 1;
  if (cut >= n) cut = n - 1;

  std::vector<std::size_t> train_rows, test_rows;
  if (spec.mode == SplitSpec::Mode::chronological) {
    for (std::size_t i = 0; i < n; ++i)
      (i < cut ? train_rows : test_rows).push_back(i);
  } else {
    std::vector<std::size_t> order(n);
    for (std::size_t i = 0; i < n; ++i) order[i] = i;
    Rng rng(spec.seed);
    rng.shuffle(order);
    std::vector<bool> in_train(n, false);
    for (std::size_t i = 0; i < cut; ++i) in_train[order[i]] = true;
    for (std::size_t i = 0; i < n; ++i)
      (in_train[i] ? train_rows : test_rows).push_back(i);
  }

  return {select_rows(table, train_rows), select_rows(table, test_rows)};
}

}  // namespace twinpipe
