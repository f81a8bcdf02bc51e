#pragma once

#include <cstdint>
#include <string>

#include "twinpipe/jsonio.hpp"
#include "twinpipe/timeseries.hpp"

namespace twinpipe {

struct SplitSpec {
  enum class Mode { chronological, random } mode = Mode::chronological;
  std::uint64_t seed = 0;
  // Exact fraction so e.g. "5/6" of 600 rows cuts at exactly 500.
  Rational train_fraction{4, 5};
  std::string target_column;

  static SplitSpec from_json(const json& doc);
  static SplitSpec load(const std::string& path);
};

struct SplitResult {
  TimeTable train;
  TimeTable test;
};

/// Partitions a table into train/test. Chronological: the first
/// ceil(n * fraction) rows train, the rest test. Random: a seeded
/// Fisher-Yates shuffle (splitmix64) picks train membership, then both
/// outputs keep original row order. Every row lands in exactly one output.
SplitResult split(const TimeTable& table, const SplitSpec& spec);

}  // namespace twinpipe
