#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "twinpipe/error.hpp"
#include "twinpipe/missing.hpp"
#include "twinpipe/rational.hpp"

namespace twinpipe {

/// Milliseconds since dataset epoch. All times are relative to dataset start;
/// there is no timezone handling.
using Timestamp = std::int64_t;

struct Sample {
  Timestamp timestamp_ms = 0;
  double value = 0.0;  // may be missing()
};

/// One sensor stream at its own native rate, possibly with gaps and missing
/// samples. Timestamps are strictly increasing.
struct RawChannel {
  std::string name;
  std::string unit;
  Rational nominal_rate_hz{1, 1};
  std::vector<Sample> samples;

  void validate() const;
  Timestamp first_timestamp() const { return samples.front().timestamp_ms; }
  Timestamp last_timestamp() const { return samples.back().timestamp_ms; }
};

/// Regular target grid: point i sits at start + i*period_ms.
struct TimeGrid {
  Timestamp start = 0;
  std::int64_t period_ms = 1;
  std::int64_t count = 1;

  Timestamp point(std::int64_t i) const { return start + i * period_ms; }
  Rational rate() const { return Rational(1000, period_ms); }
  void validate() const;
};

enum class UpsampleKind { hold_last, linear_interpolate };
enum class DownsampleKind { mean, median, last, sum };

struct ResamplePolicy {
  UpsampleKind upsample = UpsampleKind::hold_last;
  DownsampleKind downsample = DownsampleKind::mean;
  std::optional<std::int64_t> max_gap_ms;  // gaps longer than this stay missing
};

enum class Agg { mean, std_dev, min, max, slope, sum };

const char* agg_name(Agg a);
Agg agg_from_name(const std::string& name);

enum class LabelAlignment { window_end, window_start };

/// Windowed feature extraction: one derived column per aggregation, windows
/// anchored at grid points. window_ms must be a positive multiple of the grid
/// period.
struct FeatureSpec {
  std::int64_t window_ms = 0;
  std::vector<Agg> aggregations;
  LabelAlignment alignment = LabelAlignment::window_end;
};

/// Rectangular table of named columns over a shared time axis; the lingua
/// franca between pipeline components. Regular tables carry their grid
/// period; dropping rows (quality stage) produces an irregular table, flagged
/// as such for downstream consumers.
class TimeTable {
public:
  struct Column {
    std::string name;
    std::string unit;  // empty when unknown (units do not survive CSV)
    std::vector<double> values;
  };

  TimeTable() = default;
  TimeTable(const TimeGrid& grid, std::vector<Column> columns);
  TimeTable(std::vector<Timestamp> timestamps, std::vector<Column> columns, bool regular,
            std::int64_t period_ms);

  std::size_t row_count() const { return timestamps_.size(); }
  const std::vector<Timestamp>& timestamps() const { return timestamps_; }
  bool regular() const { return regular_; }
  std::int64_t period_ms() const { return period_ms_; }
  TimeGrid grid() const;

  const std::vector<Column>& columns() const { return columns_; }
  std::vector<Column>& columns_mutable() { return columns_; }
  int column_index(const std::string& name) const;  // -1 when absent
  const Column& column(const std::string& name) const;
  bool has_column(const std::string& name) const { return column_index(name) >= 0; }

  void add_column(Column col);

private:
  void check_invariants() const;

  std::vector<Timestamp> timestamps_;
  std::vector<Column> columns_;
  bool regular_ = true;
  std::int64_t period_ms_ = 0;
};

/// Resamples a channel onto a grid. Channels faster than the grid are
/// aggregated per downsample kind over each half-open cell [t, t+period);
/// slower channels are filled per upsample kind; cells with no usable source
/// within max_gap_ms stay missing. Pure and deterministic.
std::vector<double> resample(const RawChannel& channel, const TimeGrid& grid,
                             const ResamplePolicy& policy);

/// Computes "<channel>_<agg>" columns over windows anchored at each grid
/// point: [t-window, t) for window_end alignment, [t, t+window) for
/// window_start. Missing source values are skipped; an empty window yields
/// missing. std uses the n-1 denominator and is missing for n=1; slope is the
/// least-squares slope of value against time in seconds.
std::map<std::string, std::vector<double>> window_aggregate(const RawChannel& channel,
                                                            const FeatureSpec& spec,
                                                            const TimeGrid& grid);

struct GridStrategy {
  enum class Kind { master_channel, explicit_period, slowest } kind = Kind::slowest;
  std::string master;           // master_channel
  std::int64_t period_ms = 0;   // explicit_period
};

/// Chooses the common grid: span is the intersection of all channel time
/// ranges, period comes from the master channel's nominal rate, an explicit
/// value, or the slowest channel (the default, to minimize upsampling).
TimeGrid infer_grid(const std::vector<RawChannel>& channels, const GridStrategy& strategy);

}  // namespace twinpipe
