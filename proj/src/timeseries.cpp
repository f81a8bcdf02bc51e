#include "twinpipe/timeseries.hpp"

#include <algorithm>
#include <cmath>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace twinpipe {

void RawChannel::validate() const {
  if (samples.empty()) raise(Errc::empty_channel, "channel '" + name + "' has no samples");
  if (!nominal_rate_hz.positive())
    raise(Errc::invalid_argument, "channel '" + name + "' has non-positive rate");
  for (std::size_t i = 1; i < samples.size(); ++i)
    if (samples[i].timestamp_ms <= samples[i - 1].timestamp_ms)
      raise(Errc::nonmonotonic_timestamps,
            "channel '" + name + "' timestamps not strictly increasing at index " + std::to_string(i));
}

void TimeGrid::validate() const {
  if (period_ms <= 0) raise(Errc::invalid_argument, "grid period must be positive");
  if (count <= 0) raise(Errc::invalid_argument, "grid count must be positive");
}

const char* agg_name(Agg a) {
  switch (a) {
    case Agg::mean: return "mean";
    case Agg::std_dev: return "std";
    case Agg::min: return "min";
    case Agg::max: return "max";
    case Agg::slope: return "slope";
    case Agg::sum: return "sum";
  }
  return "?";
}

Agg agg_from_name(const std::string& name) {
  if (name == "mean") return Agg::mean;
  if (name == "std") return Agg::std_dev;
  if (name == "min") return Agg::min;
  if (name == "max") return Agg::max;
  if (name == "slope") return Agg::slope;
  if (name == "sum") return Agg::sum;
  raise(Errc::invalid_argument, "unknown aggregation '" + name + "'");
}

TimeTable::TimeTable(const TimeGrid& grid, std::vector<Column> columns)
    : columns_(std::move(columns)), regular_(true), period_ms_(grid.period_ms) {
  grid.validate();
  timestamps_.resize(static_cast<std::size_t>(grid.count));
  for (std::int64_t i = 0; i < grid.count; ++i)
    timestamps_[static_cast<std::size_t>(i)] = grid.point(i);
  check_invariants();
}

TimeTable::TimeTable(std::vector<Timestamp> timestamps, std::vector<Column> columns, bool regular,
                     std::int64_t period_ms)
    : timestamps_(std::move(timestamps)),
      columns_(std::move(columns)),
      regular_(regular),
      period_ms_(period_ms) {
  check_invariants();
}

void TimeTable::check_invariants() const {
  for (std::size_t i = 1; i < timestamps_.size(); ++i)
    if (timestamps_[i] <= timestamps_[i - 1])
      raise(Errc::nonmonotonic_timestamps, "table timestamps not strictly increasing");
  for (const auto& col : columns_) {
    if (col.name.empty()) raise(Errc::invalid_argument, "table column with empty name");
    if (col.values.size() != timestamps_.size())
      raise(Errc::invalid_argument, "table not rectangular: column '" + col.name + "' has " +
                                        std::to_string(col.values.size()) + " rows, expected " +
                                        std::to_string(timestamps_.size()));
  }
  for (std::size_t i = 0; i < columns_.size(); ++i)
    for (std::size_t j = i + 1; j < columns_.size(); ++j)
      if (columns_[i].name == columns_[j].name)
        raise(Errc::duplicate_channel_name, "duplicate column '" + columns_[i].name + "'");
}

TimeGrid TimeTable::grid() const {
  if (!regular_ || timestamps_.empty())
    raise(Errc::invalid_argument, "table has no regular grid");
  return TimeGrid{timestamps_.front(), period_ms_, static_cast<std::int64_t>(timestamps_.size())};
}

int TimeTable::column_index(const std::string& name) const {
  for (std::size_t i = 0; i < columns_.size(); ++i)
    if (columns_[i].name == name) return static_cast<int>(i);
  return -1;
}

const TimeTable::Column& TimeTable::column(const std::string& name) const {
  int idx = column_index(name);
  if (idx < 0) raise(Errc::unknown_column, "no column named '" + name + "'");
  return columns_[static_cast<std::size_t>(idx)];
}

void TimeTable::add_column(Column col) {
  columns_.push_back(std::move(col));
  check_invariants();
}

namespace {

// Aggregates the non-missing values of samples[lo, hi). Mean and std are
// anchored at the first value so constant windows come out exact.
double aggregate_range(const std::vector<Sample>& samples, std::size_t lo, std::size_t hi,
                       Agg agg) {
  double anchor = 0.0;
  std::size_t n = 0;
  double s1 = 0.0, s2 = 0.0;
  double mn = 0.0, mx = 0.0, sum = 0.0;
  for (std::size_t i = lo; i < hi; ++i) {
    double v = samples[i].value;
    if (is_missing(v)) continue;
    if (n == 0) {
      anchor = v;
      mn = mx = v;
    } else {
      mn = std::min(mn, v);
      mx = std::max(mx, v);
    }
    double d = v - anchor;
    s1 += d;
    s2 += d * d;
    sum += v;
    ++n;
  }
  if (n == 0) return missing();
  switch (agg) {
    case Agg::mean:
      return anchor + s1 / static_cast<double>(n);
    case Agg::std_dev: {
      if (n < 2) return missing();
      double var = (s2 - s1 * s1 / static_cast<double>(n)) / static_cast<double>(n - 1);
      return std::sqrt(var < 0.0 ? 0.0 : var);
    }
    case Agg::min: return mn;
    case Agg::max: return mx;
    case Agg::sum: return sum;
    default:
      raise(Errc::internal, "aggregate_range: unsupported aggregation");
  }
}

double median_range(const std::vector<Sample>& samples, std::size_t lo, std::size_t hi,
                    std::vector<double>& scratch) {
  scratch.clear();
  for (std::size_t i = lo; i < hi; ++i)
    if (!is_missing(samples[i].value)) scratch.push_back(samples[i].value);
  if (scratch.empty()) return missing();
  std::sort(scratch.begin(), scratch.end());
  std::size_t n = scratch.size();
  if (n % 2 == 1) return scratch[n / 2];
  return (scratch[n / 2 - 1] + scratch[n / 2]) / 2.0;
}

// Least-squares slope of value against time in seconds over samples[lo, hi).
double slope_range(const std::vector<Sample>& samples, std::size_t lo, std::size_t hi) {
  double anchor_v = 0.0;
  double anchor_t = 0.0;
  std::size_t n = 0;
  double sv = 0.0, st = 0.0;
  for (std::size_t i = lo; i < hi; ++i) {
    if (is_missing(samples[i].value)) continue;
    double t = static_cast<double>(samples[i].timestamp_ms) / 1000.0;
    if (n == 0) {
      anchor_v = samples[i].value;
      anchor_t = t;
    }
    sv += samples[i].value - anchor_v;
    st += t - anchor_t;
    ++n;
  }
  if (n < 2) return missing();
  double mean_v = anchor_v + sv / static_cast<double>(n);
  double mean_t = anchor_t + st / static_cast<double>(n);
  double num = 0.0, den = 0.0;
  for (std::size_t i = lo; i < hi; ++i) {
    if (is_missing(samples[i].value)) continue;
    double t = static_cast<double>(samples[i].timestamp_ms) / 1000.0;
    num += (t - mean_t) * (samples[i].value - mean_v);
    den += (t - mean_t) * (t - mean_t);
  }
  if (den == 0.0) return missing();
  return num / den;
}

std::size_t lower_bound_ts(const std::vector<Sample>& samples, Timestamp t) {
  return static_cast<std::size_t>(
      std::lower_bound(samples.begin(), samples.end(), t,
                       [](const Sample& s, Timestamp x) { return s.timestamp_ms < x; }) -
      samples.begin());
}

double downsample_cell(const std::vector<Sample>& samples, Timestamp t0, Timestamp t1,
                       DownsampleKind kind, std::vector<double>& scratch) {
  std::size_t lo = lower_bound_ts(samples, t0);
  std::size_t hi = lower_bound_ts(samples, t1);
  if (lo >= hi) return missing();
  switch (kind) {
    case DownsampleKind::mean: return aggregate_range(samples, lo, hi, Agg::mean);
    case DownsampleKind::median: return median_range(samples, lo, hi, scratch);
    case DownsampleKind::sum: return aggregate_range(samples, lo, hi, Agg::sum);
    case DownsampleKind::last: default: break;
  }
  // last: latest non-missing value in the cell
  for (std::size_t i = hi; i > lo; --i)
    if (!is_missing(samples[i - 1].value)) return samples[i - 1].value;
  return missing();
}

double upsample_point(const std::vector<Sample>& samples, Timestamp t, const ResamplePolicy& policy) {
  std::size_t after = lower_bound_ts(samples, t);

  // Last non-missing sample at or before t.
  std::size_t prev = after;
  if (prev < samples.size() && samples[prev].timestamp_ms == t) ++prev;
  bool has_prev = false;
  std::size_t prev_idx = 0;
  while (prev > 0) {
    --prev;
    if (!is_missing(samples[prev].value)) {
      has_prev = true;
      prev_idx = prev;
      break;
    }
  }

  if (policy.upsample == UpsampleKind::hold_last) {
    if (!has_prev) return missing();
    if (policy.max_gap_ms && t - samples[prev_idx].timestamp_ms > *policy.max_gap_ms)
      return missing();
    return samples[prev_idx].value;
  }

  // linear_interpolate
  if (has_prev && samples[prev_idx].timestamp_ms == t) return samples[prev_idx].value;
  std::size_t next = after;
  bool has_next = false;
  std::size_t next_idx = 0;
  while (next < samples.size()) {
    if (!is_missing(samples[next].value)) {
      has_next = true;
      next_idx = next;
      break;
    }
    ++next;
  }
  if (!has_prev || !has_next) return missing();  // no extrapolation past the ends
  Timestamp ta = samples[prev_idx].timestamp_ms;
  Timestamp tb = samples[next_idx].timestamp_ms;
  if (policy.max_gap_ms && tb - ta > *policy.max_gap_ms) return missing();
  double va = samples[prev_idx].value;
  double vb = samples[next_idx].value;
  double theta = static_cast<double>(t - ta) / static_cast<double>(tb - ta);
  return va + (vb - va) * theta;
}

}  // namespace

std::vector<double> resample(const RawChannel& channel, const TimeGrid& grid,
                             const ResamplePolicy& policy) {
  channel.validate();
  grid.validate();

  std::vector<double> out(static_cast<std::size_t>(grid.count), missing());
  const std::int64_t n = grid.count;

  if (!(channel.nominal_rate_hz < grid.rate())) {
    // Channel at or above the grid rate: aggregate each covering cell.
#ifdef _OPENMP
#pragma omp parallel
    {
      std::vector<double> scratch;
#pragma omp for
      for (std::int64_t i = 0; i < n; ++i) {
        Timestamp t = grid.point(i);
        out[static_cast<std::size_t>(i)] =
            downsample_cell(channel.samples, t, t + grid.period_ms, policy.downsample, scratch);
      }
    }
#else
    std::vector<double> scratch;
    for (std::int64_t i = 0; i < n; ++i) {
      Timestamp t = grid.point(i);
      out[static_cast<std::size_t>(i)] =
          downsample_cell(channel.samples, t, t + grid.period_ms, policy.downsample, scratch);
    }
#endif
  } else {
#ifdef _OPENMP
#pragma omp parallel for
#endif
    for (std::int64_t i = 0; i < n; ++i)
      out[static_cast<std::size_t>(i)] = upsample_point(channel.samples, grid.point(i), policy);
  }
  return out;
}

std::map<std::string, std::vector<double>> window_aggregate(const RawChannel& channel,
                                                            const FeatureSpec& spec,
                                                            const TimeGrid& grid) {
  channel.validate();
  grid.validate();
  if (spec.window_ms <= 0 || spec.window_ms % grid.period_ms != 0)
    raise(Errc::incompatible_window,
          "window " + std::to_string(spec.window_ms) + " ms is not a positive multiple of grid period " +
              std::to_string(grid.period_ms) + " ms");
  if (spec.aggregations.empty())
    raise(Errc::invalid_argument, "feature spec has no aggregations");

  const std::int64_t n = grid.count;
  std::map<std::string, std::vector<double>> result;
  for (Agg a : spec.aggregations)
    result.emplace(channel.name + "_" + agg_name(a),
                   std::vector<double>(static_cast<std::size_t>(n), missing()));

  for (Agg a : spec.aggregations) {
    std::vector<double>& col = result[channel.name + "_" + agg_name(a)];
#ifdef _OPENMP
#pragma omp parallel for
#endif
    for (std::int64_t i = 0; i < n; ++i) {
      Timestamp t = grid.point(i);
      Timestamp w0 = spec.alignment == LabelAlignment::window_end ? t - spec.window_ms : t;
      Timestamp w1 = w0 + spec.window_ms;
      std::size_t lo = lower_bound_ts(channel.samples, w0);
      std::size_t hi = lower_bound_ts(channel.samples, w1);
      col[static_cast<std::size_t>(i)] = a == Agg::slope
                                             ? slope_range(channel.samples, lo, hi)
                                             : aggregate_range(channel.samples, lo, hi, a);
    }
  }
  return result;
}

TimeGrid infer_grid(const std::vector<RawChannel>& channels, const GridStrategy& strategy) {
  if (channels.empty()) raise(Errc::invalid_argument, "infer_grid needs at least one channel");
  for (const auto& c : channels) c.validate();

  Timestamp start = channels.front().first_timestamp();
  Timestamp end = channels.front().last_timestamp();
  for (const auto& c : channels) {
    start = std::max(start, c.first_timestamp());
    end = std::min(end, c.last_timestamp());
  }
  if (start > end) raise(Errc::no_temporal_overlap, "channel time ranges do not overlap");

  std::int64_t period = 0;
  switch (strategy.kind) {
    case GridStrategy::Kind::explicit_period:
      period = strategy.period_ms;
      break;
    case GridStrategy::Kind::master_channel: {
      const RawChannel* master = nullptr;
      for (const auto& c : channels)
        if (c.name == strategy.master) master = &c;
      if (!master)
        raise(Errc::unknown_master_channel, "master channel '" + strategy.master + "' not found");
      period = master->nominal_rate_hz.period_ms();
      break;
    }
    case GridStrategy::Kind::slowest: {
      const RawChannel* slowest = &channels.front();
      for (const auto& c : channels)
        if (c.nominal_rate_hz < slowest->nominal_rate_hz) slowest = &c;
      period = slowest->nominal_rate_hz.period_ms();
      break;
    }
  }
  if (period <= 0) raise(Errc::invalid_argument, "grid period must be positive");

  TimeGrid grid{start, period, (end - start) / period + 1};
  grid.validate();
  return grid;
}

}  // namespace twinpipe
