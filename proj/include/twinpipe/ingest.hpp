#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "twinpipe/jsonio.hpp"
#include "twinpipe/timeseries.hpp"

namespace twinpipe {

enum class TimestampFormat { epoch_ms, epoch_s, elapsed_s, iso8601 };

TimestampFormat timestamp_format_from_name(const std::string& name);
const char* timestamp_format_name(TimestampFormat f);

/// How to read one sensor CSV: which column is time, which columns are
/// values, and the stream's nominal rate. Each value column becomes a
/// channel named "<channel_name>.<value_column>".
struct SourceDescriptor {
  std::string path;
  std::string channel_name;
  std::string timestamp_column;
  std::vector<std::string> value_columns;
  TimestampFormat timestamp_format = TimestampFormat::epoch_ms;
  Rational nominal_rate_hz{1, 1};
  std::string unit;
  std::map<std::string, std::string> column_units;  // optional per-column override

  static SourceDescriptor from_json(const json& doc);
  json to_json() const;
};

struct ParseReport {
  std::string path;
  std::size_t physical_rows = 0;  // data rows, header excluded
  std::size_t rejected_rows = 0;  // bad timestamp or overwritten duplicate
  std::size_t duplicate_rows = 0;
  std::vector<std::pair<std::size_t, std::string>> rejections;  // (1-based line, reason)
  std::map<std::string, std::size_t> missing_values;            // per channel

  json to_json() const;
};

struct ParsedSource {
  std::vector<RawChannel> channels;
  ParseReport report;
};

/// Parses one sensor CSV per its descriptor. Unparseable numeric values
/// become missing samples (kept, so the quality stage can count them); rows
/// with unparseable timestamps are rejected and listed with their line
/// numbers; duplicate timestamps resolve last-wins and are counted.
ParsedSource parse_csv(const std::string& path, const SourceDescriptor& descriptor);

struct MergeSpec {
  std::vector<SourceDescriptor> sources;
  GridStrategy grid;
  ResamplePolicy default_policy;
  std::map<std::string, ResamplePolicy> per_channel_policy;
  std::map<std::string, FeatureSpec> feature_specs;

  static MergeSpec from_json(const json& doc);
  static MergeSpec load(const std::string& path);
};

struct MergeResult {
  TimeTable table;
  json report;
};

/// The source-merging stage: parses every source, picks the common grid, and
/// puts every channel on it (window-aggregated when a feature spec is given,
/// resampled otherwise). The report records per channel the native rate,
/// direction, and cell fill fraction.
MergeResult merge_sources(const MergeSpec& spec);

ResamplePolicy resample_policy_from_json(const json& doc);
json resample_policy_to_json(const ResamplePolicy& policy);
FeatureSpec feature_spec_from_json(const json& doc);

}  // namespace twinpipe
