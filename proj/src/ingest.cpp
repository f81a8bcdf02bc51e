#include "twinpipe/ingest.hpp"

#include <algorithm>
#include <cmath>

#include "twinpipe/csv.hpp"
#include "twinpipe/util.hpp"

namespace twinpipe {

TimestampFormat timestamp_format_from_name(const std::string& name) {
  if (name == "epoch_ms") return TimestampFormat::epoch_ms;
  if (name == "epoch_s") return TimestampFormat::epoch_s;
  if (name == "elapsed_s") return TimestampFormat::elapsed_s;
  if (name == "iso8601" || name == "ISO-8601") return TimestampFormat::iso8601;
  raise(Errc::invalid_argument, "unknown timestamp format '" + name + "'");
}

const char* timestamp_format_name(TimestampFormat f) {
  switch (f) {
    case TimestampFormat::epoch_ms: return "epoch_ms";
    case TimestampFormat::epoch_s: return "epoch_s";
    case TimestampFormat::elapsed_s: return "elapsed_s";
    case TimestampFormat::iso8601: return "iso8601";
  }
  return "?";
}

namespace {

// Days since 1970-01-01 for a civil date (Howard Hinnant's algorithm).
std::int64_t days_from_civil(std::int64_t y, unsigned m, unsigned d) {
  y -= m <= 2;
  const std::int64_t era = (y >= 0 ? y : y - 399) / 400;
  const unsigned yoe = static_cast<unsigned>(y - era * 400);
  const unsigned doy = (153 * (m + (m > 2 ? -3 : 9)) + 2) / 5 + d - 1;
  const unsigned doe = yoe * 365 + yoe / 4 - yoe / 100 + doy;
  return era * 146097 + static_cast<std::int64_t>(doe) - 719468;
}

bool parse_iso8601_ms(const std::string& text, std::int64_t& out) {
  // YYYY-MM-DD[T ]HH:MM:SS[.fff][Z]
  if (text.size() < 19) return false;
  auto digit = [&](std::size_t i) { return text[i] >= '0' && text[i] <= '9'; };
  for (std::size_t i : {0u, 1u, 2u, 3u, 5u, 6u, 8u, 9u, 11u, 12u, 14u, 15u, 17u, 18u})
    if (!digit(i)) return false;
  if (text[4] != '-' || text[7] != '-' || (text[10] != 'T' && text[10] != ' ') ||
      text[13] != ':' || text[16] != ':')
    return false;
  auto num = [&](std::size_t i, std::size_t len) {
    std::int64_t v = 0;
    for (std::size_t k = 0; k < len; ++k) v = v * 10 + (text[i + k] - '0');
    return v;
  };
  std::int64_t year = num(0, 4);
  unsigned month = static_cast<unsigned>(num(5, 2));
  unsigned day = static_cast<unsigned>(num(8, 2));
  std::int64_t hh = num(11, 2), mm = num(14, 2), ss = num(17, 2);
  if (month < 1 || month > 12 || day < 1 || day > 31 || hh > 23 || mm > 59 || ss > 60)
    return false;
  std::int64_t frac_ms = 0;
  std::size_t pos = 19;
  if (pos < text.size() && text[pos] == '.') {
    ++pos;
    std::size_t start = pos;
    while (pos < text.size() && text[pos] >= '0' && text[pos] <= '9') ++pos;
    std::size_t ndig = pos - start;
    if (ndig == 0) return false;
    for (std::size_t k = 0; k < 3; ++k)
      frac_ms = frac_ms * 10 + (k < ndig ? text[start + k] - '0' : 0);
  }
  if (pos < text.size()) {
    if (text[pos] != 'Z' || pos + 1 != text.size()) return false;
  }
  out = ((days_from_civil(year, month, day) * 24 + hh) * 60 + mm) * 60000 + ss * 1000 + frac_ms;
  return true;
}

bool parse_timestamp(const std::string& raw, TimestampFormat format, std::int64_t& out) {
  std::string text = raw;
  while (!text.empty() && (text.front() == ' ' || text.front() == '\t')) text.erase(text.begin());
  while (!text.empty() && (text.back() == ' ' || text.back() == '\t')) text.pop_back();
  if (text.empty()) return false;
  switch (format) {
    case TimestampFormat::epoch_ms:
      return parse_int64(text, out);
    case TimestampFormat::epoch_s:
    case TimestampFormat::elapsed_s: {
      double sec = 0.0;
      if (!parse_double(text, sec)) return false;
      out = static_cast<std::int64_t>(std::llround(sec * 1000.0));
      return true;
    }
    case TimestampFormat::iso8601:
      return parse_iso8601_ms(text, out);
  }
  return false;
}

}  // namespace

SourceDescriptor SourceDescriptor::from_json(const json& doc) {
  SourceDescriptor d;
  d.path = doc.at("path").get<std::string>();
  d.channel_name = doc.at("channel_name").get<std::string>();
  d.timestamp_column = doc.at("timestamp_column").get<std::string>();
  for (const auto& c : doc.at("value_columns")) d.value_columns.push_back(c.get<std::string>());
  if (d.value_columns.empty())
    raise(Errc::invalid_argument, "source '" + d.channel_name + "' has no value columns");
  d.timestamp_format = timestamp_format_from_name(doc.value("timestamp_format", "epoch_ms"));
  if (doc.contains("nominal_rate_hz")) {
    const auto& r = doc["nominal_rate_hz"];
    if (r.is_string())
      d.nominal_rate_hz = Rational::parse(r.get<std::string>());
    else if (r.is_number_integer())
      d.nominal_rate_hz = Rational(r.get<std::int64_t>(), 1);
    else
      d.nominal_rate_hz = Rational::parse(format_double(r.get<double>()));
  }
  if (!d.nominal_rate_hz.positive())
    raise(Errc::invalid_argument, "source '" + d.channel_name + "' rate must be positive");
  d.unit = doc.value("unit", "");
  if (doc.contains("column_units"))
    for (auto it = doc["column_units"].begin(); it != doc["column_units"].end(); ++it)
      d.column_units[it.key()] = it.value().get<std::string>();
  return d;
}

json SourceDescriptor::to_json() const {
  json doc;
  doc["path"] = path;
  doc["channel_name"] = channel_name;
  doc["timestamp_column"] = timestamp_column;
  doc["value_columns"] = value_columns;
  doc["timestamp_format"] = timestamp_format_name(timestamp_format);
  doc["nominal_rate_hz"] = nominal_rate_hz.str();
  doc["unit"] = unit;
  if (!column_units.empty()) doc["column_units"] = column_units;
  return doc;
}

json ParseReport::to_json() const {
  json doc;
  doc["path"] = path;
  doc["physical_rows"] = physical_rows;
  doc["rejected_rows"] = rejected_rows;
  doc["duplicate_rows"] = duplicate_rows;
  json rej = json::array();
  for (const auto& [line, reason] : rejections) rej.push_back({{"line", line}, {"reason", reason}});
  doc["rejections"] = rej;
  doc["missing_values"] = missing_values;
  return doc;
}

ParsedSource parse_csv(const std::string& path, const SourceDescriptor& descriptor) {
  CsvDocument doc = read_csv(path);

  auto col_index = [&](const std::string& name) -> int {
    for (std::size_t i = 0; i < doc.header.size(); ++i)
      if (doc.header[i] == name) return static_cast<int>(i);
    return -1;
  };

  int ts_col = col_index(descriptor.timestamp_column);
  if (ts_col < 0)
    raise(Errc::missing_column,
          path + ": timestamp column '" + descriptor.timestamp_column + "' not in header");
  std::vector<int> value_cols;
  for (const auto& name : descriptor.value_columns) {
    int idx = col_index(name);
    if (idx < 0) raise(Errc::missing_column, path + ": value column '" + name + "' not in header");
    value_cols.push_back(idx);
  }

  ParsedSource out;
  out.report.path = path;
  out.report.physical_rows = doc.rows.size();

  struct Row {
    std::int64_t ts;
    std::size_t line;
    std::vector<double> values;
  };
  std::vector<Row> rows;
  rows.reserve(doc.rows.size());

  std::size_t line_no = 1;
  for (const auto& fields : doc.rows) {
    ++line_no;
    std::int64_t ts = 0;
    bool ok = static_cast<std::size_t>(ts_col) < fields.size() &&
              parse_timestamp(fields[static_cast<std::size_t>(ts_col)], descriptor.timestamp_format, ts);
    if (!ok) {
      out.report.rejected_rows++;
      out.report.rejections.emplace_back(line_no, "bad_timestamp");
      continue;
    }
    Row row;
    row.ts = ts;
    row.line = line_no;
    row.values.reserve(value_cols.size());
    for (int vc : value_cols) {
      double v = missing();
      if (static_cast<std::size_t>(vc) < fields.size()) {
        std::string f = fields[static_cast<std::size_t>(vc)];
        while (!f.empty() && (f.front() == ' ' || f.front() == '\t')) f.erase(f.begin());
        while (!f.empty() && (f.back() == ' ' || f.back() == '\t')) f.pop_back();
        if (!f.empty() && !parse_double(f, v)) v = missing();
      }
      if (!std::isfinite(v)) v = missing();  // coerce inf/nan inputs to missing
      row.values.push_back(v);
    }
    rows.push_back(std::move(row));
  }

  // Sensor dumps can arrive out of order (retransmissions); order by time,
  // then resolve duplicate timestamps last-in-file-wins.
  std::stable_sort(rows.begin(), rows.end(),
                   [](const Row& a, const Row& b) { return a.ts < b.ts; });
  std::vector<Row> unique_rows;
  unique_rows.reserve(rows.size());
  for (auto& row : rows) {
    if (!unique_rows.empty() && unique_rows.back().ts == row.ts) {
      out.report.duplicate_rows++;
      out.report.rejected_rows++;
      out.report.rejections.emplace_back(unique_rows.back().line, "duplicate_timestamp");
      unique_rows.back() = std::move(row);
    } else {
      unique_rows.push_back(std::move(row));
    }
  }

  for (std::size_t c = 0; c < descriptor.value_columns.size(); ++c) {
    RawChannel ch;
    ch.name = descriptor.channel_name + "." + descriptor.value_columns[c];
    auto unit_it = descriptor.column_units.find(descriptor.value_columns[c]);
    ch.unit = unit_it != descriptor.column_units.end() ? unit_it->second : descriptor.unit;
    ch.nominal_rate_hz = descriptor.nominal_rate_hz;
    ch.samples.reserve(unique_rows.size());
    std::size_t miss = 0;
    for (const auto& row : unique_rows) {
      ch.samples.push_back({row.ts, row.values[c]});
      if (is_missing(row.values[c])) ++miss;
    }
    out.report.missing_values[ch.name] = miss;
    if (ch.samples.empty()) raise(Errc::empty_file, path + ": no parseable rows");
    out.channels.push_back(std::move(ch));
  }
  return out;
}

ResamplePolicy resample_policy_from_json(const json& doc) {
  ResamplePolicy p;
  std::string up = doc.value("upsample", "hold_last");
  if (up == "hold_last")
    p.upsample = UpsampleKind::hold_last;
  else if (up == "linear_interpolate")
    p.upsample = UpsampleKind::linear_interpolate;
  else
    raise(Errc::invalid_argument, "unknown upsample kind '" + up + "'");
  std::string down = doc.value("downsample", "mean");
  if (down == "mean")
    p.downsample = DownsampleKind::mean;
  else if (down == "median")
    p.downsample = DownsampleKind::median;
  else if (down == "last")
    p.downsample = DownsampleKind::last;
  else if (down == "sum")
    p.downsample = DownsampleKind::sum;
  else
    raise(Errc::invalid_argument, "unknown downsample kind '" + down + "'");
  if (doc.contains("max_gap_ms") && !doc["max_gap_ms"].is_null()) {
    std::int64_t g = doc["max_gap_ms"].get<std::int64_t>();
    if (g <= 0) raise(Errc::invalid_argument, "max_gap_ms must be positive");
    p.max_gap_ms = g;
  }
  return p;
}

json resample_policy_to_json(const ResamplePolicy& policy) {
  json doc;
  doc["upsample"] =
      policy.upsample == UpsampleKind::hold_last ? "hold_last" : "linear_interpolate";
  switch (policy.downsample) {
    case DownsampleKind::mean: doc["downsample"] = "mean"; break;
    case DownsampleKind::median: doc["downsample"] = "median"; break;
    case DownsampleKind::last: doc["downsample"] = "last"; break;
    case DownsampleKind::sum: doc["downsample"] = "sum"; break;
  }
  if (policy.max_gap_ms)
    doc["max_gap_ms"] = *policy.max_gap_ms;
  else
    doc["max_gap_ms"] = nullptr;
  return doc;
}

FeatureSpec feature_spec_from_json(const json& doc) {
  FeatureSpec f;
  f.window_ms = doc.at("window_ms").get<std::int64_t>();
  if (f.window_ms <= 0) raise(Errc::invalid_argument, "window_ms must be positive");
  for (const auto& a : doc.at("aggregations")) f.aggregations.push_back(agg_from_name(a.get<std::string>()));
  if (f.aggregations.empty()) raise(Errc::invalid_argument, "feature spec needs aggregations");
  std::string align = doc.value("label_alignment", "window_end");
  if (align == "window_end")
    f.alignment = LabelAlignment::window_end;
  else if (align == "window_start")
    f.alignment = LabelAlignment::window_start;
  else
    raise(Errc::invalid_argument, "unknown label alignment '" + align + "'");
  return f;
}

MergeSpec MergeSpec::from_json(const json& doc) {
  MergeSpec spec;
  for (const auto& s : doc.at("sources")) spec.sources.push_back(SourceDescriptor::from_json(s));
  if (spec.sources.empty()) raise(Errc::invalid_argument, "merge spec has no sources");

  if (doc.contains("grid")) {
    const auto& g = doc["grid"];
    std::string strategy = g.value("strategy", "slowest");
    if (strategy == "master_channel") {
      spec.grid.kind = GridStrategy::Kind::master_channel;
      spec.grid.master = g.at("channel").get<std::string>();
    } else if (strategy == "explicit") {
      spec.grid.kind = GridStrategy::Kind::explicit_period;
      spec.grid.period_ms = g.at("period_ms").get<std::int64_t>();
    } else if (strategy == "slowest") {
      spec.grid.kind = GridStrategy::Kind::slowest;
    } else {
      raise(Errc::invalid_argument, "unknown grid strategy '" + strategy + "'");
    }
  }
  if (doc.contains("default_policy"))
    spec.default_policy = resample_policy_from_json(doc["default_policy"]);
  if (doc.contains("per_channel_policy"))
    for (auto it = doc["per_channel_policy"].begin(); it != doc["per_channel_policy"].end(); ++it)
      spec.per_channel_policy[it.key()] = resample_policy_from_json(it.value());
  if (doc.contains("feature_specs"))
    for (auto it = doc["feature_specs"].begin(); it != doc["feature_specs"].end(); ++it)
      spec.feature_specs[it.key()] = feature_spec_from_json(it.value());
  return spec;
}

MergeSpec MergeSpec::load(const std::string& path) { return from_json(load_json_file(path)); }

MergeResult merge_sources(const MergeSpec& spec) {
  std::vector<RawChannel> channels;
  std::vector<ParseReport> parse_reports;
  for (const auto& source : spec.sources) {
    ParsedSource parsed = parse_csv(source.path, source);
    for (auto& ch : parsed.channels) channels.push_back(std::move(ch));
    parse_reports.push_back(std::move(parsed.report));
  }

  for (std::size_t i = 0; i < channels.size(); ++i)
    for (std::size_t j = i + 1; j < channels.size(); ++j)
      if (channels[i].name == channels[j].name)
        raise(Errc::duplicate_channel_name, "channel '" + channels[i].name + "' defined twice");

  // Channels named in overrides must exist.
  auto known = [&](const std::string& name) {
    for (const auto& c : channels)
      if (c.name == name) return true;
    return false;
  };
  for (const auto& [name, _] : spec.per_channel_policy)
    if (!known(name)) raise(Errc::unknown_column, "policy for unknown channel '" + name + "'");
  for (const auto& [name, _] : spec.feature_specs)
    if (!known(name)) raise(Errc::unknown_column, "feature spec for unknown channel '" + name + "'");

  TimeGrid grid = infer_grid(channels, spec.grid);

  std::vector<TimeTable::Column> columns;
  json channel_reports = json::array();
  for (const auto& ch : channels) {
    json entry;
    entry["channel"] = ch.name;
    entry["native_rate_hz"] = ch.nominal_rate_hz.str();
    entry["unit"] = ch.unit;

    auto fs = spec.feature_specs.find(ch.name);
    json out_cols = json::array();
    if (fs != spec.feature_specs.end()) {
      entry["direction"] = "windowed";
      auto derived = window_aggregate(ch, fs->second, grid);
      // keep the aggregation order from the spec, not map order
      for (Agg a : fs->second.aggregations) {
        std::string name = ch.name + "_" + agg_name(a);
        auto it = derived.find(name);
        TimeTable::Column col{name, ch.unit, it->second};
        std::size_t filled = 0;
        for (double v : col.values)
          if (!is_missing(v)) ++filled;
        json jc;
        jc["column"] = name;
        jc["fill_fraction"] = static_cast<double>(filled) / static_cast<double>(col.values.size());
        out_cols.push_back(jc);
        columns.push_back(std::move(col));
      }
    } else {
      int cmp = compare(ch.nominal_rate_hz, grid.rate());
      entry["direction"] = cmp > 0 ? "downsampled" : (cmp < 0 ? "upsampled" : "direct");
      auto pol = spec.per_channel_policy.find(ch.name);
      const ResamplePolicy& policy =
          pol != spec.per_channel_policy.end() ? pol->second : spec.default_policy;
      TimeTable::Column col{ch.name, ch.unit, resample(ch, grid, policy)};
      std::size_t filled = 0;
      for (double v : col.values)
        if (!is_missing(v)) ++filled;
      json jc;
      jc["column"] = ch.name;
      jc["fill_fraction"] = static_cast<double>(filled) / static_cast<double>(col.values.size());
      out_cols.push_back(jc);
      columns.push_back(std::move(col));
    }
    entry["columns"] = out_cols;
    channel_reports.push_back(entry);
  }

  MergeResult result{TimeTable(grid, std::move(columns)), json()};
  result.report["schema_version"] = 1;
  result.report["grid"] = {{"start_ms", grid.start}, {"period_ms", grid.period_ms}, {"count", grid.count}};
  result.report["channels"] = channel_reports;
  json sources = json::array();
  for (const auto& pr : parse_reports) sources.push_back(pr.to_json());
  result.report["sources"] = sources;
  result.report["notes"] = json::array(
      {"labels are treated as window-end readings", "aggregation intervals are half-open [t, t+period)"});
  return result;
}

}  // namespace twinpipe
