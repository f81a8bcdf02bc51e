#include "twinpipe/quality.hpp"

#include <algorithm>
#include <cmath>

namespace twinpipe {

namespace {

OutlierMethod outlier_method_from_json(const json& doc) {
  OutlierMethod m;
  std::string kind = doc.value("method", "iqr");
  if (kind == "zscore") {
    m.kind = OutlierMethod::Kind::zscore;
    m.k = doc.value("k", 3.0);
    if (m.k <= 0) raise(Errc::invalid_argument, "zscore k must be positive");
  } else if (kind == "iqr") {
    m.kind = OutlierMethod::Kind::iqr;
    m.factor = doc.value("factor", 1.5);
    if (m.factor <= 0) raise(Errc::invalid_argument, "iqr factor must be positive");
  } else if (kind == "none") {
    m.kind = OutlierMethod::Kind::none;
  } else {
    raise(Errc::invalid_argument, "unknown outlier method '" + kind + "'");
  }
  return m;
}

OutlierAction outlier_action_from_json(const json& doc) {
  std::string action = doc.get<std::string>();
  if (action == "flag_only") return OutlierAction::flag_only;
  if (action == "set_missing") return OutlierAction::set_missing;
  raise(Errc::invalid_argument, "unknown outlier action '" + action + "'");
}

MissingPolicy missing_policy_from_json(const json& doc) {
  MissingPolicy p;
  std::string kind = doc.value("policy", "linear_interpolate");
  if (kind == "drop_row")
    p.kind = MissingPolicy::Kind::drop_row;
  else if (kind == "linear_interpolate")
    p.kind = MissingPolicy::Kind::linear_interpolate;
  else if (kind == "forward_fill")
    p.kind = MissingPolicy::Kind::forward_fill;
  else if (kind == "fail")
    p.kind = MissingPolicy::Kind::fail;
  else
    raise(Errc::invalid_argument, "unknown missing policy '" + kind + "'");
  p.max_gap_cells = doc.value("max_gap_cells", std::int64_t{3});
  if (p.max_gap_cells < 1) raise(Errc::invalid_argument, "max_gap_cells must be >= 1");
  return p;
}

}  // namespace

QualitySpec QualitySpec::from_json(const json& doc) {
  QualitySpec spec;
  if (doc.contains("outlier_method")) spec.outlier_method = outlier_method_from_json(doc["outlier_method"]);
  if (doc.contains("outlier_action")) spec.outlier_action = outlier_action_from_json(doc["outlier_action"]);
  if (doc.contains("missing_policy")) spec.missing_policy = missing_policy_from_json(doc["missing_policy"]);
  if (doc.contains("physical_range"))
    for (auto it = doc["physical_range"].begin(); it != doc["physical_range"].end(); ++it) {
      const auto& arr = it.value();
      double lo = arr.at(0).get<double>();
      double hi = arr.at(1).get<double>();
      if (!(lo < hi)) raise(Errc::invalid_argument, "physical range for '" + it.key() + "' is empty");
      spec.physical_range[it.key()] = {lo, hi};
    }
  if (doc.contains("columns"))
    for (auto it = doc["columns"].begin(); it != doc["columns"].end(); ++it) {
      Override ov;
      if (it.value().contains("outlier_method"))
        ov.outlier_method = outlier_method_from_json(it.value()["outlier_method"]);
      if (it.value().contains("outlier_action"))
        ov.outlier_action = outlier_action_from_json(it.value()["outlier_action"]);
      if (it.value().contains("missing_policy"))
        ov.missing_policy = missing_policy_from_json(it.value()["missing_policy"]);
      spec.columns[it.key()] = ov;
    }
  return spec;
}

QualitySpec QualitySpec::load(const std::string& path) { return from_json(load_json_file(path)); }

OutlierMethod QualitySpec::method_for(const std::string& column) const {
  auto it = columns.find(column);
  if (it != columns.end() && it->second.outlier_method) return *it->second.outlier_method;
  return outlier_method;
}

OutlierAction QualitySpec::action_for(const std::string& column) const {
  auto it = columns.find(column);
  if (it != columns.end() && it->second.outlier_action) return *it->second.outlier_action;
  return outlier_action;
}

MissingPolicy QualitySpec::missing_for(const std::string& column) const {
  auto it = columns.find(column);
  if (it != columns.end() && it->second.missing_policy) return *it->second.missing_policy;
  return missing_policy;
}

double quantile_type7(const std::vector<double>& sorted_values, double p) {
  if (sorted_values.empty()) return missing();
  if (sorted_values.size() == 1) return sorted_values[0];
  double h = p * static_cast<double>(sorted_values.size() - 1);
  std::size_t lo = static_cast<std::size_t>(h);
  if (lo >= sorted_values.size() - 1) return sorted_values.back();
  double frac = h - static_cast<double>(lo);
  return sorted_values[lo] + frac * (sorted_values[lo + 1] - sorted_values[lo]);
}

namespace {

void validate_override_columns(const TimeTable& table, const QualitySpec& spec) {
  for (const auto& [name, _] : spec.columns)
    if (!table.has_column(name)) raise(Errc::unknown_column, "override for unknown column '" + name + "'");
  for (const auto& [name, _] : spec.physical_range)
    if (!table.has_column(name))
      raise(Errc::unknown_column, "physical range for unknown column '" + name + "'");
}

struct BasicStats {
  std::size_t n = 0;
  double mean = 0, std_dev = 0;
};

// Anchored at the first value so constant columns get exactly zero variance.
BasicStats column_stats(const std::vector<double>& values) {
  BasicStats st;
  double anchor = 0, s1 = 0, s2 = 0;
  for (double v : values) {
    if (is_missing(v)) continue;
    if (st.n == 0) anchor = v;
    double d = v - anchor;
    s1 += d;
    s2 += d * d;
    ++st.n;
  }
  if (st.n == 0) return st;
  st.mean = anchor + s1 / static_cast<double>(st.n);
  if (st.n >= 2) {
    double var = (s2 - s1 * s1 / static_cast<double>(st.n)) / static_cast<double>(st.n - 1);
    st.std_dev = std::sqrt(var < 0 ? 0 : var);
  }
  return st;
}

}  // namespace

std::map<std::string, std::vector<bool>> detect_outliers(const TimeTable& table,
                                                         const QualitySpec& spec) {
  validate_override_columns(table, spec);

  const auto& cols = table.columns();
  std::map<std::string, std::vector<bool>> masks;
  for (const auto& col : cols) masks[col.name] = std::vector<bool>(col.values.size(), false);

  const std::int64_t ncols = static_cast<std::int64_t>(cols.size());
#ifdef _OPENMP
#pragma omp parallel for schedule(dynamic)
#endif
  for (std::int64_t c = 0; c < ncols; ++c) {
    const auto& col = cols[static_cast<std::size_t>(c)];
    std::vector<bool>& mask = masks.at(col.name);  // pre-inserted; no rehash under omp
    OutlierMethod method = spec.method_for(col.name);

    if (method.kind == OutlierMethod::Kind::zscore) {
      BasicStats st = column_stats(col.values);
      if (st.n >= 2 && st.std_dev > 0.0) {
        double limit = method.k * st.std_dev;
        for (std::size_t i = 0; i < col.values.size(); ++i)
          if (!is_missing(col.values[i]) && std::fabs(col.values[i] - st.mean) > limit)
            mask[i] = true;
      }
    } else if (method.kind == OutlierMethod::Kind::iqr) {
      std::vector<double> sorted;
      sorted.reserve(col.values.size());
      for (double v : col.values)
        if (!is_missing(v)) sorted.push_back(v);
      if (sorted.size() >= 2) {
        std::sort(sorted.begin(), sorted.end());
        double q1 = quantile_type7(sorted, 0.25);
        double q3 = quantile_type7(sorted, 0.75);
        double iqr = q3 - q1;
        double lo = q1 - method.factor * iqr;
        double hi = q3 + method.factor * iqr;
        for (std::size_t i = 0; i < col.values.size(); ++i)
          if (!is_missing(col.values[i]) && (col.values[i] < lo || col.values[i] > hi))
            mask[i] = true;
      }
    }

    auto range = spec.physical_range.find(col.name);
    if (range != spec.physical_range.end()) {
      for (std::size_t i = 0; i < col.values.size(); ++i)
        if (!is_missing(col.values[i]) &&
            (col.values[i] < range->second.first || col.values[i] > range->second.second))
          mask[i] = true;
    }
  }
  return masks;
}

TimeTable handle_missing(const TimeTable& table, const QualitySpec& spec, QualityReport* report) {
  validate_override_columns(table, spec);

  std::vector<TimeTable::Column> cols = table.columns();
  const auto& ts = table.timestamps();
  std::vector<bool> drop_mask(table.row_count(), false);
  bool any_drop_policy = false;

  for (auto& col : cols) {
    MissingPolicy policy = spec.missing_for(col.name);
    std::size_t missing_count = 0;
    for (double v : col.values)
      if (is_missing(v)) ++missing_count;

    if (policy.kind == MissingPolicy::Kind::fail) {
      if (missing_count > 0)
        raise(Errc::missing_data_found, "column '" + col.name + "' has " +
                                            std::to_string(missing_count) + " missing cells");
      continue;
    }
    if (missing_count == 0) continue;
    if (missing_count == col.values.size())
      raise(Errc::all_missing_column, "column '" + col.name + "' is entirely missing");

    if (policy.kind == MissingPolicy::Kind::drop_row) {
      any_drop_policy = true;
      for (std::size_t i = 0; i < col.values.size(); ++i)
        if (is_missing(col.values[i])) drop_mask[i] = true;
      continue;
    }

    if (policy.kind == MissingPolicy::Kind::forward_fill) {
      std::size_t last_good = 0;
      bool has_good = false;
      for (std::size_t i = 0; i < col.values.size(); ++i) {
        if (!is_missing(col.values[i])) {
          last_good = i;
          has_good = true;
        } else if (has_good &&
                   static_cast<std::int64_t>(i - last_good) <= policy.max_gap_cells) {
          col.values[i] = col.values[last_good];
          if (report) report->columns[col.name].filled_cells++;
        }
      }
      continue;
    }

    // linear_interpolate: fill interior gaps no longer than max_gap_cells
    std::size_t i = 0;
    const std::size_t n = col.values.size();
    while (i < n) {
      if (!is_missing(col.values[i])) {
        ++i;
        continue;
      }
      std::size_t gap_start = i;
      while (i < n && is_missing(col.values[i])) ++i;
      std::size_t gap_end = i;  // one past the gap
      bool interior = gap_start > 0 && gap_end < n;
      std::int64_t gap_len = static_cast<std::int64_t>(gap_end - gap_start);
      if (!interior || gap_len > policy.max_gap_cells) continue;
      std::size_t a = gap_start - 1, b = gap_end;
      double va = col.values[a], vb = col.values[b];
      for (std::size_t k = gap_start; k < gap_end; ++k) {
        double theta = static_cast<double>(ts[k] - ts[a]) / static_cast<double>(ts[b] - ts[a]);
        col.values[k] = va + (vb - va) * theta;
        if (report) report->columns[col.name].interpolated_cells++;
      }
    }
  }

  if (!any_drop_policy)
    return TimeTable(std::vector<Timestamp>(ts), std::move(cols), table.regular(),
                     table.period_ms());

  std::vector<Timestamp> kept_ts;
  for (std::size_t i = 0; i < ts.size(); ++i)
    if (!drop_mask[i]) kept_ts.push_back(ts[i]);
  std::vector<TimeTable::Column> kept_cols;
  kept_cols.reserve(cols.size());
  for (auto& col : cols) {
    TimeTable::Column kc{col.name, col.unit, {}};
    kc.values.reserve(kept_ts.size());
    for (std::size_t i = 0; i < col.values.size(); ++i)
      if (!drop_mask[i]) kc.values.push_back(col.values[i]);
    kept_cols.push_back(std::move(kc));
  }
  if (report) report->rows_dropped = ts.size() - kept_ts.size();
  // Dropping rows breaks the regular grid; table is flagged irregular.
  return TimeTable(std::move(kept_ts), std::move(kept_cols), false, 0);
}

QualityResult quality_check(const TimeTable& table, const QualitySpec& spec) {
  QualityReport report;
  report.rows_before = table.row_count();

  auto masks = detect_outliers(table, spec);

  TimeTable flagged = table;
  for (auto& col : flagged.columns_mutable()) {
    ColumnQuality& cq = report.columns[col.name];
    cq.rows = col.values.size();
    const std::vector<bool>& mask = masks[col.name];
    auto range = spec.physical_range.find(col.name);
    for (std::size_t i = 0; i < col.values.size(); ++i) {
      if (is_missing(col.values[i])) {
        cq.missing_before++;
        continue;
      }
      if (range != spec.physical_range.end() &&
          (col.values[i] < range->second.first || col.values[i] > range->second.second))
        cq.out_of_range++;
      if (mask[i]) cq.outliers_flagged++;
    }
    if (spec.action_for(col.name) == OutlierAction::set_missing) {
      for (std::size_t i = 0; i < col.values.size(); ++i)
        if (mask[i] && !is_missing(col.values[i])) {
          col.values[i] = missing();
          cq.set_missing_cells++;
        }
    }
  }

  TimeTable cleaned = handle_missing(flagged, spec, &report);
  report.rows_after = cleaned.row_count();

  for (const auto& col : cleaned.columns()) {
    ColumnQuality& cq = report.columns[col.name];
    std::vector<double> sorted;
    sorted.reserve(col.values.size());
    for (std::size_t i = 0; i < col.values.size(); ++i) {
      double v = col.values[i];
      if (is_missing(v)) {
        cq.missing_after++;
        continue;
      }
      if (sorted.empty() || v < cq.min) {
        cq.min = v;
        cq.argmin_ms = cleaned.timestamps()[i];
      }
      if (sorted.empty() || v > cq.max) {
        cq.max = v;
        cq.argmax_ms = cleaned.timestamps()[i];
      }
      sorted.push_back(v);
    }
    cq.non_missing = sorted.size();
    BasicStats st = column_stats(col.values);
    cq.mean = st.mean;
    cq.std_dev = st.std_dev;
    std::sort(sorted.begin(), sorted.end());
    if (!sorted.empty()) {
      cq.q1 = quantile_type7(sorted, 0.25);
      cq.median = quantile_type7(sorted, 0.5);
      cq.q3 = quantile_type7(sorted, 0.75);
      cq.histogram_lo = sorted.front();
      cq.histogram_hi = sorted.back();
      cq.histogram.assign(20, 0);
      double width = (cq.histogram_hi - cq.histogram_lo) / 20.0;
      for (double v : sorted) {
        std::size_t bin = 0;
        if (width > 0) {
          bin = static_cast<std::size_t>((v - cq.histogram_lo) / width);
          if (bin >= 20) bin = 19;
        }
        cq.histogram[bin]++;
      }
    }
  }

  return {std::move(cleaned), std::move(report)};
}

json QualityReport::to_json() const {
  json doc;
  doc["schema_version"] = 1;
  doc["quartile_method"] = "linear interpolation between order statistics (type 7)";
  doc["rows_before"] = rows_before;
  doc["rows_after"] = rows_after;
  doc["rows_dropped"] = rows_dropped;
  json jcols;
  for (const auto& [name, cq] : columns) {
    json c;
    c["rows"] = cq.rows;
    c["non_missing"] = cq.non_missing;
    c["missing_before"] = cq.missing_before;
    c["missing_after"] = cq.missing_after;
    c["outliers_flagged"] = cq.outliers_flagged;
    c["out_of_range"] = cq.out_of_range;
    c["set_missing_cells"] = cq.set_missing_cells;
    c["interpolated_cells"] = cq.interpolated_cells;
    c["filled_cells"] = cq.filled_cells;
    c["stats"] = {{"min", cq.min},     {"max", cq.max}, {"mean", cq.mean}, {"std", cq.std_dev},
                  {"q1", cq.q1},       {"median", cq.median}, {"q3", cq.q3}};
    c["histogram"] = {{"lo", cq.histogram_lo}, {"hi", cq.histogram_hi}, {"counts", cq.histogram}};
    c["extrema"] = {{"argmin_ms", cq.argmin_ms}, {"argmax_ms", cq.argmax_ms}};
    jcols[name] = c;
  }
  doc["columns"] = jcols;
  return doc;
}

}  // namespace twinpipe
