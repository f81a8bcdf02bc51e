#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "twinpipe/jsonio.hpp"
#include "twinpipe/timeseries.hpp"

namespace twinpipe {

struct OutlierMethod {
  enum class Kind { zscore, iqr, none } kind = Kind::iqr;
  double k = 3.0;        // zscore threshold
  double factor = 1.5;   // iqr fence factor
};

enum class OutlierAction { flag_only, set_missing };

struct MissingPolicy {
  enum class Kind { drop_row, linear_interpolate, forward_fill, fail } kind =
      Kind::linear_interpolate;
  std::int64_t max_gap_cells = 3;
};

/// Per-column knobs override the table-wide defaults.
struct QualitySpec {
  OutlierMethod outlier_method;
  OutlierAction outlier_action = OutlierAction::flag_only;
  MissingPolicy missing_policy;
  std::map<std::string, std::pair<double, double>> physical_range;

  struct Override {
    std::optional<OutlierMethod> outlier_method;
    std::optional<OutlierAction> outlier_action;
    std::optional<MissingPolicy> missing_policy;
  };
  std::map<std::string, Override> columns;

  static QualitySpec from_json(const json& doc);
  static QualitySpec load(const std::string& path);

  OutlierMethod method_for(const std::string& column) const;
  OutlierAction action_for(const std::string& column) const;
  MissingPolicy missing_for(const std::string& column) const;
};

struct ColumnQuality {
  std::size_t rows = 0;
  std::size_t non_missing = 0;
  std::size_t missing_before = 0;
  std::size_t missing_after = 0;
  std::size_t outliers_flagged = 0;
  std::size_t out_of_range = 0;
  std::size_t set_missing_cells = 0;
  std::size_t interpolated_cells = 0;
  std::size_t filled_cells = 0;
  // summary stats over the cleaned column
  double min = 0, max = 0, mean = 0, std_dev = 0, q1 = 0, median = 0, q3 = 0;
  std::vector<std::size_t> histogram;  // 20 equal-width bins over [min, max]
  double histogram_lo = 0, histogram_hi = 0;
  Timestamp argmin_ms = 0, argmax_ms = 0;
};

struct QualityReport {
  std::map<std::string, ColumnQuality> columns;
  std::size_t rows_before = 0;
  std::size_t rows_after = 0;
  std::size_t rows_dropped = 0;

  json to_json() const;
};

/// Per-column outlier masks. zscore flags |x - mean| > k*std (sample std over
/// non-missing cells; zero-variance columns flag nothing); iqr flags cells
/// outside [Q1 - f*IQR, Q3 + f*IQR] with type-7 quartiles; physical-range
/// violations are always flagged.
std::map<std::string, std::vector<bool>> detect_outliers(const TimeTable& table,
                                                         const QualitySpec& spec);

/// Applies the missing-data policy column by column. Interpolation fills
/// interior gaps up to max_gap_cells against the time axis and never
/// extrapolates the ends; drop_row removes rows that are missing in any
/// drop_row column, yielding an irregular table.
TimeTable handle_missing(const TimeTable& table, const QualitySpec& spec,
                         QualityReport* report = nullptr);

struct QualityResult {
  TimeTable table;
  QualityReport report;
};

/// detect -> apply outlier action -> handle missing -> summarize.
QualityResult quality_check(const TimeTable& table, const QualitySpec& spec);

/// Quartiles by linear interpolation between order statistics (type 7), the
/// convention echoed in the report header.
double quantile_type7(const std::vector<double>& sorted_values, double p);

}  // namespace twinpipe
