#include "refimpl.hpp"

#include <algorithm>
#include <cmath>

namespace refimpl {

using twinpipe::Agg;
using twinpipe::DownsampleKind;
using twinpipe::is_missing;
using twinpipe::LabelAlignment;
using twinpipe::missing;
using twinpipe::Sample;
using twinpipe::UpsampleKind;

namespace {

std::vector<double> in_window(const RawChannel& ch, Timestamp lo, Timestamp hi) {
  std::vector<double> out;
  for (const auto& s : ch.samples)
    if (s.timestamp_ms >= lo && s.timestamp_ms < hi && !is_missing(s.value))
      out.push_back(s.value);
  return out;
}

double agg_of(const std::vector<double>& v, Agg agg, const std::vector<Timestamp>& ts) {
  if (v.empty()) return missing();
  double n = static_cast<double>(v.size());
  switch (agg) {
    case Agg::mean: {
      double s = 0;
      for (double x : v) s += x;
      return s / n;
    }
    case Agg::sum: {
      double s = 0;
      for (double x : v) s += x;
      return s;
    }
    case Agg::min: return *std::min_element(v.begin(), v.end());
    case Agg::max: return *std::max_element(v.begin(), v.end());
    case Agg::std_dev: {
      if (v.size() < 2) return missing();
      double mean = 0;
      for (double x : v) mean += x;
      mean /= n;
      double ss = 0;
      for (double x : v) ss += (x - mean) * (x - mean);
      return std::sqrt(ss / (n - 1));
    }
    case Agg::slope: {
      if (v.size() < 2) return missing();
      double tm = 0, vm = 0;
      for (std::size_t i = 0; i < v.size(); ++i) {
        tm += static_cast<double>(ts[i]) / 1000.0;
        vm += v[i];
      }
      tm /= n;
      vm /= n;
      double num = 0, den = 0;
      for (std::size_t i = 0; i < v.size(); ++i) {
        double dt = static_cast<double>(ts[i]) / 1000.0 - tm;
        num += dt * (v[i] - vm);
        den += dt * dt;
      }
      return den == 0 ? missing() : num / den;
    }
  }
  return missing();
}

}  // namespace

std::vector<double> brute_resample(const RawChannel& channel, const TimeGrid& grid,
                                   const twinpipe::ResamplePolicy& policy) {
  std::vector<double> out(static_cast<std::size_t>(grid.count), missing());
  bool faster = !(channel.nominal_rate_hz < grid.rate());
  for (std::int64_t i = 0; i < grid.count; ++i) {
    Timestamp t = grid.point(i);
    double& cell = out[static_cast<std::size_t>(i)];
    if (faster) {
      std::vector<double> v;
      std::vector<Timestamp> vt;
      for (const auto& s : channel.samples)
        if (s.timestamp_ms >= t && s.timestamp_ms < t + grid.period_ms && !is_missing(s.value)) {
          v.push_back(s.value);
          vt.push_back(s.timestamp_ms);
        }
      if (v.empty()) continue;
      switch (policy.downsample) {
        case DownsampleKind::mean: cell = agg_of(v, Agg::mean, vt); break;
        case DownsampleKind::sum: cell = agg_of(v, Agg::sum, vt); break;
        case DownsampleKind::last: cell = v.back(); break;
        case DownsampleKind::median: {
          std::sort(v.begin(), v.end());
          cell = v.size() % 2 ? v[v.size() / 2] : (v[v.size() / 2 - 1] + v[v.size() / 2]) / 2.0;
          break;
        }
      }
    } else if (policy.upsample == UpsampleKind::hold_last) {
      const Sample* prev = nullptr;
      for (const auto& s : channel.samples)
        if (s.timestamp_ms <= t && !is_missing(s.value)) prev = &s;
      if (prev && (!policy.max_gap_ms || t - prev->timestamp_ms <= *policy.max_gap_ms))
        cell = prev->value;
    } else {
      const Sample* prev = nullptr;
      const Sample* next = nullptr;
      for (const auto& s : channel.samples) {
        if (is_missing(s.value)) continue;
        if (s.timestamp_ms <= t) prev = &s;
        if (s.timestamp_ms >= t && !next) next = &s;
      }
      if (prev && prev->timestamp_ms == t) {
        cell = prev->value;
      } else if (prev && next &&
                 (!policy.max_gap_ms || next->timestamp_ms - prev->timestamp_ms <= *policy.max_gap_ms)) {
        double theta = static_cast<double>(t - prev->timestamp_ms) /
                       static_cast<double>(next->timestamp_ms - prev->timestamp_ms);
        cell = prev->value + (next->value - prev->value) * theta;
      }
    }
  }
  return out;
}

std::map<std::string, std::vector<double>> brute_window_aggregate(
    const RawChannel& channel, const twinpipe::FeatureSpec& spec, const TimeGrid& grid) {
  std::map<std::string, std::vector<double>> out;
  for (Agg a : spec.aggregations) {
    std::vector<double> col(static_cast<std::size_t>(grid.count), missing());
    for (std::int64_t i = 0; i < grid.count; ++i) {
      Timestamp t = grid.point(i);
      Timestamp w0 = spec.alignment == LabelAlignment::window_end ? t - spec.window_ms : t;
      Timestamp w1 = w0 + spec.window_ms;
      std::vector<double> v;
      std::vector<Timestamp> vt;
      for (const auto& s : channel.samples)
        if (s.timestamp_ms >= w0 && s.timestamp_ms < w1 && !is_missing(s.value)) {
          v.push_back(s.value);
          vt.push_back(s.timestamp_ms);
        }
      col[static_cast<std::size_t>(i)] = agg_of(v, a, vt);
    }
    out[channel.name + "_" + twinpipe::agg_name(a)] = std::move(col);
  }
  return out;
}

RawChannel naive_odba(const TriAxialAccel& accel, std::int64_t static_window_ms) {
  RawChannel out;
  out.name = "odba";
  out.unit = "m/s2";
  out.nominal_rate_hz = accel.x.nominal_rate_hz;
  const auto& ts = accel.x.samples;
  const std::int64_t half = static_window_ms / 2;
  for (std::size_t i = 0; i < ts.size(); ++i) {
    Timestamp t = ts[i].timestamp_ms;
    double sx = 0, sy = 0, sz = 0;
    std::size_t n = 0;
    for (std::size_t j = 0; j < ts.size(); ++j) {
      if (ts[j].timestamp_ms < t - half || ts[j].timestamp_ms >= t + half) continue;
      sx += accel.x.samples[j].value - accel.x.samples[i].value;
      sy += accel.y.samples[j].value - accel.y.samples[i].value;
      sz += accel.z.samples[j].value - accel.z.samples[i].value;
      ++n;
    }
    if (n == 0) n = 1;
    double dn = static_cast<double>(n);
    out.samples.push_back(
        {t, std::fabs(sx / dn) + std::fabs(sy / dn) + std::fabs(sz / dn)});
  }
  return out;
}

std::vector<CellCount> enumerate_cells(const RawChannel& channel, const TimeGrid& grid) {
  std::vector<CellCount> cells;
  for (std::int64_t i = 0; i < grid.count; ++i) {
    Timestamp t = grid.point(i);
    std::size_t n = 0;
    for (const auto& s : channel.samples)
      if (s.timestamp_ms >= t && s.timestamp_ms < t + grid.period_ms) ++n;
    cells.push_back({t, n});
  }
  return cells;
}

TimeGrid brute_grid(const std::vector<RawChannel>& channels, std::int64_t period_ms) {
  Timestamp start = channels.front().samples.front().timestamp_ms;
  Timestamp end = channels.front().samples.back().timestamp_ms;
  for (const auto& c : channels) {
    start = std::max(start, c.samples.front().timestamp_ms);
    end = std::min(end, c.samples.back().timestamp_ms);
  }
  std::int64_t count = 0;
  for (Timestamp t = start; t <= end; t += period_ms) ++count;
  return TimeGrid{start, period_ms, count};
}

void naive_mean_std(const std::vector<double>& values, double& mean, double& std_dev) {
  std::vector<double> v;
  for (double x : values)
    if (!is_missing(x)) v.push_back(x);
  mean = 0;
  std_dev = 0;
  if (v.empty()) return;
  for (double x : v) mean += x;
  mean /= static_cast<double>(v.size());
  if (v.size() < 2) return;
  double ss = 0;
  for (double x : v) ss += (x - mean) * (x - mean);
  std_dev = std::sqrt(ss / static_cast<double>(v.size() - 1));
}

bool naive_ols(const std::vector<std::vector<double>>& features, const std::vector<double>& y,
               double& intercept, std::vector<double>& coefficients) {
  const std::size_t n = y.size();
  const std::size_t m = features.size() + 1;
  std::vector<std::vector<double>> a(m, std::vector<double>(m + 1, 0.0));
  auto col = [&](std::size_t j, std::size_t r) {
    return j == 0 ? 1.0 : features[j - 1][r];
  };
  for (std::size_t i = 0; i < m; ++i) {
    for (std::size_t j = 0; j < m; ++j) {
      double s = 0;
      for (std::size_t r = 0; r < n; ++r) s += col(i, r) * col(j, r);
      a[i][j] = s;
    }
    double s = 0;
    for (std::size_t r = 0; r < n; ++r) s += col(i, r) * y[r];
    a[i][m] = s;
  }
  for (std::size_t k = 0; k < m; ++k) {
    std::size_t pivot = k;
    for (std::size_t r = k + 1; r < m; ++r)
      if (std::fabs(a[r][k]) > std::fabs(a[pivot][k])) pivot = r;
    if (std::fabs(a[pivot][k]) < 1e-12) return false;
    std::swap(a[k], a[pivot]);
    for (std::size_t r = k + 1; r < m; ++r) {
      double f = a[r][k] / a[k][k];
      for (std::size_t c = k; c <= m; ++c) a[r][c] -= f * a[k][c];
    }
  }
  std::vector<double> beta(m, 0.0);
  for (std::size_t k = m; k-- > 0;) {
    double s = a[k][m];
    for (std::size_t c = k + 1; c < m; ++c) s -= a[k][c] * beta[c];
    beta[k] = s / a[k][k];
  }
  intercept = beta[0];
  coefficients.assign(beta.begin() + 1, beta.end());
  return true;
}

}  // namespace refimpl
