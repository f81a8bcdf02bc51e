#include "twinpipe/sensors.hpp"

#include <algorithm>
#include <cmath>

namespace twinpipe {

void TriAxialAccel::validate() const {
  x.validate();
  y.validate();
  z.validate();
  if (x.samples.size() != y.samples.size() || x.samples.size() != z.samples.size())
    raise(Errc::mismatched_axes, "accel axes have different sample counts");
  for (std::size_t i = 0; i < x.samples.size(); ++i)
    if (x.samples[i].timestamp_ms != y.samples[i].timestamp_ms ||
        x.samples[i].timestamp_ms != z.samples[i].timestamp_ms)
      raise(Errc::mismatched_axes, "accel axes timestamps differ at index " + std::to_string(i));
}

namespace {

std::size_t lower_bound_ts(const std::vector<Sample>& samples, Timestamp t) {
  return static_cast<std::size_t>(
      std::lower_bound(samples.begin(), samples.end(), t,
                       [](const Sample& s, Timestamp x) { return s.timestamp_ms < x; }) -
      samples.begin());
}

// Dynamic component at index i: x_i minus the running mean over [lo, hi),
// evaluated as the mean of (x_j - x_i) so a constant axis is exactly zero.
double dynamic_component(const std::vector<Sample>& s, std::size_t i, std::size_t lo,
                         std::size_t hi) {
  double acc = 0.0;
  const double center = s[i].value;
  for (std::size_t j = lo; j < hi; ++j) acc += s[j].value - center;
  return -acc / static_cast<double>(hi - lo);
}

}  // namespace

RawChannel odba(const TriAxialAccel& accel, std::int64_t static_window_ms) {
  accel.validate();
  const auto& ts = accel.x.samples;
  const std::int64_t n = static_cast<std::int64_t>(ts.size());

  std::int64_t native_period = accel.x.nominal_rate_hz.period_ms();
  if (static_window_ms < 2 * native_period)
    raise(Errc::window_too_short, "static window " + std::to_string(static_window_ms) +
                                      " ms spans fewer than 2 samples at the channel rate");

  RawChannel out;
  out.name = "odba";
  out.unit = "m/s2";
  out.nominal_rate_hz = accel.x.nominal_rate_hz;
  out.samples.resize(ts.size());

  const std::int64_t half = static_window_ms / 2;

#ifdef _OPENMP
#pragma omp parallel for
#endif
  for (std::int64_t i = 0; i < n; ++i) {
    std::size_t ui = static_cast<std::size_t>(i);
    Timestamp t = ts[ui].timestamp_ms;
    std::size_t lo = lower_bound_ts(ts, t - half);
    std::size_t hi = lower_bound_ts(ts, t + half);
    if (hi <= lo) hi = lo + 1;  // degenerate window still covers the sample itself
    double dx = dynamic_component(accel.x.samples, ui, lo, hi);
    double dy = dynamic_component(accel.y.samples, ui, lo, hi);
    double dz = dynamic_component(accel.z.samples, ui, lo, hi);
    out.samples[ui] = {t, std::fabs(dx) + std::fabs(dy) + std::fabs(dz)};
  }
  return out;
}

RawChannel oxygen_uptake_rate(const RawChannel& dissolved_oxygen, const RespirometrySetup& setup,
                              std::int64_t slope_window_ms) {
  dissolved_oxygen.validate();
  if (setup.volume_liters <= 0.0 || setup.mass_kg <= 0.0)
    raise(Errc::nonpositive_setup, "respirometry volume and mass must be positive");
  if (slope_window_ms <= 0) raise(Errc::window_too_short, "slope window must be positive");

  const auto& s = dissolved_oxygen.samples;
  Timestamp start = s.front().timestamp_ms;
  Timestamp end = s.back().timestamp_ms;
  std::int64_t windows = (end - start) / slope_window_ms;
  if (windows < 1)
    raise(Errc::window_too_short, "DO channel shorter than one slope window");

  RawChannel out;
  out.name = "mo2";
  out.unit = "mgO2/kg/h";
  out.nominal_rate_hz = Rational(1000, slope_window_ms);
  out.samples.resize(static_cast<std::size_t>(windows));

  const double scale = setup.volume_liters / setup.mass_kg;

#ifdef _OPENMP
#pragma omp parallel for
#endif
  for (std::int64_t w = 0; w < windows; ++w) {
    Timestamp w0 = start + w * slope_window_ms;
    Timestamp w1 = w0 + slope_window_ms;
    std::size_t lo = lower_bound_ts(s, w0);
    std::size_t hi = lower_bound_ts(s, w1);

    // Least-squares slope of DO against time in hours, anchored for exactness
    // on flat windows.
    double anchor_v = 0.0, anchor_t = 0.0, sv = 0.0, st = 0.0;
    std::size_t n = 0;
    for (std::size_t i = lo; i < hi; ++i) {
      if (is_missing(s[i].value)) continue;
      double t = static_cast<double>(s[i].timestamp_ms) / 3.6e6;
      if (n == 0) {
        anchor_v = s[i].value;
        anchor_t = t;
      }
      sv += s[i].value - anchor_v;
      st += t - anchor_t;
      ++n;
    }
    if (n < 2) {
      out.samples[static_cast<std::size_t>(w)] = {w1, missing()};
      continue;
    }
    double mean_v = anchor_v + sv / static_cast<double>(n);
    double mean_t = anchor_t + st / static_cast<double>(n);
    double num = 0.0, den = 0.0;
    for (std::size_t i = lo; i < hi; ++i) {
      if (is_missing(s[i].value)) continue;
      double t = static_cast<double>(s[i].timestamp_ms) / 3.6e6;
      num += (t - mean_t) * (s[i].value - mean_v);
      den += (t - mean_t) * (t - mean_t);
    }
    double slope_per_hour = den == 0.0 ? missing() : num / den;
    double mo2 = is_missing(slope_per_hour) ? missing() : -slope_per_hour * scale;
    out.samples[static_cast<std::size_t>(w)] = {w1, mo2};
  }
  return out;
}

}  // namespace twinpipe
