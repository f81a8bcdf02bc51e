#pragma once

#include "twinpipe/timeseries.hpp"

namespace twinpipe {

/// Tri-axial acceleration triplet; the three channels must share timestamps
/// exactly.
struct TriAxialAccel {
  RawChannel x, y, z;

  void validate() const;
};

struct RespirometrySetup {
  double volume_liters = 0.0;
  double mass_kg = 0.0;
};

/// Overall dynamic body acceleration: per sample,
///   |x - x_bar| + |y - y_bar| + |z - z_bar|
/// where each bar term is the centered running mean over static_window_ms
/// (half-open [t - w/2, t + w/2), shrinking at the series boundaries so the
/// output keeps the input length and timestamps). Non-negative everywhere.
RawChannel odba(const TriAxialAccel& accel, std::int64_t static_window_ms);

/// Mass-specific oxygen uptake from closed-respirometry dissolved oxygen:
/// per half-open window [k*w, (k+1)*w), MO2 = -slope(DO in mg/L per hour)
/// * volume / mass, one sample per window timestamped at window end.
/// Negative uptake (rising DO) is reported as-is for the quality stage to
/// flag.
RawChannel oxygen_uptake_rate(const RawChannel& dissolved_oxygen, const RespirometrySetup& setup,
                              std::int64_t slope_window_ms);

}  // namespace twinpipe
