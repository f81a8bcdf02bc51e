#pragma once

#include <cmath>
#include <limits>

namespace twinpipe {

// A missing cell is carried as quiet NaN; any NaN read from input data is
// coerced to missing at the parse boundary, so inside the engine NaN and
// "missing" are the same thing.
inline double missing() { return std::numeric_limits<double>::quiet_NaN(); }

inline bool is_missing(double v) { return std::isnan(v); }

}  // namespace twinpipe
