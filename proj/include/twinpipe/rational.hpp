#pragma once

#include <cstdint>
#include <numeric>
#include <string>

#include "twinpipe/error.hpp"

namespace twinpipe {

/// Exact rational sampling rate in Hz. 1/60 Hz (one sample per minute) and
/// 0.33 Hz (33/100, not 1/3) stay exact instead of drifting as floats.
struct Rational {
  std::int64_t num = 0;
  std::int64_t den = 1;

  constexpr Rational() = default;
  Rational(std::int64_t n, std::int64_t d);

  bool positive() const { return num > 0; }
  double to_double() const { return static_cast<double>(num) / static_cast<double>(den); }
  std::string str() const;

  /// Nearest integer grid period in ms for this rate (1000 * den / num).
  std::int64_t period_ms() const;

  static Rational from_period_ms(std::int64_t period_ms) { return Rational(1000, period_ms); }

  /// Parses "25", "1/60" or a plain decimal like "0.33" (read digit-exactly,
  /// so 0.33 becomes 33/100).
  static Rational parse(const std::string& text);
};

int compare(const Rational& a, const Rational& b);

inline bool operator==(const Rational& a, const Rational& b) { return compare(a, b) == 0; }
inline bool operator<(const Rational& a, const Rational& b) { return compare(a, b) < 0; }
inline bool operator>(const Rational& a, const Rational& b) { return compare(a, b) > 0; }

}  // namespace twinpipe
