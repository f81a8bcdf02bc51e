#include "twinpipe/rational.hpp"

#include <cctype>
#include <charconv>
#include <cstdlib>

namespace twinpipe {

Rational::Rational(std::int64_t n, std::int64_t d) : num(n), den(d) {
  if (den == 0) raise(Errc::invalid_argument, "rational with zero denominator");
  if (den < 0) {
    num = -num;
    den = -den;
  }
  std::int64_t g = std::gcd(num < 0 ? -num : num, den);
  if (g > 1) {
    num /= g;
    den /= g;
  }
}

std::string Rational::str() const {
  if (den == 1) return std::to_string(num);
  return std::to_string(num) + "/" + std::to_string(den);
}

std::int64_t Rational::period_ms() const {
  if (num <= 0) raise(Errc::invalid_argument, "period of non-positive rate");
  __int128 p = (__int128)1000 * den;
  __int128 q = num;
  std::int64_t period = static_cast<std::int64_t>((p + q / 2) / q);
  return period < 1 ? 1 : period;
}

int compare(const Rational& a, const Rational& b) {
  __int128 lhs = (__int128)a.num * b.den;
  __int128 rhs = (__int128)b.num * a.den;
  if (lhs < rhs) return -1;
  if (lhs > rhs) return 1;
  return 0;
}

Rational Rational::parse(const std::string& text) {
  std::string s;
  for (char c : text)
    if (!std::isspace(static_cast<unsigned char>(c))) s.push_back(c);
  if (s.empty()) raise(Errc::invalid_argument, "empty rational");

  auto parse_int = [&](const std::string& part) -> std::int64_t {
    std::int64_t v = 0;
    auto [ptr, ec] = std::from_chars(part.data(), part.data() + part.size(), v);
    if (ec != std::errc{} || ptr != part.data() + part.size())
      raise(Errc::invalid_argument, "bad rational component '" + part + "'");
    return v;
  };

  auto slash = s.find('/');
  if (slash != std::string::npos)
    return Rational(parse_int(s.substr(0, slash)), parse_int(s.substr(slash + 1)));

  auto dot = s.find('.');
  if (dot == std::string::npos) return Rational(parse_int(s), 1);

  // Decimal: keep the printed digits exact, e.g. "0.33" -> 33/100.
  std::string digits = s.substr(0, dot) + s.substr(dot + 1);
  std::size_t frac_len = s.size() - dot - 1;
  if (frac_len > 15) raise(Errc::invalid_argument, "decimal rate too precise: " + text);
  std::int64_t den = 1;
  for (std::size_t i = 0; i < frac_len; ++i) den *= 10;
  return Rational(parse_int(digits), den);
}

}  // namespace twinpipe
