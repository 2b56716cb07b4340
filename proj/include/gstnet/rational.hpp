#pragma once

#include <cstdint>
#include <numeric>
#include <stdexcept>
#include <string>

namespace gstnet {

// Exact non-negative rational so channel splits stay integral.
struct Rational {
  std::int64_t num = 0;
  std::int64_t den = 1;

  constexpr Rational() = default;
  constexpr Rational(std::int64_t n, std::int64_t d) : num(n), den(d) {
    if (d <= 0) throw std::invalid_argument("rational denominator must be positive");
  }

  double value() const { return static_cast<double>(num) / static_cast<double>(den); }

  // round(r * x), half away from zero; r >= 0.
  std::int64_t round_times(std::int64_t x) const {
    const std::int64_t p = num * x;
    return (2 * p + den) / (2 * den);
  }

  // Exact product r * x; throws if not an integer.
  std::int64_t exact_times(std::int64_t x, const char* what) const {
    const std::int64_t p = num * x;
    if (p % den != 0) throw std::invalid_argument(std::string(what) + " is not divisible");
    return p / den;
  }

  Rational normalized() const {
    const std::int64_t g = std::gcd(num, den);
    return g > 0 ? Rational{num / g, den / g} : *this;
  }

  bool operator==(const Rational& o) const {
    return num * o.den == o.num * den;
  }

  std::string str() const {
    if (den == 1) return std::to_string(num);
    return std::to_string(num) + "/" + std::to_string(den);
  }

  // Accepts "1/4", "0.25", "1"; decimals with up to 9 fractional digits.
  static Rational parse(const std::string& text);
};

}  // namespace gstnet
