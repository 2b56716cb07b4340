#include "gstnet/rational.hpp"

#include <cctype>
#include <cstdint>

namespace gstnet {

Rational Rational::parse(const std::string& text) {
  if (text.empty()) throw std::invalid_argument("rational: empty string");
  const auto slash = text.find('/');
  if (slash != std::string::npos) {
    const std::string a = text.substr(0, slash), b = text.substr(slash + 1);
    if (a.empty() || b.empty()) throw std::invalid_argument("rational: malformed '" + text + "'");
    return Rational(std::stoll(a), std::stoll(b)).normalized();
  }
  const auto dot = text.find('.');
  if (dot == std::string::npos) {
    return Rational(std::stoll(text), 1);
  }
  const std::string whole = text.substr(0, dot), frac = text.substr(dot + 1);
  if (frac.size() > 9) throw std::invalid_argument("rational: too many decimal digits in '" + text + "'");
  for (char ch : frac) {
    if (!std::isdigit(static_cast<unsigned char>(ch))) {
      throw std::invalid_argument("rational: malformed '" + text + "'");
    }
  }
  std::int64_t den = 1;
  for (std::size_t i = 0; i < frac.size(); ++i) den *= 10;
  const std::int64_t w = whole.empty() ? 0 : std::stoll(whole);
  const std::int64_t f = frac.empty() ? 0 : std::stoll(frac);
  return Rational(w * den + f, den).normalized();
}

}  // namespace gstnet
