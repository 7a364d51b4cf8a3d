#include "idgame/rational.hpp"

#include <charconv>
#include <limits>
#include <ostream>
#include <stdexcept>

namespace idgame {

namespace {

__int128 abs128(__int128 v) { return v < 0 ? -v : v; }

__int128 gcd128(__int128 a, __int128 b) {
  a = abs128(a);
  b = abs128(b);
  while (b != 0) {
    __int128 t = a % b;
    a = b;
    b = t;
  }
  return a;
}

bool fits(__int128 v) {
  return v >= std::numeric_limits<std::int64_t>::min() &&
         v <= std::numeric_limits<std::int64_t>::max();
}

std::int64_t parse_int(std::string_view text, std::string_view whole) {
  std::int64_t value = 0;
  const char* first = text.data();
  const char* last = text.data() + text.size();
  if (!text.empty() && text.front() == '+') ++first;
  auto [ptr, ec] = std::from_chars(first, last, value);
  if (ec != std::errc{} || ptr != last || first == last) {
    throw std::invalid_argument("not a rational number: '" + std::string(whole) + "'");
  }
  return value;
}

}  // namespace

Rational::Rational(std::int64_t num, std::int64_t den) {
  *this = from_wide(num, den);
}

Rational Rational::from_wide(__int128 num, __int128 den) {
  if (den == 0) throw std::domain_error("rational with zero denominator");
  if (den < 0) {
    num = -num;
    den = -den;
  }
  const __int128 g = gcd128(num, den);
  if (g > 1) {
    num /= g;
    den /= g;
  }
  if (!fits(num) || !fits(den)) throw std::overflow_error("rational overflow");
  Rational r;
  r.num_ = static_cast<std::int64_t>(num);
  r.den_ = static_cast<std::int64_t>(den);
  return r;
}

Rational Rational::parse(std::string_view text) {
  const std::string_view whole = text;
  while (!text.empty() && (text.front() == ' ' || text.front() == '\t')) text.remove_prefix(1);
  while (!text.empty() && (text.back() == ' ' || text.back() == '\t')) text.remove_suffix(1);
  if (auto slash = text.find('/'); slash != std::string_view::npos) {
    return Rational(parse_int(text.substr(0, slash), whole), parse_int(text.substr(slash + 1), whole));
  }
  if (auto dot = text.find('.'); dot != std::string_view::npos) {
    std::string_view int_part = text.substr(0, dot);
    std::string_view frac_part = text.substr(dot + 1);
    if (frac_part.empty() || frac_part.size() > 18 || frac_part.find_first_not_of("0123456789") != std::string_view::npos) {
      throw std::invalid_argument("not a rational number: '" + std::string(whole) + "'");
    }
    bool negative = !int_part.empty() && int_part.front() == '-';
    std::int64_t scale = 1;
    for (std::size_t k = 0; k < frac_part.size(); ++k) scale *= 10;
    std::int64_t whole_units = 0;
    if (!int_part.empty() && int_part != "-" && int_part != "+") whole_units = parse_int(int_part, whole);
    const std::int64_t frac_units = parse_int(frac_part, whole);
    __int128 num = static_cast<__int128>(whole_units < 0 ? -whole_units : whole_units) * scale + frac_units;
    return from_wide(negative ? -num : num, scale);
  }
  return Rational(parse_int(text, whole));
}

std::string Rational::str() const {
  if (den_ == 1) return std::to_string(num_);
  return std::to_string(num_) + "/" + std::to_string(den_);
}

double Rational::to_double() const {
  return static_cast<double>(num_) / static_cast<double>(den_);
}

Rational& Rational::operator+=(const Rational& rhs) {
  *this = from_wide(static_cast<__int128>(num_) * rhs.den_ + static_cast<__int128>(rhs.num_) * den_,
                    static_cast<__int128>(den_) * rhs.den_);
  return *this;
}

Rational& Rational::operator-=(const Rational& rhs) {
  *this = from_wide(static_cast<__int128>(num_) * rhs.den_ - static_cast<__int128>(rhs.num_) * den_,
                    static_cast<__int128>(den_) * rhs.den_);
  return *this;
}

Rational& Rational::operator*=(const Rational& rhs) {
  *this = from_wide(static_cast<__int128>(num_) * rhs.num_, static_cast<__int128>(den_) * rhs.den_);
  return *this;
}

Rational& Rational::operator/=(const Rational& rhs) {
  if (rhs.num_ == 0) throw std::domain_error("rational division by zero");
  *this = from_wide(static_cast<__int128>(num_) * rhs.den_, static_cast<__int128>(den_) * rhs.num_);
  return *this;
}

Rational operator-(const Rational& value) {
  return Rational::from_wide(-static_cast<__int128>(value.num_), value.den_);
}

std::strong_ordering operator<=>(const Rational& lhs, const Rational& rhs) {
  // Denominators are positive, so cross-multiplication preserves order.
  const __int128 l = static_cast<__int128>(lhs.num_) * rhs.den_;
  const __int128 r = static_cast<__int128>(rhs.num_) * lhs.den_;
  return l <=> r;
}

std::ostream& operator<<(std::ostream& os, const Rational& value) {
  return os << value.str();
}

std::int64_t ceil(const Rational& value) {
  std::int64_t q = value.num() / value.den();
  if (value.num() % value.den() != 0 && value.num() > 0) ++q;
  return q;
}

}  // namespace idgame
