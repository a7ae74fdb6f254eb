#include "csw/rational.hpp"

#include <cctype>
#include <cmath>
#include <stdexcept>

namespace csw {

namespace {

bool all_digits(const std::string& s) {
  if (s.empty()) return false;
  for (char c : s)
    if (!std::isdigit(static_cast<unsigned char>(c))) return false;
  return true;
}

Int pow10(size_t k) {
  Int p = 1;
  for (size_t i = 0; i < k; ++i) p *= 10;
  return p;
}

// cpp_int's string constructor honours octal/hex prefixes, so "0625" would
// be read as octal.  Always interpret digit strings as decimal.
Int decimal(const std::string& s) {
  Int v = 0;
  for (char c : s) v = v * 10 + (c - '0');
  return v;
}

}  // namespace

std::optional<Rat> parse_rational(const std::string& s) {
  if (s.empty()) return std::nullopt;
  size_t pos = 0;
  bool neg = false;
  if (s[0] == '+' || s[0] == '-') {
    neg = (s[0] == '-');
    pos = 1;
  }
  std::string body = s.substr(pos);
  if (body.empty()) return std::nullopt;

  auto slash = body.find('/');
  if (slash != std::string::npos) {
    std::string num = body.substr(0, slash);
    std::string den = body.substr(slash + 1);
    if (!all_digits(num) || !all_digits(den)) return std::nullopt;
    Int d = decimal(den);
    if (d == 0) return std::nullopt;
    Rat r(decimal(num), d);
    if (neg) r = -r;
    return r;
  }

  auto dot = body.find('.');
  if (dot == std::string::npos) {
    if (!all_digits(body)) return std::nullopt;
    Rat r{decimal(body)};
    if (neg) r = -r;
    return r;
  }
  std::string ip = body.substr(0, dot);
  std::string fp = body.substr(dot + 1);
  if (!all_digits(ip) || !all_digits(fp)) return std::nullopt;
  Int scale = pow10(fp.size());
  Rat r(decimal(ip) * scale + decimal(fp), scale);
  if (neg) r = -r;
  return r;
}

std::string format_rational(const Rat& r) {
  Int num = numerator(r);
  Int den = denominator(r);  // boost keeps this positive and coprime
  bool neg = num < 0;
  if (neg) num = -num;

  // Strip factors of 2 and 5 from the denominator.
  Int rest = den;
  size_t a = 0, b = 0;
  while (rest % 2 == 0) {
    rest /= 2;
    ++a;
  }
  while (rest % 5 == 0) {
    rest /= 5;
    ++b;
  }
  if (rest != 1) {
    std::string out = num.str() + "/" + den.str();
    return neg ? "-" + out : out;
  }

  size_t k = std::max(a, b);
  Int scaled = num * pow10(k) / den;  // exact by construction
  std::string digits = scaled.str();
  std::string out;
  if (k == 0) {
    out = digits;
  } else {
    if (digits.size() <= k) digits.insert(0, k + 1 - digits.size(), '0');
    std::string ip = digits.substr(0, digits.size() - k);
    std::string fp = digits.substr(digits.size() - k);
    while (!fp.empty() && fp.back() == '0') fp.pop_back();
    out = fp.empty() ? ip : ip + "." + fp;
  }
  return neg && out != "0" ? "-" + out : out;
}

double to_double(const Rat& r) { return r.convert_to<double>(); }

Rat rat(long num, long den) {
  if (den == 0) throw std::invalid_argument("zero denominator");
  return Rat(Int(num), Int(den));
}

Rat rational_below(double x, int digits) {
  Int scale = pow10(static_cast<size_t>(digits));
  double scaled = x * to_double(Rat(scale));
  Int floor_scaled(static_cast<long long>(std::floor(scaled)));
  Rat r(floor_scaled, scale);
  while (!(r < Rat(x))) r -= Rat(1, scale);  // guard against rounding up
  return r;
}

}  // namespace csw
