#pragma once

#include <boost/multiprecision/cpp_int.hpp>
#include <optional>
#include <string>

namespace csw {

using Int = boost::multiprecision::cpp_int;
using Rat = boost::multiprecision::cpp_rational;

// Parse "12", "-0.375", "+1.5", or "2/3" into an exact rational.
// Returns nullopt on anything else (no exponents, no whitespace).
std::optional<Rat> parse_rational(const std::string& s);

// Canonical string form: exact decimal without trailing zeros when the
// denominator is of the form 2^a*5^b, otherwise "p/q" in lowest terms.
// parse_rational(format_rational(r)) == r for all r.
std::string format_rational(const Rat& r);

double to_double(const Rat& r);

Rat rat(long num, long den = 1);

// Largest multiple of 10^-digits strictly below x; used to pick an exact
// rational step size under an irrational bound.
Rat rational_below(double x, int digits = 12);

}  // namespace csw
