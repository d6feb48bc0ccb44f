#pragma once

#include <boost/multiprecision/gmp.hpp>

#include <string>
#include <string_view>

namespace prbox {

/// Exact arbitrary-precision rational. Expression templates are disabled so
/// that `auto` always yields a value.
using Rational = boost::multiprecision::number<boost::multiprecision::gmp_rational,
                                               boost::multiprecision::et_off>;
using Integer = boost::multiprecision::number<boost::multiprecision::gmp_int,
                                              boost::multiprecision::et_off>;

/// Canonical "num/den" form: fully reduced, positive denominator, always with
/// a slash ("4/1", "0/1").
std::string to_string(const Rational& r);

/// Accepts "num/den" or a bare integer. Throws ParseError on anything else or
/// on a zero denominator.
Rational parse_rational(std::string_view text);

inline Rational ratio(long num, long den) { return Rational(num) / Rational(den); }

} // namespace prbox
