#pragma once

#include <boost/multiprecision/cpp_int.hpp>

#include <cstdint>
#include <string>

namespace peel {

using BigInt = boost::multiprecision::cpp_int;
using Rational = boost::multiprecision::cpp_rational;

BigInt factorial(std::int64_t n);
BigInt binomial(std::int64_t n, std::int64_t k);

// Integer power, negative exponents allowed for nonzero bases.
Rational power(const Rational& base, std::int64_t exponent);

// Exact square root if the argument is a perfect square of a rational.
bool exact_sqrt(const Rational& x, Rational& root);

std::string fraction_string(const Rational& x);
long double to_long_double(const Rational& x);
double to_double(const Rational& x);

}  // namespace peel
