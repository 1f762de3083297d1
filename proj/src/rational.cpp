#include "peel/rational.hpp"

#include <boost/multiprecision/cpp_bin_float.hpp>

#include <stdexcept>

namespace peel {

BigInt factorial(std::int64_t n)
{
    if (n < 0)
        throw std::domain_error("factorial of a negative integer");
    BigInt r = 1;
    for (std::int64_t i = 2; i <= n; ++i)
        r *= i;
    return r;
}

BigInt binomial(std::int64_t n, std::int64_t k)
{
    if (k < 0 || k > n)
        return 0;
    k = std::min(k, n - k);
    BigInt r = 1;
    for (std::int64_t i = 1; i <= k; ++i) {
        r *= n - k + i;
        r /= i;
    }
    return r;
}

Rational power(const Rational& base, std::int64_t exponent)
{
    if (exponent < 0) {
        if (base == 0)
            throw std::domain_error("zero to a negative power");
        return power(1 / base, -exponent);
    }
    Rational result = 1;
    Rational b = base;
    while (exponent > 0) {
        if (exponent & 1)
            result *= b;
        b *= b;
        exponent >>= 1;
    }
    return result;
}

namespace {
bool integer_sqrt(const BigInt& n, BigInt& root)
{
    if (n < 0)
        return false;
    root = boost::multiprecision::sqrt(n);
    return root * root == n;
}
}  // namespace

bool exact_sqrt(const Rational& x, Rational& root)
{
    BigInt num, den;
    if (!integer_sqrt(numerator(x), num) || !integer_sqrt(denominator(x), den))
        return false;
    root = Rational(num, den);
    return true;
}

std::string fraction_string(const Rational& x)
{
    if (denominator(x) == 1)
        return numerator(x).str();
    return numerator(x).str() + "/" + denominator(x).str();
}

long double to_long_double(const Rational& x)
{
    using Wide = boost::multiprecision::cpp_bin_float_double_extended;
    Wide num(numerator(x));
    Wide den(denominator(x));
    return static_cast<long double>(num / den);
}

double to_double(const Rational& x)
{
    return static_cast<double>(to_long_double(x));
}

}  // namespace peel
