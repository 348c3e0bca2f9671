#pragma once

#include <string>
#include <string_view>
#include <variant>

#include <boost/multiprecision/cpp_int.hpp>

namespace flowmap {

using Rational = boost::multiprecision::cpp_rational;

/// Polynomial coefficient: an exact rational when it came from counting,
/// a double when it was loaded from a decimal literal or fitted.
///
/// Arithmetic stays exact while both operands are exact; mixing in a real
/// coefficient makes the result real.
class Coefficient {
public:
    Coefficient() : value_(Rational(0)) {}
    Coefficient(int v) : value_(Rational(v)) {}
    Coefficient(long long v) : value_(Rational(v)) {}
    Coefficient(Rational v) : value_(std::move(v)) {}

    static Coefficient real(double v) {
        Coefficient c;
        c.value_ = v;
        return c;
    }

    /// "3", "-12", "5/7" parse exactly; anything with '.', 'e' or 'E' parses
    /// as a double. Throws std::invalid_argument on malformed input.
    static Coefficient parse(std::string_view text);

    bool is_exact() const { return std::holds_alternative<Rational>(value_); }
    bool is_zero() const;
    bool is_negative() const;

    /// Throws std::logic_error when the coefficient is real.
    const Rational& exact() const;
    double to_double() const;

    /// Inverse of parse(): exact values print as "p" or "p/q", reals print
    /// in shortest round-trip form and always carry a '.' or exponent.
    std::string to_string() const;

    Coefficient operator-() const;
    Coefficient& operator+=(const Coefficient& o);
    Coefficient& operator-=(const Coefficient& o);
    Coefficient& operator*=(const Coefficient& o);

    friend Coefficient operator+(Coefficient a, const Coefficient& b) { return a += b; }
    friend Coefficient operator-(Coefficient a, const Coefficient& b) { return a -= b; }
    friend Coefficient operator*(Coefficient a, const Coefficient& b) { return a *= b; }

    /// Exact equality between rationals; 1e-12 relative agreement otherwise.
    friend bool operator==(const Coefficient& a, const Coefficient& b);

    /// Bitwise identity: same representation and same value.
    bool identical(const Coefficient& o) const;

private:
    std::variant<Rational, double> value_;
};

}  // namespace flowmap
