#include "flowmap/coefficient.hpp"

#include <charconv>
#include <cmath>
#include <stdexcept>
#include <system_error>

namespace flowmap {

namespace {

using boost::multiprecision::cpp_int;

bool is_integer_literal(std::string_view s) {
    if (s.empty()) {
        return false;
    }
    std::size_t i = (s[0] == '-' || s[0] == '+') ? 1 : 0;
    if (i == s.size()) {
        return false;
    }
    for (; i < s.size(); ++i) {
        if (s[i] < '0' || s[i] > '9') {
            return false;
        }
    }
    return true;
}

cpp_int parse_integer(std::string_view s) {
    if (!is_integer_literal(s)) {
        throw std::invalid_argument("malformed integer '" + std::string(s) + "'");
    }
    if (s[0] == '+') {
        s.remove_prefix(1);
    }
    return cpp_int(std::string(s));
}

}  // namespace

Coefficient Coefficient::parse(std::string_view text) {
    while (!text.empty() && text.front() == ' ') text.remove_prefix(1);
    while (!text.empty() && text.back() == ' ') text.remove_suffix(1);
    if (text.empty()) {
        throw std::invalid_argument("empty coefficient");
    }
    if (auto slash = text.find('/'); slash != std::string_view::npos) {
        cpp_int num = parse_integer(text.substr(0, slash));
        cpp_int den = parse_integer(text.substr(slash + 1));
        if (den == 0) {
            throw std::invalid_argument("zero denominator in '" + std::string(text) + "'");
        }
        return Coefficient(Rational(num, den));
    }
    if (is_integer_literal(text)) {
        return Coefficient(Rational(parse_integer(text)));
    }
    double v = 0.0;
    const char* first = text.data();
    const char* last = first + text.size();
    if (*first == '+') {
        ++first;
    }
    auto [ptr, ec] = std::from_chars(first, last, v);
    if (ec != std::errc() || ptr != last || !std::isfinite(v)) {
        throw std::invalid_argument("malformed coefficient '" + std::string(text) + "'");
    }
    return Coefficient::real(v);
}

bool Coefficient::is_zero() const {
    if (is_exact()) {
        return std::get<Rational>(value_) == 0;
    }
    return std::get<double>(value_) == 0.0;
}

bool Coefficient::is_negative() const {
    if (is_exact()) {
        return std::get<Rational>(value_) < 0;
    }
    return std::get<double>(value_) < 0.0;
}

const Rational& Coefficient::exact() const {
    if (!is_exact()) {
        throw std::logic_error("coefficient is not exact");
    }
    return std::get<Rational>(value_);
}

double Coefficient::to_double() const {
    if (is_exact()) {
        return std::get<Rational>(value_).convert_to<double>();
    }
    return std::get<double>(value_);
}

std::string Coefficient::to_string() const {
    if (is_exact()) {
        return std::get<Rational>(value_).str();
    }
    char buf[64];
    auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), std::get<double>(value_));
    std::string out(buf, ptr);
    if (out.find_first_of(".eE") == std::string::npos) {
        out += ".0";
    }
    return out;
}

Coefficient Coefficient::operator-() const {
    if (is_exact()) {
        return Coefficient(Rational(-std::get<Rational>(value_)));
    }
    return real(-std::get<double>(value_));
}

Coefficient& Coefficient::operator+=(const Coefficient& o) {
    if (is_exact() && o.is_exact()) {
        std::get<Rational>(value_) += std::get<Rational>(o.value_);
    } else {
        value_ = to_double() + o.to_double();
    }
    return *this;
}

Coefficient& Coefficient::operator-=(const Coefficient& o) {
    if (is_exact() && o.is_exact()) {
        std::get<Rational>(value_) -= std::get<Rational>(o.value_);
    } else {
        value_ = to_double() - o.to_double();
    }
    return *this;
}

Coefficient& Coefficient::operator*=(const Coefficient& o) {
    if (is_exact() && o.is_exact()) {
        std::get<Rational>(value_) *= std::get<Rational>(o.value_);
    } else {
        value_ = to_double() * o.to_double();
    }
    return *this;
}

bool operator==(const Coefficient& a, const Coefficient& b) {
    if (a.is_exact() && b.is_exact()) {
        return std::get<Rational>(a.value_) == std::get<Rational>(b.value_);
    }
    const double x = a.to_double();
    const double y = b.to_double();
    if (x == y) {
        return true;
    }
    return std::abs(x - y) <= 1e-12 * std::max(std::abs(x), std::abs(y));
}

bool Coefficient::identical(const Coefficient& o) const {
    if (is_exact() != o.is_exact()) {
        return false;
    }
    if (is_exact()) {
        return std::get<Rational>(value_) == std::get<Rational>(o.value_);
    }
    return std::get<double>(value_) == std::get<double>(o.value_);
}

}  // namespace flowmap
