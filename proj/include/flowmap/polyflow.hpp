#pragma once

#include <cstddef>
#include <cstdint>
#include <map>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "flowmap/coefficient.hpp"

namespace flowmap {

/// A variable that a polynomial needs was not supplied.
struct VariableBindingError : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

/// Symbolic composition would exceed the configured term cap. Callers are
/// expected to fall back to numeric iteration.
struct CompositionOverflow : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// A flow map evaluated to a probability below -1e-15.
struct NegativeProbabilityError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Malformed flow-map document. `where()` names the offending field or the
/// line:column of a syntax error.
class ParseError : public std::invalid_argument {
public:
    ParseError(std::string where, const std::string& what)
        : std::invalid_argument(where + ": " + what), where_(std::move(where)) {}
    const std::string& where() const { return where_; }

private:
    std::string where_;
};

inline constexpr std::size_t kDefaultTermCap = 1'000'000;
inline constexpr double kNegativeClampTolerance = 1e-15;

/// Exponent vector aligned with a polynomial's variable list.
using Exponents = std::vector<std::uint32_t>;

/// Total degree first, then lexicographic.
struct GradedLex {
    bool operator()(const Exponents& a, const Exponents& b) const;
};

/// A single term keyed by variable name. Zero exponents are omitted.
struct Monomial {
    Coefficient coefficient;
    std::map<std::string, std::uint32_t> exponents;
};

enum class TruncationMode {
    drop,                  ///< discard every term above the degree cap
    round_up_coefficients  ///< fold positive high-order terms into a degree-cap divisor
};

/// Sparse multivariate polynomial over an ordered list of named variables.
///
/// Terms are unique per exponent vector and never carry a zero coefficient.
class Polynomial {
public:
    using TermMap = std::map<Exponents, Coefficient, GradedLex>;

    Polynomial() = default;
    explicit Polynomial(std::vector<std::string> variables);

    static Polynomial constant(std::vector<std::string> variables, Coefficient c);
    static Polynomial variable(std::vector<std::string> variables, std::string_view name);
    static Polynomial from_monomials(std::vector<std::string> variables,
                                     const std::vector<Monomial>& monomials);

    const std::vector<std::string>& variables() const { return variables_; }
    const TermMap& terms() const { return terms_; }
    std::size_t size() const { return terms_.size(); }
    bool is_zero() const { return terms_.empty(); }
    bool is_exact() const;

    /// Index of `name` in variables(), or npos.
    std::size_t index_of(std::string_view name) const;
    static constexpr std::size_t npos = static_cast<std::size_t>(-1);

    /// Adds c * x^e, merging with an existing term.
    void add_term(const Exponents& e, const Coefficient& c);

    std::uint32_t total_degree() const;
    std::uint32_t degree_in(std::size_t var) const;
    bool depends_on(std::size_t var) const { return degree_in(var) > 0; }
    Coefficient coefficient(const Exponents& e) const;

    std::vector<Monomial> monomials() const;

    /// Term-sum evaluation; `values` is aligned with variables().
    double eval(std::span<const double> values) const;
    Rational eval_exact(std::span<const Rational> values) const;

    Polynomial derivative(std::size_t var) const;
    Polynomial truncated(std::uint32_t max_total_degree,
                         TruncationMode mode = TruncationMode::drop) const;

    /// Replaces variable i by replacements[i]. All replacements must share a
    /// variable list, which becomes the result's.
    Polynomial substitute(std::span<const Polynomial> replacements,
                          std::size_t term_cap = kDefaultTermCap) const;

    /// Same polynomial over a different variable list. Throws
    /// VariableBindingError if a variable in use is absent from `variables`.
    Polynomial reindexed(std::vector<std::string> variables) const;

    Polynomial pow(unsigned exponent, std::size_t term_cap = kDefaultTermCap) const;

    Polynomial operator-() const;
    Polynomial& operator+=(const Polynomial& o);
    Polynomial& operator-=(const Polynomial& o);
    Polynomial& operator*=(const Coefficient& c);
    friend Polynomial operator+(Polynomial a, const Polynomial& b) { return a += b; }
    friend Polynomial operator-(Polynomial a, const Polynomial& b) { return a -= b; }
    friend Polynomial operator*(Polynomial a, const Coefficient& c) { return a *= c; }
    friend Polynomial operator*(const Polynomial& a, const Polynomial& b);

    static Polynomial multiply(const Polynomial& a, const Polynomial& b,
                               std::size_t term_cap = kDefaultTermCap);

    /// Name-based equality; variable order does not matter. Coefficients
    /// compare as Coefficient::operator== does.
    friend bool operator==(const Polynomial& a, const Polynomial& b);

    /// Human-readable form, e.g. "3*v^2 + 16*v^3".
    std::string to_string() const;

private:
    void require_same_variables(const Polynomial& o) const;

    std::vector<std::string> variables_;
    TermMap terms_;
};

/// Failure probabilities keyed by location name.
///
/// Entries must be finite and non-negative. Values above one are allowed so
/// that bounding maps (e.g. low-order truncations) can be iterated; use
/// is_probability() to check the [0,1] invariant.
class FailureVector {
public:
    FailureVector() = default;
    FailureVector(std::vector<std::string> names, std::vector<double> values);

    const std::vector<std::string>& names() const { return names_; }
    const std::vector<double>& values() const { return values_; }
    std::size_t size() const { return values_.size(); }

    bool contains(std::string_view name) const;
    double at(std::string_view name) const;
    bool is_probability() const;

    /// Values reordered to `order`; throws VariableBindingError on a miss.
    std::vector<double> aligned(std::span<const std::string> order) const;

    std::string to_string() const;
    friend bool operator==(const FailureVector&, const FailureVector&) = default;

private:
    std::vector<std::string> names_;
    std::vector<double> values_;
};

using Matrix = std::vector<std::vector<double>>;

/// Vector of polynomials, one per location type, all over the same ordered
/// variable list. Immutable after construction.
class FlowMap {
public:
    FlowMap() = default;
    FlowMap(std::vector<std::string> variables, std::vector<Polynomial> components);

    static FlowMap identity(std::vector<std::string> variables);

    const std::vector<std::string>& variables() const { return variables_; }
    std::size_t dimension() const { return variables_.size(); }
    const std::vector<Polynomial>& components() const { return components_; }
    const Polynomial& component(std::size_t i) const { return components_.at(i); }
    const Polynomial& component(std::string_view name) const;
    std::size_t index_of(std::string_view name) const;
    bool is_exact() const;
    std::size_t term_count() const;

    /// Raw numeric application in variable order, no clamping.
    void apply(std::span<const double> in, std::span<double> out) const;

    /// apply() followed by the negative round-off policy: values in
    /// (-1e-15, 0) become 0, anything lower throws NegativeProbabilityError.
    void step(std::span<const double> in, std::span<double> out) const;

    /// d(component i)/d(variable j), symbolically.
    std::vector<std::vector<Polynomial>> jacobian_polynomials() const;

    friend bool operator==(const FlowMap& a, const FlowMap& b);

private:
    struct Compiled {
        std::vector<std::uint32_t> max_degree;  // per variable
        std::vector<std::size_t> power_offset;  // into the power table
        std::size_t table_size = 0;
        struct Term {
            double coefficient;
            std::vector<std::pair<std::uint32_t, std::uint32_t>> factors;  // (var, exponent)
        };
        std::vector<std::vector<Term>> components;
    };
    void compile();

    std::vector<std::string> variables_;
    std::vector<Polynomial> components_;
    Compiled compiled_;
};

// Spec-level operations ---------------------------------------------------

double eval(const Polynomial& p, const FailureVector& x);
FailureVector eval_map(const FlowMap& f, const FailureVector& x);
FlowMap compose(const FlowMap& outer, const FlowMap& inner,
                std::size_t term_cap = kDefaultTermCap);
FailureVector iterate(const FlowMap& f, const FailureVector& x, int levels);
Matrix jacobian(const FlowMap& f, const FailureVector& x);
FlowMap truncate(const FlowMap& f, std::uint32_t max_total_degree,
                 TruncationMode mode = TruncationMode::drop);

/// JSON flow-map document:
/// {"variables":[...],"maps":{"w":[{"c":"6","e":{"v":1,"w":1}},...],...}}
FlowMap parse_flowmap(std::string_view text);
std::string serialize_flowmap(const FlowMap& f);

/// FNV-1a 64 as 16 hex digits.
std::string fnv1a_hex(std::string_view bytes);

/// fnv1a_hex of the serialized document.
std::string flowmap_hash(const FlowMap& f);

}  // namespace flowmap
