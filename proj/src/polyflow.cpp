#include "flowmap/polyflow.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

namespace flowmap {

namespace {

std::uint32_t degree_of(const Exponents& e) {
    return std::accumulate(e.begin(), e.end(), std::uint32_t{0});
}

// Scratch power table reused across evaluations on the same thread.
thread_local std::vector<double> power_scratch;

}  // namespace

bool GradedLex::operator()(const Exponents& a, const Exponents& b) const {
    const auto da = degree_of(a);
    const auto db = degree_of(b);
    if (da != db) {
        return da < db;
    }
    // Within a degree, higher powers of earlier variables come first.
    return std::lexicographical_compare(b.begin(), b.end(), a.begin(), a.end());
}

// --- Polynomial ------------------------------------------------------------

Polynomial::Polynomial(std::vector<std::string> variables) : variables_(std::move(variables)) {
    for (std::size_t i = 0; i < variables_.size(); ++i) {
        for (std::size_t j = 0; j < i; ++j) {
            if (variables_[i] == variables_[j]) {
                throw std::invalid_argument("duplicate variable '" + variables_[i] + "'");
            }
        }
    }
}

Polynomial Polynomial::constant(std::vector<std::string> variables, Coefficient c) {
    Polynomial p(std::move(variables));
    p.add_term(Exponents(p.variables_.size(), 0), c);
    return p;
}

Polynomial Polynomial::variable(std::vector<std::string> variables, std::string_view name) {
    Polynomial p(std::move(variables));
    const auto i = p.index_of(name);
    if (i == npos) {
        throw VariableBindingError("unknown variable '" + std::string(name) + "'");
    }
    Exponents e(p.variables_.size(), 0);
    e[i] = 1;
    p.add_term(e, Coefficient(1));
    return p;
}

Polynomial Polynomial::from_monomials(std::vector<std::string> variables,
                                      const std::vector<Monomial>& monomials) {
    Polynomial p(std::move(variables));
    for (const auto& m : monomials) {
        Exponents e(p.variables_.size(), 0);
        for (const auto& [name, power] : m.exponents) {
            const auto i = p.index_of(name);
            if (i == npos) {
                throw VariableBindingError("unknown variable '" + name + "'");
            }
            e[i] += power;
        }
        p.add_term(e, m.coefficient);
    }
    return p;
}

bool Polynomial::is_exact() const {
    return std::all_of(terms_.begin(), terms_.end(),
                       [](const auto& t) { return t.second.is_exact(); });
}

std::size_t Polynomial::index_of(std::string_view name) const {
    for (std::size_t i = 0; i < variables_.size(); ++i) {
        if (variables_[i] == name) {
            return i;
        }
    }
    return npos;
}

void Polynomial::add_term(const Exponents& e, const Coefficient& c) {
    if (e.size() != variables_.size()) {
        throw std::invalid_argument("exponent vector does not match variable count");
    }
    if (c.is_zero()) {
        return;
    }
    auto [it, inserted] = terms_.try_emplace(e, c);
    if (!inserted) {
        it->second += c;
        if (it->second.is_zero()) {
            terms_.erase(it);
        }
    }
}

std::uint32_t Polynomial::total_degree() const {
    return terms_.empty() ? 0 : degree_of(terms_.rbegin()->first);
}

std::uint32_t Polynomial::degree_in(std::size_t var) const {
    std::uint32_t d = 0;
    for (const auto& [e, c] : terms_) {
        d = std::max(d, e.at(var));
    }
    return d;
}

Coefficient Polynomial::coefficient(const Exponents& e) const {
    auto it = terms_.find(e);
    return it == terms_.end() ? Coefficient(0) : it->second;
}

std::vector<Monomial> Polynomial::monomials() const {
    std::vector<Monomial> out;
    out.reserve(terms_.size());
    for (const auto& [e, c] : terms_) {
        Monomial m{c, {}};
        for (std::size_t i = 0; i < e.size(); ++i) {
            if (e[i] != 0) {
                m.exponents.emplace(variables_[i], e[i]);
            }
        }
        out.push_back(std::move(m));
    }
    return out;
}

double Polynomial::eval(std::span<const double> values) const {
    if (values.size() != variables_.size()) {
        throw VariableBindingError("expected " + std::to_string(variables_.size()) +
                                   " values, got " + std::to_string(values.size()));
    }
    double sum = 0.0;
    for (const auto& [e, c] : terms_) {
        double term = c.to_double();
        for (std::size_t i = 0; i < e.size(); ++i) {
            for (std::uint32_t k = 0; k < e[i]; ++k) {
                term *= values[i];
            }
        }
        sum += term;
    }
    return sum;
}

Rational Polynomial::eval_exact(std::span<const Rational> values) const {
    if (values.size() != variables_.size()) {
        throw VariableBindingError("expected " + std::to_string(variables_.size()) + " values");
    }
    Rational sum = 0;
    for (const auto& [e, c] : terms_) {
        Rational term = c.exact();
        for (std::size_t i = 0; i < e.size(); ++i) {
            for (std::uint32_t k = 0; k < e[i]; ++k) {
                term *= values[i];
            }
        }
        sum += term;
    }
    return sum;
}

Polynomial Polynomial::derivative(std::size_t var) const {
    if (var >= variables_.size()) {
        throw std::out_of_range("derivative variable index out of range");
    }
    Polynomial out(variables_);
    for (const auto& [e, c] : terms_) {
        if (e[var] == 0) {
            continue;
        }
        Exponents d = e;
        d[var] -= 1;
        out.add_term(d, c * Coefficient(static_cast<long long>(e[var])));
    }
    return out;
}

Polynomial Polynomial::truncated(std::uint32_t max_total_degree, TruncationMode mode) const {
    Polynomial out(variables_);
    for (const auto& [e, c] : terms_) {
        if (degree_of(e) <= max_total_degree) {
            out.add_term(e, c);
            continue;
        }
        if (mode == TruncationMode::drop || c.is_negative()) {
            continue;
        }
        // On [0,1]^n a monomial is bounded by any monomial dividing it.
        Exponents divisor = e;
        std::uint32_t excess = degree_of(e) - max_total_degree;
        for (std::size_t i = divisor.size(); i-- > 0 && excess > 0;) {
            const auto take = std::min(divisor[i], excess);
            divisor[i] -= take;
            excess -= take;
        }
        out.add_term(divisor, c);
    }
    return out;
}

Polynomial Polynomial::substitute(std::span<const Polynomial> replacements,
                                  std::size_t term_cap) const {
    if (replacements.size() != variables_.size()) {
        throw VariableBindingError("substitution needs one replacement per variable");
    }
    std::vector<std::string> target_vars;
    if (!replacements.empty()) {
        target_vars = replacements[0].variables();
        for (const auto& r : replacements) {
            if (r.variables() != target_vars) {
                throw VariableBindingError("replacements must share a variable list");
            }
        }
    }
    // powers[i][k] = replacements[i]^k, built lazily.
    std::vector<std::vector<Polynomial>> powers(variables_.size());
    auto power_of = [&](std::size_t i, std::uint32_t k) -> const Polynomial& {
        auto& cache = powers[i];
        if (cache.empty()) {
            cache.push_back(Polynomial::constant(target_vars, Coefficient(1)));
        }
        while (cache.size() <= k) {
            cache.push_back(multiply(cache.back(), replacements[i], term_cap));
        }
        return cache[k];
    };

    Polynomial out(target_vars);
    for (const auto& [e, c] : terms_) {
        Polynomial term = Polynomial::constant(target_vars, c);
        for (std::size_t i = 0; i < e.size(); ++i) {
            if (e[i] != 0) {
                term = multiply(term, power_of(i, e[i]), term_cap);
            }
        }
        out += term;
        if (out.size() > term_cap) {
            throw CompositionOverflow("composition exceeded " + std::to_string(term_cap) +
                                      " terms");
        }
    }
    return out;
}

Polynomial Polynomial::reindexed(std::vector<std::string> variables) const {
    Polynomial out(std::move(variables));
    std::vector<std::size_t> where(variables_.size());
    for (std::size_t i = 0; i < variables_.size(); ++i) {
        where[i] = out.index_of(variables_[i]);
        if (where[i] == npos && degree_in(i) > 0) {
            throw VariableBindingError("variable '" + variables_[i] +
                                       "' is not in the target variable list");
        }
    }
    for (const auto& [e, c] : terms_) {
        Exponents mapped(out.variables_.size(), 0);
        for (std::size_t i = 0; i < e.size(); ++i) {
            if (e[i] != 0) {
                mapped[where[i]] = e[i];
            }
        }
        out.add_term(mapped, c);
    }
    return out;
}

Polynomial Polynomial::pow(unsigned exponent, std::size_t term_cap) const {
    Polynomial result = Polynomial::constant(variables_, Coefficient(1));
    Polynomial base = *this;
    while (exponent > 0) {
        if (exponent & 1U) {
            result = multiply(result, base, term_cap);
        }
        exponent >>= 1U;
        if (exponent > 0) {
            base = multiply(base, base, term_cap);
        }
    }
    return result;
}

Polynomial Polynomial::operator-() const {
    Polynomial out(variables_);
    for (const auto& [e, c] : terms_) {
        out.terms_.emplace(e, -c);
    }
    return out;
}

void Polynomial::require_same_variables(const Polynomial& o) const {
    if (variables_ != o.variables_) {
        throw VariableBindingError("polynomials are over different variable lists");
    }
}

Polynomial& Polynomial::operator+=(const Polynomial& o) {
    require_same_variables(o);
    for (const auto& [e, c] : o.terms_) {
        add_term(e, c);
    }
    return *this;
}

Polynomial& Polynomial::operator-=(const Polynomial& o) {
    require_same_variables(o);
    for (const auto& [e, c] : o.terms_) {
        add_term(e, -c);
    }
    return *this;
}

Polynomial& Polynomial::operator*=(const Coefficient& c) {
    if (c.is_zero()) {
        terms_.clear();
        return *this;
    }
    for (auto& [e, coeff] : terms_) {
        coeff *= c;
    }
    return *this;
}

Polynomial Polynomial::multiply(const Polynomial& a, const Polynomial& b, std::size_t term_cap) {
    a.require_same_variables(b);
    Polynomial out(a.variables_);
    const std::size_t n = a.variables_.size();
    Exponents e(n);
    for (const auto& [ea, ca] : a.terms_) {
        for (const auto& [eb, cb] : b.terms_) {
            for (std::size_t i = 0; i < n; ++i) {
                e[i] = ea[i] + eb[i];
            }
            out.add_term(e, ca * cb);
        }
        if (out.size() > term_cap) {
            throw CompositionOverflow("product exceeded " + std::to_string(term_cap) + " terms");
        }
    }
    return out;
}

Polynomial operator*(const Polynomial& a, const Polynomial& b) {
    return Polynomial::multiply(a, b);
}

bool operator==(const Polynomial& a, const Polynomial& b) {
    if (a.variables_ == b.variables_) {
        if (a.terms_.size() != b.terms_.size()) {
            return false;
        }
        auto ib = b.terms_.begin();
        for (const auto& [e, c] : a.terms_) {
            if (e != ib->first || !(c == ib->second)) {
                return false;
            }
            ++ib;
        }
        return true;
    }
    // Compare over the union of both variable lists.
    std::vector<std::string> joint = a.variables_;
    for (const auto& v : b.variables_) {
        if (std::find(joint.begin(), joint.end(), v) == joint.end()) {
            joint.push_back(v);
        }
    }
    return a.reindexed(joint) == b.reindexed(joint);
}

std::string Polynomial::to_string() const {
    if (terms_.empty()) {
        return "0";
    }
    std::ostringstream os;
    bool first = true;
    for (const auto& [e, c] : terms_) {
        std::string coeff = c.to_string();
        const bool negative = !coeff.empty() && coeff[0] == '-';
        if (negative) {
            coeff.erase(0, 1);
        }
        if (first) {
            os << (negative ? "-" : "");
        } else {
            os << (negative ? " - " : " + ");
        }
        first = false;
        bool wrote = false;
        if (coeff != "1" || degree_of(e) == 0) {
            os << coeff;
            wrote = true;
        }
        for (std::size_t i = 0; i < e.size(); ++i) {
            if (e[i] == 0) {
                continue;
            }
            os << (wrote ? "*" : "") << variables_[i];
            if (e[i] > 1) {
                os << '^' << e[i];
            }
            wrote = true;
        }
    }
    return os.str();
}

// --- FailureVector ---------------------------------------------------------

FailureVector::FailureVector(std::vector<std::string> names, std::vector<double> values)
    : names_(std::move(names)), values_(std::move(values)) {
    if (names_.size() != values_.size()) {
        throw std::invalid_argument("failure vector names and values differ in length");
    }
    for (std::size_t i = 0; i < values_.size(); ++i) {
        if (!std::isfinite(values_[i]) || values_[i] < 0.0) {
            throw std::invalid_argument("failure probability for '" + names_[i] +
                                        "' must be finite and non-negative");
        }
    }
}

bool FailureVector::contains(std::string_view name) const {
    return std::find(names_.begin(), names_.end(), name) != names_.end();
}

double FailureVector::at(std::string_view name) const {
    for (std::size_t i = 0; i < names_.size(); ++i) {
        if (names_[i] == name) {
            return values_[i];
        }
    }
    throw VariableBindingError("no value bound for '" + std::string(name) + "'");
}

bool FailureVector::is_probability() const {
    return std::all_of(values_.begin(), values_.end(),
                       [](double v) { return v >= 0.0 && v <= 1.0; });
}

std::vector<double> FailureVector::aligned(std::span<const std::string> order) const {
    std::vector<double> out;
    out.reserve(order.size());
    for (const auto& name : order) {
        out.push_back(at(name));
    }
    return out;
}

std::string FailureVector::to_string() const {
    std::ostringstream os;
    os.precision(17);
    os << '(';
    for (std::size_t i = 0; i < names_.size(); ++i) {
        os << (i ? ", " : "") << names_[i] << '=' << values_[i];
    }
    os << ')';
    return os.str();
}

// --- FlowMap ---------------------------------------------------------------

FlowMap::FlowMap(std::vector<std::string> variables, std::vector<Polynomial> components)
    : variables_(std::move(variables)) {
    if (components.size() != variables_.size()) {
        throw std::invalid_argument("flow map needs one component per variable");
    }
    Polynomial probe(variables_);  // validates uniqueness
    components_.reserve(components.size());
    for (auto& c : components) {
        components_.push_back(c.variables() == variables_ ? std::move(c)
                                                          : c.reindexed(variables_));
    }
    compile();
}

FlowMap FlowMap::identity(std::vector<std::string> variables) {
    std::vector<Polynomial> comps;
    for (const auto& v : variables) {
        comps.push_back(Polynomial::variable(variables, v));
    }
    return FlowMap(std::move(variables), std::move(comps));
}

const Polynomial& FlowMap::component(std::string_view name) const {
    return components_.at(index_of(name));
}

std::size_t FlowMap::index_of(std::string_view name) const {
    for (std::size_t i = 0; i < variables_.size(); ++i) {
        if (variables_[i] == name) {
            return i;
        }
    }
    throw VariableBindingError("flow map has no location '" + std::string(name) + "'");
}

bool FlowMap::is_exact() const {
    return std::all_of(components_.begin(), components_.end(),
                       [](const Polynomial& p) { return p.is_exact(); });
}

std::size_t FlowMap::term_count() const {
    std::size_t n = 0;
    for (const auto& c : components_) {
        n += c.size();
    }
    return n;
}

void FlowMap::compile() {
    const std::size_t n = variables_.size();
    compiled_.max_degree.assign(n, 0);
    for (const auto& c : components_) {
        for (std::size_t i = 0; i < n; ++i) {
            compiled_.max_degree[i] = std::max(compiled_.max_degree[i], c.degree_in(i));
        }
    }
    compiled_.power_offset.assign(n, 0);
    std::size_t offset = 0;
    for (std::size_t i = 0; i < n; ++i) {
        compiled_.power_offset[i] = offset;
        offset += compiled_.max_degree[i] + 1;
    }
    compiled_.table_size = offset;
    compiled_.components.clear();
    for (const auto& c : components_) {
        std::vector<Compiled::Term> terms;
        terms.reserve(c.size());
        for (const auto& [e, coeff] : c.terms()) {
            Compiled::Term t{coeff.to_double(), {}};
            for (std::size_t i = 0; i < n; ++i) {
                if (e[i] != 0) {
                    t.factors.emplace_back(static_cast<std::uint32_t>(i), e[i]);
                }
            }
            terms.push_back(std::move(t));
        }
        compiled_.components.push_back(std::move(terms));
    }
}

void FlowMap::apply(std::span<const double> in, std::span<double> out) const {
    const std::size_t n = variables_.size();
    if (in.size() != n || out.size() != n) {
        throw VariableBindingError("flow map expects " + std::to_string(n) + " values");
    }
    auto& table = power_scratch;
    table.resize(compiled_.table_size);
    for (std::size_t i = 0; i < n; ++i) {
        double* row = table.data() + compiled_.power_offset[i];
        row[0] = 1.0;
        for (std::uint32_t k = 1; k <= compiled_.max_degree[i]; ++k) {
            row[k] = row[k - 1] * in[i];
        }
    }
    // `in` and `out` may alias; the power table holds everything we need.
    for (std::size_t c = 0; c < n; ++c) {
        double sum = 0.0;
        for (const auto& t : compiled_.components[c]) {
            double v = t.coefficient;
            for (const auto& [var, power] : t.factors) {
                v *= table[compiled_.power_offset[var] + power];
            }
            sum += v;
        }
        out[c] = sum;
    }
}

void FlowMap::step(std::span<const double> in, std::span<double> out) const {
    apply(in, out);
    for (std::size_t i = 0; i < out.size(); ++i) {
        if (out[i] < 0.0) {
            if (out[i] > -kNegativeClampTolerance) {
                out[i] = 0.0;
            } else {
                std::ostringstream os;
                os.precision(17);
                os << "component '" << variables_[i] << "' evaluated to " << out[i];
                throw NegativeProbabilityError(os.str());
            }
        }
    }
}

std::vector<std::vector<Polynomial>> FlowMap::jacobian_polynomials() const {
    std::vector<std::vector<Polynomial>> out(components_.size());
    for (std::size_t i = 0; i < components_.size(); ++i) {
        for (std::size_t j = 0; j < variables_.size(); ++j) {
            out[i].push_back(components_[i].derivative(j));
        }
    }
    return out;
}

bool operator==(const FlowMap& a, const FlowMap& b) {
    if (a.variables_.size() != b.variables_.size()) {
        return false;
    }
    for (std::size_t i = 0; i < a.variables_.size(); ++i) {
        const auto& name = a.variables_[i];
        if (std::find(b.variables_.begin(), b.variables_.end(), name) == b.variables_.end()) {
            return false;
        }
        if (!(a.components_[i] == b.component(name))) {
            return false;
        }
    }
    return true;
}

// --- free operations -------------------------------------------------------

double eval(const Polynomial& p, const FailureVector& x) {
    const auto values = x.aligned(p.variables());
    return p.eval(values);
}

FailureVector eval_map(const FlowMap& f, const FailureVector& x) {
    auto values = x.aligned(f.variables());
    f.step(values, values);
    return FailureVector(f.variables(), std::move(values));
}

FlowMap compose(const FlowMap& outer, const FlowMap& inner, std::size_t term_cap) {
    auto sorted = [](std::vector<std::string> v) {
        std::sort(v.begin(), v.end());
        return v;
    };
    if (sorted(outer.variables()) != sorted(inner.variables())) {
        throw VariableBindingError("composed flow maps must share their variable set");
    }
    std::vector<Polynomial> replacements;
    for (const auto& name : outer.variables()) {
        replacements.push_back(inner.component(name).reindexed(inner.variables()));
    }
    std::vector<Polynomial> comps;
    for (const auto& c : outer.components()) {
        comps.push_back(c.substitute(replacements, term_cap));
    }
    return FlowMap(outer.variables(), std::move(comps));
}

FailureVector iterate(const FlowMap& f, const FailureVector& x, int levels) {
    if (levels < 0) {
        throw std::invalid_argument("iteration level must be non-negative");
    }
    if (levels == 0) {
        return x;
    }
    auto values = x.aligned(f.variables());
    for (int l = 0; l < levels; ++l) {
        f.step(values, values);
    }
    return FailureVector(f.variables(), std::move(values));
}

Matrix jacobian(const FlowMap& f, const FailureVector& x) {
    const auto values = x.aligned(f.variables());
    const auto polys = f.jacobian_polynomials();
    Matrix m(polys.size());
    for (std::size_t i = 0; i < polys.size(); ++i) {
        for (const auto& p : polys[i]) {
            m[i].push_back(p.eval(values));
        }
    }
    return m;
}

FlowMap truncate(const FlowMap& f, std::uint32_t max_total_degree, TruncationMode mode) {
    std::vector<Polynomial> comps;
    for (const auto& c : f.components()) {
        comps.push_back(c.truncated(max_total_degree, mode));
    }
    return FlowMap(f.variables(), std::move(comps));
}

}  // namespace flowmap
