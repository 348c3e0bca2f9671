#include "flowmap/tmr.hpp"

#include <array>
#include <sstream>

#include "flowmap/parallel.hpp"

namespace flowmap::tmr {

namespace {

const std::vector<std::string> kVars{"w", "v"};

bool majority(bool a, bool b, bool c) { return (a && b) || (a && c) || (b && c); }

std::vector<std::size_t> error_correct(Circuit& c, const std::vector<std::size_t>& block) {
    std::array<std::vector<std::size_t>, 3> copies;
    for (std::size_t i = 0; i < 3; ++i) {
        copies[i] = c.add(Kind::fanout, {block[i]}, false);
    }
    std::vector<std::size_t> out;
    for (std::size_t j = 0; j < 3; ++j) {
        out.push_back(c.add(Kind::voter, {copies[0][j], copies[1][j], copies[2][j]}, true)[0]);
    }
    return out;
}

// Sum of count * w^a (1-w)^(nw-a) v^b (1-v)^(nv-b) over the count table.
Polynomial expand(const std::vector<std::vector<unsigned long long>>& counts, std::size_t nw,
                  std::size_t nv) {
    const Polynomial one = Polynomial::constant(kVars, 1);
    const Polynomial w = Polynomial::variable(kVars, "w");
    const Polynomial v = Polynomial::variable(kVars, "v");
    Polynomial total(kVars);
    for (std::size_t a = 0; a <= nw; ++a) {
        for (std::size_t b = 0; b <= nv; ++b) {
            if (counts[a][b] == 0) {
                continue;
            }
            Polynomial term = w.pow(static_cast<unsigned>(a)) *
                              (one - w).pow(static_cast<unsigned>(nw - a)) *
                              v.pow(static_cast<unsigned>(b)) *
                              (one - v).pow(static_cast<unsigned>(nv - b));
            total += term * Coefficient(Rational(counts[a][b]));
        }
    }
    return total;
}

}  // namespace

std::string to_string(Kind k) {
    switch (k) {
        case Kind::wire:
            return "w";
        case Kind::voter:
            return "v";
        case Kind::fanout:
            break;
    }
    return "f";
}

Circuit::Circuit(Kind implements, std::size_t logical_inputs)
    : implements_(implements), logical_inputs_(logical_inputs) {
    for (std::size_t i = 0; i < 3 * logical_inputs; ++i) {
        inputs_.push_back(bits_++);
    }
}

std::vector<std::size_t> Circuit::fallible() const { return fallible_; }

std::vector<std::size_t> Circuit::add(Kind kind, std::vector<std::size_t> in, bool fallible) {
    const std::size_t arity = kind == Kind::voter ? 3 : 1;
    if (in.size() != arity) {
        throw std::invalid_argument("location '" + to_string(kind) + "' takes " +
                                    std::to_string(arity) + " input(s)");
    }
    if (kind == Kind::fanout && fallible) {
        throw std::invalid_argument("fanouts are noiseless");
    }
    for (auto b : in) {
        if (b >= bits_) {
            throw std::invalid_argument("location reads an undriven bit");
        }
    }
    Location loc{kind, std::move(in), {}, fallible};
    const std::size_t outs = kind == Kind::fanout ? 3 : 1;
    for (std::size_t k = 0; k < outs; ++k) {
        loc.out.push_back(bits_++);
    }
    if (fallible) {
        if (fallible_.size() >= 64) {
            throw EnumerationTooLarge("circuit has more than 64 fallible locations");
        }
        fallible_.push_back(locations_.size());
    }
    locations_.push_back(std::move(loc));
    return locations_.back().out;
}

std::vector<bool> Circuit::simulate(const std::vector<bool>& input_bits,
                                    unsigned long long failed) const {
    if (input_bits.size() != inputs_.size()) {
        throw std::invalid_argument("circuit input width mismatch");
    }
    std::vector<bool> bits(bits_, false);
    for (std::size_t i = 0; i < inputs_.size(); ++i) {
        bits[inputs_[i]] = input_bits[i];
    }
    std::size_t slot = 0;
    for (const auto& loc : locations_) {
        bool value = loc.kind == Kind::voter ? majority(bits[loc.in[0]], bits[loc.in[1]],
                                                        bits[loc.in[2]])
                                             : bits[loc.in[0]];
        if (loc.fallible) {
            if ((failed >> slot) & 1ULL) {
                value = !value;
            }
            ++slot;
        }
        for (auto o : loc.out) {
            bits[o] = value;
        }
    }
    std::vector<bool> out;
    for (auto o : outputs_) {
        out.push_back(bits[o]);
    }
    return out;
}

std::vector<bool> Circuit::ideal(const std::vector<bool>& logical) const {
    switch (implements_) {
        case Kind::wire:
            return {logical.at(0)};
        case Kind::voter:
            return {majority(logical.at(0), logical.at(1), logical.at(2))};
        case Kind::fanout:
            break;
    }
    return {logical.at(0), logical.at(0), logical.at(0)};
}

bool Circuit::fails(unsigned long long failed, InputSet inputs) const {
    const unsigned long long all_ones = (1ULL << logical_inputs_) - 1;
    for (unsigned long long x = 0; x <= all_ones; ++x) {
        if (inputs == InputSet::uniform && x != 0 && x != all_ones) {
            continue;
        }
        std::vector<bool> logical(logical_inputs_);
        std::vector<bool> encoded;
        for (std::size_t i = 0; i < logical_inputs_; ++i) {
            logical[i] = (x >> i) & 1ULL;
            encoded.insert(encoded.end(), 3, logical[i]);
        }
        const auto out = simulate(encoded, failed);
        const auto want = ideal(logical);
        if (out.size() != 3 * want.size()) {
            throw std::logic_error("circuit output width does not match its location");
        }
        for (std::size_t k = 0; k < want.size(); ++k) {
            if (majority(out[3 * k], out[3 * k + 1], out[3 * k + 2]) != want[k]) {
                return true;
            }
        }
    }
    return false;
}

bool Circuit::functional() const { return !fails(0, InputSet::all); }

std::string Circuit::netlist() const {
    auto ports = [](const std::vector<std::size_t>& p) {
        std::string s;
        for (std::size_t i = 0; i < p.size(); ++i) {
            s += (i ? "," : "") + std::to_string(p[i]);
        }
        return s;
    };
    std::ostringstream os;
    os << "# R(" << to_string(implements_) << ") inputs " << ports(inputs_) << " outputs "
       << ports(outputs_) << "\n";
    for (std::size_t i = 0; i < locations_.size(); ++i) {
        const auto& loc = locations_[i];
        os << i << ' ' << to_string(loc.kind) << (loc.fallible ? "" : "*") << ' ' << ports(loc.in)
           << " -> " << ports(loc.out) << "\n";
    }
    return os.str();
}

Circuit build_replacement(Kind kind) {
    switch (kind) {
        case Kind::wire: {
            Circuit c(Kind::wire, 1);
            std::vector<std::size_t> out;
            for (auto b : error_correct(c, c.inputs())) {
                out.push_back(c.add(Kind::wire, {b}, true)[0]);
            }
            c.set_outputs(out);
            return c;
        }
        case Kind::voter: {
            Circuit c(Kind::voter, 3);
            std::array<std::vector<std::size_t>, 3> blocks;
            for (std::size_t b = 0; b < 3; ++b) {
                const std::vector<std::size_t> in(c.inputs().begin() + 3 * b,
                                                  c.inputs().begin() + 3 * b + 3);
                blocks[b] = error_correct(c, in);
            }
            std::vector<std::size_t> out;
            for (std::size_t j = 0; j < 3; ++j) {
                out.push_back(c.add(Kind::voter, {blocks[0][j], blocks[1][j], blocks[2][j]}, true)[0]);
            }
            c.set_outputs(out);
            return c;
        }
        case Kind::fanout:
            break;
    }
    Circuit c(Kind::fanout, 1);
    std::array<std::vector<std::size_t>, 3> copies;
    for (std::size_t i = 0; i < 3; ++i) {
        copies[i] = c.add(Kind::fanout, {c.inputs()[i]}, false);
    }
    std::vector<std::size_t> out;
    for (std::size_t k = 0; k < 3; ++k) {
        for (std::size_t i = 0; i < 3; ++i) {
            out.push_back(copies[i][k]);
        }
    }
    c.set_outputs(out);
    return c;
}

Enumeration enumerate(const Circuit& c, InputSet inputs, unsigned threads) {
    const auto fallible = c.fallible();
    if (fallible.size() > kMaxFallible) {
        throw EnumerationTooLarge("circuit has " + std::to_string(fallible.size()) +
                                  " fallible locations (limit " + std::to_string(kMaxFallible) +
                                  ")");
    }
    std::vector<bool> is_wire;
    std::size_t nw = 0;
    for (auto idx : fallible) {
        is_wire.push_back(c.locations()[idx].kind == Kind::wire);
        nw += is_wire.back() ? 1 : 0;
    }
    const std::size_t nv = fallible.size() - nw;
    using Table = std::vector<std::vector<unsigned long long>>;

    const unsigned long long patterns = 1ULL << fallible.size();
    constexpr unsigned long long kChunk = 1ULL << 12;
    const std::size_t chunks = static_cast<std::size_t>((patterns + kChunk - 1) / kChunk);
    std::vector<Table> fail_parts(chunks, Table(nw + 1, std::vector<unsigned long long>(nv + 1)));
    std::vector<Table> ok_parts = fail_parts;
    parallel_for(chunks, resolve_thread_count(threads), [&](std::size_t chunk) {
        const unsigned long long end = std::min(patterns, (chunk + 1) * kChunk);
        for (unsigned long long m = chunk * kChunk; m < end; ++m) {
            std::size_t a = 0;
            std::size_t b = 0;
            for (std::size_t k = 0; k < fallible.size(); ++k) {
                if ((m >> k) & 1ULL) {
                    (is_wire[k] ? a : b)++;
                }
            }
            (c.fails(m, inputs) ? fail_parts : ok_parts)[chunk][a][b]++;
        }
    });
    Table fail(nw + 1, std::vector<unsigned long long>(nv + 1));
    Table ok = fail;
    Enumeration e;
    for (std::size_t chunk = 0; chunk < chunks; ++chunk) {
        for (std::size_t a = 0; a <= nw; ++a) {
            for (std::size_t b = 0; b <= nv; ++b) {
                fail[a][b] += fail_parts[chunk][a][b];
                ok[a][b] += ok_parts[chunk][a][b];
                e.failing += fail_parts[chunk][a][b];
            }
        }
    }
    e.patterns = static_cast<std::size_t>(patterns);
    e.failure = expand(fail, nw, nv);
    e.success = expand(ok, nw, nv);
    return e;
}

Polynomial enumerate_flow_polynomial(const Circuit& c, InputSet inputs, unsigned threads) {
    return enumerate(c, inputs, threads).failure;
}

Polynomial voter_map_by_substitution(const Polynomial& wire_poly) {
    const Polynomial p = wire_poly.reindexed(kVars);
    const Polynomial v = Polynomial::variable(kVars, "v");
    const Polynomial ec_failure = v.pow(2) * Coefficient(3) - v.pow(3) * Coefficient(2);
    const std::vector<Polynomial> replacements{v, ec_failure};
    return p.substitute(replacements);
}

const FlowMap& tmr_flow_map() {
    static const FlowMap map = [] {
        const Polynomial w = enumerate_flow_polynomial(build_replacement(Kind::wire));
        const Polynomial v = voter_map_by_substitution(w);
        const Polynomial direct = enumerate_flow_polynomial(build_replacement(Kind::voter));
        if (!(direct == v)) {
            throw DerivationInconsistency(
                "voter component by substitution differs from direct enumeration of R(v)");
        }
        return FlowMap(kVars, {w, v});
    }();
    return map;
}

}  // namespace flowmap::tmr

namespace flowmap {

FlowMap uv_example_map() {
    const std::vector<std::string> vars{"u", "v"};
    const Polynomial one = Polynomial::constant(vars, 1);
    const Polynomial u = Polynomial::variable(vars, "u");
    const Polynomial v = Polynomial::variable(vars, "v");
    const Polynomial pu = one - u;
    const Polynomial pv = one - v;
    const Polynomial gu = one - pu.pow(2) * pv.pow(2) - u * pu * pv.pow(2) * Coefficient(2) -
                          v * pv * pu.pow(2) * Coefficient(2);
    const Polynomial gv = one - pu.pow(3) * pv.pow(3) - u * pu.pow(2) * pv.pow(3) * Coefficient(3) -
                          v * pv.pow(2) * pu.pow(3) * Coefficient(3);
    return FlowMap(vars, {gu, gv});
}

}  // namespace flowmap
