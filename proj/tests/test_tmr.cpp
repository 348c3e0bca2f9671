#include <gtest/gtest.h>

#include <chrono>
#include <cmath>

#include "flowmap/tmr.hpp"

using namespace flowmap;
using namespace flowmap::tmr;

namespace {

const std::vector<std::string> kWV{"w", "v"};

// Probability by summing over every failure mask with the circuit simulator
// alone; independent of the pattern grouping used by enumerate().
double brute_force_failure(const Circuit& c, double w, double v, InputSet inputs) {
    const auto fallible = c.fallible();
    double total = 0.0;
    for (unsigned long long mask = 0; mask < (1ULL << fallible.size()); ++mask) {
        double p = 1.0;
        for (std::size_t k = 0; k < fallible.size(); ++k) {
            const double g = c.locations()[fallible[k]].kind == Kind::wire ? w : v;
            p *= (mask >> k) & 1ULL ? g : 1.0 - g;
        }
        if (c.fails(mask, inputs)) {
            total += p;
        }
    }
    return total;
}

Coefficient coeff(const Polynomial& p, std::uint32_t ew, std::uint32_t ev) {
    return p.reindexed(kWV).coefficient({ew, ev});
}

}  // namespace

TEST(Replacement, AllRulesAreFunctional) {
    for (auto k : {Kind::wire, Kind::voter, Kind::fanout}) {
        EXPECT_TRUE(build_replacement(k).functional()) << to_string(k);
    }
}

TEST(Replacement, FallibleCounts) {
    EXPECT_EQ(build_replacement(Kind::wire).fallible().size(), 6U);
    EXPECT_EQ(build_replacement(Kind::voter).fallible().size(), 12U);
    EXPECT_EQ(build_replacement(Kind::fanout).fallible().size(), 0U);
}

TEST(Replacement, SingleFailureIsTolerated) {
    for (auto k : {Kind::wire, Kind::voter}) {
        const auto c = build_replacement(k);
        for (std::size_t i = 0; i < c.fallible().size(); ++i) {
            EXPECT_FALSE(c.fails(1ULL << i)) << to_string(k) << " location " << i;
        }
    }
}

TEST(Replacement, NoiselessFanoutCannotFail) {
    Circuit c(Kind::wire, 1);
    EXPECT_THROW(c.add(Kind::fanout, {c.inputs()[0]}, true), std::invalid_argument);
}

TEST(Enumeration, WireMapMatchesKnownCoefficients) {
    const auto t0 = std::chrono::steady_clock::now();
    const auto p = enumerate_flow_polynomial(build_replacement(Kind::wire));
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    struct T { std::uint32_t ew, ev; int c; };
    const T expect[] = {{1, 1, 6},   {0, 2, 3},   {2, 0, 3},   {0, 3, -2},  {1, 2, -18},
                        {1, 3, 12},  {2, 1, -18}, {2, 2, 36},  {2, 3, -24}, {3, 0, -2},
                        {3, 1, 12},  {3, 2, -24}, {3, 3, 16}};
    EXPECT_EQ(p.size(), 13U);
    for (const auto& t : expect) {
        const auto c = coeff(p, t.ew, t.ev);
        ASSERT_TRUE(c.is_exact());
        EXPECT_EQ(c.exact(), Rational(t.c)) << "w^" << t.ew << " v^" << t.ev;
    }
    EXPECT_LT(secs, 1.0);
}

TEST(Enumeration, VoterMapMatchesKnownCoefficients) {
    const auto p = voter_map_by_substitution(enumerate_flow_polynomial(build_replacement(Kind::wire)));
    const int expect[] = {0, 0, 3, 16, -39, -126, 474, -288, -936, 2080, -1824, 768, -128};
    EXPECT_EQ(p.size(), 11U);
    for (std::uint32_t d = 0; d < 13; ++d) {
        EXPECT_EQ(coeff(p, 0, d).exact(), Rational(expect[d])) << "v^" << d;
    }
    EXPECT_EQ(p.degree_in(p.index_of("w")), 0U);
}

TEST(Enumeration, DirectVoterEnumerationAgrees) {
    const auto direct = enumerate_flow_polynomial(build_replacement(Kind::voter));
    EXPECT_EQ(direct, tmr_flow_map().component("v"));
}

TEST(Enumeration, PolynomialMatchesBruteForceSum) {
    for (auto k : {Kind::wire, Kind::voter}) {
        const auto c = build_replacement(k);
        const auto p = enumerate_flow_polynomial(c).reindexed(kWV);
        for (double w : {0.0, 0.07, 0.3}) {
            for (double v : {0.02, 0.2, 0.45}) {
                EXPECT_NEAR(p.eval(std::vector<double>{w, v}),
                            brute_force_failure(c, w, v, InputSet::uniform), 1e-12);
            }
        }
    }
}

TEST(Enumeration, AllInputsPredicateIsStricter) {
    const auto c = build_replacement(Kind::voter);
    const auto all = enumerate_flow_polynomial(c, InputSet::all).reindexed(kWV);
    const auto uni = tmr_flow_map().component("v");
    for (double v : {0.01, 0.1, 0.3}) {
        const std::vector<double> x{0.0, v};
        EXPECT_NEAR(all.eval(x), brute_force_failure(c, 0.0, v, InputSet::all), 1e-12);
        EXPECT_GE(all.eval(x), uni.eval(x));
    }
}

TEST(Enumeration, ThreadCountDoesNotChangeResult) {
    const auto c = build_replacement(Kind::voter);
    const auto a = enumerate(c, InputSet::uniform, 1);
    const auto b = enumerate(c, InputSet::uniform, 4);
    EXPECT_EQ(a.failure, b.failure);
    EXPECT_EQ(a.failing, b.failing);
    EXPECT_EQ(a.patterns, 4096U);
    EXPECT_EQ(a.failure + a.success, Polynomial::constant(a.failure.variables(), 1));
}

TEST(Enumeration, TooManyLocationsIsRefused) {
    Circuit c(Kind::wire, 1);
    auto bits = std::vector<std::size_t>{c.inputs()[0]};
    for (int i = 0; i < 25; ++i) {
        bits = c.add(Kind::wire, bits, true);
    }
    c.set_outputs({bits[0], c.inputs()[1], c.inputs()[2]});
    EXPECT_THROW(enumerate(c), EnumerationTooLarge);
}

TEST(Netlist, ListsEveryLocation) {
    const auto text = build_replacement(Kind::wire).netlist();
    EXPECT_NE(text.find("# R(w)"), std::string::npos);
    EXPECT_EQ(std::count(text.begin(), text.end(), '\n'), 10);
    EXPECT_EQ(std::count(text.begin(), text.end(), '*'), 3);
}

TEST(UvExample, EvaluatesReferencePoint) {
    const auto f = uv_example_map();
    const auto y = eval_map(f, FailureVector({"u", "v"}, {0.0, 0.2}));
    EXPECT_NEAR(y.at("u"), 0.04, 1e-12);
    EXPECT_NEAR(y.at("v"), 0.104, 1e-12);
}

TEST(UvExample, MatchesClosedFormProducts) {
    const auto f = uv_example_map();
    for (double u : {0.05, 0.2}) {
        for (double v : {0.1, 0.3}) {
            const double fu = 1 - std::pow(1 - u, 2) * std::pow(1 - v, 2) -
                              2 * u * (1 - u) * std::pow(1 - v, 2) - 2 * v * (1 - v) * std::pow(1 - u, 2);
            const double fv = 1 - std::pow(1 - u, 3) * std::pow(1 - v, 3) -
                              3 * u * std::pow(1 - u, 2) * std::pow(1 - v, 3) -
                              3 * v * std::pow(1 - v, 2) * std::pow(1 - u, 3);
            const auto y = eval_map(f, FailureVector({"u", "v"}, {u, v}));
            EXPECT_NEAR(y.at("u"), fu, 1e-14);
            EXPECT_NEAR(y.at("v"), fv, 1e-14);
        }
    }
}
