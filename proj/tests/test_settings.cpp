#include <gtest/gtest.h>

#include "flowmap/settings.hpp"

using namespace flowmap;

namespace {
const std::vector<std::string> kQ{"1", "2", "w", "1m", "p"};
}

TEST(Settings, DiagonalIsUniform) {
    const auto s = diagonal(kQ);
    const auto x = s.apply(0.01);
    for (const auto& n : kQ) {
        EXPECT_EQ(x.at(n), 0.01);
    }
}

TEST(Settings, SteaneWaitsAtOneTenth) {
    const auto x = steane_setting(kQ).apply(1e-3);
    EXPECT_DOUBLE_EQ(x.at("w"), 1e-4);
    EXPECT_EQ(x.at("2"), 1e-3);
    EXPECT_THROW(steane_setting({"u", "v"}), ConfigurationError);
}

TEST(Settings, AxisZeroesOthers) {
    const auto x = axis(kQ, "2").apply(0.3);
    EXPECT_EQ(x.at("2"), 0.3);
    EXPECT_EQ(x.at("1"), 0.0);
    EXPECT_EQ(x.at("w"), 0.0);
    EXPECT_THROW(axis(kQ, "q"), ConfigurationError);
}

TEST(Settings, ZeroMapsToZero) {
    const auto x = steane_setting(kQ).apply(0.0);
    for (const auto& v : x.values()) {
        EXPECT_EQ(v, 0.0);
    }
    EXPECT_THROW(diagonal(kQ).apply(-1.0), std::invalid_argument);
}

TEST(Settings, JsonRoundTrip) {
    const auto s = steane_setting(kQ);
    const auto back = parse_setting(serialize_setting(s));
    EXPECT_EQ(back.name(), "steane");
    EXPECT_EQ(back.aligned(kQ), s.aligned(kQ));
    EXPECT_THROW(parse_setting(R"({"name":"x","multipliers":{"a":-1}})"), ConfigurationError);
}

TEST(Settings, ResolveSpecs) {
    EXPECT_EQ(resolve_setting("diagonal", kQ).name(), "diagonal");
    EXPECT_EQ(resolve_setting("axis:w", kQ).multiplier("w"), 1.0);
    EXPECT_THROW(resolve_setting("sideways", kQ), ConfigurationError);
    EXPECT_THROW(resolve_setting("diagonal", kQ).aligned(std::vector<std::string>{"z"}),
                 ConfigurationError);
}
