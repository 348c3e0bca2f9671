// Acceptance runner: one PASS/FAIL line per criterion, nonzero exit on failure.
#include <boost/math/tools/roots.hpp>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <sstream>
#include <thread>

#include <unistd.h>

#include "cli.hpp"
#include "flowmap/analysis.hpp"
#include "flowmap/steane.hpp"
#include "flowmap/tmr.hpp"

using namespace flowmap;
namespace fs = std::filesystem;

namespace {

struct Verdict {
    bool pass = false;
    std::string detail;
};

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
    return std::chrono::duration<double>(Clock::now() - t0).count();
}

std::string fmt(const char* f, auto... args) {
    char buf[512];
    std::snprintf(buf, sizeof buf, f, args...);
    return buf;
}

unsigned threads() { return std::max(1U, std::thread::hardware_concurrency()); }

// Oracle: TMR components written out by hand.
double gw(double w, double v) {
    return 6 * v * w + 3 * v * v + 3 * w * w - 2 * v * v * v - 18 * v * v * w + 12 * v * v * v * w -
           18 * v * w * w + 36 * v * v * w * w - 24 * v * v * v * w * w - 2 * w * w * w +
           12 * v * w * w * w - 24 * v * v * w * w * w + 16 * v * v * v * w * w * w;
}
double gv(double v) { return gw(v, 3 * v * v * (1 - v) + v * v * v); }

double least_root(const std::function<double(double)>& h, double lo, double hi, int n = 20000) {
    double a = lo + (hi - lo) / n;
    for (int i = 2; i <= n; ++i) {
        const double b = lo + (hi - lo) * i / n;
        if ((h(a) < 0) != (h(b) < 0)) {
            boost::uintmax_t iters = 200;
            const auto r = boost::math::tools::toms748_solve(
                h, a, b, boost::math::tools::eps_tolerance<double>(50), iters);
            return (r.first + r.second) / 2;
        }
        a = b;
    }
    return kNaN;
}

double voter_root() {
    static const double r = least_root([](double g) { return gv(g) - g; }, 0.0, 0.4);
    return r;
}

Verdict exact_derivation() {
    const auto t0 = Clock::now();
    const auto wire = tmr::enumerate_flow_polynomial(tmr::build_replacement(tmr::Kind::wire));
    const auto voter = tmr::voter_map_by_substitution(wire);
    const double secs = seconds_since(t0);
    const std::vector<std::string> wv{"w", "v"};
    struct T { std::uint32_t ew, ev; int c; };
    const T w_expect[] = {{1, 1, 6},  {0, 2, 3},   {2, 0, 3},   {0, 3, -2}, {1, 2, -18},
                          {1, 3, 12}, {2, 1, -18}, {2, 2, 36},  {2, 3, -24}, {3, 0, -2},
                          {3, 1, 12}, {3, 2, -24}, {3, 3, 16}};
    const int v_expect[] = {0, 0, 3, 16, -39, -126, 474, -288, -936, 2080, -1824, 768, -128};
    const auto pw = wire.reindexed(wv);
    const auto pv = voter.reindexed(wv);
    std::size_t bad = pw.size() == 13 ? 0 : 1;
    for (const auto& t : w_expect) {
        const auto c = pw.coefficient({t.ew, t.ev});
        bad += c.is_exact() && c.exact() == Rational(t.c) ? 0 : 1;
    }
    bad += pv.size() == 11 ? 0 : 1;
    for (std::uint32_t d = 0; d < 13; ++d) {
        const auto c = pv.coefficient({0, d});
        bad += c.is_exact() && c.exact() == Rational(v_expect[d]) ? 0 : 1;
    }
    return {bad == 0 && secs < 1.0,
            fmt("13 wire + 11 voter coefficients, %zu mismatches, %.3f s", bad, secs)};
}

Verdict classical_thresholds() {
    const auto t0 = Clock::now();
    const auto& f = tmr::tmr_flow_map();
    const auto aw = asymptotic_location_threshold(f, "w", diagonal(f.variables()));
    const auto av = asymptotic_location_threshold(f, "v", diagonal(f.variables()));
    const auto w1 = pseudothreshold(f, "w", diagonal(f.variables()), 1);
    const double secs = seconds_since(t0);
    const double w1_oracle = least_root([](double g) { return gw(g, g) - g; }, 0.0, 0.4);
    const double ratio = av.value / w1.value;
    const bool ok = aw.converged && av.converged && std::abs(aw.value - 0.246) <= 1e-3 &&
                    std::abs(av.value - 0.246) <= 1e-3 && std::abs(av.value - voter_root()) < 1e-6 &&
                    std::abs(w1.value - 0.129) <= 1e-3 && std::abs(w1.value - w1_oracle) < 1e-9 &&
                    std::abs(ratio - 1.9) <= 0.05 && secs < 5.0;
    return {ok, fmt("asymptotic w %.6f v %.6f (oracle %.6f), w level 1 %.6f (oracle %.6f), "
                    "ratio %.4f, %.3f s",
                    aw.value, av.value, voter_root(), w1.value, w1_oracle, ratio, secs)};
}

Verdict fixed_point_census() {
    const auto& f = tmr::tmr_flow_map();
    const auto pts = fixed_points(f, Region::unit(2));
    const std::vector<std::pair<double, double>> expect{
        {0, 0}, {0.5, 0}, {0.5, voter_root()}, {0.5, 0.5}, {1, 0}};
    if (pts.size() != expect.size()) {
        return {false, fmt("%zu fixed points found, expected 5", pts.size())};
    }
    double worst_residual = 0.0;
    double worst_offset = 0.0;
    for (std::size_t i = 0; i < pts.size(); ++i) {
        const double w = pts[i].at("w");
        const double v = pts[i].at("v");
        worst_residual = std::max({worst_residual, std::abs(gw(w, v) - w),
                                   std::abs(gw(v, 3 * v * v * (1 - v) + v * v * v) - v)});
        worst_offset = std::max({worst_offset, std::abs(w - expect[i].first),
                                 std::abs(v - expect[i].second)});
    }
    return {worst_residual < 1e-10 && worst_offset < 1e-8,
            fmt("5 fixed points, max residual %.2e, max offset from oracle %.2e", worst_residual,
                worst_offset)};
}

Verdict low_order() {
    const auto r = low_order_bound(tmr::tmr_flow_map(), {{"w", 2}, {"v", 3}});
    const bool ok = r.exact && *r.exact == Rational(1, 12);
    return {ok, "truncated diagonal bound " + (r.exact ? r.exact->str() : fmt("%.17g", r.bound)) +
                    " on '" + r.location + "'"};
}

Verdict threshold_set_grid() {
    const auto t0 = Clock::now();
    const auto& f = tmr::tmr_flow_map();
    const auto r = threshold_set(f, ThresholdSlice{"w", "v", 0.0, 0.5, 0.0, 0.5, {}}, 200, {},
                                 threads());
    const double secs = seconds_since(t0);
    const double root = voter_root();
    double worst_cells = 0.0;
    std::size_t wrong = 0;
    for (std::size_t j = 0; j < r.ys.size(); ++j) {
        for (std::size_t i = 0; i < r.xs.size(); ++i) {
            const bool inside = r.xs[i] < 0.5 && r.ys[j] < root;
            if (inside != (r.at(i, j) == ThresholdClass::below)) {
                ++wrong;
                worst_cells = std::max(worst_cells, std::min(std::abs(r.xs[i] - 0.5) / r.x_step,
                                                             std::abs(r.ys[j] - root) / r.y_step));
            }
        }
    }
    const bool ok = worst_cells <= 2.0 && std::abs(r.largest_cube_edge - root) <= r.x_step &&
                    secs < 60.0;
    return {ok, fmt("%zux%zu nodes, %zu misclassified (worst %.2f cells from the boundary), "
                    "cube edge %.5f vs %.5f (step %.5f), %.2f s",
                    r.xs.size(), r.ys.size(), wrong, worst_cells, r.largest_cube_edge, root,
                    r.x_step, secs)};
}

Verdict level_constancy() {
    const auto& f = tmr::tmr_flow_map();
    double lo = 1.0, hi = 0.0;
    for (int level = 1; level <= 5; ++level) {
        const auto r = pseudothreshold(f, "v", diagonal(f.variables()), level);
        lo = std::min(lo, r.value);
        hi = std::max(hi, r.value);
    }
    double worst = 0.0;
    for (int c : {2, 5, 12, 100}) {
        const std::vector<std::string> x{"x"};
        Polynomial p(x);
        p.add_term({2}, c);
        const FlowMap q(x, {p});
        for (int level = 1; level <= 5; ++level) {
            const auto r = pseudothreshold(q, "x", diagonal(x), level);
            worst = std::max(worst, std::abs(r.value - 1.0 / c) * c);
        }
    }
    const bool ok = hi - lo <= 1e-9 && worst <= 1e-9;
    return {ok, fmt("voter L=1..5 spread %.2e; C g^2 worst relative error vs 1/C %.2e", hi - lo,
                    worst)};
}

Verdict uv_example() {
    const auto f = uv_example_map();
    const auto y = eval_map(f, FailureVector({"u", "v"}, {0.0, 0.2}));
    const double err = std::max(std::abs(y.at("u") - 0.04), std::abs(y.at("v") - 0.104));
    const auto orbit = trajectory(f, FailureVector({"u", "v"}, {0.28, 0.0}), 30);
    int exit_level = -1;
    for (std::size_t k = 0; k < orbit.size(); ++k) {
        if (orbit[k].at("u") > 0.3 || orbit[k].at("v") > 0.3) {
            exit_level = static_cast<int>(k);
            break;
        }
    }
    return {err <= 1e-12 && exit_level >= 6 && exit_level <= 9,
            fmt("Gamma(0,0.2) error %.1e; orbit from (0.28,0) leaves [0,0.3]^2 at level %d", err,
                exit_level)};
}

// Monte Carlo pseudothreshold: coarse crossing on a wide log grid, then a
// quadratic fit on a 9-point grid spanning x4 around it.
struct QuantumThreshold {
    double coarse = kNaN;
    steane::FitResult fit;
};

QuantumThreshold quantum_threshold(steane::LocationKind kind, const Setting& s,
                                   std::uint64_t trials, std::uint64_t seed) {
    QuantumThreshold q;
    const auto wide = steane::mc_trip(kind, s, GammaGrid{1e-5, 0.3, 19, true}.points(), trials / 10,
                                      seed, {}, threads());
    if (wide.curve.crossings.empty()) {
        return q;
    }
    q.coarse = wide.curve.crossings.front();
    const auto local = steane::mc_trip(kind, s, GammaGrid{q.coarse / 2, q.coarse * 2, 9, true}.points(),
                                       trials, seed + 1, {}, threads());
    q.fit = steane::fit_pseudothreshold(local.estimates);
    return q;
}

Verdict quantum() {
    using steane::LocationKind;
    const auto t0 = Clock::now();
    const auto& names = steane::location_names();
    constexpr LocationKind kinds[] = {LocationKind::one, LocationKind::two, LocationKind::wait,
                                      LocationKind::measured, LocationKind::prep};
    std::ostringstream os;
    bool ok = true;

    // (a) zero noise, (b) exhaustive single faults.
    std::uint64_t zero_failures = 0;
    std::size_t single_failures = 0, single_cases = 0;
    for (auto k : kinds) {
        const auto c = steane::build_exrec(k);
        zero_failures += steane::mc_failure(c, FailureVector(names, {0, 0, 0, 0, 0}), 100000, 7,
                                            threads()).failures;
        for (std::uint32_t l = 0; l < c.locations.size(); ++l) {
            for (unsigned p = 1; p <= steane::pauli_count(c, l); ++p) {
                const steane::Fault f{l, static_cast<std::uint8_t>(p)};
                single_failures +=
                    steane::propagate_pauli(c, std::span<const steane::Fault>(&f, 1)).logical_error;
                ++single_cases;
            }
        }
    }
    const bool a = zero_failures == 0;
    const bool b = single_failures == 0;
    os << fmt("(a) %s zero-noise failures %llu; ", a ? "ok" : "FAIL",
              static_cast<unsigned long long>(zero_failures));
    os << fmt("(b) %s %zu/%zu single faults fail; ", b ? "ok" : "FAIL", single_failures,
              single_cases);

    // (c) slope on the Steane setting, exRec(1).
    const auto sl = steane::mc_trip(LocationKind::one, steane_setting(names),
                                    GammaGrid{1e-4, 1e-3, 6, true}.points(), 10'000'000, 101, {},
                                    threads());
    const auto slope = steane::loglog_slope(sl.estimates);
    const bool c = std::abs(slope.slope - 2.0) <= 0.1;
    os << fmt("(c) %s slope %.3f +- %.3f; ", c ? "ok" : "FAIL", slope.slope, slope.stderr_);

    // (d) axis-setting level-1 pseudothresholds.
    const auto tw = quantum_threshold(LocationKind::wait, axis(names, "w"), 1'000'000, 201);
    const auto t2 = quantum_threshold(LocationKind::two, axis(names, "2"), 300'000, 203);
    const auto t1 = quantum_threshold(LocationKind::one, axis(names, "1"), 200'000, 205);
    const double w = tw.fit.value, g2 = t2.fit.value, g1 = t1.fit.value;
    const bool d = tw.fit.found && t2.fit.found && t1.fit.found && w < g2 && g2 < g1 &&
                   w >= 5e-5 && w <= 3e-4 && g2 >= 7e-4 && g2 <= 4e-3 && g1 >= 2e-2 && g1 <= 2e-1;
    os << fmt("(d) %s axis gamma_w %.3g [%.3g, %.3g], gamma_2 %.3g, gamma_1 %.3g; ", d ? "ok" : "FAIL",
              w, tw.fit.ci_lo, tw.fit.ci_hi, g2, g1);

    // (e) Steane-setting ratio.
    const auto s2 = quantum_threshold(LocationKind::two, steane_setting(names), 300'000, 207);
    const auto s1 = quantum_threshold(LocationKind::one, steane_setting(names), 300'000, 209);
    const double ratio = s2.fit.value / s1.fit.value;
    const bool e = s2.fit.found && s1.fit.found && ratio >= 0.3 && ratio <= 0.7;
    os << fmt("(e) %s Steane setting gamma_2 %.3g / gamma_1 %.3g = %.3f; %.1f s", e ? "ok" : "FAIL",
              s2.fit.value, s1.fit.value, ratio, seconds_since(t0));
    ok = a && b && c && d && e;
    return {ok, os.str()};
}

Verdict conjecture() {
    const auto c = conjecture_check(tmr::tmr_flow_map(), 200, {}, threads());
    // A coupled map that violates the bound must come back as a finding.
    const std::vector<std::string> v{"a", "b"};
    Polynomial pa(v), pb(v);
    pa.add_term({2, 0}, 2);
    pa.add_term({2, 1}, -4);
    pa.add_term({2, 2}, 2);
    pb.add_term({1, 0}, 1);
    const auto bad = conjecture_check(FlowMap(v, {pa, pb}), 100);
    return {c.holds && !bad.holds && !bad.finding.empty(),
            "TMR: " + c.finding + "; coupled example reported: " + bad.finding};
}

Verdict determinism() {
    const auto dir = fs::temp_directory_path() / fmt("flowmap_acceptance_%d", static_cast<int>(::getpid()));
    fs::create_directories(dir);
    const auto a = (dir / "a.csv").string();
    const auto b = (dir / "b.csv").string();
    std::ostringstream out, err;
    int code = cli::run({"mc-trip", "--location", "1", "--setting", "steane", "--grid",
                         "1e-4:1e-2:7:log", "--trials", "50000", "--seed", "2024", "--out", a,
                         "--threads", std::to_string(threads())},
                        out, err);
    if (code == 0) {
        code = cli::run({"replay", a, "--out", b, "--threads", "1"}, out, err);
    }
    auto slurp = [](const std::string& p) {
        std::ifstream in(p, std::ios::binary);
        std::ostringstream s;
        s << in.rdbuf();
        return s.str();
    };
    const auto x = slurp(a);
    const auto y = slurp(b);
    fs::remove_all(dir);
    const bool ok = code == 0 && !x.empty() && x == y;
    return {ok, fmt("mc-trip artifact %zu bytes regenerated with 1 thread: %s", x.size(),
                    ok ? "identical" : ("differs, exit " + std::to_string(code) + " " + err.str()).c_str())};
}

}  // namespace

int main() {
    const std::pair<const char*, Verdict (*)()> criteria[] = {
        {"exact-derivation", exact_derivation},
        {"classical-thresholds", classical_thresholds},
        {"fixed-points", fixed_point_census},
        {"low-order-bound", low_order},
        {"threshold-set", threshold_set_grid},
        {"level-constancy", level_constancy},
        {"uv-example", uv_example},
        {"quantum", quantum},
        {"conjecture", conjecture},
        {"determinism", determinism},
    };
    int failed = 0;
    int n = 0;
    for (const auto& [name, check] : criteria) {
        Verdict v;
        try {
            v = check();
        } catch (const std::exception& e) {
            v = {false, std::string("exception: ") + e.what()};
        }
        failed += v.pass ? 0 : 1;
        std::cout << (v.pass ? "PASS" : "FAIL") << " [" << ++n << "] " << name << ": " << v.detail
                  << std::endl;
    }
    std::cout << (n - failed) << "/" << n << " criteria passed" << std::endl;
    return failed == 0 ? 0 : 1;
}
