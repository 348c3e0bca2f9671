#include "flowmap/analysis.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <map>
#include <random>
#include <sstream>

#include "flowmap/format.hpp"
#include "flowmap/parallel.hpp"

namespace flowmap {

namespace {

double parse_number(std::string_view s, std::string_view what) {
    double v = 0.0;
    auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc() || ptr != s.data() + s.size()) {
        throw std::invalid_argument("grid: bad " + std::string(what) + " '" + std::string(s) +
                                    "'");
    }
    return v;
}

std::vector<double> log_space(double lo, double hi, std::size_t n) {
    std::vector<double> out(n);
    const double a = std::log(lo);
    const double b = std::log(hi);
    for (std::size_t k = 0; k < n; ++k) {
        out[k] = n == 1 ? lo : std::exp(a + (b - a) * static_cast<double>(k) / (n - 1));
    }
    out.front() = lo;
    out.back() = n == 1 ? lo : hi;
    return out;
}

std::vector<double> lin_space(double lo, double hi, std::size_t n) {
    std::vector<double> out(n);
    for (std::size_t k = 0; k < n; ++k) {
        out[k] = n == 1 ? lo : lo + (hi - lo) * static_cast<double>(k) / (n - 1);
    }
    if (n > 1) {
        out.back() = hi;
    }
    return out;
}

// h(gamma) for the root search. Failed or runaway evaluations count as
// positive (above threshold).
double excess(const FlowMap& f, std::size_t loc, std::span<const double> dir, double gamma,
              int level) {
    double v = 0.0;
    try {
        v = concatenated_value(f, loc, dir, gamma, level);
    } catch (const NegativeProbabilityError&) {
        return std::numeric_limits<double>::infinity();
    }
    if (!std::isfinite(v)) {
        return std::numeric_limits<double>::infinity();
    }
    return v - gamma;
}

void check_level(int level) {
    if (level < 1) {
        throw std::invalid_argument("concatenation level must be at least 1");
    }
}

std::vector<double> base_point(const FlowMap& f, const FailureVector& fixed) {
    std::vector<double> x(f.dimension(), 0.0);
    for (std::size_t k = 0; k < fixed.size(); ++k) {
        x[f.index_of(fixed.names()[k])] = fixed.values()[k];
    }
    return x;
}

// Solves a x = b in place by Gaussian elimination with partial pivoting.
bool solve(Matrix a, std::vector<double>& b) {
    const std::size_t n = b.size();
    for (std::size_t c = 0; c < n; ++c) {
        std::size_t p = c;
        for (std::size_t r = c + 1; r < n; ++r) {
            if (std::abs(a[r][c]) > std::abs(a[p][c])) {
                p = r;
            }
        }
        if (std::abs(a[p][c]) < 1e-14) {
            return false;
        }
        std::swap(a[p], a[c]);
        std::swap(b[p], b[c]);
        for (std::size_t r = c + 1; r < n; ++r) {
            const double m = a[r][c] / a[c][c];
            for (std::size_t k = c; k < n; ++k) {
                a[r][k] -= m * a[c][k];
            }
            b[r] -= m * b[c];
        }
    }
    for (std::size_t c = n; c-- > 0;) {
        double s = b[c];
        for (std::size_t k = c + 1; k < n; ++k) {
            s -= a[c][k] * b[k];
        }
        b[c] = s / a[c][c];
    }
    return true;
}

double max_abs(std::span<const double> v) {
    double m = 0.0;
    for (double x : v) {
        m = std::max(m, std::abs(x));
    }
    return m;
}

struct Key {
    long x;
    long y;
    bool operator<(const Key& o) const { return x != o.x ? x < o.x : y < o.y; }
    bool operator==(const Key& o) const { return x == o.x && y == o.y; }
};

long cross(const Key& o, const Key& a, const Key& b) {
    return (a.x - o.x) * (b.y - o.y) - (a.y - o.y) * (b.x - o.x);
}

std::vector<Key> convex_hull(std::vector<Key> pts) {
    std::sort(pts.begin(), pts.end());
    pts.erase(std::unique(pts.begin(), pts.end()), pts.end());
    if (pts.size() < 3) {
        return pts;
    }
    std::vector<Key> hull(2 * pts.size());
    std::size_t k = 0;
    for (const auto& p : pts) {
        while (k >= 2 && cross(hull[k - 2], hull[k - 1], p) <= 0) {
            --k;
        }
        hull[k++] = p;
    }
    for (std::size_t i = pts.size() - 1, t = k + 1; i-- > 0;) {
        while (k >= t && cross(hull[k - 2], hull[k - 1], pts[i]) <= 0) {
            --k;
        }
        hull[k++] = pts[i];
    }
    hull.resize(k - 1);
    return hull;
}

// Marching squares over the below/not-below indicator. Edge midpoints are
// keyed in half-grid units so segments can be chained exactly.
std::vector<std::vector<Key>> boundary_chains(const ThresholdSetReport& r) {
    const std::size_t nx = r.xs.size();
    const std::size_t ny = r.ys.size();
    auto in = [&](std::size_t i, std::size_t j) { return r.at(i, j) == ThresholdClass::below; };
    std::vector<std::pair<Key, Key>> segments;
    for (std::size_t j = 0; j + 1 < ny; ++j) {
        for (std::size_t i = 0; i + 1 < nx; ++i) {
            const long X = static_cast<long>(2 * i);
            const long Y = static_cast<long>(2 * j);
            const bool c0 = in(i, j), c1 = in(i + 1, j), c2 = in(i + 1, j + 1), c3 = in(i, j + 1);
            const Key e0{X + 1, Y}, e1{X + 2, Y + 1}, e2{X + 1, Y + 2}, e3{X, Y + 1};
            std::vector<Key> hits;
            if (c0 != c1) hits.push_back(e0);
            if (c1 != c2) hits.push_back(e1);
            if (c3 != c2) hits.push_back(e2);
            if (c0 != c3) hits.push_back(e3);
            if (hits.size() == 2) {
                segments.emplace_back(hits[0], hits[1]);
            } else if (hits.size() == 4) {
                // Saddle: cut off the corners that are on the minority side.
                if (c0) {
                    segments.emplace_back(e0, e1);
                    segments.emplace_back(e2, e3);
                } else {
                    segments.emplace_back(e0, e3);
                    segments.emplace_back(e1, e2);
                }
            }
        }
    }
    std::map<Key, std::vector<std::size_t>> at;
    for (std::size_t s = 0; s < segments.size(); ++s) {
        at[segments[s].first].push_back(s);
        at[segments[s].second].push_back(s);
    }
    std::vector<bool> used(segments.size(), false);
    std::vector<std::vector<Key>> chains;
    auto walk = [&](std::size_t s0, Key start) {
        std::vector<Key> chain{start};
        Key cur = start;
        std::size_t s = s0;
        while (true) {
            used[s] = true;
            cur = segments[s].first == cur ? segments[s].second : segments[s].first;
            chain.push_back(cur);
            std::size_t next = segments.size();
            for (std::size_t t : at[cur]) {
                if (!used[t]) {
                    next = t;
                    break;
                }
            }
            if (next == segments.size()) {
                break;
            }
            s = next;
        }
        chains.push_back(std::move(chain));
    };
    for (const auto& [key, segs] : at) {
        if (segs.size() == 1 && !used[segs[0]]) {
            walk(segs[0], key);
        }
    }
    for (std::size_t s = 0; s < segments.size(); ++s) {
        if (!used[s]) {
            walk(s, segments[s].first);
        }
    }
    return chains;
}

}  // namespace

std::vector<double> GammaGrid::points() const {
    return log ? log_space(lo, hi, n) : lin_space(lo, hi, n);
}

GammaGrid GammaGrid::parse(std::string_view text) {
    std::vector<std::string_view> parts;
    std::size_t start = 0;
    while (true) {
        const auto colon = text.find(':', start);
        parts.push_back(text.substr(start, colon - start));
        if (colon == std::string_view::npos) {
            break;
        }
        start = colon + 1;
    }
    if (parts.size() < 3 || parts.size() > 4 || (parts.size() == 4 && parts[3] != "log")) {
        throw std::invalid_argument("grid must be lo:hi:n or lo:hi:n:log, got '" +
                                    std::string(text) + "'");
    }
    GammaGrid g;
    g.lo = parse_number(parts[0], "lower bound");
    g.hi = parse_number(parts[1], "upper bound");
    const double n = parse_number(parts[2], "point count");
    g.log = parts.size() == 4;
    if (!(n >= 1) || n != std::floor(n) || n > 1e7) {
        throw std::invalid_argument("grid point count must be a positive integer");
    }
    g.n = static_cast<std::size_t>(n);
    if (!std::isfinite(g.lo) || !std::isfinite(g.hi) || g.lo < 0.0 || g.hi < g.lo) {
        throw std::invalid_argument("grid needs 0 <= lo <= hi");
    }
    if (g.log && g.lo <= 0.0) {
        throw std::invalid_argument("log grid needs lo > 0");
    }
    return g;
}

std::string GammaGrid::to_string() const {
    return format_double(lo) + ":" + format_double(hi) + ":" + std::to_string(n) +
           (log ? ":log" : "");
}

double concatenated_value(const FlowMap& f, std::size_t location, std::span<const double> direction,
                          double gamma, int level) {
    std::vector<double> x(direction.size());
    for (std::size_t i = 0; i < x.size(); ++i) {
        x[i] = direction[i] * gamma;
    }
    for (int l = 0; l < level; ++l) {
        f.step(x, x);
        if (max_abs(x) > 1e12) {
            return std::numeric_limits<double>::infinity();
        }
    }
    return x[location];
}

PseudothresholdResult pseudothreshold(const FlowMap& f, std::string_view location,
                                      const Setting& setting, int level, const ScanOptions& scan) {
    check_level(level);
    if (!(scan.gamma_min > 0.0) || !(scan.gamma_max > scan.gamma_min) || scan.points < 2) {
        throw std::invalid_argument("scan needs 0 < gamma_min < gamma_max and two points");
    }
    const std::size_t loc = f.index_of(location);
    const std::vector<double> dir = setting.aligned(f.variables());

    PseudothresholdResult r;
    r.location = std::string(location);
    r.level = level;
    r.setting = setting.name();

    const auto gammas = log_space(scan.gamma_min, scan.gamma_max, scan.points);
    double prev = excess(f, loc, dir, gammas[0], level);
    if (prev >= 0.0) {
        r.message = "no sub-threshold region: Gamma >= gamma already at gamma = " +
                    format_double(gammas[0]);
        return r;
    }
    std::size_t k = 1;
    for (; k < gammas.size(); ++k) {
        const double h = excess(f, loc, dir, gammas[k], level);
        if (h >= 0.0) {
            break;
        }
    }
    if (k == gammas.size()) {
        r.touches_scan_bound = true;
        r.message = "no crossing up to gamma = " + format_double(scan.gamma_max);
        return r;
    }
    double lo = gammas[k - 1];
    double hi = gammas[k];
    for (int it = 0; it < 400 && hi - lo > scan.rel_tol * hi; ++it) {
        const double mid = 0.5 * (lo + hi);
        if (mid <= lo || mid >= hi) {
            break;
        }
        (excess(f, loc, dir, mid, level) < 0.0 ? lo : hi) = mid;
    }
    r.found = true;
    r.lo = lo;
    r.hi = hi;
    r.value = 0.5 * (lo + hi);
    r.touches_scan_bound = hi == scan.gamma_max;
    if (r.touches_scan_bound) {
        r.message = "root at the upper scan bound";
    }
    return r;
}

AsymptoticThreshold asymptotic_location_threshold(const FlowMap& f, std::string_view location,
                                                  const Setting& setting, const ScanOptions& scan,
                                                  int max_level, double rel_tol) {
    check_level(max_level);
    AsymptoticThreshold out;
    for (int level = 1; level <= max_level; ++level) {
        out.sequence.push_back(pseudothreshold(f, location, setting, level, scan));
        const auto& cur = out.sequence.back();
        if (!cur.found) {
            out.message = "level " + std::to_string(level) + ": " + cur.message;
            return out;
        }
        if (level > 1) {
            const double prev = out.sequence[out.sequence.size() - 2].value;
            if (std::abs(cur.value - prev) <= rel_tol * std::abs(cur.value)) {
                out.converged = true;
                out.value = cur.value;
                out.level = level;
                out.previous = prev;
                return out;
            }
        }
    }
    out.level = max_level;
    out.value = out.sequence.back().value;
    out.previous = out.sequence.size() > 1 ? out.sequence[out.sequence.size() - 2].value : kNaN;
    out.message = "no convergence within " + std::to_string(max_level) + " levels";
    return out;
}

std::vector<TripCurve> trip_curves(const FlowMap& f, std::string_view location,
                                   const Setting& setting, const std::vector<int>& levels,
                                   const std::vector<double>& gammas, unsigned threads) {
    const std::size_t loc = f.index_of(location);
    const std::vector<double> dir = setting.aligned(f.variables());
    for (int level : levels) {
        check_level(level);
    }
    for (double g : gammas) {
        if (!std::isfinite(g) || g < 0.0) {
            throw std::invalid_argument("gamma values must be finite and non-negative");
        }
    }
    const std::size_t ng = gammas.size();
    std::vector<double> values(levels.size() * ng);
    parallel_for(values.size(), resolve_thread_count(threads), [&](std::size_t idx) {
        const int level = levels[idx / ng];
        try {
            values[idx] = concatenated_value(f, loc, dir, gammas[idx % ng], level);
        } catch (const NegativeProbabilityError&) {
            values[idx] = kNaN;
        }
    });

    std::vector<TripCurve> out;
    for (std::size_t li = 0; li < levels.size(); ++li) {
        TripCurve c;
        c.location = std::string(location);
        c.level = levels[li];
        for (std::size_t k = 0; k < ng; ++k) {
            c.samples.emplace_back(gammas[k], values[li * ng + k]);
        }
        auto sign = [](double h) { return h < 0.0 ? -1 : (h > 0.0 ? 1 : 0); };
        for (std::size_t k = 0; k + 1 < ng; ++k) {
            const double ga = gammas[k];
            const double gb = gammas[k + 1];
            if (gb <= 0.0 || !std::isfinite(values[li * ng + k]) ||
                !std::isfinite(values[li * ng + k + 1])) {
                continue;
            }
            const int sa = ga > 0.0 ? sign(values[li * ng + k] - ga) : 0;
            const int sb = sign(values[li * ng + k + 1] - gb);
            if (sb == 0) {
                c.crossings.push_back(gb);
            } else if (sa * sb < 0) {
                double lo = ga;
                double hi = gb;
                for (int it = 0; it < 200 && hi - lo > 1e-12 * hi; ++it) {
                    const double mid = 0.5 * (lo + hi);
                    const int sm = sign(excess(f, loc, dir, mid, c.level));
                    if (sm == 0) {
                        lo = hi = mid;
                        break;
                    }
                    (sm == sa ? lo : hi) = mid;
                }
                c.crossings.push_back(0.5 * (lo + hi));
            }
        }
        out.push_back(std::move(c));
    }
    return out;
}

TifdField tifd_field(const FlowMap& f, const std::pair<std::string, std::string>& plane,
                     const FailureVector& fixed_values, const GammaGrid& x_grid,
                     const GammaGrid& y_grid, unsigned threads) {
    MapEvaluator eval = [&f](std::span<const double> x) {
        std::vector<double> out(x.size());
        f.step(x, out);
        return out;
    };
    return tifd_field(eval, f.variables(), plane, fixed_values, x_grid, y_grid, threads);
}

TifdField tifd_field(const MapEvaluator& map, const std::vector<std::string>& variables,
                     const std::pair<std::string, std::string>& plane,
                     const FailureVector& fixed_values, const GammaGrid& x_grid,
                     const GammaGrid& y_grid, unsigned threads) {
    auto find = [&](const std::string& name) {
        const auto it = std::find(variables.begin(), variables.end(), name);
        if (it == variables.end()) {
            throw VariableBindingError("unknown location '" + name + "'");
        }
        return static_cast<std::size_t>(it - variables.begin());
    };
    const std::size_t ix = find(plane.first);
    const std::size_t iy = find(plane.second);
    if (ix == iy) {
        throw std::invalid_argument("TIFD plane needs two distinct locations");
    }
    std::vector<double> base(variables.size(), 0.0);
    for (std::size_t k = 0; k < fixed_values.size(); ++k) {
        base[find(fixed_values.names()[k])] = fixed_values.values()[k];
    }
    const auto xs = x_grid.points();
    const auto ys = y_grid.points();

    TifdField field;
    field.x_var = plane.first;
    field.y_var = plane.second;
    field.fixed_values = fixed_values;
    field.nx = xs.size();
    field.ny = ys.size();
    field.grid.resize(xs.size() * ys.size());
    parallel_for(field.grid.size(), resolve_thread_count(threads), [&](std::size_t idx) {
        auto& s = field.grid[idx];
        s.x = xs[idx % xs.size()];
        s.y = ys[idx / xs.size()];
        std::vector<double> p = base;
        p[ix] = s.x;
        p[iy] = s.y;
        const std::vector<double> q = map(p);
        s.dx = q[ix] - s.x;
        s.dy = q[iy] - s.y;
        s.magnitude = std::hypot(s.dx, s.dy);
        if (s.magnitude > 0.0) {
            s.ux = s.dx / s.magnitude;
            s.uy = s.dy / s.magnitude;
        }
    });
    return field;
}

std::vector<FailureVector> trajectory(const FlowMap& f, const FailureVector& start,
                                      int max_level) {
    if (max_level < 0) {
        throw std::invalid_argument("trajectory length must be non-negative");
    }
    std::vector<double> x = start.aligned(f.variables());
    std::vector<FailureVector> orbit{FailureVector(f.variables(), x)};
    for (int l = 0; l < max_level; ++l) {
        const bool settled = std::all_of(x.begin(), x.end(), [](double v) { return v < 1e-12; });
        const bool escaped = std::any_of(x.begin(), x.end(), [](double v) { return v > 1 - 1e-12; });
        if (settled || escaped) {
            break;
        }
        f.step(x, x);
        orbit.emplace_back(f.variables(), x);
    }
    return orbit;
}

Region Region::unit(std::size_t dimension) {
    return Region{std::vector<std::pair<double, double>>(dimension, {0.0, 1.0})};
}

std::vector<FailureVector> fixed_points(const FlowMap& f, const Region& region,
                                        const FixedPointOptions& options) {
    const std::size_t n = f.dimension();
    if (region.bounds.size() != n) {
        throw std::invalid_argument("region needs one interval per location");
    }
    if (n == 0) {
        return {};
    }
    std::size_t per = std::max<std::size_t>(options.seeds_per_axis, 2);
    while (per > 2 && std::pow(static_cast<double>(per), static_cast<double>(n)) >
                          static_cast<double>(options.max_seeds)) {
        --per;
    }
    std::size_t seeds = 1;
    for (std::size_t i = 0; i < n; ++i) {
        seeds *= per;
    }
    const auto jac = f.jacobian_polynomials();

    std::vector<std::vector<double>> found;
    std::vector<double> x(n), gx(n), rhs(n);
    for (std::size_t s = 0; s < seeds; ++s) {
        std::size_t rest = s;
        for (std::size_t i = 0; i < n; ++i) {
            const auto [lo, hi] = region.bounds[i];
            x[i] = lo + (hi - lo) * static_cast<double>(rest % per) / (per - 1);
            rest /= per;
        }
        bool ok = false;
        for (int it = 0; it < options.max_newton_steps; ++it) {
            f.apply(x, gx);
            for (std::size_t i = 0; i < n; ++i) {
                rhs[i] = gx[i] - x[i];
            }
            if (max_abs(rhs) < 1e-15) {
                ok = true;
                break;
            }
            Matrix a(n, std::vector<double>(n));
            for (std::size_t i = 0; i < n; ++i) {
                for (std::size_t j = 0; j < n; ++j) {
                    a[i][j] = jac[i][j].eval(x) - (i == j ? 1.0 : 0.0);
                }
            }
            if (!solve(std::move(a), rhs)) {
                break;
            }
            for (std::size_t i = 0; i < n; ++i) {
                x[i] -= rhs[i];
            }
            if (!std::all_of(x.begin(), x.end(), [](double v) { return std::isfinite(v); }) ||
                max_abs(x) > 1e6) {
                break;
            }
            if (max_abs(rhs) < 1e-15 * (1.0 + max_abs(x))) {
                ok = true;
                break;
            }
        }
        if (!ok) {
            continue;
        }
        bool inside = true;
        for (std::size_t i = 0; i < n && inside; ++i) {
            const auto [lo, hi] = region.bounds[i];
            if (x[i] < lo - options.region_slack || x[i] > hi + options.region_slack) {
                inside = false;
            }
            x[i] = std::clamp(x[i], lo, hi);
        }
        if (!inside) {
            continue;
        }
        f.apply(x, gx);
        double residual = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            residual = std::max(residual, std::abs(gx[i] - x[i]));
        }
        if (residual >= options.residual_tol) {
            continue;
        }
        const bool duplicate = std::any_of(found.begin(), found.end(), [&](const auto& y) {
            for (std::size_t i = 0; i < n; ++i) {
                if (std::abs(y[i] - x[i]) > options.dedupe_distance) {
                    return false;
                }
            }
            return true;
        });
        if (!duplicate) {
            found.push_back(x);
        }
    }
    std::sort(found.begin(), found.end());
    std::vector<FailureVector> out;
    for (auto& y : found) {
        for (double& v : y) {
            if (v == 0.0) {
                v = 0.0;  // drop negative zero
            }
        }
        out.emplace_back(f.variables(), y);
    }
    return out;
}

std::string_view to_string(ThresholdClass c) {
    switch (c) {
        case ThresholdClass::below:
            return "below";
        case ThresholdClass::above:
            return "above";
        case ThresholdClass::undetermined:
            break;
    }
    return "undetermined";
}

ThresholdClass classify_point(const FlowMap& f, std::span<const double> x0,
                              const ConvergenceOptions& options) {
    std::vector<double> x(x0.begin(), x0.end());
    std::vector<double> y(x.size());
    for (int level = 0;; ++level) {
        if (std::all_of(x.begin(), x.end(), [&](double v) { return v < options.epsilon; })) {
            return ThresholdClass::below;
        }
        if (std::any_of(x.begin(), x.end(), [&](double v) { return v > options.escape; })) {
            return ThresholdClass::above;
        }
        if (level == options.max_level) {
            return ThresholdClass::undetermined;
        }
        try {
            f.step(x, y);
        } catch (const NegativeProbabilityError&) {
            return ThresholdClass::undetermined;
        }
        if (!std::all_of(y.begin(), y.end(), [](double v) { return std::isfinite(v); })) {
            return ThresholdClass::above;
        }
        double moved = 0.0;
        for (std::size_t i = 0; i < x.size(); ++i) {
            moved = std::max(moved, std::abs(y[i] - x[i]));
        }
        if (moved < options.stall) {
            return ThresholdClass::above;
        }
        std::swap(x, y);
    }
}

bool below_threshold(const FlowMap& f, const FailureVector& x, const ConvergenceOptions& options) {
    const auto v = x.aligned(f.variables());
    return classify_point(f, v, options) == ThresholdClass::below;
}

ThresholdSetReport threshold_set(const FlowMap& f, const ThresholdSlice& slice,
                                 std::size_t resolution, const ConvergenceOptions& options,
                                 unsigned threads) {
    if (resolution < 2) {
        throw std::invalid_argument("threshold set needs a resolution of at least 2");
    }
    const std::size_t ix = f.index_of(slice.x_var);
    const std::size_t iy = f.index_of(slice.y_var);
    if (ix == iy) {
        throw std::invalid_argument("threshold slice needs two distinct locations");
    }
    if (!(slice.x_lo >= 0.0 && slice.x_hi > slice.x_lo && slice.y_lo >= 0.0 &&
          slice.y_hi > slice.y_lo)) {
        throw std::invalid_argument("threshold slice needs 0 <= lo < hi on both axes");
    }
    const std::vector<double> base = base_point(f, slice.fixed);

    ThresholdSetReport r;
    r.slice = slice;
    r.resolution = resolution;
    r.xs = lin_space(slice.x_lo, slice.x_hi, resolution);
    r.ys = lin_space(slice.y_lo, slice.y_hi, resolution);
    r.x_step = (slice.x_hi - slice.x_lo) / (resolution - 1);
    r.y_step = (slice.y_hi - slice.y_lo) / (resolution - 1);
    const std::size_t nx = r.xs.size();
    r.classes.assign(nx * r.ys.size(), ThresholdClass::undetermined);
    parallel_for(r.classes.size(), resolve_thread_count(threads), [&](std::size_t idx) {
        std::vector<double> p = base;
        p[ix] = r.xs[idx % nx];
        p[iy] = r.ys[idx / nx];
        r.classes[idx] = classify_point(f, p, options);
    });
    for (auto c : r.classes) {
        (c == ThresholdClass::below ? r.below_count
                                    : c == ThresholdClass::above ? r.above_count
                                                                 : r.undetermined_count)++;
    }

    if (slice.x_lo == 0.0 && slice.y_lo == 0.0) {
        std::vector<double> edges = r.xs;
        edges.insert(edges.end(), r.ys.begin(), r.ys.end());
        std::sort(edges.begin(), edges.end());
        edges.erase(std::unique(edges.begin(), edges.end()), edges.end());
        for (double e : edges) {
            bool all = true;
            for (std::size_t j = 0; j < r.ys.size() && r.ys[j] <= e && all; ++j) {
                for (std::size_t i = 0; i < nx && r.xs[i] <= e; ++i) {
                    if (r.at(i, j) != ThresholdClass::below) {
                        all = false;
                        break;
                    }
                }
            }
            if (!all) {
                break;
            }
            r.largest_cube_edge = e;
        }
        for (std::size_t j = 0; j < r.ys.size(); j += 2) {
            for (std::size_t i = 0; i < nx; i += 2) {
                if (r.at(i, j) == ThresholdClass::below) {
                    ++r.ray_checks;
                    if (r.at(i / 2, j / 2) != ThresholdClass::below) {
                        ++r.ray_violations;
                    }
                }
            }
        }
    }

    for (const auto& chain : boundary_chains(r)) {
        Polyline line;
        for (const auto& k : chain) {
            line.emplace_back(slice.x_lo + 0.5 * static_cast<double>(k.x) * r.x_step,
                              slice.y_lo + 0.5 * static_cast<double>(k.y) * r.y_step);
        }
        r.boundary.push_back(std::move(line));
    }

    std::vector<Key> below;
    for (std::size_t j = 0; j < r.ys.size(); ++j) {
        for (std::size_t i = 0; i < nx; ++i) {
            if (r.at(i, j) == ThresholdClass::below) {
                below.push_back({static_cast<long>(i), static_cast<long>(j)});
            }
        }
    }
    const auto hull = convex_hull(below);
    if (hull.size() >= 3) {
        std::size_t inside = 0;
        for (std::size_t j = 0; j < r.ys.size(); ++j) {
            for (std::size_t i = 0; i < nx; ++i) {
                const Key p{static_cast<long>(i), static_cast<long>(j)};
                bool in = true;
                for (std::size_t h = 0; h < hull.size() && in; ++h) {
                    in = cross(hull[h], hull[(h + 1) % hull.size()], p) >= 0;
                }
                inside += in ? 1 : 0;
            }
        }
        r.hull_mismatch =
            inside == 0 ? 0.0 : static_cast<double>(inside - r.below_count) / inside;
    }
    return r;
}

AxisBound axis_upper_bound(const FlowMap& f, const ScanOptions& scan) {
    AxisBound out;
    for (const auto& loc : f.variables()) {
        out.per_axis.push_back(pseudothreshold(f, loc, axis(f.variables(), loc), 1, scan));
        const auto& r = out.per_axis.back();
        if (r.found && (!out.found || r.value < out.value)) {
            out.found = true;
            out.value = r.value;
            out.location = loc;
        }
    }
    return out;
}

CubeEstimate largest_cube_edge(const FlowMap& f, const GammaGrid& grid,
                               const ConvergenceOptions& options, std::size_t validation_samples,
                               std::uint64_t seed) {
    const std::size_t n = f.dimension();
    std::vector<double> edges;
    for (double e : grid.points()) {
        if (e > 0.0) {
            edges.push_back(e);
        }
    }
    CubeEstimate out;
    if (edges.empty()) {
        return out;
    }
    std::size_t good = 0;  // number of leading grid values whose corner is below
    for (; good < edges.size(); ++good) {
        const std::vector<double> corner(n, edges[good]);
        if (classify_point(f, corner, options) != ThresholdClass::below) {
            break;
        }
    }
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    std::vector<double> p(n);
    while (good > 0) {
        const double e = edges[good - 1];
        bool clean = true;
        // All 2^n cube corners first, then random interior points.
        const std::size_t corners = n < 16 ? (std::size_t{1} << n) : 0;
        for (std::size_t c = 0; c < corners + validation_samples && clean; ++c) {
            for (std::size_t i = 0; i < n; ++i) {
                p[i] = c < corners ? ((c >> i) & 1U ? e : 0.0) : e * unit(rng);
            }
            ++out.samples_checked;
            if (classify_point(f, p, options) != ThresholdClass::below) {
                ++out.violations;
                clean = false;
            }
        }
        if (clean) {
            break;
        }
        --good;
    }
    out.edge = good > 0 ? edges[good - 1] : 0.0;
    out.resolution = good < edges.size() ? edges[good] - out.edge : 0.0;
    return out;
}

ConjectureCheck conjecture_check(const FlowMap& f, std::size_t resolution,
                                 const ConvergenceOptions& options, unsigned threads) {
    ConjectureCheck out;
    out.bound = axis_upper_bound(f);
    const double hi = out.bound.found ? std::min(1.0, 1.5 * out.bound.value) : 1.0;
    if (f.dimension() == 2) {
        ThresholdSlice slice;
        slice.x_var = f.variables()[0];
        slice.y_var = f.variables()[1];
        slice.x_hi = hi;
        slice.y_hi = hi;
        const auto r = threshold_set(f, slice, resolution, options, threads);
        out.cube_edge = r.largest_cube_edge;
        out.resolution = r.x_step;
    } else {
        const auto c = largest_cube_edge(f, GammaGrid{0.0, hi, resolution, false}, options);
        out.cube_edge = c.edge;
        out.resolution = c.resolution;
    }
    std::ostringstream os;
    os.precision(10);
    if (!out.bound.found) {
        out.holds = true;
        os << "no axis pseudothreshold in the scan range; cube edge " << out.cube_edge;
    } else {
        out.holds = out.cube_edge <= out.bound.value + out.resolution;
        os << "cube edge " << out.cube_edge << " (grid step " << out.resolution << ") "
           << (out.holds ? "<=" : "EXCEEDS") << " axis bound " << out.bound.value << " on '"
           << out.bound.location << "'";
    }
    out.finding = os.str();
    return out;
}

LowOrderBound low_order_bound(const FlowMap& f,
                              const std::vector<std::pair<std::string, std::uint32_t>>& degrees,
                              TruncationMode mode) {
    std::vector<Polynomial> comps;
    for (std::size_t i = 0; i < f.dimension(); ++i) {
        const auto& name = f.variables()[i];
        const auto it = std::find_if(degrees.begin(), degrees.end(),
                                     [&](const auto& d) { return d.first == name; });
        if (it == degrees.end()) {
            throw std::invalid_argument("no truncation degree for location '" + name + "'");
        }
        comps.push_back(f.component(i).truncated(it->second, mode));
    }
    LowOrderBound out;
    out.truncated = FlowMap(f.variables(), std::move(comps));

    const std::vector<std::string> g{"g"};
    const std::vector<Polynomial> diag(f.dimension(), Polynomial::variable(g, "g"));
    for (std::size_t i = 0; i < f.dimension(); ++i) {
        const Polynomial q = out.truncated.component(i).substitute(diag);
        out.diagonal.push_back(q);
        // r(g) = (q(g) - g) / g when q(0) = 0, else q(g) - g.
        Polynomial r = q - Polynomial::variable(g, "g");
        if (r.coefficient(Exponents{0}).is_zero()) {
            Polynomial shifted(g);
            for (const auto& [e, c] : r.terms()) {
                shifted.add_term(Exponents{e[0] - 1}, c);
            }
            r = shifted;
        }
        std::optional<double> root;
        std::optional<Rational> exact;
        if (r.is_exact() && r.total_degree() == 1) {
            const Rational a0 = r.coefficient(Exponents{0}).exact();
            const Rational a1 = r.coefficient(Exponents{1}).exact();
            const Rational x = -a0 / a1;
            if (x > 0) {
                exact = x;
                root = x.convert_to<double>();
            }
        } else if (!r.is_zero() && r.total_degree() >= 1) {
            const auto gs = log_space(1e-12, 1.0, 2000);
            auto h = [&](double x) { return r.eval(std::span<const double>(&x, 1)); };
            double prev = h(gs[0]);
            for (std::size_t k = 1; k < gs.size() && !root; ++k) {
                const double cur = h(gs[k]);
                if (cur == 0.0) {
                    root = gs[k];
                } else if ((prev < 0.0) != (cur < 0.0)) {
                    double lo = gs[k - 1];
                    double hi = gs[k];
                    const bool rising = prev < 0.0;
                    for (int it = 0; it < 200 && hi - lo > 1e-15 * hi; ++it) {
                        const double mid = 0.5 * (lo + hi);
                        ((h(mid) < 0.0) == rising ? lo : hi) = mid;
                    }
                    root = 0.5 * (lo + hi);
                }
                prev = cur;
            }
        }
        out.least_root.push_back(root);
        if (root && (std::isnan(out.bound) || *root < out.bound)) {
            out.bound = *root;
            out.location = f.variables()[i];
            out.exact = exact;
        }
    }
    return out;
}

LowOrderBound low_order_bound(const FlowMap& f, std::uint32_t degree, TruncationMode mode) {
    std::vector<std::pair<std::string, std::uint32_t>> degrees;
    for (const auto& v : f.variables()) {
        degrees.emplace_back(v, degree);
    }
    return low_order_bound(f, degrees, mode);
}

}  // namespace flowmap
