#pragma once

#include <cstdint>
#include <functional>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "flowmap/polyflow.hpp"
#include "flowmap/settings.hpp"

namespace flowmap {

inline constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

/// Sample grid written "lo:hi:n" (linear) or "lo:hi:n:log".
struct GammaGrid {
    double lo = 0.0;
    double hi = 0.5;
    std::size_t n = 101;
    bool log = false;

    std::vector<double> points() const;
    static GammaGrid parse(std::string_view text);
    std::string to_string() const;
};

/// Least-root search: log-spaced scan of h(g) = Gamma^L_l(setting(g)) - g
/// on [gamma_min, gamma_max], then bisection of the first sign change.
struct ScanOptions {
    double gamma_min = 1e-9;
    double gamma_max = 0.5;
    std::size_t points = 400;
    /// Bisection stops at this relative bracket width. Tighter than the
    /// 1e-6 needed for the residual check so that level-to-level comparisons
    /// are meaningful at 1e-9.
    double rel_tol = 1e-12;
};

struct PseudothresholdResult {
    std::string location;
    int level = 0;
    std::string setting;
    bool found = false;
    double value = kNaN;
    double lo = kNaN;  ///< final bracket
    double hi = kNaN;
    bool touches_scan_bound = false;
    std::string message;
};

/// Gamma^L_location(setting(gamma)) evaluated by numeric iteration.
double concatenated_value(const FlowMap& f, std::size_t location, std::span<const double> direction,
                          double gamma, int level);

PseudothresholdResult pseudothreshold(const FlowMap& f, std::string_view location,
                                      const Setting& setting, int level,
                                      const ScanOptions& scan = {});

struct AsymptoticThreshold {
    bool converged = false;
    double value = kNaN;
    int level = 0;              ///< level at which successive values agreed
    double previous = kNaN;     ///< pseudothreshold at level - 1
    std::vector<PseudothresholdResult> sequence;
    std::string message;
};

/// Pseudothresholds for L = 1, 2, ... until successive values agree to
/// `rel_tol` or `max_level` is reached.
AsymptoticThreshold asymptotic_location_threshold(const FlowMap& f, std::string_view location,
                                                  const Setting& setting,
                                                  const ScanOptions& scan = {}, int max_level = 40,
                                                  double rel_tol = 1e-6);

/// One reliability curve; the L = 0 identity line is implied.
struct TripCurve {
    std::string location;
    int level = 0;
    std::vector<std::pair<double, double>> samples;  ///< (gamma, Gamma^L_l(g(gamma)))
    std::vector<double> crossings;                   ///< refined roots of value == gamma
};

std::vector<TripCurve> trip_curves(const FlowMap& f, std::string_view location,
                                   const Setting& setting, const std::vector<int>& levels,
                                   const std::vector<double>& gammas, unsigned threads = 1);

/// Vector-valued map on values ordered like `variables`.
using MapEvaluator = std::function<std::vector<double>(std::span<const double>)>;

struct TifdSample {
    double x = 0.0;
    double y = 0.0;
    double dx = 0.0;         ///< raw displacement Gamma(x) - x, projected
    double dy = 0.0;
    double magnitude = 0.0;  ///< |(dx, dy)|
    double ux = 0.0;         ///< unit-length copy for rendering (0 at rest points)
    double uy = 0.0;
};

struct TifdField {
    std::string x_var;
    std::string y_var;
    FailureVector fixed_values;
    std::size_t nx = 0;
    std::size_t ny = 0;
    std::vector<TifdSample> grid;  ///< row-major, y outer
};

TifdField tifd_field(const FlowMap& f, const std::pair<std::string, std::string>& plane,
                     const FailureVector& fixed_values, const GammaGrid& x_grid,
                     const GammaGrid& y_grid, unsigned threads = 1);

TifdField tifd_field(const MapEvaluator& map, const std::vector<std::string>& variables,
                     const std::pair<std::string, std::string>& plane,
                     const FailureVector& fixed_values, const GammaGrid& x_grid,
                     const GammaGrid& y_grid, unsigned threads = 1);

/// Orbit start, Gamma(start), ... up to `max_level` steps; stops once every
/// entry is below 1e-12 or any entry exceeds 1 - 1e-12.
std::vector<FailureVector> trajectory(const FlowMap& f, const FailureVector& start, int max_level);

/// Axis-aligned box, one (lo, hi) per map variable.
struct Region {
    std::vector<std::pair<double, double>> bounds;
    static Region unit(std::size_t dimension);
};

struct FixedPointOptions {
    std::size_t seeds_per_axis = 21;
    std::size_t max_seeds = 20000;
    int max_newton_steps = 100;
    double residual_tol = 1e-10;
    double dedupe_distance = 1e-8;
    double region_slack = 1e-9;
};

/// Newton on Gamma(x) - x from a seed grid over `region`. Seeds that hit a
/// singular Jacobian are skipped. Results are deduplicated and sorted.
std::vector<FailureVector> fixed_points(const FlowMap& f, const Region& region,
                                        const FixedPointOptions& options = {});

enum class ThresholdClass { below, above, undetermined };
std::string_view to_string(ThresholdClass c);

/// "Approaches zero": every entry below epsilon within max_level steps.
/// Escape: any entry above `escape`. An orbit that stalls on a nonzero fixed
/// point (step below `stall`) is also above threshold.
struct ConvergenceOptions {
    double epsilon = 1e-12;
    int max_level = 200;
    double escape = 0.999;
    double stall = 1e-14;
};

ThresholdClass classify_point(const FlowMap& f, std::span<const double> x,
                              const ConvergenceOptions& options = {});
bool below_threshold(const FlowMap& f, const FailureVector& x,
                     const ConvergenceOptions& options = {});

/// Two-variable slice of failure-probability space; other variables take
/// their value from `fixed` (zero when absent).
struct ThresholdSlice {
    std::string x_var;
    std::string y_var;
    double x_lo = 0.0;
    double x_hi = 1.0;
    double y_lo = 0.0;
    double y_hi = 1.0;
    FailureVector fixed;
};

using Polyline = std::vector<std::pair<double, double>>;

struct ThresholdSetReport {
    ThresholdSlice slice;
    std::size_t resolution = 0;
    double x_step = 0.0;
    double y_step = 0.0;
    std::vector<double> xs;
    std::vector<double> ys;
    std::vector<ThresholdClass> classes;  ///< index j * xs.size() + i
    std::vector<Polyline> boundary;
    /// Largest node coordinate e with every node in [0,e]^2 below; the true
    /// supremum lies within one grid step above it.
    double largest_cube_edge = 0.0;
    std::size_t below_count = 0;
    std::size_t above_count = 0;
    std::size_t undetermined_count = 0;
    std::size_t ray_checks = 0;
    std::size_t ray_violations = 0;     ///< below node whose half-way node is not below
    double hull_mismatch = 0.0;         ///< share of nodes inside the hull of T not in T

    ThresholdClass at(std::size_t i, std::size_t j) const { return classes[j * xs.size() + i]; }
};

ThresholdSetReport threshold_set(const FlowMap& f, const ThresholdSlice& slice,
                                 std::size_t resolution, const ConvergenceOptions& options = {},
                                 unsigned threads = 1);

struct AxisBound {
    bool found = false;
    std::string location;
    double value = kNaN;
    std::vector<PseudothresholdResult> per_axis;
};

/// Minimum over locations of the level-1 pseudothreshold in that location's
/// axis setting.
AxisBound axis_upper_bound(const FlowMap& f, const ScanOptions& scan = {});

struct CubeEstimate {
    double edge = 0.0;
    double resolution = 0.0;
    std::size_t samples_checked = 0;
    std::size_t violations = 0;
};

/// Largest cube at the origin inside T for maps of any dimension: scans
/// corners (e, ..., e) on `grid`, then spot-checks random interior points
/// and backs off one grid step per violation.
CubeEstimate largest_cube_edge(const FlowMap& f, const GammaGrid& grid,
                               const ConvergenceOptions& options = {},
                               std::size_t validation_samples = 2000, std::uint64_t seed = 1);

struct ConjectureCheck {
    double cube_edge = 0.0;
    double resolution = 0.0;
    AxisBound bound;
    bool holds = false;
    std::string finding;
};

/// Compares the largest-cube edge against the axis upper bound. A violation
/// is reported in `finding`, never thrown.
ConjectureCheck conjecture_check(const FlowMap& f, std::size_t resolution,
                                 const ConvergenceOptions& options = {}, unsigned threads = 1);

struct LowOrderBound {
    FlowMap truncated;
    std::vector<Polynomial> diagonal;              ///< per component, in one variable "g"
    std::vector<std::optional<double>> least_root; ///< per component
    std::string location;                          ///< component giving the bound
    double bound = kNaN;
    std::optional<Rational> exact;                 ///< set when the root is rational
};

/// Truncates each component to its degree cap, restricts to the diagonal,
/// and returns the least positive fixed point over all components.
LowOrderBound low_order_bound(const FlowMap& f,
                              const std::vector<std::pair<std::string, std::uint32_t>>& degrees,
                              TruncationMode mode = TruncationMode::drop);
LowOrderBound low_order_bound(const FlowMap& f, std::uint32_t degree,
                              TruncationMode mode = TruncationMode::drop);

}  // namespace flowmap
