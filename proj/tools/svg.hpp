#pragma once

#include <string>
#include <utility>
#include <vector>

#include "flowmap/analysis.hpp"

namespace flowmap::cli {

/// Hand-written SVG for a square plot area with linear or log axes.
class SvgPlot {
public:
    SvgPlot(std::string title, std::string x_label, std::string y_label, double x_lo, double x_hi,
            double y_lo, double y_hi, bool x_log = false, bool y_log = false);

    void line(double x0, double y0, double x1, double y1, const std::string& style);
    void polyline(const std::vector<std::pair<double, double>>& pts, const std::string& style);
    void rect(double x0, double y0, double x1, double y1, const std::string& fill);
    void circle(double x, double y, double r_px, const std::string& style);
    void asterisk(double x, double y, double r_px, const std::string& stroke);
    /// Arrow from (x, y) along a pixel-space direction.
    void arrow(double x, double y, double ux, double uy, double len_px, const std::string& stroke);
    void legend(const std::string& text, const std::string& stroke);

    std::string str() const;

private:
    double px(double x) const;
    double py(double y) const;
    static std::string num(double v);

    std::string title_, x_label_, y_label_;
    double x_lo_, x_hi_, y_lo_, y_hi_;
    bool x_log_, y_log_;
    std::string body_;
    int legend_rows_ = 0;
};

std::string trip_svg(const std::vector<TripCurve>& curves, const std::string& title, bool log_axes,
                     double asymptotic = kNaN);
std::string tifd_svg(const TifdField& field);
std::string threshold_svg(const ThresholdSetReport& report);

}  // namespace flowmap::cli
