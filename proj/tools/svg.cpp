#include "svg.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "flowmap/format.hpp"

namespace flowmap::cli {

namespace {

constexpr double kWidth = 640, kHeight = 560;
constexpr double kLeft = 80, kRight = 610, kTop = 40, kBottom = 500;

const char* const kPalette[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd",
                                "#ff7f0e", "#8c564b", "#e377c2", "#17becf"};

std::string escape(const std::string& s) {
    std::string out;
    for (char c : s) {
        switch (c) {
            case '<': out += "&lt;"; break;
            case '>': out += "&gt;"; break;
            case '&': out += "&amp;"; break;
            default: out += c;
        }
    }
    return out;
}

std::vector<double> ticks(double lo, double hi, bool log) {
    std::vector<double> t;
    if (log) {
        for (double e = std::ceil(std::log10(lo) - 1e-9); e <= std::log10(hi) + 1e-9; e += 1.0) {
            t.push_back(std::pow(10.0, e));
        }
        return t;
    }
    const double span = hi - lo;
    const double raw = span / 5.0;
    const double mag = std::pow(10.0, std::floor(std::log10(raw)));
    double step = mag;
    for (double m : {1.0, 2.0, 2.5, 5.0, 10.0}) {
        if (m * mag >= raw) {
            step = m * mag;
            break;
        }
    }
    for (double v = std::ceil(lo / step) * step; v <= hi + step * 1e-9; v += step) {
        t.push_back(std::abs(v) < step * 1e-9 ? 0.0 : v);
    }
    return t;
}

}  // namespace

SvgPlot::SvgPlot(std::string title, std::string x_label, std::string y_label, double x_lo,
                 double x_hi, double y_lo, double y_hi, bool x_log, bool y_log)
    : title_(std::move(title)),
      x_label_(std::move(x_label)),
      y_label_(std::move(y_label)),
      x_lo_(x_lo),
      x_hi_(x_hi),
      y_lo_(y_lo),
      y_hi_(y_hi),
      x_log_(x_log),
      y_log_(y_log) {}

std::string SvgPlot::num(double v) {
    std::ostringstream os;
    os.setf(std::ios::fixed);
    os.precision(2);
    os << v;
    return os.str();
}

double SvgPlot::px(double x) const {
    const double t = x_log_ ? (std::log10(x) - std::log10(x_lo_)) / (std::log10(x_hi_) - std::log10(x_lo_))
                            : (x - x_lo_) / (x_hi_ - x_lo_);
    return kLeft + t * (kRight - kLeft);
}

double SvgPlot::py(double y) const {
    const double t = y_log_ ? (std::log10(y) - std::log10(y_lo_)) / (std::log10(y_hi_) - std::log10(y_lo_))
                            : (y - y_lo_) / (y_hi_ - y_lo_);
    return kBottom - t * (kBottom - kTop);
}

void SvgPlot::line(double x0, double y0, double x1, double y1, const std::string& style) {
    body_ += "<line x1=\"" + num(px(x0)) + "\" y1=\"" + num(py(y0)) + "\" x2=\"" + num(px(x1)) +
             "\" y2=\"" + num(py(y1)) + "\" " + style + "/>\n";
}

void SvgPlot::polyline(const std::vector<std::pair<double, double>>& pts, const std::string& style) {
    std::string d;
    for (const auto& [x, y] : pts) {
        if (!std::isfinite(x) || !std::isfinite(y) || (x_log_ && x <= 0) || (y_log_ && y <= 0)) {
            continue;
        }
        const double cy = std::clamp(py(y), kTop - 5, kBottom + 5);
        d += num(px(x)) + "," + num(cy) + " ";
    }
    if (!d.empty()) {
        d.pop_back();
    }
    body_ += "<polyline fill=\"none\" points=\"" + d + "\" " + style + "/>\n";
}

void SvgPlot::rect(double x0, double y0, double x1, double y1, const std::string& fill) {
    const double left = std::min(px(x0), px(x1));
    const double top = std::min(py(y0), py(y1));
    body_ += "<rect x=\"" + num(left) + "\" y=\"" + num(top) + "\" width=\"" +
             num(std::abs(px(x1) - px(x0))) + "\" height=\"" + num(std::abs(py(y1) - py(y0))) +
             "\" fill=\"" + fill + "\"/>\n";
}

void SvgPlot::circle(double x, double y, double r_px, const std::string& style) {
    body_ += "<circle cx=\"" + num(px(x)) + "\" cy=\"" + num(py(y)) + "\" r=\"" + num(r_px) + "\" " +
             style + "/>\n";
}

void SvgPlot::asterisk(double x, double y, double r_px, const std::string& stroke) {
    const double cx = px(x), cy = py(y);
    for (int k = 0; k < 3; ++k) {
        const double a = k * 3.14159265358979 / 3.0;
        const double dx = r_px * std::cos(a), dy = r_px * std::sin(a);
        body_ += "<line x1=\"" + num(cx - dx) + "\" y1=\"" + num(cy - dy) + "\" x2=\"" +
                 num(cx + dx) + "\" y2=\"" + num(cy + dy) + "\" stroke=\"" + stroke +
                 "\" stroke-width=\"1.5\"/>\n";
    }
}

void SvgPlot::arrow(double x, double y, double ux, double uy, double len_px,
                    const std::string& stroke) {
    const double x0 = px(x), y0 = py(y);
    // Screen y grows downward.
    const double x1 = x0 + ux * len_px, y1 = y0 - uy * len_px;
    const double hx = -ux * len_px * 0.35, hy = uy * len_px * 0.35;
    body_ += "<path d=\"M" + num(x0) + "," + num(y0) + " L" + num(x1) + "," + num(y1) + " M" +
             num(x1 + hx - hy * 0.5) + "," + num(y1 + hy + hx * 0.5) + " L" + num(x1) + "," +
             num(y1) + " L" + num(x1 + hx + hy * 0.5) + "," + num(y1 + hy - hx * 0.5) +
             "\" fill=\"none\" stroke=\"" + stroke + "\" stroke-width=\"1\"/>\n";
}

void SvgPlot::legend(const std::string& text, const std::string& stroke) {
    const double y = kTop + 15 + 16 * legend_rows_++;
    body_ += "<line x1=\"" + num(kLeft + 10) + "\" y1=\"" + num(y - 4) + "\" x2=\"" +
             num(kLeft + 30) + "\" y2=\"" + num(y - 4) + "\" stroke=\"" + stroke +
             "\" stroke-width=\"2\"/>\n<text x=\"" + num(kLeft + 36) + "\" y=\"" + num(y) +
             "\" font-size=\"12\">" + escape(text) + "</text>\n";
}

std::string SvgPlot::str() const {
    std::ostringstream os;
    os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << kWidth << "\" height=\"" << kHeight
       << "\" font-family=\"sans-serif\">\n";
    os << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
    os << "<text x=\"" << kWidth / 2 << "\" y=\"24\" text-anchor=\"middle\" font-size=\"15\">"
       << escape(title_) << "</text>\n";
    os << "<defs><clipPath id=\"plot\"><rect x=\"" << kLeft << "\" y=\"" << kTop << "\" width=\""
       << kRight - kLeft << "\" height=\"" << kBottom - kTop << "\"/></clipPath></defs>\n";
    os << "<g clip-path=\"url(#plot)\">\n" << body_ << "</g>\n";
    os << "<rect x=\"" << kLeft << "\" y=\"" << kTop << "\" width=\"" << kRight - kLeft
       << "\" height=\"" << kBottom - kTop << "\" fill=\"none\" stroke=\"black\"/>\n";
    for (double t : ticks(x_lo_, x_hi_, x_log_)) {
        os << "<line x1=\"" << num(px(t)) << "\" y1=\"" << kBottom << "\" x2=\"" << num(px(t))
           << "\" y2=\"" << kBottom + 5 << "\" stroke=\"black\"/><text x=\"" << num(px(t))
           << "\" y=\"" << kBottom + 19 << "\" text-anchor=\"middle\" font-size=\"11\">"
           << format_double(t) << "</text>\n";
    }
    for (double t : ticks(y_lo_, y_hi_, y_log_)) {
        os << "<line x1=\"" << kLeft - 5 << "\" y1=\"" << num(py(t)) << "\" x2=\"" << kLeft
           << "\" y2=\"" << num(py(t)) << "\" stroke=\"black\"/><text x=\"" << kLeft - 8
           << "\" y=\"" << num(py(t) + 4) << "\" text-anchor=\"end\" font-size=\"11\">"
           << format_double(t) << "</text>\n";
    }
    os << "<text x=\"" << (kLeft + kRight) / 2 << "\" y=\"" << kHeight - 20
       << "\" text-anchor=\"middle\" font-size=\"13\">" << escape(x_label_) << "</text>\n";
    os << "<text x=\"18\" y=\"" << (kTop + kBottom) / 2 << "\" text-anchor=\"middle\" font-size=\"13\""
       << " transform=\"rotate(-90 18 " << (kTop + kBottom) / 2 << ")\">" << escape(y_label_)
       << "</text>\n";
    os << "</svg>\n";
    return os.str();
}

std::string trip_svg(const std::vector<TripCurve>& curves, const std::string& title, bool log_axes,
                     double asymptotic) {
    double lo = 1.0, hi = 0.0;
    for (const auto& c : curves) {
        for (const auto& s : c.samples) {
            if (!log_axes || s.first > 0) {
                lo = std::min(lo, s.first);
                hi = std::max(hi, s.first);
            }
        }
    }
    if (!(hi > lo)) {
        lo = log_axes ? 1e-6 : 0.0;
        hi = log_axes ? 1e-1 : 0.5;
    }
    SvgPlot plot(title, "gamma", "failure probability", lo, hi, lo, hi, log_axes, log_axes);
    plot.line(lo, lo, hi, hi, "stroke=\"black\" stroke-dasharray=\"5,4\"");
    plot.legend("L=0", "black");
    std::size_t k = 0;
    for (const auto& c : curves) {
        const std::string color = kPalette[k++ % std::size(kPalette)];
        plot.polyline(c.samples, "stroke=\"" + color + "\" stroke-width=\"1.8\"");
        plot.legend(c.location + " L=" + std::to_string(c.level), color);
        for (double x : c.crossings) {
            plot.circle(x, x, 4.5, "fill=\"none\" stroke=\"" + color + "\" stroke-width=\"1.5\"");
        }
    }
    if (std::isfinite(asymptotic)) {
        plot.asterisk(asymptotic, asymptotic, 7, "black");
    }
    return plot.str();
}

std::string tifd_svg(const TifdField& field) {
    double xlo = 1e300, xhi = -1e300, ylo = 1e300, yhi = -1e300;
    for (const auto& s : field.grid) {
        xlo = std::min(xlo, s.x);
        xhi = std::max(xhi, s.x);
        ylo = std::min(ylo, s.y);
        yhi = std::max(yhi, s.y);
    }
    const double padx = (xhi - xlo) / std::max<std::size_t>(field.nx, 2) * 0.5;
    const double pady = (yhi - ylo) / std::max<std::size_t>(field.ny, 2) * 0.5;
    SvgPlot plot("TIFD " + field.x_var + "," + field.y_var, field.x_var, field.y_var, xlo - padx,
                 xhi + padx, ylo - pady, yhi + pady);
    const double cell = std::min((kRight - kLeft) / std::max<std::size_t>(field.nx, 1),
                                 (kBottom - kTop) / std::max<std::size_t>(field.ny, 1));
    for (const auto& s : field.grid) {
        if (s.magnitude == 0.0) {
            plot.circle(s.x, s.y, 2, "fill=\"black\"");
            continue;
        }
        plot.arrow(s.x, s.y, s.ux, s.uy, cell * 0.8, "#1f77b4");
    }
    return plot.str();
}

std::string threshold_svg(const ThresholdSetReport& r) {
    const auto& s = r.slice;
    SvgPlot plot("threshold set " + s.x_var + "," + s.y_var, s.x_var, s.y_var, s.x_lo, s.x_hi,
                 s.y_lo, s.y_hi);
    const double hx = r.x_step / 2, hy = r.y_step / 2;
    for (std::size_t j = 0; j < r.ys.size(); ++j) {
        for (std::size_t i = 0; i < r.xs.size(); ++i) {
            const auto c = r.at(i, j);
            if (c == ThresholdClass::above) {
                continue;
            }
            plot.rect(r.xs[i] - hx, r.ys[j] - hy, r.xs[i] + hx, r.ys[j] + hy,
                      c == ThresholdClass::below ? "#c6dbef" : "#fdd0a2");
        }
    }
    for (const auto& poly : r.boundary) {
        plot.polyline(poly, "stroke=\"#08306b\" stroke-width=\"1.5\"");
    }
    const double e = r.largest_cube_edge;
    plot.polyline({{s.x_lo, e}, {e, e}, {e, s.y_lo}}, "stroke=\"#d62728\" stroke-dasharray=\"4,3\"");
    plot.legend("boundary of T", "#08306b");
    plot.legend("largest cube, edge " + format_double(e), "#d62728");
    return plot.str();
}

}  // namespace flowmap::cli
