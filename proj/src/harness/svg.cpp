#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <sstream>

#include "sinkflow/harness.hpp"

namespace sinkflow::harness {

namespace {

constexpr double kWidth = 640.0, kHeight = 400.0;
constexpr double kLeft = 70.0, kRight = 20.0, kTop = 40.0, kBottom = 50.0;
const char* const kColors[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b"};

std::string fmt(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.3f", v);
    return buf;
}

std::string label(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.3g", v);
    return buf;
}

std::string escape(const std::string& s) {
    std::string out;
    for (char ch : s) {
        if (ch == '<') out += "&lt;";
        else if (ch == '>') out += "&gt;";
        else if (ch == '&') out += "&amp;";
        else out += ch;
    }
    return out;
}

struct Axis {
    bool log;
    double lo, hi;
    double map(double v) const { return log ? std::log10(v) : v; }
    double frac(double v) const { return hi > lo ? (map(v) - lo) / (hi - lo) : 0.5; }
};

Axis make_axis(const std::vector<Series>& t, bool log, bool is_x) {
    double lo = std::numeric_limits<double>::infinity(), hi = -lo;
    for (const auto& s : t)
        for (double v : is_x ? s.x : s.y) {
            if (!std::isfinite(v) || (log && v <= 0.0)) continue;
            const double m = log ? std::log10(v) : v;
            lo = std::min(lo, m);
            hi = std::max(hi, m);
        }
    if (!(lo <= hi)) lo = 0.0, hi = 1.0;
    if (log) {
        lo = std::floor(lo);
        hi = std::ceil(hi);
        if (hi == lo) hi = lo + 1.0;
    } else if (hi == lo) {
        lo -= 0.5;
        hi += 0.5;
    }
    return {log, lo, hi};
}

}  // namespace

std::string emit_svg(const std::vector<Series>& table, const AxesSpec& axes) {
    bool any = false;
    for (const auto& s : table) {
        if (s.x.size() != s.y.size()) throw EmptyTable("series '" + s.name + "' has mismatched columns");
        any = any || !s.x.empty();
    }
    if (!any) throw EmptyTable("emit_svg needs at least one point");

    const Axis ax = make_axis(table, axes.log_x, true);
    const Axis ay = make_axis(table, axes.log_y, false);
    const double pw = kWidth - kLeft - kRight, ph = kHeight - kTop - kBottom;
    auto px = [&](double v) { return kLeft + ax.frac(v) * pw; };
    auto py = [&](double v) { return kTop + (1.0 - ay.frac(v)) * ph; };

    std::ostringstream os;
    os << "<svg xmlns=\"http://www.w3.org/2000/svg\" viewBox=\"0 0 640 400\" width=\"640\" height=\"400\">\n";
    os << "<rect x=\"0\" y=\"0\" width=\"640\" height=\"400\" fill=\"white\"/>\n";
    os << "<text x=\"320.000\" y=\"24.000\" text-anchor=\"middle\" font-size=\"14\">" << escape(axes.title)
       << "</text>\n";

    auto grid = [&](const Axis& a, bool vertical) {
        std::vector<double> ticks;
        if (a.log) {
            for (double d = a.lo; d <= a.hi + 1e-9; d += 1.0) ticks.push_back(std::pow(10.0, d));
        } else {
            for (int k = 0; k <= 4; ++k) ticks.push_back(a.lo + (a.hi - a.lo) * k / 4.0);
        }
        for (double t : ticks) {
            if (vertical) {
                const double x = px(t);
                os << "<line x1=\"" << fmt(x) << "\" y1=\"" << fmt(kTop) << "\" x2=\"" << fmt(x)
                   << "\" y2=\"" << fmt(kTop + ph) << "\" stroke=\"#dddddd\"/>\n";
                os << "<text x=\"" << fmt(x) << "\" y=\"" << fmt(kTop + ph + 16.0)
                   << "\" text-anchor=\"middle\" font-size=\"10\">" << label(t) << "</text>\n";
            } else {
                const double y = py(t);
                os << "<line x1=\"" << fmt(kLeft) << "\" y1=\"" << fmt(y) << "\" x2=\"" << fmt(kLeft + pw)
                   << "\" y2=\"" << fmt(y) << "\" stroke=\"#dddddd\"/>\n";
                os << "<text x=\"" << fmt(kLeft - 6.0) << "\" y=\"" << fmt(y + 3.0)
                   << "\" text-anchor=\"end\" font-size=\"10\">" << label(t) << "</text>\n";
            }
        }
    };
    grid(ax, true);
    grid(ay, false);
    os << "<rect x=\"" << fmt(kLeft) << "\" y=\"" << fmt(kTop) << "\" width=\"" << fmt(pw) << "\" height=\""
       << fmt(ph) << "\" fill=\"none\" stroke=\"black\"/>\n";
    os << "<text x=\"" << fmt(kLeft + pw / 2.0) << "\" y=\"" << fmt(kHeight - 10.0)
       << "\" text-anchor=\"middle\" font-size=\"12\">" << escape(axes.x_label) << "</text>\n";
    os << "<text x=\"14.000\" y=\"" << fmt(kTop + ph / 2.0) << "\" text-anchor=\"middle\" font-size=\"12\" "
       << "transform=\"rotate(-90 14.000 " << fmt(kTop + ph / 2.0) << ")\">" << escape(axes.y_label)
       << "</text>\n";

    for (std::size_t s = 0; s < table.size(); ++s) {
        const auto& ser = table[s];
        const char* color = kColors[s % std::size(kColors)];
        os << "<polyline fill=\"none\" stroke=\"" << color << "\" stroke-width=\"1.5\" points=\"";
        bool first = true;
        for (std::size_t i = 0; i < ser.x.size(); ++i) {
            if (!std::isfinite(ser.x[i]) || !std::isfinite(ser.y[i])) continue;
            if ((ax.log && ser.x[i] <= 0.0) || (ay.log && ser.y[i] <= 0.0)) continue;
            os << (first ? "" : " ") << fmt(px(ser.x[i])) << "," << fmt(py(ser.y[i]));
            first = false;
        }
        os << "\"/>\n";
        os << "<text x=\"" << fmt(kLeft + pw - 4.0) << "\" y=\"" << fmt(kTop + 14.0 + 14.0 * s)
           << "\" text-anchor=\"end\" font-size=\"11\" fill=\"" << color << "\">" << escape(ser.name)
           << "</text>\n";
    }
    os << "</svg>\n";
    return os.str();
}

}  // namespace sinkflow::harness
