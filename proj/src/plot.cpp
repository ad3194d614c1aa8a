#include "rfm/plot.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <stdexcept>

namespace rfm {

namespace {

constexpr const char* kPalette[] = {"#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b", "#17becf"};
constexpr double kMarginLeft = 70.0;
constexpr double kMarginRight = 160.0;
constexpr double kMarginTop = 40.0;
constexpr double kMarginBottom = 50.0;

std::string num(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.2f", v);
    return buf;
}

std::string label_num(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%g", v);
    return buf;
}

std::string escape(const std::string& s) {
    std::string out;
    for (char c : s) {
        switch (c) {
            case '&': out += "&amp;"; break;
            case '<': out += "&lt;"; break;
            case '>': out += "&gt;"; break;
            case '"': out += "&quot;"; break;
            default: out += c;
        }
    }
    return out;
}

struct Axis {
    double lo = 0.0;
    double hi = 1.0;
    bool log = false;

    double value(double v) const { return log ? std::log10(v) : v; }
    double frac(double v) const { return (value(v) - value(lo)) / (value(hi) - value(lo)); }
};

std::vector<double> linear_ticks(double lo, double hi) {
    std::vector<double> t;
    for (int i = 0; i <= 5; ++i) t.push_back(lo + (hi - lo) * i / 5.0);
    return t;
}

}  // namespace

std::vector<double> decade_ticks(double lo, double hi) {
    if (!(lo > 0.0) || !(hi >= lo)) throw std::invalid_argument("decade ticks need 0 < lo <= hi");
    int a = static_cast<int>(std::floor(std::log10(lo)));
    int b = static_cast<int>(std::ceil(std::log10(hi)));
    if (b == a) ++b;
    std::vector<double> t;
    for (int e = a; e <= b; ++e) t.push_back(std::pow(10.0, e));
    return t;
}

std::string render_svg(const PlotSpec& spec) {
    if (spec.series.empty()) throw std::invalid_argument("plot needs at least one series");
    double xlo = std::numeric_limits<double>::infinity(), xhi = -xlo;
    double ylo = xlo, yhi = -xlo;
    for (const auto& s : spec.series) {
        if (s.x.empty() || s.x.size() != s.mean.size() || (!s.stddev.empty() && s.stddev.size() != s.x.size())) {
            throw std::invalid_argument("series '" + s.label + "' has mismatched or empty columns");
        }
        for (std::size_t i = 0; i < s.x.size(); ++i) {
            xlo = std::min(xlo, s.x[i]);
            xhi = std::max(xhi, s.x[i]);
            const double sd = s.stddev.empty() ? 0.0 : s.stddev[i];
            const double up = s.mean[i] + sd;
            const double dn = s.mean[i] - sd;
            yhi = std::max(yhi, up);
            if (spec.log_y) {
                if (s.mean[i] > 0.0) ylo = std::min(ylo, dn > 0.0 ? dn : s.mean[i]);
            } else {
                ylo = std::min(ylo, dn);
            }
        }
    }
    if (xhi == xlo) {
        xlo -= 1.0;
        xhi += 1.0;
    }

    std::vector<double> yticks;
    Axis ya;
    ya.log = spec.log_y;
    if (spec.log_y) {
        if (!(ylo > 0.0) || !std::isfinite(ylo)) throw std::invalid_argument("log-scale plot needs positive values");
        yticks = decade_ticks(ylo, yhi);
        ya.lo = yticks.front();
        ya.hi = yticks.back();
    } else {
        if (yhi == ylo) {
            ylo -= 1.0;
            yhi += 1.0;
        }
        const double pad = 0.05 * (yhi - ylo);
        ya.lo = ylo - pad;
        ya.hi = yhi + pad;
        yticks = linear_ticks(ya.lo, ya.hi);
    }
    const Axis xa{xlo, xhi, false};

    const double W = spec.width, H = spec.height;
    const double pw = W - kMarginLeft - kMarginRight;
    const double ph = H - kMarginTop - kMarginBottom;
    auto px = [&](double x) { return kMarginLeft + xa.frac(x) * pw; };
    auto py = [&](double y) {
        if (ya.log) y = std::max(y, ya.lo);
        return kMarginTop + (1.0 - ya.frac(y)) * ph;
    };

    std::string o;
    o += "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" + num(W) + "\" height=\"" + num(H) +
         "\" font-family=\"sans-serif\" font-size=\"12\">\n";
    o += "<rect x=\"0\" y=\"0\" width=\"" + num(W) + "\" height=\"" + num(H) + "\" fill=\"white\"/>\n";
    o += "<text x=\"" + num(kMarginLeft + pw / 2) + "\" y=\"20\" text-anchor=\"middle\" font-size=\"14\">" +
         escape(spec.title) + "</text>\n";

    for (double t : yticks) {
        const double y = py(t);
        o += "<line x1=\"" + num(kMarginLeft) + "\" y1=\"" + num(y) + "\" x2=\"" + num(kMarginLeft + pw) + "\" y2=\"" +
             num(y) + "\" stroke=\"#dddddd\"/>\n";
        o += "<text x=\"" + num(kMarginLeft - 6) + "\" y=\"" + num(y + 4) + "\" text-anchor=\"end\">" +
             label_num(t) + "</text>\n";
    }
    for (double t : linear_ticks(xlo, xhi)) {
        const double x = px(t);
        o += "<line x1=\"" + num(x) + "\" y1=\"" + num(kMarginTop + ph) + "\" x2=\"" + num(x) + "\" y2=\"" +
             num(kMarginTop + ph + 5) + "\" stroke=\"black\"/>\n";
        o += "<text x=\"" + num(x) + "\" y=\"" + num(kMarginTop + ph + 18) + "\" text-anchor=\"middle\">" +
             label_num(t) + "</text>\n";
    }
    o += "<rect x=\"" + num(kMarginLeft) + "\" y=\"" + num(kMarginTop) + "\" width=\"" + num(pw) + "\" height=\"" +
         num(ph) + "\" fill=\"none\" stroke=\"black\"/>\n";
    o += "<text x=\"" + num(kMarginLeft + pw / 2) + "\" y=\"" + num(H - 10) + "\" text-anchor=\"middle\">" +
         escape(spec.x_label) + "</text>\n";
    o += "<text x=\"16\" y=\"" + num(kMarginTop + ph / 2) + "\" text-anchor=\"middle\" transform=\"rotate(-90 16 " +
         num(kMarginTop + ph / 2) + ")\">" + escape(spec.y_label) + "</text>\n";

    for (std::size_t k = 0; k < spec.series.size(); ++k) {
        const auto& s = spec.series[k];
        const char* color = kPalette[k % std::size(kPalette)];
        if (!s.stddev.empty()) {
            std::string pts;
            for (std::size_t i = 0; i < s.x.size(); ++i)
                pts += num(px(s.x[i])) + "," + num(py(s.mean[i] + s.stddev[i])) + " ";
            for (std::size_t i = s.x.size(); i-- > 0;)
                pts += num(px(s.x[i])) + "," + num(py(s.mean[i] - s.stddev[i])) + (i ? " " : "");
            o += "<polygon points=\"" + pts + "\" fill=\"" + color + "\" fill-opacity=\"0.2\" stroke=\"none\"/>\n";
        }
        std::string pts;
        for (std::size_t i = 0; i < s.x.size(); ++i)
            pts += num(px(s.x[i])) + "," + num(py(s.mean[i])) + (i + 1 < s.x.size() ? " " : "");
        o += "<polyline points=\"" + pts + "\" fill=\"none\" stroke=\"" + color + "\" stroke-width=\"2\"/>\n";

        const double ly = kMarginTop + 10 + 18.0 * static_cast<double>(k);
        const double lx = kMarginLeft + pw + 12;
        o += "<line x1=\"" + num(lx) + "\" y1=\"" + num(ly) + "\" x2=\"" + num(lx + 20) + "\" y2=\"" + num(ly) +
             "\" stroke=\"" + color + "\" stroke-width=\"2\"/>\n";
        o += "<text x=\"" + num(lx + 26) + "\" y=\"" + num(ly + 4) + "\">" + escape(s.label) + "</text>\n";
    }
    o += "</svg>\n";
    return o;
}

void write_svg(const std::filesystem::path& path, const PlotSpec& spec) {
    const auto svg = render_svg(spec);
    std::ofstream os(path, std::ios::binary | std::ios::trunc);
    if (!os) throw std::runtime_error("cannot write " + path.string());
    os << svg;
}

}  // namespace rfm
