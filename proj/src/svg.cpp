#include <srgp/svg.hpp>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <sstream>

namespace srgp::svg {

namespace {

const char* kPalette[] = {"#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b", "#e377c2", "#7f7f7f"};

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

std::string fmt(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.3g", v);
    return buf;
}

std::string coord(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.2f", v);
    return buf;
}

}  // namespace

std::string line_plot(const std::vector<Series>& series, const PlotOptions& opt) {
    const double left = 70, right = 160, top = 40, bottom = 50;
    const double pw = opt.width - left - right;
    const double ph = opt.height - top - bottom;

    auto usable = [&](double x, double y) { return std::isfinite(x) && std::isfinite(y) && (!opt.log_y || y > 0.0); };
    auto ty = [&](double y) { return opt.log_y ? std::log10(y) : y; };

    double xmin = std::numeric_limits<double>::infinity(), xmax = -xmin, ymin = xmin, ymax = -xmin;
    for (const auto& s : series)
        for (std::size_t i = 0; i < std::min(s.x.size(), s.y.size()); ++i) {
            if (!usable(s.x[i], s.y[i])) continue;
            xmin = std::min(xmin, s.x[i]);
            xmax = std::max(xmax, s.x[i]);
            ymin = std::min(ymin, ty(s.y[i]));
            ymax = std::max(ymax, ty(s.y[i]));
        }
    if (!std::isfinite(xmin)) {
        xmin = 0;
        xmax = 1;
        ymin = 0;
        ymax = 1;
    }
    if (xmax == xmin) xmax = xmin + 1;
    if (ymax == ymin) ymax = ymin + 1;
    if (!opt.log_y && ymin > 0) ymin = 0;

    auto px = [&](double x) { return left + (x - xmin) / (xmax - xmin) * pw; };
    auto py = [&](double y) { return top + ph - (ty(y) - ymin) / (ymax - ymin) * ph; };

    std::ostringstream os;
    os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << opt.width << "\" height=\"" << opt.height
       << "\" font-family=\"sans-serif\" font-size=\"12\">\n";
    os << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
    os << "<text x=\"" << opt.width / 2 << "\" y=\"22\" text-anchor=\"middle\" font-size=\"15\">" << escape(opt.title)
       << "</text>\n";
    os << "<rect x=\"" << left << "\" y=\"" << top << "\" width=\"" << pw << "\" height=\"" << ph
       << "\" fill=\"none\" stroke=\"#333\"/>\n";

    constexpr int ticks = 5;
    for (int i = 0; i <= ticks; ++i) {
        const double fx = xmin + (xmax - xmin) * i / ticks;
        const double X = left + pw * i / ticks;
        os << "<line x1=\"" << coord(X) << "\" y1=\"" << top + ph << "\" x2=\"" << coord(X) << "\" y2=\""
           << top + ph + 5 << "\" stroke=\"#333\"/>";
        os << "<text x=\"" << coord(X) << "\" y=\"" << top + ph + 18 << "\" text-anchor=\"middle\">" << fmt(fx)
           << "</text>\n";
        const double fy = ymin + (ymax - ymin) * i / ticks;
        const double Y = top + ph - ph * i / ticks;
        os << "<line x1=\"" << left - 5 << "\" y1=\"" << coord(Y) << "\" x2=\"" << left + pw << "\" y2=\""
           << coord(Y) << "\" stroke=\"#ddd\"/>";
        os << "<text x=\"" << left - 8 << "\" y=\"" << coord(Y + 4) << "\" text-anchor=\"end\">"
           << fmt(opt.log_y ? std::pow(10.0, fy) : fy) << "</text>\n";
    }
    os << "<text x=\"" << left + pw / 2 << "\" y=\"" << opt.height - 12 << "\" text-anchor=\"middle\">"
       << escape(opt.x_label) << "</text>\n";
    os << "<text transform=\"translate(16," << top + ph / 2 << ") rotate(-90)\" text-anchor=\"middle\">"
       << escape(opt.y_label) << (opt.log_y ? " (log)" : "") << "</text>\n";

    for (std::size_t s = 0; s < series.size(); ++s) {
        const char* color = kPalette[s % (sizeof kPalette / sizeof *kPalette)];
        os << "<polyline fill=\"none\" stroke=\"" << color << "\" stroke-width=\"1.8\" points=\"";
        const auto& sr = series[s];
        for (std::size_t i = 0; i < std::min(sr.x.size(), sr.y.size()); ++i)
            if (usable(sr.x[i], sr.y[i])) os << coord(px(sr.x[i])) << ',' << coord(py(sr.y[i])) << ' ';
        os << "\"/>\n";
        const double ly = top + 14 + 18.0 * static_cast<double>(s);
        os << "<line x1=\"" << left + pw + 12 << "\" y1=\"" << ly << "\" x2=\"" << left + pw + 36 << "\" y2=\"" << ly
           << "\" stroke=\"" << color << "\" stroke-width=\"3\"/>";
        os << "<text x=\"" << left + pw + 42 << "\" y=\"" << ly + 4 << "\">" << escape(sr.name) << "</text>\n";
    }
    os << "</svg>\n";
    return os.str();
}

}  // namespace srgp::svg
