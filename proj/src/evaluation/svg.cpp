#include <algorithm>
#include <cmath>
#include <cstdio>
#include <sstream>

#include "carpal/evaluation.hpp"

namespace carpal {

namespace {

std::string fmt(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.2f", v);
    return buf;
}

const char* method_color(Method m) {
    switch (m) {
        case Method::carpal:
        case Method::carpal_acausal: return "#1f77b4";
        case Method::abp:
        case Method::abp_acausal: return "#d62728";
        case Method::vbp: return "#2ca02c";
    }
    return "#000";
}

// Blue to yellow through green.
std::string ramp(double t) {
    t = std::clamp(t, 0.0, 1.0);
    const int r = static_cast<int>(std::lround(68 + t * (253 - 68)));
    const int g = static_cast<int>(std::lround(1 + t * (231 - 1)));
    const int b = static_cast<int>(std::lround(84 + (t < 0.5 ? t * 2 * (140 - 84) : (1 - t) * 2 * (140 - 84) - 47 * (t - 0.5) * 2)));
    char buf[8];
    std::snprintf(buf, sizeof buf, "#%02x%02x%02x", r, g, std::clamp(b, 0, 255));
    return buf;
}

}  // namespace

std::string roc_svg(std::span<const RocCurve> curves) {
    constexpr double size = 400.0, pad = 50.0;
    auto px = [&](double f) { return pad + f * size; };
    auto py = [&](double r) { return pad + (1.0 - r) * size; };
    std::ostringstream s;
    s << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << size + 2 * pad + 140 << "\" height=\""
      << size + 2 * pad << "\" font-family=\"sans-serif\" font-size=\"12\">\n";
    s << "<rect x=\"" << pad << "\" y=\"" << pad << "\" width=\"" << size << "\" height=\"" << size
      << "\" fill=\"none\" stroke=\"#000\"/>\n";
    for (int k = 0; k <= 10; ++k) {
        const double f = k / 10.0;
        s << "<text x=\"" << fmt(px(f)) << "\" y=\"" << fmt(pad + size + 16) << "\" text-anchor=\"middle\">"
          << fmt(f).substr(0, 3) << "</text>\n";
        s << "<text x=\"" << fmt(pad - 6) << "\" y=\"" << fmt(py(f) + 4) << "\" text-anchor=\"end\">"
          << fmt(f).substr(0, 3) << "</text>\n";
    }
    s << "<text x=\"" << fmt(pad + size / 2) << "\" y=\"" << fmt(pad + size + 36)
      << "\" text-anchor=\"middle\">fall-out</text>\n";
    s << "<text x=\"14\" y=\"" << fmt(pad + size / 2) << "\" transform=\"rotate(-90 14 " << fmt(pad + size / 2)
      << ")\" text-anchor=\"middle\">recall</text>\n";
    int row = 0;
    for (const auto& c : curves) {
        const char* color = method_color(c.method);
        const bool dashed = c.method == Method::carpal_acausal || c.method == Method::abp_acausal;
        if (c.method == Method::vbp) {
            for (const auto& p : c.points) {
                if (!p.recall || !p.fallout) continue;
                const double x = px(*p.fallout), y = py(*p.recall);
                s << "<path d=\"M" << fmt(x - 6) << ' ' << fmt(y - 6) << " L" << fmt(x + 6) << ' ' << fmt(y + 6)
                  << " M" << fmt(x - 6) << ' ' << fmt(y + 6) << " L" << fmt(x + 6) << ' ' << fmt(y - 6)
                  << "\" stroke=\"" << color << "\" stroke-width=\"2\"/>\n";
            }
        } else {
            std::vector<std::pair<double, double>> pts;
            for (const auto& p : c.points)
                if (p.recall && p.fallout) pts.emplace_back(*p.fallout, *p.recall);
            std::sort(pts.begin(), pts.end());
            if (!pts.empty()) {
                s << "<polyline fill=\"none\" stroke=\"" << color << "\" stroke-width=\"2\""
                  << (dashed ? " stroke-dasharray=\"6 4\"" : "") << " points=\"";
                for (const auto& [f, r] : pts) s << fmt(px(f)) << ',' << fmt(py(r)) << ' ';
                s << "\"/>\n";
            }
        }
        const double ly = pad + 10 + 18 * row++;
        s << "<line x1=\"" << fmt(pad + size + 15) << "\" y1=\"" << fmt(ly) << "\" x2=\"" << fmt(pad + size + 40)
          << "\" y2=\"" << fmt(ly) << "\" stroke=\"" << color << "\" stroke-width=\"2\""
          << (dashed ? " stroke-dasharray=\"6 4\"" : "") << "/>\n";
        s << "<text x=\"" << fmt(pad + size + 46) << "\" y=\"" << fmt(ly + 4) << "\">" << to_string(c.method)
          << "</text>\n";
    }
    s << "</svg>\n";
    return s.str();
}

std::string utility_svg(const UtilityField& field, const Scene& scene, std::span<const Trajectory> samples,
                        std::span<const Trajectory> plans, const Trajectory* observed) {
    const GridGeometry& g = field.geometry;
    const int stride = std::max(1, static_cast<int>(std::ceil(g.nx / 120.0)));
    const double scale = 8.0;  // px per meter
    const Bounds ext = g.extent();
    const double w = ext.width() * scale, h = ext.height() * scale, gap = 24.0;
    std::ostringstream s;
    s << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << fmt(w) << "\" height=\"" << fmt(3 * (h + gap))
      << "\" font-family=\"sans-serif\" font-size=\"12\">\n";
    const char* titles[3] = {"safety", "intention", "combined"};
    auto value = [&](int panel, int i, int j) {
        const auto k = g.index(i, j);
        if (panel == 0) return field.safety()[k];
        if (panel == 1) return field.intention()[k];
        return field.combined_at(i, j);
    };
    for (int panel = 0; panel < 3; ++panel) {
        const double oy = panel * (h + gap) + gap;
        auto X = [&](Vec2 p) { return (p.x - ext.min.x) * scale; };
        auto Y = [&](Vec2 p) { return oy + (ext.max.y - p.y) * scale; };
        double lo = 1e300, hi = -1e300;
        for (int j = 0; j < g.ny; ++j)
            for (int i = 0; i < g.nx; ++i) {
                lo = std::min(lo, value(panel, i, j));
                hi = std::max(hi, value(panel, i, j));
            }
        const double span = hi > lo ? hi - lo : 1.0;
        s << "<text x=\"4\" y=\"" << fmt(oy - 6) << "\">" << titles[panel] << " [" << fmt(lo) << ", " << fmt(hi)
          << "]</text>\n<g shape-rendering=\"crispEdges\">\n";
        const double cell = g.resolution * stride * scale;
        for (int j = 0; j < g.ny; j += stride)
            for (int i = 0; i < g.nx; i += stride) {
                const Vec2 c{g.origin.x + i * g.resolution, g.origin.y + (j + stride) * g.resolution};
                s << "<rect x=\"" << fmt(X(c)) << "\" y=\"" << fmt(Y(c)) << "\" width=\"" << fmt(cell)
                  << "\" height=\"" << fmt(cell) << "\" fill=\"" << ramp((value(panel, i, j) - lo) / span)
                  << "\"/>\n";
            }
        s << "</g>\n";
        for (const auto& o : scene.obstacles) {
            const char* stroke = o.kind == ObstacleKind::augmented ? "#ff00ff" : "#ffffff";
            if (const auto* c = std::get_if<Circle>(&o.shape)) {
                s << "<circle cx=\"" << fmt(X(c->center)) << "\" cy=\"" << fmt(Y(c->center)) << "\" r=\""
                  << fmt(c->radius * scale) << "\" fill=\"none\" stroke=\"" << stroke << "\"/>\n";
            } else {
                s << "<polygon fill=\"none\" stroke=\"" << stroke << "\" points=\"";
                for (const auto& v : std::get<ConvexPolygon>(o.shape).vertices)
                    s << fmt(X(v)) << ',' << fmt(Y(v)) << ' ';
                s << "\"/>\n";
            }
        }
        auto line = [&](const Trajectory& t, const char* color, double width) {
            s << "<polyline fill=\"none\" stroke=\"" << color << "\" stroke-width=\"" << width << "\" points=\"";
            for (const auto& p : t.points()) s << fmt(X(p.xy())) << ',' << fmt(Y(p.xy())) << ' ';
            s << "\"/>\n";
        };
        for (const auto& t : samples) line(t, "#00bfff", 1.0);
        for (const auto& t : plans) line(t, "#ff8c00", 1.5);
        if (observed) line(*observed, "#ff0000", 2.0);
        s << "<circle cx=\"" << fmt(X(scene.goal)) << "\" cy=\"" << fmt(Y(scene.goal))
          << "\" r=\"4\" fill=\"#ffffff\" stroke=\"#000\"/>\n";
    }
    s << "</svg>\n";
    return s.str();
}

}  // namespace carpal
