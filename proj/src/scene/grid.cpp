#include "carpal/grid.hpp"

#include <algorithm>
#include <numeric>

namespace carpal {

GridGeometry GridGeometry::covering(const Bounds& b, double resolution) {
    require(resolution > 0.0 && std::isfinite(resolution), "grid resolution must be positive");
    require(b.width() > 0.0 && b.height() > 0.0, "grid bounds must have positive extent");
    GridGeometry g;
    g.origin = b.min;
    g.resolution = resolution;
    g.nx = std::max(1, static_cast<int>(std::ceil(b.width() / resolution - 1e-9)));
    g.ny = std::max(1, static_cast<int>(std::ceil(b.height() / resolution - 1e-9)));
    return g;
}

void GridGeometry::validate() const {
    require(resolution > 0.0, "grid resolution must be positive");
    require(nx >= 1 && ny >= 1, "grid must have at least one cell");
}

std::size_t OccupancyGrid::occupied_count() const {
    return static_cast<std::size_t>(std::count(cells.begin(), cells.end(), std::uint8_t{1}));
}

double bilinear(const GridGeometry& g, std::span<const double> values, Vec2 p, bool* clamped) {
    // Continuous cell coordinates where integer values sit on cell centers.
    double u = (p.x - g.origin.x) / g.resolution - 0.5;
    double v = (p.y - g.origin.y) / g.resolution - 0.5;
    const double umax = g.nx - 1, vmax = g.ny - 1;
    const bool outside = !(u >= 0.0 && u <= umax && v >= 0.0 && v <= vmax);
    if (clamped) *clamped = outside;
    u = std::clamp(u, 0.0, umax);
    v = std::clamp(v, 0.0, vmax);
    const int i0 = std::min(static_cast<int>(u), std::max(g.nx - 2, 0));
    const int j0 = std::min(static_cast<int>(v), std::max(g.ny - 2, 0));
    const int i1 = std::min(i0 + 1, g.nx - 1);
    const int j1 = std::min(j0 + 1, g.ny - 1);
    const double fu = u - i0, fv = v - j0;
    const double a = values[g.index(i0, j0)], b = values[g.index(i1, j0)];
    const double c = values[g.index(i0, j1)], d = values[g.index(i1, j1)];
    return (1 - fv) * ((1 - fu) * a + fu * b) + fv * ((1 - fu) * c + fu * d);
}

double DistanceField::sample(Vec2 p) const { return bilinear(geometry, values, p); }

}  // namespace carpal
