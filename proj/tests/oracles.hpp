#pragma once

// Independent reference implementations shared by the unit tests and the acceptance binary.

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <queue>
#include <random>
#include <utility>
#include <vector>

#include "carpal/grid.hpp"
#include "carpal/scene.hpp"
#include "carpal/trajectory.hpp"
#include "carpal/utility.hpp"

namespace carpal::oracle {

inline OccupancyGrid random_grid(int nx, int ny, double density, std::uint64_t seed) {
    Rng rng(seed);
    std::bernoulli_distribution occ(density);
    OccupancyGrid g{{{-1.0, 2.0}, 0.25, nx, ny}, std::vector<std::uint8_t>(static_cast<std::size_t>(nx * ny))};
    for (auto& c : g.cells) c = occ(rng) ? 1 : 0;
    return g;
}

// O(cells^2).
inline std::vector<double> brute_force_edt(const OccupancyGrid& g) {
    const auto& geo = g.geometry;
    std::vector<double> out(geo.cell_count(), kDistanceSentinel);
    for (int j = 0; j < geo.ny; ++j)
        for (int i = 0; i < geo.nx; ++i) {
            double best = std::numeric_limits<double>::infinity();
            for (int q = 0; q < geo.ny; ++q)
                for (int p = 0; p < geo.nx; ++p)
                    if (g.occupied(p, q)) best = std::min(best, std::hypot(double(i - p), double(j - q)));
            if (std::isfinite(best)) out[geo.index(i, j)] = best * geo.resolution;
        }
    return out;
}

/// Smooth random trajectories along +x, 30 points at 0.1 s.
inline std::vector<Trajectory> random_samples(std::size_t n, std::uint64_t seed) {
    Rng rng(seed);
    std::normal_distribution<double> lat(0.0, 1.0);
    std::uniform_real_distribution<double> speed(3.0, 8.0);
    std::vector<Trajectory> out;
    for (std::size_t i = 0; i < n; ++i) {
        const double y0 = lat(rng), v = speed(rng), bend = 0.3 * lat(rng);
        std::vector<Vec2> pts;
        for (int k = 1; k <= 30; ++k) {
            const double t = 0.1 * k;
            pts.push_back({v * t, y0 + bend * t * t});
        }
        out.push_back(Trajectory::from_positions(pts, 0.1, 0.1));
    }
    return out;
}

// Cell-centred bilinear interpolation of the combined layer.
inline double field_value(const UtilityField& f, Vec2 p) {
    const auto& g = f.geometry;
    const double gx = std::clamp((p.x - g.origin.x) / g.resolution - 0.5, 0.0, g.nx - 1.0);
    const double gy = std::clamp((p.y - g.origin.y) / g.resolution - 0.5, 0.0, g.ny - 1.0);
    const int i0 = std::min(static_cast<int>(std::floor(gx)), std::max(g.nx - 2, 0));
    const int j0 = std::min(static_cast<int>(std::floor(gy)), std::max(g.ny - 2, 0));
    const int i1 = std::min(i0 + 1, g.nx - 1), j1 = std::min(j0 + 1, g.ny - 1);
    const double tx = gx - i0, ty = gy - j0;
    return (1 - tx) * (1 - ty) * f.combined_at(i0, j0) + tx * (1 - ty) * f.combined_at(i1, j0) +
           (1 - tx) * ty * f.combined_at(i0, j1) + tx * ty * f.combined_at(i1, j1);
}

inline double trajectory_utility(const UtilityField& f, const Trajectory& t) {
    double sum = 0.0;
    for (const auto& p : t.points()) sum += field_value(f, p.xy());
    return sum / static_cast<double>(t.size());
}

/// Mean and population variance, two passes.
inline std::pair<double, double> two_pass(const std::vector<double>& u) {
    const double mean = std::accumulate(u.begin(), u.end(), 0.0) / static_cast<double>(u.size());
    double ss = 0.0;
    for (double x : u) ss += (x - mean) * (x - mean);
    return {mean, ss / static_cast<double>(u.size())};
}

/// 8-connected Dijkstra over `cell` squares, start cell to goal cell, in meters.
inline double dijkstra_length(const Scene& s, const UtilityField& f, double cell, double radius) {
    const Bounds b = f.geometry.extent();
    const int nx = static_cast<int>(std::floor(b.width() / cell)), ny = static_cast<int>(std::floor(b.height() / cell));
    auto id = [&](Vec2 p) {
        return std::pair{static_cast<int>(std::floor((p.x - b.min.x) / cell)),
                         static_cast<int>(std::floor((p.y - b.min.y) / cell))};
    };
    auto center = [&](int i, int j) { return Vec2{b.min.x + (i + 0.5) * cell, b.min.y + (j + 0.5) * cell}; };
    const auto [si, sj] = id(s.ego.position);
    const auto [gi, gj] = id(s.goal);
    std::vector<double> dist(static_cast<std::size_t>(nx * ny), std::numeric_limits<double>::infinity());
    using Entry = std::pair<double, int>;
    std::priority_queue<Entry, std::vector<Entry>, std::greater<>> open;
    dist[static_cast<std::size_t>(sj * nx + si)] = 0.0;
    open.push({0.0, sj * nx + si});
    while (!open.empty()) {
        const auto [d, k] = open.top();
        open.pop();
        if (d > dist[static_cast<std::size_t>(k)]) continue;
        const int i = k % nx, j = k / nx;
        if (i == gi && j == gj) return d;
        for (int dj = -1; dj <= 1; ++dj)
            for (int di = -1; di <= 1; ++di) {
                const int ni = i + di, nj = j + dj;
                if ((di == 0 && dj == 0) || ni < 0 || nj < 0 || ni >= nx || nj >= ny) continue;
                if (f.clearance(center(ni, nj)) < radius) continue;
                const double nd = d + cell * std::hypot(double(di), double(dj));
                auto& slot = dist[static_cast<std::size_t>(nj * nx + ni)];
                if (nd < slot) {
                    slot = nd;
                    open.push({nd, nj * nx + ni});
                }
            }
    }
    return std::numeric_limits<double>::infinity();
}

/// Trapezoid integral of a 2D density over a square.
template <class F>
double integrate_square(F&& density, double lo, double hi, int n) {
    const double h = (hi - lo) / n;
    double total = 0.0;
    for (int i = 0; i <= n; ++i)
        for (int j = 0; j <= n; ++j) {
            const double w = (i == 0 || i == n ? 0.5 : 1.0) * (j == 0 || j == n ? 0.5 : 1.0);
            total += w * density(Vec2{lo + i * h, lo + j * h});
        }
    return total * h * h;
}

}  // namespace carpal::oracle
