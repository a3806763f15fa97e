#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "carpal/common.hpp"

namespace carpal {

/// Distance reported by a field with no occupied cells.
inline constexpr double kDistanceSentinel = 1e9;

struct Bounds {
    Vec2 min;
    Vec2 max;

    bool contains(Vec2 p) const { return p.x >= min.x && p.x <= max.x && p.y >= min.y && p.y <= max.y; }
    double width() const { return max.x - min.x; }
    double height() const { return max.y - min.y; }
    double area() const { return width() * height(); }
    bool operator==(const Bounds&) const = default;
};

/// Axis-aligned cell lattice. Cell (i, j) covers
/// [origin + (i, j) * res, origin + (i + 1, j + 1) * res); values are row-major in j.
struct GridGeometry {
    Vec2 origin;
    double resolution = 0.1;
    int nx = 1;
    int ny = 1;

    /// Smallest lattice with the given resolution covering the bounds.
    static GridGeometry covering(const Bounds& b, double resolution);

    std::size_t cell_count() const { return static_cast<std::size_t>(nx) * static_cast<std::size_t>(ny); }
    std::size_t index(int i, int j) const {
        return static_cast<std::size_t>(j) * static_cast<std::size_t>(nx) + static_cast<std::size_t>(i);
    }
    Vec2 center(int i, int j) const {
        return {origin.x + (i + 0.5) * resolution, origin.y + (j + 0.5) * resolution};
    }
    Bounds extent() const { return {origin, {origin.x + nx * resolution, origin.y + ny * resolution}}; }
    bool operator==(const GridGeometry&) const = default;

    void validate() const;
};

struct OccupancyGrid {
    GridGeometry geometry;
    std::vector<std::uint8_t> cells;  // 1 = occupied

    bool occupied(int i, int j) const { return cells[geometry.index(i, j)] != 0; }
    std::size_t occupied_count() const;
};

/// Euclidean distance (meters) from each cell center to the nearest occupied cell center.
struct DistanceField {
    GridGeometry geometry;
    std::vector<double> values;

    double at(int i, int j) const { return values[geometry.index(i, j)]; }
    /// Bilinear interpolation between cell centers; points outside are clamped.
    double sample(Vec2 p) const;
};

/// Bilinear interpolation of a cell-centered scalar array. Sets *clamped when p lies
/// outside the lattice's cell-center hull.
double bilinear(const GridGeometry& g, std::span<const double> values, Vec2 p, bool* clamped = nullptr);

}  // namespace carpal
