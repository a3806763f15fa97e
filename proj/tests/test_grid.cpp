#include <gtest/gtest.h>

#include <cmath>
#include <limits>
#include <random>

#include "carpal/grid.hpp"
#include "carpal/kernels.hpp"
#include "carpal/scene.hpp"
#include "oracles.hpp"

using namespace carpal;

TEST(DistanceTransform, MatchesBruteForce) {
    const int sizes[][2] = {{1, 1}, {1, 17}, {23, 1}, {7, 5}, {32, 32}, {64, 48}, {64, 64}};
    const double densities[] = {0.002, 0.05, 0.3, 0.9};
    std::uint64_t seed = 1;
    for (const auto& sz : sizes)
        for (double d : densities) {
            const OccupancyGrid g = oracle::random_grid(sz[0], sz[1], d, seed++);
            const DistanceField f = distance_transform(g);
            const auto ref = oracle::brute_force_edt(g);
            ASSERT_EQ(f.values.size(), ref.size());
            for (std::size_t k = 0; k < ref.size(); ++k) EXPECT_NEAR(f.values[k], ref[k], 1e-9) << sz[0] << "x" << sz[1];
        }
}

TEST(DistanceTransform, EmptyGridReportsSentinel) {
    OccupancyGrid g{{{0.0, 0.0}, 0.5, 9, 4}, std::vector<std::uint8_t>(36, 0)};
    for (double v : distance_transform(g).values) EXPECT_EQ(v, kDistanceSentinel);
}

TEST(DistanceTransform, SerialAndParallelAgreeExactly) {
    for (std::uint64_t s = 0; s < 6; ++s) {
        const OccupancyGrid g = oracle::random_grid(57, 41, 0.01 + 0.1 * s, 100 + s);
        EXPECT_EQ(kernels::serial::squared_edt(g.cells, 57, 41), kernels::parallel::squared_edt(g.cells, 57, 41));
    }
}

TEST(Rasterize, CellIsOccupiedIffItsCenterIsInside) {
    Scene s;
    s.bounds = {{-5.0, -5.0}, {5.0, 5.0}};
    s.obstacles = {Obstacle::circle({1.0, 1.0}, 1.3), Obstacle::box({-2.0, -1.5}, 3.0, 1.2, 0.4)};
    const OccupancyGrid g = rasterize(s, 0.2);
    for (int j = 0; j < g.geometry.ny; ++j)
        for (int i = 0; i < g.geometry.nx; ++i) {
            const Vec2 c = g.geometry.center(i, j);
            const bool inside = s.obstacles[0].contains(c) || s.obstacles[1].contains(c);
            EXPECT_EQ(g.occupied(i, j), inside);
        }
}

TEST(Bilinear, ReproducesAffineFunctions) {
    GridGeometry g{{0.0, 0.0}, 0.5, 10, 8};
    std::vector<double> v(g.cell_count());
    for (int j = 0; j < g.ny; ++j)
        for (int i = 0; i < g.nx; ++i) {
            const Vec2 c = g.center(i, j);
            v[g.index(i, j)] = 2.0 * c.x - 3.0 * c.y + 1.0;
        }
    Rng rng(5);
    std::uniform_real_distribution<double> ux(0.25, 4.75), uy(0.25, 3.75);
    for (int k = 0; k < 200; ++k) {
        const Vec2 p{ux(rng), uy(rng)};
        bool clamped = true;
        EXPECT_NEAR(bilinear(g, v, p, &clamped), 2.0 * p.x - 3.0 * p.y + 1.0, 1e-12);
        EXPECT_FALSE(clamped);
    }
}
