#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "carpal/planner.hpp"
#include "helpers.hpp"
#include "oracles.hpp"

using namespace carpal;

namespace {

UtilityField field_for(const Scene& s) {
    const std::vector<Trajectory> samples{test::straight_line(0.0, 0.0, 6.0)};
    return build_utility_field(s, samples, UtilityConfig{});
}

}  // namespace

TEST(Planner, StraightAheadIsNearlyEuclidean) {
    const Scene s = test::straight_scene();
    PlannerConfig cfg;
    cfg.utility_weight = 0.0;
    const PlanResult r = plan(s, field_for(s), VehicleSpecs{}, cfg);
    ASSERT_EQ(r.status, PlanStatus::found);
    const double euclid = distance(s.ego.position, s.goal);
    // With w_u = 0 the cost is the travelled arc length plus the final residual.
    EXPECT_GE(r.cost, euclid - 1e-9);
    EXPECT_LE(r.cost, 1.02 * euclid);
}

TEST(Planner, WithinFivePercentOfDijkstraOnFreeMaps) {
    Rng rng(21);
    std::uniform_real_distribution<double> ang(-0.7, 0.7), len(12.0, 26.0);
    PlannerConfig cfg;
    cfg.utility_weight = 0.0;
    for (int trial = 0; trial < 8; ++trial) {
        const double th = ang(rng);
        Scene s = test::straight_scene(th, 6.0, {{-30.0, -30.0}, {30.0, 30.0}});
        s.goal = Vec2{std::cos(th), std::sin(th)} * len(rng);
        const UtilityField f = field_for(s);
        const PlanResult r = plan(s, f, VehicleSpecs{}, cfg);
        ASSERT_EQ(r.status, PlanStatus::found) << trial;
        const double dj = oracle::dijkstra_length(s, f, cfg.cell_size, VehicleSpecs{}.radius);
        const double euclid = distance(s.ego.position, s.goal);
        EXPECT_GE(dj, euclid - cfg.cell_size * std::sqrt(2.0));
        EXPECT_GE(r.cost, euclid - 1e-9);
        EXPECT_LE(r.cost, 1.05 * dj) << "trial " << trial;
    }
}

TEST(Planner, CostBoundsEuclideanDistanceAndAvoidsObstacles) {
    Rng rng(4);
    std::uniform_real_distribution<double> sx(8.0, 18.0), sy(-2.5, 2.5), rad(0.4, 1.2);
    const VehicleSpecs specs;
    int solved = 0;
    for (int trial = 0; trial < 10; ++trial) {
        Scene s = test::straight_scene();
        for (int k = 0; k < 3; ++k) s.obstacles.push_back(Obstacle::circle({sx(rng), sy(rng)}, rad(rng)));
        const UtilityField f = field_for(s);
        const PlanResult r = plan(s, f, specs, PlannerConfig{});
        if (r.status != PlanStatus::found) continue;
        ++solved;
        EXPECT_GE(r.cost, distance(s.ego.position, s.goal) - 1e-9);
        for (const auto& p : r.path) EXPECT_GE(f.clearance(p.position), specs.radius - 1e-9);
        EXPECT_EQ(r.trajectory.size(), 30u);
    }
    EXPECT_GE(solved, 5);
}

TEST(Planner, FiveMotionPrimitives) {
    const VehicleSpecs specs;
    const auto prims = motion_primitives(specs, PlannerConfig{});
    ASSERT_EQ(prims.size(), 5u);
    const double k = specs.max_curvature();
    const double want[] = {-k, -k / 2, 0.0, k / 2, k};
    for (int i = 0; i < 5; ++i) {
        EXPECT_NEAR(prims[i].curvature, want[i], 1e-15);
        EXPECT_NEAR(prims[i].arc_length, 1.0, 1e-15);
    }
}

TEST(Planner, BlockedGoalFallsBackToBraking) {
    Scene s = test::straight_scene();
    s.obstacles = {Obstacle::box({20.0, 0.0}, 2.0, 20.0, 0.0)};
    const UtilityField f = field_for(s);
    const auto plans = plan_ensemble(s, f, UtilityConfig{}, VehicleSpecs{}, PlannerConfig{}, NoiseParams{}, 3, 9);
    ASSERT_EQ(plans.size(), 3u);
    for (const auto& p : plans) {
        EXPECT_TRUE(p.fallback);
        EXPECT_EQ(p.trajectory.size(), 30u);
        EXPECT_LE(p.trajectory.back().x, s.ego.speed * s.ego.speed / (2 * VehicleSpecs{}.braking_decel) + 1e-6);
    }
}

TEST(Planner, EnsembleIsSeedDeterministic) {
    Scene s = test::straight_scene();
    s.obstacles = {Obstacle::circle({12.0, 0.5}, 0.8)};
    const UtilityField f = field_for(s);
    const NoiseParams noise{5e-4, 0.1, 0.4, 1.2, 1.0, 0.3, 2.0};
    auto run = [&](std::uint64_t seed) {
        return plan_ensemble(s, f, UtilityConfig{}, VehicleSpecs{}, PlannerConfig{}, noise, 4, seed);
    };
    const auto a = run(5), b = run(5);
    for (std::size_t i = 0; i < a.size(); ++i) EXPECT_EQ(a[i].trajectory, b[i].trajectory);
}

TEST(PerceptionNoise, LeavesTheInputSceneAlone) {
    Scene s = test::straight_scene();
    s.obstacles = {Obstacle::circle({12.0, 0.5}, 0.8), Obstacle::circle({18.0, -2.0}, 0.6)};
    const Scene before = s;
    const NoiseParams noise{2e-2, 0.5, 0.4, 1.2, 1.0, 1.0, 2.0};
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
        const Scene n = inject_perception_noise(s, noise, seed);
        for (const auto& o : n.obstacles) {
            const Bounds bb = o.bounding_box();
            EXPECT_TRUE(n.bounds.contains(bb.min) && n.bounds.contains(bb.max));
        }
    }
    EXPECT_EQ(s, before);
    EXPECT_EQ(inject_perception_noise(s, noise, 3), inject_perception_noise(s, noise, 3));
}
