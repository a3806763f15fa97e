#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

#include "carpal/decision.hpp"
#include "helpers.hpp"

using namespace carpal;

TEST(DecisionRule, TruthTable) {
    const DecisionThresholds th{0.01, 0.02};
    struct Row {
        bool plan_better;
        bool h_tight;
        bool p_tight;
        Action want;
    };
    const Row rows[] = {
        {true, true, true, Action::intervene},   {true, true, false, Action::warn},
        {true, false, true, Action::warn},       {true, false, false, Action::warn},
        {false, true, true, Action::no_action},  {false, true, false, Action::no_action},
        {false, false, true, Action::no_action}, {false, false, false, Action::no_action},
    };
    for (const auto& r : rows) {
        const UtilityStats s{0.5, r.h_tight ? 0.005 : 0.05, r.plan_better ? 0.6 : 0.4, r.p_tight ? 0.01 : 0.03};
        const DecisionOutcome d = decide(s, th);
        EXPECT_EQ(d.action, r.want) << r.plan_better << r.h_tight << r.p_tight;
        EXPECT_EQ(d.binary(), r.want == Action::intervene ? 1 : 0);
        EXPECT_EQ(d.inputs, s);
        EXPECT_FALSE(d.rationale.empty());
    }
}

TEST(DecisionRule, WarnMapsToZero) {
    const DecisionOutcome d = decide({0.1, 1.0, 0.9, 1.0}, DecisionThresholds::unified(0.01));
    EXPECT_EQ(d.action, Action::warn);
    EXPECT_EQ(d.binary(), 0);
}

TEST(DecisionRule, TiesAndGateEdgesAreStrict) {
    const auto th = DecisionThresholds::unified(0.01);
    EXPECT_EQ(decide({0.5, 0.0, 0.5, 0.0}, th).action, Action::no_action);
    EXPECT_EQ(decide({0.4, 0.01, 0.5, 0.0}, th).action, Action::warn);
    EXPECT_EQ(decide({0.4, 0.0, 0.5, 0.01}, th).action, Action::warn);
    EXPECT_EQ(decide({0.4, 0.0, 0.5, 0.0}, th).action, Action::intervene);
}

TEST(DecisionRule, RejectsNonFiniteStatistics) {
    const auto th = DecisionThresholds::unified(0.01);
    EXPECT_THROW(decide({std::nan(""), 0.0, 0.5, 0.0}, th), ValidationError);
    EXPECT_THROW(decide({0.1, INFINITY, 0.5, 0.0}, th), ValidationError);
    EXPECT_THROW(decide({0.1, 0.0, 0.5, 0.0}, DecisionThresholds{-1.0, 0.1}), ValidationError);
}

TEST(Entropy, GaussianFormula) {
    for (double v : {1e-6, 0.01, 1.0, 4.0}) {
        EXPECT_NEAR(gaussian_entropy(v), 0.5 * std::log(2 * std::numbers::pi * std::numbers::e * v), 1e-12);
        EXPECT_NEAR(gaussian_entropy(v, 0.3), gaussian_entropy(v) + 0.3, 1e-15);
    }
    const EntropyBound b = entropy_bound({0.0, 0.02, 0.0, 0.5}, 0.1);
    EXPECT_NEAR(b.bound, b.h_h + b.h_p, 1e-15);
    EXPECT_NEAR(b.h_h, gaussian_entropy(0.02, 0.1), 1e-15);
    EXPECT_THROW(gaussian_entropy(0.0), ValidationError);
}

TEST(Baselines, VbpFlagsObstaclesOnTheStraightPath) {
    Scenario sc;
    sc.scene = test::straight_scene();
    sc.scene.obstacles = {Obstacle::circle({12.0, 0.8}, 0.5)};
    EXPECT_EQ(vbp_decide(sc, 1.6).action, Action::intervene);
    sc.scene.obstacles = {Obstacle::circle({12.0, 5.0}, 0.5)};
    EXPECT_EQ(vbp_decide(sc, 1.6).action, Action::no_action);
    sc.scene.obstacles.clear();
    EXPECT_EQ(min_clearance(sc.scene, constant_velocity_rollout(sc.scene.ego)), kDistanceSentinel);
}

TEST(Baselines, ConstantVelocityRollout) {
    EgoState e;
    e.position = {1.0, 2.0};
    e.heading = std::numbers::pi / 2;
    e.speed = 4.0;
    const Trajectory t = constant_velocity_rollout(e, 3.0, 0.1);
    ASSERT_EQ(t.size(), 31u);
    EXPECT_NEAR(t.back().x, 1.0, 1e-12);
    EXPECT_NEAR(t.back().y, 14.0, 1e-12);
}
