#include <gtest/gtest.h>

#include <cmath>

#include "carpal/session.hpp"
#include "helpers.hpp"

using namespace carpal;

namespace {

Scenario session_scenario(const Config& cfg, std::uint64_t seed, bool clear) {
    Scenario sc = generate_scenario(session_scene_config(cfg), seed);
    sc.id = "s" + std::to_string(seed);
    if (clear) sc.scene.obstacles.clear();
    return sc;
}

std::shared_ptr<const PredictorModel> zero_model(const Config& cfg) {
    return std::make_shared<const PredictorModel>(PredictorModel::zeros(cfg.predictor));
}

std::shared_ptr<const PredictorModel> intervening_model(const Config& cfg) {
    return std::make_shared<const PredictorModel>(test::constant_model(cfg.predictor, 1.0, 1e-4));
}

}  // namespace

TEST(Session, ZeroModelNeverActs) {
    const Config cfg;
    Session s(cfg, zero_model(cfg), session_scenario(cfg, 1, true), 3);
    EXPECT_EQ(s.frame().tick, 0);
    EXPECT_TRUE(s.frame().decided);
    for (int k = 0; k < 30 && !s.closed(); ++k) {
        const Frame& f = s.step({0.0, 0.0});
        EXPECT_EQ(f.mode, Mode::human);
        EXPECT_EQ(f.decided, f.tick % cfg.service.decision_interval == 0);
        EXPECT_LE(s.history_size(), static_cast<std::size_t>(cfg.scene.past_steps));
    }
    for (const auto& e : s.decision_log()) {
        EXPECT_EQ(e.outcome, Action::no_action);
        EXPECT_EQ(e.tick % cfg.service.decision_interval, 0);
    }
    EXPECT_EQ(s.decision_log().size(), 7u);
}

TEST(Session, HumanInputIsClamped) {
    const Config cfg;
    Session s(cfg, zero_model(cfg), session_scenario(cfg, 2, true), 0);
    const Frame& f = s.step({10.0, -50.0});
    EXPECT_NEAR(f.ego.steer_cmd, cfg.service.steer_max, 1e-12);
    EXPECT_NEAR(f.ego.accel_cmd, -cfg.service.accel_max, 1e-12);
    EXPECT_THROW(s.step({std::nan(""), 0.0}), ValidationError);
}

TEST(Session, ScriptsAreDeterministic) {
    const Config cfg;
    const Scenario sc = session_scenario(cfg, 4, false);
    std::vector<ControlInput> inputs;
    for (int k = 0; k < 25; ++k) inputs.push_back({0.05 * std::sin(0.3 * k), 0.2});
    const auto a = run_script(cfg, intervening_model(cfg), sc, 11, inputs);
    const auto b = run_script(cfg, intervening_model(cfg), sc, 11, inputs);
    ASSERT_EQ(a.size(), b.size());
    for (std::size_t i = 0; i < a.size(); ++i) EXPECT_EQ(to_json(a[i]).dump(), to_json(b[i]).dump());
}

TEST(Session, ModeChangesOnlyOnDecisionTicks) {
    const Config cfg;
    Session s(cfg, intervening_model(cfg), session_scenario(cfg, 5, false), 2);
    EXPECT_EQ(s.mode(), Mode::intervened);
    Mode prev = s.mode();
    for (int k = 0; k < 30 && !s.closed(); ++k) {
        const Frame& f = s.step({0.0, 0.0});
        if (f.mode != prev) {
            EXPECT_TRUE(f.decided) << f.tick;
        }
        prev = f.mode;
    }
}

TEST(Session, ReleaseWaitsForClearanceWithHysteresis) {
    const Config cfg;
    // Open road: the first check after intervening hands control back.
    {
        Session s(cfg, intervening_model(cfg), session_scenario(cfg, 6, true), 1);
        ASSERT_EQ(s.mode(), Mode::intervened);
        for (int k = 0; k < cfg.service.decision_interval; ++k) s.step({0.0, 0.0});
        EXPECT_EQ(s.mode(), Mode::human);
    }
    // A wall across the road ahead keeps the rollout inside d_s + hysteresis.
    {
        Scenario sc = session_scenario(cfg, 6, true);
        const EgoState& e = sc.scene.ego;
        const Vec2 dir{std::cos(e.heading), std::sin(e.heading)};
        sc.scene.obstacles = {Obstacle::box(e.position + dir * 18.0, 1.0, 30.0, e.heading)};
        Session s(cfg, intervening_model(cfg), sc, 1);
        ASSERT_EQ(s.mode(), Mode::intervened);
        ASSERT_GT(s.frame().clearance, cfg.evaluation.d_s + cfg.service.hysteresis);
        for (int k = 0; k < cfg.service.decision_interval; ++k) s.step({0.0, 0.0});
        EXPECT_EQ(s.mode(), Mode::intervened);
    }
}

TEST(Session, ClosedSessionRejectsInput) {
    const Config cfg;
    Session s(cfg, zero_model(cfg), session_scenario(cfg, 7, true), 0);
    s.step({0.0, 0.0});
    s.stop();
    EXPECT_TRUE(s.closed());
    EXPECT_THROW(s.step({0.0, 0.0}), ValidationError);
}

TEST(Session, FrameJsonCarriesTheProtocolFields) {
    const Config cfg;
    Session s(cfg, zero_model(cfg), session_scenario(cfg, 8, false), 0);
    const Json j = to_json(s.frame());
    for (const char* k : {"type", "tick", "t", "ego", "predictions", "plans", "best_plan", "stats", "outcome",
                          "rationale", "mode", "decided", "clearance", "done"})
        EXPECT_TRUE(j.contains(k)) << k;
    EXPECT_EQ(j["type"], "frame");
    EXPECT_EQ(j["predictions"].size(), cfg.pipeline.samples);
    EXPECT_EQ(j["plans"].size(), cfg.pipeline.plans);
}
