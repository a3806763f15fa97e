#pragma once

#include <cstdint>
#include <string>

#include "carpal/decision.hpp"
#include "carpal/evaluation.hpp"
#include "carpal/planner.hpp"
#include "carpal/predictor.hpp"
#include "carpal/scene.hpp"
#include "carpal/utility.hpp"

namespace carpal {

inline constexpr int kSchemaVersion = 1;
inline constexpr const char* kVersion = "0.1.0";

struct ServiceConfig {
    std::string address = "127.0.0.1";
    int port = 8765;
    int decision_interval = 5;    // K, ticks between decisions
    double hysteresis = 0.5;      // m above d_s before control returns
    double steer_max = 0.6;       // rad
    double accel_max = 3.0;       // m/s^2
    double pursuit_lookahead = 5.0;  // m, intervention tracking
    int max_ticks = 600;          // session length
    double road_ahead = 90.0;     // m of generated road ahead of the start
    double window_ahead = 40.0;   // m, planning window ahead of the ego
    double window_behind = 10.0;  // m
    bool operator==(const ServiceConfig&) const = default;

    void validate() const;
};

/// Every tunable of the stack, one section per module.
struct Config {
    ScenarioConfig scene;
    PredictorConfig predictor;
    TrainConfig train;
    PipelineConfig pipeline;  // utility, planner, vehicle, perception noise, n, m
    DecisionThresholds decision;
    EvalConfig evaluation;    // its pipeline is replaced by `pipeline` on use
    AugmentConfig augment;
    ServiceConfig service;
    bool operator==(const Config&) const = default;

    void validate() const;
    /// Evaluation settings with the shared pipeline filled in.
    EvalConfig eval() const;
};

/// Parses a config document; missing keys keep their defaults, unknown keys are rejected.
Config config_from_json(const std::string& text);
std::string config_to_json(const Config& cfg, int indent = 2);
Config load_config(const std::string& path);

/// $CARPAL_CONFIG when set, else defaults; an explicit path wins over both.
Config resolve_config(const std::string& path);

}  // namespace carpal
