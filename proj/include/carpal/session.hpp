#pragma once

#include <cstdint>
#include <deque>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "carpal/config.hpp"
#include "carpal/decision.hpp"
#include "carpal/io.hpp"
#include "carpal/predictor.hpp"
#include "carpal/scene.hpp"

namespace carpal {

enum class Mode { human, intervened };

const char* to_string(Mode m);

/// Driver command for one tick; clamped to the service bounds on use.
struct ControlInput {
    double steer = 0.0;  // rad, positive left
    double accel = 0.0;  // m/s^2
};

/// State broadcast after every tick.
struct Frame {
    int tick = 0;
    double t = 0.0;  // s since start
    EgoState ego;
    std::vector<Trajectory> predictions;  // latest n samples, world frame
    std::vector<Trajectory> plans;        // latest m plans, world frame
    int best_plan = -1;                   // index into plans
    UtilityStats stats;                   // regressed statistics of the latest decision
    Action outcome = Action::no_action;
    std::string rationale;
    Mode mode = Mode::human;
    bool decided = false;  // a decision ran on this tick
    double clearance = 0.0;  // m, ego position vs the ground-truth scene
    bool done = false;
};

Json to_json(const Frame& f);

struct DecisionLogEntry {
    int tick = 0;
    Action outcome = Action::no_action;
    Mode mode = Mode::human;
    bool operator==(const DecisionLogEntry&) const = default;
};

/// Road used for drive sessions: the default scene stretched over the whole generated road.
ScenarioConfig session_scene_config(const Config& cfg);

/// Kinematic drive session over one scenario. The scene itself is never modified; each
/// decision plans on a perturbed, ego-centred copy.
class Session {
public:
    Session(const Config& cfg, std::shared_ptr<const PredictorModel> model, Scenario scenario, std::uint64_t seed);

    /// Frame for tick 0, including the first decision.
    const Frame& frame() const { return frame_; }
    /// Advances one tick; throws ValidationError once the session has ended.
    const Frame& step(const ControlInput& input);
    void stop() { closed_ = true; }

    bool closed() const { return closed_ || frame_.done; }
    Mode mode() const { return mode_; }
    int tick() const { return tick_; }
    const Scenario& scenario() const { return scenario_; }
    const std::vector<DecisionLogEntry>& decision_log() const { return log_; }
    std::size_t history_size() const { return history_.size(); }

private:
    void decide_now();
    Scene planning_scene() const;
    ControlInput pursuit() const;
    bool released() const;
    void publish(bool decided);

    Config cfg_;
    std::shared_ptr<const PredictorModel> model_;
    Scenario scenario_;
    std::uint64_t seed_;
    double lane_ = 0.0;
    EgoState ego_;
    std::deque<Vec2> history_;  // T_p newest positions, oldest first
    Mode mode_ = Mode::human;
    int tick_ = 0;
    bool closed_ = false;
    Trajectory active_;  // plan tracked while intervened
    bool active_fallback_ = false;
    std::vector<Trajectory> predictions_, plans_;
    int best_ = -1;
    DecisionOutcome last_;
    std::vector<DecisionLogEntry> log_;
    Frame frame_;
};

/// In-process scripted drive: frame 0 followed by one frame per input, stopping early
/// when the session ends.
std::vector<Frame> run_script(const Config& cfg, std::shared_ptr<const PredictorModel> model, const Scenario& scenario,
                              std::uint64_t seed, const std::vector<ControlInput>& inputs);

}  // namespace carpal
