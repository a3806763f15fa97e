#include "carpal/decision.hpp"

#include <algorithm>
#include <cmath>

#include "carpal/grid.hpp"

namespace carpal {

const char* to_string(Action a) {
    switch (a) {
        case Action::no_action: return "NoAction";
        case Action::warn: return "Warn";
        case Action::intervene: return "Intervene";
    }
    return "unknown";
}

void DecisionThresholds::validate() const {
    require(eta_h > 0.0 && eta_p > 0.0, "decision thresholds must be positive");
}

DecisionOutcome decide(const UtilityStats& s, const DecisionThresholds& th) {
    require(std::isfinite(s.mu_h) && std::isfinite(s.var_h) && std::isfinite(s.mu_p) && std::isfinite(s.var_p),
            "decision statistics must be finite");
    th.validate();
    DecisionOutcome out;
    out.inputs = s;
    if (!(s.mu_h < s.mu_p)) {
        out.action = Action::no_action;
        out.rationale = "mu_h >= mu_p";
    } else if (s.var_h < th.eta_h && s.var_p < th.eta_p) {
        out.action = Action::intervene;
        out.rationale = "mu_h < mu_p, both variances under threshold";
    } else {
        out.action = Action::warn;
        out.rationale = s.var_h < th.eta_h ? "mu_h < mu_p, var_p over threshold" : "mu_h < mu_p, var_h over threshold";
    }
    return out;
}

double gaussian_entropy(double variance, double delta_u) {
    require(variance > 0.0, "entropy needs a positive variance");
    return std::log(std::sqrt(2.0 * std::numbers::pi * variance)) + 0.5 + delta_u;
}

EntropyBound entropy_bound(const UtilityStats& s, double delta_u) {
    EntropyBound b;
    b.delta_u = delta_u;
    b.h_h = gaussian_entropy(s.var_h, delta_u);
    b.h_p = gaussian_entropy(s.var_p, delta_u);
    b.bound = b.h_h + b.h_p;
    return b;
}

Trajectory constant_velocity_rollout(const EgoState& ego, double horizon, double dt) {
    require(horizon >= 0.0 && dt > 0.0, "rollout horizon must be non-negative");
    const int steps = static_cast<int>(std::lround(horizon / dt));
    const Vec2 v{ego.speed * std::cos(ego.heading), ego.speed * std::sin(ego.heading)};
    std::vector<Vec2> pts;
    for (int k = 0; k <= steps; ++k) pts.push_back(ego.position + v * (k * dt));
    return Trajectory::from_positions(pts, 0.0, dt);
}

double min_clearance(const Scene& scene, const Trajectory& traj) {
    double best = kDistanceSentinel;
    for (const auto& p : traj.points()) best = std::min(best, scene.clearance(p.xy()));
    return best;
}

namespace {

DecisionOutcome distance_check(const Scene& scene, const Trajectory& traj, double d_s, const char* what) {
    DecisionOutcome out;
    const double c = min_clearance(scene, traj);
    out.action = c < d_s ? Action::intervene : Action::no_action;
    out.rationale = std::string(what) + " clearance " + std::to_string(c) + (c < d_s ? " < " : " >= ") + "d_s";
    return out;
}

}  // namespace

DecisionOutcome vbp_decide(const Scenario& scenario, double d_s, double horizon, double dt) {
    return distance_check(scenario.scene, constant_velocity_rollout(scenario.scene.ego, horizon, dt), d_s,
                          "constant-velocity");
}

Trajectory mean_trajectory(const Prediction& p, const Pose2& ego, double dt) {
    const double h = p.distribution.horizon;
    const int steps = static_cast<int>(std::lround(h / dt));
    std::vector<Vec2> pts;
    for (int k = 0; k <= steps; ++k) pts.push_back(ego.to_world(p.distribution.mean.at(k * dt)));
    return Trajectory::from_positions(pts, 0.0, dt);
}

DecisionOutcome abp_decide(const Scenario& scenario, const Prediction& prediction, double eta_abp, double d_s) {
    if (prediction.pred_error > eta_abp) {
        DecisionOutcome out;
        out.rationale = "predicted error " + std::to_string(prediction.pred_error) + " over threshold";
        out.inputs = prediction.stats;
        return out;
    }
    DecisionOutcome out =
        distance_check(scenario.scene, mean_trajectory(prediction, scenario.scene.ego.pose()), d_s, "predicted-mean");
    out.inputs = prediction.stats;
    return out;
}

DecisionOutcome abp_decide(const Scenario& scenario, const PredictorModel& model, double eta_abp, double d_s) {
    return abp_decide(scenario, model.predict(featurize(scenario, model.config.features)), eta_abp, d_s);
}

}  // namespace carpal
