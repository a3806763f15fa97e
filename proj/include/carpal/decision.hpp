#pragma once

#include <string>

#include "carpal/predictor.hpp"
#include "carpal/scene.hpp"
#include "carpal/utility.hpp"

namespace carpal {

enum class Action { no_action, warn, intervene };

const char* to_string(Action a);

struct DecisionThresholds {
    double eta_h = 1e-2;  // variance gate on the predicted-sample utilities
    double eta_p = 1e-2;  // variance gate on the plan utilities
    bool operator==(const DecisionThresholds&) const = default;

    static DecisionThresholds unified(double eta) { return {eta, eta}; }
    void validate() const;
};

struct DecisionOutcome {
    Action action = Action::no_action;
    UtilityStats inputs;    // statistics the decision was made from
    std::string rationale;  // which branch fired

    /// Intervene is the only positive decision.
    int binary() const { return action == Action::intervene ? 1 : 0; }
};

/// Intervene only when the plan is strictly better and both variance gates pass;
/// a better but uncertain plan only warns.
DecisionOutcome decide(const UtilityStats& stats, const DecisionThresholds& thresholds);

struct EntropyBound {
    double h_h = 0.0;      // nats
    double h_p = 0.0;
    double bound = 0.0;    // h_h + h_p
    double delta_u = 0.0;  // regressor margin
};

/// ln(sqrt(2 pi var)) + 1/2 + delta_u
double gaussian_entropy(double variance, double delta_u = 0.0);

EntropyBound entropy_bound(const UtilityStats& stats, double delta_u = 0.0);

/// Constant-velocity rollout of the ego state, t = 0 .. horizon.
Trajectory constant_velocity_rollout(const EgoState& ego, double horizon = 3.0, double dt = 0.1);

/// Smallest analytic obstacle distance along a trajectory (kDistanceSentinel when the scene is empty).
double min_clearance(const Scene& scene, const Trajectory& traj);

/// Intervene iff the constant-velocity rollout comes closer than d_s to an obstacle. Never warns.
DecisionOutcome vbp_decide(const Scenario& scenario, double d_s, double horizon = 3.0, double dt = 0.1);

/// Predicted mean trajectory in the world frame, starting at the ego position.
Trajectory mean_trajectory(const Prediction& p, const Pose2& ego, double dt = 0.1);

/// No action when the regressed displacement error exceeds eta; otherwise the VBP distance
/// test on the predicted mean trajectory.
DecisionOutcome abp_decide(const Scenario& scenario, const Prediction& prediction, double eta_abp, double d_s);
DecisionOutcome abp_decide(const Scenario& scenario, const PredictorModel& model, double eta_abp, double d_s);

}  // namespace carpal
