#pragma once

#include <cstdint>
#include <vector>

#include "carpal/scene.hpp"
#include "carpal/trajectory.hpp"
#include "carpal/utility.hpp"

namespace carpal {

struct VehicleSpecs {
    double radius = 1.0;           // collision inflation, m
    double turning_radius = 5.0;   // m, sets the maximum curvature
    double braking_decel = 4.0;    // m/s^2, fallback trajectory
    bool operator==(const VehicleSpecs&) const = default;

    double max_curvature() const { return 1.0 / turning_radius; }
};

struct PlannerConfig {
    int heading_bins = 36;
    double cell_size = 0.5;          // m, search lattice (independent of the field resolution)
    double arc_cells = 2.0;          // primitive arc length in lattice cells
    std::size_t max_expansions = 200000;
    double goal_tolerance = 0.5;     // m
    double goal_heading_tolerance = 30.0 * std::numbers::pi / 180.0;
    double utility_weight = 5.0;     // w_u
    int horizon_steps = 30;
    double dt = 0.1;
    bool operator==(const PlannerConfig&) const = default;

    void validate() const;
};

struct PlannerState {
    double x = 0.0;
    double y = 0.0;
    double heading = 0.0;
    int cell_x = 0;
    int cell_y = 0;
    int heading_bin = 0;
};

struct MotionPrimitive {
    double curvature = 0.0;
    double arc_length = 0.0;

    /// End pose of the arc started at `from`.
    Pose2 apply(const Pose2& from) const;
    Pose2 apply(const Pose2& from, double partial_length) const;
};

enum class PlanStatus { found, no_path, budget_exhausted };

const char* to_string(PlanStatus s);

struct PlanResult {
    Trajectory trajectory;
    std::vector<Pose2> path;  // geometric poses from start to goal
    double cost = 0.0;
    std::size_t expanded_nodes = 0;
    PlanStatus status = PlanStatus::no_path;
    bool fallback = false;  // braking trajectory substituted after a failed search
};

/// Five successors {-k, -k/2, 0, k/2, k} of length arc_cells * cell_size.
std::vector<MotionPrimitive> motion_primitives(const VehicleSpecs& specs, const PlannerConfig& cfg);

/// Heading of the goal state: road direction at the goal.
double goal_heading(const Scene& scene);

PlanResult plan(const Scene& scene, const UtilityField& field, const VehicleSpecs& specs, const PlannerConfig& cfg);

/// Straight-line stop from the ego state.
Trajectory braking_trajectory(const EgoState& ego, const VehicleSpecs& specs, int steps, double dt);

/// Resamples a polyline at constant speed onto t = dt .. steps * dt; holds the last point.
Trajectory resample_constant_speed(const std::vector<Vec2>& polyline, double speed, int steps, double dt);

std::uint64_t ensemble_member_seed(std::uint64_t seed, std::size_t index);

/// m plans on independently perturbed copies of the scene. Every member shares the
/// intention layer of `field`; failures degrade to braking trajectories.
std::vector<PlanResult> plan_ensemble(const Scene& scene, const UtilityField& field, const UtilityConfig& ucfg,
                                      const VehicleSpecs& specs, const PlannerConfig& cfg, const NoiseParams& noise,
                                      std::size_t m, std::uint64_t seed);

}  // namespace carpal
