#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "carpal/common.hpp"
#include "carpal/grid.hpp"
#include "carpal/trajectory.hpp"

namespace carpal {

struct Circle {
    Vec2 center;
    double radius = 0.0;
    bool operator==(const Circle&) const = default;
};

/// Convex polygon with counter-clockwise vertices.
struct ConvexPolygon {
    std::vector<Vec2> vertices;
    bool operator==(const ConvexPolygon&) const = default;
};

enum class ObstacleKind { static_obstacle, augmented };

struct Obstacle {
    std::variant<Circle, ConvexPolygon> shape;
    ObstacleKind kind = ObstacleKind::static_obstacle;

    bool contains(Vec2 p) const;
    /// Euclidean distance from p to the shape (0 inside).
    double distance_to(Vec2 p) const;
    Bounds bounding_box() const;
    void validate() const;
    bool operator==(const Obstacle&) const = default;

    static Obstacle circle(Vec2 c, double r, ObstacleKind kind = ObstacleKind::static_obstacle);
    /// Oriented rectangle, returned as a CCW polygon.
    static Obstacle box(Vec2 c, double length, double width, double heading,
                        ObstacleKind kind = ObstacleKind::static_obstacle);
};

struct EgoState {
    Vec2 position;
    double heading = 0.0;  // (-pi, pi]
    double speed = 0.0;    // m/s
    double yaw_rate = 0.0;
    double accel_cmd = 0.0;
    double steer_cmd = 0.0;

    Pose2 pose() const { return {position, heading}; }
    bool operator==(const EgoState&) const = default;
};

/// Road centerline with a constant half-width.
struct Corridor {
    std::vector<Vec2> centerline;
    double half_width = 4.0;

    /// Arc length along the centerline of the closest point to p, and the signed lateral
    /// offset (left positive).
    std::pair<double, double> project(Vec2 p) const;
    Vec2 point_at(double station, double lateral = 0.0) const;
    double heading_at(double station) const;
    double length() const;
    bool operator==(const Corridor&) const = default;
};

struct Scene {
    Bounds bounds;
    std::vector<Obstacle> obstacles;
    EgoState ego;
    Vec2 goal;
    Corridor corridor;
    std::uint64_t seed = 0;

    void validate() const;
    /// Exact distance to the nearest obstacle shape; kDistanceSentinel without obstacles.
    double clearance(Vec2 p) const;
    bool operator==(const Scene&) const = default;
};

struct Scenario {
    std::string id;
    Scene scene;
    Trajectory past;    // world frame, t = -(T_p - 1) dt .. 0
    Trajectory future;  // world frame, t = dt .. T_f dt (observed tau_a)
    bool inattentive = false;
    bool augmented = false;
    int augment_mode = 0;  // 0 none, 1 trajectory scaling, 2 injected obstacle

    bool operator==(const Scenario&) const = default;
};

struct DriverModelConfig {
    double speed_min = 4.0;           // m/s
    double speed_max = 9.0;
    double speed_change_prob = 0.3;   // target speed change somewhere in the window
    double waypoint_noise = 0.15;     // m, lateral std of pursuit waypoints
    double waypoint_spacing = 2.0;    // m
    double lookahead = 5.0;           // m, pure pursuit
    double wheelbase = 2.7;           // m
    double max_steer = 0.6;           // rad
    double max_accel = 2.0;           // m/s^2
    double max_decel = 4.0;           // m/s^2
    double risk_prob = 0.1;           // p_risk: driver ignores obstacles
    double clearance = 2.0;           // m, attentive drivers keep at least this much
    double clearance_margin = 0.6;    // m, added to clearance when choosing the swerve offset
    double swerve_ramp = 18.0;        // m
    double lane_offset_max = 1.0;     // m
    // Inattentive drivers also weave inside the lane.
    double weave_amplitude_min = 0.3;  // m
    double weave_amplitude_max = 0.8;
    double weave_period_min = 2.5;     // s
    double weave_period_max = 4.5;
    bool operator==(const DriverModelConfig&) const = default;
};

struct ScenarioConfig {
    int past_steps = 20;    // T_p
    int future_steps = 30;  // T_f
    double dt = 0.1;
    double half_width_min = 3.5;
    double half_width_max = 5.0;
    double road_curvature_max = 0.004;  // 1/m
    double obstacle_density = 1.0;      // expected obstacles per 10 m of road ahead
    double obstacle_station_min = 6.0;  // m ahead of the ego
    double obstacle_station_max = 40.0;
    double behind = 12.0;  // bounds extent behind the ego, m
    double ahead = 48.0;
    double lateral = 14.0;
    double goal_lead = 2.0;  // m beyond the 3 s travel distance
    DriverModelConfig driver;
    bool operator==(const ScenarioConfig&) const = default;

    void validate() const;
};

struct NoiseParams {
    double p_add = 0.0;     // expected added obstacles per m^2 (Poisson rate)
    double p_remove = 0.0;  // per-obstacle removal probability
    double add_radius_min = 0.4;
    double add_radius_max = 1.2;
    double goal_sigma = 0.0;  // m
    double p_goal = 0.0;      // probability of shifting the goal
    double ego_keepout = 2.0; // m, added obstacles keep this far from the ego
    bool operator==(const NoiseParams&) const = default;

    void validate() const;
};

Scenario generate_scenario(const ScenarioConfig& config, std::uint64_t seed);

OccupancyGrid rasterize(const Scene& scene, double resolution);
/// Rasterizes onto an explicit lattice (must lie within the caller's area of interest).
OccupancyGrid rasterize(const Scene& scene, const GridGeometry& geometry);

DistanceField distance_transform(const OccupancyGrid& grid);

Scene inject_perception_noise(const Scene& scene, const NoiseParams& params, std::uint64_t seed);

/// Kinematic bicycle step used by the driver model and the session simulator.
EgoState bicycle_step(const EgoState& s, double steer, double accel, double dt, double wheelbase,
                      double max_speed = 1e9);

/// Pure-pursuit steering angle toward a target point.
double pure_pursuit_steer(const EgoState& s, Vec2 target, double wheelbase, double max_steer);

}  // namespace carpal
