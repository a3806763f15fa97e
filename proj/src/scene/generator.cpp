#include <algorithm>
#include <limits>

#include "carpal/scene.hpp"

namespace carpal {

namespace {

// Station of the world origin on the generated centerline.
constexpr double kOriginStation = 60.0;
constexpr double kRoadLength = 160.0;

Corridor make_corridor(double curvature, double half_width) {
    const int n = static_cast<int>(kRoadLength) + 1;
    std::vector<Vec2> pts(static_cast<std::size_t>(n));
    const int origin = static_cast<int>(kOriginStation);
    pts[static_cast<std::size_t>(origin)] = {0.0, 0.0};
    // Heading grows linearly with station, zero at the origin.
    for (int i = origin + 1; i < n; ++i) {
        const double th = curvature * (i - 0.5 - kOriginStation);
        pts[static_cast<std::size_t>(i)] = pts[static_cast<std::size_t>(i - 1)] + Vec2{std::cos(th), std::sin(th)};
    }
    for (int i = origin - 1; i >= 0; --i) {
        const double th = curvature * (i + 0.5 - kOriginStation);
        pts[static_cast<std::size_t>(i)] = pts[static_cast<std::size_t>(i + 1)] - Vec2{std::cos(th), std::sin(th)};
    }
    return {std::move(pts), half_width};
}

struct Footprint {
    double s_lo, s_hi, l_lo, l_hi;
};

Footprint footprint(const Corridor& road, const Obstacle& o) {
    std::vector<Vec2> probe;
    if (const auto* c = std::get_if<Circle>(&o.shape)) {
        for (int k = 0; k < 8; ++k) {
            const double a = k * std::numbers::pi / 4.0;
            probe.push_back(c->center + Vec2{std::cos(a), std::sin(a)} * c->radius);
        }
    } else {
        probe = std::get<ConvexPolygon>(o.shape).vertices;
    }
    Footprint f{1e18, -1e18, 1e18, -1e18};
    for (const Vec2& p : probe) {
        const auto [s, l] = road.project(p);
        f.s_lo = std::min(f.s_lo, s);
        f.s_hi = std::max(f.s_hi, s);
        f.l_lo = std::min(f.l_lo, l);
        f.l_hi = std::max(f.l_hi, l);
    }
    return f;
}

struct Swerve {
    Footprint fp;
    double shift;
};

/// Desired lateral offset of the driver's path at a station.
class ReferencePath {
public:
    ReferencePath(double base, double ramp, double pad, std::vector<Swerve> swerves, std::vector<double> noise,
                  double spacing, double noise_origin)
        : base_(base), ramp_(ramp), pad_(pad), swerves_(std::move(swerves)), noise_(std::move(noise)),
          spacing_(spacing), noise_origin_(noise_origin) {}

    double offset(double s) const {
        double best = 0.0;
        for (const auto& sw : swerves_) {
            double w = 0.0;
            const double in = sw.fp.s_lo - pad_, out = sw.fp.s_hi + pad_;
            if (s >= in && s <= out) w = 1.0;
            else if (s < in && s > in - ramp_) w = (s - (in - ramp_)) / ramp_;
            else if (s > out && s < out + ramp_) w = ((out + ramp_) - s) / ramp_;
            const double contrib = w * sw.shift;
            if (std::abs(contrib) > std::abs(best)) best = contrib;
        }
        return base_ + best + noise_at(s);
    }

private:
    double noise_at(double s) const {
        if (noise_.empty()) return 0.0;
        const double u = std::clamp((s - noise_origin_) / spacing_, 0.0, static_cast<double>(noise_.size() - 1));
        const auto i = std::min(static_cast<std::size_t>(u), noise_.size() - 2);
        const double f = u - static_cast<double>(i);
        return (1 - f) * noise_[i] + f * noise_[i + 1];
    }

    double base_, ramp_, pad_;
    std::vector<Swerve> swerves_;
    std::vector<double> noise_;
    double spacing_, noise_origin_;
};

}  // namespace

Scenario generate_scenario(const ScenarioConfig& config, std::uint64_t seed) {
    config.validate();
    const auto& drv = config.driver;
    Rng rng = make_rng(seed, 0x7363656eULL);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    auto uniform = [&](double lo, double hi) { return lo + (hi - lo) * unit(rng); };
    std::normal_distribution<double> gauss(0.0, 1.0);

    const double half_width = uniform(config.half_width_min, config.half_width_max);
    const double curvature = uniform(-config.road_curvature_max, config.road_curvature_max);
    const Corridor road = make_corridor(curvature, half_width);
    const double lane = uniform(-drv.lane_offset_max, drv.lane_offset_max);
    const double v_target = uniform(drv.speed_min, drv.speed_max);
    const bool inattentive = unit(rng) < drv.risk_prob;
    const double horizon = config.future_steps * config.dt;
    const double goal_station = kOriginStation + v_target * horizon + config.goal_lead;

    Bounds bounds{{-config.behind, -config.lateral}, {config.ahead, config.lateral}};

    // Obstacles ahead of the ego.
    std::vector<Obstacle> obstacles;
    const double span = config.obstacle_station_max - config.obstacle_station_min;
    const double lambda = config.obstacle_density * span / 10.0;
    const int count = lambda > 0.0 ? std::poisson_distribution<int>(lambda)(rng) : 0;
    for (int k = 0; k < count; ++k) {
        const double s = kOriginStation + uniform(config.obstacle_station_min, config.obstacle_station_max);
        const double road_heading = road.heading_at(s);
        const double kind = unit(rng);
        Obstacle o;
        if (kind < 0.4) {
            // Parked car along either edge.
            const double side = unit(rng) < 0.5 ? -1.0 : 1.0;
            const double l = side * (half_width - uniform(0.6, 1.6));
            o = Obstacle::box(road.point_at(s, l), uniform(4.0, 5.0), uniform(1.7, 2.0), road_heading);
        } else if (kind < 0.7) {
            const double l = uniform(-half_width + 0.5, half_width - 0.5);
            o = Obstacle::circle(road.point_at(s, l), uniform(0.4, 1.0));
        } else {
            const double l = uniform(-half_width + 0.8, half_width - 0.8);
            o = Obstacle::box(road.point_at(s, l), uniform(1.0, 2.5), uniform(0.8, 2.0),
                              road_heading + uniform(-0.5, 0.5));
        }
        const Bounds bb = o.bounding_box();
        if (!bounds.contains(bb.min) || !bounds.contains(bb.max)) continue;
        // Keep the goal reachable.
        const Footprint fp = footprint(road, o);
        if (fp.s_hi > goal_station - 4.0 && fp.s_lo < goal_station + 4.0 && fp.l_hi > lane - 2.0 &&
            fp.l_lo < lane + 2.0)
            continue;
        obstacles.push_back(std::move(o));
    }

    const int total_steps = config.past_steps + config.future_steps;
    const double v0 = std::max(0.0, v_target + 0.3 * gauss(rng));
    const double s_start = kOriginStation - v0 * (config.past_steps - 1) * config.dt;
    const double travel = drv.speed_max * 1.5 * total_steps * config.dt + 2 * drv.lookahead;
    std::vector<double> noise(static_cast<std::size_t>(travel / drv.waypoint_spacing) + 2);
    for (double& n : noise) n = drv.waypoint_noise * gauss(rng);
    const int change_step = unit(rng) < drv.speed_change_prob ? static_cast<int>(unit(rng) * total_steps) : -1;
    const double change_factor = uniform(0.7, 1.3);
    const double heading_jitter = 0.02 * gauss(rng);
    const double weave_amp = uniform(drv.weave_amplitude_min, drv.weave_amplitude_max);
    const double weave_len = std::max(1.0, v_target * uniform(drv.weave_period_min, drv.weave_period_max));
    const double weave_phase = uniform(0.0, 2.0 * std::numbers::pi);
    const double c = drv.clearance + drv.clearance_margin;

    auto drive = [&](bool attentive) {
        std::vector<Swerve> swerves;
        if (attentive) {
            for (const auto& o : obstacles) {
                const Footprint fp = footprint(road, o);
                if (lane + c <= fp.l_lo || lane - c >= fp.l_hi) continue;
                const double left = fp.l_hi + c - lane, right = fp.l_lo - c - lane;
                swerves.push_back({fp, std::abs(left) <= std::abs(right) ? left : right});
            }
        }
        const ReferencePath ref(lane, drv.swerve_ramp, c, std::move(swerves), noise, drv.waypoint_spacing, s_start);
        auto offset = [&](double s) {
            if (attentive) return ref.offset(s);
            return ref.offset(s) + weave_amp * std::sin(2.0 * std::numbers::pi * s / weave_len + weave_phase);
        };
        double speed_goal = v_target;
        EgoState state;
        state.position = road.point_at(s_start, offset(s_start));
        state.heading = normalize_angle(road.heading_at(s_start) + heading_jitter);
        state.speed = v0;
        std::vector<EgoState> states;
        states.reserve(static_cast<std::size_t>(total_steps));
        for (int step = 0; step < total_steps; ++step) {
            if (step == change_step) speed_goal = v_target * change_factor;
            const double s_look = road.project(state.position).first + drv.lookahead;
            const double steer = pure_pursuit_steer(state, road.point_at(s_look, offset(s_look)), drv.wheelbase,
                                                    drv.max_steer);
            const double accel = std::clamp(speed_goal - state.speed, -drv.max_decel, drv.max_accel);
            state.steer_cmd = steer;
            state.accel_cmd = accel;
            states.push_back(state);
            state = bicycle_step(state, steer, accel, config.dt, drv.wheelbase);
        }
        return states;
    };

    // Thin the obstacle set until an attentive driver keeps its clearance over the whole
    // rollout, so both driver types see the same scene distribution.
    std::vector<EgoState> states = drive(true);
    while (!obstacles.empty()) {
        double worst = std::numeric_limits<double>::infinity();
        std::size_t culprit = 0;
        for (const auto& st : states)
            for (std::size_t i = 0; i < obstacles.size(); ++i) {
                const double d = obstacles[i].distance_to(st.position);
                if (d < worst) worst = d, culprit = i;
            }
        if (worst >= drv.clearance) break;
        obstacles.erase(obstacles.begin() + static_cast<std::ptrdiff_t>(culprit));
        states = drive(true);
    }
    if (inattentive) states = drive(false);

    std::vector<Vec2> past_xy, future_xy;
    for (int i = 0; i < config.past_steps; ++i) past_xy.push_back(states[static_cast<std::size_t>(i)].position);
    for (int i = config.past_steps; i < total_steps; ++i) future_xy.push_back(states[static_cast<std::size_t>(i)].position);

    Scenario sc;
    sc.id = "s" + std::to_string(seed);
    sc.scene.bounds = bounds;
    sc.scene.obstacles = std::move(obstacles);
    sc.scene.ego = states[static_cast<std::size_t>(config.past_steps - 1)];
    sc.scene.goal = road.point_at(goal_station, lane);
    sc.scene.corridor = road;
    sc.scene.seed = seed;
    sc.past = Trajectory::from_positions(past_xy, -(config.past_steps - 1) * config.dt, config.dt);
    sc.future = Trajectory::from_positions(future_xy, config.dt, config.dt);
    sc.inattentive = inattentive;
    sc.scene.validate();
    return sc;
}

}  // namespace carpal
