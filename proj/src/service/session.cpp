#include "carpal/session.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "carpal/evaluation.hpp"
#include "carpal/planner.hpp"
#include "carpal/utility.hpp"

namespace carpal {

namespace {

Json ego_json(const EgoState& e) {
    return {{"x", e.position.x},   {"y", e.position.y},         {"heading", e.heading},  {"speed", e.speed},
            {"yaw_rate", e.yaw_rate}, {"steer", e.steer_cmd}, {"accel", e.accel_cmd}};
}

Json paths_json(const std::vector<Trajectory>& ts) {
    Json out = Json::array();
    for (const auto& t : ts) out.push_back(to_json(t).at("points"));
    return out;
}

}  // namespace

const char* to_string(Mode m) { return m == Mode::intervened ? "intervened" : "human"; }

Json to_json(const Frame& f) {
    return {{"type", "frame"},
            {"tick", f.tick},
            {"t", f.t},
            {"ego", ego_json(f.ego)},
            {"predictions", paths_json(f.predictions)},
            {"plans", paths_json(f.plans)},
            {"best_plan", f.best_plan},
            {"stats", to_json(f.stats)},
            {"outcome", to_string(f.outcome)},
            {"rationale", f.rationale},
            {"mode", to_string(f.mode)},
            {"decided", f.decided},
            {"clearance", f.clearance},
            {"done", f.done}};
}

ScenarioConfig session_scene_config(const Config& cfg) {
    ScenarioConfig sc = cfg.scene;
    sc.ahead = cfg.service.road_ahead;
    sc.obstacle_station_max = std::max(sc.obstacle_station_min + 1.0, sc.ahead - 12.0);
    // Room for the road to bend away from the x axis.
    sc.lateral = std::max(sc.lateral, 0.5 * sc.road_curvature_max * sc.ahead * sc.ahead + sc.half_width_max + 4.0);
    return sc;
}

Session::Session(const Config& cfg, std::shared_ptr<const PredictorModel> model, Scenario scenario,
                 std::uint64_t seed)
    : cfg_(cfg), model_(std::move(model)), scenario_(std::move(scenario)), seed_(seed) {
    cfg_.validate();
    require(model_ != nullptr, "session needs a model");
    scenario_.scene.validate();
    const auto& pts = scenario_.past.points();
    require(static_cast<int>(pts.size()) >= cfg_.scene.past_steps,
            "scenario past is shorter than " + std::to_string(cfg_.scene.past_steps) + " steps");
    for (auto it = pts.end() - cfg_.scene.past_steps; it != pts.end(); ++it) history_.push_back(it->xy());
    ego_ = scenario_.scene.ego;
    lane_ = scenario_.scene.corridor.project(ego_.position).second;
    decide_now();
    publish(true);
}

Scene Session::planning_scene() const {
    const Scene& truth = scenario_.scene;
    const auto& sv = cfg_.service;
    Bounds w{{ego_.position.x - sv.window_behind, ego_.position.y - cfg_.scene.lateral},
             {ego_.position.x + sv.window_ahead, ego_.position.y + cfg_.scene.lateral}};
    auto clip = [&](Bounds b) {
        return Bounds{{std::max(b.min.x, truth.bounds.min.x), std::max(b.min.y, truth.bounds.min.y)},
                      {std::min(b.max.x, truth.bounds.max.x), std::min(b.max.y, truth.bounds.max.y)}};
    };
    auto overlaps = [](const Bounds& a, const Bounds& b) {
        return a.min.x <= b.max.x && b.min.x <= a.max.x && a.min.y <= b.max.y && b.min.y <= a.max.y;
    };
    w = clip(w);
    Scene s;
    s.seed = truth.seed;
    s.corridor = truth.corridor;
    s.ego = ego_;
    // Grow the window over partially covered obstacles so none is cut.
    for (const auto& o : truth.obstacles) {
        const Bounds bb = o.bounding_box();
        if (!overlaps(bb, w)) continue;
        w = {{std::min(w.min.x, bb.min.x), std::min(w.min.y, bb.min.y)},
             {std::max(w.max.x, bb.max.x), std::max(w.max.y, bb.max.y)}};
        s.obstacles.push_back(o);
    }
    s.bounds = w;

    const double horizon = cfg_.scene.future_steps * cfg_.scene.dt;
    const auto [station, lateral] = truth.corridor.project(ego_.position);
    (void)lateral;
    const double want = station + ego_.speed * horizon + cfg_.scene.goal_lead;
    const double keep = cfg_.pipeline.vehicle.radius + 1.0;
    const double offsets[] = {lane_, 0.0, -1.5, 1.5, -3.0, 3.0};
    Vec2 goal = ego_.position;
    bool found = false;
    for (double s_goal = want; s_goal > station && !found; s_goal -= 2.0)
        for (double l : offsets) {
            const Vec2 g = truth.corridor.point_at(s_goal, l);
            const Bounds inner{{w.min.x + 1.0, w.min.y + 1.0}, {w.max.x - 1.0, w.max.y - 1.0}};
            if (!inner.contains(g) || truth.clearance(g) < keep) continue;
            goal = g;
            found = true;
            break;
        }
    s.goal = goal;
    return s;
}

void Session::decide_now() {
    const double dt = cfg_.scene.dt;
    Scenario view;
    view.id = scenario_.id;
    view.scene = planning_scene();
    const std::vector<Vec2> hist(history_.begin(), history_.end());
    view.past = Trajectory::from_positions(hist, -(static_cast<double>(hist.size()) - 1.0) * dt, dt);

    const Prediction p = model_->predict(featurize(view, cfg_.predictor.features));
    last_ = decide(p.stats, cfg_.decision);

    const auto& pc = cfg_.pipeline;
    const auto stream = static_cast<std::uint64_t>(tick_);
    predictions_ = world_samples(p, ego_.pose(), pc.samples, derive_seed(seed_, 2 * stream), dt);
    const UtilityField field = build_utility_field(view.scene, predictions_, pc.utility);
    const auto results = plan_ensemble(view.scene, field, pc.utility, pc.vehicle, pc.planner, pc.noise, pc.plans,
                                       derive_seed(seed_, 2 * stream + 1));
    plans_.clear();
    best_ = -1;
    double best_u = -std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < results.size(); ++i) {
        plans_.push_back(results[i].trajectory);
        const double u = trajectory_utility(field, results[i].trajectory);
        if (u > best_u) {
            best_u = u;
            best_ = static_cast<int>(i);
        }
    }

    if (mode_ == Mode::human && last_.action == Action::intervene) {
        mode_ = Mode::intervened;
    } else if (mode_ == Mode::intervened && released()) {
        mode_ = Mode::human;
    }
    if (mode_ == Mode::intervened && best_ >= 0) {
        active_ = plans_[static_cast<std::size_t>(best_)];
        active_fallback_ = results[static_cast<std::size_t>(best_)].fallback;
    }
    log_.push_back({tick_, last_.action, mode_});
}

bool Session::released() const {
    const double need = cfg_.evaluation.d_s + cfg_.service.hysteresis;
    const double now = scenario_.scene.clearance(ego_.position);
    const double ahead = min_clearance(scenario_.scene, constant_velocity_rollout(ego_, cfg_.predictor.horizon,
                                                                                   cfg_.scene.dt));
    return now > need && ahead > need;
}

ControlInput Session::pursuit() const {
    const auto& sv = cfg_.service;
    ControlInput u;
    u.accel = active_fallback_ ? -cfg_.pipeline.vehicle.braking_decel : 0.0;
    if (active_.empty()) return u;
    const auto& pts = active_.points();
    std::size_t closest = 0;
    double best = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < pts.size(); ++i) {
        const double d = distance(pts[i].xy(), ego_.position);
        if (d < best) {
            best = d;
            closest = i;
        }
    }
    Vec2 target = pts.back().xy();
    for (std::size_t i = closest; i < pts.size(); ++i)
        if (distance(pts[i].xy(), ego_.position) >= sv.pursuit_lookahead) {
            target = pts[i].xy();
            break;
        }
    if (distance(target, ego_.position) > 0.5)
        u.steer = pure_pursuit_steer(ego_, target, cfg_.scene.driver.wheelbase, sv.steer_max);
    u.accel = std::clamp(u.accel, -sv.accel_max, sv.accel_max);
    return u;
}

const Frame& Session::step(const ControlInput& input) {
    if (closed()) throw ValidationError("session closed");
    require(std::isfinite(input.steer) && std::isfinite(input.accel), "control values must be finite");
    const auto& sv = cfg_.service;
    ControlInput u = input;
    if (mode_ == Mode::human) {
        u.steer = std::clamp(u.steer, -sv.steer_max, sv.steer_max);
        u.accel = std::clamp(u.accel, -sv.accel_max, sv.accel_max);
    } else {
        u = pursuit();
    }
    ego_ = bicycle_step(ego_, u.steer, u.accel, cfg_.scene.dt, cfg_.scene.driver.wheelbase);
    ++tick_;
    history_.push_back(ego_.position);
    while (static_cast<int>(history_.size()) > cfg_.scene.past_steps) history_.pop_front();
    const bool decided = tick_ % sv.decision_interval == 0;
    if (decided) decide_now();
    publish(decided);
    return frame_;
}

void Session::publish(bool decided) {
    Frame f;
    f.tick = tick_;
    f.t = tick_ * cfg_.scene.dt;
    f.ego = ego_;
    f.predictions = predictions_;
    f.plans = plans_;
    f.best_plan = best_;
    f.stats = last_.inputs;
    f.outcome = last_.action;
    f.rationale = last_.rationale;
    f.mode = mode_;
    f.decided = decided;
    f.clearance = scenario_.scene.clearance(ego_.position);
    const Bounds& b = scenario_.scene.bounds;
    const Bounds inner{{b.min.x, b.min.y}, {b.max.x - cfg_.service.window_ahead * 0.25, b.max.y}};
    f.done = tick_ >= cfg_.service.max_ticks || !inner.contains(ego_.position) || f.clearance <= 0.0;
    frame_ = std::move(f);
}

std::vector<Frame> run_script(const Config& cfg, std::shared_ptr<const PredictorModel> model, const Scenario& scenario,
                              std::uint64_t seed, const std::vector<ControlInput>& inputs) {
    Session s(cfg, std::move(model), scenario, seed);
    std::vector<Frame> out{s.frame()};
    for (const auto& in : inputs) {
        if (s.closed()) break;
        out.push_back(s.step(in));
    }
    return out;
}

}  // namespace carpal
