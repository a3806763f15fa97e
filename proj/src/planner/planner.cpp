#include "carpal/planner.hpp"

#include <algorithm>
#include <queue>
#include <unordered_map>
#include <unordered_set>

namespace carpal {

void PlannerConfig::validate() const {
    require(heading_bins >= 1, "heading bins must be >= 1");
    require(arc_cells > 0.0, "primitive arc length must be positive");
    require(max_expansions >= 1, "expansion budget must be >= 1");
    require(goal_tolerance > 0.0 && goal_heading_tolerance > 0.0, "goal tolerances must be positive");
    require(utility_weight >= 0.0, "utility weight must be non-negative");
    require(horizon_steps >= 1 && dt > 0.0, "planner horizon must be positive");
}

const char* to_string(PlanStatus s) {
    switch (s) {
        case PlanStatus::found: return "found";
        case PlanStatus::no_path: return "no_path";
        case PlanStatus::budget_exhausted: return "budget_exhausted";
    }
    return "unknown";
}

Pose2 MotionPrimitive::apply(const Pose2& from) const { return apply(from, arc_length); }

Pose2 MotionPrimitive::apply(const Pose2& from, double len) const {
    const double th = from.heading;
    if (std::abs(curvature) < 1e-12)
        return {{from.position.x + len * std::cos(th), from.position.y + len * std::sin(th)}, th};
    const double th2 = th + curvature * len;
    return {{from.position.x + (std::sin(th2) - std::sin(th)) / curvature,
             from.position.y - (std::cos(th2) - std::cos(th)) / curvature},
            normalize_angle(th2)};
}

std::vector<MotionPrimitive> motion_primitives(const VehicleSpecs& specs, const PlannerConfig& cfg) {
    const double k = specs.max_curvature();
    const double len = cfg.arc_cells * cfg.cell_size;
    return {{-k, len}, {-0.5 * k, len}, {0.0, len}, {0.5 * k, len}, {k, len}};
}

double goal_heading(const Scene& scene) {
    return scene.corridor.heading_at(scene.corridor.project(scene.goal).first);
}

Trajectory resample_constant_speed(const std::vector<Vec2>& polyline, double speed, int steps, double dt) {
    require(!polyline.empty(), "cannot resample an empty path");
    std::vector<double> cum(polyline.size(), 0.0);
    for (std::size_t i = 1; i < polyline.size(); ++i) cum[i] = cum[i - 1] + distance(polyline[i - 1], polyline[i]);
    std::vector<Vec2> out;
    out.reserve(static_cast<std::size_t>(steps));
    std::size_t seg = 1;
    for (int k = 1; k <= steps; ++k) {
        const double s = speed * k * dt;
        if (polyline.size() == 1 || s >= cum.back()) {
            out.push_back(polyline.back());
            continue;
        }
        while (seg + 1 < polyline.size() && cum[seg] < s) ++seg;
        const double len = cum[seg] - cum[seg - 1];
        const double t = len > 0.0 ? (s - cum[seg - 1]) / len : 0.0;
        out.push_back(polyline[seg - 1] + (polyline[seg] - polyline[seg - 1]) * t);
    }
    return Trajectory::from_positions(out, dt, dt);
}

Trajectory braking_trajectory(const EgoState& ego, const VehicleSpecs& specs, int steps, double dt) {
    std::vector<Vec2> pts;
    const Vec2 dir{std::cos(ego.heading), std::sin(ego.heading)};
    const double stop_time = specs.braking_decel > 0.0 ? ego.speed / specs.braking_decel : 0.0;
    for (int k = 1; k <= steps; ++k) {
        const double t = std::min(k * dt, stop_time);
        const double s = ego.speed * t - 0.5 * specs.braking_decel * t * t;
        pts.push_back(ego.position + dir * s);
    }
    return Trajectory::from_positions(pts, dt, dt);
}

namespace {

struct Node {
    Pose2 pose;
    double g = 0.0;
    int parent = -1;
    int primitive = -1;
    double length = 0.0;  // arc length actually driven from the parent
    bool goal = false;
};

struct OpenEntry {
    double f;
    std::uint32_t id;
    bool operator>(const OpenEntry& o) const { return f > o.f || (f == o.f && id > o.id); }
};

}  // namespace

PlanResult plan(const Scene& scene, const UtilityField& field, const VehicleSpecs& specs, const PlannerConfig& cfg) {
    cfg.validate();
    const auto prims = motion_primitives(specs, cfg);
    const double cell = cfg.cell_size;
    const double r_max = field.max_value();
    const Vec2 goal = scene.goal;
    const double goal_th = goal_heading(scene);
    const Bounds extent = field.geometry.extent();
    const Vec2 origin = field.geometry.origin;
    const double bin_width = 2.0 * std::numbers::pi / cfg.heading_bins;

    auto key_of = [&](const Pose2& p) -> std::uint64_t {
        const auto cx = static_cast<std::int64_t>(std::floor((p.position.x - origin.x) / cell));
        const auto cy = static_cast<std::int64_t>(std::floor((p.position.y - origin.y) / cell));
        const double a = std::fmod(p.heading + 2.0 * std::numbers::pi, 2.0 * std::numbers::pi);
        const auto hb = std::clamp<std::int64_t>(static_cast<std::int64_t>(a / bin_width), 0, cfg.heading_bins - 1);
        return (static_cast<std::uint64_t>(cx + (1 << 20)) << 40) | (static_cast<std::uint64_t>(cy + (1 << 20)) << 16) |
               static_cast<std::uint64_t>(hb);
    };
    auto at_goal = [&](const Pose2& p) {
        return distance(p.position, goal) <= cfg.goal_tolerance &&
               std::abs(normalize_angle(p.heading - goal_th)) <= cfg.goal_heading_tolerance;
    };
    auto edge_cost = [&](const MotionPrimitive& prim, const Pose2& from, double len) {
        const Pose2 mid = prim.apply(from, 0.5 * len);
        const double r = std::min(field.value(mid.position), r_max);
        return len * (1.0 + cfg.utility_weight * (r_max - r));
    };

    // Clearance and goal probes along each primitive.
    const double step = std::max(field.geometry.resolution, 0.25);
    const int probes = std::max(1, static_cast<int>(std::ceil(prims.front().arc_length / step - 1e-9)));

    std::vector<Node> nodes;
    nodes.reserve(4096);
    std::priority_queue<OpenEntry, std::vector<OpenEntry>, std::greater<>> open;
    std::unordered_map<std::uint64_t, double> best_g;
    std::unordered_set<std::uint64_t> closed;

    const Pose2 start = scene.ego.pose();
    nodes.push_back({start, 0.0, -1, -1, 0.0, at_goal(start)});
    open.push({distance(start.position, goal), 0});
    best_g[key_of(start)] = 0.0;

    PlanResult result;
    if (!extent.contains(goal) || field.clearance(goal) < specs.radius) {
        result.status = PlanStatus::no_path;  // goal pose itself is in collision
        return result;
    }
    int goal_node = -1;
    while (!open.empty()) {
        const OpenEntry top = open.top();
        open.pop();
        const Node cur = nodes[top.id];
        if (cur.goal) {
            goal_node = static_cast<int>(top.id);
            break;
        }
        if (!closed.insert(key_of(cur.pose)).second) continue;
        if (result.expanded_nodes >= cfg.max_expansions) {
            result.status = PlanStatus::budget_exhausted;
            return result;
        }
        ++result.expanded_nodes;
        for (std::size_t pi = 0; pi < prims.size(); ++pi) {
            const auto& prim = prims[pi];
            bool blocked = false;
            for (int c = 1; c <= probes; ++c) {
                const double len = std::min(prim.arc_length, step * c);
                const Pose2 q = prim.apply(cur.pose, len);
                if (!extent.contains(q.position) || field.clearance(q.position) < specs.radius) {
                    blocked = true;
                    break;
                }
                if (at_goal(q)) {
                    const double ng = cur.g + edge_cost(prim, cur.pose, len);
                    nodes.push_back({q, ng, static_cast<int>(top.id), static_cast<int>(pi), len, true});
                    open.push({ng + distance(q.position, goal), static_cast<std::uint32_t>(nodes.size() - 1)});
                    blocked = true;  // the goal node replaces the full-length successor
                    break;
                }
            }
            if (blocked) continue;
            const Pose2 next = prim.apply(cur.pose);
            const std::uint64_t nkey = key_of(next);
            if (closed.count(nkey)) continue;
            const double ng = cur.g + edge_cost(prim, cur.pose, prim.arc_length);
            auto it = best_g.find(nkey);
            if (it != best_g.end() && it->second <= ng) continue;
            best_g[nkey] = ng;
            nodes.push_back({next, ng, static_cast<int>(top.id), static_cast<int>(pi), prim.arc_length, false});
            open.push({ng + distance(next.position, goal), static_cast<std::uint32_t>(nodes.size() - 1)});
        }
    }
    if (goal_node < 0) {
        result.status = PlanStatus::no_path;
        return result;
    }

    std::vector<int> chain;
    for (int n = goal_node; n >= 0; n = nodes[static_cast<std::size_t>(n)].parent) chain.push_back(n);
    std::reverse(chain.begin(), chain.end());
    std::vector<Vec2> dense{start.position};
    for (int id : chain) {
        const Node& n = nodes[static_cast<std::size_t>(id)];
        result.path.push_back(n.pose);
        if (n.parent < 0) continue;
        const auto& prim = prims[static_cast<std::size_t>(n.primitive)];
        const Pose2& from = nodes[static_cast<std::size_t>(n.parent)].pose;
        const int pieces = std::max(1, static_cast<int>(std::ceil(n.length / step - 1e-9)));
        for (int c = 1; c <= pieces; ++c) dense.push_back(prim.apply(from, n.length * c / pieces).position);
    }
    const Node& last = nodes[static_cast<std::size_t>(goal_node)];
    result.cost = last.g + distance(last.pose.position, goal);
    result.status = PlanStatus::found;
    result.trajectory = resample_constant_speed(dense, scene.ego.speed, cfg.horizon_steps, cfg.dt);
    return result;
}

std::uint64_t ensemble_member_seed(std::uint64_t seed, std::size_t index) {
    return derive_seed(seed, 0x706c616e00ULL + index);
}

std::vector<PlanResult> plan_ensemble(const Scene& scene, const UtilityField& field, const UtilityConfig& ucfg,
                                      const VehicleSpecs& specs, const PlannerConfig& cfg, const NoiseParams& noise,
                                      std::size_t m, std::uint64_t seed) {
    require(m >= 1, "ensemble size must be >= 1");
    noise.validate();
    std::vector<PlanResult> out(m);
    const auto count = static_cast<std::ptrdiff_t>(m);
#pragma omp parallel for schedule(dynamic, 1)
    for (std::ptrdiff_t i = 0; i < count; ++i) {
        const Scene perturbed = inject_perception_noise(scene, noise, ensemble_member_seed(seed, static_cast<std::size_t>(i)));
        const UtilityField member = with_scene(field, perturbed, ucfg);
        PlanResult r = plan(perturbed, member, specs, cfg);
        if (r.status != PlanStatus::found) {
            r.trajectory = braking_trajectory(scene.ego, specs, cfg.horizon_steps, cfg.dt);
            r.fallback = true;
        }
        out[static_cast<std::size_t>(i)] = std::move(r);
    }
    return out;
}

}  // namespace carpal
