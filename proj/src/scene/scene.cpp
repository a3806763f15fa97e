#include "carpal/scene.hpp"

#include <algorithm>
#include <limits>

#include "carpal/kernels.hpp"

namespace carpal {

namespace {

double segment_distance(Vec2 p, Vec2 a, Vec2 b) {
    const Vec2 ab = b - a;
    const double len2 = ab.dot(ab);
    double t = len2 > 0.0 ? (p - a).dot(ab) / len2 : 0.0;
    t = std::clamp(t, 0.0, 1.0);
    return distance(p, a + ab * t);
}

}  // namespace

// ---------------------------------------------------------------------------
// Obstacles

Obstacle Obstacle::circle(Vec2 c, double r, ObstacleKind kind) { return {Circle{c, r}, kind}; }

Obstacle Obstacle::box(Vec2 c, double length, double width, double heading, ObstacleKind kind) {
    const Pose2 frame{c, heading};
    const double hl = 0.5 * length, hw = 0.5 * width;
    ConvexPolygon poly{{frame.to_world({-hl, -hw}), frame.to_world({hl, -hw}), frame.to_world({hl, hw}),
                        frame.to_world({-hl, hw})}};
    return {std::move(poly), kind};
}

bool Obstacle::contains(Vec2 p) const {
    if (const auto* c = std::get_if<Circle>(&shape)) return distance(p, c->center) <= c->radius;
    const auto& v = std::get<ConvexPolygon>(shape).vertices;
    for (std::size_t i = 0; i < v.size(); ++i) {
        const Vec2 a = v[i], b = v[(i + 1) % v.size()];
        if ((b - a).cross(p - a) < 0.0) return false;
    }
    return true;
}

double Obstacle::distance_to(Vec2 p) const {
    if (const auto* c = std::get_if<Circle>(&shape)) return std::max(0.0, distance(p, c->center) - c->radius);
    if (contains(p)) return 0.0;
    const auto& v = std::get<ConvexPolygon>(shape).vertices;
    double best = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < v.size(); ++i) best = std::min(best, segment_distance(p, v[i], v[(i + 1) % v.size()]));
    return best;
}

Bounds Obstacle::bounding_box() const {
    if (const auto* c = std::get_if<Circle>(&shape))
        return {{c->center.x - c->radius, c->center.y - c->radius}, {c->center.x + c->radius, c->center.y + c->radius}};
    const auto& v = std::get<ConvexPolygon>(shape).vertices;
    Bounds b{v.front(), v.front()};
    for (const Vec2& p : v) {
        b.min = {std::min(b.min.x, p.x), std::min(b.min.y, p.y)};
        b.max = {std::max(b.max.x, p.x), std::max(b.max.y, p.y)};
    }
    return b;
}

void Obstacle::validate() const {
    if (const auto* c = std::get_if<Circle>(&shape)) {
        require(c->radius > 0.0 && std::isfinite(c->radius), "circle obstacle radius must be positive");
        return;
    }
    const auto& v = std::get<ConvexPolygon>(shape).vertices;
    require(v.size() >= 3, "polygon obstacle needs at least 3 vertices");
    for (std::size_t i = 0; i < v.size(); ++i) {
        const Vec2 a = v[i], b = v[(i + 1) % v.size()], c = v[(i + 2) % v.size()];
        require((b - a).cross(c - b) > 0.0, "polygon obstacle must be convex with counter-clockwise winding");
    }
}

// ---------------------------------------------------------------------------
// Corridor

double Corridor::length() const {
    double len = 0.0;
    for (std::size_t i = 1; i < centerline.size(); ++i) len += distance(centerline[i - 1], centerline[i]);
    return len;
}

std::pair<double, double> Corridor::project(Vec2 p) const {
    double best = std::numeric_limits<double>::infinity();
    double best_s = 0.0, best_l = 0.0, acc = 0.0;
    for (std::size_t i = 1; i < centerline.size(); ++i) {
        const Vec2 a = centerline[i - 1], b = centerline[i];
        const Vec2 ab = b - a;
        const double len = ab.norm();
        double t = len > 0.0 ? (p - a).dot(ab) / (len * len) : 0.0;
        // Extrapolate past the ends so stations stay monotone off the polyline.
        if (i > 1) t = std::max(t, 0.0);
        if (i + 1 < centerline.size()) t = std::min(t, 1.0);
        const Vec2 q = a + ab * t;
        const double d = distance(p, q);
        if (d < best) {
            best = d;
            best_s = acc + t * len;
            best_l = len > 0.0 ? ab.cross(p - a) / len : 0.0;
        }
        acc += len;
    }
    return {best_s, best_l};
}

Vec2 Corridor::point_at(double station, double lateral) const {
    double acc = 0.0;
    for (std::size_t i = 1; i < centerline.size(); ++i) {
        const Vec2 a = centerline[i - 1], b = centerline[i];
        const double len = distance(a, b);
        if (station <= acc + len || i + 1 == centerline.size()) {
            const double t = len > 0.0 ? (station - acc) / len : 0.0;
            const Vec2 dir = len > 0.0 ? (b - a) * (1.0 / len) : Vec2{1.0, 0.0};
            const Vec2 normal{-dir.y, dir.x};
            return a + (b - a) * t + normal * lateral;
        }
        acc += len;
    }
    return centerline.front();
}

double Corridor::heading_at(double station) const {
    double acc = 0.0;
    for (std::size_t i = 1; i < centerline.size(); ++i) {
        const Vec2 d = centerline[i] - centerline[i - 1];
        const double len = d.norm();
        if (station <= acc + len || i + 1 == centerline.size()) return std::atan2(d.y, d.x);
        acc += len;
    }
    return 0.0;
}

// ---------------------------------------------------------------------------
// Scene

void Scene::validate() const {
    require(bounds.width() > 0.0 && bounds.height() > 0.0, "scene bounds must have positive extent");
    require(bounds.contains(ego.position), "ego position must lie inside the scene bounds");
    require(bounds.contains(goal), "goal must lie inside the scene bounds");
    require(ego.speed >= 0.0, "ego speed must be non-negative");
    require(std::abs(normalize_angle(ego.heading) - ego.heading) < 1e-12, "ego heading must be normalized");
    require(corridor.half_width > 0.0, "corridor half-width must be positive");
    require(corridor.centerline.size() >= 2, "corridor centerline needs at least two points");
    for (const auto& o : obstacles) {
        o.validate();
        const Bounds bb = o.bounding_box();
        require(bounds.contains(bb.min) && bounds.contains(bb.max), "obstacle must lie fully inside the scene bounds");
    }
}

double Scene::clearance(Vec2 p) const {
    double best = kDistanceSentinel;
    for (const auto& o : obstacles) best = std::min(best, o.distance_to(p));
    return best;
}

void ScenarioConfig::validate() const {
    require(past_steps >= 3, "past horizon must be at least 3 steps");
    require(future_steps >= 3, "future horizon must be at least 3 steps");
    require(dt > 0.0, "dt must be positive");
    require(half_width_min > 0.0 && half_width_max >= half_width_min, "corridor width range must be positive");
    require(obstacle_density >= 0.0, "obstacle density must be non-negative");
    require(obstacle_station_max > obstacle_station_min, "obstacle station range is empty");
    require(driver.speed_min >= 0.0 && driver.speed_max >= driver.speed_min, "driver speed range is invalid");
    require(driver.risk_prob >= 0.0 && driver.risk_prob <= 1.0, "risk probability must be in [0, 1]");
    require(driver.lookahead > 0.0 && driver.wheelbase > 0.0, "pure pursuit geometry must be positive");
    require(driver.weave_amplitude_min >= 0.0 && driver.weave_amplitude_max >= driver.weave_amplitude_min,
            "weave amplitude range is invalid");
    require(driver.weave_period_min > 0.0 && driver.weave_period_max >= driver.weave_period_min,
            "weave period range is invalid");
    require(behind > 0.0 && ahead > 0.0 && lateral > 0.0, "scene extents must be positive");
}

void NoiseParams::validate() const {
    auto prob = [](double p) { return p >= 0.0 && p <= 1.0; };
    require(prob(p_add) && prob(p_remove) && prob(p_goal), "noise probabilities must be in [0, 1]");
    require(add_radius_min > 0.0 && add_radius_max >= add_radius_min, "added obstacle size range is invalid");
    require(goal_sigma >= 0.0, "goal jitter must be non-negative");
}

// ---------------------------------------------------------------------------
// Kinematics

EgoState bicycle_step(const EgoState& s, double steer, double accel, double dt, double wheelbase, double max_speed) {
    EgoState n = s;
    n.position = {s.position.x + s.speed * std::cos(s.heading) * dt, s.position.y + s.speed * std::sin(s.heading) * dt};
    n.yaw_rate = s.speed / wheelbase * std::tan(steer);
    n.heading = normalize_angle(s.heading + n.yaw_rate * dt);
    n.speed = std::clamp(s.speed + accel * dt, 0.0, max_speed);
    n.steer_cmd = steer;
    n.accel_cmd = accel;
    return n;
}

double pure_pursuit_steer(const EgoState& s, Vec2 target, double wheelbase, double max_steer) {
    const Vec2 local = s.pose().to_local(target);
    const double ld2 = std::max(local.dot(local), 1e-6);
    const double curvature = 2.0 * local.y / ld2;
    return std::clamp(std::atan(curvature * wheelbase), -max_steer, max_steer);
}

// ---------------------------------------------------------------------------
// Rasterization and distance transform

OccupancyGrid rasterize(const Scene& scene, double resolution) {
    return rasterize(scene, GridGeometry::covering(scene.bounds, resolution));
}

OccupancyGrid rasterize(const Scene& scene, const GridGeometry& g) {
    g.validate();
    OccupancyGrid grid{g, std::vector<std::uint8_t>(g.cell_count(), 0)};
    const double res = g.resolution;
    for (const auto& o : scene.obstacles) {
        const Bounds bb = o.bounding_box();
        const int i0 = std::max(0, static_cast<int>(std::floor((bb.min.x - g.origin.x) / res - 0.5)));
        const int i1 = std::min(g.nx - 1, static_cast<int>(std::ceil((bb.max.x - g.origin.x) / res - 0.5)));
        const int j0 = std::max(0, static_cast<int>(std::floor((bb.min.y - g.origin.y) / res - 0.5)));
        const int j1 = std::min(g.ny - 1, static_cast<int>(std::ceil((bb.max.y - g.origin.y) / res - 0.5)));
        for (int j = j0; j <= j1; ++j)
            for (int i = i0; i <= i1; ++i)
                if (o.contains(g.center(i, j))) grid.cells[g.index(i, j)] = 1;
    }
    return grid;
}

DistanceField distance_transform(const OccupancyGrid& grid) {
    const auto& g = grid.geometry;
    g.validate();
    std::vector<double> sq = kernels::parallel::squared_edt(grid.cells, g.nx, g.ny);
    for (double& v : sq) v = std::isinf(v) ? kDistanceSentinel : std::sqrt(v) * g.resolution;
    return {g, std::move(sq)};
}

// ---------------------------------------------------------------------------
// Perception noise

Scene inject_perception_noise(const Scene& scene, const NoiseParams& params, std::uint64_t seed) {
    params.validate();
    Scene out = scene;
    Rng rng = make_rng(seed, 0x6e6f697365ULL);
    std::uniform_real_distribution<double> unit(0.0, 1.0);

    out.obstacles.clear();
    for (const auto& o : scene.obstacles)
        if (!(unit(rng) < params.p_remove)) out.obstacles.push_back(o);

    const double lambda = params.p_add * scene.bounds.area();
    const int added = lambda > 0.0 ? std::poisson_distribution<int>(lambda)(rng) : 0;
    std::uniform_real_distribution<double> radius(params.add_radius_min, params.add_radius_max);
    for (int k = 0; k < added; ++k) {
        const double r = radius(rng);
        const double span_x = scene.bounds.width() - 2 * r, span_y = scene.bounds.height() - 2 * r;
        if (span_x <= 0.0 || span_y <= 0.0) continue;
        const Vec2 c{scene.bounds.min.x + r + unit(rng) * span_x, scene.bounds.min.y + r + unit(rng) * span_y};
        if (distance(c, scene.ego.position) < r + params.ego_keepout) continue;
        out.obstacles.push_back(Obstacle::circle(c, r, ObstacleKind::augmented));
    }

    if (params.p_goal > 0.0 && unit(rng) < params.p_goal && params.goal_sigma > 0.0) {
        std::normal_distribution<double> jitter(0.0, params.goal_sigma);
        const double gx = jitter(rng), gy = jitter(rng);
        out.goal = {std::clamp(scene.goal.x + gx, scene.bounds.min.x, scene.bounds.max.x),
                    std::clamp(scene.goal.y + gy, scene.bounds.min.y, scene.bounds.max.y)};
    }
    return out;
}

}  // namespace carpal
