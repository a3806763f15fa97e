#include "carpal/utility.hpp"

#include <algorithm>

#include "carpal/kernels.hpp"

namespace carpal {

void UtilityConfig::validate() const {
    require(alpha >= 0.0, "alpha must be non-negative");
    require(bandwidth > 0.0, "KDE bandwidth must be positive");
    require(density_floor > 0.0, "density floor must be positive");
    require(resolution > 0.0, "field resolution must be positive");
}

IntentionModel::IntentionModel(std::vector<Vec2> support, double bandwidth)
    : support_(std::move(support)), bandwidth_(bandwidth) {
    require(bandwidth_ > 0.0, "KDE bandwidth must be positive");
    require(!support_.empty(), "KDE needs at least one support point");
    norm_ = 1.0 / (2.0 * std::numbers::pi * bandwidth_ * bandwidth_ * static_cast<double>(support_.size()));
}

IntentionModel IntentionModel::from_trajectories(std::span<const Trajectory> samples, double bandwidth) {
    std::vector<Vec2> pts;
    for (const auto& t : samples)
        for (const auto& p : t.points()) pts.push_back(p.xy());
    return IntentionModel(std::move(pts), bandwidth);
}

double IntentionModel::density(Vec2 p) const {
    const double inv2h2 = 1.0 / (2.0 * bandwidth_ * bandwidth_);
    double acc = 0.0;
    for (const Vec2& s : support_) {
        const Vec2 d = p - s;
        acc += std::exp(-d.dot(d) * inv2h2);
    }
    return acc * norm_;
}

IntentionModel intention_density(std::span<const Trajectory> samples, double bandwidth) {
    require(!samples.empty(), "intention density needs at least one sample");
    return IntentionModel::from_trajectories(samples, bandwidth);
}

double safety_utility(double d, double k, double d0) {
    const double z = k * (d * d - d0 * d0);
    if (z > 37.0) return 1.0;
    return 1.0 / (1.0 + std::exp(-z));
}

std::vector<double> safety_utility(const DistanceField& dist, double k, double d0) {
    return kernels::parallel::safety(dist.values, k, d0);
}

GridGeometry field_geometry(const Scene& scene, double resolution) {
    return GridGeometry::covering(scene.bounds, resolution);
}

SafetyLayer build_safety_layer(const Scene& scene, const GridGeometry& geometry, const UtilityConfig& cfg) {
    SafetyLayer layer{distance_transform(rasterize(scene, geometry)), {}};
    layer.safety = safety_utility(layer.distance, cfg.sigmoid_k, cfg.sigmoid_d0);
    return layer;
}

IntentionLayer build_intention_layer(const IntentionModel& model, const GridGeometry& geometry,
                                     const UtilityConfig& cfg) {
    IntentionLayer layer{geometry, kernels::parallel::kde_density(geometry, model.support(), model.bandwidth()), 0.0};
    const double floor = std::log(cfg.density_floor);
    double best = floor;
    for (double& v : layer.log_density) {
        v = v > cfg.density_floor ? std::log(v) : floor;
        best = std::max(best, v);
    }
    layer.max_log_density = best;
    return layer;
}

UtilityField build_utility_field(const Scene& scene, std::span<const Trajectory> samples, const UtilityConfig& cfg) {
    return build_utility_field(scene, samples, cfg, field_geometry(scene, cfg.resolution));
}

UtilityField build_utility_field(const Scene& scene, std::span<const Trajectory> samples, const UtilityConfig& cfg,
                                 const GridGeometry& geometry) {
    cfg.validate();
    const IntentionModel model = intention_density(samples, cfg.bandwidth);
    UtilityField f;
    f.geometry = geometry;
    f.alpha = cfg.alpha;
    f.safety_layer = std::make_shared<const SafetyLayer>(build_safety_layer(scene, geometry, cfg));
    f.intention_layer = std::make_shared<const IntentionLayer>(build_intention_layer(model, geometry, cfg));
    return f;
}

UtilityField with_scene(const UtilityField& field, const Scene& scene, const UtilityConfig& cfg) {
    UtilityField f = field;
    f.safety_layer = std::make_shared<const SafetyLayer>(build_safety_layer(scene, field.geometry, cfg));
    return f;
}

double UtilityField::value(Vec2 s, bool* clamped) const {
    return bilinear(geometry, safety(), s, clamped) + alpha * bilinear(geometry, intention(), s);
}

TrajectoryUtility evaluate_trajectory(const UtilityField& field, const Trajectory& traj) {
    require(!traj.empty(), "trajectory utility needs at least one point");
    TrajectoryUtility out;
    double acc = 0.0;
    for (const auto& p : traj.points()) {
        bool clamped = false;
        acc += field.value(p.xy(), &clamped);
        out.clamped_points += clamped ? 1 : 0;
    }
    out.utility = acc / static_cast<double>(traj.size());
    return out;
}

double trajectory_utility(const UtilityField& field, const Trajectory& traj) {
    return evaluate_trajectory(field, traj).utility;
}

MeanVar population_stats(std::span<const double> values) {
    require(!values.empty(), "statistics need at least one value");
    // Welford's update.
    double mean = 0.0, m2 = 0.0;
    std::size_t n = 0;
    for (double v : values) {
        ++n;
        const double delta = v - mean;
        mean += delta / static_cast<double>(n);
        m2 += delta * (v - mean);
    }
    return {mean, std::max(0.0, m2 / static_cast<double>(n))};
}

UtilityStats utility_stats(const UtilityField& field, std::span<const Trajectory> samples_h,
                           std::span<const Trajectory> samples_p) {
    require(!samples_h.empty() && !samples_p.empty(), "utility statistics need non-empty sample sets");
    std::vector<double> uh, up;
    for (const auto& t : samples_h) uh.push_back(trajectory_utility(field, t));
    for (const auto& t : samples_p) up.push_back(trajectory_utility(field, t));
    const MeanVar h = population_stats(uh), p = population_stats(up);
    return {h.mean, h.var, p.mean, p.var};
}

}  // namespace carpal
