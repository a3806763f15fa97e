#pragma once

#include <cmath>
#include <memory>
#include <optional>
#include <span>
#include <vector>

#include "carpal/grid.hpp"
#include "carpal/scene.hpp"
#include "carpal/trajectory.hpp"

namespace carpal {

struct UtilityConfig {
    double alpha = 0.1;           // intention weight
    double bandwidth = 0.5;       // KDE bandwidth, m
    double sigmoid_k = 1.0;       // safety = sigmoid(k (d^2 - d0^2))
    double sigmoid_d0 = 0.0;      // m
    double density_floor = 1e-6;  // intention = log(max(density, floor))
    double resolution = 0.1;      // m per cell
    bool operator==(const UtilityConfig&) const = default;

    void validate() const;
};

/// Isotropic Gaussian KDE over every point of every sampled trajectory.
class IntentionModel {
public:
    IntentionModel(std::vector<Vec2> support, double bandwidth);
    static IntentionModel from_trajectories(std::span<const Trajectory> samples, double bandwidth);

    double bandwidth() const { return bandwidth_; }
    const std::vector<Vec2>& support() const { return support_; }
    /// 1 / (2 pi h^2 N)
    double normalization() const { return norm_; }
    double density(Vec2 p) const;

private:
    std::vector<Vec2> support_;
    double bandwidth_;
    double norm_;
};

/// Distance and safety layers derived from one (possibly perturbed) scene.
struct SafetyLayer {
    DistanceField distance;
    std::vector<double> safety;
};

/// Clamped log density layer shared by every field built from the same samples.
struct IntentionLayer {
    GridGeometry geometry;
    std::vector<double> log_density;
    double max_log_density = 0.0;
};

/// Combined per-position utility r = safety + alpha * intention on a lattice.
struct UtilityField {
    GridGeometry geometry;
    std::shared_ptr<const SafetyLayer> safety_layer;
    std::shared_ptr<const IntentionLayer> intention_layer;
    double alpha = 0.1;

    std::span<const double> safety() const { return safety_layer->safety; }
    std::span<const double> intention() const { return intention_layer->log_density; }
    const DistanceField& distance() const { return safety_layer->distance; }

    double combined_at(int i, int j) const {
        const auto k = geometry.index(i, j);
        return safety_layer->safety[k] + alpha * intention_layer->log_density[k];
    }
    /// Interpolated r(s); sets *clamped when s lies outside the lattice.
    double value(Vec2 s, bool* clamped = nullptr) const;
    double clearance(Vec2 s) const { return distance().sample(s); }
    /// Upper bound of r over the field: 1 + alpha * max intention.
    double max_value() const { return 1.0 + alpha * intention_layer->max_log_density; }
};

struct UtilityStats {
    double mu_h = 0.0;
    double var_h = 0.0;
    double mu_p = 0.0;
    double var_p = 0.0;
    bool operator==(const UtilityStats&) const = default;
};

struct MeanVar {
    double mean = 0.0;
    double var = 0.0;  // population
};

/// sigmoid(k (d^2 - d0^2)) per cell.
std::vector<double> safety_utility(const DistanceField& dist, double k = 1.0, double d0 = 0.0);
double safety_utility(double distance, double k = 1.0, double d0 = 0.0);

IntentionModel intention_density(std::span<const Trajectory> samples, double bandwidth);

/// Default lattice used for a scene's utility fields.
GridGeometry field_geometry(const Scene& scene, double resolution);

SafetyLayer build_safety_layer(const Scene& scene, const GridGeometry& geometry, const UtilityConfig& cfg);
IntentionLayer build_intention_layer(const IntentionModel& model, const GridGeometry& geometry,
                                     const UtilityConfig& cfg);

UtilityField build_utility_field(const Scene& scene, std::span<const Trajectory> samples, const UtilityConfig& cfg);
UtilityField build_utility_field(const Scene& scene, std::span<const Trajectory> samples, const UtilityConfig& cfg,
                                 const GridGeometry& geometry);
/// Same intention layer, safety rebuilt from another scene.
UtilityField with_scene(const UtilityField& field, const Scene& scene, const UtilityConfig& cfg);

struct TrajectoryUtility {
    double utility = 0.0;
    std::size_t clamped_points = 0;
};

/// Mean of r over the trajectory's points, bilinearly interpolated.
TrajectoryUtility evaluate_trajectory(const UtilityField& field, const Trajectory& traj);
double trajectory_utility(const UtilityField& field, const Trajectory& traj);

MeanVar population_stats(std::span<const double> values);

UtilityStats utility_stats(const UtilityField& field, std::span<const Trajectory> samples_h,
                           std::span<const Trajectory> samples_p);

}  // namespace carpal
