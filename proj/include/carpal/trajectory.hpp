#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <vector>

#include "carpal/common.hpp"

namespace carpal {

struct TrajPoint {
    double t = 0.0;
    double x = 0.0;
    double y = 0.0;

    Vec2 xy() const { return {x, y}; }
    bool operator==(const TrajPoint&) const = default;
};

/// Uniformly time-sampled 2-D path. Construction validates spacing.
class Trajectory {
public:
    Trajectory() = default;
    Trajectory(std::vector<TrajPoint> points, double dt);

    /// Builds a trajectory from positions at t = t0, t0 + dt, ...
    static Trajectory from_positions(std::span<const Vec2> xy, double t0, double dt);

    const std::vector<TrajPoint>& points() const { return points_; }
    double dt() const { return dt_; }
    std::size_t size() const { return points_.size(); }
    bool empty() const { return points_.empty(); }
    const TrajPoint& operator[](std::size_t i) const { return points_[i]; }
    const TrajPoint& front() const { return points_.front(); }
    const TrajPoint& back() const { return points_.back(); }

    /// Sum of segment lengths.
    double length() const;

    /// Applies a rigid transform to every point; times are kept.
    Trajectory transformed(const Pose2& frame_to_world) const;
    Trajectory to_frame(const Pose2& frame) const;

    bool operator==(const Trajectory&) const = default;

private:
    std::vector<TrajPoint> points_;
    double dt_ = 0.1;
};

/// Quadratic coefficients: x(t) = ax[0] + ax[1] t + ax[2] t^2 (same for y).
struct PolyCoeffs {
    std::array<double, 3> ax{};
    std::array<double, 3> ay{};

    std::array<double, 6> flat() const { return {ax[0], ax[1], ax[2], ay[0], ay[1], ay[2]}; }
    static PolyCoeffs from_flat(std::span<const double, 6> v) {
        return {{v[0], v[1], v[2]}, {v[3], v[4], v[5]}};
    }
    Vec2 at(double t) const {
        return {ax[0] + t * (ax[1] + t * ax[2]), ay[0] + t * (ay[1] + t * ay[2])};
    }
    bool operator==(const PolyCoeffs&) const = default;
};

/// Lower bound applied to every coefficient variance.
inline constexpr double kVarianceFloor = 1e-6;

/// Diagonal Gaussian over the six polynomial coefficients.
struct TrajectoryDistribution {
    PolyCoeffs mean;
    std::array<double, 6> log_var{};
    double horizon = 3.0;

    /// exp(log_var) clamped from below by kVarianceFloor.
    std::array<double, 6> variances() const;
};

/// Least-squares quadratic fit of x(t) and y(t) on the trajectory's own time grid.
PolyCoeffs project(const Trajectory& traj);

/// Evaluates coefficients at t = dt, 2 dt, ..., horizon.
Trajectory reconstruct(const PolyCoeffs& coeffs, double horizon, double dt);

/// n independent draws, reconstructed on the horizon grid.
std::vector<Trajectory> sample(const TrajectoryDistribution& dist, std::size_t n, std::uint64_t seed,
                               double dt = 0.1);

/// Coefficient draws only (used by sample and by tests of its moments).
std::vector<PolyCoeffs> sample_coeffs(const TrajectoryDistribution& dist, std::size_t n,
                                      std::uint64_t seed);

/// Negative log density of project(observed) under the distribution.
double nll(const TrajectoryDistribution& dist, const Trajectory& observed);

/// Negative log density of a coefficient vector.
double nll(const TrajectoryDistribution& dist, const PolyCoeffs& coeffs);

}  // namespace carpal
