#include "carpal/trajectory.hpp"

#include <Eigen/Dense>
#include <algorithm>

namespace carpal {

Trajectory::Trajectory(std::vector<TrajPoint> points, double dt) : points_(std::move(points)), dt_(dt) {
    require(dt_ > 0.0 && std::isfinite(dt_), "trajectory dt must be positive");
    require(points_.size() >= 1, "trajectory must not be empty");
    for (std::size_t i = 1; i < points_.size(); ++i) {
        const double step = points_[i].t - points_[i - 1].t;
        require(std::abs(step - dt_) <= 1e-6 * std::max(1.0, dt_), "trajectory timestamps must be uniform with spacing dt");
    }
}

Trajectory Trajectory::from_positions(std::span<const Vec2> xy, double t0, double dt) {
    std::vector<TrajPoint> pts;
    pts.reserve(xy.size());
    for (std::size_t i = 0; i < xy.size(); ++i)
        pts.push_back({t0 + static_cast<double>(i) * dt, xy[i].x, xy[i].y});
    return Trajectory(std::move(pts), dt);
}

double Trajectory::length() const {
    double len = 0.0;
    for (std::size_t i = 1; i < points_.size(); ++i) len += distance(points_[i - 1].xy(), points_[i].xy());
    return len;
}

Trajectory Trajectory::transformed(const Pose2& frame_to_world) const {
    Trajectory out = *this;
    for (auto& p : out.points_) {
        const Vec2 w = frame_to_world.to_world(p.xy());
        p.x = w.x;
        p.y = w.y;
    }
    return out;
}

Trajectory Trajectory::to_frame(const Pose2& frame) const {
    Trajectory out = *this;
    for (auto& p : out.points_) {
        const Vec2 l = frame.to_local(p.xy());
        p.x = l.x;
        p.y = l.y;
    }
    return out;
}

std::array<double, 6> TrajectoryDistribution::variances() const {
    std::array<double, 6> v{};
    for (std::size_t i = 0; i < 6; ++i) v[i] = std::max(std::exp(log_var[i]), kVarianceFloor);
    return v;
}

PolyCoeffs project(const Trajectory& traj) {
    const auto n = static_cast<Eigen::Index>(traj.size());
    require(n >= 3, "projection needs at least 3 points");
    Eigen::MatrixXd basis(n, 3);
    Eigen::MatrixXd rhs(n, 2);
    for (Eigen::Index i = 0; i < n; ++i) {
        const auto& p = traj[static_cast<std::size_t>(i)];
        basis(i, 0) = 1.0;
        basis(i, 1) = p.t;
        basis(i, 2) = p.t * p.t;
        rhs(i, 0) = p.x;
        rhs(i, 1) = p.y;
    }
    Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(basis);
    require(qr.rank() == 3, "degenerate time grid for projection");
    const Eigen::MatrixXd sol = qr.solve(rhs);
    PolyCoeffs c;
    for (int k = 0; k < 3; ++k) {
        c.ax[k] = sol(k, 0);
        c.ay[k] = sol(k, 1);
    }
    return c;
}

Trajectory reconstruct(const PolyCoeffs& coeffs, double horizon, double dt) {
    require(dt > 0.0 && horizon >= dt, "reconstruct needs horizon >= dt > 0");
    const auto steps = static_cast<std::size_t>(std::llround(horizon / dt));
    std::vector<TrajPoint> pts;
    pts.reserve(steps);
    for (std::size_t k = 1; k <= steps; ++k) {
        const double t = static_cast<double>(k) * dt;
        const Vec2 p = coeffs.at(t);
        pts.push_back({t, p.x, p.y});
    }
    return Trajectory(std::move(pts), dt);
}

std::vector<PolyCoeffs> sample_coeffs(const TrajectoryDistribution& dist, std::size_t n, std::uint64_t seed) {
    require(n >= 1, "sample count must be >= 1");
    Rng rng = make_rng(seed, 0x7472616aULL);
    std::normal_distribution<double> gauss(0.0, 1.0);
    const auto mean = dist.mean.flat();
    const auto var = dist.variances();
    std::vector<PolyCoeffs> out;
    out.reserve(n);
    for (std::size_t s = 0; s < n; ++s) {
        std::array<double, 6> c{};
        for (std::size_t i = 0; i < 6; ++i) {
            // Floor-level variance is treated as a point mass.
            const double sd = var[i] <= kVarianceFloor ? 0.0 : std::sqrt(var[i]);
            c[i] = mean[i] + sd * gauss(rng);
        }
        out.push_back(PolyCoeffs::from_flat(c));
    }
    return out;
}

std::vector<Trajectory> sample(const TrajectoryDistribution& dist, std::size_t n, std::uint64_t seed, double dt) {
    std::vector<Trajectory> out;
    for (const auto& c : sample_coeffs(dist, n, seed)) out.push_back(reconstruct(c, dist.horizon, dt));
    return out;
}

double nll(const TrajectoryDistribution& dist, const PolyCoeffs& coeffs) {
    const auto mean = dist.mean.flat();
    const auto obs = coeffs.flat();
    const auto var = dist.variances();
    double total = 0.0;
    for (std::size_t i = 0; i < 6; ++i) {
        const double r = obs[i] - mean[i];
        total += 0.5 * std::log(2.0 * std::numbers::pi * var[i]) + r * r / (2.0 * var[i]);
    }
    return total;
}

double nll(const TrajectoryDistribution& dist, const Trajectory& observed) {
    require(observed.back().t + 1e-9 >= dist.horizon, "observed trajectory must span the horizon");
    return nll(dist, project(observed));
}

}  // namespace carpal
