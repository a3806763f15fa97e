#pragma once

#include <cmath>
#include <vector>

#include "carpal/predictor.hpp"
#include "carpal/scene.hpp"

namespace carpal::test {

/// Straight road along `heading` through the origin, obstacle free.
inline Scene straight_scene(double heading = 0.0, double speed = 6.0, Bounds bounds = {{-10.0, -15.0}, {40.0, 15.0}}) {
    Scene s;
    s.bounds = bounds;
    s.ego.position = {0.0, 0.0};
    s.ego.heading = heading;
    s.ego.speed = speed;
    const Vec2 dir{std::cos(heading), std::sin(heading)};
    for (int i = -60; i <= 100; ++i) s.corridor.centerline.push_back(dir * static_cast<double>(i));
    s.corridor.half_width = 4.0;
    s.goal = dir * 20.0;
    return s;
}

/// Constant-velocity points along +x starting at x0.
inline Trajectory straight_line(double x0, double y, double speed, int steps = 30, double dt = 0.1) {
    std::vector<Vec2> pts;
    for (int k = 1; k <= steps; ++k) pts.push_back({x0 + speed * k * dt, y});
    return Trajectory::from_positions(pts, dt, dt);
}

/// Model whose regressed statistics are constant: mu_h = 0, mu_p = mu_p, both variances `var`.
inline PredictorModel constant_model(const PredictorConfig& cfg, double mu_p, double var) {
    PredictorModel m = PredictorModel::zeros(cfg);
    m.output_offset[head::utility + 2] = mu_p;
    // softplus(0) = ln 2 on the variance rows.
    m.output_scale[head::utility + 1] = var / std::log(2.0);
    m.output_scale[head::utility + 3] = var / std::log(2.0);
    return m;
}

}  // namespace carpal::test
