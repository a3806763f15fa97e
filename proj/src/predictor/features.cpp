#include "carpal/predictor.hpp"

namespace carpal {

void FeatureConfig::validate() const {
    require(past_steps >= 1, "feature past horizon must be >= 1");
    require(map_cells >= 1 && map_resolution > 0.0, "local map size must be positive");
}

std::vector<double> FeatureVector::flat() const {
    std::vector<double> out;
    out.reserve(past_xy.size() + kinematics.size() + local_map.size() + goal_hint.size());
    for (const auto* part : {&past_xy, &kinematics, &local_map, &goal_hint}) out.insert(out.end(), part->begin(), part->end());
    return out;
}

FeatureVector featurize(const Scenario& scenario, const FeatureConfig& cfg) {
    cfg.validate();
    require(static_cast<int>(scenario.past.size()) == cfg.past_steps,
            "scenario has " + std::to_string(scenario.past.size()) + " past samples, expected " +
                std::to_string(cfg.past_steps));
    const EgoState& ego = scenario.scene.ego;
    const Pose2 frame = ego.pose();
    FeatureVector f;
    f.past_xy.reserve(static_cast<std::size_t>(2 * cfg.past_steps));
    for (const auto& p : scenario.past.points()) {
        const Vec2 q = frame.to_local(p.xy());
        f.past_xy.push_back(q.x);
        f.past_xy.push_back(q.y);
    }
    f.kinematics = {ego.speed, ego.yaw_rate, ego.accel_cmd, ego.steer_cmd};

    const int n = cfg.map_cells;
    const double res = cfg.map_resolution;
    const double half = 0.5 * n * res;
    f.local_map.assign(static_cast<std::size_t>(n * n), 0.0);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) {
            const Vec2 w = frame.to_world({(i + 0.5) * res, -half + (j + 0.5) * res});
            for (const auto& o : scenario.scene.obstacles)
                if (o.contains(w)) {
                    f.local_map[static_cast<std::size_t>(i * n + j)] = 1.0;
                    break;
                }
        }

    const Vec2 g = frame.to_local(scenario.scene.goal);
    const double gn = g.norm();
    f.goal_hint = gn > 0.0 ? std::vector<double>{g.x / gn, g.y / gn} : std::vector<double>{0.0, 0.0};
    return f;
}

PolyCoeffs target_coeffs(const Scenario& scenario) {
    return project(scenario.future.to_frame(scenario.scene.ego.pose()));
}

TrainingData make_training_data(std::span<const Scenario> scenarios, const FeatureConfig& cfg) {
    require(!scenarios.empty(), "training data needs at least one scenario");
    TrainingData d;
    const auto n = static_cast<Eigen::Index>(scenarios.size());
    d.features.resize(cfg.length(), n);
    d.coeffs.resize(6, n);
    d.endpoint.resize(2, n);
    d.horizon = scenarios.front().future.back().t;
    for (Eigen::Index k = 0; k < n; ++k) {
        const Scenario& sc = scenarios[static_cast<std::size_t>(k)];
        const auto flat = featurize(sc, cfg).flat();
        d.features.col(k) = Eigen::Map<const Eigen::VectorXd>(flat.data(), static_cast<Eigen::Index>(flat.size()));
        const auto c = target_coeffs(sc).flat();
        d.coeffs.col(k) = Eigen::Map<const Eigen::VectorXd>(c.data(), 6);
        const Vec2 e = sc.scene.ego.pose().to_local(sc.future.back().xy());
        d.endpoint.col(k) << e.x, e.y;
    }
    return d;
}

}  // namespace carpal
