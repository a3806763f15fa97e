#include "carpal/config.hpp"

#include <cstdlib>
#include <fstream>
#include <set>
#include <sstream>

#include <nlohmann/json.hpp>

namespace carpal {

namespace {

using nlohmann::json;

class Reader {
public:
    Reader(const json& j, std::string path) : j_(j), path_(std::move(path)) {
        require(j_.is_object(), "config section '" + path_ + "' must be an object");
    }

    template <class T>
    void operator()(const char* key, T& value) {
        seen_.insert(key);
        if (!j_.contains(key)) return;
        try {
            value = j_.at(key).get<T>();
        } catch (const json::exception&) {
            throw ValidationError("config key '" + where(key) + "' has the wrong type");
        }
    }

    template <class F>
    void section(const char* key, F&& fn) {
        seen_.insert(key);
        if (!j_.contains(key)) return;
        Reader sub(j_.at(key), where(key));
        fn(sub);
        sub.finish();
    }

    void finish() const {
        for (const auto& item : j_.items())
            if (!seen_.count(item.key())) throw ValidationError("unknown config key '" + where(item.key()) + "'");
    }

private:
    std::string where(const std::string& key) const { return path_.empty() ? key : path_ + "." + key; }

    const json& j_;
    std::string path_;
    std::set<std::string> seen_;
};

class Writer {
public:
    template <class T>
    void operator()(const char* key, const T& value) {
        j[key] = value;
    }

    template <class F>
    void section(const char* key, F&& fn) {
        Writer sub;
        fn(sub);
        j[key] = std::move(sub.j);
    }

    json j = json::object();
};

template <class V, class C>
void visit_driver(V& v, C& d) {
    v("speed_min", d.speed_min);
    v("speed_max", d.speed_max);
    v("speed_change_prob", d.speed_change_prob);
    v("waypoint_noise", d.waypoint_noise);
    v("waypoint_spacing", d.waypoint_spacing);
    v("lookahead", d.lookahead);
    v("wheelbase", d.wheelbase);
    v("max_steer", d.max_steer);
    v("max_accel", d.max_accel);
    v("max_decel", d.max_decel);
    v("risk_prob", d.risk_prob);
    v("clearance", d.clearance);
    v("clearance_margin", d.clearance_margin);
    v("swerve_ramp", d.swerve_ramp);
    v("lane_offset_max", d.lane_offset_max);
    v("weave_amplitude_min", d.weave_amplitude_min);
    v("weave_amplitude_max", d.weave_amplitude_max);
    v("weave_period_min", d.weave_period_min);
    v("weave_period_max", d.weave_period_max);
}

// Shared by the const writer and the mutable reader.
template <class V, class C>
void visit(V& v, C& c) {
    v.section("scene", [&](auto& s) {
        auto& sc = c.scene;
        s("past_steps", sc.past_steps);
        s("future_steps", sc.future_steps);
        s("dt", sc.dt);
        s("half_width_min", sc.half_width_min);
        s("half_width_max", sc.half_width_max);
        s("road_curvature_max", sc.road_curvature_max);
        s("obstacle_density", sc.obstacle_density);
        s("obstacle_station_min", sc.obstacle_station_min);
        s("obstacle_station_max", sc.obstacle_station_max);
        s("behind", sc.behind);
        s("ahead", sc.ahead);
        s("lateral", sc.lateral);
        s("goal_lead", sc.goal_lead);
        s.section("driver", [&](auto& d) { visit_driver(d, sc.driver); });
    });
    v.section("predictor", [&](auto& s) {
        auto& p = c.predictor;
        s("trunk", p.trunk);
        s("utility_hidden", p.utility_hidden);
        s("horizon", p.horizon);
        s("past_steps", p.features.past_steps);
        s("map_cells", p.features.map_cells);
        s("map_resolution", p.features.map_resolution);
        s.section("train", [&](auto& t) {
            auto& tc = c.train;
            t("pretrain_epochs", tc.pretrain_epochs);
            t("epochs", tc.epochs);
            t("batch_size", tc.batch_size);
            t("lr", tc.adam.lr);
            t("beta1", tc.adam.beta1);
            t("beta2", tc.adam.beta2);
            t("eps", tc.adam.eps);
            t.section("loss_weights", [&](auto& w) {
                w("nll", tc.weights.nll);
                w("mu_h", tc.weights.mu_h);
                w("var_h", tc.weights.var_h);
                w("mu_p", tc.weights.mu_p);
                w("var_p", tc.weights.var_p);
                w("pred_error", tc.weights.pred_error);
            });
        });
    });
    v.section("utility", [&](auto& s) {
        auto& u = c.pipeline.utility;
        s("alpha", u.alpha);
        s("bandwidth", u.bandwidth);
        s("sigmoid_k", u.sigmoid_k);
        s("sigmoid_d0", u.sigmoid_d0);
        s("density_floor", u.density_floor);
        s("resolution", u.resolution);
        s("samples", c.pipeline.samples);
    });
    v.section("planner", [&](auto& s) {
        auto& p = c.pipeline.planner;
        s("heading_bins", p.heading_bins);
        s("cell_size", p.cell_size);
        s("arc_cells", p.arc_cells);
        s("max_expansions", p.max_expansions);
        s("goal_tolerance", p.goal_tolerance);
        s("goal_heading_tolerance", p.goal_heading_tolerance);
        s("utility_weight", p.utility_weight);
        s("horizon_steps", p.horizon_steps);
        s("dt", p.dt);
        s("plans", c.pipeline.plans);
        s.section("vehicle", [&](auto& vs) {
            vs("radius", c.pipeline.vehicle.radius);
            vs("turning_radius", c.pipeline.vehicle.turning_radius);
            vs("braking_decel", c.pipeline.vehicle.braking_decel);
        });
        s.section("noise", [&](auto& n) {
            auto& np = c.pipeline.noise;
            n("p_add", np.p_add);
            n("p_remove", np.p_remove);
            n("add_radius_min", np.add_radius_min);
            n("add_radius_max", np.add_radius_max);
            n("goal_sigma", np.goal_sigma);
            n("p_goal", np.p_goal);
            n("ego_keepout", np.ego_keepout);
        });
    });
    v.section("decision", [&](auto& s) {
        s("eta_h", c.decision.eta_h);
        s("eta_p", c.decision.eta_p);
        s("delta_u", c.evaluation.delta_u);
    });
    v.section("evaluation", [&](auto& s) {
        auto& e = c.evaluation;
        s("d_s", e.d_s);
        s("label_seed", e.label_seed);
        s("eta", e.eta);
        s("eta_abp", e.eta_abp);
        s("entropy_batch", e.entropy_batch);
        s("entropy_tolerance", e.entropy_tolerance);
        s("bootstrap", e.bootstrap);
        s.section("augment", [&](auto& a) {
            auto& ac = c.augment;
            a("fraction", ac.fraction);
            a("scale", ac.scale);
            a("obstacles_min", ac.obstacles_min);
            a("obstacles_max", ac.obstacles_max);
            a("radius_min", ac.radius_min);
            a("radius_max", ac.radius_max);
            a("lateral_sigma", ac.lateral_sigma);
            a("goal_keepout", ac.goal_keepout);
        });
    });
    v.section("service", [&](auto& s) {
        auto& sv = c.service;
        s("address", sv.address);
        s("port", sv.port);
        s("decision_interval", sv.decision_interval);
        s("hysteresis", sv.hysteresis);
        s("steer_max", sv.steer_max);
        s("accel_max", sv.accel_max);
        s("pursuit_lookahead", sv.pursuit_lookahead);
        s("max_ticks", sv.max_ticks);
        s("road_ahead", sv.road_ahead);
        s("window_ahead", sv.window_ahead);
        s("window_behind", sv.window_behind);
    });
}

}  // namespace

void ServiceConfig::validate() const {
    require(port >= 0 && port <= 65535, "service port must be in [0, 65535]");
    require(decision_interval >= 1, "decision interval must be >= 1 tick");
    require(hysteresis >= 0.0, "hysteresis must be non-negative");
    require(steer_max > 0.0 && accel_max > 0.0, "control bounds must be positive");
    require(pursuit_lookahead > 0.0, "pursuit lookahead must be positive");
    require(max_ticks >= 1, "session length must be >= 1 tick");
    require(road_ahead > 0.0 && road_ahead <= 95.0, "service.road_ahead must be in (0, 95] m");
    require(window_ahead > 0.0 && window_behind > 0.0, "planning window extents must be positive");
}

void Config::validate() const {
    scene.validate();
    predictor.validate();
    train.validate();
    pipeline.validate();
    decision.validate();
    eval().validate();
    augment.validate();
    service.validate();
    require(predictor.features.past_steps == scene.past_steps, "predictor.past_steps must equal scene.past_steps");
    require(std::abs(predictor.horizon - scene.future_steps * scene.dt) < 1e-9,
            "predictor.horizon must equal scene.future_steps * scene.dt");
}

EvalConfig Config::eval() const {
    EvalConfig e = evaluation;
    e.pipeline = pipeline;
    return e;
}

Config config_from_json(const std::string& text) {
    json j;
    try {
        j = json::parse(text.empty() ? std::string("{}") : text);
    } catch (const json::parse_error& e) {
        throw ValidationError(std::string("config is not valid JSON: ") + e.what());
    }
    Config c;
    Reader r(j, "");
    int version = kSchemaVersion;
    r("schema_version", version);
    require(version == kSchemaVersion, "unsupported config schema_version " + std::to_string(version));
    visit(r, c);
    r.finish();
    c.validate();
    return c;
}

std::string config_to_json(const Config& cfg, int indent) {
    Writer w;
    w("schema_version", kSchemaVersion);
    visit(w, cfg);
    return w.j.dump(indent);
}

Config load_config(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ValidationError("cannot open config file '" + path + "'");
    std::stringstream ss;
    ss << in.rdbuf();
    return config_from_json(ss.str());
}

Config resolve_config(const std::string& path) {
    if (!path.empty()) return load_config(path);
    if (const char* env = std::getenv("CARPAL_CONFIG"); env && *env) return load_config(env);
    return Config{};
}

}  // namespace carpal
