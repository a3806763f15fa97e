#include "carpal/io.hpp"

#include <array>
#include <fstream>
#include <iomanip>
#include <sstream>

#include <openssl/evp.h>

#include "carpal/config.hpp"

namespace carpal {

namespace fs = std::filesystem;

namespace {

Json vec(Vec2 v) { return Json::array({v.x, v.y}); }

Vec2 vec_from(const Json& j) {
    require(j.is_array() && j.size() == 2, "expected a [x, y] pair");
    return {j.at(0).get<double>(), j.at(1).get<double>()};
}

const char* kind_name(ObstacleKind k) { return k == ObstacleKind::augmented ? "augmented" : "static"; }

ObstacleKind kind_from(const std::string& s) {
    if (s == "static") return ObstacleKind::static_obstacle;
    if (s == "augmented") return ObstacleKind::augmented;
    throw ValidationError("unknown obstacle kind '" + s + "'");
}

template <class F>
auto guarded(const char* what, F&& fn) {
    try {
        return fn();
    } catch (const Json::exception& e) {
        throw ValidationError(std::string("malformed ") + what + ": " + e.what());
    }
}

}  // namespace

Json to_json(const Trajectory& t) {
    Json pts = Json::array();
    for (const auto& p : t.points()) pts.push_back(Json::array({p.t, p.x, p.y}));
    return {{"dt", t.dt()}, {"points", std::move(pts)}};
}

Trajectory trajectory_from_json(const Json& j) {
    return guarded("trajectory", [&] {
        std::vector<TrajPoint> pts;
        for (const auto& p : j.at("points")) {
            require(p.is_array() && p.size() == 3, "trajectory points are [t, x, y]");
            pts.push_back({p.at(0).get<double>(), p.at(1).get<double>(), p.at(2).get<double>()});
        }
        return Trajectory(std::move(pts), j.at("dt").get<double>());
    });
}

Json to_json(const Scene& s) {
    Json obstacles = Json::array();
    for (const auto& o : s.obstacles) {
        Json oj{{"kind", kind_name(o.kind)}};
        if (const auto* c = std::get_if<Circle>(&o.shape)) {
            oj["circle"] = {{"center", vec(c->center)}, {"radius", c->radius}};
        } else {
            Json verts = Json::array();
            for (const auto& v : std::get<ConvexPolygon>(o.shape).vertices) verts.push_back(vec(v));
            oj["polygon"] = std::move(verts);
        }
        obstacles.push_back(std::move(oj));
    }
    Json centerline = Json::array();
    for (const auto& p : s.corridor.centerline) centerline.push_back(vec(p));
    return {
        {"seed", s.seed},
        {"bounds", {{"min", vec(s.bounds.min)}, {"max", vec(s.bounds.max)}}},
        {"obstacles", std::move(obstacles)},
        {"ego",
         {{"position", vec(s.ego.position)},
          {"heading", s.ego.heading},
          {"speed", s.ego.speed},
          {"yaw_rate", s.ego.yaw_rate},
          {"accel_cmd", s.ego.accel_cmd},
          {"steer_cmd", s.ego.steer_cmd}}},
        {"goal", vec(s.goal)},
        {"corridor", {{"centerline", std::move(centerline)}, {"half_width", s.corridor.half_width}}},
    };
}

Scene scene_from_json(const Json& j) {
    return guarded("scene", [&] {
        Scene s;
        s.seed = j.at("seed").get<std::uint64_t>();
        s.bounds = {vec_from(j.at("bounds").at("min")), vec_from(j.at("bounds").at("max"))};
        for (const auto& oj : j.at("obstacles")) {
            const ObstacleKind kind = kind_from(oj.at("kind").get<std::string>());
            if (oj.contains("circle")) {
                s.obstacles.push_back(Obstacle::circle(vec_from(oj.at("circle").at("center")),
                                                       oj.at("circle").at("radius").get<double>(), kind));
            } else {
                ConvexPolygon poly;
                for (const auto& v : oj.at("polygon")) poly.vertices.push_back(vec_from(v));
                s.obstacles.push_back({std::move(poly), kind});
            }
        }
        const auto& e = j.at("ego");
        s.ego.position = vec_from(e.at("position"));
        s.ego.heading = e.at("heading").get<double>();
        s.ego.speed = e.at("speed").get<double>();
        s.ego.yaw_rate = e.value("yaw_rate", 0.0);
        s.ego.accel_cmd = e.value("accel_cmd", 0.0);
        s.ego.steer_cmd = e.value("steer_cmd", 0.0);
        s.goal = vec_from(j.at("goal"));
        for (const auto& p : j.at("corridor").at("centerline")) s.corridor.centerline.push_back(vec_from(p));
        s.corridor.half_width = j.at("corridor").at("half_width").get<double>();
        s.validate();
        return s;
    });
}

Json to_json(const Scenario& s) {
    return {
        {"schema_version", kSchemaVersion},
        {"id", s.id},
        {"inattentive", s.inattentive},
        {"augmented", s.augmented},
        {"augment_mode", s.augment_mode},
        {"scene", to_json(s.scene)},
        {"past", to_json(s.past)},
        {"future", to_json(s.future)},
    };
}

Scenario scenario_from_json(const Json& j) {
    return guarded("scenario", [&] {
        require(j.is_object(), "scenario must be a JSON object");
        const int version = j.at("schema_version").get<int>();
        require(version == kSchemaVersion, "unsupported scenario schema_version " + std::to_string(version));
        Scenario s;
        s.id = j.at("id").get<std::string>();
        s.inattentive = j.value("inattentive", false);
        s.augmented = j.value("augmented", false);
        s.augment_mode = j.value("augment_mode", 0);
        s.scene = scene_from_json(j.at("scene"));
        s.past = trajectory_from_json(j.at("past"));
        s.future = trajectory_from_json(j.at("future"));
        require(s.past.size() >= 2 && s.future.size() >= 2, "scenario trajectories need at least two points");
        return s;
    });
}

Json to_json(const UtilityStats& s) {
    return {{"mu_h", s.mu_h}, {"var_h", s.var_h}, {"mu_p", s.mu_p}, {"var_p", s.var_p}};
}

Json to_json(const DecisionOutcome& d) {
    return {{"action", to_string(d.action)}, {"binary", d.binary()}, {"stats", to_json(d.inputs)},
            {"rationale", d.rationale}};
}

Json to_json(const PlanResult& p) {
    return {{"status", to_string(p.status)},
            {"fallback", p.fallback},
            {"cost", p.cost},
            {"expanded_nodes", p.expanded_nodes},
            {"trajectory", to_json(p.trajectory)}};
}

std::string read_text(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ValidationError("cannot open '" + path.string() + "'");
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void write_text(const fs::path& path, const std::string& text) {
    if (path.has_parent_path()) fs::create_directories(path.parent_path());
    std::ofstream out(path, std::ios::binary);
    out << text;
    if (!out) throw std::runtime_error("cannot write '" + path.string() + "'");
}

Scenario load_scenario(const fs::path& path) {
    const std::string text = read_text(path);
    try {
        return scenario_from_json(Json::parse(text));
    } catch (const Json::parse_error& e) {
        throw ValidationError("'" + path.string() + "' is not valid JSON: " + e.what());
    } catch (const ValidationError& e) {
        throw ValidationError("'" + path.string() + "': " + e.what());
    }
}

void save_scenario(const Scenario& s, const fs::path& path) { write_text(path, to_json(s).dump() + "\n"); }

std::vector<Scenario> load_dataset(const fs::path& dir) {
    const fs::path mpath = dir / "manifest.json";
    Json m;
    try {
        m = Json::parse(read_text(mpath));
    } catch (const Json::parse_error& e) {
        throw ValidationError("'" + mpath.string() + "' is not valid JSON: " + e.what());
    }
    require(m.contains("scenarios") && m.at("scenarios").is_array(),
            "'" + mpath.string() + "' does not list scenarios");
    std::vector<Scenario> out;
    for (const auto& p : m.at("scenarios")) out.push_back(load_scenario(dir / p.get<std::string>()));
    return out;
}

std::string sha256_file(const fs::path& path) {
    const std::string bytes = read_text(path);
    std::array<unsigned char, EVP_MAX_MD_SIZE> md{};
    unsigned int len = 0;
    if (EVP_Digest(bytes.data(), bytes.size(), md.data(), &len, EVP_sha256(), nullptr) != 1)
        throw std::runtime_error("sha256 failed for '" + path.string() + "'");
    std::ostringstream hex;
    for (unsigned int i = 0; i < len; ++i) hex << std::hex << std::setw(2) << std::setfill('0') << int(md[i]);
    return hex.str();
}

Json Manifest::to_json(const fs::path& out_dir) const {
    Json outs = Json::array();
    for (const auto& o : outputs) outs.push_back({{"path", o}, {"sha256", sha256_file(out_dir / o)}});
    Json j{{"tool", "carpal"},
            {"version", kVersion},
            {"schema_version", kSchemaVersion},
            {"command", command},
            {"args", args},
            {"seeds", seeds},
            {"config", Json::parse(config)},
            {"outputs", std::move(outs)}};
    j.update(extra);
    return j;
}

void write_manifest(const Manifest& m, const fs::path& out_dir, const std::string& name) {
    write_text(out_dir / name, m.to_json(out_dir).dump(2) + "\n");
}

}  // namespace carpal
