#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "carpal/decision.hpp"
#include "carpal/evaluation.hpp"
#include "carpal/planner.hpp"
#include "carpal/scene.hpp"
#include "carpal/trajectory.hpp"

namespace carpal {

using Json = nlohmann::json;

// Trajectories are {"dt": ..., "points": [[t, x, y], ...]}.
Json to_json(const Trajectory& t);
Trajectory trajectory_from_json(const Json& j);

Json to_json(const Scene& s);
Scene scene_from_json(const Json& j);

/// One scenario per document, tagged with schema_version.
Json to_json(const Scenario& s);
Scenario scenario_from_json(const Json& j);

Json to_json(const UtilityStats& s);
Json to_json(const DecisionOutcome& d);
Json to_json(const PlanResult& p);

std::string read_text(const std::filesystem::path& path);
/// Creates parent directories; throws std::runtime_error when the write fails.
void write_text(const std::filesystem::path& path, const std::string& text);

Scenario load_scenario(const std::filesystem::path& path);
void save_scenario(const Scenario& s, const std::filesystem::path& path);

/// Scenarios listed by `<dir>/manifest.json` in order.
std::vector<Scenario> load_dataset(const std::filesystem::path& dir);

/// Lower-case hex SHA-256 of a file's bytes.
std::string sha256_file(const std::filesystem::path& path);

/// Record written beside every run's outputs; enough to re-run the command.
struct Manifest {
    std::string command;
    Json args = Json::object();   // resolved flag values
    Json seeds = Json::object();
    std::string config;           // config snapshot, JSON text
    std::vector<std::string> outputs;  // paths relative to the output directory
    Json extra = Json::object();       // command-specific fields merged at top level

    Json to_json(const std::filesystem::path& out_dir) const;
};

/// Writes `<out_dir>/<name>`; output hashes are taken relative to `out_dir`.
void write_manifest(const Manifest& m, const std::filesystem::path& out_dir, const std::string& name = "manifest.json");

}  // namespace carpal
