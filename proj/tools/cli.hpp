#pragma once

#include <cstdint>
#include <filesystem>
#include <limits>
#include <string>

#include "carpal/config.hpp"
#include "carpal/io.hpp"

namespace carpal::cli {

struct GenerateOptions {
    std::size_t count = 100;
    std::uint64_t seed = 0;
    std::string out;
    bool augment = false;  // replace evaluation.augment.fraction of the set by augmented copies
};

struct TrainOptions {
    std::string data;
    std::string out;
    std::uint64_t seed = 0;
};

struct UtilityOptions {
    std::string scenario;
    std::string out;
    std::string model;  // optional; without it the observed future is the only intention sample
    std::uint64_t seed = 0;
};

struct PlanOptions {
    std::string scenario;
    std::string out;
    std::string noise;  // optional JSON object of planner.noise keys
    std::string model;
    long m = -1;        // overrides planner.plans when >= 1
    std::uint64_t seed = 0;
};

struct DecideOptions {
    std::string scenario;
    std::string model;
    std::string out = "decision.json";
    double eta = std::numeric_limits<double>::quiet_NaN();  // unified threshold when set
};

struct EvaluateOptions {
    std::string model;
    std::string data;
    std::string out;
    double eta = std::numeric_limits<double>::quiet_NaN();
    long seed = -1;         // overrides evaluation.label_seed when >= 0
    std::size_t latency = 0;  // timed cases, 0 skips timing
};

struct ServeOptions {
    std::string model;
    std::string data;
    std::string address;
    long port = -1;
};

// Each command runs with a fully merged config and writes its manifest.
void run_generate(const Config& cfg, const GenerateOptions& o);
void run_train(const Config& cfg, const TrainOptions& o);
void run_utility(const Config& cfg, const UtilityOptions& o);
void run_plan(const Config& cfg, const PlanOptions& o);
void run_decide(const Config& cfg, const DecideOptions& o);
void run_evaluate(const Config& cfg, const EvaluateOptions& o);
void run_serve(const Config& cfg, const ServeOptions& o);

/// Re-runs the command recorded in a manifest with its config snapshot, writing into
/// `out_dir` instead of the recorded location. Returns the manifest path written.
std::filesystem::path replay(const std::filesystem::path& manifest, const std::filesystem::path& out_dir);

/// argv entry point: 0 success, 1 usage or validation error, 2 runtime error.
int run(int argc, char** argv);

}  // namespace carpal::cli
