#include <gtest/gtest.h>

#include <filesystem>
#include <map>
#include <regex>
#include <sstream>

#include "carpal/config.hpp"
#include "carpal/io.hpp"

using namespace carpal;
namespace fs = std::filesystem;

TEST(Config, EmptyDocumentGivesDefaults) {
    EXPECT_EQ(config_from_json(""), Config{});
    EXPECT_EQ(config_from_json("{}"), Config{});
}

TEST(Config, RoundTripIsIdentity) {
    Config c;
    c.pipeline.utility.alpha = 0.3;
    c.pipeline.noise.p_goal = 0.7;
    c.predictor.trunk = {32, 16};
    c.service.port = 9000;
    c.augment.scale = 1.5;
    const Config back = config_from_json(config_to_json(c));
    EXPECT_EQ(back, c);
    EXPECT_EQ(config_to_json(back), config_to_json(c));
}

TEST(Config, UnknownKeysNameTheirPath) {
    try {
        config_from_json(R"({"planner": {"noise": {"p_ad": 0.1}}})");
        FAIL();
    } catch (const ValidationError& e) {
        EXPECT_NE(std::string(e.what()).find("planner.noise.p_ad"), std::string::npos) << e.what();
    }
    EXPECT_THROW(config_from_json(R"({"bogus": 1})"), ValidationError);
}

TEST(Config, RejectsBadValuesAndTypes) {
    EXPECT_THROW(config_from_json(R"({"utility": {"alpha": "x"}})"), ValidationError);
    EXPECT_THROW(config_from_json(R"({"service": {"road_ahead": 200}})"), ValidationError);
    EXPECT_THROW(config_from_json(R"({"schema_version": 9})"), ValidationError);
    EXPECT_THROW(config_from_json("{"), ValidationError);
}

TEST(Scenario, JsonRoundTrip) {
    for (std::uint64_t seed : {1u, 2u, 3u}) {
        Scenario sc = generate_scenario(ScenarioConfig{}, seed);
        sc.id = "case-" + std::to_string(seed);
        const Scenario back = scenario_from_json(to_json(sc));
        EXPECT_EQ(back.id, sc.id);
        EXPECT_EQ(back.scene.obstacles.size(), sc.scene.obstacles.size());
        EXPECT_EQ(back.past.size(), sc.past.size());
        EXPECT_EQ(back.future.size(), sc.future.size());
        // Written twice, read twice: stable.
        EXPECT_EQ(to_json(back).dump(), to_json(scenario_from_json(to_json(back))).dump());
    }
}

TEST(Scenario, FileRoundTripAndMissingFile) {
    const fs::path dir = fs::temp_directory_path() / "carpal_io_test";
    fs::remove_all(dir);
    Scenario sc = generate_scenario(ScenarioConfig{}, 5);
    sc.id = "x";
    save_scenario(sc, dir / "x.json");
    EXPECT_EQ(to_json(load_scenario(dir / "x.json")).dump(), to_json(sc).dump());
    EXPECT_THROW(load_scenario(dir / "missing.json"), ValidationError);
    fs::remove_all(dir);
}

TEST(Manifest, HashesOutputs) {
    const fs::path dir = fs::temp_directory_path() / "carpal_manifest_test";
    fs::remove_all(dir);
    write_text(dir / "a.txt", "abc");
    Manifest m;
    m.command = "generate";
    m.config = "{}";
    m.outputs = {"a.txt"};
    write_manifest(m, dir);
    const Json j = Json::parse(read_text(dir / "manifest.json"));
    EXPECT_EQ(sha256_file(dir / "a.txt"), "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
    EXPECT_NE(j.dump().find("ba7816bf8f01cfea"), std::string::npos);
    fs::remove_all(dir);
}

namespace {

void flatten(const Json& j, const std::string& prefix, std::map<std::string, Json>& out) {
    for (const auto& [k, v] : j.items()) {
        if (v.is_object()) flatten(v, prefix + k + ".", out);
        else out[prefix + k] = v;
    }
}

}  // namespace

TEST(Defaults, DocumentedTableMatchesCompiledDefaults) {
    std::map<std::string, Json> want;
    flatten(Json::parse(config_to_json(Config{})), "", want);
    std::istringstream doc(read_text(fs::path(CARPAL_SOURCE_DIR) / "docs" / "defaults.md"));
    std::map<std::string, Json> seen;
    std::string line;
    const std::regex row(R"(^\| `([^`]+)` \| `([^`]+)` \|)");
    while (std::getline(doc, line)) {
        std::smatch m;
        if (std::regex_search(line, m, row)) seen[m[1]] = Json::parse(m[2].str());
    }
    EXPECT_EQ(seen.size(), want.size());
    for (const auto& [k, v] : want) {
        ASSERT_TRUE(seen.count(k)) << k;
        if (v.is_number()) EXPECT_DOUBLE_EQ(seen[k].get<double>(), v.get<double>()) << k;
        else EXPECT_EQ(seen[k], v) << k;
    }
}

TEST(Defaults, PinnedConstants) {
    const Config c;
    EXPECT_EQ(c.pipeline.utility.alpha, 0.1);
    EXPECT_EQ(c.pipeline.samples, 10u);
    EXPECT_EQ(c.pipeline.plans, 10u);
    EXPECT_EQ(c.evaluation.d_s, 1.6);
    EXPECT_EQ(c.scene.past_steps, 20);
    EXPECT_EQ(c.scene.future_steps, 30);
    EXPECT_EQ(c.scene.dt, 0.1);
    EXPECT_EQ(c.predictor.horizon, 3.0);
    EXPECT_EQ(c.pipeline.utility.bandwidth, 0.5);
    EXPECT_EQ(c.pipeline.utility.sigmoid_k, 1.0);
    EXPECT_EQ(c.pipeline.utility.sigmoid_d0, 0.0);
    EXPECT_EQ(c.pipeline.planner.heading_bins, 36);
    EXPECT_EQ(c.pipeline.planner.cell_size, 0.5);
    EXPECT_EQ(c.pipeline.planner.utility_weight, 5.0);
    EXPECT_EQ(c.decision.eta_h, 1e-2);
    EXPECT_EQ(c.decision.eta_p, 1e-2);
    EXPECT_EQ(c.service.decision_interval, 5);
    EXPECT_EQ(c.service.hysteresis, 0.5);
    EXPECT_EQ(c.augment.fraction, 0.1);
}
