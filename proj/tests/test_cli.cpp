#include <gtest/gtest.h>

#include <filesystem>
#include <string>
#include <vector>

#include "carpal/io.hpp"
#include "cli.hpp"

using namespace carpal;
namespace fs = std::filesystem;

namespace {

int run(std::vector<std::string> args) {
    args.insert(args.begin(), "carpal");
    std::vector<char*> argv;
    for (auto& a : args) argv.push_back(a.data());
    return cli::run(static_cast<int>(argv.size()), argv.data());
}

class Cli : public ::testing::Test {
protected:
    static void SetUpTestSuite() {
        dir = fs::temp_directory_path() / "carpal_cli_test";
        fs::remove_all(dir);
        fs::create_directories(dir);
        cfg = (dir / "small.json").string();
        write_text(cfg, R"({"predictor": {"trunk": [16], "train": {"pretrain_epochs": 3, "epochs": 4}}})");
        ASSERT_EQ(run({"generate", "--count", "12", "--seed", "4", "--out", (dir / "data").string(), "--config", cfg}), 0);
        ASSERT_EQ(run({"train", "--data", (dir / "data").string(), "--out", (dir / "m.ckpt").string(), "--config",
                       cfg}),
                  0);
    }
    static void TearDownTestSuite() { fs::remove_all(dir); }

    static fs::path dir;
    static std::string cfg;
};

fs::path Cli::dir;
std::string Cli::cfg;

}  // namespace

TEST_F(Cli, ExitCodes) {
    EXPECT_EQ(run({"--help"}), 0);
    EXPECT_EQ(run({"evaluate", "--help"}), 0);
    EXPECT_EQ(run({"bogus"}), 1);
    EXPECT_EQ(run({"decide", "--model", (dir / "m.ckpt").string()}), 1);
    EXPECT_EQ(run({"decide", "--scenario", (dir / "nope.json").string(), "--model", (dir / "m.ckpt").string()}), 1);
    EXPECT_EQ(run({"generate", "--out", (dir / "bad").string(), "--config", (dir / "missing.json").string()}), 1);
}

TEST_F(Cli, DecideWritesAnOutcome) {
    const fs::path sc = dir / "data" / "scenarios" / "case-00000.json";
    const fs::path out = dir / "decision.json";
    ASSERT_EQ(run({"decide", "--scenario", sc.string(), "--model", (dir / "m.ckpt").string(), "--out", out.string()}),
              0);
    const Json j = Json::parse(read_text(out));
    ASSERT_TRUE(j.contains("decision"));
    EXPECT_TRUE(j["decision"].contains("action"));
}

TEST_F(Cli, ReplayReproducesOutputs) {
    const fs::path sc = dir / "data" / "scenarios" / "case-00001.json";
    const fs::path plans = dir / "plans" / "plans.json";
    ASSERT_EQ(run({"plan", "--scenario", sc.string(), "--out", plans.string(), "--m", "3", "--seed", "5",
                   "--model", (dir / "m.ckpt").string(), "--config", cfg}),
              0);
    const fs::path manifest = dir / "plans" / "plans.json.manifest.json";
    ASSERT_TRUE(fs::exists(manifest));
    const fs::path rep = dir / "replay";
    ASSERT_EQ(run({"--replay", manifest.string(), "--replay-out", rep.string()}), 0);
    EXPECT_EQ(sha256_file(plans), sha256_file(rep / "plans.json"));

    ASSERT_EQ(run({"--replay", (dir / "data" / "manifest.json").string(), "--replay-out", (dir / "data2").string()}),
              0);
    for (const char* f : {"case-00000.json", "case-00011.json"})
        EXPECT_EQ(sha256_file(dir / "data" / "scenarios" / f), sha256_file(dir / "data2" / "scenarios" / f));
}
