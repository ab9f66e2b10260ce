#include "dynclean_cli/cli.hpp"
#include "dynclean/error.hpp"
#include "dynclean/image_set.hpp"
#include "support/fixtures.hpp"

#include <CLI11.hpp>
#include <gtest/gtest.h>
#include <nlohmann/json.hpp>

#include <fstream>

namespace dynclean {
namespace {

int run_cli(std::vector<std::string> args) {
    args.insert(args.begin(), "dynclean");
    std::vector<char*> argv;
    for (auto& a : args) argv.push_back(a.data());
    return cli::main(static_cast<int>(argv.size()), argv.data());
}

Config parse_flags(std::vector<std::string> args) {
    CLI::App app;
    cli::ConfigFlags flags;
    cli::add_config_flags(app, flags);
    args.insert(args.begin(), "test");
    std::vector<char*> argv;
    for (auto& a : args) argv.push_back(a.data());
    app.parse(static_cast<int>(argv.size()), argv.data());
    return cli::build_config(flags);
}

std::filesystem::path small_scene_dir(const std::string& name) {
    SceneParams p;
    p.width = 64;
    p.height = 48;
    p.views = 3;
    p.camera_step_x = 0;
    p.occluder_size = 10;
    p.occluder_x = 8.5;
    p.occluder_y = 12.5;
    p.occluder_step_x = 16;
    const auto dir = test::temp_dir(name);
    save_scene(synth_scene(p), dir);
    return dir;
}

TEST(CliConfig, NoFileNoFlagsGivesDefaults) {
    EXPECT_EQ(config_to_json(parse_flags({})), config_to_json(Config{}));
}

TEST(CliConfig, FlagsOverrideTheFile) {
    const auto dir = test::temp_dir("cli_config");
    {
        std::ofstream(dir / "c.json") << R"({"sigma_e": 0.17, "t_r": 0.3})";
    }
    const Config c = parse_flags({"--config", (dir / "c.json").string(), "--sigma-e", "0.5"});
    EXPECT_DOUBLE_EQ(c.sigma_e, 0.5);
    EXPECT_DOUBLE_EQ(c.t_r, 0.3);
    EXPECT_FALSE(parse_flags({"--normalize-coordinates", "false"}).normalize_coordinates);
    EXPECT_EQ(parse_flags({"--descriptor-refresh", "stale-neighbors"}).descriptor_refresh,
              DescriptorRefresh::StaleNeighbors);
}

TEST(CliConfig, InvalidValuesAreRejected) {
    EXPECT_THROW(parse_flags({"--t-r", "1.5"}), ConfigError);
    EXPECT_THROW(parse_flags({"--lambda1", "0.2"}), ConfigError);
    EXPECT_THROW(parse_flags({"--patch-size", "6"}), ConfigError);
}

TEST(CliMain, UsageErrorsExitWithTwo) {
    const auto dir = small_scene_dir("cli_usage");
    const auto out = test::temp_dir("cli_usage_out");
    EXPECT_EQ(run_cli({}), cli::kExitUsage);
    EXPECT_EQ(run_cli({"frobnicate"}), cli::kExitUsage);
    EXPECT_EQ(run_cli({"run", "--input", dir.string(), "--out", out.string(), "--bogus"}), cli::kExitUsage);
    EXPECT_EQ(run_cli({"run", "--input", dir.string(), "--out", out.string(), "--t-r", "1.5"}), cli::kExitUsage);
    EXPECT_EQ(run_cli({"run", "--out", out.string()}), cli::kExitUsage);
    EXPECT_EQ(run_cli({"synth", "--preset", "nope", "--out", out.string()}), cli::kExitUsage);
    EXPECT_FALSE(std::filesystem::exists(out / "view_00_mask.png"));
}

TEST(CliMain, FatalErrorsExitWithOne) {
    const auto empty = test::temp_dir("cli_empty");
    const auto out = test::temp_dir("cli_empty_out");
    EXPECT_EQ(run_cli({"run", "--input", empty.string(), "--out", out.string()}), cli::kExitFailure);
    EXPECT_EQ(run_cli({"eval", "--results", out.string(), "--truth", empty.string()}), cli::kExitFailure);
}

TEST(CliMain, RunWritesMaskCleanImageAndStats) {
    const auto dir = small_scene_dir("cli_run");
    const auto out = test::temp_dir("cli_run_out");
    const auto geometry = out / "geometry.json";
    ASSERT_EQ(run_cli({"run", "--input", dir.string(), "--ref", "0", "--out", out.string(), "--max-scans", "3",
                       "--dump-geometry", geometry.string(), "--snapshot-every", "1000"}),
              cli::kExitOk);
    const Mask mask = read_mask(out / "view_00_mask.png");
    EXPECT_EQ(mask.width(), 64);
    EXPECT_EQ(read_image(out / "view_00_clean.png").height(), 48);
    std::ifstream stats_in(out / "run_stats.json");
    const auto stats = nlohmann::json::parse(stats_in);
    EXPECT_EQ(stats.at("reference"), "view_00.png");
    EXPECT_EQ(stats.at("dynamic_counts").size(), stats.at("scans").get<std::size_t>());
    EXPECT_EQ(stats.at("dynamic_pixels").get<long>(), test::count_nonzero(mask));
    std::ifstream geo_in(geometry);
    const auto geo = nlohmann::json::parse(geo_in);
    EXPECT_EQ(geo.at("sources").size(), 2u);
    EXPECT_EQ(geo.at("sources")[0].at("F").size(), 9u);
    EXPECT_FALSE(std::filesystem::is_empty(out / "snapshots"));
}

TEST(CliMain, SynthRunEvalProducesMetrics) {
    const auto scene = test::temp_dir("cli_pipeline_scene");
    const auto out = test::temp_dir("cli_pipeline_out");
    ASSERT_EQ(run_cli({"synth", "--preset", "square-walk", "--seed", "1", "--out", scene.string()}), cli::kExitOk);
    EXPECT_TRUE(std::filesystem::exists(scene / "params.json"));
    EXPECT_TRUE(std::filesystem::exists(scene / "gt" / "background.png"));
    ASSERT_TRUE(std::filesystem::exists(scene / "run_config.json"));
    ASSERT_EQ(run_cli({"run", "--input", scene.string(), "--ref", "0", "--out", out.string(), "--config",
                       (scene / "run_config.json").string()}),
              cli::kExitOk);
    testing::internal::CaptureStdout();
    const int code = run_cli({"eval", "--results", out.string(), "--truth", scene.string()});
    const std::string text = testing::internal::GetCapturedStdout();
    ASSERT_EQ(code, cli::kExitOk);
    const auto metrics = nlohmann::json::parse(text);
    for (const char* key : {"jaccard", "psnr_fill_db", "scans", "seconds"}) EXPECT_TRUE(metrics.contains(key)) << key;
    EXPECT_GE(metrics.at("jaccard").get<double>(), 0.6);
    EXPECT_FALSE(metrics.contains("binarized_agreement"));
}

} // namespace
} // namespace dynclean
