#include "dynclean_cli/cli.hpp"

#include "dynclean/config.hpp"
#include "dynclean/error.hpp"
#include "dynclean/evaluation.hpp"
#include "dynclean/image_set.hpp"
#include "dynclean/scan_engine.hpp"

#include <CLI11.hpp>
#include <nlohmann/json.hpp>
#include <spdlog/cfg/env.h>
#include <spdlog/spdlog.h>

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>

namespace dynclean::cli {

namespace fs = std::filesystem;
using nlohmann::json;

void add_config_flags(CLI::App& app, ConfigFlags& f) {
    app.add_option("--config", f.config_file, "JSON config file; flags override its values")->check(CLI::ExistingFile);
    app.add_option("--lambda1", f.lambda1, "colour weight in the match quality");
    app.add_option("--lambda2", f.lambda2, "gradient weight in the match quality");
    app.add_option("--lambda3", f.lambda3, "epipolar weight in the match quality");
    app.add_option("--lambda6", f.lambda6, "colour weight in patch selection");
    app.add_option("--lambda7", f.lambda7, "HoG weight in patch selection");
    app.add_option("--lambda8", f.lambda8, "epipolar weight in patch selection");
    app.add_option("--sigma-c", f.sigma_c);
    app.add_option("--sigma-g", f.sigma_g);
    app.add_option("--sigma-e", f.sigma_e);
    app.add_option("--sigma-h", f.sigma_h);
    app.add_option("--patch-size", f.patch_size, "odd patch side p");
    app.add_option("--t-r", f.t_r, "static threshold on M, in (0, 1)");
    app.add_option("--dbscan-eps", f.dbscan_eps);
    app.add_option("--min-pts", f.min_pts);
    app.add_option("--tie-epsilon", f.tie_epsilon);
    app.add_option("--pm-iters", f.pm_iters, "correspondence search iterations");
    app.add_option("--pm-refine-iters", f.pm_refine_iters);
    app.add_option("--max-scans", f.max_scans);
    app.add_option("--seed", f.seed);
    app.add_option("--snapshot-every", f.snapshot_every, "write intermediate results every N visited pixels");
    app.add_option("--normalize-coordinates", f.normalize_coordinates, "true/false");
    app.add_option("--descriptor-refresh", f.descriptor_refresh, "center | stale-neighbors");
    app.add_option("--ransac-threshold", f.ransac_threshold);
    app.add_option("--ransac-confidence", f.ransac_confidence);
    app.add_option("--ransac-max-iterations", f.ransac_max_iterations);
    app.add_option("--harvest-count", f.harvest_count);
    app.add_option("--harvest-stride", f.harvest_stride);
    app.add_option("--threads", f.threads);
}

Config build_config(const ConfigFlags& f) {
    Config c;
    if (f.config_file) c = load_config_file(c, *f.config_file);
    const auto set = [](auto& field, const auto& flag) {
        if (flag) field = *flag;
    };
    set(c.lambda1, f.lambda1);
    set(c.lambda2, f.lambda2);
    set(c.lambda3, f.lambda3);
    set(c.lambda6, f.lambda6);
    set(c.lambda7, f.lambda7);
    set(c.lambda8, f.lambda8);
    set(c.sigma_c, f.sigma_c);
    set(c.sigma_g, f.sigma_g);
    set(c.sigma_e, f.sigma_e);
    set(c.sigma_h, f.sigma_h);
    set(c.patch_size, f.patch_size);
    set(c.t_r, f.t_r);
    set(c.dbscan_eps, f.dbscan_eps);
    set(c.min_pts, f.min_pts);
    set(c.tie_epsilon, f.tie_epsilon);
    set(c.pm_iters, f.pm_iters);
    set(c.pm_refine_iters, f.pm_refine_iters);
    set(c.max_scans, f.max_scans);
    set(c.seed, f.seed);
    set(c.snapshot_every, f.snapshot_every);
    set(c.normalize_coordinates, f.normalize_coordinates);
    if (f.descriptor_refresh) c.descriptor_refresh = parse_descriptor_refresh(*f.descriptor_refresh);
    set(c.ransac_threshold, f.ransac_threshold);
    set(c.ransac_confidence, f.ransac_confidence);
    set(c.ransac_max_iterations, f.ransac_max_iterations);
    set(c.harvest_count, f.harvest_count);
    set(c.harvest_stride, f.harvest_stride);
    set(c.threads, f.threads);
    c.validate();
    return c;
}

namespace {


struct RunArgs {
    ConfigFlags config;
    std::string input;
    std::string ref = "0";
    std::string out;
    std::string cache_dir;
    std::string dump_geometry;
};

struct SynthArgs {
    std::string preset = "square-walk";
    std::uint64_t seed = 1;
    std::string params_file;
    std::string out;
};

struct EvalArgs {
    std::string results;
    std::string truth;
};

json geometry_json(const RunResult& result, const ImageSet& set) {
    json sources = json::array();
    for (int s : set.source_indices()) {
        const GeometryReport& g = result.geometry[static_cast<std::size_t>(s)];
        json F = json::array();
        for (int r = 0; r < 3; ++r)
            for (int c = 0; c < 3; ++c) F.push_back(g.fundamental.F(r, c));
        sources.push_back({{"source", set.names[static_cast<std::size_t>(s)]},
                           {"F", F},
                           {"matches", g.match_count},
                           {"inliers", g.fundamental.inlier_count},
                           {"inlier_ratio", g.fundamental.inlier_ratio},
                           {"residual_median_px", g.fundamental.residual_median},
                           {"low_support", g.fundamental.low_support},
                           {"residual_bucket_edges_px", kResidualBucketEdges},
                           {"residual_histogram", g.residual_histogram}});
    }
    return {{"reference", set.names[static_cast<std::size_t>(set.reference_index)]}, {"sources", sources}};
}

void write_text(const fs::path& path, const std::string& text) {
    std::ofstream out(path);
    if (!out) throw OutputError("cannot write " + path.string());
    out << text << '\n';
}

std::string read_text(const fs::path& path) {
    std::ifstream in(path);
    if (!in) throw InputError("cannot read " + path.string());
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

int do_run(const RunArgs& args) {
    const Config config = build_config(args.config);
    spdlog::info("effective config: {}", json::parse(config_to_json(config)).dump());

    const ImageSet set = load_image_set(args.input, parse_reference_selector(args.ref));
    spdlog::info("loaded {} images, reference {}", set.size(), set.names[static_cast<std::size_t>(set.reference_index)]);

    const fs::path out_dir = args.out;
    const std::string stem = fs::path(set.names[static_cast<std::size_t>(set.reference_index)]).stem().string();

    RunOptions options;
    options.precompute.cache_dir = args.cache_dir;
    if (config.snapshot_every > 0) {
        const fs::path snap_dir = out_dir / "snapshots";
        fs::create_directories(snap_dir);
        options.on_progress = [snap_dir, stem](const ScanProgress& p) {
            char tag[64];
            std::snprintf(tag, sizeof(tag), "scan%02d_%08ld", p.scan_index, p.visited);
            write_outputs(p.state.dynamic.cumulative, p.state.rgb, snap_dir, stem + "_" + tag);
        };
    }

    const RunResult result = run(set, config, options);
    const OutputPaths paths = write_outputs(result.dynamic_mask, result.cleaned, out_dir, stem);

    long dynamic = 0;
    for (auto v : result.dynamic_mask.pixels()) dynamic += v != 0;
    const json stats = {{"reference", set.names[static_cast<std::size_t>(set.reference_index)]},
                        {"mask", paths.mask.filename().string()},
                        {"clean", paths.clean.filename().string()},
                        {"scans", result.scans},
                        {"converged", result.converged},
                        {"dynamic_counts", result.dynamic_counts},
                        {"dynamic_pixels", dynamic},
                        {"seconds", result.seconds}};
    write_text(out_dir / "run_stats.json", stats.dump(2));
    if (!args.dump_geometry.empty()) write_text(args.dump_geometry, geometry_json(result, set).dump(2));
    spdlog::info("wrote {} and {}", paths.mask.string(), paths.clean.string());
    return kExitOk;
}

int do_synth(const SynthArgs& args) {
    SceneParams params = args.params_file.empty() ? scene_preset(args.preset, args.seed)
                                                  : scene_params_from_json(read_text(args.params_file));
    const SyntheticScene scene = synth_scene(params);
    save_scene(scene, args.out);
    if (args.params_file.empty())
        write_text(fs::path(args.out) / "run_config.json", config_to_json(preset_run_config(args.preset)));
    spdlog::info("wrote {} views to {}", scene.views.size(), args.out);
    return kExitOk;
}

int do_eval(const EvalArgs& args) {
    const fs::path results = args.results;
    const json stats = json::parse(read_text(results / "run_stats.json"));
    const SceneTruth truth = load_scene_truth(args.truth);
    const auto reference = stats.at("reference").get<std::string>();
    if (reference != truth.reference_name)
        throw InputError("results are for reference " + reference + " but the scene's reference is " +
                         truth.reference_name);
    const Mask mask = read_mask(results / stats.at("mask").get<std::string>());
    const RgbImage clean = read_image(results / stats.at("clean").get<std::string>());

    json metrics;
    metrics["jaccard"] = jaccard(mask, truth.reference_mask);
    long gt_pixels = 0;
    for (auto v : truth.reference_mask.pixels()) gt_pixels += v != 0;
    if (gt_pixels > 0) {
        const double psnr = psnr_region(clean, truth.background, truth.reference_mask);
        metrics["psnr_fill_db"] = std::isinf(psnr) ? 99.0 : psnr;
        if (truth.params.background == BackgroundKind::Glyphs)
            metrics["binarized_agreement"] = binarized_agreement(clean, truth.background, truth.reference_mask);
    } else {
        metrics["psnr_fill_db"] = nullptr;
    }
    metrics["scans"] = stats.at("scans");
    metrics["seconds"] = stats.at("seconds");
    std::cout << metrics.dump(2) << std::endl;
    return kExitOk;
}

} // namespace

int main(int argc, char** argv) {
    spdlog::cfg::load_env_levels();

    CLI::App app{"Detect and remove dynamic content from a multi-view image set", "dynclean"};
    app.require_subcommand(1);

    RunArgs run_args;
    CLI::App* run_cmd = app.add_subcommand("run", "detect dynamic pixels in the reference and fill them");
    run_cmd->add_option("--input", run_args.input, "directory of views")->required()->check(CLI::ExistingDirectory);
    run_cmd->add_option("--ref", run_args.ref, "reference view: index in sorted order or file name");
    run_cmd->add_option("--out", run_args.out, "output directory")->required();
    run_cmd->add_option("--cache-dir", run_args.cache_dir, "directory for cached descriptor/correspondence fields");
    run_cmd->add_option("--dump-geometry", run_args.dump_geometry, "write per-source epipolar diagnostics as JSON");
    add_config_flags(*run_cmd, run_args.config);

    SynthArgs synth_args;
    CLI::App* synth_cmd = app.add_subcommand("synth", "render a synthetic scene with ground truth");
    synth_cmd->add_option("--preset", synth_args.preset, "square-walk | glyph-walk | static-plane | homography-walk");
    synth_cmd->add_option("--seed", synth_args.seed);
    synth_cmd->add_option("--params", synth_args.params_file, "scene parameter JSON (overrides --preset)")
        ->check(CLI::ExistingFile);
    synth_cmd->add_option("--out", synth_args.out, "scene directory")->required();

    EvalArgs eval_args;
    CLI::App* eval_cmd = app.add_subcommand("eval", "score a run against a synthetic scene's ground truth");
    eval_cmd->add_option("--results", eval_args.results, "output directory of `run`")->required()
        ->check(CLI::ExistingDirectory);
    eval_cmd->add_option("--truth", eval_args.truth, "scene directory written by `synth`")->required()
        ->check(CLI::ExistingDirectory);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? kExitOk : kExitUsage;
    }

    try {
        if (*run_cmd) return do_run(run_args);
        if (*synth_cmd) return do_synth(synth_args);
        return do_eval(eval_args);
    } catch (const ConfigError& e) {
        spdlog::error("{}", e.what());
        return kExitUsage;
    } catch (const std::exception& e) {
        spdlog::error("{}", e.what());
        return kExitFailure;
    }
}

} // namespace dynclean::cli
