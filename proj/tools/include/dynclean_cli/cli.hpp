#pragma once

#include "dynclean/config.hpp"

#include <cstdint>
#include <optional>
#include <string>

namespace CLI {
class App;
}

namespace dynclean::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitFailure = 1;
inline constexpr int kExitUsage = 2;

/// Flag values; an empty optional means "keep the file/default value".
struct ConfigFlags {
    std::optional<std::string> config_file;
    std::optional<double> lambda1, lambda2, lambda3, lambda6, lambda7, lambda8;
    std::optional<double> sigma_c, sigma_g, sigma_e, sigma_h;
    std::optional<int> patch_size;
    std::optional<double> t_r, dbscan_eps;
    std::optional<int> min_pts;
    std::optional<double> tie_epsilon;
    std::optional<int> pm_iters, pm_refine_iters, max_scans;
    std::optional<std::uint64_t> seed;
    std::optional<long> snapshot_every;
    std::optional<bool> normalize_coordinates;
    std::optional<std::string> descriptor_refresh;
    std::optional<double> ransac_threshold, ransac_confidence;
    std::optional<int> ransac_max_iterations, harvest_count, harvest_stride, threads;
};

void add_config_flags(CLI::App& app, ConfigFlags& flags);

/// Defaults, then the config file, then individual flags; validated.
Config build_config(const ConfigFlags& flags);

/// Entry point for the `dynclean` tool: subcommands run, synth, eval.
int main(int argc, char** argv);

} // namespace dynclean::cli
