#pragma once

#include <cstdint>
#include <filesystem>
#include <string>

namespace dynclean {

/// How the reference descriptors react to a patch write.
enum class DescriptorRefresh {
    /// Only the replaced centre takes the incoming patch's descriptors; neighbours keep theirs.
    Center,
    /// Additionally, every pixel whose support overlaps the written patch is recomputed from the
    /// updated image the next time it is read.
    StaleNeighbors,
};

/// Every tunable of the pipeline. Defaults are the published constants where one exists.
struct Config {
    // Match-quality weights; lambda1 + lambda2 + lambda3 must equal 1.
    double lambda1 = 0.15;
    double lambda2 = 0.4;
    double lambda3 = 0.45;
    // Patch-selection weights.
    double lambda6 = 0.12;
    double lambda7 = 0.36;
    double lambda8 = 0.03;

    double sigma_c = 4.8;
    double sigma_g = 0.25;
    double sigma_e = 0.17;
    double sigma_h = 4.8;

    int patch_size = 7;
    double t_r = 0.5;
    double dbscan_eps = 0.35;
    int min_pts = 1;
    double tie_epsilon = 1e-6;

    int pm_iters = 6;
    /// Extra correspondence-search iterations run once the epipolar prior is available.
    int pm_refine_iters = 2;
    int max_scans = 10;
    std::uint64_t seed = 0;
    /// Emit a progress snapshot every N visited pixels; 0 disables.
    long snapshot_every = 0;
    /// Evaluate Sampson distances in coordinates divided by the reference image diagonal.
    bool normalize_coordinates = true;
    DescriptorRefresh descriptor_refresh = DescriptorRefresh::Center;

    double ransac_threshold = 1.0;
    double ransac_confidence = 0.999;
    int ransac_max_iterations = 5000;
    int harvest_count = 2000;
    int harvest_stride = 4;

    /// Worker threads for per-image precompute; 0 picks the hardware concurrency.
    int threads = 0;

    double lambda4() const { return lambda1 / (lambda1 + lambda2); }
    double lambda5() const { return lambda2 / (lambda1 + lambda2); }

    /// Throws ConfigError naming the first violated constraint.
    void validate() const;
};

std::string to_string(DescriptorRefresh mode);
DescriptorRefresh parse_descriptor_refresh(const std::string& text);

/// Overlays the keys present in a JSON document onto `base`. Unknown keys are rejected.
Config merge_config_json(const Config& base, const std::string& json_text);
Config load_config_file(const Config& base, const std::filesystem::path& path);
/// Every field as a JSON object (pretty-printed).
std::string config_to_json(const Config& config);

} // namespace dynclean
