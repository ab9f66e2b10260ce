#include "dynclean/config.hpp"

#include "dynclean/error.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

namespace dynclean {
namespace {

using nlohmann::json;

void require(bool ok, const std::string& message) {
    if (!ok) throw ConfigError(message);
}

template <typename T>
void read_if(const json& j, const char* key, T& out) {
    if (auto it = j.find(key); it != j.end()) out = it->get<T>();
}

} // namespace

void Config::validate() const {
    require(std::abs(lambda1 + lambda2 + lambda3 - 1.0) <= 1e-9,
            "lambda1 + lambda2 + lambda3 must equal 1");
    require(lambda1 >= 0 && lambda2 >= 0 && lambda3 >= 0 && lambda1 + lambda2 > 0,
            "lambda1, lambda2, lambda3 must be non-negative with lambda1 + lambda2 > 0");
    require(lambda6 >= 0 && lambda7 >= 0 && lambda8 >= 0, "lambda6, lambda7, lambda8 must be non-negative");
    require(sigma_c > 0 && sigma_g > 0 && sigma_e > 0 && sigma_h > 0, "all sigma values must be > 0");
    require(patch_size % 2 == 1 && patch_size >= 5 && patch_size <= 31, "patch_size must be odd and within [5, 31]");
    require(t_r > 0 && t_r < 1, "t_r must lie in (0, 1)");
    require(dbscan_eps > 0 && dbscan_eps < 1, "dbscan_eps must lie in (0, 1)");
    require(min_pts >= 1, "min_pts must be >= 1");
    require(tie_epsilon >= 0, "tie_epsilon must be >= 0");
    require(pm_iters >= 1, "pm_iters must be >= 1");
    require(pm_refine_iters >= 0, "pm_refine_iters must be >= 0");
    require(max_scans >= 1, "max_scans must be >= 1");
    require(snapshot_every >= 0, "snapshot_every must be >= 0");
    require(ransac_threshold > 0, "ransac_threshold must be > 0");
    require(ransac_confidence > 0 && ransac_confidence < 1, "ransac_confidence must lie in (0, 1)");
    require(ransac_max_iterations >= 1, "ransac_max_iterations must be >= 1");
    require(harvest_count >= 8, "harvest_count must be >= 8");
    require(harvest_stride >= 1, "harvest_stride must be >= 1");
    require(threads >= 0, "threads must be >= 0");
}

std::string to_string(DescriptorRefresh mode) {
    return mode == DescriptorRefresh::Center ? "center" : "stale-neighbors";
}

DescriptorRefresh parse_descriptor_refresh(const std::string& text) {
    if (text == "center") return DescriptorRefresh::Center;
    if (text == "stale-neighbors") return DescriptorRefresh::StaleNeighbors;
    throw ConfigError("descriptor_refresh must be 'center' or 'stale-neighbors', got '" + text + "'");
}

Config merge_config_json(const Config& base, const std::string& json_text) {
    json j;
    try {
        j = json::parse(json_text);
    } catch (const json::parse_error& e) {
        throw ConfigError(std::string("config is not valid JSON: ") + e.what());
    }
    if (!j.is_object()) throw ConfigError("config must be a JSON object");

    static const char* const known[] = {
        "lambda1", "lambda2", "lambda3", "lambda6", "lambda7", "lambda8", "sigma_c", "sigma_g", "sigma_e",
        "sigma_h", "patch_size", "t_r", "dbscan_eps", "min_pts", "tie_epsilon", "pm_iters", "pm_refine_iters",
        "max_scans", "seed", "snapshot_every", "normalize_coordinates", "descriptor_refresh", "ransac_threshold",
        "ransac_confidence", "ransac_max_iterations", "harvest_count", "harvest_stride", "threads",
        "lambda4", "lambda5"};
    for (const auto& item : j.items()) {
        if (std::find(std::begin(known), std::end(known), item.key()) == std::end(known))
            throw ConfigError("unknown config key '" + item.key() + "'");
    }

    Config c = base;
    try {
        read_if(j, "lambda1", c.lambda1);
        read_if(j, "lambda2", c.lambda2);
        read_if(j, "lambda3", c.lambda3);
        read_if(j, "lambda6", c.lambda6);
        read_if(j, "lambda7", c.lambda7);
        read_if(j, "lambda8", c.lambda8);
        read_if(j, "sigma_c", c.sigma_c);
        read_if(j, "sigma_g", c.sigma_g);
        read_if(j, "sigma_e", c.sigma_e);
        read_if(j, "sigma_h", c.sigma_h);
        read_if(j, "patch_size", c.patch_size);
        read_if(j, "t_r", c.t_r);
        read_if(j, "dbscan_eps", c.dbscan_eps);
        read_if(j, "min_pts", c.min_pts);
        read_if(j, "tie_epsilon", c.tie_epsilon);
        read_if(j, "pm_iters", c.pm_iters);
        read_if(j, "pm_refine_iters", c.pm_refine_iters);
        read_if(j, "max_scans", c.max_scans);
        read_if(j, "seed", c.seed);
        read_if(j, "snapshot_every", c.snapshot_every);
        read_if(j, "normalize_coordinates", c.normalize_coordinates);
        if (auto it = j.find("descriptor_refresh"); it != j.end())
            c.descriptor_refresh = parse_descriptor_refresh(it->get<std::string>());
        read_if(j, "ransac_threshold", c.ransac_threshold);
        read_if(j, "ransac_confidence", c.ransac_confidence);
        read_if(j, "ransac_max_iterations", c.ransac_max_iterations);
        read_if(j, "harvest_count", c.harvest_count);
        read_if(j, "harvest_stride", c.harvest_stride);
        read_if(j, "threads", c.threads);
        // lambda4 and lambda5 are derived from lambda1 and lambda2; accept them only when consistent.
        if (auto it = j.find("lambda4"); it != j.end())
            require(std::abs(it->get<double>() - c.lambda4()) <= 1e-9, "lambda4 must equal lambda1 / (lambda1 + lambda2)");
        if (auto it = j.find("lambda5"); it != j.end())
            require(std::abs(it->get<double>() - c.lambda5()) <= 1e-9, "lambda5 must equal lambda2 / (lambda1 + lambda2)");
    } catch (const json::type_error& e) {
        throw ConfigError(std::string("config value has the wrong type: ") + e.what());
    }
    return c;
}

Config load_config_file(const Config& base, const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file: " + path.string());
    std::stringstream ss;
    ss << in.rdbuf();
    return merge_config_json(base, ss.str());
}

std::string config_to_json(const Config& c) {
    json j = {
        {"lambda1", c.lambda1},
        {"lambda2", c.lambda2},
        {"lambda3", c.lambda3},
        {"lambda4", c.lambda4()},
        {"lambda5", c.lambda5()},
        {"lambda6", c.lambda6},
        {"lambda7", c.lambda7},
        {"lambda8", c.lambda8},
        {"sigma_c", c.sigma_c},
        {"sigma_g", c.sigma_g},
        {"sigma_e", c.sigma_e},
        {"sigma_h", c.sigma_h},
        {"patch_size", c.patch_size},
        {"t_r", c.t_r},
        {"dbscan_eps", c.dbscan_eps},
        {"min_pts", c.min_pts},
        {"tie_epsilon", c.tie_epsilon},
        {"pm_iters", c.pm_iters},
        {"pm_refine_iters", c.pm_refine_iters},
        {"max_scans", c.max_scans},
        {"seed", c.seed},
        {"snapshot_every", c.snapshot_every},
        {"normalize_coordinates", c.normalize_coordinates},
        {"descriptor_refresh", to_string(c.descriptor_refresh)},
        {"ransac_threshold", c.ransac_threshold},
        {"ransac_confidence", c.ransac_confidence},
        {"ransac_max_iterations", c.ransac_max_iterations},
        {"harvest_count", c.harvest_count},
        {"harvest_stride", c.harvest_stride},
        {"threads", c.threads},
    };
    return j.dump(2);
}

} // namespace dynclean
