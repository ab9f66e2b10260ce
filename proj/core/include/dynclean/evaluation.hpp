#pragma once

#include "dynclean/config.hpp"
#include "dynclean/epipolar.hpp"
#include "dynclean/image.hpp"

#include <Eigen/Core>

#include <cstdint>
#include <filesystem>
#include <limits>
#include <string>
#include <vector>

namespace dynclean {

enum class BackgroundKind { Noise, Glyphs };
enum class CameraModel { Translation, Homography };

/// Everything needed to render a synthetic multi-view scene deterministically.
/// World coordinates coincide with the reference view's pixel coordinates.
struct SceneParams {
    int width = 320;
    int height = 240;
    int views = 5;
    int reference = 0;
    std::uint64_t seed = 1;

    BackgroundKind background = BackgroundKind::Noise;
    CameraModel camera = CameraModel::Translation;
    /// Translation model: world-to-view shift per view step (view i shifts by (i - reference) times this).
    double camera_step_x = -3.0;
    double camera_step_y = 0.0;
    /// Homography model: scale applied to every non-reference view about the image centre.
    /// Values below 1 widen the source field of view so it covers the whole reference.
    double source_zoom = 1.0;
    /// Homography model: per-view random perturbation bounds.
    double max_rotation_deg = 0.5;
    double max_scale = 0.005;
    double max_shift_px = 3.0;
    double max_perspective = 1e-6;

    /// Samples per pixel axis; each pixel is the box-filtered average of samples^2 points,
    /// which models sensor integration and keeps sub-pixel motion from aliasing the texture.
    int supersample = 4;

    /// Side of the square occluder in world pixels; 0 means no occluder.
    int occluder_size = 40;
    double occluder_x = 60.5;  ///< top-left corner in the reference view (world coords); pixel centres are integers
    double occluder_y = 100.5;
    double occluder_step_x = 25.0;  ///< world-space motion per view step
    double occluder_step_y = 0.0;
    std::vector<int> occluder_absent;  ///< views in which the occluder is not rendered
};

struct SyntheticScene {
    SceneParams params;
    std::vector<RgbImage> views;
    std::vector<Mask> gt_masks;              ///< 1 where the occluder covers the view
    RgbImage gt_background;                  ///< occluder-free reference view
    std::vector<Eigen::Matrix3d> world_to_view;
};

/// Throws ConfigError on inconsistent parameters, including an occluder that does not fit.
SyntheticScene synth_scene(const SceneParams& params);

/// Named parameter sets: "square-walk", "glyph-walk", "static-plane", "homography-walk".
SceneParams scene_preset(const std::string& name, std::uint64_t seed = 1);
std::vector<std::string> scene_preset_names();
/// Run configuration the preset is meant to be processed with (threshold and coordinate choices).
Config preset_run_config(const std::string& name);

std::string scene_params_to_json(const SceneParams& params);
SceneParams scene_params_from_json(const std::string& json_text);

/// Writes view_XX.png, gt/mask_XX.png, gt/background.png and params.json.
void save_scene(const SyntheticScene& scene, const std::filesystem::path& directory);

/// Ground truth for the reference view of a saved scene.
struct SceneTruth {
    SceneParams params;
    std::string reference_name;  ///< e.g. "view_00.png"
    Mask reference_mask;
    RgbImage background;
};
SceneTruth load_scene_truth(const std::filesystem::path& directory);

/// |A n B| / |A u B|; 1 when both are empty.
double jaccard(const Mask& a, const Mask& b);

inline constexpr double kInfinitePsnr = std::numeric_limits<double>::infinity();

/// PSNR (peak 255) over the masked pixels, MSE averaged over the three channels.
double psnr_region(const RgbImage& image, const RgbImage& reference, const Mask& mask);

/// Fraction of masked pixels whose dark/light binarisation (luma < threshold is dark) agrees.
double binarized_agreement(const RgbImage& image, const RgbImage& reference, const Mask& mask, int threshold = 110);

/// Synthetic calibrated two-camera rig with an analytic fundamental matrix.
struct TwoViewRig {
    Eigen::Matrix<double, 3, 4> P1;
    Eigen::Matrix<double, 3, 4> P2;
    Eigen::Matrix3d F;             ///< canonicalised, x2^T F x1 = 0
    std::vector<Match> matches;    ///< exact projections of random scene points
};
TwoViewRig synth_two_view_rig(int points, std::uint64_t seed);

} // namespace dynclean
