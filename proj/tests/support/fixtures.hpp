#pragma once

#include "dynclean/color.hpp"
#include "dynclean/config.hpp"
#include "dynclean/evaluation.hpp"
#include "dynclean/features.hpp"
#include "dynclean/image_set.hpp"
#include "dynclean/scan_engine.hpp"

#include <Eigen/Core>

#include <algorithm>
#include <filesystem>
#include <functional>
#include <random>
#include <string>

namespace dynclean::test {

/// Smooth random colour texture, rendered through the scene generator (no occluder).
inline RgbImage texture(int w, int h, std::uint64_t seed) {
    SceneParams p;
    p.width = std::max(w, 16);
    p.height = std::max(h, 16);
    p.views = 2;
    p.seed = seed;
    p.occluder_size = 0;
    p.camera_step_x = 0;
    const RgbImage full = synth_scene(p).views[0];
    RgbImage out(w, h);
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x) out(x, y) = full(x, y);
    return out;
}

inline RgbImage constant_image(int w, int h, Rgb8 c) { return RgbImage(w, h, c); }

/// F for a camera translating along x: epipolar lines are image rows, x2^T F x1 = y1 - y2.
inline Eigen::Matrix3d row_epipolar_F() {
    Eigen::Matrix3d F;
    F << 0, 0, 0, 0, 0, -1, 0, 1, 0;
    return F;
}

/// Precomputed state built from explicit correspondence functions instead of the search, so tests
/// control exactly what the scanner sees. `target(s, p)` gives N_s(p).
inline Precomputed manual_precomputed(const ImageSet& set, const Config& config,
                                      const std::function<Point(int, Point)>& target,
                                      const Eigen::Matrix3d& F = row_epipolar_F()) {
    Precomputed pre;
    const auto n = static_cast<std::size_t>(set.size());
    pre.lab.resize(n);
    pre.descriptors.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
        pre.lab[i] = rgb_to_lab(set.images[i]);
        pre.descriptors[i] = dense_descriptor_field(pre.lab[i], config.patch_size);
    }
    normalize_fields(pre.descriptors);
    pre.geometry.resize(n);
    pre.epipolar.resize(n);
    pre.correspondence.resize(n);
    pre.similarity.resize(n);
    const RgbImage& ref = set.reference();
    for (int s : set.source_indices()) {
        const auto k = static_cast<std::size_t>(s);
        pre.epipolar[k] = EpipolarKernel(F, config.sigma_e, 1.0);
        pre.geometry[k].fundamental.F = F;
        CorrespondenceField field{s, Plane<Point>(ref.width(), ref.height())};
        const RgbImage& src = set.images[k];
        for (int y = 0; y < ref.height(); ++y)
            for (int x = 0; x < ref.width(); ++x) field.target(x, y) = src.clamp(target(s, Point{x, y}));
        pre.correspondence[k] = std::move(field);
        pre.similarity[k] =
            similarity_map(pre.descriptors[static_cast<std::size_t>(set.reference_index)], pre.descriptors[k],
                           pre.correspondence[k], pre.epipolar[k], config);
    }
    return pre;
}

/// Fresh empty directory under the system temp dir.
inline std::filesystem::path temp_dir(const std::string& name) {
    const auto dir = std::filesystem::temp_directory_path() / ("dynclean_test_" + name);
    std::filesystem::remove_all(dir);
    std::filesystem::create_directories(dir);
    return dir;
}

inline long count_nonzero(const Mask& m) {
    long n = 0;
    for (auto v : m.pixels()) n += v != 0;
    return n;
}

} // namespace dynclean::test
