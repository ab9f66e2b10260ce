#include "dynclean/evaluation.hpp"

#include "dynclean/error.hpp"
#include "dynclean/image_set.hpp"

#include <Eigen/Geometry>
#include <Eigen/LU>
#include <nlohmann/json.hpp>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numbers>
#include <random>
#include <sstream>

namespace dynclean {
namespace fs = std::filesystem;

namespace {

using nlohmann::json;

std::uint64_t mix(std::uint64_t x) {
    x ^= x >> 33;
    x *= 0xff51afd7ed558ccdull;
    x ^= x >> 33;
    x *= 0xc4ceb9fe1a85ec53ull;
    x ^= x >> 33;
    return x;
}

double lattice(std::uint64_t seed, long ix, long iy) {
    const std::uint64_t h = mix(seed ^ mix(static_cast<std::uint64_t>(ix) * 0x9E3779B97F4A7C15ull ^
                                           static_cast<std::uint64_t>(iy) * 0xC2B2AE3D27D4EB4Full));
    return static_cast<double>(h >> 11) / static_cast<double>(1ull << 53);
}

/// Smooth value noise in [0, 1) with the given lattice period.
double value_noise(std::uint64_t seed, double u, double v, double period) {
    const double fu = u / period;
    const double fv = v / period;
    const long iu = static_cast<long>(std::floor(fu));
    const long iv = static_cast<long>(std::floor(fv));
    const double tu = fu - iu;
    const double tv = fv - iv;
    const double su = tu * tu * (3.0 - 2.0 * tu);
    const double sv = tv * tv * (3.0 - 2.0 * tv);
    const double a = lattice(seed, iu, iv);
    const double b = lattice(seed, iu + 1, iv);
    const double c = lattice(seed, iu, iv + 1);
    const double d = lattice(seed, iu + 1, iv + 1);
    return (a * (1 - su) + b * su) * (1 - sv) + (c * (1 - su) + d * su) * sv;
}

double fractal_noise(std::uint64_t seed, double u, double v) {
    static constexpr double periods[] = {32.0, 16.0, 8.0, 4.0};
    static constexpr double amps[] = {0.45, 0.3, 0.15, 0.1};
    double sum = 0.0;
    for (int o = 0; o < 4; ++o) sum += amps[o] * value_noise(seed + 7919u * o, u, v, periods[o]);
    return sum;
}

std::uint8_t to_byte(double v) { return static_cast<std::uint8_t>(std::clamp(std::lround(v), 0L, 255L)); }

/// Dark strokes on a grid of character cells; true when (u, v) lies on a stroke.
bool on_glyph(std::uint64_t seed, double u, double v) {
    constexpr double cell_w = 14.0;
    constexpr double cell_h = 20.0;
    constexpr double half_stroke = 1.3;
    const long cx = static_cast<long>(std::floor(u / cell_w));
    const long cy = static_cast<long>(std::floor(v / cell_h));
    const double lx = u - cx * cell_w - 2.0;  // 10 x 16 glyph box inside the cell
    const double ly = v - cy * cell_h - 2.0;
    if (lx < -half_stroke || ly < -half_stroke || lx > 10.0 + half_stroke || ly > 16.0 + half_stroke) return false;

    const std::uint64_t h = mix(seed ^ mix(static_cast<std::uint64_t>(cx) * 0x632BE59BD9B4E019ull ^
                                           static_cast<std::uint64_t>(cy) * 0x85157AF5ull));
    if ((h & 7u) == 0) return false;  // occasional blank cell, like spaces in text
    const auto seg = [&](double x0, double y0, double x1, double y1) {
        const double dx = x1 - x0;
        const double dy = y1 - y0;
        const double t = std::clamp(((lx - x0) * dx + (ly - y0) * dy) / (dx * dx + dy * dy), 0.0, 1.0);
        const double px = x0 + t * dx - lx;
        const double py = y0 + t * dy - ly;
        return px * px + py * py <= half_stroke * half_stroke;
    };
    // Seven-segment style strokes plus two diagonals, each present with its own hash bit.
    bool hit = false;
    if (h & (1u << 3)) hit |= seg(0, 0, 10, 0);
    if (h & (1u << 4)) hit |= seg(0, 8, 10, 8);
    if (h & (1u << 5)) hit |= seg(0, 16, 10, 16);
    if (h & (1u << 6)) hit |= seg(0, 0, 0, 8);
    if (h & (1u << 7)) hit |= seg(10, 0, 10, 8);
    if (h & (1u << 8)) hit |= seg(0, 8, 0, 16);
    if (h & (1u << 9)) hit |= seg(10, 8, 10, 16);
    if (h & (1u << 10)) hit |= seg(0, 16, 10, 0);
    if ((h & (1u << 11)) && !(h & (1u << 10))) hit |= seg(0, 0, 10, 16);
    return hit;
}

Rgb8 background_color(const SceneParams& p, double u, double v) {
    if (p.background == BackgroundKind::Glyphs) {
        if (on_glyph(p.seed * 31 + 5, u, v)) return {25, 25, 35};
        const double n = fractal_noise(p.seed * 131 + 1, u, v);
        return {to_byte(185 + 50 * n), to_byte(180 + 50 * n), to_byte(165 + 50 * n)};
    }
    const double r = fractal_noise(p.seed * 131 + 1, u, v);
    const double g = fractal_noise(p.seed * 131 + 2, u, v);
    const double b = fractal_noise(p.seed * 131 + 3, u, v);
    return {to_byte(30 + 200 * r), to_byte(30 + 200 * g), to_byte(30 + 200 * b)};
}

/// Occluder texture in its local coordinates: saturated diagonal stripes over noise.
Rgb8 occluder_color(const SceneParams& p, double lu, double lv) {
    const double stripe = 0.5 + 0.5 * std::sin((lu + lv) * (2.0 * std::numbers::pi / 9.0));
    const double n = value_noise(p.seed * 977 + 11, lu, lv, 5.0);
    return {to_byte(200 + 55 * stripe), to_byte(20 + 90 * n), to_byte(150 * (1.0 - stripe) + 40 * n)};
}

Eigen::Matrix3d view_homography(const SceneParams& p, int view, std::mt19937_64& rng) {
    const int k = view - p.reference;
    Eigen::Matrix3d H = Eigen::Matrix3d::Identity();
    if (k == 0) return H;
    if (p.camera == CameraModel::Translation) {
        H(0, 2) = k * p.camera_step_x;
        H(1, 2) = k * p.camera_step_y;
        return H;
    }
    std::uniform_real_distribution<double> unit(-1.0, 1.0);
    const double theta = unit(rng) * p.max_rotation_deg * std::numbers::pi / 180.0;
    const double scale = p.source_zoom * (1.0 + unit(rng) * p.max_scale);
    const double tx = unit(rng) * p.max_shift_px;
    const double ty = unit(rng) * p.max_shift_px;
    const double px = unit(rng) * p.max_perspective;
    const double py = unit(rng) * p.max_perspective;
    const double cx = 0.5 * (p.width - 1);
    const double cy = 0.5 * (p.height - 1);
    Eigen::Matrix3d to_center = Eigen::Matrix3d::Identity();
    to_center(0, 2) = -cx;
    to_center(1, 2) = -cy;
    Eigen::Matrix3d back = Eigen::Matrix3d::Identity();
    back(0, 2) = cx + tx;
    back(1, 2) = cy + ty;
    Eigen::Matrix3d core = Eigen::Matrix3d::Identity();
    core(0, 0) = scale * std::cos(theta);
    core(0, 1) = -scale * std::sin(theta);
    core(1, 0) = scale * std::sin(theta);
    core(1, 1) = scale * std::cos(theta);
    core(2, 0) = px;
    core(2, 1) = py;
    return back * core * to_center;
}

Eigen::Vector2d apply(const Eigen::Matrix3d& H, double x, double y) {
    const Eigen::Vector3d q = H * Eigen::Vector3d(x, y, 1.0);
    return {q.x() / q.z(), q.y() / q.z()};
}

bool occluder_present(const SceneParams& p, int view) {
    return p.occluder_size > 0 &&
           std::find(p.occluder_absent.begin(), p.occluder_absent.end(), view) == p.occluder_absent.end();
}

std::string background_name(BackgroundKind k) { return k == BackgroundKind::Glyphs ? "glyphs" : "noise"; }
std::string camera_name(CameraModel c) { return c == CameraModel::Homography ? "homography" : "translation"; }

std::string view_name(int i) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "view_%02d.png", i);
    return buf;
}

std::string mask_name(int i) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "mask_%02d.png", i);
    return buf;
}

void check_same_size(const Plane<std::uint8_t>& a, const Plane<std::uint8_t>& b) {
    if (a.width() != b.width() || a.height() != b.height()) throw InputError("mask dimensions differ");
}

} // namespace

SyntheticScene synth_scene(const SceneParams& p) {
    if (p.views < 2) throw ConfigError("a scene needs at least 2 views");
    if (p.reference < 0 || p.reference >= p.views) throw ConfigError("scene reference index out of range");
    if (p.width < 16 || p.height < 16) throw ConfigError("scene dimensions too small");
    if (!(p.source_zoom > 0)) throw ConfigError("source_zoom must be > 0");
    if (p.supersample < 1 || p.supersample > 16) throw ConfigError("supersample must lie in [1, 16]");
    if (p.occluder_size < 0) throw ConfigError("occluder size must be >= 0");
    if (p.occluder_size > std::min(p.width, p.height)) throw ConfigError("occluder larger than view");

    SyntheticScene scene;
    scene.params = p;
    std::mt19937_64 rng(p.seed * 0x2545F4914F6CDD1Dull + 17);
    for (int i = 0; i < p.views; ++i) scene.world_to_view.push_back(view_homography(p, i, rng));

    const double size = p.occluder_size;
    for (int i = 0; i < p.views; ++i) {
        const Eigen::Matrix3d& H = scene.world_to_view[static_cast<std::size_t>(i)];
        const Eigen::Matrix3d Hinv = H.inverse();
        const bool present = occluder_present(p, i);
        const double ox = p.occluder_x + (i - p.reference) * p.occluder_step_x;
        const double oy = p.occluder_y + (i - p.reference) * p.occluder_step_y;

        if (present) {
            for (const auto& [cx, cy] : {std::pair{ox, oy}, {ox + size, oy}, {ox, oy + size}, {ox + size, oy + size}}) {
                const Eigen::Vector2d c = apply(H, cx, cy);
                if (c.x() < 0 || c.y() < 0 || c.x() > p.width || c.y() > p.height)
                    throw ConfigError("occluder leaves view " + std::to_string(i));
            }
        }

        RgbImage view(p.width, p.height);
        Mask mask(p.width, p.height, 0);
        RgbImage background(p.width, p.height);
        const int ss = p.supersample;
        for (int y = 0; y < p.height; ++y)
            for (int x = 0; x < p.width; ++x) {
                // Coverage and colours are averaged over an ss x ss grid inside the pixel; the
                // mask marks every pixel the occluder contributes to.
                double bg[3] = {0, 0, 0};
                double px[3] = {0, 0, 0};
                int covered = 0;
                for (int sy = 0; sy < ss; ++sy)
                    for (int sx = 0; sx < ss; ++sx) {
                        const double vx = x + (sx + 0.5) / ss - 0.5;
                        const double vy = y + (sy + 0.5) / ss - 0.5;
                        const Eigen::Vector2d w = apply(Hinv, vx, vy);
                        const Rgb8 b = background_color(p, w.x(), w.y());
                        const double lu = w.x() - ox;
                        const double lv = w.y() - oy;
                        const bool on = present && lu >= 0 && lv >= 0 && lu < size && lv < size;
                        const Rgb8 c = on ? occluder_color(p, lu, lv) : b;
                        covered += on;
                        bg[0] += b.r, bg[1] += b.g, bg[2] += b.b;
                        px[0] += c.r, px[1] += c.g, px[2] += c.b;
                    }
                const double n = ss * ss;
                background(x, y) = {to_byte(bg[0] / n), to_byte(bg[1] / n), to_byte(bg[2] / n)};
                view(x, y) = {to_byte(px[0] / n), to_byte(px[1] / n), to_byte(px[2] / n)};
                mask(x, y) = covered > 0 ? 1 : 0;
            }
        scene.views.push_back(std::move(view));
        scene.gt_masks.push_back(std::move(mask));
        if (i == p.reference) scene.gt_background = std::move(background);
    }
    return scene;
}

std::vector<std::string> scene_preset_names() { return {"square-walk", "glyph-walk", "static-plane", "homography-walk"}; }

namespace {

/// Homography views that zoom out slightly so every source covers the whole reference.
void covering_homography(SceneParams& p) {
    p.camera = CameraModel::Homography;
    p.source_zoom = 0.97;
    p.max_shift_px = 1.5;
    p.max_rotation_deg = 0.3;
}

} // namespace

SceneParams scene_preset(const std::string& name, std::uint64_t seed) {
    SceneParams p;
    p.seed = seed;
    if (name == "square-walk") {
        p.camera_step_x = 0.0;
        p.occluder_absent = {2};
    } else if (name == "glyph-walk") {
        p.background = BackgroundKind::Glyphs;
        p.camera_step_x = 0.0;
        p.occluder_absent = {2};
    } else if (name == "static-plane") {
        covering_homography(p);
        p.occluder_size = 0;
    } else if (name == "homography-walk") {
        covering_homography(p);
        p.occluder_absent = {2};
    } else {
        throw ConfigError("unknown scene preset '" + name + "'");
    }
    return p;
}

Config preset_run_config(const std::string& name) {
    Config c;
    if (name == "square-walk" || name == "glyph-walk") {
        // Planar scene seen from one spot: the estimated F is arbitrary, so only a tight
        // pixel-unit epipolar kernel keeps far-off matches from looking consistent.
        c.normalize_coordinates = false;
    } else if (name == "static-plane" || name == "homography-walk") {
        // Resampled views blur gradient descriptors; the low end of the threshold range applies.
        c.t_r = 0.15;
    } else {
        throw ConfigError("unknown scene preset '" + name + "'");
    }
    return c;
}

std::string scene_params_to_json(const SceneParams& p) {
    json j = {{"width", p.width},
              {"height", p.height},
              {"views", p.views},
              {"reference", p.reference},
              {"seed", p.seed},
              {"background", background_name(p.background)},
              {"camera", camera_name(p.camera)},
              {"camera_step_x", p.camera_step_x},
              {"camera_step_y", p.camera_step_y},
              {"source_zoom", p.source_zoom},
              {"max_rotation_deg", p.max_rotation_deg},
              {"max_scale", p.max_scale},
              {"max_shift_px", p.max_shift_px},
              {"max_perspective", p.max_perspective},
              {"supersample", p.supersample},
              {"occluder_size", p.occluder_size},
              {"occluder_x", p.occluder_x},
              {"occluder_y", p.occluder_y},
              {"occluder_step_x", p.occluder_step_x},
              {"occluder_step_y", p.occluder_step_y},
              {"occluder_absent", p.occluder_absent}};
    return j.dump(2);
}

SceneParams scene_params_from_json(const std::string& text) {
    SceneParams p;
    try {
        const json j = json::parse(text);
        const auto get = [&](const char* key, auto& out) {
            if (auto it = j.find(key); it != j.end()) it->get_to(out);
        };
        get("width", p.width);
        get("height", p.height);
        get("views", p.views);
        get("reference", p.reference);
        get("seed", p.seed);
        if (auto it = j.find("background"); it != j.end()) {
            const auto s = it->get<std::string>();
            if (s != "noise" && s != "glyphs") throw ConfigError("unknown background '" + s + "'");
            p.background = s == "glyphs" ? BackgroundKind::Glyphs : BackgroundKind::Noise;
        }
        if (auto it = j.find("camera"); it != j.end()) {
            const auto s = it->get<std::string>();
            if (s != "translation" && s != "homography") throw ConfigError("unknown camera model '" + s + "'");
            p.camera = s == "homography" ? CameraModel::Homography : CameraModel::Translation;
        }
        get("camera_step_x", p.camera_step_x);
        get("camera_step_y", p.camera_step_y);
        get("source_zoom", p.source_zoom);
        get("max_rotation_deg", p.max_rotation_deg);
        get("max_scale", p.max_scale);
        get("max_shift_px", p.max_shift_px);
        get("max_perspective", p.max_perspective);
        get("supersample", p.supersample);
        get("occluder_size", p.occluder_size);
        get("occluder_x", p.occluder_x);
        get("occluder_y", p.occluder_y);
        get("occluder_step_x", p.occluder_step_x);
        get("occluder_step_y", p.occluder_step_y);
        get("occluder_absent", p.occluder_absent);
    } catch (const json::exception& e) {
        throw ConfigError(std::string("invalid scene parameters: ") + e.what());
    }
    return p;
}

void save_scene(const SyntheticScene& scene, const fs::path& dir) {
    std::error_code ec;
    fs::create_directories(dir / "gt", ec);
    if (ec) throw OutputError("cannot create scene directory: " + dir.string());
    for (std::size_t i = 0; i < scene.views.size(); ++i) {
        write_image(dir / view_name(static_cast<int>(i)), scene.views[i]);
        write_mask(dir / "gt" / mask_name(static_cast<int>(i)), scene.gt_masks[i]);
    }
    write_image(dir / "gt" / "background.png", scene.gt_background);
    std::ofstream out(dir / "params.json");
    if (!out) throw OutputError("cannot write scene parameters in " + dir.string());
    out << scene_params_to_json(scene.params) << '\n';
}

SceneTruth load_scene_truth(const fs::path& dir) {
    std::ifstream in(dir / "params.json");
    if (!in) throw InputError("no params.json in " + dir.string());
    std::stringstream ss;
    ss << in.rdbuf();
    SceneTruth truth;
    truth.params = scene_params_from_json(ss.str());
    truth.reference_name = view_name(truth.params.reference);
    truth.reference_mask = read_mask(dir / "gt" / mask_name(truth.params.reference));
    truth.background = read_image(dir / "gt" / "background.png");
    return truth;
}

double jaccard(const Mask& a, const Mask& b) {
    check_same_size(a, b);
    long inter = 0;
    long uni = 0;
    const auto pa = a.pixels();
    const auto pb = b.pixels();
    for (std::size_t i = 0; i < pa.size(); ++i) {
        const bool x = pa[i] != 0;
        const bool y = pb[i] != 0;
        inter += x && y;
        uni += x || y;
    }
    return uni == 0 ? 1.0 : static_cast<double>(inter) / static_cast<double>(uni);
}

double psnr_region(const RgbImage& image, const RgbImage& reference, const Mask& mask) {
    if (image.width() != reference.width() || image.height() != reference.height() ||
        image.width() != mask.width() || image.height() != mask.height())
        throw InputError("psnr_region: dimensions differ");
    double sse = 0.0;
    long count = 0;
    for (int y = 0; y < image.height(); ++y)
        for (int x = 0; x < image.width(); ++x) {
            if (!mask(x, y)) continue;
            const Rgb8 a = image(x, y);
            const Rgb8 b = reference(x, y);
            const double dr = a.r - b.r;
            const double dg = a.g - b.g;
            const double db = a.b - b.b;
            sse += dr * dr + dg * dg + db * db;
            ++count;
        }
    if (count == 0) throw InputError("psnr_region: no region");
    const double mse = sse / (3.0 * static_cast<double>(count));
    if (mse == 0.0) return kInfinitePsnr;
    return 10.0 * std::log10(255.0 * 255.0 / mse);
}

double binarized_agreement(const RgbImage& image, const RgbImage& reference, const Mask& mask, int threshold) {
    if (image.width() != reference.width() || image.height() != reference.height() ||
        image.width() != mask.width() || image.height() != mask.height())
        throw InputError("binarized_agreement: dimensions differ");
    const auto dark = [threshold](Rgb8 c) { return 0.299 * c.r + 0.587 * c.g + 0.114 * c.b < threshold; };
    long agree = 0;
    long count = 0;
    for (int y = 0; y < image.height(); ++y)
        for (int x = 0; x < image.width(); ++x) {
            if (!mask(x, y)) continue;
            agree += dark(image(x, y)) == dark(reference(x, y));
            ++count;
        }
    if (count == 0) throw InputError("binarized_agreement: no region");
    return static_cast<double>(agree) / static_cast<double>(count);
}

TwoViewRig synth_two_view_rig(int points, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> unit(-1.0, 1.0);

    Eigen::Matrix3d K;
    K << 500, 0, 320, 0, 520, 240, 0, 0, 1;
    const Eigen::Matrix3d R =
        (Eigen::AngleAxisd(0.12, Eigen::Vector3d::UnitY()) * Eigen::AngleAxisd(-0.05, Eigen::Vector3d::UnitX()) *
         Eigen::AngleAxisd(0.03, Eigen::Vector3d::UnitZ()))
            .toRotationMatrix();
    const Eigen::Vector3d t(-0.8, 0.1, 0.15);

    TwoViewRig rig;
    rig.P1.leftCols<3>() = K;
    rig.P1.col(3).setZero();
    rig.P2.leftCols<3>() = K * R;
    rig.P2.col(3) = K * t;

    Eigen::Matrix3d tx;
    tx << 0, -t.z(), t.y(), t.z(), 0, -t.x(), -t.y(), t.x(), 0;
    const Eigen::Matrix3d Kinv = K.inverse();
    rig.F = canonicalize_fundamental(Kinv.transpose() * tx * R * Kinv);

    for (int i = 0; i < points; ++i) {
        const Eigen::Vector4d X(unit(rng) * 2.0, unit(rng) * 1.5, 5.0 + 2.0 * unit(rng), 1.0);
        const Eigen::Vector3d a = rig.P1 * X;
        const Eigen::Vector3d b = rig.P2 * X;
        rig.matches.push_back({a.hnormalized(), b.hnormalized()});
    }
    return rig;
}

} // namespace dynclean
