#include "dynclean/features.hpp"

#include "dynclean/error.hpp"

#include <spdlog/spdlog.h>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>

namespace dynclean {
namespace {

constexpr float kTwoPi = 2.f * std::numbers::pi_v<float>;
constexpr float kClamp = 0.2f;

struct Gradient {
    float magnitude = 0.f;
    float angle = 0.f;  // [0, 2pi), y axis pointing down
};

Gradient pixel_gradient(const LabImage& lab, int x, int y) {
    const float gx = 0.5f * (lab.clamped(x + 1, y).L - lab.clamped(x - 1, y).L);
    const float gy = 0.5f * (lab.clamped(x, y + 1).L - lab.clamped(x, y - 1).L);
    const float mag = std::sqrt(gx * gx + gy * gy);
    if (mag == 0.f) return {};
    float angle = std::atan2(gy, gx);
    if (angle < 0.f) angle += kTwoPi;
    if (angle >= kTwoPi) angle = 0.f;
    return {mag, angle};
}

/// Gaussian window (sigma = p / 2) over the patch, indexed [dy + r][dx + r].
const std::vector<float>& window_weights(int p) {
    static thread_local std::vector<std::vector<float>> cache(32);
    auto& w = cache[p];
    if (w.empty()) {
        const int r = p / 2;
        const float sigma = 0.5f * static_cast<float>(p);
        w.resize(static_cast<std::size_t>(p) * p);
        for (int dy = -r; dy <= r; ++dy)
            for (int dx = -r; dx <= r; ++dx)
                w[(dy + r) * p + (dx + r)] = std::exp(-static_cast<float>(dx * dx + dy * dy) / (2.f * sigma * sigma));
    }
    return w;
}

/// Shared binning core: `sample(x, y)` yields the gradient at an image pixel.
template <typename Sampler>
void bin_gradients(Point c, int p, Sampler&& sample, MutableGradientSpan out) {
    std::fill(out.begin(), out.end(), 0.f);
    const int r = p / 2;
    const float cells_per_pixel = 4.f / static_cast<float>(p);
    const auto& window = window_weights(p);

    for (int dy = -r; dy <= r; ++dy) {
        const float v = (static_cast<float>(dy + r) + 0.5f) * cells_per_pixel - 0.5f;
        const int v0 = static_cast<int>(std::floor(v));
        const float fv = v - static_cast<float>(v0);
        for (int dx = -r; dx <= r; ++dx) {
            const Gradient g = sample(c.x + dx, c.y + dy);
            if (g.magnitude == 0.f) continue;
            const float u = (static_cast<float>(dx + r) + 0.5f) * cells_per_pixel - 0.5f;
            const int u0 = static_cast<int>(std::floor(u));
            const float fu = u - static_cast<float>(u0);
            const float o = g.angle * (8.f / kTwoPi);
            const int o0 = static_cast<int>(std::floor(o));
            const float fo = o - static_cast<float>(o0);
            const float mag = g.magnitude * window[(dy + r) * p + (dx + r)];

            for (int iv = 0; iv < 2; ++iv) {
                const int bv = v0 + iv;
                if (bv < 0 || bv > 3) continue;
                const float wv = iv ? fv : 1.f - fv;
                for (int iu = 0; iu < 2; ++iu) {
                    const int bu = u0 + iu;
                    if (bu < 0 || bu > 3) continue;
                    const float wuv = wv * (iu ? fu : 1.f - fu) * mag;
                    float* cell = out.data() + (bv * 4 + bu) * 8;
                    cell[o0 & 7] += wuv * (1.f - fo);
                    cell[(o0 + 1) & 7] += wuv * fo;
                }
            }
        }
    }

    float norm2 = 0.f;
    for (float v : out) norm2 += v * v;
    if (norm2 == 0.f) return;
    float inv = 1.f / std::sqrt(norm2);
    norm2 = 0.f;
    for (float& v : out) {
        v = std::min(v * inv, kClamp);
        norm2 += v * v;
    }
    inv = 1.f / std::sqrt(norm2);
    for (float& v : out) v *= inv;
}

} // namespace

void check_patch_size(int p) {
    if (p % 2 == 0 || p < 5 || p > 31)
        throw ConfigError("patch size must be odd and within [5, 31], got " + std::to_string(p));
}

void gradient_descriptor(const LabImage& lab, Point center, int p, MutableGradientSpan out) {
    const auto sample = [&](int x, int y) {
        return pixel_gradient(lab, std::clamp(x, 0, lab.width() - 1), std::clamp(y, 0, lab.height() - 1));
    };
    bin_gradients(center, p, sample, out);
}

ColorMean color_mean(const LabImage& lab, Point center, int p) {
    const int r = p / 2;
    double sum[3] = {0.0, 0.0, 0.0};
    for (int dy = -r; dy <= r; ++dy)
        for (int dx = -r; dx <= r; ++dx) {
            const Lab& c = lab.clamped(center.x + dx, center.y + dy);
            sum[0] += c.L;
            sum[1] += c.a;
            sum[2] += c.b;
        }
    const double n = static_cast<double>(p) * p;
    return {static_cast<float>(sum[0] / n), static_cast<float>(sum[1] / n), static_cast<float>(sum[2] / n)};
}

DescriptorField dense_descriptor_field(const LabImage& lab, int p) {
    check_patch_size(p);
    const int w = lab.width();
    const int h = lab.height();

    Plane<Gradient> gradients(w, h);
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x) gradients(x, y) = pixel_gradient(lab, x, y);
    const auto sample = [&](int x, int y) { return gradients.clamped(x, y); };

    DescriptorField field;
    field.width = w;
    field.height = h;
    field.patch_size = p;
    field.gradient.assign(static_cast<std::size_t>(w) * h * kGradientDims, 0.f);
    field.color.resize(static_cast<std::size_t>(w) * h);

    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x) {
            const Point c{x, y};
            bin_gradients(c, p, sample, field.fg(c));
            field.fc(c) = color_mean(lab, c, p);
        }
    return field;
}

float normalize_fields(std::span<DescriptorField> fields) {
    float max_value = 0.f;
    for (const auto& f : fields)
        for (float v : f.gradient) max_value = std::max(max_value, v);
    if (max_value == 0.f) {
        spdlog::warn("all gradient descriptors are zero; skipping normalisation");
        return 0.f;
    }
    for (auto& f : fields) {
        for (float& v : f.gradient) v /= max_value;
        f.gradient_max *= max_value;
    }
    return max_value;
}

void refresh_descriptor(DescriptorField& field, const LabImage& lab, Point center) {
    auto fg = field.fg(center);
    gradient_descriptor(lab, center, field.patch_size, fg);
    if (field.gradient_max != 1.f)
        for (float& v : fg) v /= field.gradient_max;
    field.fc(center) = color_mean(lab, center, field.patch_size);
}

std::array<float, kHogBins> align_histogram(const std::array<float, kHogBins>& histogram) {
    std::array<float, kHogBins> out{};
    const auto dominant = static_cast<int>(std::max_element(histogram.begin(), histogram.end()) - histogram.begin());
    float norm2 = 0.f;
    for (int i = 0; i < kHogBins; ++i) {
        out[i] = histogram[(i + dominant) % kHogBins];
        norm2 += out[i] * out[i];
    }
    if (norm2 == 0.f) return out;
    const float inv = 1.f / std::sqrt(norm2);
    for (float& v : out) v *= inv;
    return out;
}

PatchDescriptor region_descriptor(const LabImage& lab, const Rect& region) {
    PatchDescriptor d;
    if (region.empty()) return d;

    std::array<float, kHogBins> hist{};
    double sum[3] = {0.0, 0.0, 0.0};
    for (int y = region.y0; y < region.y1; ++y)
        for (int x = region.x0; x < region.x1; ++x) {
            const Lab& c = lab.clamped(x, y);
            sum[0] += c.L;
            sum[1] += c.a;
            sum[2] += c.b;
            const Gradient g = pixel_gradient(lab, std::clamp(x, 0, lab.width() - 1), std::clamp(y, 0, lab.height() - 1));
            if (g.magnitude == 0.f) continue;
            const float o = g.angle * (static_cast<float>(kHogBins) / kTwoPi);
            const int o0 = static_cast<int>(std::floor(o));
            const float fo = o - static_cast<float>(o0);
            hist[o0 % kHogBins] += g.magnitude * (1.f - fo);
            hist[(o0 + 1) % kHogBins] += g.magnitude * fo;
        }
    const double n = static_cast<double>(region.width()) * region.height();
    d.color = {static_cast<float>(sum[0] / n), static_cast<float>(sum[1] / n), static_cast<float>(sum[2] / n)};
    d.hog = align_histogram(hist);
    return d;
}

PatchDescriptor patch_descriptor(const LabImage& lab, Point center, int p) {
    return region_descriptor(lab, Rect::centered(center, p / 2));
}

} // namespace dynclean
