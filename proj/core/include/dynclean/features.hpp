#pragma once

#include "dynclean/image.hpp"

#include <array>
#include <span>
#include <vector>

namespace dynclean {

inline constexpr int kGradientDims = 128;  // 4 x 4 spatial cells x 8 orientations
inline constexpr int kHogBins = 16;

using ColorMean = std::array<float, 3>;
using GradientSpan = std::span<const float, kGradientDims>;
using MutableGradientSpan = std::span<float, kGradientDims>;

/// Throws ConfigError unless p is odd and 5 <= p <= 31.
void check_patch_size(int p);

/// Per-pixel descriptors of one image: a 128-d gradient-orientation histogram and the mean
/// L*a*b* colour, both over the p x p patch centred at the pixel (edge replicated at borders).
struct DescriptorField {
    int width = 0;
    int height = 0;
    int patch_size = 0;
    /// Divisor applied to every raw gradient component by normalize_fields (1 = raw).
    float gradient_max = 1.f;
    std::vector<float> gradient;     // width * height * kGradientDims
    std::vector<ColorMean> color;    // width * height

    std::size_t index(Point p) const { return static_cast<std::size_t>(p.y) * width + p.x; }

    GradientSpan fg(Point p) const { return GradientSpan(gradient.data() + index(p) * kGradientDims, kGradientDims); }
    MutableGradientSpan fg(Point p) { return MutableGradientSpan(gradient.data() + index(p) * kGradientDims, kGradientDims); }
    const ColorMean& fc(Point p) const { return color[index(p)]; }
    ColorMean& fc(Point p) { return color[index(p)]; }

    bool contains(Point p) const { return p.x >= 0 && p.y >= 0 && p.x < width && p.y < height; }
};

/// Raw (not set-normalised) gradient descriptor of the patch centred at `center`: trilinear
/// binning of L-channel gradients into 4x4x8 bins, Gaussian window, L2 normalisation, clamping at
/// 0.2 and renormalisation. Zero gradient energy yields the zero vector.
void gradient_descriptor(const LabImage& lab, Point center, int p, MutableGradientSpan out);

/// Mean L*a*b* over the p x p patch centred at `center`.
ColorMean color_mean(const LabImage& lab, Point center, int p);

DescriptorField dense_descriptor_field(const LabImage& lab, int p);

/// Divides every gradient component of every field by the single largest component found across
/// all of them. Color means are left untouched. Returns the maximum that was used, or 0 when the
/// whole set has no gradient energy (in which case nothing is changed).
float normalize_fields(std::span<DescriptorField> fields);

/// Recomputes both descriptors at `center` from `lab`, applying the field's stored normalisation.
void refresh_descriptor(DescriptorField& field, const LabImage& lab, Point center);

/// Descriptor of an arbitrary image region, used when comparing overlapping patches.
struct PatchDescriptor {
    ColorMean color{};                      ///< mean L*a*b*
    std::array<float, kHogBins> hog{};      ///< rotation-aligned, L2-normalised orientation histogram
};

/// Region is read with edge replication, so it may extend past the image.
PatchDescriptor region_descriptor(const LabImage& lab, const Rect& region);
PatchDescriptor patch_descriptor(const LabImage& lab, Point center, int p);

/// Circularly shifts the histogram so that its largest bin comes first (ties: lowest index),
/// then L2-normalises it. An all-zero histogram stays zero.
std::array<float, kHogBins> align_histogram(const std::array<float, kHogBins>& histogram);

} // namespace dynclean
