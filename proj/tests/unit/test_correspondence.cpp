#include "dynclean/color.hpp"
#include "dynclean/correspondence.hpp"
#include "dynclean/evaluation.hpp"
#include "dynclean/kernels.hpp"

#include "support/fixtures.hpp"

#include <gtest/gtest.h>

#include <Eigen/LU>

#include <algorithm>
#include <cmath>
#include <vector>

namespace dynclean {
namespace {

DescriptorField single_pixel(ColorMean fc, std::vector<std::pair<int, float>> fg) {
    DescriptorField f;
    f.width = 1;
    f.height = 1;
    f.patch_size = 7;
    f.gradient.assign(kGradientDims, 0.f);
    for (auto [k, v] : fg) f.gradient[static_cast<std::size_t>(k)] = v;
    f.color = {fc};
    return f;
}

DescriptorField field_of(const RgbImage& img, int p = 7) { return dense_descriptor_field(rgb_to_lab(img), p); }

/// Normalises the two fields jointly, as precompute does.
std::pair<DescriptorField, DescriptorField> joint(const RgbImage& a, const RgbImage& b, int p = 7) {
    std::vector<DescriptorField> fields{field_of(a, p), field_of(b, p)};
    normalize_fields(fields);
    return {std::move(fields[0]), std::move(fields[1])};
}

RgbImage crop(const RgbImage& img, int x0, int y0, int w, int h) {
    RgbImage out(w, h);
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x) out(x, y) = img(x0 + x, y0 + y);
    return out;
}

TEST(GaussianKernel, ClosedFormPoints) {
    const std::array<float, 3> a{50, 0, 0};
    const std::array<float, 3> b{50, 3, 4};
    EXPECT_EQ(s_e(a, a, 4.8), 1.0);
    // exp(-25 / (2 * 4.8^2)); evaluates to 0.58127, not the 0.5806 sometimes quoted.
    EXPECT_NEAR(s_e(a, b, 4.8), 0.5812730178734145, 1e-12);
    EXPECT_NEAR(gaussian_kernel(2 * 0.25 * 0.25, 0.25), std::exp(-1.0), 1e-12);
    EXPECT_NEAR(gaussian_kernel(2 * 4.8 * 4.8, 4.8), std::exp(-1.0), 1e-12);
}

TEST(GaussianKernel, DimensionMismatchIsAProgrammingError) {
    const std::array<float, 3> a{};
    const std::array<float, 2> b{};
    EXPECT_THROW(s_e(a, b, 1.0), std::invalid_argument);
}

TEST(MatchQuality, PerfectMatchIsOne) {
    const DescriptorField f = single_pixel({50, 1, 2}, {{3, 0.4f}});
    const EpipolarKernel epi(test::row_epipolar_F(), 0.17, 1.0);
    EXPECT_DOUBLE_EQ(match_quality(f, {0, 0}, f, {0, 0}, epi, Config{}), 1.0);
}

TEST(MatchQuality, InfiniteSampsonLeavesAppearanceWeights) {
    const DescriptorField f = single_pixel({50, 1, 2}, {{3, 0.4f}});
    const EpipolarKernel degenerate(Eigen::Matrix3d::Zero(), 0.17, 1.0);
    EXPECT_NEAR(match_quality(f, {0, 0}, f, {0, 0}, degenerate, Config{}), 0.55, 1e-15);
}

TEST(MatchQuality, HandComputedPixel) {
    // |dfc|^2 = 1 + 9 = 10, |dfg|^2 = 0.2^2 + 0.1^2 = 0.05, Sampson 0.5 px^2 / 50 = 0.01.
    const DescriptorField a = single_pixel({50, 0, 0}, {{0, 0.2f}, {9, 0.1f}});
    const DescriptorField b = single_pixel({50, 1, 3}, {});
    DescriptorField b2 = b;
    b2.height = 2;
    b2.gradient.resize(2 * kGradientDims, 0.f);
    b2.color.push_back(b.color[0]);
    const EpipolarKernel epi(test::row_epipolar_F(), 0.17, std::sqrt(50.0));
    EXPECT_NEAR(match_quality(a, {0, 0}, b2, {0, 1}, epi, Config{}), 0.7673738343951391, 1e-7);
}

TEST(MatchQuality, AlwaysWithinUnitInterval) {
    const RgbImage a = test::texture(40, 30, 1);
    const RgbImage b = test::texture(40, 30, 2);
    const auto [fa, fb] = joint(a, b);
    const EpipolarKernel epi(test::row_epipolar_F(), 0.17, 50.0);
    for (int y = 0; y < 30; y += 3)
        for (int x = 0; x < 40; x += 3) {
            const double q = match_quality(fa, {x, y}, fb, {39 - x, 29 - y}, epi, Config{});
            EXPECT_GE(q, 0.0);
            EXPECT_LE(q, 1.0);
        }
}

TEST(MatchingCost, ComplementOfAppearanceAndEpipolarTerms) {
    const DescriptorField a = single_pixel({50, 0, 0}, {{0, 0.2f}});
    const DescriptorField b = single_pixel({52, 0, 0}, {{0, 0.1f}});
    const Config c;
    const double appearance = appearance_similarity(a, {0, 0}, b, {0, 0}, c);
    EXPECT_NEAR(appearance, c.lambda4() * std::exp(-4.0 / (2 * 4.8 * 4.8)) + c.lambda5() * std::exp(-0.01 / (2 * 0.0625)),
                1e-7);
    EXPECT_NEAR(matching_cost(a, {0, 0}, b, {0, 0}, nullptr, c), 1.0 - appearance, 1e-15);
    const EpipolarKernel degenerate(Eigen::Matrix3d::Zero(), 0.17, 1.0);
    EXPECT_NEAR(matching_cost(a, {0, 0}, b, {0, 0}, &degenerate, c), 1.0 - appearance + c.lambda3, 1e-15);
}

double fraction_with_offset(const CorrespondenceField& f, Point offset, int margin) {
    long hit = 0;
    long total = 0;
    for (int y = margin; y < f.target.height() - margin; ++y)
        for (int x = margin; x < f.target.width() - margin; ++x) {
            ++total;
            hit += f.target(x, y) == Point{x + offset.x, y + offset.y};
        }
    return static_cast<double>(hit) / static_cast<double>(total);
}

TEST(DenseField, IdenticalImagesGiveIdentity) {
    const RgbImage img = test::texture(80, 60, 3);
    const auto [fa, fb] = joint(img, img);
    const CorrespondenceField f = estimate_dense_field(fa, fb, 1, Config{}, {});
    EXPECT_GE(fraction_with_offset(f, {0, 0}, 4), 0.99);
}

TEST(DenseField, IntegerTranslationIsRecovered) {
    const RgbImage big = test::texture(100, 80, 4);
    const RgbImage ref = crop(big, 10, 10, 80, 60);
    const RgbImage src = crop(big, 5, 13, 80, 60);  // ref(x, y) = src(x + 5, y - 3)
    const auto [fa, fb] = joint(ref, src);
    const CorrespondenceField f = estimate_dense_field(fa, fb, 1, Config{}, {.iterations = 6, .seed = 2});
    // Interior pixels whose shifted match also lies inside the source, with descriptor margin.
    long hit = 0;
    long total = 0;
    for (int y = 8; y < 60 - 8; ++y)
        for (int x = 4; x < 80 - 10; ++x) {
            ++total;
            hit += f.target(x, y) == Point{x + 5, y - 3};
        }
    EXPECT_GE(static_cast<double>(hit) / static_cast<double>(total), 0.95);
}

TEST(DenseField, HomographyWarpEndpointError) {
    SceneParams p;
    p.width = 160;
    p.height = 120;
    p.views = 2;
    p.seed = 5;
    p.camera = CameraModel::Homography;
    p.source_zoom = 0.97;
    p.max_rotation_deg = 0.5;
    p.max_shift_px = 3;
    p.occluder_size = 0;
    const SyntheticScene scene = synth_scene(p);
    const auto [fa, fb] = joint(scene.views[0], scene.views[1]);
    const CorrespondenceField f = estimate_dense_field(fa, fb, 1, Config{}, {});
    const Eigen::Matrix3d H = scene.world_to_view[1] * scene.world_to_view[0].inverse();

    std::vector<double> errors;
    for (int y = 6; y < p.height - 6; ++y)
        for (int x = 6; x < p.width - 6; ++x) {
            const Eigen::Vector3d q = H * Eigen::Vector3d(x, y, 1);
            const Point t = f.target(x, y);
            errors.push_back(std::hypot(t.x - q.x() / q.z(), t.y - q.y() / q.z()));
        }
    std::nth_element(errors.begin(), errors.begin() + static_cast<std::ptrdiff_t>(errors.size() / 2), errors.end());
    EXPECT_LE(errors[errors.size() / 2], 1.5);
}

TEST(DenseField, TargetsStayInsideTheSource) {
    const auto [fa, fb] = joint(test::texture(50, 40, 6), test::texture(30, 25, 7));
    const CorrespondenceField f = estimate_dense_field(fa, fb, 3, Config{}, {.iterations = 2});
    EXPECT_EQ(f.source_index, 3);
    EXPECT_EQ(f.target.width(), 50);
    EXPECT_EQ(f.target.height(), 40);
    for (Point t : f.target.pixels()) {
        EXPECT_GE(t.x, 0);
        EXPECT_GE(t.y, 0);
        EXPECT_LT(t.x, 30);
        EXPECT_LT(t.y, 25);
    }
}

TEST(DenseField, TotalCostNeverIncreases) {
    const RgbImage big = test::texture(90, 70, 8);
    const auto [fa, fb] = joint(crop(big, 0, 0, 80, 60), crop(big, 7, 4, 80, 60));
    const EpipolarKernel epi(test::row_epipolar_F(), 0.17, 100.0);
    for (const EpipolarKernel* prior : {static_cast<const EpipolarKernel*>(nullptr), &epi}) {
        std::vector<double> totals;
        DenseFieldOptions o;
        o.iterations = 5;
        o.epipolar = prior;
        o.on_iteration = [&](int iter, double total) {
            EXPECT_EQ(iter, static_cast<int>(totals.size()));
            totals.push_back(total);
        };
        estimate_dense_field(fa, fb, 1, Config{}, o);
        ASSERT_EQ(totals.size(), 6u);
        for (std::size_t k = 1; k < totals.size(); ++k) EXPECT_LE(totals[k], totals[k - 1] + 1e-9);
        EXPECT_LT(totals.back(), totals.front());
    }
}

TEST(DenseField, DeterministicForSeedAndSeedSensitive) {
    const auto [fa, fb] = joint(test::texture(60, 40, 9), test::texture(60, 40, 10));
    const auto a = estimate_dense_field(fa, fb, 1, Config{}, {.iterations = 3, .seed = 5});
    const auto b = estimate_dense_field(fa, fb, 1, Config{}, {.iterations = 3, .seed = 5});
    const auto c = estimate_dense_field(fa, fb, 1, Config{}, {.iterations = 3, .seed = 6});
    EXPECT_TRUE(std::equal(a.target.pixels().begin(), a.target.pixels().end(), b.target.pixels().begin()));
    EXPECT_FALSE(std::equal(a.target.pixels().begin(), a.target.pixels().end(), c.target.pixels().begin()));
}

TEST(DenseField, InitialFieldIsRespected) {
    const RgbImage img = test::texture(40, 30, 11);
    const auto [fa, fb] = joint(img, img);
    CorrespondenceField identity{1, Plane<Point>(40, 30)};
    for (int y = 0; y < 30; ++y)
        for (int x = 0; x < 40; ++x) identity.target(x, y) = {x, y};
    const auto f = estimate_dense_field(fa, fb, 1, Config{}, {.iterations = 1, .initial = &identity});
    // Identity already has zero cost everywhere, so nothing can replace it.
    EXPECT_DOUBLE_EQ(fraction_with_offset(f, {0, 0}, 0), 1.0);
}

TEST(SimilarityMap, MatchesPointwiseQuality) {
    const RgbImage big = test::texture(70, 50, 12);
    const auto [fa, fb] = joint(crop(big, 0, 0, 60, 40), crop(big, 3, 0, 60, 40));
    const auto field = estimate_dense_field(fa, fb, 2, Config{}, {.iterations = 2});
    const EpipolarKernel epi(test::row_epipolar_F(), 0.17, 72.0);
    const SimilarityMap map = similarity_map(fa, fb, field, epi, Config{});
    EXPECT_EQ(map.source_index, 2);
    for (int y = 0; y < 40; ++y)
        for (int x = 0; x < 60; ++x) {
            const float v = map.value(x, y);
            EXPECT_GE(v, 0.f);
            EXPECT_LE(v, 1.f);
            EXPECT_FLOAT_EQ(v, static_cast<float>(match_quality(fa, {x, y}, fb, field.target(x, y), epi, Config{})));
        }
}

TEST(HarvestMatches, GridSubsampledAndRankedByAppearance) {
    const RgbImage img = test::texture(40, 32, 13);
    const auto [fa, fb] = joint(img, test::texture(40, 32, 14));
    const auto field = estimate_dense_field(fa, fb, 1, Config{}, {.iterations = 2});
    const Config c;
    const auto all = harvest_matches(fa, fb, field, 10000, 4, c);
    EXPECT_EQ(all.size(), 10u * 8u);
    double previous = 2.0;
    for (const Match& m : all) {
        const Point x{static_cast<int>(m.x1.x()), static_cast<int>(m.x1.y())};
        EXPECT_EQ(x.x % 4, 2);
        EXPECT_EQ(x.y % 4, 2);
        const Point t = field.target(x);
        EXPECT_EQ(m.x2, Eigen::Vector2d(t.x, t.y));
        const double s = appearance_similarity(fa, x, fb, t, c);
        EXPECT_LE(s, previous);
        previous = s;
    }
    const auto top = harvest_matches(fa, fb, field, 7, 4, c);
    ASSERT_EQ(top.size(), 7u);
    for (std::size_t k = 0; k < 7; ++k) EXPECT_EQ(top[k].x1, all[k].x1);
}

} // namespace
} // namespace dynclean
