#pragma once

#include "dynclean/config.hpp"
#include "dynclean/epipolar.hpp"
#include "dynclean/features.hpp"
#include "dynclean/image.hpp"

#include <cstdint>
#include <functional>
#include <vector>

namespace dynclean {

/// Integer match N(x) in one source image for every reference pixel.
struct CorrespondenceField {
    int source_index = -1;
    Plane<Point> target;
};

/// Match confidence C_s(x) in [0, 1] for every reference pixel.
struct SimilarityMap {
    int source_index = -1;
    Plane<float> value;
};

/// Appearance-only similarity lambda4 * S_c + lambda5 * S_g, in [0, 1].
double appearance_similarity(const DescriptorField& a, Point xa, const DescriptorField& b, Point xb,
                             const Config& config);

/// H(x_r, x, F): lambda1 * S_c + lambda2 * S_g + lambda3 * S_f, in [0, 1].
double match_quality(const DescriptorField& ref, Point x_ref, const DescriptorField& src, Point x_src,
                     const EpipolarKernel& epipolar, const Config& config);

struct DenseFieldOptions {
    int iterations = 6;
    std::uint64_t seed = 0;
    /// When set, adds lambda3 * (1 - S_f) to the matching cost.
    const EpipolarKernel* epipolar = nullptr;
    /// Starting field; random (plus identity proposal) when null.
    const CorrespondenceField* initial = nullptr;
    /// Called after initialisation (iteration 0) and after each iteration with the summed cost.
    std::function<void(int, double)> on_iteration;
};

/// Matching cost minimised by the dense search: lambda4 (1 - S_c) + lambda5 (1 - S_g)
/// [+ lambda3 (1 - S_f)].
double matching_cost(const DescriptorField& ref, Point x_ref, const DescriptorField& src, Point x_src,
                     const EpipolarKernel* epipolar, const Config& config);

/// Coherence-aware randomised correspondence search: alternating-direction propagation from the
/// already-visited 4-neighbours plus an exponentially shrinking random search around the current
/// best. Deterministic for a given seed.
CorrespondenceField estimate_dense_field(const DescriptorField& ref, const DescriptorField& src, int source_index,
                                         const Config& config, const DenseFieldOptions& options);

/// C_s(x) = H(x, N(x), F_s) for every reference pixel.
SimilarityMap similarity_map(const DescriptorField& ref, const DescriptorField& src, const CorrespondenceField& field,
                             const EpipolarKernel& epipolar, const Config& config);

/// Up to `count` matches for fundamental-matrix estimation: the grid-subsampled (every `stride`
/// pixels) reference pixels with the highest appearance similarity to their match.
std::vector<Match> harvest_matches(const DescriptorField& ref, const DescriptorField& src,
                                   const CorrespondenceField& field, int count, int stride, const Config& config);

} // namespace dynclean
