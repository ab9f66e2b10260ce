#pragma once

#include "dynclean/config.hpp"
#include "dynclean/features.hpp"
#include "dynclean/image.hpp"

#include <span>
#include <vector>

namespace dynclean {

/// Which reference neighbour's match a candidate was derived from.
enum class CandidateOrigin { Left, Up, Right, Bottom };

/// A proposed match for the current reference pixel in one source image.
struct Candidate {
    Point location;          ///< shifted neighbour match, clamped to the source bounds
    int source = -1;         ///< image index of the source
    CandidateOrigin origin = CandidateOrigin::Left;
    float confidence = 0.f;  ///< similarity-map value of the originating neighbour
    Point neighbor_target;   ///< the neighbour's unshifted match
};

struct ClusterSet {
    std::vector<std::vector<int>> clusters;  ///< candidate indices, ascending within each cluster
    std::vector<int> noise;
};

/// Appearance distance between two candidates: 1 - lambda4 S_c - lambda5 S_g, in [0, 1].
/// `fields` is indexed by image index.
double cluster_distance(const Candidate& a, const Candidate& b, std::span<const DescriptorField> fields,
                        const Config& config);

/// Density-based clustering over a symmetric row-major count x count distance matrix.
/// Points within eps (inclusive) are neighbours; a point is core when its neighbourhood,
/// itself included, has at least min_pts members. Visits points in index order.
ClusterSet dbscan(std::span<const double> distances, int count, double eps, int min_pts);

ClusterSet dbscan(std::span<const Candidate> candidates, std::span<const DescriptorField> fields,
                  const Config& config);

} // namespace dynclean
