#include "dynclean/clustering.hpp"

#include "dynclean/kernels.hpp"

#include <algorithm>
#include <cassert>
#include <deque>

namespace dynclean {

double cluster_distance(const Candidate& a, const Candidate& b, std::span<const DescriptorField> fields,
                        const Config& config) {
    const DescriptorField& fa = fields[static_cast<std::size_t>(a.source)];
    const DescriptorField& fb = fields[static_cast<std::size_t>(b.source)];
    // Same as 1 - lambda4 S_c - lambda5 S_g because lambda4 + lambda5 = 1, but exactly 0 on self.
    return config.lambda4() * (1.0 - s_e(fa.fc(a.location), fb.fc(b.location), config.sigma_c)) +
           config.lambda5() * (1.0 - s_e(fa.fg(a.location), fb.fg(b.location), config.sigma_g));
}

ClusterSet dbscan(std::span<const double> distances, int count, double eps, int min_pts) {
    assert(distances.size() >= static_cast<std::size_t>(count) * count);
    constexpr int kUnvisited = -2;
    constexpr int kNoise = -1;
    std::vector<int> label(static_cast<std::size_t>(count), kUnvisited);

    const auto region = [&](int i) {
        std::vector<int> out;
        for (int j = 0; j < count; ++j)
            if (distances[static_cast<std::size_t>(i) * count + j] <= eps || i == j) out.push_back(j);
        return out;
    };

    ClusterSet result;
    for (int i = 0; i < count; ++i) {
        if (label[i] != kUnvisited) continue;
        auto neighbors = region(i);
        if (static_cast<int>(neighbors.size()) < min_pts) {
            label[i] = kNoise;
            continue;
        }
        const int id = static_cast<int>(result.clusters.size());
        result.clusters.emplace_back();
        label[i] = id;
        std::deque<int> seeds(neighbors.begin(), neighbors.end());
        while (!seeds.empty()) {
            const int q = seeds.front();
            seeds.pop_front();
            if (label[q] == kNoise) label[q] = id;  // border point
            if (label[q] != kUnvisited) continue;
            label[q] = id;
            auto q_neighbors = region(q);
            if (static_cast<int>(q_neighbors.size()) >= min_pts)
                seeds.insert(seeds.end(), q_neighbors.begin(), q_neighbors.end());
        }
    }

    for (int i = 0; i < count; ++i) {
        if (label[i] >= 0)
            result.clusters[static_cast<std::size_t>(label[i])].push_back(i);
        else
            result.noise.push_back(i);
    }
    return result;
}

ClusterSet dbscan(std::span<const Candidate> candidates, std::span<const DescriptorField> fields,
                  const Config& config) {
    const int n = static_cast<int>(candidates.size());
    std::vector<double> distances(static_cast<std::size_t>(n) * n, 0.0);
    for (int i = 0; i < n; ++i)
        for (int j = i + 1; j < n; ++j) {
            const double d = cluster_distance(candidates[i], candidates[j], fields, config);
            distances[static_cast<std::size_t>(i) * n + j] = d;
            distances[static_cast<std::size_t>(j) * n + i] = d;
        }
    return dbscan(distances, n, config.dbscan_eps, config.min_pts);
}

} // namespace dynclean
