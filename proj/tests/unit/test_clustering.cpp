#include "dynclean/clustering.hpp"
#include "support/clustering_oracle.hpp"

#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <vector>

namespace dynclean {
namespace {

using test::canonical;
using test::epsilon_components;
using test::Partition;
using test::prototype_fields;
using test::random_candidates;

std::vector<double> distance_matrix(std::span<const Candidate> c, std::span<const DescriptorField> f,
                                    const Config& config) {
    const int n = static_cast<int>(c.size());
    std::vector<double> d(static_cast<std::size_t>(n) * n);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) d[static_cast<std::size_t>(i) * n + j] = cluster_distance(c[i], c[j], f, config);
    return d;
}

DescriptorField one_pixel(ColorMean fc, float g0) {
    DescriptorField f;
    f.width = 1;
    f.height = 1;
    f.gradient.assign(kGradientDims, 0.f);
    f.gradient[0] = g0;
    f.color = {fc};
    return f;
}

TEST(ClusterDistance, ClosedFormPoints) {
    const Config c;
    const double sc = c.sigma_c;
    // |dfc|^2 = 2 sigma_c^2 exactly in float: (0, sqrt(2) sigma_c) is not representable, so use
    // a two-component difference whose squares sum to 2 * 4.8^2 = 46.08.
    const std::vector<DescriptorField> fields{one_pixel({50, 0, 0}, 0.3f), one_pixel({50, 4.8f, 4.8f}, 0.3f)};
    Candidate a;
    a.source = 0;
    Candidate b;
    b.source = 1;
    EXPECT_NEAR(2 * sc * sc, 46.08, 1e-12);
    EXPECT_NEAR(cluster_distance(a, b, fields, c), 0.17239651604415207, 1e-6);
    EXPECT_EQ(cluster_distance(a, a, fields, c), 0.0);

    const std::vector<DescriptorField> far{one_pixel({0, 0, 0}, 0.f), one_pixel({100, 100, 100}, 1000.f)};
    EXPECT_NEAR(cluster_distance(a, b, far, c), 1.0, 1e-12);
}

TEST(ClusterDistance, SymmetricAndBounded) {
    std::mt19937_64 rng(3);
    const auto fields = prototype_fields(rng);
    const auto cands = random_candidates(rng, 30);
    const Config c;
    for (const auto& a : cands)
        for (const auto& b : cands) {
            const double d = cluster_distance(a, b, fields, c);
            EXPECT_EQ(d, cluster_distance(b, a, fields, c));
            EXPECT_NEAR(d, test::reference_cluster_distance(a, b, fields, c), 1e-6);
            EXPECT_GE(d, 0.0);
            EXPECT_LE(d, 1.0);
        }
}

TEST(Dbscan, EmptySingletonAndSeparatedPairs) {
    const ClusterSet empty = dbscan(std::span<const double>{}, 0, 0.35, 1);
    EXPECT_TRUE(empty.clusters.empty());
    EXPECT_TRUE(empty.noise.empty());

    const std::vector<double> one{0.0};
    const ClusterSet single = dbscan(one, 1, 0.35, 1);
    EXPECT_EQ(single.clusters, (Partition{{0}}));

    const std::vector<double> two{0.0, 0.5, 0.5, 0.0};
    EXPECT_EQ(dbscan(two, 2, 0.35, 1).clusters, (Partition{{0}, {1}}));
    const std::vector<double> close{0.0, 0.35, 0.35, 0.0};
    EXPECT_EQ(dbscan(close, 2, 0.35, 1).clusters, (Partition{{0, 1}}));  // eps is inclusive
}

TEST(Dbscan, ChainsLinkTransitively) {
    // 0-1 and 1-2 within eps, 0-2 not: single linkage joins all three; 3 stays apart.
    const std::vector<double> d{0, .3, .6, .9, .3, 0, .3, .9, .6, .3, 0, .9, .9, .9, .9, 0};
    EXPECT_EQ(canonical(dbscan(d, 4, 0.35, 1).clusters), (Partition{{0, 1, 2}, {3}}));
}

TEST(Dbscan, MinPtsMarksNoiseAndBorderPoints) {
    // 0 is core (neighbours 0, 1, 2), 1 and 2 are border points, 3 is isolated noise.
    const std::vector<double> d{0, .1, .1, .9, .1, 0, .5, .9, .1, .5, 0, .9, .9, .9, .9, 0};
    const ClusterSet r = dbscan(d, 4, 0.35, 3);
    EXPECT_EQ(r.clusters, (Partition{{0, 1, 2}}));
    EXPECT_EQ(r.noise, (std::vector<int>{3}));
}

TEST(Dbscan, MatchesEpsilonComponentsOnRandomSets) {
    const Config c;
    std::mt19937_64 rng(2024);
    std::uniform_int_distribution<int> size(1, 12);
    int nontrivial = 0;
    for (int trial = 0; trial < 100; ++trial) {
        const auto fields = prototype_fields(rng);
        const auto cands = random_candidates(rng, size(rng));
        const int n = static_cast<int>(cands.size());
        const auto d = distance_matrix(cands, fields, c);
        const ClusterSet r = dbscan(cands, fields, c);
        EXPECT_TRUE(r.noise.empty());
        const Partition expected = epsilon_components(d, n, c.dbscan_eps);
        EXPECT_EQ(canonical(r.clusters), expected) << "trial " << trial;
        nontrivial += expected.size() > 1 && static_cast<int>(expected.size()) < n;
    }
    EXPECT_GT(nontrivial, 20);  // the generator really exercises mixed partitions
}

TEST(Dbscan, CoversEveryCandidateExactlyOnce) {
    std::mt19937_64 rng(8);
    for (int min_pts : {1, 2, 3}) {
        Config c;
        c.min_pts = min_pts;
        const auto fields = prototype_fields(rng);
        const auto cands = random_candidates(rng, 12);
        const ClusterSet r = dbscan(cands, fields, c);
        std::vector<int> seen;
        for (const auto& cl : r.clusters) {
            EXPECT_FALSE(cl.empty());
            EXPECT_TRUE(std::is_sorted(cl.begin(), cl.end()));
            seen.insert(seen.end(), cl.begin(), cl.end());
        }
        seen.insert(seen.end(), r.noise.begin(), r.noise.end());
        std::sort(seen.begin(), seen.end());
        std::vector<int> all(12);
        std::iota(all.begin(), all.end(), 0);
        EXPECT_EQ(seen, all);
    }
}

TEST(Dbscan, CoreMembershipInvariantUnderShuffle) {
    std::mt19937_64 rng(77);
    for (int trial = 0; trial < 30; ++trial) {
        Config c;
        c.min_pts = 1 + trial % 3;
        const auto fields = prototype_fields(rng);
        auto cands = random_candidates(rng, 12);
        const int n = 12;
        const auto d = distance_matrix(cands, fields, c);
        std::vector<bool> core(n);
        for (int i = 0; i < n; ++i) {
            int k = 0;
            for (int j = 0; j < n; ++j) k += d[static_cast<std::size_t>(i) * n + j] <= c.dbscan_eps;
            core[i] = k >= c.min_pts;
        }
        const auto core_partition = [&](const ClusterSet& r, const std::vector<int>& id) {
            Partition p;
            for (const auto& cl : r.clusters) {
                std::vector<int> members;
                for (int i : cl)
                    if (core[id[i]]) members.push_back(id[i]);
                if (!members.empty()) p.push_back(members);
            }
            return canonical(p);
        };
        std::vector<int> identity(n);
        std::iota(identity.begin(), identity.end(), 0);
        const Partition before = core_partition(dbscan(cands, fields, c), identity);

        std::vector<int> perm = identity;
        std::shuffle(perm.begin(), perm.end(), rng);
        std::vector<Candidate> shuffled;
        for (int i : perm) shuffled.push_back(cands[i]);
        EXPECT_EQ(core_partition(dbscan(shuffled, fields, c), perm), before);
        if (c.min_pts == 1) {
            EXPECT_EQ(canonical(dbscan(shuffled, fields, c).clusters).size(), dbscan(cands, fields, c).clusters.size());
        }
    }
}

TEST(Dbscan, DeterministicOrder) {
    std::mt19937_64 rng(5);
    const auto fields = prototype_fields(rng);
    const auto cands = random_candidates(rng, 10);
    const ClusterSet a = dbscan(cands, fields, Config{});
    const ClusterSet b = dbscan(cands, fields, Config{});
    EXPECT_EQ(a.clusters, b.clusters);
    ASSERT_FALSE(a.clusters.empty());
    EXPECT_EQ(a.clusters.front().front(), 0);  // clusters are opened in index order
}

} // namespace
} // namespace dynclean
