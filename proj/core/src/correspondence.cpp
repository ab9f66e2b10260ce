#include "dynclean/correspondence.hpp"

#include "dynclean/kernels.hpp"

#include <algorithm>
#include <numeric>
#include <random>

namespace dynclean {

double appearance_similarity(const DescriptorField& a, Point xa, const DescriptorField& b, Point xb,
                             const Config& config) {
    return config.lambda4() * s_e(a.fc(xa), b.fc(xb), config.sigma_c) +
           config.lambda5() * s_e(a.fg(xa), b.fg(xb), config.sigma_g);
}

double match_quality(const DescriptorField& ref, Point x_ref, const DescriptorField& src, Point x_src,
                     const EpipolarKernel& epipolar, const Config& config) {
    return config.lambda1 * s_e(ref.fc(x_ref), src.fc(x_src), config.sigma_c) +
           config.lambda2 * s_e(ref.fg(x_ref), src.fg(x_src), config.sigma_g) +
           config.lambda3 * epipolar.similarity(x_ref, x_src);
}

double matching_cost(const DescriptorField& ref, Point x_ref, const DescriptorField& src, Point x_src,
                     const EpipolarKernel* epipolar, const Config& config) {
    double cost = 1.0 - appearance_similarity(ref, x_ref, src, x_src, config);
    if (epipolar) cost += config.lambda3 * (1.0 - epipolar->similarity(x_ref, x_src));
    return cost;
}

CorrespondenceField estimate_dense_field(const DescriptorField& ref, const DescriptorField& src, int source_index,
                                         const Config& config, const DenseFieldOptions& options) {
    const int w = ref.width;
    const int h = ref.height;
    const int sw = src.width;
    const int sh = src.height;
    std::mt19937_64 rng(options.seed * 0x9E3779B97F4A7C15ull + static_cast<std::uint64_t>(source_index) + 1);

    CorrespondenceField field{source_index, Plane<Point>(w, h)};
    Plane<double> cost(w, h);
    const auto clamp_src = [&](Point p) { return Point{std::clamp(p.x, 0, sw - 1), std::clamp(p.y, 0, sh - 1)}; };
    const auto eval = [&](Point x, Point t) { return matching_cost(ref, x, src, t, options.epipolar, config); };

    double total = 0.0;
    if (options.initial) {
        for (int y = 0; y < h; ++y)
            for (int x = 0; x < w; ++x) {
                const Point t = clamp_src(options.initial->target(x, y));
                field.target(x, y) = t;
                cost(x, y) = eval({x, y}, t);
                total += cost(x, y);
            }
    } else {
        std::uniform_int_distribution<int> rx(0, sw - 1);
        std::uniform_int_distribution<int> ry(0, sh - 1);
        for (int y = 0; y < h; ++y)
            for (int x = 0; x < w; ++x) {
                const Point random_t{rx(rng), ry(rng)};
                // Proportional identity: the natural guess for small camera motion.
                const Point identity_t = clamp_src({static_cast<int>(static_cast<long>(x) * sw / w),
                                                    static_cast<int>(static_cast<long>(y) * sh / h)});
                const double c_id = eval({x, y}, identity_t);
                const double c_rand = eval({x, y}, random_t);
                const bool take_identity = c_id <= c_rand;
                field.target(x, y) = take_identity ? identity_t : random_t;
                cost(x, y) = take_identity ? c_id : c_rand;
                total += cost(x, y);
            }
    }
    if (options.on_iteration) options.on_iteration(0, total);

    const int max_radius = std::max(sw, sh);
    for (int iter = 0; iter < options.iterations; ++iter) {
        const bool forward = iter % 2 == 0;
        const int step = forward ? 1 : -1;
        const int y_begin = forward ? 0 : h - 1;
        const int y_end = forward ? h : -1;
        const int x_begin = forward ? 0 : w - 1;
        const int x_end = forward ? w : -1;

        for (int y = y_begin; y != y_end; y += step) {
            for (int x = x_begin; x != x_end; x += step) {
                const Point here{x, y};
                Point best = field.target(x, y);
                double best_cost = cost(x, y);
                const auto consider = [&](Point t) {
                    t = clamp_src(t);
                    if (t == best) return;
                    const double c = eval(here, t);
                    if (c < best_cost) {
                        best_cost = c;
                        best = t;
                    }
                };

                // Propagation: shift the already-visited neighbours' matches by one pixel.
                const int nx = x - step;
                const int ny = y - step;
                if (nx >= 0 && nx < w) consider(field.target(nx, y) + Point{step, 0});
                if (ny >= 0 && ny < h) consider(field.target(x, ny) + Point{0, step});

                for (int radius = max_radius; radius >= 1; radius /= 2) {
                    std::uniform_int_distribution<int> offset(-radius, radius);
                    const int ox = offset(rng);
                    const int oy = offset(rng);
                    consider(best + Point{ox, oy});
                }

                field.target(x, y) = best;
                cost(x, y) = best_cost;
            }
        }

        if (options.on_iteration) {
            total = 0.0;
            for (double c : cost.pixels()) total += c;
            options.on_iteration(iter + 1, total);
        }
    }
    return field;
}

SimilarityMap similarity_map(const DescriptorField& ref, const DescriptorField& src, const CorrespondenceField& field,
                             const EpipolarKernel& epipolar, const Config& config) {
    SimilarityMap map{field.source_index, Plane<float>(ref.width, ref.height)};
    for (int y = 0; y < ref.height; ++y)
        for (int x = 0; x < ref.width; ++x)
            map.value(x, y) =
                static_cast<float>(match_quality(ref, {x, y}, src, field.target(x, y), epipolar, config));
    return map;
}

std::vector<Match> harvest_matches(const DescriptorField& ref, const DescriptorField& src,
                                   const CorrespondenceField& field, int count, int stride, const Config& config) {
    struct Scored {
        double score;
        Point x;
    };
    std::vector<Scored> grid;
    for (int y = stride / 2; y < ref.height; y += stride)
        for (int x = stride / 2; x < ref.width; x += stride)
            grid.push_back({appearance_similarity(ref, {x, y}, src, field.target(x, y), config), {x, y}});

    // Stable: equal scores keep raster order.
    std::stable_sort(grid.begin(), grid.end(), [](const Scored& a, const Scored& b) { return a.score > b.score; });
    if (static_cast<int>(grid.size()) > count) grid.resize(static_cast<std::size_t>(count));

    std::vector<Match> matches;
    matches.reserve(grid.size());
    for (const auto& g : grid) {
        const Point t = field.target(g.x);
        matches.push_back({Eigen::Vector2d(g.x.x, g.x.y), Eigen::Vector2d(t.x, t.y)});
    }
    return matches;
}

} // namespace dynclean
