#include "dynclean/epipolar.hpp"

#include "dynclean/error.hpp"

#include <Eigen/SVD>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

namespace dynclean {
namespace {

/// Similarity transform moving the centroid to the origin with mean distance sqrt(2).
Eigen::Matrix3d hartley_transform(std::span<const Eigen::Vector2d> pts) {
    Eigen::Vector2d centroid = Eigen::Vector2d::Zero();
    for (const auto& p : pts) centroid += p;
    centroid /= static_cast<double>(pts.size());
    double mean_dist = 0.0;
    for (const auto& p : pts) mean_dist += (p - centroid).norm();
    mean_dist /= static_cast<double>(pts.size());
    const double s = mean_dist > 0.0 ? std::sqrt(2.0) / mean_dist : 1.0;
    Eigen::Matrix3d T;
    T << s, 0, -s * centroid.x(), 0, s, -s * centroid.y(), 0, 0, 1;
    return T;
}

Eigen::Matrix3d enforce_rank2(const Eigen::Matrix3d& F) {
    Eigen::JacobiSVD<Eigen::Matrix3d> svd(F, Eigen::ComputeFullU | Eigen::ComputeFullV);
    Eigen::Vector3d sv = svd.singularValues();
    sv(2) = 0.0;
    return svd.matrixU() * sv.asDiagonal() * svd.matrixV().transpose();
}

double median_of(std::vector<double> v) {
    if (v.empty()) return 0.0;
    const auto mid = v.begin() + static_cast<std::ptrdiff_t>(v.size() / 2);
    std::nth_element(v.begin(), mid, v.end());
    if (v.size() % 2 == 1) return *mid;
    const double hi = *mid;
    const double lo = *std::max_element(v.begin(), mid);
    return 0.5 * (lo + hi);
}

std::vector<int> inliers_of(std::span<const Match> matches, const Eigen::Matrix3d& F, double threshold) {
    std::vector<int> idx;
    for (std::size_t i = 0; i < matches.size(); ++i)
        if (sampson_sq(matches[i].x1, matches[i].x2, F) < threshold) idx.push_back(static_cast<int>(i));
    return idx;
}

} // namespace

double sampson_sq(const Eigen::Vector2d& x1, const Eigen::Vector2d& x2, const Eigen::Matrix3d& F) {
    const Eigen::Vector3d h1(x1.x(), x1.y(), 1.0);
    const Eigen::Vector3d h2(x2.x(), x2.y(), 1.0);
    const Eigen::Vector3d Fx1 = F * h1;
    const Eigen::Vector3d Ftx2 = F.transpose() * h2;
    const double num = h2.dot(Fx1);
    const double den = Fx1(0) * Fx1(0) + Fx1(1) * Fx1(1) + Ftx2(0) * Ftx2(0) + Ftx2(1) * Ftx2(1);
    if (den == 0.0) return kInfiniteSampson;
    return num * num / den;
}

double s_f_from_distance(double sampson, double sigma_e) {
    if (std::isinf(sampson)) return 0.0;
    return std::exp(-sampson / (2.0 * sigma_e * sigma_e));
}

double s_f(const Eigen::Vector2d& x1, const Eigen::Vector2d& x2, const Eigen::Matrix3d& F, double sigma_e) {
    return s_f_from_distance(sampson_sq(x1, x2, F), sigma_e);
}

Eigen::Matrix3d canonicalize_fundamental(const Eigen::Matrix3d& F) {
    Eigen::Matrix3d out = enforce_rank2(F);
    const double norm = out.norm();
    if (norm > 0.0) out /= norm;
    Eigen::Index r = 0;
    Eigen::Index c = 0;
    out.cwiseAbs().maxCoeff(&r, &c);
    if (out(r, c) < 0.0) out = -out;
    return out;
}

Eigen::Matrix3d eight_point(std::span<const Match> matches) {
    if (matches.size() < 8) throw GeometryError("degenerate geometry: need at least 8 matches, got " +
                                                std::to_string(matches.size()));
    std::vector<Eigen::Vector2d> p1;
    std::vector<Eigen::Vector2d> p2;
    p1.reserve(matches.size());
    p2.reserve(matches.size());
    for (const auto& m : matches) {
        p1.push_back(m.x1);
        p2.push_back(m.x2);
    }
    const Eigen::Matrix3d T1 = hartley_transform(p1);
    const Eigen::Matrix3d T2 = hartley_transform(p2);

    Eigen::MatrixXd A(static_cast<Eigen::Index>(matches.size()), 9);
    for (std::size_t i = 0; i < matches.size(); ++i) {
        const Eigen::Vector3d a = T1 * Eigen::Vector3d(p1[i].x(), p1[i].y(), 1.0);
        const Eigen::Vector3d b = T2 * Eigen::Vector3d(p2[i].x(), p2[i].y(), 1.0);
        A.row(static_cast<Eigen::Index>(i)) << b(0) * a(0), b(0) * a(1), b(0), b(1) * a(0), b(1) * a(1), b(1), a(0),
            a(1), 1.0;
    }
    // 8 x 9 systems need the full V to reach the null vector.
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(A, Eigen::ComputeFullV);
    const Eigen::VectorXd f = svd.matrixV().col(8);
    Eigen::Matrix3d Fn;
    Fn << f(0), f(1), f(2), f(3), f(4), f(5), f(6), f(7), f(8);
    Fn = enforce_rank2(Fn);
    return canonicalize_fundamental(T2.transpose() * Fn * T1);
}

FundamentalMatrix estimate_fundamental(std::span<const Match> matches, const RansacOptions& options) {
    if (matches.size() < 8) throw GeometryError("degenerate geometry: need at least 8 matches, got " +
                                                std::to_string(matches.size()));
    const int n = static_cast<int>(matches.size());
    std::mt19937_64 rng(options.seed);

    Eigen::Matrix3d best_F = Eigen::Matrix3d::Zero();
    std::vector<int> best_inliers;
    int required = options.max_iterations;
    std::array<int, 8> sample{};
    std::vector<Match> subset(8);

    for (int it = 0; it < std::min(required, options.max_iterations); ++it) {
        for (int k = 0; k < 8; ++k) {
            int candidate = 0;
            do {
                candidate = static_cast<int>(rng() % static_cast<std::uint64_t>(n));
            } while (std::find(sample.begin(), sample.begin() + k, candidate) != sample.begin() + k);
            sample[k] = candidate;
            subset[k] = matches[candidate];
        }
        const Eigen::Matrix3d F = eight_point(subset);
        if (!F.allFinite()) continue;
        auto inliers = inliers_of(matches, F, options.threshold);
        if (inliers.size() > best_inliers.size()) {
            best_inliers = std::move(inliers);
            best_F = F;
            const double w = static_cast<double>(best_inliers.size()) / n;
            const double miss = 1.0 - std::pow(w, 8.0);
            if (miss <= 0.0) {
                required = 0;
            } else {
                const double needed = std::log(1.0 - options.confidence) / std::log(miss);
                required = static_cast<int>(std::min<double>(std::ceil(needed), options.max_iterations));
            }
        }
    }

    FundamentalMatrix result;
    if (best_inliers.size() >= 8) {
        // Refit on the consensus set, then once more on the refit's own inliers.
        for (int pass = 0; pass < 2; ++pass) {
            std::vector<Match> support;
            support.reserve(best_inliers.size());
            for (int i : best_inliers) support.push_back(matches[i]);
            const Eigen::Matrix3d refit = eight_point(support);
            auto refit_inliers = inliers_of(matches, refit, options.threshold);
            if (refit_inliers.size() < best_inliers.size()) break;
            best_F = refit;
            best_inliers = std::move(refit_inliers);
            if (best_inliers.size() < 8) break;
        }
    }

    result.F = best_F;
    result.inlier_count = static_cast<int>(best_inliers.size());
    result.inlier_ratio = static_cast<double>(best_inliers.size()) / n;
    std::vector<double> residuals;
    residuals.reserve(best_inliers.size());
    for (int i : best_inliers) residuals.push_back(std::sqrt(sampson_sq(matches[i].x1, matches[i].x2, best_F)));
    result.residual_median = median_of(std::move(residuals));
    result.low_support = result.inlier_ratio < 0.2;
    return result;
}

EpipolarKernel::EpipolarKernel(const Eigen::Matrix3d& F, double sigma_e, double coordinate_scale)
    : F_(F), inv_two_sigma_sq_scaled_(1.0 / (2.0 * sigma_e * sigma_e * coordinate_scale * coordinate_scale)) {}

double EpipolarKernel::sampson_pixels(Point ref, Point src) const {
    return sampson_sq(Eigen::Vector2d(ref.x, ref.y), Eigen::Vector2d(src.x, src.y), F_);
}

double EpipolarKernel::similarity(Point ref, Point src) const {
    const double d = sampson_pixels(ref, src);
    if (std::isinf(d)) return 0.0;
    return std::exp(-d * inv_two_sigma_sq_scaled_);
}

} // namespace dynclean
