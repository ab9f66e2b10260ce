#pragma once

#include "dynclean/image.hpp"

#include <Eigen/Core>

#include <cstdint>
#include <limits>
#include <span>
#include <vector>

namespace dynclean {

/// A putative correspondence: x1 in the reference, x2 in the source (pixel coordinates).
struct Match {
    Eigen::Vector2d x1;
    Eigen::Vector2d x2;
};

struct FundamentalMatrix {
    Eigen::Matrix3d F = Eigen::Matrix3d::Zero();  ///< rank 2, unit Frobenius norm, x2^T F x1 = 0
    int inlier_count = 0;
    double inlier_ratio = 0.0;
    double residual_median = 0.0;  ///< median sqrt(Sampson) over inliers, pixels
    /// Set when inlier_ratio < 0.2; the estimate is kept but should not be trusted.
    bool low_support = false;
};

struct RansacOptions {
    double threshold = 1.0;  ///< squared Sampson distance inlier bound, px^2
    double confidence = 0.999;
    int max_iterations = 5000;
    std::uint64_t seed = 0;
};

inline constexpr double kInfiniteSampson = std::numeric_limits<double>::infinity();

/// Squared Sampson distance of (x1, x2) with respect to F. Returns kInfiniteSampson when the
/// first-order denominator vanishes.
double sampson_sq(const Eigen::Vector2d& x1, const Eigen::Vector2d& x2, const Eigen::Matrix3d& F);

/// exp(-d / (2 sigma_e^2)) for a squared Sampson distance d; infinity maps to 0.
double s_f_from_distance(double sampson, double sigma_e);

double s_f(const Eigen::Vector2d& x1, const Eigen::Vector2d& x2, const Eigen::Matrix3d& F, double sigma_e);

/// Rank-2 truncation, unit Frobenius norm and a sign chosen so the largest-magnitude entry is
/// positive.
Eigen::Matrix3d canonicalize_fundamental(const Eigen::Matrix3d& F);

/// Hartley-normalised linear estimate from >= 8 matches. Throws GeometryError below 8.
Eigen::Matrix3d eight_point(std::span<const Match> matches);

/// RANSAC over eight-point hypotheses followed by a refit on all inliers.
FundamentalMatrix estimate_fundamental(std::span<const Match> matches, const RansacOptions& options = {});

/// S_f evaluated in a possibly rescaled coordinate frame: with coordinate_scale = s, Sampson
/// distances are those of the coordinates divided by s (d_pixels / s^2).
class EpipolarKernel {
public:
    EpipolarKernel() = default;
    EpipolarKernel(const Eigen::Matrix3d& F, double sigma_e, double coordinate_scale);

    double sampson_pixels(Point ref, Point src) const;
    double similarity(Point ref, Point src) const;
    const Eigen::Matrix3d& matrix() const { return F_; }

private:
    Eigen::Matrix3d F_ = Eigen::Matrix3d::Zero();
    double inv_two_sigma_sq_scaled_ = 0.0;
};

} // namespace dynclean
