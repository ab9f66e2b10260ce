#pragma once

#include <cmath>
#include <span>
#include <stdexcept>

namespace dynclean {

/// Squared Euclidean distance; both spans must have the same length.
inline double squared_distance(std::span<const float> a, std::span<const float> b) {
    if (a.size() != b.size()) throw std::invalid_argument("descriptor dimension mismatch");
    float sum = 0.f;
    for (std::size_t i = 0; i < a.size(); ++i) {
        const float d = a[i] - b[i];
        sum += d * d;
    }
    return sum;
}

/// exp(-d2 / (2 sigma^2)).
inline double gaussian_kernel(double squared_dist, double sigma) {
    return std::exp(-squared_dist / (2.0 * sigma * sigma));
}

/// Gaussian similarity of two descriptors, in (0, 1].
inline double s_e(std::span<const float> a, std::span<const float> b, double sigma) {
    return gaussian_kernel(squared_distance(a, b), sigma);
}

} // namespace dynclean
