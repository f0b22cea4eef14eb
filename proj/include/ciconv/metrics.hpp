#pragma once

#include <cmath>
#include <vector>

#include "image.hpp"
#include "parallel.hpp"

namespace ciconv {

/// ||a - b||_2 / max(||a||_2, eps). Zero for two all-zero maps.
inline double relative_l2(std::span<const double> a, std::span<const double> b,
                          double eps = 1e-300) {
    if (a.size() != b.size()) throw InvalidInput("relative_l2: shape mismatch");
    require_finite(a, "relative_l2 operand");
    require_finite(b, "relative_l2 operand");
    std::vector<double> diff(a.size()), ref(a.size());
    for (std::size_t i = 0; i < a.size(); ++i) {
        diff[i] = (a[i] - b[i]) * (a[i] - b[i]);
        ref[i] = a[i] * a[i];
    }
    return std::sqrt(pairwise_sum(diff)) / std::max(std::sqrt(pairwise_sum(ref)), eps);
}

inline double relative_l2(const Plane& a, const Plane& b, double eps = 1e-300) {
    if (!a.same_shape(b)) throw InvalidInput("relative_l2: shape mismatch");
    return relative_l2(a.values(), b.values(), eps);
}

inline double max_abs_diff(const Plane& a, const Plane& b) {
    if (!a.same_shape(b)) throw InvalidInput("max_abs_diff: shape mismatch");
    double m = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
    return m;
}

inline double mean(std::span<const double> values) {
    return pairwise_sum(values) / static_cast<double>(values.size());
}

}  // namespace ciconv
