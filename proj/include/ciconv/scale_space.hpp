#pragma once

#include <array>
#include <cmath>
#include <optional>
#include <string>
#include <vector>

#include "color_model.hpp"
#include "image.hpp"
#include "parallel.hpp"

namespace ciconv {

inline constexpr double kSigmaMin = 0.25;
inline constexpr double kSigmaMax = 16.0;

enum class Axis { x, y };
enum class Smoothing { off, on };

/// Sampled Gaussian (order 0) or Gaussian first derivative (order 1).
///
/// Taps are indexed by offset t in [-radius, radius] and applied as
/// out(x) = sum_t k(t) f(x - t). Order-0 taps sum to 1; order-1 taps sum to 0
/// and have first moment sum_t t k(t) = -1, so a unit ramp yields +1.
struct Kernel {
    double sigma = 1.0;
    int order = 0;
    int radius = 0;
    std::vector<double> taps;

    double at(int t) const { return taps[static_cast<std::size_t>(t + radius)]; }
    int width() const noexcept { return 2 * radius + 1; }
};

inline int kernel_radius(double sigma) {
    return std::max(1, static_cast<int>(std::ceil(3.0 * sigma)));
}

inline void check_sigma(double sigma) {
    if (!(sigma >= kSigmaMin && sigma <= kSigmaMax))
        throw InvalidParameter("sigma " + std::to_string(sigma) + " outside [" +
                               std::to_string(kSigmaMin) + ", " + std::to_string(kSigmaMax) + "]");
}

namespace detail {

inline void check_kernel_args(double sigma, int order, int radius) {
    check_sigma(sigma);
    if (order != 0 && order != 1) throw InvalidParameter("kernel order must be 0 or 1");
    if (radius < 1) throw InvalidParameter("kernel radius must be at least 1");
}

// Unnormalized profile: exp(-t^2/2s^2) for order 0, -t exp(-t^2/2s^2) for order 1.
// Constant factors drop out under normalization.
inline double profile(int order, double t, double sigma) {
    const double g = std::exp(-t * t / (2.0 * sigma * sigma));
    return order == 0 ? g : -t * g;
}

// d(profile)/d(sigma) = profile * t^2 / sigma^3 for both orders.
inline double profile_dsigma(int order, double t, double sigma) {
    return profile(order, t, sigma) * t * t / (sigma * sigma * sigma);
}

// Normalizer N such that taps = profile / N satisfy the kernel invariants.
template <typename ProfileFn>
double normalizer(int order, int radius, ProfileFn&& p) {
    double n = 0.0;
    for (int t = -radius; t <= radius; ++t) n += order == 0 ? p(t) : -t * p(t);
    return n;
}

// No range check on sigma; used for auxiliary blurs outside the layer's scale range.
inline Kernel sample_kernel(double sigma, int order, int r) {
    Kernel k{sigma, order, r, std::vector<double>(static_cast<std::size_t>(2 * r + 1))};
    const double n = normalizer(order, r, [&](int t) { return profile(order, t, sigma); });
    for (int t = -r; t <= r; ++t) k.taps[t + r] = profile(order, t, sigma) / n;
    return k;
}

}  // namespace detail

/// Samples the kernel at integer offsets. `radius` defaults to max(1, ceil(3 sigma)).
inline Kernel make_kernel(double sigma, int order, std::optional<int> radius = std::nullopt) {
    const int r = radius.value_or(kernel_radius(sigma));
    detail::check_kernel_args(sigma, order, r);
    return detail::sample_kernel(sigma, order, r);
}

/// Exact derivative of make_kernel(sigma, order, radius) with respect to sigma at
/// fixed radius, including the derivative of the normalizer (quotient rule).
inline Kernel make_kernel_dsigma(double sigma, int order, std::optional<int> radius = std::nullopt) {
    const int r = radius.value_or(kernel_radius(sigma));
    detail::check_kernel_args(sigma, order, r);
    const double n = detail::normalizer(order, r, [&](int t) {
        return detail::profile(order, t, sigma);
    });
    const double dn = detail::normalizer(order, r, [&](int t) {
        return detail::profile_dsigma(order, t, sigma);
    });
    Kernel k{sigma, order, r, std::vector<double>(static_cast<std::size_t>(2 * r + 1))};
    for (int t = -r; t <= r; ++t) {
        const double p = detail::profile(order, t, sigma);
        const double dp = detail::profile_dsigma(order, t, sigma);
        k.taps[t + r] = (dp * n - p * dn) / (n * n);
    }
    return k;
}

namespace detail {

// Reflect-101 index for |offset| < n; requires n >= 2.
inline int reflect101(int i, int n) {
    if (i < 0) return -i;
    if (i >= n) return 2 * (n - 1) - i;
    return i;
}

}  // namespace detail

/// Applies `kernel` along `axis` with reflect-101 borders. Output has the input shape.
inline Plane convolve_1d(const Plane& plane, const Kernel& kernel, Axis axis) {
    const int w = plane.width(), h = plane.height();
    const int n = axis == Axis::x ? w : h;
    if (kernel.width() > 2 * n)
        throw InvalidParameter("kernel of width " + std::to_string(kernel.width()) +
                               " exceeds twice the image dimension " + std::to_string(n));
    const int r = kernel.radius;
    Plane out(w, h);
    if (axis == Axis::x) {
        parallel_for(static_cast<std::size_t>(h), [&](std::size_t yi) {
            const int y = static_cast<int>(yi);
            std::vector<double> padded(static_cast<std::size_t>(w + 2 * r));
            const auto src = plane.row(y);
            for (int i = -r; i < w + r; ++i) padded[i + r] = src[detail::reflect101(i, w)];
            auto dst = out.row(y);
            for (int x = 0; x < w; ++x) {
                double acc = 0.0;
                for (int t = -r; t <= r; ++t) acc += kernel.taps[t + r] * padded[x - t + r];
                dst[x] = acc;
            }
        });
    } else {
        parallel_for(static_cast<std::size_t>(h), [&](std::size_t yi) {
            const int y = static_cast<int>(yi);
            auto dst = out.row(y);
            for (int t = -r; t <= r; ++t) {
                const double k = kernel.taps[t + r];
                const auto src = plane.row(detail::reflect101(y - t, h));
                for (int x = 0; x < w; ++x) dst[x] += k * src[x];
            }
        });
    }
    return out;
}

/// Spectral planes with their x and y derivatives at scale sigma.
/// dx[k] / dy[k] hold the derivatives of planes[k] (k = E, E_lambda, E_lambdalambda).
struct DerivativeStack {
    SpectralPlanes planes;
    std::array<Plane, 3> dx;
    std::array<Plane, 3> dy;
    double sigma = 1.0;
};

namespace detail {

// Derivative along `along`, optionally smoothed along the other axis.
inline Plane directional_derivative(const Plane& p, const Kernel& deriv, const Kernel& smooth,
                                    Axis along, Smoothing smoothing) {
    Plane d = convolve_1d(p, deriv, along);
    if (smoothing == Smoothing::off) return d;
    return convolve_1d(d, smooth, along == Axis::x ? Axis::y : Axis::x);
}

inline Plane add(Plane a, const Plane& b) {
    for (std::size_t i = 0; i < a.size(); ++i) a[i] += b[i];
    return a;
}

}  // namespace detail

/// Six Gaussian-derivative maps of the three spectral planes.
inline DerivativeStack spatial_derivatives(const SpectralPlanes& planes, double sigma,
                                           Smoothing smoothing = Smoothing::on,
                                           std::optional<int> radius = std::nullopt) {
    for (int k = 0; k < 3; ++k) require_finite(planes[k].values(), "spectral planes");
    const Kernel k0 = make_kernel(sigma, 0, radius);
    const Kernel k1 = make_kernel(sigma, 1, radius);
    DerivativeStack stack{planes, {}, {}, sigma};
    for (int k = 0; k < 3; ++k) {
        stack.dx[k] = detail::directional_derivative(planes[k], k1, k0, Axis::x, smoothing);
        stack.dy[k] = detail::directional_derivative(planes[k], k1, k0, Axis::y, smoothing);
    }
    return stack;
}

/// d/dsigma of every derivative map of spatial_derivatives at fixed radius.
/// Product rule over the two separable passes.
inline std::pair<std::array<Plane, 3>, std::array<Plane, 3>> spatial_derivatives_dsigma(
    const SpectralPlanes& planes, double sigma, Smoothing smoothing = Smoothing::on,
    std::optional<int> radius = std::nullopt) {
    const Kernel k0 = make_kernel(sigma, 0, radius);
    const Kernel k1 = make_kernel(sigma, 1, radius);
    const Kernel dk0 = make_kernel_dsigma(sigma, 0, radius);
    const Kernel dk1 = make_kernel_dsigma(sigma, 1, radius);
    std::array<Plane, 3> ddx, ddy;
    for (int k = 0; k < 3; ++k) {
        for (Axis along : {Axis::x, Axis::y}) {
            Plane d = detail::directional_derivative(planes[k], dk1, k0, along, smoothing);
            if (smoothing == Smoothing::on) {
                const Axis across = along == Axis::x ? Axis::y : Axis::x;
                d = detail::add(std::move(d),
                                convolve_1d(convolve_1d(planes[k], k1, along), dk0, across));
            }
            (along == Axis::x ? ddx : ddy)[k] = std::move(d);
        }
    }
    return {std::move(ddx), std::move(ddy)};
}

}  // namespace ciconv
