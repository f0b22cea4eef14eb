#pragma once

#include <array>
#include <cmath>
#include <optional>
#include <string>
#include <string_view>

#include "image.hpp"
#include "parallel.hpp"
#include "scale_space.hpp"

namespace ciconv {

/// The five color invariant edge detectors, ordered by increasing invariance.
enum class InvariantKind { E, W, C, N, H };

inline constexpr std::array<InvariantKind, 5> kAllKinds = {
    InvariantKind::E, InvariantKind::W, InvariantKind::C, InvariantKind::N, InvariantKind::H};

/// Which illumination changes an invariant is insensitive to: scene geometry,
/// Fresnel reflections, illumination intensity, illumination color.
struct InvarianceFlags {
    bool sg = false;
    bool fr = false;
    bool ii = false;
    bool ic = false;

    bool operator==(const InvarianceFlags&) const = default;
};

constexpr InvarianceFlags invariance_flags(InvariantKind kind) {
    switch (kind) {
        case InvariantKind::E: return {false, false, false, false};
        case InvariantKind::W: return {false, false, true, false};
        case InvariantKind::C: return {true, false, true, false};
        case InvariantKind::N: return {true, false, true, true};
        case InvariantKind::H: return {true, true, true, false};
    }
    return {};
}

constexpr std::string_view to_string(InvariantKind kind) {
    constexpr std::array<std::string_view, 5> names = {"E", "W", "C", "N", "H"};
    return names[static_cast<int>(kind)];
}

inline std::optional<InvariantKind> parse_kind(std::string_view s) {
    for (auto k : kAllKinds)
        if (to_string(k) == s) return k;
    return std::nullopt;
}

inline constexpr double kDefaultEpsDiv = 1e-5;

/// Squared invariant magnitude (no square root) at one scale.
struct InvariantMap {
    Plane values;
    InvariantKind kind = InvariantKind::E;
    double sigma = 1.0;
};

/// Sign-preserving denominator guard: sign(d) * max(|d|, eps), with sign(0) = +1.
inline double guard_denominator(double d, double eps) {
    const double mag = std::max(std::abs(d), eps);
    return d < 0.0 ? -mag : mag;
}

/// Per-pixel linear functionals of the spatial derivatives.
///
/// Every invariant component (W_x, C_lambda_x, N_lambdalambda_x, H_x, ...) is
/// a linear combination of the derivative triple (E_x, E_lambda_x,
/// E_lambdalambda_x) with coefficients that depend only on the plane values at
/// that pixel. The y components use the same coefficients on the y triple.
struct InvariantComponents {
    int count = 0;
    std::array<std::array<double, 3>, 3> coef{};

    double squared_sum(const std::array<double, 3>& d) const {
        double s = 0.0;
        for (int c = 0; c < count; ++c) {
            const double v = coef[c][0] * d[0] + coef[c][1] * d[1] + coef[c][2] * d[2];
            s += v * v;
        }
        return s;
    }
};

inline InvariantComponents invariant_components(InvariantKind kind, double e, double el,
                                                double ell, double eps_div) {
    InvariantComponents out;
    switch (kind) {
        case InvariantKind::E:
            out.count = 3;
            out.coef = {{{1, 0, 0}, {0, 1, 0}, {0, 0, 1}}};
            break;
        case InvariantKind::W: {
            const double inv = 1.0 / guard_denominator(e, eps_div);
            out.count = 3;
            out.coef = {{{inv, 0, 0}, {0, inv, 0}, {0, 0, inv}}};
            break;
        }
        case InvariantKind::C: {
            const double g = guard_denominator(e, eps_div);
            const double inv2 = 1.0 / (g * g);
            out.count = 2;
            // (E_lx E - E_l E_x) / E^2 and (E_llx E - E_ll E_x) / E^2
            out.coef[0] = {-el * inv2, e * inv2, 0.0};
            out.coef[1] = {-ell * inv2, 0.0, e * inv2};
            break;
        }
        case InvariantKind::N: {
            const double g = guard_denominator(e, eps_div);
            const double inv2 = 1.0 / (g * g);
            const double inv3 = inv2 / g;
            out.count = 2;
            out.coef[0] = {-el * inv2, e * inv2, 0.0};
            // (E_llx E^2 - E_ll E_x E - 2 E_lx E_l E + 2 E_l^2 E_x) / E^3
            out.coef[1] = {(2.0 * el * el - ell * e) * inv3, -2.0 * el * e * inv3, e * e * inv3};
            break;
        }
        case InvariantKind::H: {
            const double inv = 1.0 / std::max(el * el + ell * ell, eps_div);
            out.count = 1;
            // (E_ll E_lx - E_l E_llx) / (E_l^2 + E_ll^2)
            out.coef[0] = {0.0, ell * inv, -el * inv};
            break;
        }
    }
    return out;
}

inline void require_finite(const DerivativeStack& stack) {
    for (int k = 0; k < 3; ++k) {
        require_finite(stack.planes[k].values(), "derivative stack planes");
        require_finite(stack.dx[k].values(), "derivative stack x-derivatives");
        require_finite(stack.dy[k].values(), "derivative stack y-derivatives");
    }
}

/// Sum of squared x and y components of `kind` at every pixel.
inline InvariantMap compute_invariant(const DerivativeStack& stack, InvariantKind kind,
                                      double eps_div = kDefaultEpsDiv) {
    if (!(eps_div > 0.0)) throw InvalidParameter("eps_div must be positive");
    require_finite(stack);
    const auto& p = stack.planes;
    const int w = p.width(), h = p.height();
    InvariantMap out{Plane(w, h), kind, stack.sigma};
    parallel_for(static_cast<std::size_t>(h), [&](std::size_t yi) {
        const int y = static_cast<int>(yi);
        for (int x = 0; x < w; ++x) {
            const auto comp = invariant_components(kind, p.e(x, y), p.e_lambda(x, y),
                                                   p.e_lambdalambda(x, y), eps_div);
            const double sx = comp.squared_sum({stack.dx[0](x, y), stack.dx[1](x, y), stack.dx[2](x, y)});
            const double sy = comp.squared_sum({stack.dy[0](x, y), stack.dy[1](x, y), stack.dy[2](x, y)});
            out.values(x, y) = sx + sy;
        }
    });
    return out;
}

/// ITU-R BT.601 luma.
inline Plane luminance(const RgbImage& img) {
    require_finite(img.values(), "rgb image");
    Plane out(img.width(), img.height());
    for (std::size_t i = 0; i < out.size(); ++i) {
        const auto px = img.values().subspan(3 * i, 3);
        out[i] = 0.299 * px[0] + 0.587 * px[1] + 0.114 * px[2];
    }
    return out;
}

/// Chromaticity coordinates (R,G,B) / (R+G+B+eps).
inline RgbImage normalized_rgb(const RgbImage& img, double eps_div = kDefaultEpsDiv) {
    require_finite(img.values(), "rgb image");
    RgbImage out(img.width(), img.height());
    const auto src = img.values();
    auto dst = out.values();
    for (std::size_t i = 0; i < img.pixel_count(); ++i) {
        const double sum = src[3 * i] + src[3 * i + 1] + src[3 * i + 2] + eps_div;
        for (int c = 0; c < 3; ++c) dst[3 * i + c] = src[3 * i + c] / sum;
    }
    return out;
}

}  // namespace ciconv
