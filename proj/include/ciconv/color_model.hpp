#pragma once

#include <array>

#include "image.hpp"
#include "parallel.hpp"

namespace ciconv {

using Matrix3 = std::array<std::array<double, 3>, 3>;

/// Gaussian color model: maps linear (R,G,B) to the spectral intensity E and
/// its first and second derivatives with respect to wavelength.
inline constexpr Matrix3 kGaussianColorModel = {{
    {0.06, 0.63, 0.27},
    {0.3, 0.04, -0.35},
    {0.34, -0.6, 0.17},
}};

/// Analytic 3x3 inverse via the adjugate.
constexpr Matrix3 invert(const Matrix3& m) {
    const double c00 = m[1][1] * m[2][2] - m[1][2] * m[2][1];
    const double c01 = m[1][2] * m[2][0] - m[1][0] * m[2][2];
    const double c02 = m[1][0] * m[2][1] - m[1][1] * m[2][0];
    const double det = m[0][0] * c00 + m[0][1] * c01 + m[0][2] * c02;
    const double inv = 1.0 / det;
    return {{
        {c00 * inv, (m[0][2] * m[2][1] - m[0][1] * m[2][2]) * inv,
         (m[0][1] * m[1][2] - m[0][2] * m[1][1]) * inv},
        {c01 * inv, (m[0][0] * m[2][2] - m[0][2] * m[2][0]) * inv,
         (m[0][2] * m[1][0] - m[0][0] * m[1][2]) * inv},
        {c02 * inv, (m[0][1] * m[2][0] - m[0][0] * m[2][1]) * inv,
         (m[0][0] * m[1][1] - m[0][1] * m[1][0]) * inv},
    }};
}

inline constexpr Matrix3 kInverseGaussianColorModel = invert(kGaussianColorModel);

/// E, E_lambda and E_lambdalambda planes of one image.
struct SpectralPlanes {
    Plane e;
    Plane e_lambda;
    Plane e_lambdalambda;

    int width() const noexcept { return e.width(); }
    int height() const noexcept { return e.height(); }

    Plane& operator[](int k) { return k == 0 ? e : (k == 1 ? e_lambda : e_lambdalambda); }
    const Plane& operator[](int k) const {
        return k == 0 ? e : (k == 1 ? e_lambda : e_lambdalambda);
    }

    bool operator==(const SpectralPlanes&) const = default;
};

inline SpectralPlanes rgb_to_planes(const RgbImage& img) {
    require_finite(img.values(), "rgb image");
    const int w = img.width(), h = img.height();
    SpectralPlanes out{Plane(w, h), Plane(w, h), Plane(w, h)};
    const auto& m = kGaussianColorModel;
    parallel_for(static_cast<std::size_t>(h), [&](std::size_t y) {
        for (int x = 0; x < w; ++x) {
            const double r = img.at(x, int(y), 0), g = img.at(x, int(y), 1),
                         b = img.at(x, int(y), 2);
            for (int k = 0; k < 3; ++k)
                out[k](x, int(y)) = m[k][0] * r + m[k][1] * g + m[k][2] * b;
        }
    });
    return out;
}

/// Inverse of rgb_to_planes. No clamping: the result may leave [0,1].
inline RgbImage planes_to_rgb(const SpectralPlanes& planes) {
    for (int k = 0; k < 3; ++k) require_finite(planes[k].values(), "spectral planes");
    const int w = planes.width(), h = planes.height();
    if (!planes.e.same_shape(planes.e_lambda) || !planes.e.same_shape(planes.e_lambdalambda))
        throw InvalidInput("spectral planes differ in shape");
    RgbImage out(w, h);
    const auto& m = kInverseGaussianColorModel;
    parallel_for(static_cast<std::size_t>(h), [&](std::size_t y) {
        for (int x = 0; x < w; ++x) {
            const double e0 = planes.e(x, int(y)), e1 = planes.e_lambda(x, int(y)),
                         e2 = planes.e_lambdalambda(x, int(y));
            for (int c = 0; c < 3; ++c)
                out.at(x, int(y), c) = m[c][0] * e0 + m[c][1] * e1 + m[c][2] * e2;
        }
    });
    return out;
}

}  // namespace ciconv
