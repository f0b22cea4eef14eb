#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numbers>
#include <random>
#include <vector>

#include "color_model.hpp"
#include "image.hpp"

namespace ciconv {

/// Parameters of the seed-generated synthetic scenes used as test fixtures.
struct SceneOptions {
    int width = 128;
    int height = 128;
    int blobs = 5;
    // Width (pixels) of the logistic transition at blob borders.
    double edge_width = 12.0;
    // Peak-to-peak strength of the linear shading across each blob.
    double shading = 0.3;
    // Amplitude of an additive colored sinusoidal texture; 0 disables it.
    double texture = 0.0;
    double texture_period = 6.0;
    // Redraw threshold for E_lambda^2 + E_lambdalambda^2; 0 accepts any scene.
    // The default keeps the H denominator guard inactive under a 4x intensity
    // reduction.
    double min_chroma_energy = 4e-4;
};

namespace detail {

inline RgbImage draw_scene(std::mt19937_64& rng, const SceneOptions& opt) {
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    auto color = [&] {
        return std::array<double, 3>{0.2 + 0.65 * unit(rng), 0.2 + 0.65 * unit(rng),
                                     0.2 + 0.65 * unit(rng)};
    };
    const double w = opt.width, h = opt.height;

    const auto bg0 = color(), bg1 = color();
    const double bg_angle = 2.0 * std::numbers::pi * unit(rng);

    struct Blob {
        double cx, cy, rx, ry, angle;
        std::array<double, 3> rgb;
        double shade_dx, shade_dy;
    };
    std::vector<Blob> blobs;
    for (int i = 0; i < opt.blobs; ++i) {
        Blob b;
        b.cx = w * (0.1 + 0.8 * unit(rng));
        b.cy = h * (0.1 + 0.8 * unit(rng));
        b.rx = std::min(w, h) * (0.08 + 0.14 * unit(rng));
        b.ry = std::min(w, h) * (0.08 + 0.14 * unit(rng));
        b.angle = std::numbers::pi * unit(rng);
        b.rgb = color();
        b.shade_dx = (unit(rng) - 0.5) * opt.shading;
        b.shade_dy = (unit(rng) - 0.5) * opt.shading;
        blobs.push_back(b);
    }
    const double tex_phase[3] = {2 * std::numbers::pi * unit(rng), 2 * std::numbers::pi * unit(rng),
                                 2 * std::numbers::pi * unit(rng)};

    RgbImage img(opt.width, opt.height);
    for (int y = 0; y < opt.height; ++y) {
        for (int x = 0; x < opt.width; ++x) {
            const double t = 0.5 + 0.5 * ((x / w - 0.5) * std::cos(bg_angle) +
                                          (y / h - 0.5) * std::sin(bg_angle));
            std::array<double, 3> px;
            for (int c = 0; c < 3; ++c) px[c] = bg0[c] + (bg1[c] - bg0[c]) * t;
            for (const auto& b : blobs) {
                const double dx = x - b.cx, dy = y - b.cy;
                const double u = (dx * std::cos(b.angle) + dy * std::sin(b.angle)) / b.rx;
                const double v = (-dx * std::sin(b.angle) + dy * std::cos(b.angle)) / b.ry;
                const double r = std::sqrt(u * u + v * v);
                // Signed distance to the border, approximately in pixels.
                const double dist = (1.0 - r) * std::min(b.rx, b.ry);
                const double alpha = 1.0 / (1.0 + std::exp(-dist / opt.edge_width * 4.0));
                const double shade = 1.0 + b.shade_dx * u * 0.5 + b.shade_dy * v * 0.5;
                for (int c = 0; c < 3; ++c)
                    px[c] = (1.0 - alpha) * px[c] + alpha * b.rgb[c] * std::clamp(shade, 0.6, 1.2);
            }
            if (opt.texture > 0.0) {
                const double k = 2.0 * std::numbers::pi / opt.texture_period;
                px[0] += opt.texture * std::sin(k * x + tex_phase[0]);
                px[1] += opt.texture * std::sin(k * y + tex_phase[1]);
                px[2] += opt.texture * std::sin(k * (x + y) + tex_phase[2]);
            }
            for (int c = 0; c < 3; ++c) img.at(x, y, c) = std::clamp(px[c], 0.08, 0.95);
        }
    }
    return img;
}

// Smallest E_lambda^2 + E_lambdalambda^2 over the image.
inline double min_chroma_energy(const RgbImage& img) {
    const auto& m = kGaussianColorModel;
    double lowest = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < img.pixel_count(); ++i) {
        const auto px = img.values().subspan(3 * i, 3);
        const double el = m[1][0] * px[0] + m[1][1] * px[1] + m[1][2] * px[2];
        const double ell = m[2][0] * px[0] + m[2][1] * px[1] + m[2][2] * px[2];
        lowest = std::min(lowest, el * el + ell * ell);
    }
    return lowest;
}

}  // namespace detail

/// Colored elliptical blobs with soft borders and smooth shading over a
/// smoothly varying background. All samples stay inside [0.08, 0.95].
/// Scenes with near-achromatic pixels (see min_chroma_energy) are redrawn
/// from the same random stream.
inline RgbImage synthetic_scene(std::uint64_t seed, const SceneOptions& opt = {}) {
    std::mt19937_64 rng(seed);
    constexpr int kAttempts = 200;
    for (int attempt = 0; attempt < kAttempts; ++attempt) {
        RgbImage img = detail::draw_scene(rng, opt);
        if (detail::min_chroma_energy(img) >= opt.min_chroma_energy) return img;
    }
    throw InvalidParameter("could not draw a sufficiently chromatic scene");
}

/// Sharp-edged, textured variant with fine detail at every scale of the
/// layer; used for scale sweeps and layer-level intensity checks.
inline SceneOptions natural_scene_options() {
    SceneOptions opt;
    opt.blobs = 12;
    opt.edge_width = 1.0;
    opt.shading = 0.6;
    opt.texture = 0.1;
    opt.min_chroma_energy = 0.0;
    return opt;
}

/// Seeds of the images committed under fixtures/scenes and fixtures/natural.
inline constexpr std::array<std::uint64_t, 4> kSceneSeeds = {1, 2, 3, 4};
inline constexpr std::uint64_t kNaturalSeed = 1;

/// I.i.d. uniform samples in [0.05, 0.95].
inline RgbImage random_image(int width, int height, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> unit(0.05, 0.95);
    RgbImage img(width, height);
    for (auto& v : img.values()) v = unit(rng);
    return img;
}

inline constexpr std::uint64_t kRandomSeed = 42;

/// 8-bit quantization, as stored in a PNG.
inline RgbImage quantize8(const RgbImage& img) {
    RgbImage out = img;
    for (auto& v : out.values()) v = std::round(std::clamp(v, 0.0, 1.0) * 255.0) / 255.0;
    return out;
}

}  // namespace ciconv
