#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>
#include <random>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "color_model.hpp"
#include "image.hpp"
#include "metrics.hpp"
#include "text.hpp"

namespace ciconv {

// Illumination changes of the Kubelka-Munk image formation model, expressed
// on the Gaussian color model planes (E, E_lambda, E_lambdalambda).

/// Illumination intensity: e -> c e.
struct GlobalIntensity {
    double c = 1.0;
};

/// Scene geometry (shading): every plane multiplied by a positive field.
struct SpatialGain {
    Plane field;
};

/// Illumination color: product with the illuminant polynomial e0 + e1 l + e2 l^2,
/// truncated to the second-order Taylor coefficients.
struct SpectralMix {
    double e0 = 1.0;
    double e1 = 0.0;
    double e2 = 0.0;
};

/// Fresnel reflection under a white illuminant: additive term on E only.
struct FresnelOffset {
    Plane field;
};

using IlluminationTransform = std::variant<GlobalIntensity, SpatialGain, SpectralMix, FresnelOffset>;

namespace detail {

inline void check_field(const Plane& field, const SpectralPlanes& planes, bool strictly_positive) {
    if (!field.same_shape(planes.e))
        throw InvalidInput("illumination field shape does not match the planes");
    require_finite(field.values(), "illumination field");
    for (double v : field.values())
        if (strictly_positive ? !(v > 0.0) : !(v >= 0.0))
            throw InvalidInput("illumination field violates its sign constraint");
}

}  // namespace detail

inline SpectralPlanes apply_transform(const SpectralPlanes& planes, const IlluminationTransform& t) {
    for (int k = 0; k < 3; ++k) require_finite(planes[k].values(), "spectral planes");
    SpectralPlanes out = planes;
    std::visit(
        [&](const auto& v) {
            using T = std::decay_t<decltype(v)>;
            if constexpr (std::is_same_v<T, GlobalIntensity>) {
                if (!(v.c > 0.0) || !std::isfinite(v.c))
                    throw InvalidInput("intensity factor must be positive and finite");
                for (int k = 0; k < 3; ++k)
                    for (auto& x : out[k].values()) x *= v.c;
            } else if constexpr (std::is_same_v<T, SpatialGain>) {
                detail::check_field(v.field, planes, true);
                for (int k = 0; k < 3; ++k)
                    for (std::size_t i = 0; i < out[k].size(); ++i) out[k][i] *= v.field[i];
            } else if constexpr (std::is_same_v<T, SpectralMix>) {
                if (!(v.e0 > 0.0) || !std::isfinite(v.e1) || !std::isfinite(v.e2))
                    throw InvalidInput("illuminant polynomial needs e0 > 0 and finite terms");
                for (std::size_t i = 0; i < out.e.size(); ++i) {
                    const double e = planes.e[i], el = planes.e_lambda[i],
                                 ell = planes.e_lambdalambda[i];
                    out.e[i] = v.e0 * e;
                    out.e_lambda[i] = v.e0 * el + v.e1 * e;
                    out.e_lambdalambda[i] = v.e0 * ell + 2.0 * v.e1 * el + v.e2 * e;
                }
            } else {
                detail::check_field(v.field, planes, false);
                for (std::size_t i = 0; i < out.e.size(); ++i) out.e[i] += v.field[i];
            }
        },
        t);
    return out;
}

/// Deterministic band-limited positive field 1 + amplitude * b(x, y), |b| <= 1.
///
/// b is a convex combination of six plane waves whose wavelengths lie in
/// [period, 2 period]. Callers pick period >= 8 sigma of the scale under test.
inline Plane smooth_field(int width, int height, double period, double amplitude,
                          std::uint64_t seed) {
    if (!(period > 0.0)) throw InvalidParameter("field period must be positive");
    if (!(amplitude >= 0.0 && amplitude < 1.0))
        throw InvalidParameter("field amplitude must lie in [0, 1)");
    constexpr int kWaves = 6;
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    struct Wave {
        double kx, ky, phase, weight;
    };
    std::vector<Wave> waves;
    double total = 0.0;
    for (int i = 0; i < kWaves; ++i) {
        const double angle = 2.0 * std::numbers::pi * unit(rng);
        const double freq = (0.5 + 0.5 * unit(rng)) / period;
        const double phase = 2.0 * std::numbers::pi * unit(rng);
        const double weight = 0.5 + 0.5 * unit(rng);
        waves.push_back({2.0 * std::numbers::pi * freq * std::cos(angle),
                         2.0 * std::numbers::pi * freq * std::sin(angle), phase, weight});
        total += weight;
    }
    Plane field(width, height);
    for (int y = 0; y < height; ++y)
        for (int x = 0; x < width; ++x) {
            double b = 0.0;
            for (const auto& wv : waves)
                b += wv.weight / total * std::cos(wv.kx * x + wv.ky * y + wv.phase);
            field(x, y) = 1.0 + amplitude * b;
        }
    return field;
}

// RGB-space counterparts, for demos and the distribution shift harness.

struct Brightness {
    double c = 1.0;
};

struct VonKries {
    double r = 1.0, g = 1.0, b = 1.0;
};

using RgbTransform = std::variant<Brightness, VonKries>;

/// Per-channel multiplication, no clamping.
inline RgbImage rgb_transform(const RgbImage& img, const RgbTransform& t) {
    const auto factors = std::visit(
        [](const auto& v) -> std::array<double, 3> {
            using T = std::decay_t<decltype(v)>;
            if constexpr (std::is_same_v<T, Brightness>) return {v.c, v.c, v.c};
            else return {v.r, v.g, v.b};
        },
        t);
    for (double f : factors)
        if (!(f > 0.0) || !std::isfinite(f)) throw InvalidInput("channel factors must be positive");
    RgbImage out = img;
    auto values = out.values();
    for (std::size_t i = 0; i < values.size(); ++i) values[i] *= factors[i % 3];
    return out;
}

/// Parsed transform string, e.g. "intensity:0.5", "mix:1.2,0.1,-0.05",
/// "gain:period=64,amp=0.3,seed=7", "fresnel:amp=0.1,seed=7",
/// "brightness:0.25", "vonkries:1,0.9,0.8" or "identity".
///
/// Field-valued transforms are realized per image: gain and fresnel fields
/// take the image dimensions, and the fresnel field is scaled so that its
/// mean is about amp * mean(E).
struct TransformSpec {
    enum class Type { identity, intensity, mix, gain, fresnel, brightness, vonkries };
    Type type = Type::identity;
    std::vector<double> values;  // intensity / mix / brightness / vonkries arguments
    double period = 64.0;
    double amp = 0.3;
    std::uint64_t seed = 7;
    std::string text;

    bool plane_space() const {
        return type == Type::intensity || type == Type::mix || type == Type::gain ||
               type == Type::fresnel;
    }
};

inline TransformSpec parse_transform(const std::string& text) {
    TransformSpec spec;
    spec.text = text;
    const auto colon = text.find(':');
    const std::string name = text.substr(0, colon);
    const std::string args = colon == std::string::npos ? "" : text.substr(colon + 1);
    using T = TransformSpec::Type;

    auto positional = [&](std::size_t expected) {
        const auto parts = detail::split(args, ',');
        if (args.empty() || parts.size() != expected)
            throw InvalidParameter("transform '" + text + "' expects " + std::to_string(expected) +
                                   " comma-separated values");
        for (const auto& p : parts) spec.values.push_back(detail::parse_double(detail::trim(p), name));
    };
    auto keyed = [&] {
        if (args.empty()) return;
        for (const auto& part : detail::split(args, ',')) {
            const auto eq = part.find('=');
            if (eq == std::string::npos)
                throw InvalidParameter("transform '" + text + "' expects key=value arguments");
            const std::string key = detail::trim(part.substr(0, eq));
            const std::string value = detail::trim(part.substr(eq + 1));
            if (key == "period") spec.period = detail::parse_double(value, key);
            else if (key == "amp") spec.amp = detail::parse_double(value, key);
            else if (key == "seed") spec.seed = static_cast<std::uint64_t>(detail::parse_double(value, key));
            else throw InvalidParameter("unknown transform argument: " + key);
        }
    };

    if (name == "identity") {
        spec.type = T::identity;
    } else if (name == "intensity") {
        spec.type = T::intensity;
        positional(1);
    } else if (name == "mix") {
        spec.type = T::mix;
        positional(3);
    } else if (name == "gain") {
        spec.type = T::gain;
        keyed();
    } else if (name == "fresnel") {
        spec.type = T::fresnel;
        spec.amp = 0.1;
        keyed();
    } else if (name == "brightness") {
        spec.type = T::brightness;
        positional(1);
    } else if (name == "vonkries") {
        spec.type = T::vonkries;
        positional(3);
    } else {
        throw InvalidParameter("unknown transform: " + text);
    }
    return spec;
}

/// Builds the concrete plane-space transform for planes of one image.
inline IlluminationTransform realize(const TransformSpec& spec, const SpectralPlanes& planes) {
    using T = TransformSpec::Type;
    switch (spec.type) {
        case T::identity: return GlobalIntensity{1.0};
        case T::intensity: return GlobalIntensity{spec.values.at(0)};
        case T::mix: return SpectralMix{spec.values.at(0), spec.values.at(1), spec.values.at(2)};
        case T::gain:
            return SpatialGain{smooth_field(planes.width(), planes.height(), spec.period, spec.amp,
                                            spec.seed)};
        case T::fresnel: {
            Plane f = smooth_field(planes.width(), planes.height(), spec.period, 0.5, spec.seed);
            const double scale = spec.amp * mean(planes.e.values());
            for (auto& v : f.values()) v *= scale;
            return FresnelOffset{std::move(f)};
        }
        default: throw InvalidParameter("transform '" + spec.text + "' is not a plane-space transform");
    }
}

/// Applies any transform spec to an RGB image; plane-space transforms round
/// trip through the color model.
inline RgbImage apply_to_image(const RgbImage& img, const TransformSpec& spec) {
    using T = TransformSpec::Type;
    switch (spec.type) {
        case T::identity: return img;
        case T::brightness: return rgb_transform(img, Brightness{spec.values.at(0)});
        case T::vonkries:
            return rgb_transform(img, VonKries{spec.values.at(0), spec.values.at(1), spec.values.at(2)});
        default: {
            const SpectralPlanes planes = rgb_to_planes(img);
            return planes_to_rgb(apply_transform(planes, realize(spec, planes)));
        }
    }
}

}  // namespace ciconv
