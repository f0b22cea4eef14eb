#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>
#include <optional>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "color_model.hpp"
#include "invariants.hpp"
#include "metrics.hpp"
#include "parallel.hpp"
#include "scale_space.hpp"
#include "text.hpp"

namespace ciconv {

/// Settings of one color invariant convolution layer. The scale is
/// parameterized as sigma = 2^s.
struct CIConvConfig {
    InvariantKind kind = InvariantKind::W;
    double s = 0.0;
    double eps_log = 1e-5;
    double eps_div = kDefaultEpsDiv;
    double eps_std = 1e-8;
    Smoothing smoothing = Smoothing::on;
    // Pins the kernel radius instead of max(1, ceil(3 sigma)). Finite-difference
    // checks need it because the radius is piecewise constant in s.
    std::optional<int> radius;

    double sigma() const { return std::exp2(s); }

    void validate() const {
        check_sigma(sigma());
        validate_tolerances();
    }

    void validate_tolerances() const {
        if (!(eps_log > 0.0) || !(eps_div > 0.0) || !(eps_std > 0.0))
            throw InvalidParameter("eps_log, eps_div and eps_std must be positive");
        if (radius && *radius < 1) throw InvalidParameter("radius must be at least 1");
    }

    bool operator==(const CIConvConfig&) const = default;
};

/// Flat key=value text, one key per line.
inline std::string serialize_config(const CIConvConfig& cfg) {
    std::string out;
    out += "kind=" + std::string(to_string(cfg.kind)) + "\n";
    out += "s=" + detail::format_double(cfg.s) + "\n";
    out += "eps_log=" + detail::format_double(cfg.eps_log) + "\n";
    out += "eps_div=" + detail::format_double(cfg.eps_div) + "\n";
    out += "eps_std=" + detail::format_double(cfg.eps_std) + "\n";
    out += std::string("smoothing=") + (cfg.smoothing == Smoothing::on ? "on" : "off") + "\n";
    return out;
}

/// Parses the key=value format. Missing keys keep the values of `base`;
/// blank lines and lines starting with '#' are ignored.
inline CIConvConfig parse_config(const std::string& text, CIConvConfig base = {}) {
    std::istringstream in(text);
    std::string line;
    while (std::getline(in, line)) {
        line = detail::trim(line);
        if (line.empty() || line[0] == '#') continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos) throw InvalidParameter("config line without '=': " + line);
        const std::string key = detail::trim(line.substr(0, eq));
        const std::string value = detail::trim(line.substr(eq + 1));
        if (key == "kind") {
            const auto k = parse_kind(value);
            if (!k) throw InvalidParameter("unknown invariant kind: " + value);
            base.kind = *k;
        } else if (key == "s") {
            base.s = detail::parse_double(value, key);
        } else if (key == "eps_log") {
            base.eps_log = detail::parse_double(value, key);
        } else if (key == "eps_div") {
            base.eps_div = detail::parse_double(value, key);
        } else if (key == "eps_std") {
            base.eps_std = detail::parse_double(value, key);
        } else if (key == "smoothing") {
            if (value != "on" && value != "off")
                throw InvalidParameter("smoothing must be on or off");
            base.smoothing = value == "on" ? Smoothing::on : Smoothing::off;
        } else {
            throw InvalidParameter("unknown config key: " + key);
        }
    }
    return base;
}

/// Normalized log invariant map and the statistics used to produce it.
struct CIConvOutput {
    Plane map;
    double mu_s = 0.0;
    double sigma_s = 0.0;
    bool degenerate = false;
    double sigma = 1.0;
    CIConvConfig config;
};

namespace detail {

inline void check_stage(const Plane& p, const char* stage) {
    if (!all_finite(p.values())) throw InternalError(stage, "non-finite intermediate values");
}

inline Plane log_map(const Plane& ci2, double eps_log) {
    Plane out(ci2.width(), ci2.height());
    for (std::size_t i = 0; i < ci2.size(); ++i) out[i] = std::log(ci2[i] + eps_log);
    return out;
}

struct SampleStats {
    double mean = 0.0;
    double stddev = 0.0;
};

// Population statistics with fixed-order reductions.
inline SampleStats sample_stats(const Plane& p) {
    const double mu = mean(p.values());
    std::vector<double> sq(p.size());
    for (std::size_t i = 0; i < p.size(); ++i) sq[i] = (p[i] - mu) * (p[i] - mu);
    return {mu, std::sqrt(mean(sq))};
}

}  // namespace detail

/// Runs the layer at an explicit sigma; cfg.s is ignored apart from being
/// recorded in the output.
inline CIConvOutput forward_at_sigma(const RgbImage& img, const CIConvConfig& cfg, double sigma) {
    cfg.validate_tolerances();
    check_sigma(sigma);
    require_finite(img.values(), "rgb image");

    const SpectralPlanes planes = rgb_to_planes(img);
    for (int k = 0; k < 3; ++k) detail::check_stage(planes[k], "color_model");
    const DerivativeStack stack = spatial_derivatives(planes, sigma, cfg.smoothing, cfg.radius);
    for (int k = 0; k < 3; ++k) {
        detail::check_stage(stack.dx[k], "scale_space");
        detail::check_stage(stack.dy[k], "scale_space");
    }
    const InvariantMap ci2 = compute_invariant(stack, cfg.kind, cfg.eps_div);
    detail::check_stage(ci2.values, "invariant");
    Plane logged = detail::log_map(ci2.values, cfg.eps_log);
    detail::check_stage(logged, "log");

    const auto stats = detail::sample_stats(logged);
    CIConvOutput out{Plane(img.width(), img.height()), stats.mean, stats.stddev, false, sigma, cfg};
    if (!(stats.stddev >= cfg.eps_std)) {
        out.degenerate = true;
        return out;
    }
    for (std::size_t i = 0; i < logged.size(); ++i)
        out.map[i] = (logged[i] - stats.mean) / stats.stddev;
    detail::check_stage(out.map, "normalize");
    return out;
}

/// (log(CI^2(sigma = 2^s) + eps) - mu_S) / sigma_S with per-sample statistics.
inline CIConvOutput forward(const RgbImage& img, const CIConvConfig& cfg) {
    cfg.validate();
    CIConvOutput out = forward_at_sigma(img, cfg, cfg.sigma());
    out.config = cfg;
    return out;
}

/// dL/ds for L = sum(upstream * forward(img, cfg)), with mu_S and sigma_S
/// differentiated as functions of s. The kernel radius is held fixed at its
/// value for the current s. A degenerate sample has zero gradient.
inline double grad_s(const RgbImage& img, const CIConvConfig& cfg, const Plane& upstream) {
    cfg.validate();
    require_finite(img.values(), "rgb image");
    require_finite(upstream.values(), "upstream gradient");
    if (upstream.width() != img.width() || upstream.height() != img.height())
        throw InvalidInput("upstream gradient shape does not match the image");

    const double sigma = cfg.sigma();
    const int radius = cfg.radius.value_or(kernel_radius(sigma));
    const SpectralPlanes planes = rgb_to_planes(img);
    const DerivativeStack stack = spatial_derivatives(planes, sigma, cfg.smoothing, radius);
    const auto [ddx, ddy] = spatial_derivatives_dsigma(planes, sigma, cfg.smoothing, radius);

    const int w = img.width(), h = img.height();
    Plane logged(w, h), dlogged(w, h);
    parallel_for(static_cast<std::size_t>(h), [&](std::size_t yi) {
        const int y = static_cast<int>(yi);
        for (int x = 0; x < w; ++x) {
            const auto comp = invariant_components(cfg.kind, planes.e(x, y), planes.e_lambda(x, y),
                                                   planes.e_lambdalambda(x, y), cfg.eps_div);
            double ci2_x = 0.0, ci2_y = 0.0, dci2 = 0.0;
            for (int c = 0; c < comp.count; ++c) {
                const auto& a = comp.coef[c];
                const double vx = a[0] * stack.dx[0](x, y) + a[1] * stack.dx[1](x, y) + a[2] * stack.dx[2](x, y);
                const double vy = a[0] * stack.dy[0](x, y) + a[1] * stack.dy[1](x, y) + a[2] * stack.dy[2](x, y);
                const double dvx = a[0] * ddx[0](x, y) + a[1] * ddx[1](x, y) + a[2] * ddx[2](x, y);
                const double dvy = a[0] * ddy[0](x, y) + a[1] * ddy[1](x, y) + a[2] * ddy[2](x, y);
                ci2_x += vx * vx;
                ci2_y += vy * vy;
                dci2 += 2.0 * (vx * dvx + vy * dvy);
            }
            const double ci2 = ci2_x + ci2_y;
            logged(x, y) = std::log(ci2 + cfg.eps_log);
            dlogged(x, y) = dci2 / (ci2 + cfg.eps_log);
        }
    });
    detail::check_stage(logged, "log");
    detail::check_stage(dlogged, "grad");

    const auto stats = detail::sample_stats(logged);
    if (!(stats.stddev >= cfg.eps_std)) return 0.0;

    // d out_i = (dL_i - dmu) / sd - (L_i - mu) dsd / sd^2,
    // dmu = mean(dL), dsd = mean((L - mu) dL) / sd.
    const std::size_t n = logged.size();
    std::vector<double> centered_dl(n);
    for (std::size_t i = 0; i < n; ++i) centered_dl[i] = (logged[i] - stats.mean) * dlogged[i];
    const double dmu = mean(dlogged.values());
    const double dsd = mean(centered_dl) / stats.stddev;
    std::vector<double> terms(n);
    for (std::size_t i = 0; i < n; ++i) {
        const double dout = (dlogged[i] - dmu) / stats.stddev -
                            (logged[i] - stats.mean) * dsd / (stats.stddev * stats.stddev);
        terms[i] = upstream[i] * dout;
    }
    return pairwise_sum(terms) * sigma * std::numbers::ln2;
}

/// L = sum(upstream * forward(img, cfg)).
inline double weighted_output(const RgbImage& img, const CIConvConfig& cfg, const Plane& upstream) {
    const auto out = forward(img, cfg);
    std::vector<double> terms(out.map.size());
    for (std::size_t i = 0; i < terms.size(); ++i) terms[i] = upstream[i] * out.map[i];
    return pairwise_sum(terms);
}

/// Seeded upstream gradient with entries uniform in [-1, 1].
inline Plane random_upstream(int width, int height, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> unit(-1.0, 1.0);
    Plane p(width, height);
    for (auto& v : p.values()) v = unit(rng);
    return p;
}

struct GradCheck {
    double analytic = 0.0;
    double numeric = 0.0;
    double relative_error = 0.0;
};

/// Central difference (L(s+h) - L(s-h)) / 2h with the radius pinned to its
/// value at s, compared against grad_s.
inline GradCheck check_grad_s(const RgbImage& img, CIConvConfig cfg, const Plane& upstream,
                              double h = 1e-5) {
    cfg.radius = cfg.radius.value_or(kernel_radius(cfg.sigma()));
    GradCheck r;
    r.analytic = grad_s(img, cfg, upstream);
    CIConvConfig lo = cfg, hi = cfg;
    lo.s -= h;
    hi.s += h;
    r.numeric = (weighted_output(img, hi, upstream) - weighted_output(img, lo, upstream)) / (2.0 * h);
    const double scale = std::max({std::abs(r.analytic), std::abs(r.numeric), 1e-300});
    r.relative_error = std::abs(r.analytic - r.numeric) / scale;
    return r;
}

/// One row of a scale sweep.
struct SweepRow {
    double sigma = 0.0;
    double detail_metric = 0.0;
    double noise_metric = 0.0;
    CIConvOutput output;
};

inline constexpr double kSweepNoiseStd = 0.01;
inline constexpr std::uint64_t kSweepNoiseSeed = 20210823;

/// Separable Gaussian blur with reflect-101 borders; sigma may exceed the layer range.
inline Plane gaussian_blur(const Plane& p, double sigma) {
    const Kernel k = detail::sample_kernel(sigma, 0, kernel_radius(sigma));
    return convolve_1d(convolve_1d(p, k, Axis::x), k, Axis::y);
}

/// Detail versus noise robustness of the layer output across fixed scales.
///
/// detail_metric: mean squared difference between the invariant map CI^2 and
/// its 2 sigma Gaussian blur. noise_metric: relative L2 change of the output when
/// seeded N(0, 0.01^2) noise is added to the input.
inline std::vector<SweepRow> sigma_sweep(const RgbImage& img, const CIConvConfig& base,
                                         const std::vector<double>& sigmas,
                                         std::uint64_t seed = kSweepNoiseSeed) {
    for (double s : sigmas) check_sigma(s);
    RgbImage noisy = img;
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> noise(0.0, kSweepNoiseStd);
    for (auto& v : noisy.values()) v += noise(rng);

    std::vector<SweepRow> rows;
    rows.reserve(sigmas.size());
    for (double sigma : sigmas) {
        SweepRow row;
        row.sigma = sigma;
        row.output = forward_at_sigma(img, base, sigma);
        const Plane energy =
            compute_invariant(spatial_derivatives(rgb_to_planes(img), sigma, base.smoothing, base.radius),
                              base.kind, base.eps_div)
                .values;
        const Plane blurred = gaussian_blur(energy, 2.0 * sigma);
        std::vector<double> hf(blurred.size());
        for (std::size_t i = 0; i < hf.size(); ++i) {
            const double d = energy[i] - blurred[i];
            hf[i] = d * d;
        }
        row.detail_metric = mean(hf);
        const auto noisy_out = forward_at_sigma(noisy, base, sigma);
        row.noise_metric = relative_l2(row.output.map, noisy_out.map);
        rows.push_back(std::move(row));
    }
    return rows;
}

inline std::vector<SweepRow> sigma_sweep(const RgbImage& img, InvariantKind kind,
                                         const std::vector<double>& sigmas) {
    CIConvConfig cfg;
    cfg.kind = kind;
    return sigma_sweep(img, cfg, sigmas);
}

}  // namespace ciconv
