#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "illumination.hpp"
#include "invariants.hpp"
#include "layer.hpp"
#include "metrics.hpp"
#include "parallel.hpp"
#include "text.hpp"

namespace ciconv {

/// Probability-mass histogram over uniform bins.
struct Histogram {
    std::vector<double> edges;   // bins + 1, strictly ascending
    std::vector<double> counts;  // bins, sums to 1
};

/// Uniform bins over `range` (default: [min, max] of the values). Values
/// outside the range are clipped into the end bins. A constant input with an
/// automatic range gets a tiny positive-width range, so all mass lands in the
/// first bin.
inline Histogram histogram(std::span<const double> values, int bins,
                           std::optional<std::pair<double, double>> range = std::nullopt) {
    if (bins < 2) throw InvalidParameter("histogram needs at least 2 bins");
    if (values.empty()) throw InvalidInput("histogram of an empty map");
    require_finite(values, "histogram input");
    double lo, hi;
    if (range) {
        std::tie(lo, hi) = *range;
        if (!(lo < hi)) throw InvalidParameter("histogram range needs lo < hi");
    } else {
        const auto [mn, mx] = std::minmax_element(values.begin(), values.end());
        lo = *mn;
        hi = *mx;
        if (!(lo < hi)) hi = lo + std::max(std::abs(lo) * 1e-12, 1e-12);
    }
    Histogram h;
    h.edges.resize(static_cast<std::size_t>(bins) + 1);
    for (int i = 0; i <= bins; ++i) h.edges[i] = lo + (hi - lo) * i / bins;
    h.edges.back() = hi;
    std::vector<double> raw(static_cast<std::size_t>(bins), 0.0);
    const double scale = bins / (hi - lo);
    for (double v : values) {
        const double pos = std::floor((v - lo) * scale);
        const int bin = pos < 0 ? 0 : (pos >= bins ? bins - 1 : static_cast<int>(pos));
        raw[bin] += 1.0;
    }
    h.counts.resize(raw.size());
    const double n = static_cast<double>(values.size());
    for (std::size_t i = 0; i < raw.size(); ++i) h.counts[i] = raw[i] / n;
    return h;
}

inline Histogram histogram(const Plane& map, int bins,
                           std::optional<std::pair<double, double>> range = std::nullopt) {
    return histogram(map.values(), bins, range);
}

/// What is measured for each image in the shift harness.
struct Pipeline {
    enum class Type { raw_rgb, invariant, ciconv };
    Type type = Type::raw_rgb;
    InvariantKind kind = InvariantKind::W;
    double sigma = 1.0;  // invariant
    CIConvConfig config; // ciconv

    std::string name() const {
        switch (type) {
            case Type::raw_rgb: return "raw_rgb";
            case Type::invariant:
                return "invariant:" + std::string(to_string(kind)) + ":" + detail::format_double(sigma);
            case Type::ciconv:
                return "ciconv:" + std::string(to_string(config.kind)) + ":" +
                       detail::format_double(config.s);
        }
        return {};
    }
};

/// "raw_rgb", "invariant:KIND[:SIGMA]" or "ciconv:KIND[:S]".
inline Pipeline parse_pipeline(const std::string& text) {
    const auto parts = detail::split(text, ':');
    Pipeline p;
    auto kind_at = [&](std::size_t i) {
        if (parts.size() <= i) throw InvalidParameter("pipeline '" + text + "' needs an invariant kind");
        const auto k = parse_kind(parts[i]);
        if (!k) throw InvalidParameter("unknown invariant kind in pipeline: " + parts[i]);
        return *k;
    };
    if (parts[0] == "raw_rgb" && parts.size() == 1) {
        p.type = Pipeline::Type::raw_rgb;
    } else if (parts[0] == "invariant" && parts.size() <= 3) {
        p.type = Pipeline::Type::invariant;
        p.kind = kind_at(1);
        if (parts.size() == 3) p.sigma = detail::parse_double(parts[2], "sigma");
        check_sigma(p.sigma);
    } else if (parts[0] == "ciconv" && parts.size() <= 3) {
        p.type = Pipeline::Type::ciconv;
        p.config.kind = kind_at(1);
        if (parts.size() == 3) p.config.s = detail::parse_double(parts[2], "s");
        p.config.validate();
    } else {
        throw InvalidParameter("unknown pipeline: " + text);
    }
    return p;
}

/// Flattened pipeline output for one image.
inline std::vector<double> run_pipeline(const RgbImage& img, const Pipeline& p) {
    switch (p.type) {
        case Pipeline::Type::raw_rgb: {
            const auto v = img.values();
            return {v.begin(), v.end()};
        }
        case Pipeline::Type::invariant: {
            const auto stack = spatial_derivatives(rgb_to_planes(img), p.sigma);
            const auto map = compute_invariant(stack, p.kind);
            const auto v = map.values.values();
            return {v.begin(), v.end()};
        }
        case Pipeline::Type::ciconv: {
            const auto out = forward(img, p.config);
            const auto v = out.map.values();
            return {v.begin(), v.end()};
        }
    }
    return {};
}

inline constexpr int kShiftBins = 64;

namespace detail {

// Mean of per-image histograms over a shared range, summed in image order.
inline std::vector<double> mean_histogram(const std::vector<std::vector<double>>& outputs,
                                          std::pair<double, double> range) {
    std::vector<double> acc(kShiftBins, 0.0);
    for (const auto& o : outputs) {
        const auto h = histogram(o, kShiftBins, range);
        for (int b = 0; b < kShiftBins; ++b) acc[b] += h.counts[b];
    }
    for (auto& v : acc) v /= static_cast<double>(outputs.size());
    return acc;
}

}  // namespace detail

/// L2 distance between the mean output histograms of two image sets,
/// 64 bins over the range spanned by both sets.
inline double histogram_shift(const std::vector<std::vector<double>>& set_a,
                              const std::vector<std::vector<double>>& set_b) {
    if (set_a.empty() || set_b.empty()) throw InvalidInput("shift metric needs nonempty sets");
    double lo = std::numeric_limits<double>::infinity(), hi = -lo;
    for (const auto* set : {&set_a, &set_b})
        for (const auto& o : *set)
            for (double v : o) {
                lo = std::min(lo, v);
                hi = std::max(hi, v);
            }
    if (!(lo < hi)) hi = lo + std::max(std::abs(lo) * 1e-12, 1e-12);
    const auto ha = detail::mean_histogram(set_a, {lo, hi});
    const auto hb = detail::mean_histogram(set_b, {lo, hi});
    std::vector<double> sq(ha.size());
    for (std::size_t i = 0; i < ha.size(); ++i) sq[i] = (ha[i] - hb[i]) * (ha[i] - hb[i]);
    return std::sqrt(pairwise_sum(sq));
}

/// Distribution shift a transform induces in a pipeline's outputs.
inline double shift_metric(const std::vector<RgbImage>& imgs, const TransformSpec& transform,
                           const Pipeline& pipeline) {
    if (imgs.empty()) throw InvalidInput("shift metric needs at least one image");
    std::vector<std::vector<double>> source(imgs.size()), target(imgs.size());
    parallel_for(imgs.size(), [&](std::size_t i) {
        source[i] = run_pipeline(imgs[i], pipeline);
        target[i] = run_pipeline(apply_to_image(imgs[i], transform), pipeline);
    });
    return histogram_shift(source, target);
}

// RFC 4180 CSV.

inline std::string csv_field(const std::string& field) {
    if (field.find_first_of(",\"\r\n") == std::string::npos) return field;
    std::string out = "\"";
    for (char c : field) {
        if (c == '"') out += '"';
        out += c;
    }
    return out + "\"";
}

inline std::string write_csv(const std::vector<std::vector<std::string>>& rows) {
    std::string out;
    for (const auto& row : rows) {
        for (std::size_t i = 0; i < row.size(); ++i) {
            if (i) out += ',';
            out += csv_field(row[i]);
        }
        out += "\r\n";
    }
    return out;
}

inline std::vector<std::vector<std::string>> parse_csv(const std::string& text) {
    std::vector<std::vector<std::string>> rows;
    std::vector<std::string> row;
    std::string field;
    bool quoted = false, field_started = false;
    for (std::size_t i = 0; i < text.size(); ++i) {
        const char c = text[i];
        if (quoted) {
            if (c == '"') {
                if (i + 1 < text.size() && text[i + 1] == '"') {
                    field += '"';
                    ++i;
                } else {
                    quoted = false;
                }
            } else {
                field += c;
            }
        } else if (c == '"') {
            quoted = true;
            field_started = true;
        } else if (c == ',') {
            row.push_back(std::move(field));
            field.clear();
            field_started = true;
        } else if (c == '\r' || c == '\n') {
            if (c == '\r' && i + 1 < text.size() && text[i + 1] == '\n') ++i;
            row.push_back(std::move(field));
            field.clear();
            rows.push_back(std::move(row));
            row.clear();
            field_started = false;
        } else {
            field += c;
            field_started = true;
        }
    }
    if (quoted) throw InvalidInput("unterminated quoted CSV field");
    if (field_started || !field.empty() || !row.empty()) {
        row.push_back(std::move(field));
        rows.push_back(std::move(row));
    }
    return rows;
}

/// One metric row: metric name, pipeline, transform spec, value.
struct MetricRecord {
    std::string metric;
    std::string pipeline;
    std::string transform;
    double value = 0.0;
};

inline std::string write_metrics_csv(const std::vector<MetricRecord>& records) {
    std::vector<std::vector<std::string>> rows{{"metric", "pipeline", "transform", "value"}};
    for (const auto& r : records)
        rows.push_back({r.metric, r.pipeline, r.transform, detail::format_double(r.value)});
    return write_csv(rows);
}

inline std::vector<MetricRecord> parse_metrics_csv(const std::string& text) {
    const auto rows = parse_csv(text);
    if (rows.empty() || rows[0] != std::vector<std::string>{"metric", "pipeline", "transform", "value"})
        throw InvalidInput("metrics CSV has an unexpected header");
    std::vector<MetricRecord> out;
    for (std::size_t i = 1; i < rows.size(); ++i) {
        if (rows[i].size() != 4) throw InvalidInput("metrics CSV row with wrong field count");
        out.push_back({rows[i][0], rows[i][1], rows[i][2], detail::parse_double(rows[i][3], "value")});
    }
    return out;
}

/// sigma,detail_metric,noise_metric
inline std::string write_sweep_csv(const std::vector<SweepRow>& rows) {
    std::vector<std::vector<std::string>> table{{"sigma", "detail_metric", "noise_metric"}};
    for (const auto& r : rows)
        table.push_back({detail::format_double(r.sigma), detail::format_double(r.detail_metric),
                         detail::format_double(r.noise_metric)});
    return write_csv(table);
}

}  // namespace ciconv
