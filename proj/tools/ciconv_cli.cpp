// Command line front end: invariant maps, layer outputs, scale sweeps,
// invariance verification, gradient checks and distribution shift.
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include <ciconv.hpp>

namespace fs = std::filesystem;
using namespace ciconv;

namespace {

// Processing stage reported with runtime failures.
std::string g_stage = "setup";

void stage(const char* name) { g_stage = name; }

InvariantKind kind_of(const std::string& text) {
    const auto k = parse_kind(text.empty() ? "W" : text);
    if (!k) throw InvalidParameter("unknown invariant kind: " + text);
    return *k;
}

Smoothing smoothing_of(const std::string& text) { return text == "off" ? Smoothing::off : Smoothing::on; }

MapEncoding encoding_for(const fs::path& path) {
    return path.extension() == ".png" ? MapEncoding::png8 : MapEncoding::float_dump;
}

void emit(const std::string& text, const std::string& out_path) {
    if (out_path.empty()) {
        std::fwrite(text.data(), 1, text.size(), stdout);
        return;
    }
    stage("write");
    write_file(out_path, std::span(reinterpret_cast<const std::uint8_t*>(text.data()), text.size()));
}

std::string read_text(const fs::path& path) {
    const Bytes b = read_file(path);
    return std::string(b.begin(), b.end());
}

const auto kMapExtension = CLI::Validator(
    [](std::string& s) -> std::string {
        const auto ext = fs::path(s).extension();
        return ext == ".png" || ext == ".cif" ? "" : "output must end in .png or .cif";
    },
    "*.png|*.cif");

const auto kKinds = CLI::IsMember({"E", "W", "C", "N", "H"});

struct Options {
    bool linearize = false;

    std::string input;
    std::string output;
    std::string kind;
    std::optional<double> sigma;
    std::optional<double> s;
    std::string smoothing = "on";
    bool sqrt_map = false;
    bool normalize = false;
    bool stats = false;
    std::string config_file;
    std::string sigmas = "0.5,1,2,4";
    std::uint64_t seed = 1;
    std::string tolerances;
    std::string upstream = "random";
    double step = 1e-5;
    std::string transform;
    std::vector<std::string> pipelines;
};

int run_transform(const Options& o) {
    stage("read");
    const RgbImage img = read_image(o.input, o.linearize);
    stage("transform");
    CIConvConfig cfg;
    cfg.kind = kind_of(o.kind);
    cfg.smoothing = smoothing_of(o.smoothing);
    const double sigma = o.sigma ? *o.sigma : std::exp2(o.s.value_or(0.0));
    if (o.s) cfg.s = *o.s;
    check_sigma(sigma);

    const CIConvOutput layer = forward_at_sigma(img, cfg, sigma);
    Plane map(img.width(), img.height());
    if (layer.degenerate) {
        std::fprintf(stderr, "warning: degenerate sample (constant invariant map), writing zeros\n");
    } else if (o.normalize) {
        map = layer.map;
    } else {
        const auto stack = spatial_derivatives(rgb_to_planes(img), sigma, cfg.smoothing);
        map = compute_invariant(stack, cfg.kind, cfg.eps_div).values;
        if (o.sqrt_map)
            for (auto& v : map.values()) v = std::sqrt(v);
    }
    stage("write");
    write_file(o.output, encode_map(map, encoding_for(o.output)));
    return 0;
}

int run_ciconv(const Options& o) {
    stage("config");
    CIConvConfig cfg;
    if (!o.config_file.empty()) cfg = parse_config(read_text(o.config_file));
    if (o.kind != "") cfg.kind = kind_of(o.kind);
    if (o.s) cfg.s = *o.s;
    cfg.validate();
    stage("read");
    const RgbImage img = read_image(o.input, o.linearize);
    stage("ciconv");
    const CIConvOutput out = forward(img, cfg);
    if (out.degenerate) std::fprintf(stderr, "warning: degenerate sample (sigma_S < eps_std), output is zero\n");
    if (o.stats) {
        std::printf("mu_s %s\nsigma_s %s\ndegenerate %d\nsigma %s\n", detail::format_double(out.mu_s).c_str(),
                    detail::format_double(out.sigma_s).c_str(), out.degenerate ? 1 : 0,
                    detail::format_double(out.sigma).c_str());
    }
    if (!o.output.empty()) {
        stage("write");
        write_file(o.output, encode_map(out, encoding_for(o.output)));
    }
    return 0;
}

int run_sweep(const Options& o) {
    stage("config");
    std::vector<double> sigmas;
    for (const auto& part : detail::split(o.sigmas, ','))
        sigmas.push_back(detail::parse_double(detail::trim(part), "sigmas"));
    CIConvConfig cfg;
    cfg.kind = kind_of(o.kind);
    cfg.smoothing = smoothing_of(o.smoothing);
    stage("read");
    const RgbImage img = read_image(o.input, o.linearize);
    stage("sweep");
    const auto rows = sigma_sweep(img, cfg, sigmas, o.seed);
    emit(write_sweep_csv(rows), o.output);
    return 0;
}

int run_verify(const Options& o) {
    stage("config");
    SuiteOptions opt;
    if (!o.tolerances.empty()) opt = parse_suite_options(read_text(o.tolerances));
    stage("read");
    std::vector<SpectralPlanes> planes;
    for (const auto& path : list_images(o.input)) planes.push_back(rgb_to_planes(read_image(path, o.linearize)));
    stage("verify");
    const SuiteReport report = run_invariance_suite(planes, opt);
    std::printf("images %zu\n%s", report.images, format_report(report).c_str());
    if (!report.all_pass()) {
        std::fprintf(stderr, "error [verify]: invariance matrix does not match the expected pattern\n");
        return 1;
    }
    return 0;
}

int run_gradcheck(const Options& o) {
    stage("read");
    const RgbImage img = read_image(o.input, o.linearize);
    stage("gradcheck");
    CIConvConfig cfg;
    cfg.kind = kind_of(o.kind);
    cfg.s = o.s.value_or(0.0);
    cfg.smoothing = smoothing_of(o.smoothing);
    cfg.validate();
    const Plane upstream = o.upstream == "ones" ? Plane(img.width(), img.height(), 1.0)
                                                : random_upstream(img.width(), img.height(), o.seed);
    const GradCheck g = check_grad_s(img, cfg, upstream, o.step);
    std::printf("kind %s\ns %s\nradius %d\nanalytic %s\nnumeric %s\nrelative_error %s\n",
                std::string(to_string(cfg.kind)).c_str(), detail::format_double(cfg.s).c_str(),
                kernel_radius(cfg.sigma()), detail::format_double(g.analytic).c_str(),
                detail::format_double(g.numeric).c_str(), detail::format_double(g.relative_error).c_str());
    return 0;
}

int run_shift(const Options& o) {
    stage("config");
    const TransformSpec spec = parse_transform(o.transform);
    std::vector<Pipeline> pipelines;
    for (const auto& p : o.pipelines) pipelines.push_back(parse_pipeline(p));
    stage("read");
    std::vector<RgbImage> imgs;
    for (const auto& path : list_images(o.input)) imgs.push_back(read_image(path, o.linearize));
    stage("shift");
    std::vector<MetricRecord> records;
    for (const auto& p : pipelines) records.push_back({"shift_metric", p.name(), spec.text, shift_metric(imgs, spec, p)});
    emit(write_metrics_csv(records), o.output);
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Color invariant convolution toolkit"};
    app.require_subcommand(1, 1);
    app.fallthrough();
    Options o;
    app.add_flag("--linearize", o.linearize, "Decode sRGB input to linear RGB");

    auto* transform = app.add_subcommand("transform", "Invariant map or layer output at a fixed scale");
    transform->add_option("input", o.input, "Input image (.png or .ppm)")->required()->check(CLI::ExistingFile);
    transform->add_option("--kind", o.kind, "Invariant kind")->check(kKinds);
    auto* t_sigma = transform->add_option("--sigma", o.sigma, "Gaussian scale");
    auto* t_s = transform->add_option("--s", o.s, "Scale exponent, sigma = 2^s");
    t_sigma->excludes(t_s);
    transform->add_option("--smoothing", o.smoothing, "Orthogonal smoothing")->check(CLI::IsMember({"on", "off"}));
    auto* t_sqrt = transform->add_flag("--sqrt", o.sqrt_map, "Write sqrt(CI^2) instead of CI^2");
    transform->add_flag("--normalize", o.normalize, "Write the log-normalized layer output")->excludes(t_sqrt);
    transform->add_option("-o,--output", o.output, "Output .png or .cif")->required()->check(kMapExtension);

    auto* ciconv = app.add_subcommand("ciconv", "Full layer: log, per-sample normalization");
    ciconv->add_option("input", o.input, "Input image")->required()->check(CLI::ExistingFile);
    ciconv->add_option("--kind", o.kind, "Invariant kind")->check(kKinds);
    ciconv->add_option("--s", o.s, "Scale exponent, sigma = 2^s");
    ciconv->add_option("--config", o.config_file, "key=value layer config")->check(CLI::ExistingFile);
    ciconv->add_option("-o,--output", o.output, "Output .cif or .png")->check(kMapExtension);
    ciconv->add_flag("--stats", o.stats, "Print mu_S, sigma_S and the degenerate flag");

    auto* sweep = app.add_subcommand("sweep", "Detail and noise metrics across fixed scales");
    sweep->add_option("input", o.input, "Input image")->required()->check(CLI::ExistingFile);
    sweep->add_option("--kind", o.kind, "Invariant kind")->check(kKinds);
    sweep->add_option("--sigmas", o.sigmas, "Comma-separated scales");
    sweep->add_option("--smoothing", o.smoothing, "Orthogonal smoothing")->check(CLI::IsMember({"on", "off"}));
    sweep->add_option("--seed", o.seed, "Noise seed");
    sweep->add_option("-o,--output", o.output, "Output CSV (default stdout)");

    auto* verify = app.add_subcommand("verify", "Invariance matrix over a directory of images");
    verify->add_option("input", o.input, "Image directory")->required()->check(CLI::ExistingDirectory);
    verify->add_option("--tolerances", o.tolerances, "key=value tolerance overrides")->check(CLI::ExistingFile);

    auto* gradcheck = app.add_subcommand("gradcheck", "Analytic vs finite-difference d/ds");
    gradcheck->add_option("input", o.input, "Input image")->required()->check(CLI::ExistingFile);
    gradcheck->add_option("--kind", o.kind, "Invariant kind")->check(kKinds);
    gradcheck->add_option("--s", o.s, "Scale exponent, sigma = 2^s");
    gradcheck->add_option("--smoothing", o.smoothing, "Orthogonal smoothing")->check(CLI::IsMember({"on", "off"}));
    gradcheck->add_option("--upstream", o.upstream, "Upstream gradient")->check(CLI::IsMember({"random", "ones"}));
    gradcheck->add_option("--seed", o.seed, "Seed of the random upstream gradient");
    gradcheck->add_option("--step", o.step, "Finite-difference step in s")->check(CLI::PositiveNumber);

    auto* shift = app.add_subcommand("shift", "Histogram shift metric over a directory of images");
    shift->add_option("input", o.input, "Image directory")->required()->check(CLI::ExistingDirectory);
    shift->add_option("--transform", o.transform, "Transform spec, e.g. brightness:0.25")->required();
    shift->add_option("--pipeline", o.pipelines, "raw_rgb, invariant:K[:SIGMA] or ciconv:K[:S]")->required();
    shift->add_option("-o,--output", o.output, "Output CSV (default stdout)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 2;
    }

    try {
        if (*transform) return run_transform(o);
        if (*ciconv) return run_ciconv(o);
        if (*sweep) return run_sweep(o);
        if (*verify) return run_verify(o);
        if (*gradcheck) return run_gradcheck(o);
        if (*shift) return run_shift(o);
    } catch (const InternalError& e) {
        std::fprintf(stderr, "error [%s]: %s\n", e.stage().c_str(), e.what());
        return 1;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error [%s]: %s\n", g_stage.c_str(), e.what());
        return 1;
    }
    return 1;
}
