#include <cmath>
#include <random>

#include <gtest/gtest.h>

#include <ciconv/fixtures.hpp>
#include <ciconv/invariants.hpp>
#include <ciconv/metrics.hpp>

using namespace ciconv;

namespace {

Plane random_plane(int w, int h, std::uint64_t seed, double lo, double hi) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> u(lo, hi);
    Plane p(w, h);
    for (auto& v : p.values()) v = u(rng);
    return p;
}

// Stack with arbitrary (not convolution-consistent) derivative maps, so the
// formulas are exercised on independent inputs.
DerivativeStack random_stack(std::uint64_t seed, int w = 11, int h = 7) {
    DerivativeStack s;
    s.planes = {random_plane(w, h, seed, 0.2, 0.9), random_plane(w, h, seed + 1, -0.4, 0.4),
                random_plane(w, h, seed + 2, -0.4, 0.4)};
    for (int k = 0; k < 3; ++k) {
        s.dx[k] = random_plane(w, h, seed + 10 + k, -0.1, 0.1);
        s.dy[k] = random_plane(w, h, seed + 20 + k, -0.1, 0.1);
    }
    return s;
}

// Direct transcription of the component formulas, one direction.
double reference(InvariantKind kind, double E, double El, double Ell, double Ex, double Elx, double Ellx) {
    switch (kind) {
        case InvariantKind::E: return Ex * Ex + Elx * Elx + Ellx * Ellx;
        case InvariantKind::W: {
            const double a = Ex / E, b = Elx / E, c = Ellx / E;
            return a * a + b * b + c * c;
        }
        case InvariantKind::C: {
            const double a = (Elx * E - El * Ex) / (E * E);
            const double b = (Ellx * E - Ell * Ex) / (E * E);
            return a * a + b * b;
        }
        case InvariantKind::N: {
            const double a = (Elx * E - El * Ex) / (E * E);
            const double b = (Ellx * E * E - Ell * Ex * E - 2 * Elx * El * E + 2 * El * El * Ex) / (E * E * E);
            return a * a + b * b;
        }
        case InvariantKind::H: {
            const double a = (Ell * Elx - El * Ellx) / (El * El + Ell * Ell);
            return a * a;
        }
    }
    return 0.0;
}

}  // namespace

TEST(Invariants, MatchDirectFormulas) {
    const auto s = random_stack(3);
    for (auto kind : kAllKinds) {
        const auto map = compute_invariant(s, kind);
        EXPECT_EQ(map.kind, kind);
        for (int y = 0; y < 7; ++y)
            for (int x = 0; x < 11; ++x) {
                const double E = s.planes.e(x, y), El = s.planes.e_lambda(x, y), Ell = s.planes.e_lambdalambda(x, y);
                const double want = reference(kind, E, El, Ell, s.dx[0](x, y), s.dx[1](x, y), s.dx[2](x, y)) +
                                    reference(kind, E, El, Ell, s.dy[0](x, y), s.dy[1](x, y), s.dy[2](x, y));
                EXPECT_NEAR(map.values(x, y), want, 1e-12 * std::max(1.0, want)) << to_string(kind);
            }
    }
}

TEST(Invariants, ValuesAreNonNegative) {
    const auto s = random_stack(8);
    for (auto kind : kAllKinds) {
        const auto map = compute_invariant(s, kind);
        for (double v : map.values.values()) EXPECT_GE(v, 0.0);
    }
}

TEST(Invariants, ConstantImageGivesZeros) {
    SpectralPlanes p{Plane(12, 12, 0.5), Plane(12, 12, 0.1), Plane(12, 12, -0.2)};
    const auto stack = spatial_derivatives(p, 1.0);
    for (auto kind : kAllKinds) {
        const auto map = compute_invariant(stack, kind);
        for (double v : map.values.values()) EXPECT_LE(v, 1e-20) << to_string(kind);
    }
}

TEST(Invariants, EnergyScalesQuadratically) {
    const auto planes = rgb_to_planes(synthetic_scene(2));
    SpectralPlanes scaled = planes;
    const double c = 0.37;
    for (int k = 0; k < 3; ++k)
        for (auto& v : scaled[k].values()) v *= c;
    const auto a = compute_invariant(spatial_derivatives(planes, 1.0), InvariantKind::E).values;
    const auto b = compute_invariant(spatial_derivatives(scaled, 1.0), InvariantKind::E).values;
    double peak = 0.0;
    for (double v : a.values()) peak = std::max(peak, v);
    for (std::size_t i = 0; i < a.size(); ++i) EXPECT_NEAR(b[i], c * c * a[i], 1e-13 * c * c * peak);
}

TEST(Invariants, WCancelsIntensityOnWellExposedImage) {
    const auto planes = rgb_to_planes(synthetic_scene(1));
    double min_e = 1e9;
    for (double v : planes.e.values()) min_e = std::min(min_e, v);
    ASSERT_GT(min_e, 100 * kDefaultEpsDiv);
    SpectralPlanes doubled = planes;
    for (int k = 0; k < 3; ++k)
        for (auto& v : doubled[k].values()) v *= 2.0;
    const auto a = compute_invariant(spatial_derivatives(planes, 1.0), InvariantKind::W).values;
    const auto b = compute_invariant(spatial_derivatives(doubled, 1.0), InvariantKind::W).values;
    EXPECT_LT(relative_l2(a, b), 1e-6);
}

TEST(Invariants, HDoesNotReadTheEPlane) {
    auto s = random_stack(5);
    const auto before = compute_invariant(s, InvariantKind::H).values;
    for (auto& v : s.planes.e.values()) v += 0.3;
    for (auto& v : s.dx[0].values()) v *= -4.0;
    for (auto& v : s.dy[0].values()) v += 1.0;
    EXPECT_EQ(compute_invariant(s, InvariantKind::H).values, before);
}

TEST(Invariants, DenominatorGuard) {
    EXPECT_EQ(guard_denominator(0.0, 1e-5), 1e-5);
    EXPECT_EQ(guard_denominator(-1e-9, 1e-5), -1e-5);
    EXPECT_EQ(guard_denominator(2e-9, 1e-5), 1e-5);
    EXPECT_EQ(guard_denominator(-0.5, 1e-5), -0.5);
    EXPECT_EQ(guard_denominator(0.5, 1e-5), 0.5);

    // E = 0 with nonzero derivatives stays finite.
    DerivativeStack s;
    s.planes = {Plane(1, 1, 0.0), Plane(1, 1, 0.0), Plane(1, 1, 0.0)};
    for (int k = 0; k < 3; ++k) {
        s.dx[k] = Plane(1, 1, 0.01);
        s.dy[k] = Plane(1, 1, 0.0);
    }
    for (auto kind : kAllKinds) EXPECT_TRUE(std::isfinite(compute_invariant(s, kind).values[0]));
    // W with E guarded: (0.01 / 1e-5)^2 * 3.
    EXPECT_NEAR(compute_invariant(s, InvariantKind::W).values[0], 3e6, 1e-6);
    EXPECT_THROW(compute_invariant(s, InvariantKind::W, 0.0), InvalidParameter);
}

TEST(Invariants, NonFiniteStackIsInvalidInput) {
    auto s = random_stack(1);
    s.dy[2](0, 0) = NAN;
    EXPECT_THROW(compute_invariant(s, InvariantKind::C), InvalidInput);
}

TEST(Invariants, FlagsMatchTable) {
    constexpr auto e = invariance_flags(InvariantKind::E);
    static_assert(!e.sg && !e.fr && !e.ii && !e.ic);
    constexpr auto w = invariance_flags(InvariantKind::W);
    static_assert(w.ii && !w.sg && !w.fr && !w.ic);
    constexpr auto c = invariance_flags(InvariantKind::C);
    static_assert(c.sg && c.ii && !c.fr && !c.ic);
    constexpr auto n = invariance_flags(InvariantKind::N);
    static_assert(n.sg && n.ii && n.ic && !n.fr);
    constexpr auto h = invariance_flags(InvariantKind::H);
    static_assert(h.sg && h.fr && h.ii && !h.ic);
    SUCCEED();
}

TEST(Invariants, KindNames) {
    for (auto k : kAllKinds) EXPECT_EQ(parse_kind(to_string(k)), k);
    EXPECT_FALSE(parse_kind("X").has_value());
    EXPECT_FALSE(parse_kind("w").has_value());
}

TEST(Baselines, Luminance) {
    const auto l = luminance(RgbImage(3, 1, {1, 1, 1, 0, 0, 0, 1, 0, 0}));
    EXPECT_NEAR(l[0], 1.0, 1e-15);
    EXPECT_EQ(l[1], 0.0);
    EXPECT_EQ(l[2], 0.299);
}

TEST(Baselines, NormalizedRgb) {
    const auto n = normalized_rgb(RgbImage(2, 1, {0.2, 0.2, 0.2, 0, 0, 0}));
    for (int c = 0; c < 3; ++c) {
        EXPECT_NEAR(n.at(0, 0, c), 1.0 / 3.0, 1e-4);
        EXPECT_EQ(n.at(1, 0, c), 0.0);
    }
    const auto a = normalized_rgb(RgbImage(1, 1, {0.5, 0.3, 0.1}));
    const auto b = normalized_rgb(RgbImage(1, 1, {0.25, 0.15, 0.05}));
    for (int c = 0; c < 3; ++c) EXPECT_NEAR(a.at(0, 0, c), b.at(0, 0, c), 1e-4);
}
