#include <cmath>
#include <random>

#include <gtest/gtest.h>

#include <ciconv/color_model.hpp>

using namespace ciconv;

namespace {

RgbImage pixel(double r, double g, double b) { return RgbImage(1, 1, {r, g, b}); }

RgbImage random_rgb(int w, int h, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    RgbImage img(w, h);
    for (auto& v : img.values()) v = u(rng);
    return img;
}

}  // namespace

TEST(ColorModel, MatrixEntriesAsPublished) {
    const Matrix3 expected = {{{0.06, 0.63, 0.27}, {0.3, 0.04, -0.35}, {0.34, -0.6, 0.17}}};
    for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j) EXPECT_EQ(kGaussianColorModel[i][j], expected[i][j]);
}

TEST(ColorModel, BasisVectorsGiveColumnsExactly) {
    for (int c = 0; c < 3; ++c) {
        std::array<double, 3> rgb{0, 0, 0};
        rgb[c] = 1.0;
        const auto p = rgb_to_planes(pixel(rgb[0], rgb[1], rgb[2]));
        EXPECT_EQ(p.e[0], kGaussianColorModel[0][c]);
        EXPECT_EQ(p.e_lambda[0], kGaussianColorModel[1][c]);
        EXPECT_EQ(p.e_lambdalambda[0], kGaussianColorModel[2][c]);
    }
    const auto red = rgb_to_planes(pixel(1, 0, 0));
    EXPECT_EQ(red.e[0], 0.06);
    EXPECT_EQ(red.e_lambda[0], 0.3);
    EXPECT_EQ(red.e_lambdalambda[0], 0.34);
}

TEST(ColorModel, ZeroAndWhite) {
    const auto zero = rgb_to_planes(pixel(0, 0, 0));
    EXPECT_EQ(zero.e[0], 0.0);
    EXPECT_EQ(zero.e_lambda[0], 0.0);
    EXPECT_EQ(zero.e_lambdalambda[0], 0.0);
    const auto white = rgb_to_planes(pixel(1, 1, 1));
    EXPECT_NEAR(white.e[0], 0.96, 1e-15);
    EXPECT_NEAR(white.e_lambda[0], -0.01, 1e-15);
    EXPECT_NEAR(white.e_lambdalambda[0], -0.09, 1e-15);
}

TEST(ColorModel, InverseIsAccurate) {
    const auto& m = kGaussianColorModel;
    const auto& inv = kInverseGaussianColorModel;
    for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j) {
            double mi = 0.0, im = 0.0;
            for (int k = 0; k < 3; ++k) {
                mi += m[i][k] * inv[k][j];
                im += inv[i][k] * m[k][j];
            }
            EXPECT_NEAR(mi, i == j ? 1.0 : 0.0, 1e-14);
            EXPECT_NEAR(im, i == j ? 1.0 : 0.0, 1e-14);
        }
}

TEST(ColorModel, WhitePlanesInvertToWhite) {
    SpectralPlanes p{Plane(1, 1, 0.96), Plane(1, 1, -0.01), Plane(1, 1, -0.09)};
    const auto rgb = planes_to_rgb(p);
    for (int c = 0; c < 3; ++c) EXPECT_NEAR(rgb.at(0, 0, c), 1.0, 1e-12);
}

TEST(ColorModel, RoundTripOnRandomImages) {
    for (std::uint64_t seed = 1; seed <= 5; ++seed) {
        const auto img = random_rgb(23, 17, seed);
        const auto back = planes_to_rgb(rgb_to_planes(img));
        for (std::size_t i = 0; i < img.values().size(); ++i)
            EXPECT_NEAR(back.values()[i], img.values()[i], 1e-12);
    }
}

TEST(ColorModel, Linearity) {
    const auto x = random_rgb(9, 7, 11), y = random_rgb(9, 7, 12);
    const double a = 0.7, b = -1.3;
    RgbImage combo(9, 7);
    for (std::size_t i = 0; i < combo.values().size(); ++i)
        combo.values()[i] = a * x.values()[i] + b * y.values()[i];
    const auto pc = rgb_to_planes(combo), px = rgb_to_planes(x), py = rgb_to_planes(y);
    for (int k = 0; k < 3; ++k)
        for (std::size_t i = 0; i < pc[k].size(); ++i)
            EXPECT_NEAR(pc[k][i], a * px[k][i] + b * py[k][i], 1e-14);
}

TEST(ColorModel, NoClampingInPlaneSpace) {
    SpectralPlanes p{Plane(1, 1, 0.0), Plane(1, 1, 1.0), Plane(1, 1, 0.0)};
    const auto rgb = planes_to_rgb(p);
    bool outside = false;
    for (double v : rgb.values()) outside = outside || v < 0.0 || v > 1.0;
    EXPECT_TRUE(outside);
    const auto again = rgb_to_planes(rgb);
    EXPECT_NEAR(again.e_lambda[0], 1.0, 1e-12);
}

TEST(ColorModel, RejectsNonFinite) {
    EXPECT_THROW(rgb_to_planes(pixel(0, NAN, 0)), InvalidInput);
    SpectralPlanes p{Plane(1, 1, 0.0), Plane(1, 1, INFINITY), Plane(1, 1, 0.0)};
    EXPECT_THROW(planes_to_rgb(p), InvalidInput);
    SpectralPlanes mismatched{Plane(1, 1), Plane(2, 1), Plane(1, 1)};
    EXPECT_THROW(planes_to_rgb(mismatched), InvalidInput);
}
