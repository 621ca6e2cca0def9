#include <cmath>

#include <gtest/gtest.h>

#include "accdiff/resample.hpp"
#include "test_util.hpp"

using namespace accdiff;
using accdiff::testing::expect_error;
using accdiff::testing::random_latent;

namespace {

double keys(double x) {
    const double a = -0.75;
    x = std::abs(x);
    if (x < 1.0) return (a + 2) * x * x * x - (a + 3) * x * x + 1;
    if (x < 2.0) return a * x * x * x - 5 * a * x * x + 8 * a * x - 4 * a;
    return 0.0;
}

}  // namespace

TEST(Resize, ConstantPreservedByEveryKernel) {
    for (auto kernel : {UpsampleKernel::Bicubic, UpsampleKernel::Bilinear, UpsampleKernel::Nearest}) {
        const auto out = resize(Latent3({3, 5, 2}, 1.25f), 9, 10, kernel);
        ASSERT_EQ(out.shape(), (Shape3{9, 10, 2}));
        for (float v : out.data()) EXPECT_NEAR(v, 1.25f, 1e-6);
    }
}

TEST(Resize, NearestReplicatesBlocks) {
    const auto in = random_latent({2, 3, 1}, 1);
    const auto out = resize(in, 4, 6, UpsampleKernel::Nearest);
    for (std::size_t r = 0; r < 4; ++r)
        for (std::size_t c = 0; c < 6; ++c) EXPECT_EQ(out.at(r, c, 0), in.at(r / 2, c / 2, 0));
}

TEST(Resize, BilinearHandValues) {
    Latent3 in({1, 2, 1});
    in.at(0, 1, 0) = 1.0f;
    const auto out = resize(in, 1, 4, UpsampleKernel::Bilinear);
    EXPECT_FLOAT_EQ(out.at(0, 0, 0), 0.0f);
    EXPECT_FLOAT_EQ(out.at(0, 1, 0), 0.25f);
    EXPECT_FLOAT_EQ(out.at(0, 2, 0), 0.75f);
    EXPECT_FLOAT_EQ(out.at(0, 3, 0), 1.0f);
}

TEST(Resize, MirrorEquivariant) {
    const auto in = random_latent({5, 7, 2}, 3);
    Latent3 flipped(in.shape());
    for (std::size_t r = 0; r < 5; ++r)
        for (std::size_t c = 0; c < 7; ++c)
            for (std::size_t k = 0; k < 2; ++k) flipped.at(r, 6 - c, k) = in.at(r, c, k);
    for (auto kernel : {UpsampleKernel::Bicubic, UpsampleKernel::Bilinear}) {
        const auto a = resize(in, 10, 14, kernel), b = resize(flipped, 10, 14, kernel);
        for (std::size_t r = 0; r < 10; ++r)
            for (std::size_t c = 0; c < 14; ++c)
                for (std::size_t k = 0; k < 2; ++k) EXPECT_NEAR(a.at(r, c, k), b.at(r, 13 - c, k), 1e-5);
    }
}

TEST(Resize, BicubicMatchesDirectTwoDimensionalSum) {
    const auto in = random_latent({5, 6, 2}, 4);
    const auto out = resize(in, 10, 15, UpsampleKernel::Bicubic);
    auto clampi = [](long v, long n) { return static_cast<std::size_t>(std::clamp(v, 0L, n - 1)); };
    for (std::size_t r = 0; r < 10; ++r) {
        for (std::size_t c = 0; c < 15; ++c) {
            const double sr = (r + 0.5) * 5.0 / 10.0 - 0.5, sc = (c + 0.5) * 6.0 / 15.0 - 0.5;
            const long r0 = static_cast<long>(std::floor(sr)), c0 = static_cast<long>(std::floor(sc));
            for (std::size_t k = 0; k < 2; ++k) {
                double acc = 0.0;
                for (long i = r0 - 1; i <= r0 + 2; ++i)
                    for (long j = c0 - 1; j <= c0 + 2; ++j)
                        acc += keys(sr - static_cast<double>(i)) * keys(sc - static_cast<double>(j)) *
                               in.at(clampi(i, 5), clampi(j, 6), k);
                EXPECT_NEAR(out.at(r, c, k), acc, 1e-5);
            }
        }
    }
}

TEST(Resize, SameSizeIsIdentityAndNamesParse) {
    const auto in = random_latent({4, 4, 3}, 2);
    EXPECT_LE(max_abs_diff(resize(in, 4, 4, UpsampleKernel::Bicubic), in), 1e-6);
    EXPECT_EQ(parse_upsample_kernel(to_string(UpsampleKernel::Bilinear)), UpsampleKernel::Bilinear);
    expect_error(ErrorCode::InvalidArgument, [] { parse_upsample_kernel("lanczos"); });
}
