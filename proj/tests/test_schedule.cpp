#include <cmath>

#include <gtest/gtest.h>

#include "accdiff/rng.hpp"
#include "accdiff/schedule.hpp"
#include "test_util.hpp"

using namespace accdiff;
using accdiff::testing::expect_error;
using accdiff::testing::random_latent;

TEST(MakeSchedule, SingleStep) {
    const auto s = make_schedule(1, 0.1, 0.1);
    EXPECT_EQ(s.steps(), 1);
    EXPECT_DOUBLE_EQ(s.alpha_bar(1), 0.9);
    EXPECT_EQ(s.alpha_bar(0), 1.0);
}

TEST(MakeSchedule, TwoStepCumulativeProduct) {
    const auto s = make_schedule(2, 0.1, 0.3);
    EXPECT_DOUBLE_EQ(s.alpha_bar(1), 0.9);
    EXPECT_NEAR(s.alpha_bar(2), 0.63, 1e-15);
}

TEST(MakeSchedule, StrictlyDecreasing) {
    const auto s = make_schedule(50, 1e-4, 2e-2);
    ASSERT_EQ(s.alpha_bars().size(), 50u);
    for (int t = 1; t < 50; ++t) EXPECT_LT(s.alpha_bar(t + 1), s.alpha_bar(t));
    EXPECT_GT(s.alpha_bar(50), 0.0);
    EXPECT_LT(s.alpha_bar(1), 1.0);
}

TEST(MakeSchedule, RejectsInvalidRanges) {
    expect_error(ErrorCode::OutOfRange, [] { make_schedule(0, 0.1, 0.2); });
    expect_error(ErrorCode::OutOfRange, [] { make_schedule(5, 0.0, 0.2); });
    expect_error(ErrorCode::OutOfRange, [] { make_schedule(5, 0.3, 0.2); });
    expect_error(ErrorCode::OutOfRange, [] { make_schedule(5, 0.1, 1.0); });
    expect_error(ErrorCode::OutOfRange, [] { NoiseSchedule({0.9, 0.95}); });
}

TEST(ForwardDiffuse, ScalarHandValue) {
    const NoiseSchedule s({0.64});
    const Latent3 z0({1, 1, 1}, 2.0f), eps({1, 1, 1}, 1.0f);
    EXPECT_NEAR(forward_diffuse(z0, 1, eps, s).data()[0], 2.2f, 1e-6);
}

TEST(ForwardDiffuse, NearUnitAlphaBarReturnsSignal) {
    const NoiseSchedule s({1.0 - 1e-12});
    const auto z0 = random_latent({4, 4, 2}, 1);
    const auto eps = random_latent({4, 4, 2}, 2);
    EXPECT_LE(max_abs_diff(forward_diffuse(z0, 1, eps, s), z0), 1e-5);
}

TEST(ForwardDiffuse, ZeroSignal) {
    const auto s = make_schedule(10, 1e-3, 0.05);
    const Latent3 z0({3, 3, 1}, 0.0f);
    const auto eps = random_latent({3, 3, 1}, 3);
    const auto out = forward_diffuse(z0, 7, eps, s);
    for (std::size_t i = 0; i < out.size(); ++i) {
        EXPECT_FLOAT_EQ(out.data()[i], static_cast<float>(s.sqrt_one_minus_alpha_bar(7) * eps.data()[i]));
    }
}

TEST(ForwardDiffuse, Linearity) {
    const auto s = make_schedule(20, 1e-4, 2e-2);
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
        const auto z0 = random_latent({5, 3, 2}, seed);
        const auto eps = random_latent({5, 3, 2}, seed + 100);
        const float a = static_cast<float>(seed % 5) - 1.75f;
        Latent3 az0 = z0, aeps = eps;
        for (float& v : az0.data()) v *= a;
        for (float& v : aeps.data()) v *= a;
        Latent3 lhs = forward_diffuse(az0, 11, aeps, s);
        Latent3 rhs = forward_diffuse(z0, 11, eps, s);
        for (float& v : rhs.data()) v *= a;
        EXPECT_LE(max_abs_diff(lhs, rhs), 1e-6);
    }
}

TEST(ForwardDiffuse, Errors) {
    const auto s = make_schedule(4, 1e-3, 0.01);
    const Latent3 a({2, 2, 1}), b({2, 3, 1});
    expect_error(ErrorCode::ShapeMismatch, [&] { forward_diffuse(a, 1, b, s); });
    expect_error(ErrorCode::OutOfRange, [&] { forward_diffuse(a, 0, a, s); });
    expect_error(ErrorCode::OutOfRange, [&] { forward_diffuse(a, 5, a, s); });
}

TEST(DdimStep, ExactNoiseLandsOnPreviousMarginal) {
    const auto s = make_schedule(50, 1e-4, 2e-2);
    const auto z0 = random_latent({6, 6, 4}, 5);
    const auto eps = random_latent({6, 6, 4}, 6);
    for (int t = 2; t <= 50; ++t) {
        const auto z_t = forward_diffuse(z0, t, eps, s);
        EXPECT_LE(max_abs_diff(ddim_step(z_t, eps, t, s), forward_diffuse(z0, t - 1, eps, s)), 1e-5) << t;
    }
}

TEST(DdimStep, LastStepReturnsSignal) {
    const auto s = make_schedule(50, 1e-4, 2e-2);
    const auto z0 = random_latent({6, 6, 4}, 7);
    const auto eps = random_latent({6, 6, 4}, 8);
    EXPECT_LE(max_abs_diff(ddim_step(forward_diffuse(z0, 1, eps, s), eps, 1, s), z0), 1e-5);
}

TEST(DdimStep, ZeroInZeroOut) {
    const auto s = make_schedule(3, 1e-3, 0.01);
    const Latent3 zero({2, 2, 2});
    EXPECT_EQ(ddim_step(zero, zero, 2, s), zero);
}

TEST(DdimStep, OracleRecoveryOverFullTrajectory) {
    for (int steps : {1, 10, 50, 100}) {
        const auto s = make_schedule(steps, 1e-4, 2e-2);
        for (std::uint64_t seed = 0; seed < 5; ++seed) {
            const auto z0 = random_latent({8, 8, 4}, seed);
            Latent3 eps({8, 8, 4});
            fill_normal({seed, 0, 0, Branch::Test, 0}, eps.data());
            Latent3 z = forward_diffuse(z0, steps, eps, s);
            for (int t = steps; t >= 1; --t) z = ddim_step(z, eps, t, s);
            EXPECT_LE(max_abs_diff(z, z0), 1e-4) << "T=" << steps << " seed=" << seed;
        }
    }
}

TEST(CfgCombine, Identities) {
    const auto u = random_latent({3, 3, 2}, 1), c = random_latent({3, 3, 2}, 2);
    EXPECT_EQ(cfg_combine(u, c, 1.0), c);
    EXPECT_EQ(cfg_combine(u, c, 0.0), u);
}

TEST(CfgCombine, ScalarHandValueAtDefaultScale) {
    const Latent3 u({1, 1, 1}, 1.0f), c({1, 1, 1}, 2.0f);
    EXPECT_FLOAT_EQ(cfg_combine(u, c, 7.5).data()[0], 8.5f);
    expect_error(ErrorCode::ShapeMismatch, [&] { cfg_combine(u, Latent3({1, 2, 1}), 1.0); });
}

TEST(Eta, EndpointsAndMidpoint) {
    EXPECT_EQ(eta({50, 3.0}, 50), 1.0);
    EXPECT_EQ(eta({50, 3.0}, 0), 0.0);
    EXPECT_NEAR(eta({50, 1.0}, 25), 0.5, 1e-12);
    EXPECT_NEAR(eta({50, 3.0}, 25), 0.125, 1e-12);
}

TEST(Eta, BoundedAndMonotone) {
    for (double exponent : {0.5, 1.0, 3.0}) {
        const DecaySchedule d{37, exponent};
        double prev = -1.0;
        for (int t = 0; t <= 37; ++t) {
            const double v = eta(d, t);
            EXPECT_GE(v, 0.0);
            EXPECT_LE(v, 1.0);
            EXPECT_GE(v, prev);
            prev = v;
        }
    }
}

TEST(Eta, RejectsOutOfRange) {
    expect_error(ErrorCode::OutOfRange, [] { eta({10, 1.0}, -1); });
    expect_error(ErrorCode::OutOfRange, [] { eta({10, 1.0}, 11); });
}
