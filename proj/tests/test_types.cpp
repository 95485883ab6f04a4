#include <gtest/gtest.h>

#include "tabe/types.hpp"
#include "test_util.hpp"

#include <random>

using namespace tabe;

TEST(Mask, SetAlgebraMatchesPixelwiseOracle) {
    std::mt19937 rng(7);
    for (int trial = 0; trial < 50; ++trial) {
        const Mask a = testutil::random_mask(rng, 9, 7, 0.4);
        const Mask b = testutil::random_mask(rng, 9, 7, 0.6);
        const Mask i = a & b, u = a | b, d = a - b, n = ~a;
        std::size_t area_a = 0;
        for (int y = 0; y < 7; ++y)
            for (int x = 0; x < 9; ++x) {
                EXPECT_EQ(i(x, y), a(x, y) && b(x, y));
                EXPECT_EQ(u(x, y), a(x, y) || b(x, y));
                EXPECT_EQ(d(x, y), a(x, y) && !b(x, y));
                EXPECT_EQ(n(x, y), !a(x, y));
                area_a += a(x, y);
            }
        EXPECT_EQ(a.area(), area_a);
        EXPECT_TRUE(i.is_subset_of(a));
        EXPECT_TRUE(a.is_subset_of(u));
        EXPECT_EQ(a.empty(), area_a == 0);
    }
}

TEST(Mask, GeometryMismatchThrows) {
    Mask a(4, 4), b(4, 5);
    EXPECT_THROW(a & b, ValidationError);
    EXPECT_THROW(a.is_subset_of(b), ValidationError);
    EXPECT_THROW(Mask(0, 3), ValidationError);
}

TEST(Mask, AtTreatsOutsideAsFalse) {
    Mask m(3, 3, true);
    EXPECT_TRUE(m.at(0, 0));
    EXPECT_FALSE(m.at(-1, 0));
    EXPECT_FALSE(m.at(3, 2));
}

TEST(NearnessMap, RejectsNonFiniteValues) {
    EXPECT_THROW(NearnessMap(2, 1, std::vector<float>{0.0f, std::numeric_limits<float>::quiet_NaN()}), ValidationError);
    EXPECT_THROW(NearnessMap(2, 1, std::vector<float>{0.0f, std::numeric_limits<float>::infinity()}), ValidationError);
    EXPECT_THROW(NearnessMap(2, 2, std::vector<float>{0.0f}), ValidationError);
}

TEST(NearnessMap, BilinearSampleMatchesHandComputation) {
    NearnessMap m(2, 2, std::vector<float>{0.0f, 1.0f, 2.0f, 3.0f});
    // f(x,y) = x + 2y is bilinear, so interpolation reproduces it exactly.
    EXPECT_DOUBLE_EQ(m.sample(0.5, 0.5), 1.5);
    EXPECT_DOUBLE_EQ(m.sample(0.25, 0.75), 0.25 + 1.5);
    // Clamped outside the pixel range.
    EXPECT_DOUBLE_EQ(m.sample(-3.0, 0.0), 0.0);
    EXPECT_DOUBLE_EQ(m.sample(5.0, 5.0), 3.0);
    EXPECT_DOUBLE_EQ(m.sample(1.0, 0.0), 1.0);
}

TEST(NearnessMap, MinMaxNormalization) {
    NearnessMap m(3, 1, std::vector<float>{2.0f, 4.0f, 3.0f});
    const auto n = normalize_min_max(m);
    EXPECT_FLOAT_EQ(n(0, 0), 0.0f);
    EXPECT_FLOAT_EQ(n(1, 0), 1.0f);
    EXPECT_FLOAT_EQ(n(2, 0), 0.5f);
    const auto flat = normalize_min_max(NearnessMap(3, 2, 0.7f));
    for (float v : flat.values()) EXPECT_EQ(v, 0.0f);
}

TEST(StableMean, ConstantInputEqualsItsValueExactly) {
    for (float c : {0.1f, 0.3f, 0.7f, 123.456f}) {
        std::vector<float> v(37, c);
        EXPECT_EQ(stable_mean(v), static_cast<double>(c));
    }
    EXPECT_DOUBLE_EQ(stable_mean(std::vector<double>{1.0, 2.0, 6.0}), 3.0);
    EXPECT_THROW(stable_mean(std::vector<double>{}), ValidationError);
}
