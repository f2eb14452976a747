// SPDX-License-Identifier: Apache-2.0
#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

#include "pairedit/rng.hpp"

using namespace pairedit;

TEST(Rng, SplitmixReferenceValues) {
    // First outputs of the splitmix64 reference generator seeded with 0.
    RngState rng(0);
    EXPECT_EQ(rng.next_u64(), 0xE220A8397B1DCDAFull);
    EXPECT_EQ(rng.next_u64(), 0x6E789E6AA1B965F4ull);
    EXPECT_EQ(rng.next_u64(), 0x06C45D188009454Full);
}

TEST(Rng, StreamIsPureFunctionOfSeedAndCounter) {
    RngState a(42);
    for (int i = 0; i < 5; ++i) a.next_u64();
    RngState b(42, 5);
    EXPECT_EQ(a, b);
    EXPECT_EQ(a.next_u64(), b.next_u64());
}

TEST(Rng, UniformRange) {
    RngState rng(7);
    for (int i = 0; i < 10000; ++i) {
        const double u = rng.next_uniform();
        ASSERT_GT(u, 0.0);
        ASSERT_LE(u, 1.0);
    }
}

TEST(Rng, GaussIsDeterministic) {
    RngState a(0), b(0);
    EXPECT_EQ(gauss(a, {2}), gauss(b, {2}));
    EXPECT_EQ(a.counter, 2u);
}

TEST(Rng, GaussMatchesBoxMullerOnTheUniformStream) {
    RngState u(9), g(9);
    const double u1 = u.next_uniform();
    const double u2 = u.next_uniform();
    const double r = std::sqrt(-2.0 * std::log(u1));
    const Tensor z = gauss(g, {3});
    EXPECT_EQ(z[0], r * std::cos(2.0 * std::numbers::pi * u2));
    EXPECT_EQ(z[1], r * std::sin(2.0 * std::numbers::pi * u2));
    EXPECT_EQ(g.counter, 4u);  // odd tail consumes a full pair
}

TEST(Rng, GaussMoments) {
    RngState rng(123);
    const Tensor z = gauss(rng, {1000000});
    double m = 0.0;
    for (double v : z.data()) m += v;
    m /= static_cast<double>(z.size());
    double var = 0.0;
    for (double v : z.data()) var += (v - m) * (v - m);
    var /= static_cast<double>(z.size());
    EXPECT_NEAR(m, 0.0, 0.01);
    EXPECT_NEAR(var, 1.0, 0.02);
}

TEST(Rng, GaussRejectsEmptyShape) {
    RngState rng(0);
    EXPECT_THROW(gauss(rng, {0}), std::invalid_argument);
    EXPECT_THROW(gauss(rng, {}), std::invalid_argument);
}

TEST(Rng, DerivedSeedsDiffer) {
    EXPECT_NE(derive_seed(0, 1), derive_seed(0, 2));
    EXPECT_NE(derive_seed(0, 1), derive_seed(1, 1));
    EXPECT_EQ(derive_seed(5, 3), derive_seed(5, 3));
}

TEST(Rng, IndexInRange) {
    RngState rng(1);
    for (int i = 0; i < 1000; ++i) ASSERT_LT(rng.next_index(3), 3u);
    EXPECT_THROW(rng.next_index(0), std::invalid_argument);
}
