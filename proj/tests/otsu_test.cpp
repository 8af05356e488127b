#include <random>

#include <gtest/gtest.h>

#include "grasp/otsu.hpp"
#include "test_support.hpp"

using namespace grasp;

TEST(Otsu, BimodalSplitsBetweenModes) {
    std::vector<float> v(100);
    for (std::size_t i = 0; i < v.size(); ++i) v[i] = i < 50 ? 0.0f : 10.0f;
    const double t = otsu_threshold(v);
    EXPECT_GT(t, 0.0);
    EXPECT_LE(t, 10.0);
    std::size_t low = 0;
    for (float x : v) low += x < t;
    EXPECT_EQ(low, 50u);
}

TEST(Otsu, TiesGoToLowestEdge) {
    // Every cut between the two modes scores the same.
    const std::vector<float> v{0.0f, 0.0f, 10.0f, 10.0f};
    const OtsuSplit s = otsu_split(v);
    EXPECT_EQ(s.last_low_bin, 0);
    EXPECT_DOUBLE_EQ(s.threshold, 10.0 / 256.0);
}

TEST(Otsu, HighestTieHugsUpperMode) {
    const std::vector<float> v{0.0f, 0.0f, 10.0f, 10.0f};
    const OtsuSplit s = otsu_split(v, OtsuTie::Highest);
    EXPECT_EQ(s.last_low_bin, 254);
    EXPECT_DOUBLE_EQ(s.threshold, 10.0 * 255.0 / 256.0);
}

TEST(Otsu, DegenerateInputs) {
    for (const std::vector<float>& v : {std::vector<float>{}, std::vector<float>{1.0f}, std::vector<float>(10, 3.0f)}) {
        try {
            otsu_threshold(v);
            FAIL();
        } catch (const Error& e) {
            EXPECT_EQ(e.code(), ErrorCode::DegenerateSamples);
        }
    }
    const std::vector<float> nan{1.0f, std::nanf("")};
    EXPECT_THROW(otsu_threshold(nan), Error);
}

TEST(Otsu, MatchesExhaustiveSearch) {
    std::mt19937_64 rng(17);
    for (int trial = 0; trial < 100; ++trial) {
        const std::size_t n = 10 + rng() % 9991;
        const auto v = test::mixture_samples(rng, n);
        const OtsuSplit s = otsu_split(v);
        ASSERT_EQ(s.last_low_bin, test::brute_force_otsu_bin(v)) << "trial " << trial << " n=" << n;
        EXPECT_DOUBLE_EQ(s.threshold, s.lo + (s.hi - s.lo) * (s.last_low_bin + 1) / 256.0);
        EXPECT_EQ(otsu_split(v, OtsuTie::Highest).last_low_bin, test::brute_force_otsu_bin(v, true));
    }
}

TEST(Otsu, InvariantUnderPermutation) {
    std::mt19937_64 rng(18);
    auto v = test::mixture_samples(rng, 500);
    const double t = otsu_threshold(v);
    std::shuffle(v.begin(), v.end(), rng);
    EXPECT_EQ(otsu_threshold(v), t);
}

TEST(Otsu, BinEdges) {
    EXPECT_EQ(otsu_bin(0.0, 0.0, 1.0), 0);
    EXPECT_EQ(otsu_bin(1.0, 0.0, 1.0), 255);
    EXPECT_EQ(otsu_bin(0.5, 0.0, 1.0), 128);
}
