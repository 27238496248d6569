#include "lmf/error.hpp"
#include "lmf/features.hpp"

#include "oracles.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <random>

namespace lmf {
namespace {

FeatureVector random_features(std::mt19937_64& rng, double spread = 1.0) {
    std::normal_distribution<double> n(0.0, spread);
    FeatureVector f;
    for (auto& v : f.values) v = n(rng);
    return f;
}

TEST(Flatten, InterleavesCoordinates) {
    Shape s{};
    for (std::size_t i = 0; i < kNumLandmarks; ++i) s[i] = {0.1 + 0.2 * i, 0.2 + 0.2 * i};
    const auto f = flatten(s);
    EXPECT_EQ(f.values[0], s[0].x);
    EXPECT_EQ(f.values[1], s[0].y);
    EXPECT_EQ(f.values[2], s[1].x);
    EXPECT_EQ(f.values[3], s[1].y);
    for (std::size_t i = 0; i < kNumLandmarks; ++i) {
        EXPECT_EQ(f.values[2 * i], s[i].x);
        EXPECT_EQ(f.values[2 * i + 1], s[i].y);
    }
    EXPECT_FALSE(f.standardized);
}

TEST(Flatten, ZeroShapeGivesZeroVector) {
    const auto f = flatten(Shape{});
    EXPECT_EQ(f.values.size(), 136u);
    for (double v : f.values) EXPECT_EQ(v, 0.0);
}

TEST(Flatten, UnflattenRoundTrip) {
    std::mt19937_64 rng(1);
    for (int trial = 0; trial < 100; ++trial) {
        const auto f = random_features(rng);
        EXPECT_EQ(flatten(unflatten(f)).values, f.values);
    }
}

TEST(FitStandardizer, TwoSampleExample) {
    FeatureVector a;
    FeatureVector b;
    a.values[0] = 0;
    a.values[1] = 2;
    b.values[0] = 2;
    b.values[1] = 4;
    const FeatureVector both[] = {a, b};
    const auto s = fit_standardizer(both);
    EXPECT_DOUBLE_EQ(s.mean()[0], 1.0);
    EXPECT_DOUBLE_EQ(s.mean()[1], 3.0);
    EXPECT_DOUBLE_EQ(s.scale()[0], 1.0);
    EXPECT_DOUBLE_EQ(s.scale()[1], 1.0);
    EXPECT_EQ(s.sample_count(), 2u);
}

TEST(FitStandardizer, ZeroVarianceGuard) {
    std::mt19937_64 rng(2);
    const auto f = random_features(rng);
    const std::vector<FeatureVector> same(7, f);
    const auto s = fit_standardizer(same);
    for (double v : s.scale()) EXPECT_EQ(v, 1.0);
    for (const auto& x : same) {
        for (double v : standardize(s, x).values) EXPECT_EQ(v, 0.0);
    }
}

TEST(FitStandardizer, MatchesTwoPassOracle) {
    std::mt19937_64 rng(3);
    std::vector<FeatureVector> fs;
    std::vector<std::vector<double>> rows;
    std::uniform_real_distribution<double> offset(-5.0, 5.0);
    const double shift = offset(rng);
    for (int i = 0; i < 1000; ++i) {
        auto f = random_features(rng, 0.3);
        for (auto& v : f.values) v += shift;
        fs.push_back(f);
        rows.emplace_back(f.values.begin(), f.values.end());
    }
    const auto s = fit_standardizer(fs);
    const auto oracle = testing::two_pass_mean_std(rows);
    for (std::size_t j = 0; j < kFeatureDim; ++j) {
        EXPECT_NEAR(s.mean()[j], oracle.mean[j], 1e-10);
        EXPECT_NEAR(s.scale()[j], oracle.std[j], 1e-10);
    }
}

TEST(FitStandardizer, TooFewSamples) {
    const FeatureVector one[1] = {};
    EXPECT_THROW(fit_standardizer(one), Error);
    try {
        fit_standardizer(one);
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), ErrorCode::TooFewSamples);
    }
}

TEST(Standardize, Examples) {
    std::vector<double> mean(kFeatureDim, 0.0);
    std::vector<double> scale(kFeatureDim, 2.0);
    const Standardizer s(mean, scale, 10);
    FeatureVector f;
    f.values[5] = 4.0;
    const auto z = standardize(s, f);
    EXPECT_EQ(z.values[5], 2.0);
    EXPECT_TRUE(z.standardized);

    FeatureVector at_mean;
    at_mean.values.fill(0.0);
    for (double v : standardize(s, at_mean).values) EXPECT_EQ(v, 0.0);
}

TEST(Standardize, RejectsStandardizedInput) {
    const Standardizer s(std::vector<double>(kFeatureDim, 0.0), std::vector<double>(kFeatureDim, 1.0), 2);
    FeatureVector f;
    f.standardized = true;
    try {
        standardize(s, f);
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), ErrorCode::AlreadyStandardized);
    }
}

TEST(Standardize, TrainingSetIsZScored) {
    std::mt19937_64 rng(4);
    for (int trial = 0; trial < 5; ++trial) {
        std::vector<FeatureVector> fs;
        for (int i = 0; i < 300; ++i) {
            auto f = random_features(rng, 0.01 + trial);
            f.values[7] = 0.25;  // degenerate component
            fs.push_back(f);
        }
        const auto s = fit_standardizer(fs);
        std::vector<std::vector<double>> rows;
        for (const auto& f : fs) {
            const auto z = standardize(s, f);
            rows.emplace_back(z.values.begin(), z.values.end());
        }
        const auto stats = testing::two_pass_mean_std(rows);
        for (std::size_t j = 0; j < kFeatureDim; ++j) {
            EXPECT_LT(std::abs(stats.mean[j]), 1e-9);
            if (j == 7) {
                EXPECT_EQ(stats.std[j], 0.0);
            } else {
                EXPECT_NEAR(stats.std[j], 1.0, 1e-9);
            }
        }
    }
}

TEST(Standardize, UnstandardizeInverts) {
    std::mt19937_64 rng(5);
    std::vector<FeatureVector> fs;
    for (int i = 0; i < 50; ++i) fs.push_back(random_features(rng, 3.0));
    const auto s = fit_standardizer(fs);
    for (const auto& f : fs) {
        const auto back = unstandardize(s, standardize(s, f));
        EXPECT_FALSE(back.standardized);
        for (std::size_t j = 0; j < kFeatureDim; ++j) EXPECT_NEAR(back.values[j], f.values[j], 1e-12);
    }
}

TEST(StandardizerInvariants, Enforced) {
    EXPECT_THROW(Standardizer(std::vector<double>(kFeatureDim, 0.0), std::vector<double>(kFeatureDim, 0.0), 5),
                 Error);
    EXPECT_THROW(Standardizer(std::vector<double>(kFeatureDim, 0.0), std::vector<double>(kFeatureDim, 1.0), 1),
                 Error);
    EXPECT_THROW(Standardizer(std::vector<double>(3, 0.0), std::vector<double>(3, 1.0), 5), Error);
}

} // namespace
} // namespace lmf
