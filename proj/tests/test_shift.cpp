// SPDX-License-Identifier: Apache-2.0
#include <gtest/gtest.h>

#include <cmath>

#include "dgen/rng.hpp"
#include "dgen/shift.hpp"

using namespace dgen;

namespace {

FeatureSet random_features(Rng& rng, std::size_t count, std::size_t dim,
                           double offset = 0.0) {
    FeatureSet f(count, std::vector<double>(dim));
    for (auto& v : f) {
        for (double& x : v) x = rng.normal() + offset;
    }
    return f;
}

}  // namespace

TEST(DomainDistribution, ZeroFeaturesGiveUniform) {
    FeatureSet f(3, std::vector<double>(5, 0.0));
    DomainDistribution d = domain_distribution(f);
    for (double p : d.probs) EXPECT_NEAR(p, 0.2, 1e-15);
}

TEST(DomainDistribution, ClosedFormSoftmax) {
    // Mean [ln 2, 0] -> softmax [2/3, 1/3].
    FeatureSet f{{std::log(2.0), 0.0}, {std::log(2.0), 0.0}};
    DomainDistribution d = domain_distribution(f);
    EXPECT_NEAR(d.probs[0], 2.0 / 3.0, 1e-15);
    EXPECT_NEAR(d.probs[1], 1.0 / 3.0, 1e-15);
}

TEST(DomainDistribution, MatchesIndependentRecomputation) {
    Rng rng(601);
    FeatureSet f = random_features(rng, 20, 6);
    DomainDistribution d = domain_distribution(f);

    std::vector<double> mean(6, 0.0);
    for (const auto& v : f) {
        for (std::size_t k = 0; k < 6; ++k) mean[k] += v[k] / 20.0;
    }
    double denom = 0.0;
    for (double m : mean) denom += std::exp(m);
    double sum = 0.0;
    for (std::size_t k = 0; k < 6; ++k) {
        EXPECT_NEAR(d.probs[k], std::exp(mean[k]) / denom, 1e-12);
        sum += d.probs[k];
        EXPECT_GT(d.probs[k], 0.0);
    }
    EXPECT_NEAR(sum, 1.0, 1e-12);
}

TEST(DomainDistribution, ShiftInvariance) {
    Rng rng(607);
    FeatureSet f = random_features(rng, 10, 4);
    FeatureSet shifted = f;
    for (auto& v : shifted) {
        for (double& x : v) x += 13.75;
    }
    DomainDistribution a = domain_distribution(f);
    DomainDistribution b = domain_distribution(shifted);
    for (std::size_t k = 0; k < 4; ++k) {
        EXPECT_NEAR(a.probs[k], b.probs[k], 1e-12);
    }
}

TEST(DomainDistribution, EmptyRejected) {
    EXPECT_THROW(domain_distribution(FeatureSet{}), EmptyDomain);
    FeatureSet ragged{{1.0, 2.0}, {1.0}};
    EXPECT_THROW(domain_distribution(ragged), ShapeError);
}

TEST(Kld, SelfDivergenceIsZero) {
    Rng rng(611);
    DomainDistribution p = domain_distribution(random_features(rng, 8, 5));
    EXPECT_NEAR(kld(p, p), 0.0, 1e-12);
}

TEST(Kld, HandComputedValue) {
    DomainDistribution p{{0.75, 0.25}};
    DomainDistribution q{{0.25, 0.75}};
    EXPECT_NEAR(kld(p, q), 0.5 * std::log(3.0), 1e-12);
}

TEST(Kld, NonNegativeOnRandomPairs) {
    Rng rng(613);
    for (int trial = 0; trial < 1000; ++trial) {
        DomainDistribution p = domain_distribution(random_features(rng, 4, 6));
        DomainDistribution q = domain_distribution(random_features(rng, 4, 6));
        EXPECT_GE(kld(p, q), 0.0);
    }
}

TEST(Kld, DimensionMismatchRejected) {
    DomainDistribution p{{0.5, 0.5}};
    DomainDistribution q{{1.0 / 3, 1.0 / 3, 1.0 / 3}};
    EXPECT_THROW(kld(p, q), ShapeError);
}

TEST(DomainShift, IdenticalSinglePairIsZero) {
    Rng rng(617);
    FeatureSet f = random_features(rng, 15, 5);
    ShiftReport r = domain_shift({f}, {f});
    EXPECT_NEAR(r.d_shift, 0.0, 1e-12);
    EXPECT_EQ(r.lambdas, (std::vector<double>{1.0}));
}

TEST(DomainShift, SinglePairReducesToKld) {
    Rng rng(619);
    FeatureSet a = random_features(rng, 15, 5, 0.0);
    FeatureSet b = random_features(rng, 15, 5, 1.5);
    ShiftReport r = domain_shift({a}, {b});
    EXPECT_NEAR(r.d_shift, kld(domain_distribution(a), domain_distribution(b)),
                1e-14);
}

TEST(DomainShift, EqualSizesGivePlainMean) {
    Rng rng(623);
    std::vector<FeatureSet> sources{random_features(rng, 10, 4, 0.0),
                                    random_features(rng, 10, 4, 0.5)};
    std::vector<FeatureSet> targets{random_features(rng, 10, 4, 1.0)};
    ShiftReport r = domain_shift(sources, targets);
    EXPECT_EQ(r.lambdas, (std::vector<double>{1.0, 1.0}));
    double mean = (r.pairwise_kld(0, 0) + r.pairwise_kld(1, 0)) / 2.0;
    EXPECT_NEAR(r.d_shift, mean, 1e-14);
}

TEST(DomainShift, SizeProportionalWeights) {
    Rng rng(629);
    std::vector<FeatureSet> sources{random_features(rng, 100, 4, 0.0),
                                    random_features(rng, 300, 4, 0.8)};
    std::vector<FeatureSet> targets{random_features(rng, 50, 4, 2.0)};
    ShiftReport r = domain_shift(sources, targets);
    EXPECT_NEAR(r.lambdas[0], 0.5, 1e-15);
    EXPECT_NEAR(r.lambdas[1], 1.5, 1e-15);
    double expect =
        (0.5 * r.pairwise_kld(0, 0) + 1.5 * r.pairwise_kld(1, 0)) / 2.0;
    EXPECT_NEAR(r.d_shift, expect, 1e-14);
}

TEST(DomainShift, InstanceOrderInvariant) {
    Rng rng(631);
    FeatureSet a = random_features(rng, 12, 5);
    FeatureSet b = random_features(rng, 9, 5, 0.7);
    FeatureSet a_rev(a.rbegin(), a.rend());
    double d1 = domain_shift({a}, {b}).d_shift;
    double d2 = domain_shift({a_rev}, {b}).d_shift;
    EXPECT_NEAR(d1, d2, 1e-13);
}

TEST(DomainShift, EmptyRejected) {
    FeatureSet f{{1.0, 2.0}};
    EXPECT_THROW(domain_shift({}, {f}), EmptyDomain);
    EXPECT_THROW(domain_shift({f}, {}), EmptyDomain);
    EXPECT_THROW(domain_shift({FeatureSet{}}, {f}), EmptyDomain);
}

TEST(AccuracyMargin, ZeroWhenEqual) {
    MarginReport r = accuracy_margin({0.8, 0.6}, {0.8, 0.6});
    EXPECT_EQ(r.margins, (std::vector<double>{0.0, 0.0}));
    EXPECT_EQ(r.mean, 0.0);
}

TEST(AccuracyMargin, HandArithmetic) {
    MarginReport r = accuracy_margin({0.9, 0.8}, {0.7, 0.6});
    EXPECT_NEAR(r.margins[0], 0.2, 1e-15);
    EXPECT_NEAR(r.margins[1], 0.2, 1e-15);
    EXPECT_NEAR(r.mean, 0.2, 1e-15);
}

TEST(AccuracyMargin, LengthMismatchRejected) {
    EXPECT_THROW(accuracy_margin({0.9}, {0.7, 0.6}), ShapeError);
}
