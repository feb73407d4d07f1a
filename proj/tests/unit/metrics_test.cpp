#include <gtest/gtest.h>

#include <boost/math/distributions/students_t.hpp>
#include <cmath>
#include <limits>
#include <random>
#include <vector>

#include "../support/ngram_oracle.hpp"
#include "lg4av/error.hpp"
#include "lg4av/metrics.hpp"

using namespace lg4av::eval;
using lg4av::testing::pair_count_auc;

TEST(Auc, PerfectAndTied) {
    const std::vector<double> s = {0.1, 0.2, 0.8, 0.9};
    const std::vector<int> y = {0, 0, 1, 1};
    EXPECT_EQ(auc(s, y), 1.0);
    const std::vector<double> tied(4, 0.3);
    EXPECT_EQ(auc(tied, y), 0.5);
}

TEST(Auc, MixedExample) {
    const std::vector<double> s = {0.2, 0.5, 0.7};
    const std::vector<int> y = {1, 0, 1};
    EXPECT_DOUBLE_EQ(auc(s, y), 0.5);
}

TEST(Auc, MatchesPairCountingOnRandomInstances) {
    std::mt19937_64 rng(5);
    for (int trial = 0; trial < 1000; ++trial) {
        const std::size_t n = 2 + rng() % 30;
        std::vector<double> s(n);
        std::vector<int> y(n);
        for (std::size_t i = 0; i < n; ++i) {
            s[i] = static_cast<double>(rng() % 7) / 6.0;  // many ties
            y[i] = static_cast<int>(rng() % 2);
        }
        y[0] = 0;
        y[1] = 1;
        EXPECT_NEAR(auc(s, y), pair_count_auc(s, y), 1e-12);
    }
}

TEST(Auc, InvariantUnderMonotoneTransform) {
    std::mt19937_64 rng(6);
    std::normal_distribution<double> g;
    std::vector<double> s(40), t(40);
    std::vector<int> y(40);
    for (std::size_t i = 0; i < s.size(); ++i) {
        s[i] = g(rng);
        t[i] = std::exp(3 * s[i]) + 1;
        y[i] = static_cast<int>(i % 2);
    }
    EXPECT_DOUBLE_EQ(auc(s, y), auc(t, y));
}

TEST(Auc, FlippedLabelsGiveComplement) {
    std::mt19937_64 rng(7);
    std::vector<double> s(30);
    std::vector<int> y(30), flipped(30);
    for (std::size_t i = 0; i < s.size(); ++i) {
        s[i] = static_cast<double>(rng() % 5);
        y[i] = static_cast<int>(i % 3 == 0);
        flipped[i] = 1 - y[i];
    }
    EXPECT_NEAR(auc(s, y) + auc(s, flipped), 1.0, 1e-12);
}

TEST(Auc, Errors) {
    const std::vector<double> s = {0.1, 0.2};
    const std::vector<int> one_class = {1, 1};
    EXPECT_THROW(auc(s, one_class), lg4av::Error);
    const std::vector<int> short_labels = {1};
    EXPECT_THROW(auc(s, short_labels), lg4av::Error);
}

TEST(AccuracyF1, HandCounted) {
    const std::vector<double> s = {0.9, 0.6, 0.4, 0.2, 0.5};
    const std::vector<int> y = {1, 0, 1, 0, 1};
    // predictions at 0.5 (strict): 1 1 0 0 0 -> tp 1, fp 1, fn 2, tn 1
    const auto r = accuracy_f1(s, y, 0.5);
    EXPECT_DOUBLE_EQ(r.accuracy, 2.0 / 5.0);
    EXPECT_DOUBLE_EQ(r.f1, 2.0 / (2.0 + 1.0 + 2.0));
}

TEST(AccuracyF1, NoPositivePredictionsGiveZeroF1) {
    const std::vector<double> s = {0.1, 0.2};
    const std::vector<int> y = {1, 0};
    const auto r = accuracy_f1(s, y, 0.5);
    EXPECT_EQ(r.f1, 0.0);
    EXPECT_EQ(r.accuracy, 0.5);
}

TEST(AccuracyF1, ConstantHalfPredictorOnBalancedSet) {
    const std::vector<double> s(10, 0.5);
    std::vector<int> y(10);
    for (std::size_t i = 0; i < y.size(); ++i) y[i] = static_cast<int>(i % 2);
    const auto r = evaluate_scores(s, y, 0.5);
    EXPECT_EQ(r.auc, 0.5);
    EXPECT_EQ(r.accuracy, 0.5);
    EXPECT_EQ(r.n_examples, 10u);
}

TEST(PairedTTest, ReferenceDifferences) {
    const std::vector<double> a = {1, 2, 3};
    const std::vector<double> b = {0, 0, 0};
    const auto r = paired_t_test(a, b);
    // mean 2, sd 1, n 3 -> t = 2 * sqrt(3); df 2: p = 1 - t / sqrt(2 + t^2)
    const double t = 2 * std::sqrt(3.0);
    EXPECT_NEAR(r.t, t, 1e-12);
    EXPECT_EQ(r.df, 2u);
    EXPECT_NEAR(r.p_two_sided, 1 - t / std::sqrt(2 + t * t), 1e-10);
    EXPECT_NEAR(r.t, 3.4641, 1e-3);
    EXPECT_NEAR(r.p_two_sided, 0.0742, 1e-3);
    EXPECT_FALSE(r.degenerate);
}

TEST(PairedTTest, SwappingNegatesT) {
    const std::vector<double> a = {0.8, 0.9, 0.85, 0.7};
    const std::vector<double> b = {0.6, 0.95, 0.5, 0.65};
    const auto ab = paired_t_test(a, b);
    const auto ba = paired_t_test(b, a);
    EXPECT_DOUBLE_EQ(ab.t, -ba.t);
    EXPECT_DOUBLE_EQ(ab.p_two_sided, ba.p_two_sided);
}

TEST(PairedTTest, ZeroVarianceIsDegenerate) {
    const std::vector<double> a = {1, 2, 3};
    const std::vector<double> b = {0, 1, 2};
    EXPECT_TRUE(paired_t_test(a, b).degenerate);
    EXPECT_TRUE(paired_t_test(a, a).degenerate);
}

TEST(PairedTTest, Errors) {
    const std::vector<double> one = {1};
    EXPECT_THROW(paired_t_test(one, one), lg4av::Error);
    const std::vector<double> two = {1, 2};
    const std::vector<double> three = {1, 2, 3};
    EXPECT_THROW(paired_t_test(two, three), lg4av::Error);
}

TEST(StudentT, MatchesBoostAcrossDegreesOfFreedom) {
    for (double df : {1.0, 2.0, 3.0, 5.0, 9.0, 30.0, 200.0}) {
        boost::math::students_t dist(df);
        for (double t : {0.0, 0.1, 0.7, 1.5, 2.2, 3.4641, 6.0, 15.0}) {
            const double expected = 2 * boost::math::cdf(boost::math::complement(dist, t));
            EXPECT_NEAR(student_t_two_sided_p(t, df), expected, 1e-10) << "df " << df << " t " << t;
            EXPECT_DOUBLE_EQ(student_t_two_sided_p(-t, df), student_t_two_sided_p(t, df));
        }
    }
}

TEST(IncompleteBeta, EndpointsAndSymmetry) {
    EXPECT_EQ(regularized_incomplete_beta(2, 3, 0), 0.0);
    EXPECT_EQ(regularized_incomplete_beta(2, 3, 1), 1.0);
    for (double x : {0.1, 0.35, 0.8}) {
        EXPECT_NEAR(regularized_incomplete_beta(2.5, 4, x) + regularized_incomplete_beta(4, 2.5, 1 - x), 1.0, 1e-12);
    }
    // I_x(1, 1) = x
    EXPECT_NEAR(regularized_incomplete_beta(1, 1, 0.3), 0.3, 1e-14);
}

TEST(AccuracyF1, PerfectAndOneOfEach) {
    const std::vector<double> s = {0.9, 0.1};
    const std::vector<int> y = {1, 0};
    const auto perfect = accuracy_f1(s, y, 0.5);
    EXPECT_EQ(perfect.accuracy, 1.0);
    EXPECT_EQ(perfect.f1, 1.0);
    // tp, fp, fn, tn once each
    const std::vector<double> s4 = {0.9, 0.8, 0.2, 0.1};
    const std::vector<int> y4 = {1, 0, 1, 0};
    const auto r = accuracy_f1(s4, y4, 0.5);
    EXPECT_EQ(r.accuracy, 0.5);
    EXPECT_EQ(r.f1, 0.5);
}

TEST(PairedTTest, ConstantDifferencesAreDegenerate) {
    const std::vector<double> a = {2, 3, 4, 5};
    const std::vector<double> b = {1, 2, 3, 4};
    EXPECT_TRUE(paired_t_test(a, b).degenerate);
}
