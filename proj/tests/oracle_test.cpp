#include <cmath>

#include <gtest/gtest.h>

#include <sdar/sdar.hpp>

#include "test_support.hpp"

using namespace sdar;

TEST(Binomial, SmallValues) {
    EXPECT_EQ(binomial(10, 2), 45.0);
    EXPECT_EQ(binomial(5, 0), 1.0);
    EXPECT_EQ(binomial(5, 6), 0.0);
    EXPECT_EQ(binomial(1000, 3), 166167000.0);
}

TEST(BestSubset, OrthogonalGaussianDesignPicksTopCorrelations) {
    const GlmFamily f = GlmFamily::gaussian();
    Dataset d;
    d.X = fixtures::orthogonal_design(8);
    d.y = fixtures::random_vector(8, 77);
    const VectorXd z = d.X.transpose() * d.y / 8.0;
    for (Index T = 1; T <= 4; ++T) {
        const OracleResult o = best_subset_exhaustive(f, d, T);
        EXPECT_EQ(o.support, top_t_support(z, T));
        EXPECT_EQ(o.supports_evaluated, static_cast<std::size_t>(binomial(8, T)));
        for (Index j : o.support) EXPECT_NEAR(o.beta[j], z[j], 1e-12);
    }
}

TEST(BestSubset, FullSupportIsTheUnrestrictedFit) {
    const GlmFamily f = GlmFamily::gaussian();
    const Dataset d = fixtures::random_dataset(f, 30, 5, 3);
    const OracleResult o = best_subset_exhaustive(f, d, 5);
    const VectorXd ls = (d.X.transpose() * d.X).ldlt().solve(d.X.transpose() * d.y);
    EXPECT_EQ(o.supports_evaluated, 1u);
    EXPECT_LT((o.beta - ls).lpNorm<Eigen::Infinity>(), 1e-12);
}

TEST(BestSubset, IsNoWorseThanAnyEnumeratedSupport) {
    const GlmFamily f = GlmFamily::logistic();
    const Dataset d = fixtures::random_dataset(f, 60, 7, 5, 0.5);
    const OracleResult o = best_subset_exhaustive(f, d, 2);
    SdarConfig cfg;
    cfg.newton_grad_tol = 1e-10;
    for (Index a = 0; a < 7; ++a)
        for (Index b = a + 1; b < 7; ++b) {
            const RestrictedFit rf = restricted_mle(f, d, Support{a, b}, VectorXd::Zero(2), cfg);
            EXPECT_LE(o.nll, rf.nll + 1e-10);
        }
}

TEST(BestSubset, AtMostModeCanPreferSmallerSupports) {
    const GlmFamily f = GlmFamily::gaussian();
    const Dataset d = fixtures::random_dataset(f, 30, 5, 4);
    const OracleResult exact = best_subset_exhaustive(f, d, 2, SubsetMode::Exactly);
    const OracleResult at_most = best_subset_exhaustive(f, d, 2, SubsetMode::AtMost);
    EXPECT_EQ(at_most.supports_evaluated, 15u);
    EXPECT_LE(at_most.nll, exact.nll);
}

TEST(BestSubset, RecoversTheTruthAtHighSignal) {
    const GlmFamily f = GlmFamily::logistic();
    int hits = 0;
    for (std::uint64_t rep = 0; rep < 100; ++rep) {
        const Replicate r = fixtures::strong_signal_instance(100, 10, 2, 81, rep);
        if (best_subset_exhaustive(f, r.data, 2).support == r.truth.support) ++hits;
    }
    EXPECT_GE(hits, 95);
}

TEST(BestSubset, RefusesOversizedEnumerations) {
    const Dataset d = fixtures::random_dataset(GlmFamily::gaussian(), 20, 200, 1);
    try {
        best_subset_exhaustive(GlmFamily::gaussian(), d, 4);
        FAIL() << "expected InvalidArgument";
    } catch (const InvalidArgument& e) {
        EXPECT_NE(std::string(e.what()).find("C(200, 4)"), std::string::npos) << e.what();
    }
    EXPECT_THROW(best_subset_exhaustive(GlmFamily::gaussian(), d, 0), InvalidArgument);
}
