#include <cmath>
#include <set>

#include <gtest/gtest.h>

#include <sdar/sdar.hpp>

using namespace sdar;

namespace {

double corr(const VectorXd& a, const VectorXd& b) {
    const VectorXd ca = a.array() - a.mean();
    const VectorXd cb = b.array() - b.mean();
    return ca.dot(cb) / (ca.norm() * cb.norm());
}

} // namespace

TEST(Rng, CounterStreamIsReproducibleAndIndexable) {
    CounterRng a(42), b(42), c(43);
    for (int i = 0; i < 5; ++i) EXPECT_EQ(a(), b());
    EXPECT_NE(CounterRng(42)(), c());
    CounterRng d(42);
    EXPECT_EQ(d.at(3), CounterRng(42).at(3));
    d();
    d();
    d();
    EXPECT_EQ(d(), CounterRng(42).at(3));
    EXPECT_NE(derive_seed(1, 0), derive_seed(1, 1));
    EXPECT_NE(derive_seed(1, 0), derive_seed(2, 0));
}

TEST(DesignBanded, NoMixingGivesColumnsOfLengthSqrtN) {
    const MatrixXd X = gen_design_banded(50, 7, 0.0, 1);
    for (Index j = 0; j < 7; ++j) EXPECT_NEAR(X.col(j).norm(), std::sqrt(50.0), 1e-12);
}

TEST(DesignBanded, NeighbourCorrelation) {
    const MatrixXd X = gen_design_banded(10000, 3, 0.5, 2);
    // x1 = xbar1, x2 = xbar2 + 0.5 (xbar1 + xbar3): corr = 0.5 / sqrt(1 + 2 * 0.25).
    EXPECT_NEAR(corr(X.col(0), X.col(1)), 0.5 / std::sqrt(1.5), 0.02);
    EXPECT_NEAR(0.5 / std::sqrt(1.5), 0.4082, 1e-4);
    EXPECT_THROW(gen_design_banded(10, 2, 0.1, 1), InvalidArgument);
}

TEST(DesignAr1, IndependentColumnsHaveUnitVariance) {
    const MatrixXd X = gen_design_ar1(10000, 4, 0.0, 3);
    for (Index j = 0; j < 4; ++j) {
        const VectorXd c = X.col(j).array() - X.col(j).mean();
        EXPECT_NEAR(c.squaredNorm() / 9999.0, 1.0, 0.05);
    }
}

TEST(DesignAr1, LagTwoCorrelationIsRhoSquared) {
    const MatrixXd X = gen_design_ar1(20000, 6, 0.7, 4);
    EXPECT_NEAR(corr(X.col(1), X.col(3)), 0.49, 0.02);
    EXPECT_NEAR(corr(X.col(2), X.col(3)), 0.7, 0.02);
    EXPECT_THROW(gen_design_ar1(10, 3, 1.0, 1), InvalidArgument);
}

TEST(Coefficients, SupportSizeRangeAndSigns) {
    const Coefficients none = gen_coefficients(10, 0, 1.0, 2.0, false, 1);
    EXPECT_EQ(none.beta, VectorXd::Zero(10));
    EXPECT_TRUE(none.support.empty());

    int negatives = 0;
    for (std::uint64_t s = 0; s < 50; ++s) {
        const Coefficients c = gen_coefficients(100, 8, 1.0, 3.0, true, s);
        ASSERT_EQ(c.support.size(), 8u);
        ASSERT_TRUE(std::is_sorted(c.support.begin(), c.support.end()));
        EXPECT_EQ(nonzero_support(c.beta), c.support);
        for (Index j : c.support) {
            EXPECT_GE(std::abs(c.beta[j]), 1.0);
            EXPECT_LE(std::abs(c.beta[j]), 3.0);
            negatives += c.beta[j] < 0;
        }
        const Coefficients pos = gen_coefficients(100, 8, 1.0, 3.0, false, s);
        EXPECT_TRUE((pos.beta.array() >= 0.0).all());
    }
    EXPECT_GT(negatives, 150);
    EXPECT_LT(negatives, 250);
    EXPECT_THROW(gen_coefficients(5, 6, 1, 2, false, 1), InvalidArgument);
    EXPECT_THROW(gen_coefficients(5, 2, 2, 1, false, 1), InvalidArgument);
}

TEST(Responses, ZeroCoefficientsGiveFairCoins) {
    const MatrixXd X = gen_design_ar1(10000, 3, 0.0, 5);
    const VectorXd y = gen_bernoulli_responses(X, VectorXd::Zero(3), 6);
    EXPECT_GE(y.mean(), 0.47);
    EXPECT_LE(y.mean(), 0.53);
}

TEST(Responses, SaturatedLinearPredictorGivesOnes) {
    const MatrixXd X = MatrixXd::Ones(500, 1);
    const VectorXd y = gen_bernoulli_responses(X, VectorXd::Constant(1, 40.0), 7);
    EXPECT_EQ(y, VectorXd::Ones(500));
}

TEST(Responses, FrequencyMatchesSigmoid) {
    const MatrixXd X = MatrixXd::Ones(100000, 1);
    const VectorXd y = gen_bernoulli_responses(X, VectorXd::Ones(1), 8);
    EXPECT_NEAR(y.mean(), std::exp(1.0) / (1.0 + std::exp(1.0)), 0.01);
    EXPECT_NEAR(std::exp(1.0) / (1.0 + std::exp(1.0)), 0.7311, 1e-4);
}

TEST(Signal, DetectableThreshold) {
    EXPECT_NEAR(detectable_signal(300, 5000), 1.1914, 1e-4);
    EXPECT_NEAR(detectable_signal(200, 1000), 5.0 * std::sqrt(2.0 * std::log(1000.0) / 200.0), 1e-15);
}

TEST(Metrics, PerfectRecovery) {
    VectorXd b = VectorXd::Zero(6);
    b[1] = 2;
    b[4] = -1;
    EXPECT_EQ(metric_reerr(b, b), 0.0);
    const DiscoveryRates r = metric_discovery({1, 4}, {1, 4});
    EXPECT_EQ(r.apdr, 1.0);
    EXPECT_EQ(r.afdr, 0.0);
    EXPECT_EQ(r.adr, 2.0);
    EXPECT_EQ(metric_reerr(VectorXd::Zero(6), b), 1.0);
}

TEST(Metrics, DiscoveryExample) {
    const DiscoveryRates r = metric_discovery({0, 1, 2}, {0, 1, 3});
    EXPECT_DOUBLE_EQ(r.apdr, 2.0 / 3.0);
    EXPECT_DOUBLE_EQ(r.afdr, 1.0 / 3.0);
    EXPECT_DOUBLE_EQ(r.adr, 4.0 / 3.0);
    const DiscoveryRates empty = metric_discovery({}, {0, 1});
    EXPECT_EQ(empty.apdr, 0.0);
    EXPECT_EQ(empty.afdr, 0.0);
}

TEST(Metrics, AccuracyAndErrors) {
    VectorXd a(4), b(4);
    a << 1, 0, 1, 1;
    b << 1, 1, 1, 0;
    EXPECT_DOUBLE_EQ(metric_acrp(a, b), 0.5);
    EXPECT_THROW(metric_acrp(a, VectorXd::Zero(3)), InvalidArgument);
    EXPECT_THROW(metric_reerr(a, VectorXd::Zero(4)), InvalidArgument);
}

TEST(Replications, AdrIdentityAndRanges) {
    SimConfig sim;
    sim.n = 150;
    sim.p = 200;
    sim.K = 4;
    sim.rho = 0.3;
    sim.R = 5;
    sim.seed = 11;
    ReplicationSolver gs;
    ReplicationSolver ag;
    ag.method = Method::Agsdar;
    ag.agsdar.max_support = 10;
    for (const ReplicationSolver& s : {gs, ag}) {
        const MetricReport rep = run_replications(sim, s, 8);
        EXPECT_EQ(rep.failures, 0);
        EXPECT_NEAR(rep.adr, rep.apdr + 1.0 - rep.afdr, 1e-15);
        EXPECT_GE(rep.apdr, 0.0);
        EXPECT_LE(rep.apdr, 1.0);
        EXPECT_GE(rep.afdr, 0.0);
        EXPECT_LE(rep.afdr, 1.0);
        for (const ReplicationOutcome& o : rep.outcomes)
            EXPECT_NEAR(o.rates.adr, o.rates.apdr + 1.0 - o.rates.afdr, 1e-15);
    }
}

TEST(Replications, SingleReplicationEqualsItsOutcome) {
    SimConfig sim;
    sim.n = 120;
    sim.p = 150;
    sim.K = 3;
    sim.seed = 12;
    ReplicationSolver s;
    s.train_fraction = 0.8;
    const MetricReport rep = run_replications(sim, s, 1);
    const ReplicationOutcome o = run_one_replication(sim, s, 0);
    EXPECT_EQ(rep.reerr, o.reerr);
    EXPECT_EQ(rep.apdr, o.rates.apdr);
    EXPECT_EQ(rep.afdr, o.rates.afdr);
    EXPECT_EQ(rep.acrp, o.acrp);
    EXPECT_EQ(rep.iters_avg, o.iters);
    EXPECT_EQ(o.selected_T, 3);
}

TEST(Replications, DeterministicAcrossRunsAndThreadCounts) {
    SimConfig sim;
    sim.n = 100;
    sim.p = 300;
    sim.K = 5;
    sim.rho = 0.2;
    sim.scheme = DesignScheme::BandedNeighbor;
    sim.seed = 13;
    ReplicationSolver s;
    s.train_fraction = 0.8;
    const MetricReport a = run_replications(sim, s, 6, 1);
    const MetricReport b = run_replications(sim, s, 6, 1);
    const MetricReport c = run_replications(sim, s, 6, 3);
    for (const MetricReport* r : {&b, &c}) {
        EXPECT_EQ(a.reerr, r->reerr);
        EXPECT_EQ(a.acrp, r->acrp);
        EXPECT_EQ(a.apdr, r->apdr);
        EXPECT_EQ(a.afdr, r->afdr);
        EXPECT_EQ(a.iters_avg, r->iters_avg);
    }
    const Replicate r1 = simulate_replicate(sim, 2);
    const Replicate r2 = simulate_replicate(sim, 2);
    EXPECT_EQ(r1.data.X, r2.data.X);
    EXPECT_EQ(r1.data.y, r2.data.y);
    EXPECT_NE(simulate_replicate(sim, 3).data.X, r1.data.X);
}

TEST(Replications, FailuresAreRecordedNotThrown) {
    SimConfig sim;
    sim.n = 20;
    sim.p = 30;
    sim.K = 25;
    const MetricReport rep = run_replications(sim, ReplicationSolver{}, 2);
    EXPECT_EQ(rep.failures, 2);
    EXPECT_FALSE(rep.outcomes[0].error.empty());
}

TEST(CoefficientRange, SchemeDefaults) {
    SimConfig sim;
    sim.n = 300;
    sim.p = 5000;
    sim.scheme = DesignScheme::BandedNeighbor;
    const CoefficientRange banded = coefficient_range(sim);
    EXPECT_NEAR(banded.m1, 1.1914, 1e-4);
    EXPECT_DOUBLE_EQ(banded.m2, 100.0 * banded.m1);
    EXPECT_TRUE(banded.random_signs);
    sim.scheme = DesignScheme::Ar1;
    sim.R = 3;
    const CoefficientRange ar1 = coefficient_range(sim);
    EXPECT_EQ(ar1.m1, 1.0);
    EXPECT_EQ(ar1.m2, 3.0);
    EXPECT_FALSE(ar1.random_signs);
}
