#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numeric>
#include <optional>
#include <random>
#include <string>
#include <thread>
#include <vector>

#include "sdar/error.hpp"
#include "sdar/glm.hpp"
#include "sdar/libsvm.hpp"
#include "sdar/path.hpp"
#include "sdar/rng.hpp"
#include "sdar/solver.hpp"

namespace sdar {

namespace detail {

/// Uniform on the open interval (0, 1) from the top 53 bits.
inline double open_unit(CounterRng& rng) {
    return (static_cast<double>(rng() >> 11) + 0.5) * 0x1.0p-53;
}

} // namespace detail

/**
 * Banded-neighbour design: Xbar has i.i.d. N(0, 1) entries with every column
 * rescaled to length sqrt(n); x_1 = xbar_1, x_p = xbar_p and
 * x_j = xbar_j + rho (xbar_{j-1} + xbar_{j+1}) otherwise. Mixed columns are
 * not renormalized.
 */
inline MatrixXd gen_design_banded(Index n, Index p, double rho, std::uint64_t seed) {
    if (p < 3) throw InvalidArgument("banded design needs p >= 3");
    if (n < 1) throw InvalidArgument("design needs n >= 1");
    CounterRng rng(seed);
    std::normal_distribution<double> normal;
    MatrixXd base(n, p);
    for (Index j = 0; j < p; ++j) {
        for (Index i = 0; i < n; ++i) base(i, j) = normal(rng);
        const double norm = base.col(j).norm();
        base.col(j) *= std::sqrt(static_cast<double>(n)) / norm;
    }
    MatrixXd X = base;
    for (Index j = 1; j + 1 < p; ++j) X.col(j) += rho * (base.col(j - 1) + base.col(j + 1));
    return X;
}

/// Rows i.i.d. N(0, Sigma) with Sigma_ij = rho^|i-j|, via the AR(1) recursion
/// z_1 ~ N(0, 1), z_j = rho z_{j-1} + sqrt(1 - rho^2) e_j.
inline MatrixXd gen_design_ar1(Index n, Index p, double rho, std::uint64_t seed) {
    if (!(rho >= 0.0 && rho < 1.0)) throw InvalidArgument("AR(1) correlation must lie in [0, 1)");
    if (n < 1 || p < 1) throw InvalidArgument("design needs n, p >= 1");
    CounterRng rng(seed);
    std::normal_distribution<double> normal;
    const double innov = std::sqrt(1.0 - rho * rho);
    MatrixXd X(n, p);
    for (Index i = 0; i < n; ++i) {
        double z = normal(rng);
        X(i, 0) = z;
        for (Index j = 1; j < p; ++j) {
            z = rho * z + innov * normal(rng);
            X(i, j) = z;
        }
    }
    return X;
}

struct Coefficients {
    VectorXd beta;
    Support support;  // ascending
};

/// K nonzero entries at a uniformly random support, magnitudes i.i.d.
/// Uniform(m1, m2), with independent random signs when `random_signs`.
inline Coefficients gen_coefficients(Index p, Index K, double m1, double m2, bool random_signs,
                                     std::uint64_t seed) {
    if (K < 0 || K > p) throw InvalidArgument("need 0 <= K <= p");
    if (!(m1 > 0.0 && m1 <= m2)) throw InvalidArgument("need 0 < m1 <= m2");
    CounterRng rng(seed);
    Coefficients out;
    out.beta = VectorXd::Zero(p);
    std::vector<Index> perm(static_cast<std::size_t>(p));
    std::iota(perm.begin(), perm.end(), Index{0});
    for (Index i = 0; i < K; ++i) {
        const auto span = static_cast<std::uint64_t>(p - i);
        const Index j = i + static_cast<Index>(rng() % span);
        std::swap(perm[static_cast<std::size_t>(i)], perm[static_cast<std::size_t>(j)]);
    }
    out.support.assign(perm.begin(), perm.begin() + K);
    std::sort(out.support.begin(), out.support.end());
    for (Index j : out.support) {
        double v = m1 + (m2 - m1) * detail::open_unit(rng);
        if (random_signs && (rng() >> 63) != 0) v = -v;
        out.beta[j] = v;
    }
    return out;
}

/// y_i ~ Bernoulli(sigmoid(x_i^T beta)).
inline VectorXd gen_bernoulli_responses(const MatrixXd& X, const Eigen::Ref<const VectorXd>& beta,
                                        std::uint64_t seed) {
    if (X.cols() != beta.size()) throw InvalidArgument("coefficient length does not match design");
    const VectorXd theta = X * beta;
    const GlmFamily logistic = GlmFamily::logistic();
    CounterRng rng(seed);
    VectorXd y(X.rows());
    for (Index i = 0; i < X.rows(); ++i) {
        const double u = detail::open_unit(rng);
        y[i] = u < logistic.mean(theta[i]) ? 1.0 : 0.0;
    }
    return y;
}

/// 5 sqrt(2 log p / n).
inline double detectable_signal(Index n, Index p) {
    return 5.0 * std::sqrt(2.0 * std::log(static_cast<double>(p)) / static_cast<double>(n));
}

// ---------------------------------------------------------------------------
// Metrics (single replication)

/// ||beta_hat - beta_star||_2 / ||beta_star||_2.
inline double metric_reerr(const Eigen::Ref<const VectorXd>& beta_hat, const Eigen::Ref<const VectorXd>& beta_star) {
    const double denom = beta_star.norm();
    if (!(denom > 0.0)) throw InvalidArgument("relative error needs a nonzero true coefficient vector");
    return (beta_hat - beta_star).norm() / denom;
}

/// Fraction of matching labels.
inline double metric_acrp(const Eigen::Ref<const VectorXd>& y_pred, const Eigen::Ref<const VectorXd>& y_true) {
    if (y_pred.size() != y_true.size()) throw InvalidArgument("prediction and truth lengths differ");
    if (y_true.size() == 0) throw InvalidArgument("accuracy needs at least one observation");
    return static_cast<double>((y_pred.array() == y_true.array()).count()) / static_cast<double>(y_true.size());
}

struct DiscoveryRates {
    double apdr = 0.0;
    double afdr = 0.0;
    double adr = 0.0;
};

/// |S ^ S*| / |S*|, |S \ S*| / |S| (0 for empty S), and pdr + 1 - fdr.
inline DiscoveryRates metric_discovery(const Support& support_hat, const Support& support_star) {
    Support hat = support_hat;
    Support star = support_star;
    std::sort(hat.begin(), hat.end());
    std::sort(star.begin(), star.end());
    Support common;
    std::set_intersection(hat.begin(), hat.end(), star.begin(), star.end(), std::back_inserter(common));
    DiscoveryRates r;
    if (star.empty()) throw InvalidArgument("positive discovery rate needs a nonempty true support");
    r.apdr = static_cast<double>(common.size()) / static_cast<double>(star.size());
    r.afdr = hat.empty() ? 0.0
                         : static_cast<double>(hat.size() - common.size()) / static_cast<double>(hat.size());
    r.adr = r.apdr + (1.0 - r.afdr);
    return r;
}

inline Support nonzero_support(const VectorXd& beta) {
    Support s;
    for (Index j = 0; j < beta.size(); ++j) {
        if (beta[j] != 0.0) s.push_back(j);
    }
    return s;
}

// ---------------------------------------------------------------------------
// Replication harness

enum class DesignScheme { BandedNeighbor, Ar1 };

struct CoefficientRange {
    double m1 = 1.0;
    double m2 = 2.0;
    bool random_signs = false;
};

struct SimConfig {
    Index n = 100;
    Index p = 500;
    Index K = 5;
    double rho = 0.0;
    double R = 10.0;  // m2 / m1 for the AR(1) scheme
    DesignScheme scheme = DesignScheme::Ar1;
    std::uint64_t seed = 1;
    std::optional<CoefficientRange> coef;  // overrides the scheme's default rule
};

/**
 * Banded scheme: m1 = 5 sqrt(2 log p / n), m2 = 100 m1, random signs.
 * AR(1) scheme: m1 = 1, m2 = R, all positive.
 */
inline CoefficientRange coefficient_range(const SimConfig& cfg) {
    if (cfg.coef) return *cfg.coef;
    if (cfg.scheme == DesignScheme::BandedNeighbor) {
        const double m1 = detectable_signal(cfg.n, cfg.p);
        return {m1, 100.0 * m1, true};
    }
    return {1.0, cfg.R, false};
}

struct Replicate {
    Dataset data;
    Coefficients truth;
    std::uint64_t seed = 0;  // per-replication stream
};

/// Seeds for replication r: stream r of cfg.seed, then sub-streams 0..3 for
/// design, coefficients, responses and the train/test split.
inline Replicate simulate_replicate(const SimConfig& cfg, std::uint64_t rep) {
    if (cfg.K > std::min(cfg.n, cfg.p)) throw InvalidArgument("need K <= min(n, p)");
    Replicate r;
    r.seed = derive_seed(cfg.seed, rep);
    r.data.X = cfg.scheme == DesignScheme::BandedNeighbor ? gen_design_banded(cfg.n, cfg.p, cfg.rho, derive_seed(r.seed, 0))
                                                           : gen_design_ar1(cfg.n, cfg.p, cfg.rho, derive_seed(r.seed, 0));
    const CoefficientRange range = coefficient_range(cfg);
    r.truth = gen_coefficients(cfg.p, cfg.K, range.m1, range.m2, range.random_signs, derive_seed(r.seed, 1));
    r.data.y = gen_bernoulli_responses(r.data.X, r.truth.beta, derive_seed(r.seed, 2));
    return r;
}

enum class Method { Gsdar, Agsdar };

inline SdarConfig with_sparsity(Index T, SdarConfig cfg = {}) {
    cfg.sparsity = T;
    return cfg;
}

struct ReplicationSolver {
    Method method = Method::Gsdar;
    SdarConfig sdar = with_sparsity(0);   // sparsity <= 0 means T = K
    AgsdarConfig agsdar;
    std::optional<double> train_fraction; // set for classification-accuracy runs
};

struct ReplicationOutcome {
    bool ok = false;
    std::string error;
    double reerr = 0.0;
    double linf_error = 0.0;
    double acrp = std::numeric_limits<double>::quiet_NaN();
    DiscoveryRates rates;
    int iters = 0;
    Index selected_T = 0;
    Support support;
    Support support_star;
};

struct MetricReport {
    double reerr = 0.0;
    double acrp = std::numeric_limits<double>::quiet_NaN();
    double apdr = 0.0;
    double afdr = 0.0;
    double adr = 0.0;
    double iters_avg = 0.0;
    int reps = 0;
    int failures = 0;
    std::vector<ReplicationOutcome> outcomes;  // by replication index
};

inline ReplicationOutcome run_one_replication(const SimConfig& sim, const ReplicationSolver& solver, std::uint64_t rep) {
    ReplicationOutcome o;
    try {
        const Replicate r = simulate_replicate(sim, rep);
        const GlmFamily family = GlmFamily::logistic();
        Dataset train = r.data;
        std::optional<Dataset> test;
        if (solver.train_fraction) {
            Split s = train_test_split(r.data, *solver.train_fraction, derive_seed(r.seed, 3));
            train = std::move(s.train);
            if (s.test.n() > 0) test = std::move(s.test);
        }
        FitResult fit;
        if (solver.method == Method::Gsdar) {
            SdarConfig c = solver.sdar;
            if (c.sparsity <= 0) c.sparsity = sim.K;
            fit = gsdar_fit(family, train, c);
            o.selected_T = c.sparsity;
        } else {
            const PathResult path = agsdar_fit(family, train, solver.agsdar);
            fit = path.selected_fit;
            o.selected_T = path.selected_T;
        }
        o.support = solver.method == Method::Gsdar ? fit.support : nonzero_support(fit.beta);
        o.support_star = r.truth.support;
        o.reerr = metric_reerr(fit.beta, r.truth.beta);
        o.linf_error = (fit.beta - r.truth.beta).lpNorm<Eigen::Infinity>();
        o.rates = metric_discovery(o.support, r.truth.support);
        o.iters = fit.iters;
        if (test) o.acrp = metric_acrp(predict_labels(*test, fit), test->y);
        o.ok = true;
    } catch (const std::exception& e) {
        o.ok = false;
        o.error = e.what();
    }
    return o;
}

/**
 * Runs `reps` independent replications and averages their metrics over the
 * successful ones. Replication r always uses stream r of sim.seed, so the
 * report does not depend on `threads`.
 */
inline MetricReport run_replications(const SimConfig& sim, const ReplicationSolver& solver, int reps,
                                     unsigned threads = 1) {
    if (reps < 1) throw InvalidArgument("need at least one replication");
    MetricReport report;
    report.reps = reps;
    report.outcomes.resize(static_cast<std::size_t>(reps));
    const unsigned workers = std::max(1u, std::min(threads, static_cast<unsigned>(reps)));
    if (workers == 1) {
        for (int r = 0; r < reps; ++r)
            report.outcomes[static_cast<std::size_t>(r)] = run_one_replication(sim, solver, static_cast<std::uint64_t>(r));
    } else {
        std::vector<std::thread> pool;
        for (unsigned t = 0; t < workers; ++t) {
            pool.emplace_back([&, t] {
                for (int r = static_cast<int>(t); r < reps; r += static_cast<int>(workers))
                    report.outcomes[static_cast<std::size_t>(r)] =
                        run_one_replication(sim, solver, static_cast<std::uint64_t>(r));
            });
        }
        for (auto& th : pool) th.join();
    }

    int ok = 0;
    double acrp_sum = 0.0;
    int acrp_count = 0;
    for (const ReplicationOutcome& o : report.outcomes) {
        if (!o.ok) {
            ++report.failures;
            continue;
        }
        ++ok;
        report.reerr += o.reerr;
        report.apdr += o.rates.apdr;
        report.afdr += o.rates.afdr;
        report.iters_avg += o.iters;
        if (!std::isnan(o.acrp)) {
            acrp_sum += o.acrp;
            ++acrp_count;
        }
    }
    if (ok > 0) {
        report.reerr /= ok;
        report.apdr /= ok;
        report.afdr /= ok;
        report.iters_avg /= ok;
    }
    report.adr = report.apdr + (1.0 - report.afdr);
    if (acrp_count > 0) report.acrp = acrp_sum / acrp_count;
    return report;
}

} // namespace sdar
