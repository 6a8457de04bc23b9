#pragma once

#include <cmath>
#include <limits>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include "sdar/error.hpp"
#include "sdar/glm.hpp"
#include "sdar/solver.hpp"

namespace sdar {

enum class PathStop {
    HbicMinimum,         // full path, select argmin HBIC
    NllBelow,            // stop once NLL < epsilon, select that point
    SupportChangeBelow,  // stop once ||beta(T) - beta(T - step)||_2 < epsilon, select that point
    None                 // full path, select the last point
};

struct AgsdarConfig {
    Index increment = 1;                 // T grows by this amount per path point
    std::optional<Index> max_support;    // Q; defaults to floor(n / log n)
    PathStop stop = PathStop::HbicMinimum;
    double epsilon = 0.0;
    bool warm_start = true;
    unsigned threads = 1;                // cold-start mode only
    SdarConfig inner;                    // sparsity is overwritten per path point
};

/// floor(n / log n), clipped to min(n - 1, p).
inline Index default_max_support(Index n, Index p) {
    if (n < 2) return 1;
    const auto q = static_cast<Index>(std::floor(static_cast<double>(n) / std::log(static_cast<double>(n))));
    return std::max<Index>(1, std::min({q, n - 1, p}));
}

struct PathPoint {
    Index T = 0;
    std::optional<FitResult> fit;     // empty when the solver failed
    double hbic = std::numeric_limits<double>::infinity();
    std::string error;
};

struct PathResult {
    std::vector<PathPoint> fits;      // T = step, 2*step, ...
    double null_nll = 0.0;            // T = 0 fit, beta = 0
    double null_hbic = 0.0;
    Index selected_T = 0;
    FitResult selected_fit;
};

inline Index support_size(const VectorXd& beta) {
    return static_cast<Index>((beta.array() != 0.0).count());
}

/// 2n L(beta) + |supp(beta)| log(log n) log p.
inline double hbic(double nll, Index support_size, Index n, Index p) {
    if (n < 3) throw InvalidArgument("HBIC needs n >= 3");
    if (p < 1) throw InvalidArgument("HBIC needs p >= 1");
    const double dn = static_cast<double>(n);
    return 2.0 * dn * nll +
           static_cast<double>(support_size) * std::log(std::log(dn)) * std::log(static_cast<double>(p));
}

inline double hbic(const FitResult& fit, Index n, Index p) {
    return hbic(fit.nll, support_size(fit.beta), n, p);
}

/**
 * Sweeps T = step, 2 step, ... <= Q, warm-starting each fit from the previous
 * path point (the dual is recomputed from the gradient), and selects T by HBIC.
 * The null fit beta = 0 competes as T = 0. A failing path point is recorded
 * with its error and skipped.
 */
inline PathResult agsdar_fit(const GlmFamily& family, const Dataset& data, const AgsdarConfig& cfg) {
    validate_dataset(family, data);
    const Index n = data.n();
    const Index p = data.p();
    if (cfg.increment < 1) throw InvalidArgument("path increment must be >= 1");
    const Index Q = cfg.max_support.value_or(default_max_support(n, p));
    if (Q < 1 || Q > std::min(n - 1, p))
        throw InvalidArgument("max support Q = " + std::to_string(Q) + " must lie in [1, min(n - 1, p)]");

    PathResult out;
    SdarConfig inner = cfg.inner;
    inner.sparsity = 1;
    validate_config(inner, n, p);

    // With an intercept the null model still fits the intercept.
    FitResult null_fit;
    null_fit.beta = VectorXd::Zero(p);
    if (inner.with_intercept) {
        const Support none;
        VectorXd init = VectorXd::Zero(1);
        const RestrictedFit rf = restricted_mle(family, data, none, init, inner);
        null_fit.intercept = rf.coef[0];
        null_fit.nll = rf.nll;
    } else {
        null_fit.nll = negative_log_likelihood(family, data, null_fit.beta);
    }
    null_fit.iters = 0;
    out.null_nll = null_fit.nll;
    out.null_hbic = hbic(null_fit, n, p);

    std::vector<Index> Ts;
    for (Index T = cfg.increment; T <= Q; T += cfg.increment) Ts.push_back(T);
    out.fits.resize(Ts.size());

    auto run_point = [&](std::size_t i, const std::optional<VectorXd>& warm, double warm_icpt) {
        PathPoint& pt = out.fits[i];
        pt.T = Ts[i];
        SdarConfig c = inner;
        c.sparsity = Ts[i];
        try {
            pt.fit = gsdar_fit(family, data, c, warm, warm_icpt);
            pt.hbic = hbic(*pt.fit, n, p);
        } catch (const std::exception& e) {
            pt.fit.reset();
            pt.error = e.what();
        }
    };

    std::size_t used = Ts.size();
    if (cfg.warm_start) {
        std::optional<VectorXd> warm;
        double warm_icpt = null_fit.intercept;
        const VectorXd* prev_beta = &null_fit.beta;
        for (std::size_t i = 0; i < Ts.size(); ++i) {
            run_point(i, warm, warm_icpt);
            const PathPoint& pt = out.fits[i];
            if (!pt.fit) continue;
            bool stop = false;
            if (cfg.stop == PathStop::NllBelow) stop = pt.fit->nll < cfg.epsilon;
            if (cfg.stop == PathStop::SupportChangeBelow) stop = (pt.fit->beta - *prev_beta).norm() < cfg.epsilon;
            warm = pt.fit->beta;
            warm_icpt = pt.fit->intercept;
            prev_beta = &pt.fit->beta;
            if (stop) {
                used = i + 1;
                break;
            }
        }
    } else {
        const unsigned threads = std::max(1u, cfg.threads);
        std::vector<std::thread> pool;
        for (unsigned t = 0; t < threads; ++t) {
            pool.emplace_back([&, t] {
                for (std::size_t i = t; i < Ts.size(); i += threads) run_point(i, std::nullopt, 0.0);
            });
        }
        for (auto& th : pool) th.join();
        if (cfg.stop == PathStop::NllBelow || cfg.stop == PathStop::SupportChangeBelow) {
            const VectorXd* prev_beta = &null_fit.beta;
            for (std::size_t i = 0; i < Ts.size(); ++i) {
                const PathPoint& pt = out.fits[i];
                if (!pt.fit) continue;
                const bool stop = cfg.stop == PathStop::NllBelow
                                      ? pt.fit->nll < cfg.epsilon
                                      : (pt.fit->beta - *prev_beta).norm() < cfg.epsilon;
                prev_beta = &pt.fit->beta;
                if (stop) {
                    used = i + 1;
                    break;
                }
            }
        }
    }
    out.fits.resize(used);

    out.selected_T = 0;
    out.selected_fit = null_fit;
    if (cfg.stop == PathStop::HbicMinimum) {
        double best = out.null_hbic;
        for (const PathPoint& pt : out.fits) {
            if (pt.fit && pt.hbic < best) {
                best = pt.hbic;
                out.selected_T = pt.T;
                out.selected_fit = *pt.fit;
            }
        }
    } else {
        for (auto it = out.fits.rbegin(); it != out.fits.rend(); ++it) {
            if (it->fit) {
                out.selected_T = it->T;
                out.selected_fit = *it->fit;
                break;
            }
        }
    }
    return out;
}

} // namespace sdar
