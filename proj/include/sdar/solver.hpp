#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include <Eigen/Cholesky>
#include <Eigen/Dense>

#include "sdar/error.hpp"
#include "sdar/glm.hpp"

namespace sdar {

/**
 * How the dual is scaled before support detection.
 *
 * Unit screens on beta + tau * d. MeanCurvature screens on
 * beta + (tau / wbar) * d with wbar = mean_i c''(x_i^T beta), which puts the
 * dual on the scale of a one-step Newton coefficient; for the Gaussian family
 * wbar = 1 and both rules coincide.
 */
enum class DualScaling { Unit, MeanCurvature };

struct SdarConfig {
    Index sparsity = 1;            // T: size of every active set
    double step_size = 1.0;        // tau, scales the dual before support detection
    DualScaling dual_scaling = DualScaling::MeanCurvature;
    int max_outer_iters = 50;
    int newton_max_iters = 50;
    double newton_grad_tol = 1e-8;
    double ridge_jitter = 1e-8;
    double coef_cap = 30.0;        // logistic only
    bool with_intercept = false;
};

inline void validate_config(const SdarConfig& cfg, Index n, Index p) {
    if (cfg.sparsity < 1) throw InvalidArgument("sparsity T must be >= 1");
    if (cfg.sparsity > std::min(n, p))
        throw InvalidArgument("sparsity T = " + std::to_string(cfg.sparsity) +
                              " exceeds min(n, p) = " + std::to_string(std::min(n, p)));
    if (!(cfg.step_size > 0.0 && cfg.step_size <= 1.0))
        throw InvalidArgument("step size tau must lie in (0, 1]");
    if (cfg.max_outer_iters < 1) throw InvalidArgument("max_outer_iters must be positive");
    if (cfg.newton_max_iters < 1) throw InvalidArgument("newton_max_iters must be positive");
    if (!(cfg.newton_grad_tol > 0.0)) throw InvalidArgument("newton_grad_tol must be positive");
    if (!(cfg.ridge_jitter >= 0.0)) throw InvalidArgument("ridge_jitter must be nonnegative");
    if (!(cfg.coef_cap > 0.0)) throw InvalidArgument("coef_cap must be positive");
}

/**
 * One primal-dual iterate.
 *
 * For iter >= 1, `active` is the set the restricted fit was solved on:
 * beta vanishes off it and dual vanishes on it.
 */
struct SdarState {
    VectorXd beta;
    VectorXd dual;     // -grad L(beta), zeroed on `active`
    double intercept = 0.0;
    Support active;
    Support inactive;
    int iter = 0;
    double nll = std::numeric_limits<double>::quiet_NaN();
    double mean_curvature = 1.0;  // mean_i c''(x_i^T beta)
    bool inner_converged = true;
};

enum class Termination { SupportStationary, MaxIters, CycleDetected };

inline const char* to_string(Termination t) noexcept {
    switch (t) {
    case Termination::SupportStationary: return "SupportStationary";
    case Termination::MaxIters: return "MaxIters";
    case Termination::CycleDetected: return "CycleDetected";
    }
    return "unknown";
}

struct FitResult {
    VectorXd beta;
    double intercept = 0.0;
    Support support;
    double nll = 0.0;
    double kkt_residual = 0.0;
    int iters = 0;
    Termination termination = Termination::SupportStationary;
    bool inner_converged = true;
};

/// Entries with |v_i| < sqrt(2 lambda) are zeroed; the boundary is kept.
inline VectorXd hard_threshold(const Eigen::Ref<const VectorXd>& v, double lambda) {
    if (!(lambda >= 0.0)) throw InvalidArgument("lambda must be nonnegative");
    const double cut = std::sqrt(2.0 * lambda);
    VectorXd out = v;
    for (Index i = 0; i < out.size(); ++i) {
        if (std::abs(out[i]) < cut) out[i] = 0.0;
    }
    return out;
}

/// Indices of the T largest |v_i|, ties broken by ascending index; returned sorted.
inline Support top_t_support(const Eigen::Ref<const VectorXd>& v, Index T) {
    const Index p = v.size();
    if (T < 1) throw InvalidArgument("T must be >= 1");
    if (T > p)
        throw InvalidArgument("T = " + std::to_string(T) + " exceeds vector length " + std::to_string(p));
    Support idx(static_cast<std::size_t>(p));
    std::iota(idx.begin(), idx.end(), Index{0});
    auto before = [&v](Index a, Index b) {
        const double ma = std::abs(v[a]);
        const double mb = std::abs(v[b]);
        return ma > mb || (ma == mb && a < b);
    };
    if (T < p) {
        std::nth_element(idx.begin(), idx.begin() + (T - 1), idx.end(), before);
        idx.resize(static_cast<std::size_t>(T));
    }
    std::sort(idx.begin(), idx.end());
    return idx;
}

inline Support complement(const Support& active, Index p) {
    Support out;
    out.reserve(static_cast<std::size_t>(p) - active.size());
    auto it = active.begin();
    for (Index j = 0; j < p; ++j) {
        if (it != active.end() && *it == j) {
            ++it;
        } else {
            out.push_back(j);
        }
    }
    return out;
}

struct RestrictedFit {
    VectorXd coef;        // over the active columns, intercept last when present
    double nll = 0.0;
    double grad_norm = 0.0;  // projected gradient sup-norm at `coef`
    int iterations = 0;
    bool converged = false;
};

namespace detail {

inline MatrixXd restricted_design(const Dataset& data, const Support& active, bool with_intercept) {
    MatrixXd Z(data.n(), static_cast<Index>(active.size()) + (with_intercept ? 1 : 0));
    for (std::size_t j = 0; j < active.size(); ++j) Z.col(static_cast<Index>(j)) = data.X.col(active[j]);
    if (with_intercept) Z.col(Z.cols() - 1).setOnes();
    return Z;
}

} // namespace detail

/**
 * Minimizes L restricted to the columns in `active` by damped Newton.
 *
 * Armijo backtracking uses contraction 0.5 and sufficient-decrease 1e-4. If the
 * Hessian factorization fails, ridge_jitter * I is added once before giving
 * up with SingularSystem. Logistic coefficients are boxed to [-coef_cap,
 * coef_cap]; coordinates pinned at the box with an outward gradient are held
 * fixed for the step. The intercept (last entry of `init` when
 * cfg.with_intercept) is never capped.
 */
inline RestrictedFit restricted_mle(const GlmFamily& family, const Dataset& data, const Support& active,
                                    const Eigen::Ref<const VectorXd>& init, const SdarConfig& cfg) {
    const Index na = static_cast<Index>(active.size());
    const Index m = na + (cfg.with_intercept ? 1 : 0);
    if (m == 0) throw InvalidArgument("restricted fit needs at least one column");
    if (init.size() != m)
        throw InvalidArgument("initial value has length " + std::to_string(init.size()) + ", expected " +
                              std::to_string(m));
    if (!init.allFinite()) throw InvalidArgument("initial value is not finite");
    for (Index j : active) {
        if (j < 0 || j >= data.p()) throw InvalidArgument("active index " + std::to_string(j) + " out of range");
    }

    const MatrixXd Z = detail::restricted_design(data, active, cfg.with_intercept);
    const double inv_n = 1.0 / static_cast<double>(data.n());
    const bool capped = family.is_logistic();
    const double cap = cfg.coef_cap;

    auto clip = [&](VectorXd& b) {
        if (!capped) return;
        for (Index j = 0; j < na; ++j) b[j] = std::clamp(b[j], -cap, cap);
    };

    RestrictedFit out;
    VectorXd b = init;
    clip(b);
    VectorXd theta = Z * b;
    detail::check_linear_predictor(theta);
    double f = detail::mean_loss(family, data.y, theta);

    std::vector<char> pinned(static_cast<std::size_t>(m), 0);
    auto projected_gradient = [&](const VectorXd& g) {
        VectorXd pg = g;
        for (Index j = 0; j < m; ++j) {
            pinned[static_cast<std::size_t>(j)] = 0;
            if (!capped || j >= na) continue;
            if ((b[j] >= cap && g[j] < 0.0) || (b[j] <= -cap && g[j] > 0.0)) {
                pg[j] = 0.0;
                pinned[static_cast<std::size_t>(j)] = 1;
            }
        }
        return pg;
    };

    VectorXd g = Z.transpose() * detail::score_residual(family, data.y, theta) * inv_n;
    VectorXd pg = projected_gradient(g);

    for (int it = 0; it < cfg.newton_max_iters; ++it) {
        if (pg.lpNorm<Eigen::Infinity>() <= cfg.newton_grad_tol) {
            out.converged = true;
            break;
        }
        std::vector<Index> free_idx;
        for (Index j = 0; j < m; ++j) {
            if (!pinned[static_cast<std::size_t>(j)]) free_idx.push_back(j);
        }
        const Index mf = static_cast<Index>(free_idx.size());
        const MatrixXd H = detail::weighted_gram(Z, detail::variances(family, theta));
        MatrixXd Hf(mf, mf);
        VectorXd gf(mf);
        for (Index a = 0; a < mf; ++a) {
            gf[a] = g[free_idx[static_cast<std::size_t>(a)]];
            for (Index c = 0; c < mf; ++c)
                Hf(a, c) = H(free_idx[static_cast<std::size_t>(a)], free_idx[static_cast<std::size_t>(c)]);
        }

        VectorXd step_f;
        Eigen::LLT<MatrixXd> llt(Hf);
        bool ok = llt.info() == Eigen::Success;
        if (ok) {
            step_f = llt.solve(-gf);
            ok = step_f.allFinite();
        }
        if (!ok) {
            MatrixXd Hj = Hf;
            Hj.diagonal().array() += cfg.ridge_jitter;
            llt.compute(Hj);
            ok = llt.info() == Eigen::Success;
            if (ok) {
                step_f = llt.solve(-gf);
                ok = step_f.allFinite();
            }
        }
        if (!ok) {
            std::string cols;
            for (Index j : active) cols += (cols.empty() ? "" : ",") + std::to_string(j);
            throw SingularSystem("restricted Hessian is singular on active set {" + cols + "}");
        }

        VectorXd step = VectorXd::Zero(m);
        for (Index a = 0; a < mf; ++a) step[free_idx[static_cast<std::size_t>(a)]] = step_f[a];

        auto evaluate = [&](double t, VectorXd& c, VectorXd& ct, double& fv) {
            c = b + t * step;
            clip(c);
            ct = Z * c;
            if (!ct.allFinite()) return false;
            fv = 0.0;
            for (Index i = 0; i < data.n(); ++i) {
                const double term = family.loss(data.y[i], ct[i]);
                if (!std::isfinite(term)) return false;
                fv += term;
            }
            fv *= inv_n;
            return true;
        };

        double t = 1.0;
        bool accepted = false;
        VectorXd cand;
        VectorXd cand_theta;
        double fc = f;
        for (int ls = 0; ls < 60; ++ls, t *= 0.5) {
            if (!evaluate(t, cand, cand_theta, fc)) continue;
            if (fc <= f + 1e-4 * g.dot(cand - b)) {
                accepted = true;
                break;
            }
            // At roundoff level the loss cannot certify descent; a full step
            // that shrinks the gradient is taken instead.
            if (ls == 0 && fc <= f + 64.0 * std::numeric_limits<double>::epsilon() * (1.0 + std::abs(f))) {
                const VectorXd gc = Z.transpose() * detail::score_residual(family, data.y, cand_theta) * inv_n;
                if (gc.lpNorm<Eigen::Infinity>() < g.lpNorm<Eigen::Infinity>()) {
                    accepted = true;
                    break;
                }
            }
        }
        // Under separation the loss keeps falling along the Newton direction;
        // doubling the step reaches the coefficient cap in few iterations.
        if (accepted && capped && t == 1.0) {
            VectorXd c2;
            VectorXd ct2;
            double f2 = fc;
            for (double te = 2.0; te <= 1e6; te *= 2.0) {
                if (!evaluate(te, c2, ct2, f2) || !(f2 < fc)) break;
                const bool same = c2 == cand;
                cand = c2;
                cand_theta = ct2;
                fc = f2;
                if (same) break;
            }
        }
        ++out.iterations;
        if (!accepted) break;
        const double moved = (cand - b).lpNorm<Eigen::Infinity>();
        b = std::move(cand);
        theta = std::move(cand_theta);
        f = fc;
        g = Z.transpose() * detail::score_residual(family, data.y, theta) * inv_n;
        pg = projected_gradient(g);
        if (moved <= 1e-15 * (1.0 + b.lpNorm<Eigen::Infinity>())) break;
    }

    out.grad_norm = pg.lpNorm<Eigen::Infinity>();
    if (out.grad_norm <= cfg.newton_grad_tol) out.converged = true;
    out.coef = std::move(b);
    out.nll = f;
    return out;
}

/// The vector whose top-T entries form the next active set.
inline VectorXd screening_vector(const SdarState& state, const SdarConfig& cfg) {
    double scale = cfg.step_size;
    if (cfg.dual_scaling == DualScaling::MeanCurvature) scale /= std::max(state.mean_curvature, 1e-12);
    return state.beta + scale * state.dual;
}

namespace detail {

/// Fills dual (= -grad L), nll and mean curvature of `s` from its beta.
inline void refresh_dual(const GlmFamily& family, const Dataset& data, SdarState& s) {
    const VectorXd theta = linear_predictor(data, s.beta, s.intercept);
    const VectorXd r = score_residual(family, data.y, theta);
    s.dual = -(data.X.transpose() * r) / static_cast<double>(data.n());
    s.nll = mean_loss(family, data.y, theta);
    s.mean_curvature = variances(family, theta).mean();
}

} // namespace detail

/// State at k = 0: beta^0 (zeros unless given), dual d^0 = -grad L(beta^0).
inline SdarState initial_state(const GlmFamily& family, const Dataset& data,
                               const std::optional<VectorXd>& warm_beta = std::nullopt,
                               double warm_intercept = 0.0) {
    SdarState s;
    s.beta = warm_beta ? *warm_beta : VectorXd::Zero(data.p());
    if (s.beta.size() != data.p()) throw InvalidArgument("warm start has the wrong length");
    s.intercept = warm_intercept;
    detail::refresh_dual(family, data, s);
    s.iter = 0;
    return s;
}

/**
 * One support-detection / root-finding step.
 *
 * A = top-T of the screening vector (beta + scaled dual); beta is refit on A (warm-started from the
 * current beta_A) and zeroed off A; the dual is -grad L off A and zero on A.
 */
inline SdarState gsdar_step(const GlmFamily& family, const Dataset& data, const SdarState& state,
                            const SdarConfig& cfg) {
    const Index p = data.p();
    Support active = top_t_support(screening_vector(state, cfg), cfg.sparsity);

    const Index na = static_cast<Index>(active.size());
    VectorXd init(na + (cfg.with_intercept ? 1 : 0));
    for (Index j = 0; j < na; ++j) init[j] = state.beta[active[static_cast<std::size_t>(j)]];
    if (cfg.with_intercept) init[na] = state.intercept;

    const RestrictedFit rf = restricted_mle(family, data, active, init, cfg);

    SdarState next;
    next.beta = VectorXd::Zero(p);
    for (Index j = 0; j < na; ++j) next.beta[active[static_cast<std::size_t>(j)]] = rf.coef[j];
    next.intercept = cfg.with_intercept ? rf.coef[na] : 0.0;
    detail::refresh_dual(family, data, next);
    for (Index j : active) next.dual[j] = 0.0;
    next.inactive = complement(active, p);
    next.active = std::move(active);
    next.iter = state.iter + 1;
    next.inner_converged = rf.converged;
    return next;
}

/// ||beta - H_lambda(beta + d)||_inf with d = -grad L(beta) and sqrt(2 lambda)
/// the T-th largest |beta + d|; the kept set follows the top-T tie-break.
inline double kkt_residual(const GlmFamily& family, const Dataset& data, const Eigen::Ref<const VectorXd>& beta,
                           double intercept, Index T) {
    const VectorXd d = -gradient(family, data, beta, intercept);
    const VectorXd v = beta + d;
    const Support kept = top_t_support(v, T);
    VectorXd thresholded = VectorXd::Zero(v.size());
    for (Index j : kept) thresholded[j] = v[j];
    return (beta - thresholded).lpNorm<Eigen::Infinity>();
}

inline double kkt_residual(const GlmFamily& family, const Dataset& data, const FitResult& fit, Index T) {
    return kkt_residual(family, data, fit.beta, fit.intercept, T);
}

struct NoObserver {
    void operator()(const SdarState&) const noexcept {}
};

/**
 * Runs support-detection / root-finding iterations from beta^0 (zero unless a
 * warm start is given) until the active set repeats.
 *
 * Stops with SupportStationary when the next active set equals the current
 * one, CycleDetected when it equals an earlier one, and MaxIters after
 * cfg.max_outer_iters steps. In the last two cases the visited iterate with
 * the smallest NLL is returned. `observer` sees every emitted state (k >= 1).
 */
template <class Observer = NoObserver>
FitResult gsdar_fit(const GlmFamily& family, const Dataset& data, const SdarConfig& cfg,
                    const std::optional<VectorXd>& warm_beta = std::nullopt, double warm_intercept = 0.0,
                    Observer&& observer = Observer{}) {
    validate_dataset(family, data);
    validate_config(cfg, data.n(), data.p());

    SdarState state = initial_state(family, data, warm_beta, warm_intercept);
    std::set<Support> visited;
    std::optional<SdarState> best;
    Termination why = Termination::MaxIters;
    int steps = 0;

    for (int k = 0; k < cfg.max_outer_iters; ++k) {
        SdarState next = gsdar_step(family, data, state, cfg);
        ++steps;
        observer(static_cast<const SdarState&>(next));
        if (!best || next.nll < best->nll) best = next;

        const Support upcoming = top_t_support(screening_vector(next, cfg), cfg.sparsity);
        if (upcoming == next.active) {
            why = Termination::SupportStationary;
            best = std::move(next);
            break;
        }
        visited.insert(next.active);
        if (visited.count(upcoming) != 0) {
            why = Termination::CycleDetected;
            break;
        }
        state = std::move(next);
    }

    FitResult fit;
    fit.beta = std::move(best->beta);
    fit.intercept = best->intercept;
    fit.support = std::move(best->active);
    fit.nll = best->nll;
    fit.iters = steps;
    fit.inner_converged = best->inner_converged;
    fit.termination = why;
    fit.kkt_residual = kkt_residual(family, data, fit.beta, fit.intercept, cfg.sparsity);
    return fit;
}

/// Class-1 probability cutoff at 0.5, i.e. theta >= 0.
inline VectorXd predict_labels(const Dataset& data, const FitResult& fit) {
    const VectorXd theta = linear_predictor(data, fit.beta, fit.intercept);
    return (theta.array() >= 0.0).cast<double>().matrix();
}

} // namespace sdar
