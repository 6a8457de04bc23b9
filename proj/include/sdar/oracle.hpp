#pragma once

#include <cmath>
#include <limits>
#include <string>
#include <vector>

#include "sdar/error.hpp"
#include "sdar/glm.hpp"
#include "sdar/solver.hpp"

namespace sdar {

struct OracleResult {
    Support support;
    VectorXd beta;   // length p
    double nll = std::numeric_limits<double>::infinity();
    std::size_t supports_evaluated = 0;
};

enum class SubsetMode { Exactly, AtMost };

/// C(p, k) as a double (exact well past the 1e6 budget).
inline double binomial(Index p, Index k) {
    if (k < 0 || k > p) return 0.0;
    k = std::min(k, p - k);
    double c = 1.0;
    for (Index i = 1; i <= k; ++i) c = c * static_cast<double>(p - k + i) / static_cast<double>(i);
    return std::round(c);
}

/**
 * Exact best-subset fit by enumeration: every support of size T (or of every
 * size 1..T in AtMost mode) is refit with restricted_mle at grad tolerance
 * 1e-10 and the minimum-NLL support wins, ties going to the lexicographically
 * smallest support. Refuses more than `budget` supports.
 */
inline OracleResult best_subset_exhaustive(const GlmFamily& family, const Dataset& data, Index T,
                                           SubsetMode mode = SubsetMode::Exactly, SdarConfig inner = {},
                                           double budget = 1e6) {
    validate_dataset(family, data);
    const Index p = data.p();
    if (T < 1 || T > p) throw InvalidArgument("oracle needs 1 <= T <= p");
    double count = 0.0;
    for (Index k = (mode == SubsetMode::Exactly ? T : 1); k <= T; ++k) count += binomial(p, k);
    if (count > budget)
        throw InvalidArgument("oracle would enumerate " + std::to_string(static_cast<long long>(count)) +
                              " supports (C(" + std::to_string(p) + ", " + std::to_string(T) + ") = " +
                              std::to_string(static_cast<long long>(binomial(p, T))) + "), budget is " +
                              std::to_string(static_cast<long long>(budget)));

    inner.newton_grad_tol = 1e-10;
    inner.newton_max_iters = std::max(inner.newton_max_iters, 100);
    inner.with_intercept = false;

    OracleResult best;
    // Lexicographic order over (size, indices) within each size; sizes ascend,
    // so a strict improvement test keeps the earliest support on ties.
    for (Index k = (mode == SubsetMode::Exactly ? T : 1); k <= T; ++k) {
        Support s(static_cast<std::size_t>(k));
        for (Index i = 0; i < k; ++i) s[static_cast<std::size_t>(i)] = i;
        while (true) {
            const RestrictedFit rf = restricted_mle(family, data, s, VectorXd::Zero(k), inner);
            ++best.supports_evaluated;
            if (rf.nll < best.nll || (rf.nll == best.nll && s < best.support)) {
                best.nll = rf.nll;
                best.support = s;
                best.beta = VectorXd::Zero(p);
                for (Index i = 0; i < k; ++i) best.beta[s[static_cast<std::size_t>(i)]] = rf.coef[i];
            }
            Index i = k - 1;
            while (i >= 0 && s[static_cast<std::size_t>(i)] == p - k + i) --i;
            if (i < 0) break;
            ++s[static_cast<std::size_t>(i)];
            for (Index j = i + 1; j < k; ++j) s[static_cast<std::size_t>(j)] = s[static_cast<std::size_t>(j - 1)] + 1;
        }
    }
    return best;
}

/// Central differences of the NLL, componentwise with step h.
inline VectorXd finite_difference_gradient(const GlmFamily& family, const Dataset& data,
                                           const Eigen::Ref<const VectorXd>& beta, double h) {
    if (!(h > 0.0)) throw InvalidArgument("finite-difference step must be positive");
    VectorXd g(beta.size());
    VectorXd probe = beta;
    for (Index j = 0; j < beta.size(); ++j) {
        const double orig = probe[j];
        probe[j] = orig + h;
        const double up = negative_log_likelihood(family, data, probe);
        probe[j] = orig - h;
        const double down = negative_log_likelihood(family, data, probe);
        probe[j] = orig;
        g[j] = (up - down) / (2.0 * h);
    }
    return g;
}

} // namespace sdar
