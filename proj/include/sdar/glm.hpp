#pragma once

#include <algorithm>
#include <cmath>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

#include "sdar/error.hpp"

namespace sdar {

using Eigen::Index;
using Eigen::MatrixXd;
using Eigen::VectorXd;

/// Sorted, 0-based column indices.
using Support = std::vector<Index>;

enum class FamilyKind { Logistic, Gaussian };

/**
 * Exponential family with density exp[y*theta - c(theta) + d(y)].
 *
 * Logistic: c(theta) = log(1 + e^theta), d(y) = 0.
 * Gaussian: c(theta) = theta^2 / 2, d(y) = -y^2 / 2 (unit dispersion).
 */
class GlmFamily {
public:
    constexpr explicit GlmFamily(FamilyKind kind = FamilyKind::Logistic) noexcept : kind_(kind) {}

    static constexpr GlmFamily logistic() noexcept { return GlmFamily(FamilyKind::Logistic); }
    static constexpr GlmFamily gaussian() noexcept { return GlmFamily(FamilyKind::Gaussian); }

    constexpr FamilyKind kind() const noexcept { return kind_; }
    constexpr bool is_logistic() const noexcept { return kind_ == FamilyKind::Logistic; }

    std::string_view name() const noexcept {
        return kind_ == FamilyKind::Logistic ? "logistic" : "gaussian";
    }

    /// c(theta). The logistic branch is max(theta, 0) + log1p(e^-|theta|).
    double cumulant(double theta) const noexcept {
        if (kind_ == FamilyKind::Gaussian) return 0.5 * theta * theta;
        return std::max(theta, 0.0) + std::log1p(std::exp(-std::abs(theta)));
    }

    /// c'(theta), the mean of y.
    double mean(double theta) const noexcept {
        if (kind_ == FamilyKind::Gaussian) return theta;
        if (theta >= 0.0) return 1.0 / (1.0 + std::exp(-theta));
        const double e = std::exp(theta);
        return e / (1.0 + e);
    }

    /// c''(theta), the variance function.
    double variance(double theta) const noexcept {
        if (kind_ == FamilyKind::Gaussian) return 1.0;
        const double e = std::exp(-std::abs(theta));
        const double denom = 1.0 + e;
        return e / (denom * denom);
    }

    double base_measure(double y) const noexcept {
        return kind_ == FamilyKind::Gaussian ? -0.5 * y * y : 0.0;
    }

    /// Per-observation loss c(theta) - y*theta - d(y).
    double loss(double y, double theta) const noexcept {
        if (kind_ == FamilyKind::Gaussian) {
            const double r = y - theta;
            return 0.5 * r * r;
        }
        return cumulant(theta) - y * theta;
    }

private:
    FamilyKind kind_;
};

inline GlmFamily parse_family(std::string_view name) {
    if (name == "logistic" || name == "binomial") return GlmFamily::logistic();
    if (name == "gaussian" || name == "linear") return GlmFamily::gaussian();
    throw InvalidArgument("unknown family '" + std::string(name) + "'");
}

struct Dataset {
    MatrixXd X;  // n x p, observations in rows
    VectorXd y;
    std::vector<std::string> feature_names;

    Index n() const noexcept { return X.rows(); }
    Index p() const noexcept { return X.cols(); }
};

namespace detail {

/// Response length, finiteness and logistic labels; O(n).
inline void check_response(const GlmFamily& family, const Dataset& data) {
    if (data.y.size() != data.n())
        throw InvalidArgument("response length " + std::to_string(data.y.size()) +
                              " does not match n = " + std::to_string(data.n()));
    if (!data.y.allFinite()) throw InvalidArgument("response has non-finite entries");
    if (family.is_logistic()) {
        for (Index i = 0; i < data.n(); ++i) {
            if (data.y[i] != 0.0 && data.y[i] != 1.0)
                throw InvalidArgument("logistic response at row " + std::to_string(i) +
                                      " is not in {0, 1}");
        }
    }
}

} // namespace detail

/// Throws InvalidArgument when shapes disagree, entries are non-finite or
/// logistic responses leave {0, 1}.
inline void validate_dataset(const GlmFamily& family, const Dataset& data) {
    if (data.n() == 0 || data.p() == 0)
        throw InvalidArgument("dataset must have n >= 1 and p >= 1");
    if (!data.X.allFinite()) throw InvalidArgument("design matrix has non-finite entries");
    detail::check_response(family, data);
}

namespace detail {

inline void check_linear_predictor(const VectorXd& theta) {
    for (Index i = 0; i < theta.size(); ++i) {
        if (!std::isfinite(theta[i]))
            throw NumericOverflow("non-finite linear predictor at row " + std::to_string(i), i);
    }
}

inline double mean_loss(const GlmFamily& family, const VectorXd& y, const VectorXd& theta) {
    double total = 0.0;
    for (Index i = 0; i < y.size(); ++i) {
        const double term = family.loss(y[i], theta[i]);
        if (!std::isfinite(term))
            throw NumericOverflow("non-finite loss term at row " + std::to_string(i), i);
        total += term;
    }
    return total / static_cast<double>(y.size());
}

/// mu - y, the per-observation score residual.
inline VectorXd score_residual(const GlmFamily& family, const VectorXd& y, const VectorXd& theta) {
    VectorXd r(y.size());
    for (Index i = 0; i < y.size(); ++i) r[i] = family.mean(theta[i]) - y[i];
    return r;
}

inline VectorXd variances(const GlmFamily& family, const VectorXd& theta) {
    VectorXd w(theta.size());
    for (Index i = 0; i < theta.size(); ++i) w[i] = family.variance(theta[i]);
    return w;
}

/// Gathers the listed columns into a dense n x |cols| matrix.
inline MatrixXd gather_columns(const MatrixXd& X, const Support& cols) {
    MatrixXd out(X.rows(), static_cast<Index>(cols.size()));
    for (std::size_t j = 0; j < cols.size(); ++j) out.col(static_cast<Index>(j)) = X.col(cols[j]);
    return out;
}

/// (1/n) Z^T diag(w) Z, symmetric to the last bit.
inline MatrixXd weighted_gram(const MatrixXd& Z, const VectorXd& w) {
    const Index m = Z.cols();
    MatrixXd scaled = w.array().sqrt().matrix().asDiagonal() * Z;
    MatrixXd H = MatrixXd::Zero(m, m);
    H.selfadjointView<Eigen::Lower>().rankUpdate(scaled.transpose(), 1.0 / static_cast<double>(Z.rows()));
    H.triangularView<Eigen::StrictlyUpper>() = H.transpose();
    return H;
}

} // namespace detail

/// theta = X beta + intercept, checked for finiteness.
inline VectorXd linear_predictor(const Dataset& data, const Eigen::Ref<const VectorXd>& beta,
                                 double intercept = 0.0) {
    if (beta.size() != data.p())
        throw InvalidArgument("coefficient length " + std::to_string(beta.size()) +
                              " does not match p = " + std::to_string(data.p()));
    VectorXd theta = data.X * beta;
    if (intercept != 0.0) theta.array() += intercept;
    detail::check_linear_predictor(theta);
    return theta;
}

/// L(beta) = -(1/n) sum_i [y_i theta_i - c(theta_i) + d(y_i)].
inline double negative_log_likelihood(const GlmFamily& family, const Dataset& data,
                                      const Eigen::Ref<const VectorXd>& beta, double intercept = 0.0) {
    detail::check_response(family, data);
    const VectorXd theta = linear_predictor(data, beta, intercept);
    return detail::mean_loss(family, data.y, theta);
}

/// (1/n) X^T (c'(X beta) - y).
inline VectorXd gradient(const GlmFamily& family, const Dataset& data,
                         const Eigen::Ref<const VectorXd>& beta, double intercept = 0.0) {
    const VectorXd theta = linear_predictor(data, beta, intercept);
    const VectorXd r = detail::score_residual(family, data.y, theta);
    return data.X.transpose() * r / static_cast<double>(data.n());
}

/// (1/n) X_A^T W X_A with W = diag(c''(x_i^T beta)).
inline MatrixXd hessian_active(const GlmFamily& family, const Dataset& data,
                               const Eigen::Ref<const VectorXd>& beta, const Support& active,
                               double intercept = 0.0) {
    if (active.empty()) throw InvalidArgument("active set must be nonempty");
    for (Index j : active) {
        if (j < 0 || j >= data.p())
            throw InvalidArgument("active index " + std::to_string(j) + " out of range");
    }
    const VectorXd theta = linear_predictor(data, beta, intercept);
    return detail::weighted_gram(detail::gather_columns(data.X, active), detail::variances(family, theta));
}

} // namespace sdar
