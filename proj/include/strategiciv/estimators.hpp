#pragma once

#include <cmath>
#include <optional>
#include <string>

#include "strategiciv/types.hpp"

namespace strategiciv {

/// Ordinary least squares of y on [x; 1].  Biased whenever the offset is
/// correlated with the features; kept as the baseline estimator.
struct OlsFit {
    Vector coefficients;
    double intercept = 0.0;
};

/// Two-stage least squares with the deployed rules as instruments.
/// Stage 1 regresses x on [theta; 1] giving omega_hat (the population
/// feature response E[E E^T]) and the mean baseline; stage 2 regresses y
/// on [theta; 1] giving lambda_hat = omega theta_star and the intercept
/// E[o] + E[b]^T theta_star; theta_hat = omega_hat^{-1} lambda_hat.
struct TslsFit {
    Matrix omega_hat;
    Vector baseline_mean;
    Vector lambda_hat;
    double intercept_hat = 0.0;
    Vector theta_hat;
    double design_min_singular_value = 0.0;  // sigma_min(sum theta_t (x_t - b_bar)^T)
    double residual_stddev = 0.0;            // stage-2 residual scale, default sigma_g plug-in
};

/// Constants of the a-priori finite-sample bound: beta bounds |theta_t|
/// entries, sigma_g the offset sub-Gaussian scale, sigma_z the baseline
/// entry scale, sigma_E the E E^T entry scale, c = sigma_min(E[E E^T]),
/// sigma_theta_sq the per-coordinate instrument variance.
struct BoundParams {
    double beta = 0.0;
    double sigma_g = 0.0;
    double sigma_z = 0.0;
    double sigma_E = 0.0;
    double c = 0.0;
    double sigma_theta_sq = 0.0;
    Index m = 0;
    Index T = 0;
    double delta = 0.0;
};

namespace detail {

// Symmetric PSD solve with a rank-revealing eigendecomposition; fails
// beyond the relative condition cap instead of regularizing.
inline Matrix checked_symmetric_solve(const Matrix& gram, const Matrix& rhs,
                                      double condition_cap, const std::string& what) {
    Eigen::SelfAdjointEigenSolver<Matrix> eig(gram);
    double lo = eig.eigenvalues().minCoeff();
    double hi = eig.eigenvalues().maxCoeff();
    if (!(lo > 0.0) || hi > condition_cap * lo)
        throw SingularDesignError(what + " (min singular value " + std::to_string(std::max(lo, 0.0)) +
                                      ")",
                                  std::max(lo, 0.0));
    return eig.eigenvectors() *
           eig.eigenvalues().cwiseInverse().asDiagonal() *
           (eig.eigenvectors().transpose() * rhs);
}

inline Vector checked_general_solve(const Matrix& a, const Vector& rhs, double condition_cap,
                                    const std::string& what) {
    Eigen::JacobiSVD<Matrix> svd(a, Eigen::ComputeThinU | Eigen::ComputeThinV);
    double lo = svd.singularValues().minCoeff();
    double hi = svd.singularValues().maxCoeff();
    if (!(lo > 0.0) || hi > condition_cap * lo)
        throw SingularDesignError(what + " (min singular value " + std::to_string(lo) + ")", lo);
    return svd.solve(rhs);
}

}  // namespace detail

inline OlsFit ols_fit(const InteractionLog& log, double condition_cap = 1e12) {
    const Index m = log.m;
    const Index T = log.size();
    if (T < m + 1)
        throw SingularDesignError(
            "design has insufficient variation: T=" + std::to_string(T) + " < m+1", 0.0);

    // Normal equations accumulated in round order.
    Matrix gram = Matrix::Zero(m + 1, m + 1);
    Vector rhs = Vector::Zero(m + 1);
    Vector xt(m + 1);
    for (Index t = 0; t < T; ++t) {
        const auto& rec = log.records[static_cast<std::size_t>(t)];
        require_same_dim(rec.features.size(), m, "log features", "log m");
        xt.head(m) = rec.features;
        xt[m] = 1.0;
        gram.noalias() += xt * xt.transpose();
        rhs.noalias() += xt * rec.outcome;
    }
    Vector beta = detail::checked_symmetric_solve(gram, rhs, condition_cap,
                                                  "design is rank-deficient")
                      .col(0);
    OlsFit fit;
    fit.coefficients = beta.head(m);
    fit.intercept = beta[m];
    return fit;
}

inline TslsFit tsls_fit(const InteractionLog& log, double condition_cap = 1e12) {
    const Index m = log.m;
    const Index T = log.size();
    if (T < m + 2)
        throw SingularDesignError(
            "instrument has insufficient variation: T=" + std::to_string(T) + " < m+2", 0.0);

    Matrix gram = Matrix::Zero(m + 1, m + 1);  // sum theta~ theta~^T
    Matrix sx = Matrix::Zero(m + 1, m);        // sum theta~ x^T
    Vector sy = Vector::Zero(m + 1);           // sum theta~ y
    Vector tt(m + 1);
    for (Index t = 0; t < T; ++t) {
        const auto& rec = log.records[static_cast<std::size_t>(t)];
        require_same_dim(rec.rule.m(), m, "log rule", "log m");
        require_same_dim(rec.features.size(), m, "log features", "log m");
        tt.head(m) = rec.rule.weights;
        tt[m] = 1.0;
        gram.noalias() += tt * tt.transpose();
        sx.noalias() += tt * rec.features.transpose();
        sy.noalias() += tt * rec.outcome;
    }

    Matrix stage1 = detail::checked_symmetric_solve(gram, sx, condition_cap,
                                                    "instrument has insufficient variation");
    Vector stage2 = detail::checked_symmetric_solve(gram, sy, condition_cap,
                                                    "instrument has insufficient variation")
                        .col(0);

    TslsFit fit;
    fit.omega_hat = stage1.topRows(m);
    fit.baseline_mean = stage1.row(m).transpose();
    fit.lambda_hat = stage2.head(m);
    fit.intercept_hat = stage2[m];
    fit.theta_hat = detail::checked_general_solve(fit.omega_hat, fit.lambda_hat, condition_cap,
                                                  "stage-1 estimate rank-deficient");

    if ((fit.omega_hat * fit.theta_hat - fit.lambda_hat).norm() >
        1e-8 * std::max(fit.lambda_hat.norm(), 1e-30))
        throw SingularDesignError("stage-3 solve residual exceeds tolerance", 0.0);

    // Closed-form route: theta = (sum theta_t (x_t - b_bar)^T)^{-1}
    //                            sum theta_t (y_t - intercept_hat).
    Matrix design = Matrix::Zero(m, m);
    Vector cf_rhs = Vector::Zero(m);
    for (Index t = 0; t < T; ++t) {
        const auto& rec = log.records[static_cast<std::size_t>(t)];
        design.noalias() += rec.rule.weights * (rec.features - fit.baseline_mean).transpose();
        cf_rhs.noalias() += rec.rule.weights * (rec.outcome - fit.intercept_hat);
    }
    Eigen::JacobiSVD<Matrix> design_svd(design, Eigen::ComputeThinU | Eigen::ComputeThinV);
    fit.design_min_singular_value = design_svd.singularValues().minCoeff();
    Vector theta_cf = design_svd.solve(cf_rhs);
    if ((theta_cf - fit.theta_hat).norm() > 1e-8 * (1.0 + fit.theta_hat.norm()))
        throw SingularDesignError("two-stage and closed-form estimates disagree",
                                  fit.design_min_singular_value);

    double ssr = 0.0;
    for (Index t = 0; t < T; ++t) {
        const auto& rec = log.records[static_cast<std::size_t>(t)];
        double r = rec.outcome - rec.rule.weights.dot(fit.lambda_hat) - fit.intercept_hat;
        ssr += r * r;
    }
    fit.residual_stddev = T > m + 1 ? std::sqrt(ssr / static_cast<double>(T - m - 1)) : 0.0;
    return fit;
}

/// Data-driven high-probability bound on ||theta_hat - theta_star||_2:
///   2 beta sigma_g sqrt(2 m T log(m/delta)) / sigma_min(sum theta_t (x_t - b_bar)^T),
/// holding with confidence 1 - 6 delta.  sigma_g defaults to the fitted
/// stage-2 residual scale since the estimator never observes the offset.
inline double theta_error_bound(const TslsFit& fit, double beta, Index m, Index T, double delta,
                                std::optional<double> sigma_g = {}) {
    if (!(fit.design_min_singular_value > 0.0))
        throw SingularDesignError("design singular value is zero; bound undefined", 0.0);
    if (!(delta > 0.0 && delta < 1.0)) throw ValidationError("delta must lie in (0,1)");
    double sg = sigma_g.value_or(fit.residual_stddev);
    double numerator = 2.0 * beta * sg *
                       std::sqrt(2.0 * static_cast<double>(m) * static_cast<double>(T) *
                                 std::log(static_cast<double>(m) / delta));
    return numerator / fit.design_min_singular_value;
}

/// Data-driven bound with beta taken from the log (max |theta_{t,j}|).
inline double theta_error_bound(const TslsFit& fit, const InteractionLog& log, double delta,
                                std::optional<double> sigma_g = {}) {
    double beta = 0.0;
    for (const auto& rec : log.records)
        beta = std::max(beta, rec.rule.weights.cwiseAbs().maxCoeff());
    return theta_error_bound(fit, beta, log.m, log.size(), delta, sigma_g);
}

/// A-priori form of the bound under i.i.d. per-coordinate instrument
/// perturbations, confidence 1 - 6 delta:
///   2 beta sigma_g sqrt(2 m log(m/delta)) /
///   (c sqrt(T) sigma_theta^2 / 2 - m beta^2 sigma_E sqrt(2 log(m^2/delta))
///                               - 2 m beta sigma_z sqrt(2 log(m^2/delta))).
/// Throws once the denominator is non-positive: the bound is vacuous at
/// this T rather than a number.
inline double theta_error_bound(const BoundParams& p) {
    if (!(p.delta > 0.0 && p.delta < 1.0)) throw ValidationError("delta must lie in (0,1)");
    if (p.m < 1 || p.T < 1) throw ValidationError("bound requires m >= 1 and T >= 1");
    if (p.beta < 0.0 || p.sigma_g < 0.0 || p.sigma_z < 0.0 || p.sigma_E < 0.0 || p.c < 0.0 ||
        p.sigma_theta_sq < 0.0)
        throw ValidationError("bound parameters must be non-negative");
    double md = static_cast<double>(p.m);
    double tail = std::sqrt(2.0 * std::log(md * md / p.delta));
    double denominator = 0.5 * p.c * std::sqrt(static_cast<double>(p.T)) * p.sigma_theta_sq -
                         md * p.beta * p.beta * p.sigma_E * tail -
                         2.0 * md * p.beta * p.sigma_z * tail;
    if (!(denominator > 0.0))
        throw VacuousBoundError("bound vacuous at this T (denominator " +
                                std::to_string(denominator) + " <= 0)");
    double numerator = 2.0 * p.beta * p.sigma_g * std::sqrt(2.0 * md * std::log(md / p.delta));
    return numerator / denominator;
}

/// Confidence level carried by both bound forms.
inline double bound_confidence(double delta) { return 1.0 - 6.0 * delta; }

}  // namespace strategiciv
