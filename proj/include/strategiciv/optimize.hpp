#pragma once

#include <cmath>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "strategiciv/model.hpp"
#include "strategiciv/population.hpp"
#include "strategiciv/rng.hpp"
#include "strategiciv/simulate.hpp"

namespace strategiciv {

/// Convex feasible set of assessment rules: an l2 ball of given radius or
/// a per-coordinate box.
struct ConstraintSet {
    enum class Kind { L2Ball, Box };

    Kind kind = Kind::L2Ball;
    double radius = 1.0;
    Vector lo, hi;

    static ConstraintSet l2_ball(double radius) {
        if (!(radius > 0.0)) throw ValidationError("ball radius must be positive");
        ConstraintSet s;
        s.kind = Kind::L2Ball;
        s.radius = radius;
        return s;
    }

    static ConstraintSet box(Vector lo, Vector hi) {
        require_same_dim(lo.size(), hi.size(), "box lo", "box hi");
        if ((lo.array() > hi.array()).any()) throw ValidationError("box requires lo <= hi entrywise");
        ConstraintSet s;
        s.kind = Kind::Box;
        s.lo = std::move(lo);
        s.hi = std::move(hi);
        return s;
    }

    bool contains(const Vector& v, double tol = 1e-12) const {
        if (kind == Kind::L2Ball) return v.norm() <= radius + tol;
        return (v.array() >= lo.array() - tol).all() && (v.array() <= hi.array() + tol).all();
    }

    Vector project(const Vector& v) const {
        if (kind == Kind::L2Ball) {
            double n = v.norm();
            return n > radius ? Vector(v * (radius / n)) : v;
        }
        return v.cwiseMax(lo).cwiseMin(hi);
    }
};

/// Rule maximizing the linear agent-outcome objective theta^T lambda over
/// the feasible set.  Ball: radius * lambda / ||lambda||.  Box: hi where
/// lambda_i > 0, lo otherwise (zero coordinates break ties to lo).
inline AssessmentRule outcome_maximizing_rule(const Vector& lambda_hat, const ConstraintSet& set) {
    require_finite(lambda_hat, "lambda");
    AssessmentRule rule;
    if (set.kind == ConstraintSet::Kind::L2Ball) {
        double n = lambda_hat.norm();
        if (n == 0.0)
            throw DegenerateObjectiveError("objective degenerate: every feasible rule optimal");
        rule.weights = set.radius / n * lambda_hat;
    } else {
        require_same_dim(lambda_hat.size(), set.lo.size(), "lambda", "box");
        rule.weights.resize(lambda_hat.size());
        for (Index i = 0; i < lambda_hat.size(); ++i)
            rule.weights[i] = lambda_hat[i] > 0.0 ? set.hi[i] : set.lo[i];
    }
    return rule;
}

struct MonteCarloEstimate {
    double value = 0.0;
    double std_error = 0.0;
    Index samples = 0;
};

/// Monte-Carlo estimate of the expected agent outcome E[y] when the rule
/// is deployed on the population.  Agent draws use per-index sub-streams,
/// so estimates for different rules under the same seed share their
/// random numbers.
inline MonteCarloEstimate expected_outcome(const AssessmentRule& rule, const PopulationSpec& spec,
                                           Index mc_samples, std::uint64_t seed) {
    validate(spec);
    require_same_dim(rule.m(), spec.m, "rule", "population m");
    if (mc_samples < 1) throw ValidationError("mc_samples must be >= 1");
    double sum = 0.0, sumsq = 0.0;
    for (Index i = 0; i < mc_samples; ++i) {
        auto [agent, label] = sample_agent(spec, seed, static_cast<std::uint64_t>(i));
        double y = realize_outcome(agent, observe_features(agent, rule), spec.causal);
        sum += y;
        sumsq += y * y;
    }
    double n = static_cast<double>(mc_samples);
    double mean = sum / n;
    double var = std::max(0.0, (sumsq - n * mean * mean) / std::max(1.0, n - 1.0));
    return {mean, std::sqrt(var / n), mc_samples};
}

/// Single-sample estimate of the predictive-risk gradient that accounts
/// for the features' and outcome's dependence on the deployed rule:
///   2 (y_hat - y) (x + omega (theta - theta_reference)).
/// Unbiased when omega = E E^T is common across agents.
inline Vector risk_gradient_corrected(const AssessmentRule& rule, const Interaction& interaction,
                                      const Matrix& omega, const Vector& theta_reference) {
    require_same_dim(interaction.features.size(), rule.m(), "features", "rule");
    require_same_dim(theta_reference.size(), rule.m(), "theta_reference", "rule");
    if (omega.rows() != rule.m() || omega.cols() != rule.m())
        throw DimensionError("omega is " + std::to_string(omega.rows()) + "x" +
                             std::to_string(omega.cols()) + " but rule has length " +
                             std::to_string(rule.m()));
    double residual = predict(rule, interaction.features) - interaction.outcome;
    return 2.0 * residual *
           (interaction.features + omega * (rule.weights - theta_reference));
}

/// The biased gradient estimate that ignores the dependence of x and y on
/// the rule: 2 (y_hat - y) x.
inline Vector risk_gradient_simple(const AssessmentRule& rule, const Interaction& interaction) {
    require_same_dim(interaction.features.size(), rule.m(), "features", "rule");
    double residual = predict(rule, interaction.features) - interaction.outcome;
    return 2.0 * residual * interaction.features;
}

struct SgdConfig {
    enum class StepSizeKind { Constant, Decaying };  // decaying: eta_0 / sqrt(t)
    enum class GradientKind { Corrected, Simple };

    Vector initial_rule;
    Index steps = 1;
    StepSizeKind step_size = StepSizeKind::Decaying;
    double eta0 = 0.001;
    GradientKind gradient = GradientKind::Corrected;
    Matrix omega;            // E E^T estimate fed to the corrected gradient
    Vector theta_reference;  // theta_star estimate fed to the corrected gradient
    std::optional<ConstraintSet> projection;
};

struct TrajectoryPoint {
    Index t = 0;
    Vector theta;
    double risk_sample = 0.0;
};

/// A descent run plus the reference quantities it consumed.  The
/// references are fixed for the whole run; there is no re-estimation
/// mid-descent.
struct Trajectory {
    SgdConfig::GradientKind gradient = SgdConfig::GradientKind::Corrected;
    Matrix omega_used;           // conversion-matrix reference fed to corrected steps
    Vector theta_reference_used; // causal-coefficient reference fed to corrected steps
    std::vector<TrajectoryPoint> points;

    const TrajectoryPoint& back() const { return points.back(); }
    std::size_t size() const { return points.size(); }
};

inline void validate(const SgdConfig& config) {
    if (config.steps < 1) throw ValidationError("sgd requires steps >= 1");
    if (!(config.eta0 >= 0.0)) throw ValidationError("sgd step size must be non-negative");
    require_finite(config.initial_rule, "initial rule");
}

namespace detail {

inline double step_size(const SgdConfig& config, Index t) {
    if (config.step_size == SgdConfig::StepSizeKind::Constant) return config.eta0;
    return config.eta0 / std::sqrt(static_cast<double>(t));
}

inline void check_divergence(const Vector& theta, Index t) {
    if (!(theta.norm() <= 1e6))
        throw DivergenceError("sgd diverged at step " + std::to_string(t) +
                                  ": iterate norm exceeds 1e6",
                              t);
}

}  // namespace detail

/// Online stochastic gradient descent on the predictive risk: each step
/// deploys the current rule on one fresh agent, takes the configured
/// gradient estimate, and projects back onto the constraint set.  The
/// recorded risk sample is the squared residual of that interaction.
inline Trajectory sgd_minimize_risk(const SgdConfig& config, const PopulationSpec& spec,
                                    std::uint64_t seed) {
    validate(config);
    validate(spec);
    require_same_dim(config.initial_rule.size(), spec.m, "initial rule", "population m");

    Vector theta = config.initial_rule;
    if (config.projection) theta = config.projection->project(theta);
    Trajectory trajectory;
    trajectory.gradient = config.gradient;
    trajectory.omega_used = config.omega;
    trajectory.theta_reference_used = config.theta_reference;
    trajectory.points.reserve(static_cast<std::size_t>(config.steps));
    for (Index t = 1; t <= config.steps; ++t) {
        AssessmentRule rule{theta, 0.0};
        auto [agent, label] = sample_agent(spec, seed, static_cast<std::uint64_t>(t));
        Interaction round{rule, observe_features(agent, rule), 0.0};
        round.outcome = realize_outcome(agent, round.features, spec.causal);
        double residual = predict(rule, round.features) - round.outcome;
        trajectory.points.push_back({t, theta, residual * residual});

        Vector g = config.gradient == SgdConfig::GradientKind::Corrected
                       ? risk_gradient_corrected(rule, round, config.omega, config.theta_reference)
                       : risk_gradient_simple(rule, round);
        theta -= detail::step_size(config, t) * g;
        if (config.projection) theta = config.projection->project(theta);
        detail::check_divergence(theta, t);
    }
    return trajectory;
}

/// One-dimensional population summarized by its second moments.  The
/// moments are plain coefficients of the analytic risk; construction does
/// not require them to be jointly realizable (see is_moment_feasible).
struct OneDPopulation {
    double e_b2 = 0.0;        // E[b^2]
    double e_ob = 0.0;        // E[o b]
    double e_o2 = 0.0;        // E[o^2]
    double conv = 1.0;        // effort conversion scalar, so E E^T = conv^2
    double theta_star = 0.0;

    /// Whether the stored moments satisfy Cauchy-Schwarz and could come
    /// from a real joint distribution of (b, o).
    bool is_moment_feasible() const {
        return e_b2 >= 0.0 && e_o2 >= 0.0 && e_ob * e_ob <= e_b2 * e_o2;
    }
};

/// The 1D benchmark on which the simple gradient points the wrong way at
/// theta = 0.5 while the corrected gradient tracks the true descent
/// direction toward the global minimizer.
inline OneDPopulation one_d_sign_flip_population() {
    return {0.3, -6.5, 15.0, 3.0, 1.0};
}

/// Analytic 1D predictive risk for zero-mean b and o:
///   f(theta) = (theta - theta*)^2 (E[b^2] + conv^4 theta^2)
///              - 2 (theta - theta*) E[ob] + E[o^2].
inline double one_d_risk(const OneDPopulation& pop, double theta) {
    double diff = theta - pop.theta_star;
    double c4 = std::pow(pop.conv, 4);
    return diff * diff * (pop.e_b2 + c4 * theta * theta) - 2.0 * diff * pop.e_ob + pop.e_o2;
}

struct OneDGradients {
    double corrected = 0.0;  // exact derivative of one_d_risk
    double simple = 0.0;     // derivative omitting the dependence of x on theta
};

inline OneDGradients one_d_gradients(const OneDPopulation& pop, double theta) {
    double diff = theta - pop.theta_star;
    double c4 = std::pow(pop.conv, 4);
    double simple = 2.0 * ((pop.e_b2 + c4 * theta * theta) * diff - pop.e_ob);
    double corrected = simple + 2.0 * c4 * theta * diff * diff;
    return {corrected, simple};
}

/// Gradient descent on the analytic 1D risk.  The per-step gradient is
/// the exact population quantity, so the trajectory is deterministic and
/// the recorded risk is the analytic risk at the iterate.
inline Trajectory sgd_minimize_risk(const SgdConfig& config, const OneDPopulation& pop) {
    validate(config);
    require_same_dim(config.initial_rule.size(), 1, "initial rule", "1D population");

    double theta = config.initial_rule[0];
    Trajectory trajectory;
    trajectory.gradient = config.gradient;
    trajectory.omega_used = Matrix::Constant(1, 1, pop.conv * pop.conv);
    trajectory.theta_reference_used = Vector::Constant(1, pop.theta_star);
    trajectory.points.reserve(static_cast<std::size_t>(config.steps));
    for (Index t = 1; t <= config.steps; ++t) {
        Vector point(1);
        point[0] = theta;
        if (config.projection) point = config.projection->project(point);
        theta = point[0];
        trajectory.points.push_back({t, point, one_d_risk(pop, theta)});

        auto g = one_d_gradients(pop, theta);
        double step = config.gradient == SgdConfig::GradientKind::Corrected ? g.corrected : g.simple;
        theta -= detail::step_size(config, t) * step;
        if (!(std::abs(theta) <= 1e6))
            throw DivergenceError("sgd diverged at step " + std::to_string(t) +
                                      ": iterate norm exceeds 1e6",
                                  t);
    }
    return trajectory;
}

}  // namespace strategiciv
