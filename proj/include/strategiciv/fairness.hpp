#pragma once

#include <cmath>
#include <cstdint>
#include <limits>
#include <string>
#include <vector>

#include "strategiciv/model.hpp"
#include "strategiciv/simulate.hpp"

namespace strategiciv {

namespace detail {

inline void check_support(const std::vector<Index>& support, Index m) {
    for (Index i : support)
        if (i < 0 || i >= m)
            throw DimensionError("support index " + std::to_string(i) + " out of range for m=" +
                                 std::to_string(m));
}

inline std::vector<bool> support_mask(const std::vector<Index>& support, Index m) {
    check_support(support, m);
    std::vector<bool> in(static_cast<std::size_t>(m), false);
    for (Index i : support) in[static_cast<std::size_t>(i)] = true;
    return in;
}

}  // namespace detail

/// Zero the coordinates outside the causally relevant support.
inline Vector causal_mask(const Vector& v, const std::vector<Index>& support) {
    detail::check_support(support, v.size());
    Vector out = Vector::Zero(v.size());
    for (Index i : support) out[i] = v[i];
    return out;
}

/// Zero the entries whose row and column both lie outside the support;
/// an entry survives if either index is causally relevant.
inline Matrix causal_mask(const Matrix& a, const std::vector<Index>& support) {
    if (a.rows() != a.cols())
        throw DimensionError("causal_mask expects a square matrix, got " +
                             std::to_string(a.rows()) + "x" + std::to_string(a.cols()));
    auto in = detail::support_mask(support, a.rows());
    Matrix out = Matrix::Zero(a.rows(), a.cols());
    for (Index i = 0; i < a.rows(); ++i)
        for (Index j = 0; j < a.cols(); ++j)
            if (in[static_cast<std::size_t>(i)] || in[static_cast<std::size_t>(j)])
                out(i, j) = a(i, j);
    return out;
}

namespace detail {

// Spectral norm of a symmetric matrix.
inline double operator_norm(const Matrix& a) {
    Eigen::SelfAdjointEigenSolver<Matrix> eig(a, Eigen::EigenvaluesOnly);
    return eig.eigenvalues().cwiseAbs().maxCoeff();
}

}  // namespace detail

/// Causal similarity of two agents: Euclidean distance of the masked
/// baselines plus the operator norm of the masked E E^T difference.
/// Offsets never enter; agents differing only in non-causal coordinates
/// are at distance zero.
inline double similarity_distance(const AgentType& u, const AgentType& v,
                                  const CausalModel& model) {
    require_same_dim(u.m(), v.m(), "first agent", "second agent");
    require_same_dim(u.m(), model.m(), "agent", "causal model");
    auto support = model.support();
    Vector db = causal_mask(Vector(u.baseline_features - v.baseline_features), support);
    Matrix dE = causal_mask(Matrix(u.effort_matrix * u.effort_matrix.transpose() -
                                   v.effort_matrix * v.effort_matrix.transpose()),
                            support);
    return db.norm() + detail::operator_norm(dE);
}

/// Gap in predictions two agents receive under the same rule; the shared
/// intercept cancels:  |(b - b')^T theta + theta^T (EE^T - E'E'^T) theta|.
inline double prediction_gap(const AgentType& u, const AgentType& v, const AssessmentRule& rule) {
    require_same_dim(u.m(), v.m(), "first agent", "second agent");
    require_same_dim(u.m(), rule.m(), "agent", "rule");
    const Vector& th = rule.weights;
    Matrix dE = u.effort_matrix * u.effort_matrix.transpose() -
                v.effort_matrix * v.effort_matrix.transpose();
    return std::abs((u.baseline_features - v.baseline_features).dot(th) + th.dot(dE * th));
}

/// For agents at causal distance zero the prediction gap reduces to the
/// purely non-causal expression
///   sum_{i not in C} (b_i - b'_i) theta_i
///   + sum_{i,j not in C} ((EE^T)_{ij} - (E'E'^T)_{ij}) theta_i theta_j.
/// Stated only for d(u,u') = 0; callers violating that get an error.
inline double gap_formula_non_causal(const AgentType& u, const AgentType& v,
                                     const AssessmentRule& rule, const CausalModel& model) {
    double d = similarity_distance(u, v, model);
    if (d > 1e-10)
        throw ValidationError("gap formula requires similarity distance 0, got " +
                              std::to_string(d));
    require_same_dim(u.m(), rule.m(), "agent", "rule");
    auto in = detail::support_mask(model.support(), u.m());
    Matrix dE = u.effort_matrix * u.effort_matrix.transpose() -
                v.effort_matrix * v.effort_matrix.transpose();
    double sum = 0.0;
    for (Index i = 0; i < u.m(); ++i) {
        if (in[static_cast<std::size_t>(i)]) continue;
        sum += (u.baseline_features[i] - v.baseline_features[i]) * rule.weights[i];
        for (Index j = 0; j < u.m(); ++j)
            if (!in[static_cast<std::size_t>(j)]) sum += dE(i, j) * rule.weights[i] * rule.weights[j];
    }
    return std::abs(sum);
}

/// Per-pair audit record.
struct FairnessReport {
    double distance = 0.0;       // d(u, u')
    double gap = 0.0;            // |y_hat - y_hat'|
    bool satisfied = true;       // gap <= distance (+1e-12 slack)
    double baseline_term = 0.0;  // ||b_C - b'_C||_2
    double matrix_term = 0.0;    // ||(EE^T)_C - (E'E'^T)_C||_op
};

inline FairnessReport fairness_report(const AgentType& u, const AgentType& v,
                                      const AssessmentRule& rule, const CausalModel& model) {
    auto support = model.support();
    FairnessReport report;
    report.baseline_term =
        causal_mask(Vector(u.baseline_features - v.baseline_features), support).norm();
    report.matrix_term = detail::operator_norm(
        causal_mask(Matrix(u.effort_matrix * u.effort_matrix.transpose() -
                           v.effort_matrix * v.effort_matrix.transpose()),
                    support));
    report.distance = report.baseline_term + report.matrix_term;
    report.gap = prediction_gap(u, v, rule);
    report.satisfied = report.gap <= report.distance + 1e-12;
    return report;
}

struct UnfairInstance {
    AgentType u;
    AgentType u_prime;
    CausalModel model;
};

/// The construction showing unbounded unfairness of non-causal rules:
/// theta* = [0_{n/2}; sqrt(2/n) 1_{n/2}] (unit norm), equal baselines,
/// and diagonal effort matrices that agree on the causal half but give
/// the first agent conversion sqrt(n) on the non-causal half where the
/// second has none.  Distance is 0, yet any rule with weight >= 1/sqrt(n)
/// on the non-causal half is predicted at least n/2 apart.
inline UnfairInstance example_unfair_instance(Index n) {
    if (n < 2 || n % 2 != 0)
        throw ValidationError("example requires an even n >= 2, got " + std::to_string(n));
    UnfairInstance inst;
    inst.model.theta_star = Vector::Zero(n);
    inst.model.theta_star.tail(n / 2).setConstant(std::sqrt(2.0 / static_cast<double>(n)));

    Vector delta = Vector::Ones(n);
    delta.head(n / 2).setConstant(std::sqrt(static_cast<double>(n)));
    Vector delta_prime = Vector::Ones(n);
    delta_prime.head(n / 2).setZero();

    inst.u.baseline_features = Vector::Zero(n);
    inst.u.effort_matrix = delta.asDiagonal();
    inst.u_prime.baseline_features = Vector::Zero(n);
    inst.u_prime.effort_matrix = delta_prime.asDiagonal();
    return inst;
}

/// Population-level audit summary.  The gap-to-distance ratio is
/// infinite for violated pairs at distance zero.
struct AuditSummary {
    Index pairs = 0;
    double violation_rate = 0.0;
    double max_gap_to_distance = 0.0;
    double theta_star_scale = 1.0;  // ||theta_star||_2 of the audited model
    Index worst_pair = -1;          // pair index achieving the max ratio
    double worst_gap = 0.0;
    double worst_distance = 0.0;
};

/// Sample one audit pair.  With two or more groups the members come from
/// distinct groups, since same-type pairs are trivially similar;
/// single-group populations pair within the group.
inline std::pair<AgentType, AgentType> sample_audit_pair(const PopulationSpec& spec,
                                                         std::uint64_t seed, Index pair_index) {
    auto round = static_cast<std::uint64_t>(pair_index);
    RngStream first_stream(seed, round, StreamPurpose::PairFirst);
    RngStream second_stream(seed, round, StreamPurpose::PairSecond);
    std::size_t gi = detail::pick_group(spec, first_stream.uniform01());
    std::size_t gj = detail::pick_group(spec, second_stream.uniform01());
    if (spec.groups.size() > 1 && gj == gi)
        gj = (gi + 1 + static_cast<std::size_t>(second_stream.uniform01() *
                                                static_cast<double>(spec.groups.size() - 1))) %
             spec.groups.size();
    return {detail::sample_from_group(spec.groups[gi], seed, 2 * round),
            detail::sample_from_group(spec.groups[gj], seed, 2 * round + 1)};
}

/// Per-pair reports for a seeded audit.  The similarity metric uses
/// theta_star normalized to unit norm.
inline std::vector<FairnessReport> audit_pair_reports(const PopulationSpec& spec,
                                                      const AssessmentRule& rule, Index pairs,
                                                      std::uint64_t seed) {
    validate(spec);
    require_same_dim(rule.m(), spec.m, "rule", "population m");
    if (pairs < 1) throw ValidationError("audit requires pairs >= 1");

    CausalModel normalized = spec.causal;
    double scale = normalized.theta_star.norm();
    if (scale > 0.0) normalized.theta_star /= scale;

    std::vector<FairnessReport> reports;
    reports.reserve(static_cast<std::size_t>(pairs));
    for (Index k = 0; k < pairs; ++k) {
        auto [u, v] = sample_audit_pair(spec, seed, k);
        reports.push_back(fairness_report(u, v, rule, normalized));
    }
    return reports;
}

/// Audit a population under a rule: sample agent pairs, evaluate the
/// fairness report for each, and aggregate in pair order.  theta_star is
/// normalized for the metric and the applied scale reported.
inline AuditSummary audit_population(const PopulationSpec& spec, const AssessmentRule& rule,
                                     Index pairs, std::uint64_t seed) {
    auto reports = audit_pair_reports(spec, rule, pairs, seed);

    AuditSummary summary;
    summary.pairs = pairs;
    summary.theta_star_scale = spec.causal.theta_star.norm();
    Index violations = 0;
    for (Index k = 0; k < pairs; ++k) {
        const auto& report = reports[static_cast<std::size_t>(k)];
        if (!report.satisfied) ++violations;
        double ratio;
        if (report.distance > 0.0)
            ratio = report.gap / report.distance;
        else
            ratio = report.gap > 1e-12 ? std::numeric_limits<double>::infinity() : 0.0;
        if (ratio > summary.max_gap_to_distance || summary.worst_pair < 0) {
            summary.max_gap_to_distance = ratio;
            summary.worst_pair = k;
            summary.worst_gap = report.gap;
            summary.worst_distance = report.distance;
        }
    }
    summary.violation_rate = static_cast<double>(violations) / static_cast<double>(pairs);
    return summary;
}

}  // namespace strategiciv
