#pragma once

#include <cmath>
#include <optional>
#include <string>
#include <vector>

#include "strategiciv/types.hpp"

namespace strategiciv {

struct ClampInterval {
    double lo;
    double hi;
};

/// One perturbed entry of the effort conversion matrix.  The drawn noise
/// magnitude |N(mean, stddev^2)| is added for sign = +1 and subtracted
/// for sign = -1, so the direction of the advantage is deterministic.
struct EffortNoiseEntry {
    Index row = 0;
    Index col = 0;
    double mean = 0.0;
    double stddev = 0.0;
    int sign = +1;
};

/// Generative description of one subpopulation: entrywise-independent
/// normal baselines (optionally clamped), a mean effort matrix with
/// signed noise on listed entries, and a normal outcome offset.
struct SubpopulationSpec {
    std::string label;
    double mixture_weight = 1.0;
    Vector baseline_mean;
    Vector baseline_stddev;
    std::vector<std::optional<ClampInterval>> baseline_clamp;  // empty or one per coordinate
    Matrix effort_matrix_mean;
    std::vector<EffortNoiseEntry> effort_noise;
    double offset_mean = 0.0;
    double offset_stddev = 0.0;
};

/// The agent-type distribution: dimensions, the causal outcome model, and
/// a mixture of subpopulations.
struct PopulationSpec {
    Index m = 0;
    Index d = 0;
    CausalModel causal;
    std::vector<SubpopulationSpec> groups;
};

/// Deployed-rule sequence: either a fixed list cycled over the horizon or
/// i.i.d. per-coordinate Gaussian perturbations of a center rule.
struct RuleSchedule {
    enum class Kind { FixedList, GaussianPerturbation };

    Kind kind = Kind::GaussianPerturbation;
    std::vector<AssessmentRule> rules;  // fixed-list
    Vector center;                      // gaussian-perturbation
    Vector stddev;                      // gaussian-perturbation, entries > 0
    Index horizon = 0;
};

inline void validate(const SubpopulationSpec& g, Index m, Index d) {
    if (g.mixture_weight < 0.0 || g.mixture_weight > 1.0)
        throw ValidationError("group '" + g.label + "': mixture_weight outside [0,1]");
    require_same_dim(g.baseline_mean.size(), m, "baseline_mean", "population m");
    require_same_dim(g.baseline_stddev.size(), m, "baseline_stddev", "population m");
    require_finite(g.baseline_mean, "baseline_mean");
    require_finite(g.baseline_stddev, "baseline_stddev");
    if ((g.baseline_stddev.array() < 0.0).any())
        throw ValidationError("group '" + g.label + "': negative baseline stddev");
    if (!g.baseline_clamp.empty() && static_cast<Index>(g.baseline_clamp.size()) != m)
        throw ValidationError("group '" + g.label + "': baseline_clamp length != m");
    for (const auto& c : g.baseline_clamp)
        if (c && !(c->lo <= c->hi))
            throw ValidationError("group '" + g.label + "': clamp interval with lo > hi");
    if (g.effort_matrix_mean.rows() != m || g.effort_matrix_mean.cols() != d)
        throw ValidationError("group '" + g.label + "': effort_matrix_mean is " +
                              std::to_string(g.effort_matrix_mean.rows()) + "x" +
                              std::to_string(g.effort_matrix_mean.cols()) + ", expected " +
                              std::to_string(m) + "x" + std::to_string(d));
    require_finite(g.effort_matrix_mean, "effort_matrix_mean");
    for (const auto& e : g.effort_noise) {
        if (e.row < 0 || e.row >= m || e.col < 0 || e.col >= d)
            throw ValidationError("group '" + g.label + "': effort_noise entry out of range");
        if (e.stddev < 0.0) throw ValidationError("group '" + g.label + "': negative effort noise stddev");
        if (e.sign != +1 && e.sign != -1)
            throw ValidationError("group '" + g.label + "': effort_noise sign must be +1 or -1");
    }
    if (g.offset_stddev < 0.0) throw ValidationError("group '" + g.label + "': negative offset stddev");
}

inline void validate(const PopulationSpec& spec) {
    if (spec.m < 1 || spec.d < 1) throw ValidationError("population requires m >= 1 and d >= 1");
    require_same_dim(spec.causal.m(), spec.m, "theta_star", "population m");
    require_finite(spec.causal.theta_star, "theta_star");
    if (spec.groups.empty()) throw ValidationError("population has no groups");
    double total = 0.0;
    for (const auto& g : spec.groups) {
        validate(g, spec.m, spec.d);
        total += g.mixture_weight;
    }
    if (std::abs(total - 1.0) > 1e-12)
        throw ValidationError("mixture weights sum to " + std::to_string(total) + ", expected 1");
}

inline void validate(const RuleSchedule& s, Index m) {
    if (s.horizon < 0) throw ValidationError("schedule horizon must be non-negative");
    if (s.kind == RuleSchedule::Kind::FixedList) {
        if (s.rules.empty() && s.horizon > 0)
            throw ValidationError("fixed-list schedule with empty rule list");
        for (const auto& r : s.rules) {
            require_same_dim(r.m(), m, "scheduled rule", "population m");
            require_finite(r.weights, "scheduled rule weights");
        }
    } else {
        require_same_dim(s.center.size(), m, "schedule center", "population m");
        require_same_dim(s.stddev.size(), m, "schedule stddev", "population m");
        if ((s.stddev.array() <= 0.0).any())
            throw ValidationError("gaussian-perturbation schedule needs stddev > 0 in every coordinate");
    }
}

/// Mixture variance of the outcome offset under a population spec.
inline double offset_stddev(const PopulationSpec& spec) {
    double mean = 0.0, second = 0.0;
    for (const auto& g : spec.groups) {
        mean += g.mixture_weight * g.offset_mean;
        second += g.mixture_weight * (g.offset_stddev * g.offset_stddev + g.offset_mean * g.offset_mean);
    }
    return std::sqrt(std::max(0.0, second - mean * mean));
}

struct AdmissionsInstance {
    PopulationSpec population;
    RuleSchedule schedule;
};

/// The two-group university admissions instance: features are (SAT score,
/// HS GPA), the outcome is college GPA, and only HS GPA is causal.
/// Disadvantaged applicants start lower, convert effort into feature
/// gains less efficiently, and carry a lower outcome offset.
inline AdmissionsInstance admissions_spec(Index horizon = 5000) {
    PopulationSpec pop;
    pop.m = 2;
    pop.d = 2;
    pop.causal.theta_star = (Vector(2) << 0.0, 0.5).finished();

    SubpopulationSpec dis;
    dis.label = "disadvantaged";
    dis.mixture_weight = 0.5;
    dis.baseline_mean = (Vector(2) << 800.0, 1.8).finished();
    dis.baseline_stddev = (Vector(2) << 200.0, 0.5).finished();
    dis.baseline_clamp = {ClampInterval{400.0, 1600.0}, ClampInterval{0.0, 4.0}};
    dis.effort_matrix_mean = (Matrix(2, 2) << 10.0, 0.0, 0.0, 1.0).finished();
    dis.effort_noise = {{0, 0, 0.5, 0.25, -1}, {1, 1, 0.1, 0.01, -1}};
    dis.offset_mean = 0.5;
    dis.offset_stddev = 0.2;

    SubpopulationSpec adv = dis;
    adv.label = "advantaged";
    adv.baseline_mean = (Vector(2) << 1000.0, 2.2).finished();
    adv.effort_noise = {{0, 0, 0.5, 0.25, +1}, {1, 1, 0.1, 0.01, +1}};
    adv.offset_mean = 1.5;

    pop.groups = {dis, adv};

    RuleSchedule sched;
    sched.kind = RuleSchedule::Kind::GaussianPerturbation;
    sched.center = (Vector(2) << 1.0, 1.0).finished();
    // Per-coordinate instrument variances 10 (SAT weight) and 2 (GPA
    // weight); the stddev fields hold their square roots.
    sched.stddev = (Vector(2) << std::sqrt(10.0), std::sqrt(2.0)).finished();
    sched.horizon = horizon;

    validate(pop);
    validate(sched, pop.m);
    return {pop, sched};
}

}  // namespace strategiciv
