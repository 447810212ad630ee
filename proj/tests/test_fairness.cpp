#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <random>

#include "strategiciv/fairness.hpp"

using namespace strategiciv;

namespace {

AgentType random_agent(std::mt19937_64& rng, Index m, Index d, double scale = 1.0) {
    std::normal_distribution<double> dist(0.0, scale);
    AgentType agent;
    agent.baseline_features = Vector::NullaryExpr(m, [&](Index) { return dist(rng); });
    agent.effort_matrix = Matrix::NullaryExpr(m, d, [&](Index, Index) { return dist(rng); });
    agent.outcome_offset = dist(rng);
    return agent;
}

CausalModel random_unit_model(std::mt19937_64& rng, Index m) {
    std::normal_distribution<double> dist(0.0, 1.0);
    CausalModel model;
    model.theta_star = Vector::NullaryExpr(m, [&](Index) { return dist(rng); });
    // Sparsify, then normalize; the fairness guarantee expects unit norm.
    for (Index i = 0; i < m / 2; ++i) model.theta_star[i] = 0.0;
    if (model.theta_star.norm() == 0.0) model.theta_star[m - 1] = 1.0;
    model.theta_star /= model.theta_star.norm();
    return model;
}

}  // namespace

TEST_CASE("causal mask on vectors and matrices") {
    Vector v = (Vector(3) << 1.0, 2.0, 3.0).finished();
    CHECK((causal_mask(v, {0, 1, 2}) - v).norm() == 0.0);
    CHECK(causal_mask(v, {}).norm() == 0.0);

    Matrix a = (Matrix(2, 2) << 1.0, 2.0, 3.0, 4.0).finished();
    Matrix masked = causal_mask(a, {1});
    CHECK(masked(0, 0) == 0.0);  // both indices outside the support
    CHECK(masked(0, 1) == 2.0);
    CHECK(masked(1, 0) == 3.0);
    CHECK(masked(1, 1) == 4.0);

    CHECK_THROWS_AS(causal_mask(v, {5}), DimensionError);
    CHECK_THROWS_AS(causal_mask(a, {-1}), DimensionError);
}

TEST_CASE("similarity distance basics") {
    std::mt19937_64 rng(2);
    AgentType u = random_agent(rng, 4, 3);
    CausalModel model{(Vector(4) << 0.0, 0.6, 0.0, 0.8).finished()};
    CHECK(similarity_distance(u, u, model) == 0.0);

    // Differences confined to non-causal coordinates and the offset.
    AgentType v = u;
    v.baseline_features[0] += 5.0;
    v.baseline_features[2] -= 2.0;
    v.outcome_offset += 9.0;
    Matrix ee = u.effort_matrix * u.effort_matrix.transpose();
    Matrix ee_changed = ee;
    ee_changed(0, 0) += 3.0;
    ee_changed(2, 2) += 1.0;
    ee_changed(0, 2) += 0.5;
    ee_changed(2, 0) += 0.5;
    Eigen::SelfAdjointEigenSolver<Matrix> chol(ee_changed);
    v.effort_matrix = chol.operatorSqrt();
    CHECK(similarity_distance(u, v, model) == doctest::Approx(0.0).epsilon(1e-9));

    // A purely causal baseline difference is the plain Euclidean norm.
    AgentType w = u;
    w.baseline_features[1] += 0.3;
    w.baseline_features[3] += 0.4;
    CHECK(similarity_distance(u, w, model) == doctest::Approx(0.5).epsilon(1e-12));

    CHECK(similarity_distance(u, w, model) == similarity_distance(w, u, model));
}

TEST_CASE("prediction gap equals the model-composed route") {
    std::mt19937_64 rng(5);
    for (int trial = 0; trial < 40; ++trial) {
        Index m = 2 + trial % 3;
        AgentType u = random_agent(rng, m, m);
        AgentType v = random_agent(rng, m, m);
        std::normal_distribution<double> dist(0.0, 1.0);
        AssessmentRule rule{Vector::NullaryExpr(m, [&](Index) { return dist(rng); }), dist(rng)};
        double direct = prediction_gap(u, v, rule);
        double composed = std::abs(predict(rule, observe_features(u, rule)) -
                                   predict(rule, observe_features(v, rule)));
        CHECK(direct == doctest::Approx(composed).epsilon(1e-12));
    }

    AgentType u = random_agent(rng, 3, 2);
    CHECK(prediction_gap(u, u, {Vector::Ones(3), 0.0}) == 0.0);
    AgentType v = random_agent(rng, 3, 2);
    CHECK(prediction_gap(u, v, {Vector::Zero(3), 4.0}) == 0.0);
}

TEST_CASE("the causal rule is individually fair") {
    std::mt19937_64 rng(11);
    for (int spec_trial = 0; spec_trial < 5; ++spec_trial) {
        Index m = 2 + spec_trial;
        CausalModel model = random_unit_model(rng, m);
        AssessmentRule rule{model.theta_star, 0.0};
        for (int pair = 0; pair < 200; ++pair) {
            AgentType u = random_agent(rng, m, m, 1.5);
            AgentType v = random_agent(rng, m, m, 1.5);
            CHECK(prediction_gap(u, v, rule) <=
                  similarity_distance(u, v, model) + 1e-12);
        }
    }
}

TEST_CASE("non-causal gap formula agrees with the direct gap at distance zero") {
    std::mt19937_64 rng(13);
    std::normal_distribution<double> dist(0.0, 1.0);
    for (int trial = 0; trial < 100; ++trial) {
        Index m = 4;
        CausalModel model{(Vector(4) << 0.0, 0.0, 0.7, 0.7).finished()};
        AgentType u = random_agent(rng, m, m);
        // Same causal block, different non-causal block: build v from u by
        // perturbing only rows/cols outside the support of E E^T.
        Matrix ee = u.effort_matrix * u.effort_matrix.transpose();
        Matrix ee_v = ee;
        ee_v(0, 0) += std::abs(dist(rng)) + 0.2;
        ee_v(1, 1) += std::abs(dist(rng)) + 0.2;
        ee_v(0, 1) += 0.1 * dist(rng);
        ee_v(1, 0) = ee_v(0, 1);
        AgentType v = u;
        Eigen::SelfAdjointEigenSolver<Matrix> sqrt_solver(ee_v);
        v.effort_matrix = sqrt_solver.operatorSqrt();
        v.baseline_features[0] += dist(rng);
        v.baseline_features[1] += dist(rng);
        v.outcome_offset = dist(rng);

        REQUIRE(similarity_distance(u, v, model) <= 1e-10);
        AssessmentRule rule{Vector::NullaryExpr(m, [&](Index) { return dist(rng); }), 0.0};
        double direct = prediction_gap(u, v, rule);
        double formula = gap_formula_non_causal(u, v, rule, model);
        CHECK(formula == doctest::Approx(direct).epsilon(1e-10));

        // Rules supported on the causal set restore equal treatment.
        Vector causal_only = Vector::Zero(m);
        causal_only[2] = dist(rng);
        causal_only[3] = dist(rng);
        CHECK(gap_formula_non_causal(u, v, {causal_only, 0.0}, model) ==
              doctest::Approx(0.0).epsilon(1e-10));
    }

    // Precondition: the formula is stated only for distance zero.
    AgentType u = random_agent(rng, 2, 2);
    AgentType far = random_agent(rng, 2, 2);
    far.baseline_features += Vector::Ones(2);
    CausalModel model{(Vector(2) << 1.0, 0.0).finished()};
    CHECK_THROWS_AS(gap_formula_non_causal(u, far, {Vector::Ones(2), 0.0}, model),
                    ValidationError);
}

TEST_CASE("worked unfair instance") {
    for (Index n : {2, 4, 8, 16}) {
        UnfairInstance inst = example_unfair_instance(n);
        CHECK(inst.model.theta_star.norm() == doctest::Approx(1.0));
        CHECK(similarity_distance(inst.u, inst.u_prime, inst.model) == doctest::Approx(0.0));

        // Uniform off-support rule: weight 1/sqrt(n) everywhere.
        AssessmentRule uniform{Vector::Constant(n, 1.0 / std::sqrt(static_cast<double>(n))), 0.0};
        double gap = prediction_gap(inst.u, inst.u_prime, uniform);
        CHECK(gap == doctest::Approx(static_cast<double>(n) / 2.0).epsilon(1e-12));
        CHECK(gap_formula_non_causal(inst.u, inst.u_prime, uniform, inst.model) ==
              doctest::Approx(gap).epsilon(1e-10));

        // The causal rule itself treats the two agents identically.
        AssessmentRule star{inst.model.theta_star, 0.0};
        CHECK(prediction_gap(inst.u, inst.u_prime, star) == doctest::Approx(0.0));
    }
    CHECK_THROWS_AS(example_unfair_instance(3), ValidationError);
    CHECK_THROWS_AS(example_unfair_instance(0), ValidationError);

    // n = 2 with weight 1/sqrt(2) off support: gap = 2 * 1/2 = 1 = n/2.
    UnfairInstance two = example_unfair_instance(2);
    AssessmentRule rule{(Vector(2) << 1.0 / std::sqrt(2.0), -0.9).finished(), 0.0};
    CHECK(prediction_gap(two.u, two.u_prime, rule) == doctest::Approx(1.0));

    // n = 4 with weights 1/2 off support: gap = 4 (1/4 + 1/4) = 2.
    UnfairInstance four = example_unfair_instance(4);
    AssessmentRule half{(Vector(4) << 0.5, 0.5, 0.3, -2.0).finished(), 0.0};
    CHECK(prediction_gap(four.u, four.u_prime, half) == doctest::Approx(2.0));
}

TEST_CASE("fairness report ignores offsets and intercepts") {
    std::mt19937_64 rng(17);
    AgentType u = random_agent(rng, 3, 3);
    AgentType v = random_agent(rng, 3, 3);
    CausalModel model{(Vector(3) << 0.0, 1.0, 0.0).finished()};
    AssessmentRule rule{(Vector(3) << 0.2, -0.4, 0.6).finished(), 0.0};
    FairnessReport base = fairness_report(u, v, rule, model);

    AgentType u2 = u, v2 = v;
    u2.outcome_offset += 5.0;
    v2.outcome_offset -= 3.0;
    AssessmentRule shifted{rule.weights, 11.0};
    FairnessReport moved = fairness_report(u2, v2, shifted, model);
    CHECK(base.distance == moved.distance);
    CHECK(base.gap == moved.gap);
    CHECK(base.satisfied == moved.satisfied);
    CHECK(base.baseline_term == moved.baseline_term);
    CHECK(base.matrix_term == moved.matrix_term);
}

TEST_CASE("audit: causal rule passes, degenerate population is trivially fair") {
    auto inst = admissions_spec();
    AssessmentRule star{inst.population.causal.theta_star, 0.0};
    AuditSummary summary = audit_population(inst.population, star, 800, 19);
    CHECK(summary.violation_rate == 0.0);
    CHECK(summary.theta_star_scale == doctest::Approx(0.5));
    CHECK(summary.pairs == 800);

    PopulationSpec degenerate = inst.population;
    degenerate.groups.resize(1);
    degenerate.groups[0].mixture_weight = 1.0;
    degenerate.groups[0].baseline_stddev.setZero();
    degenerate.groups[0].offset_stddev = 0.0;
    degenerate.groups[0].effort_noise.clear();
    AssessmentRule any{(Vector(2) << 0.8, -0.3).finished(), 0.0};
    AuditSummary flat = audit_population(degenerate, any, 100, 19);
    CHECK(flat.violation_rate == 0.0);
    CHECK(flat.max_gap_to_distance == 0.0);
    CHECK(flat.worst_gap == 0.0);
}

TEST_CASE("audit: the worked instance as a population violates everywhere") {
    UnfairInstance inst = example_unfair_instance(4);
    PopulationSpec spec;
    spec.m = 4;
    spec.d = 4;
    spec.causal = inst.model;
    SubpopulationSpec a;
    a.label = "skilled";
    a.mixture_weight = 0.5;
    a.baseline_mean = inst.u.baseline_features;
    a.baseline_stddev = Vector::Zero(4);
    a.effort_matrix_mean = inst.u.effort_matrix;
    SubpopulationSpec b = a;
    b.label = "unskilled";
    b.effort_matrix_mean = inst.u_prime.effort_matrix;
    spec.groups = {a, b};

    AssessmentRule uniform{Vector::Constant(4, 0.5), 0.0};
    AuditSummary summary = audit_population(spec, uniform, 200, 23);
    CHECK(summary.violation_rate == 1.0);
    CHECK(std::isinf(summary.max_gap_to_distance));
    CHECK(summary.worst_distance == 0.0);
    CHECK(summary.worst_gap == doctest::Approx(2.0));
}
