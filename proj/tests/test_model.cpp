#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <random>

#include "strategiciv/model.hpp"

using namespace strategiciv;

namespace {

AgentType make_agent(Vector b, Matrix e, double o = 0.0) {
    return AgentType{std::move(b), std::move(e), o};
}

// Brute-force maximizer of theta^T (b + E a) - 0.5 ||a||^2 over a grid.
Vector grid_best_effort(const AgentType& agent, const AssessmentRule& rule, double lo, double hi,
                        double step) {
    Vector best = Vector::Constant(agent.d(), lo);
    double best_val = -1e300;
    Vector a(agent.d());
    for (double a0 = lo; a0 <= hi; a0 += step) {
        for (double a1 = lo; a1 <= hi; a1 += step) {
            a << a0, a1;
            double val = rule.weights.dot(agent.baseline_features + agent.effort_matrix * a) -
                         0.5 * a.squaredNorm();
            if (val > best_val) {
                best_val = val;
                best = a;
            }
        }
    }
    return best;
}

}  // namespace

TEST_CASE("best response is E^T theta") {
    AgentType agent = make_agent(Vector::Zero(2), Matrix::Identity(2, 2));
    AssessmentRule rule{(Vector(2) << 3.0, -1.0).finished(), 0.0};
    CHECK((best_respond(agent, rule) - rule.weights).norm() == doctest::Approx(0.0));

    rule.weights.setZero();
    CHECK(best_respond(agent, rule).norm() == 0.0);

    AgentType scaled = make_agent(Vector::Zero(2), (Matrix(2, 2) << 10, 0, 0, 1).finished());
    AssessmentRule ones{(Vector(2) << 1.0, 1.0).finished(), 0.0};
    Vector a = best_respond(scaled, ones);
    CHECK(a[0] == doctest::Approx(10.0));
    CHECK(a[1] == doctest::Approx(1.0));

    // Same point from brute-force maximization of the agent utility.
    Vector grid = grid_best_effort(scaled, ones, -1.0, 12.0, 0.05);
    CHECK((a - grid).cwiseAbs().maxCoeff() <= 0.05);
}

TEST_CASE("best response rejects mismatched dimensions") {
    AgentType agent = make_agent(Vector::Zero(3), Matrix::Identity(3, 2));
    AssessmentRule rule{Vector::Zero(2), 0.0};
    CHECK_THROWS_AS(best_respond(agent, rule), DimensionError);
    CHECK_THROWS_AS(observe_features(agent, rule), DimensionError);
}

TEST_CASE("observed features are b + E E^T theta") {
    AgentType no_capacity = make_agent((Vector(2) << 1.0, 2.0).finished(), Matrix::Zero(2, 2));
    AssessmentRule rule{(Vector(2) << 5.0, -7.0).finished(), 0.0};
    CHECK((observe_features(no_capacity, rule) - no_capacity.baseline_features).norm() == 0.0);

    AgentType unit = make_agent(Vector::Zero(2), Matrix::Identity(2, 2));
    AssessmentRule half{(Vector(2) << 0.5, 0.5).finished(), 0.0};
    CHECK((observe_features(unit, half) - half.weights).norm() == doctest::Approx(0.0));

    AgentType admissions =
        make_agent((Vector(2) << 800.0, 1.8).finished(), (Matrix(2, 2) << 10, 0, 0, 1).finished());
    AssessmentRule r{(Vector(2) << 1.0, 2.0).finished(), 0.0};
    Vector x = observe_features(admissions, r);
    // Oracle: explicit loops over b_i + sum_j (E E^T)_{ij} theta_j.
    Vector expect(2);
    for (Index i = 0; i < 2; ++i) {
        expect[i] = admissions.baseline_features[i];
        for (Index j = 0; j < 2; ++j) {
            double ee = 0.0;
            for (Index k = 0; k < 2; ++k)
                ee += admissions.effort_matrix(i, k) * admissions.effort_matrix(j, k);
            expect[i] += ee * r.weights[j];
        }
    }
    CHECK(x[0] == doctest::Approx(900.0).epsilon(1e-12));
    CHECK(x[1] == doctest::Approx(3.8).epsilon(1e-12));
    CHECK((x - expect).norm() == doctest::Approx(0.0));
}

TEST_CASE("outcome and prediction") {
    AgentType agent = make_agent(Vector::Zero(2), Matrix::Zero(2, 2), 1.5);
    CausalModel zero{Vector::Zero(2)};
    CHECK(realize_outcome(agent, Vector::Zero(2), zero) == doctest::Approx(1.5));

    CausalModel model{(Vector(2) << 0.0, 0.5).finished()};
    AgentType half = make_agent(Vector::Zero(2), Matrix::Zero(2, 2), 0.5);
    CHECK(realize_outcome(half, (Vector(2) << 1000.0, 3.0).finished(), model) ==
          doctest::Approx(2.0));

    CausalModel probe{(Vector(3) << 0.7, 0.2, -0.4).finished()};
    AgentType basis = make_agent(Vector::Zero(3), Matrix::Zero(3, 1), 0.0);
    CHECK(realize_outcome(basis, Vector::Unit(3, 0), probe) == doctest::Approx(0.7));

    AssessmentRule flat{Vector::Zero(2), 2.0};
    CHECK(predict(flat, (Vector(2) << 9.0, -3.0).finished()) == doctest::Approx(2.0));
    AssessmentRule w{(Vector(2) << 1.0, 0.5).finished(), 0.0};
    CHECK(predict(w, (Vector(2) << 2.0, 4.0).finished()) == doctest::Approx(4.0));

    CHECK_THROWS_AS(predict(w, Vector::Zero(3)), DimensionError);
    CHECK_THROWS_AS(realize_outcome(half, Vector::Zero(3), model), DimensionError);
}

TEST_CASE("prediction is linear in the intercept") {
    std::mt19937_64 rng(7);
    std::normal_distribution<double> dist(0.0, 2.0);
    for (int trial = 0; trial < 20; ++trial) {
        Vector x(3), w(3);
        for (Index i = 0; i < 3; ++i) x[i] = dist(rng), w[i] = dist(rng);
        double c = dist(rng);
        CHECK(predict({w, c}, x) - predict({w, 0.0}, x) == doctest::Approx(c).epsilon(1e-12));
    }
}

TEST_CASE("best-response optimality against random candidate efforts") {
    std::mt19937_64 rng(11);
    std::normal_distribution<double> dist(0.0, 1.0);
    for (int trial = 0; trial < 50; ++trial) {
        Index m = 2 + trial % 2, d = 1 + trial % 3;
        AgentType agent;
        agent.baseline_features = Vector::NullaryExpr(m, [&](Index) { return dist(rng); });
        agent.effort_matrix = Matrix::NullaryExpr(m, d, [&](Index, Index) { return dist(rng); });
        AssessmentRule rule{Vector::NullaryExpr(m, [&](Index) { return dist(rng); }), dist(rng)};
        Vector a = best_respond(agent, rule);
        double utility = predict(rule, Vector(agent.baseline_features + agent.effort_matrix * a)) -
                         0.5 * a.squaredNorm();
        for (int k = 0; k < 20; ++k) {
            Vector cand = Vector::NullaryExpr(d, [&](Index) { return 3.0 * dist(rng); });
            double cand_utility =
                predict(rule, Vector(agent.baseline_features + agent.effort_matrix * cand)) -
                0.5 * cand.squaredNorm();
            CHECK(utility >= cand_utility - 1e-9);
        }
    }
}

TEST_CASE("behavior ignores the rule intercept") {
    std::mt19937_64 rng(23);
    std::normal_distribution<double> dist(0.0, 1.0);
    for (int trial = 0; trial < 20; ++trial) {
        AgentType agent;
        agent.baseline_features = Vector::NullaryExpr(2, [&](Index) { return dist(rng); });
        agent.effort_matrix = Matrix::NullaryExpr(2, 2, [&](Index, Index) { return dist(rng); });
        Vector w = Vector::NullaryExpr(2, [&](Index) { return dist(rng); });
        AssessmentRule plain{w, 0.0}, shifted{w, dist(rng)};
        CHECK((best_respond(agent, plain) - best_respond(agent, shifted)).norm() == 0.0);
        CHECK((observe_features(agent, plain) - observe_features(agent, shifted)).norm() == 0.0);
    }
}

TEST_CASE("composed outcome matches the symbolic expansion") {
    std::mt19937_64 rng(31);
    std::normal_distribution<double> dist(0.0, 1.0);
    for (int trial = 0; trial < 50; ++trial) {
        Index m = 1 + trial % 4, d = 1 + trial % 3;
        AgentType agent;
        agent.baseline_features = Vector::NullaryExpr(m, [&](Index) { return dist(rng); });
        agent.effort_matrix = Matrix::NullaryExpr(m, d, [&](Index, Index) { return dist(rng); });
        agent.outcome_offset = dist(rng);
        CausalModel model{Vector::NullaryExpr(m, [&](Index) { return dist(rng); })};
        AssessmentRule rule{Vector::NullaryExpr(m, [&](Index) { return dist(rng); }), 0.0};

        double composed = realize_outcome(agent, observe_features(agent, rule), model);
        Matrix ee = agent.effort_matrix * agent.effort_matrix.transpose();
        double expanded = agent.baseline_features.dot(model.theta_star) +
                          rule.weights.dot(ee * model.theta_star) + agent.outcome_offset;
        CHECK(composed == doctest::Approx(expanded).epsilon(1e-12));
    }
}
