#pragma once

#include "strategiciv/types.hpp"

namespace strategiciv {

/// Effort vector (length d) maximizing predicted outcome minus quadratic
/// effort cost: a = E^T theta.  Independent of the rule intercept.
inline Vector best_respond(const AgentType& agent, const AssessmentRule& rule) {
    require_same_dim(rule.m(), agent.m(), "rule weights", "agent features");
    return agent.effort_matrix.transpose() * rule.weights;
}

/// Features revealed after the best response: x = b + E E^T theta.
inline Vector observe_features(const AgentType& agent, const AssessmentRule& rule) {
    require_same_dim(rule.m(), agent.m(), "rule weights", "agent features");
    return agent.baseline_features + agent.effort_matrix * (agent.effort_matrix.transpose() * rule.weights);
}

/// True outcome y = x^T theta_star + o.
inline double realize_outcome(const AgentType& agent, const Vector& features,
                              const CausalModel& model) {
    require_same_dim(features.size(), model.m(), "features", "theta_star");
    require_same_dim(agent.m(), model.m(), "agent features", "theta_star");
    return features.dot(model.theta_star) + agent.outcome_offset;
}

/// Predicted outcome y_hat = x^T theta + intercept.
inline double predict(const AssessmentRule& rule, const Vector& features) {
    require_same_dim(features.size(), rule.m(), "features", "rule weights");
    return features.dot(rule.weights) + rule.intercept;
}

}  // namespace strategiciv
