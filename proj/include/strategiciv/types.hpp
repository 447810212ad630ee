#pragma once

#include <Eigen/Dense>
#include <string>
#include <vector>

#include "strategiciv/errors.hpp"

namespace strategiciv {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;
using Index = Eigen::Index;

/// One agent's latent tuple: baseline observable features b (length m),
/// effort conversion matrix (m x d) mapping hidden effort to feature
/// changes, and the confounding outcome offset o.
struct AgentType {
    Vector baseline_features;
    Matrix effort_matrix;
    double outcome_offset = 0.0;

    Index m() const { return baseline_features.size(); }
    Index d() const { return effort_matrix.cols(); }
};

/// Deployed linear assessment rule: prediction weights plus an intercept
/// estimate.  The intercept shifts predictions uniformly and never enters
/// the agents' best response, so simulations default it to zero.
struct AssessmentRule {
    Vector weights;
    double intercept = 0.0;

    Index m() const { return weights.size(); }
};

/// The true causal relationship between observable features and the
/// outcome.  The causally relevant support is exactly the set of nonzero
/// coordinates.
struct CausalModel {
    Vector theta_star;

    Index m() const { return theta_star.size(); }

    std::vector<Index> support() const {
        std::vector<Index> idx;
        for (Index i = 0; i < theta_star.size(); ++i)
            if (theta_star[i] != 0.0) idx.push_back(i);
        return idx;
    }
};

/// One logged round: the deployed rule, the features the agent revealed,
/// and the realized outcome.
struct Interaction {
    AssessmentRule rule;
    Vector features;
    double outcome = 0.0;
};

/// Ordered interaction records, all of a common dimension m, with
/// optional per-record group labels.
struct InteractionLog {
    Index m = 0;
    std::vector<Interaction> records;
    std::vector<std::string> groups;  // empty, or one label per record

    Index size() const { return static_cast<Index>(records.size()); }
    bool has_groups() const { return !groups.empty(); }
};

inline void require_same_dim(Index a, Index b, const char* what_a, const char* what_b) {
    if (a != b)
        throw DimensionError(std::string("dimension mismatch: ") + what_a + " has length " +
                             std::to_string(a) + " but " + what_b + " has length " +
                             std::to_string(b));
}

inline void require_finite(const Vector& v, const char* what) {
    if (!v.allFinite()) throw ValidationError(std::string(what) + " has non-finite entries");
}

inline void require_finite(const Matrix& m, const char* what) {
    if (!m.allFinite()) throw ValidationError(std::string(what) + " has non-finite entries");
}

}  // namespace strategiciv
