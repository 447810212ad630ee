#pragma once

#include <fstream>
#include <set>
#include <string>
#include <vector>

#include <json.hpp>

#include "strategiciv/estimators.hpp"
#include "strategiciv/fairness.hpp"
#include "strategiciv/population.hpp"

namespace strategiciv {

using Json = nlohmann::json;

namespace detail {

inline void reject_unknown_keys(const Json& obj, const std::set<std::string>& allowed,
                                const std::string& where) {
    for (auto it = obj.begin(); it != obj.end(); ++it)
        if (!allowed.count(it.key()))
            throw ParseError("unknown key '" + it.key() + "' in " + where);
}

inline Vector vector_from_json(const Json& j, const std::string& where) {
    if (!j.is_array()) throw ParseError(where + " must be an array of numbers");
    Vector v(j.size());
    for (std::size_t i = 0; i < j.size(); ++i) {
        if (!j[i].is_number()) throw ParseError(where + " must contain only numbers");
        v[static_cast<Index>(i)] = j[i].get<double>();
    }
    return v;
}

inline Matrix matrix_from_json(const Json& j, const std::string& where) {
    if (!j.is_array() || j.empty()) throw ParseError(where + " must be a non-empty array of rows");
    Matrix out;
    for (std::size_t r = 0; r < j.size(); ++r) {
        Vector row = vector_from_json(j[r], where + " row " + std::to_string(r));
        if (r == 0) out.resize(static_cast<Index>(j.size()), row.size());
        if (row.size() != out.cols()) throw ParseError(where + " has ragged rows");
        out.row(static_cast<Index>(r)) = row;
    }
    return out;
}

inline Json vector_to_json(const Vector& v) {
    Json j = Json::array();
    for (Index i = 0; i < v.size(); ++i) j.push_back(v[i]);
    return j;
}

// Matrices serialize as flat row-major arrays.
inline Json matrix_to_json(const Matrix& m) {
    Json j = Json::array();
    for (Index r = 0; r < m.rows(); ++r)
        for (Index c = 0; c < m.cols(); ++c) j.push_back(m(r, c));
    return j;
}

}  // namespace detail

inline SubpopulationSpec group_from_json(const Json& j) {
    detail::reject_unknown_keys(j,
                                {"label", "mixture_weight", "baseline_mean", "baseline_stddev",
                                 "baseline_clamp", "effort_matrix_mean", "effort_noise",
                                 "offset_mean", "offset_stddev"},
                                "group");
    SubpopulationSpec g;
    g.label = j.at("label").get<std::string>();
    g.mixture_weight = j.at("mixture_weight").get<double>();
    g.baseline_mean = detail::vector_from_json(j.at("baseline_mean"), "baseline_mean");
    g.baseline_stddev = detail::vector_from_json(j.at("baseline_stddev"), "baseline_stddev");
    if (j.contains("baseline_clamp") && !j.at("baseline_clamp").is_null()) {
        for (const auto& c : j.at("baseline_clamp")) {
            if (c.is_null()) {
                g.baseline_clamp.push_back(std::nullopt);
            } else {
                if (!c.is_array() || c.size() != 2)
                    throw ParseError("baseline_clamp entries must be [lo, hi] or null");
                g.baseline_clamp.push_back(ClampInterval{c[0].get<double>(), c[1].get<double>()});
            }
        }
    }
    g.effort_matrix_mean = detail::matrix_from_json(j.at("effort_matrix_mean"), "effort_matrix_mean");
    if (j.contains("effort_noise")) {
        for (const auto& e : j.at("effort_noise")) {
            detail::reject_unknown_keys(e, {"row", "col", "mean", "stddev", "sign"}, "effort_noise");
            g.effort_noise.push_back({e.at("row").get<Index>(), e.at("col").get<Index>(),
                                      e.at("mean").get<double>(), e.at("stddev").get<double>(),
                                      e.at("sign").get<int>()});
        }
    }
    g.offset_mean = j.at("offset_mean").get<double>();
    g.offset_stddev = j.at("offset_stddev").get<double>();
    return g;
}

inline PopulationSpec population_from_json(const Json& j) {
    detail::reject_unknown_keys(j, {"m", "d", "causal", "groups"}, "population");
    PopulationSpec spec;
    spec.m = j.at("m").get<Index>();
    spec.d = j.at("d").get<Index>();
    detail::reject_unknown_keys(j.at("causal"), {"theta_star"}, "causal");
    spec.causal.theta_star = detail::vector_from_json(j.at("causal").at("theta_star"), "theta_star");
    for (const auto& g : j.at("groups")) spec.groups.push_back(group_from_json(g));
    validate(spec);
    return spec;
}

inline RuleSchedule schedule_from_json(const Json& j, Index m) {
    detail::reject_unknown_keys(j, {"kind", "rules", "center", "stddev", "horizon"}, "schedule");
    RuleSchedule sched;
    std::string kind = j.at("kind").get<std::string>();
    if (kind == "fixed-list") {
        sched.kind = RuleSchedule::Kind::FixedList;
        for (const auto& r : j.at("rules")) {
            detail::reject_unknown_keys(r, {"weights", "intercept"}, "rule");
            AssessmentRule rule;
            rule.weights = detail::vector_from_json(r.at("weights"), "rule weights");
            rule.intercept = r.contains("intercept") ? r.at("intercept").get<double>() : 0.0;
            sched.rules.push_back(std::move(rule));
        }
    } else if (kind == "gaussian-perturbation") {
        sched.kind = RuleSchedule::Kind::GaussianPerturbation;
        sched.center = detail::vector_from_json(j.at("center"), "schedule center");
        sched.stddev = detail::vector_from_json(j.at("stddev"), "schedule stddev");
    } else {
        throw ParseError("unknown schedule kind '" + kind + "'");
    }
    sched.horizon = j.at("horizon").get<Index>();
    validate(sched, m);
    return sched;
}

/// Parse the combined population/schedule configuration document.
inline AdmissionsInstance instance_from_json(const Json& j) {
    detail::reject_unknown_keys(j, {"population", "schedule"}, "config");
    AdmissionsInstance inst;
    inst.population = population_from_json(j.at("population"));
    inst.schedule = schedule_from_json(j.at("schedule"), inst.population.m);
    return inst;
}

inline AdmissionsInstance load_instance(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open '" + path + "' for reading");
    Json j;
    try {
        j = Json::parse(in);
    } catch (const Json::parse_error& e) {
        throw ParseError("invalid JSON in '" + path + "': " + e.what());
    }
    try {
        return instance_from_json(j);
    } catch (const Json::exception& e) {
        throw ParseError("invalid config in '" + path + "': " + e.what());
    }
}

inline Json to_json(const OlsFit& fit) {
    return Json{{"coefficients", detail::vector_to_json(fit.coefficients)},
                {"intercept", fit.intercept}};
}

inline Json to_json(const TslsFit& fit) {
    return Json{{"omega_hat", detail::matrix_to_json(fit.omega_hat)},
                {"baseline_mean", detail::vector_to_json(fit.baseline_mean)},
                {"lambda_hat", detail::vector_to_json(fit.lambda_hat)},
                {"intercept_hat", fit.intercept_hat},
                {"theta_hat", detail::vector_to_json(fit.theta_hat)},
                {"design_min_singular_value", fit.design_min_singular_value},
                {"residual_stddev", fit.residual_stddev}};
}

inline Json to_json(const AuditSummary& s) {
    Json j{{"pairs", s.pairs},
           {"violation_rate", s.violation_rate},
           {"theta_star_scale", s.theta_star_scale},
           {"worst_pair", s.worst_pair},
           {"worst_gap", s.worst_gap},
           {"worst_distance", s.worst_distance}};
    if (std::isinf(s.max_gap_to_distance))
        j["max_gap_to_distance"] = "unbounded";
    else
        j["max_gap_to_distance"] = s.max_gap_to_distance;
    return j;
}

}  // namespace strategiciv
