#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <string>
#include <utility>
#include <vector>

#include "strategiciv/csv.hpp"
#include "strategiciv/estimators.hpp"
#include "strategiciv/fairness.hpp"
#include "strategiciv/optimize.hpp"
#include "strategiciv/simulate.hpp"
#include "strategiciv/svg.hpp"

namespace strategiciv {

/// Reproduction run configuration.  Seeds default to 1..10 so summary
/// rows average ten runs; horizons drive the estimation experiments.
struct ExperimentConfig {
    std::string experiment;
    std::vector<std::uint64_t> seeds = {1, 2, 3, 4, 5, 6, 7, 8, 9, 10};
    std::vector<Index> horizons = {500, 2000, 5000};
    std::string output_dir = ".";
    AdmissionsInstance instance = admissions_spec();
};

struct ExperimentOutput {
    std::vector<std::pair<std::string, Table>> tables;
    std::vector<std::pair<std::string, Figure>> figures;
};

namespace stats {

inline double median(std::vector<double> v) {
    std::sort(v.begin(), v.end());
    std::size_t n = v.size();
    return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

inline double mean(const std::vector<double>& v) {
    double s = 0.0;
    for (double x : v) s += x;
    return s / static_cast<double>(v.size());
}

inline double stddev(const std::vector<double>& v) {
    if (v.size() < 2) return 0.0;
    double m = mean(v), s = 0.0;
    for (double x : v) s += (x - m) * (x - m);
    return std::sqrt(s / static_cast<double>(v.size() - 1));
}

}  // namespace stats

namespace detail {

inline std::string seed_caption(const std::vector<std::uint64_t>& seeds) {
    std::string s = "seeds:";
    for (auto v : seeds) s += " " + std::to_string(v);
    return s;
}

inline Series series_from_table(const Table& t, const std::string& x_col,
                                const std::string& y_col, std::string label, std::string color) {
    Series s;
    s.label = std::move(label);
    s.color = std::move(color);
    s.x = t.numeric_column(x_col);
    s.y = t.numeric_column(y_col);
    return s;
}

}  // namespace detail

// --- estimate-convergence -------------------------------------------------

/// Per-horizon OLS and 2SLS estimation errors across seeds, plus a
/// 1/sqrt(T) reference anchored at the first 2SLS point.
inline Table estimate_convergence_table(const ExperimentConfig& config) {
    Table t;
    t.columns = {"T", "method", "median_error", "mean_error", "stddev_error", "min_error",
                 "max_error"};
    const auto& inst = config.instance;
    const Vector& theta_star = inst.population.causal.theta_star;

    std::vector<Index> horizons = config.horizons;
    std::sort(horizons.begin(), horizons.end());
    double anchor = 0.0;
    for (Index T : horizons) {
        std::vector<double> ols_err, tsls_err;
        for (auto seed : config.seeds) {
            RuleSchedule sched = inst.schedule;
            sched.horizon = T;
            InteractionLog log = run_simulation(inst.population, sched, seed);
            ols_err.push_back((ols_fit(log).coefficients - theta_star).norm());
            tsls_err.push_back((tsls_fit(log).theta_hat - theta_star).norm());
        }
        for (const auto& [name, err] : {std::pair{"ols", ols_err}, std::pair{"2sls", tsls_err}})
            t.add_row({format_double(static_cast<double>(T)), name,
                       format_double(stats::median(err)), format_double(stats::mean(err)),
                       format_double(stats::stddev(err)), format_double(*std::min_element(err.begin(), err.end())),
                       format_double(*std::max_element(err.begin(), err.end()))});
        if (T == horizons.front()) anchor = stats::median(tsls_err) * std::sqrt(static_cast<double>(T));
    }
    for (Index T : horizons)
        t.add_row({format_double(static_cast<double>(T)), "ref-1/sqrtT",
                   format_double(anchor / std::sqrt(static_cast<double>(T))), "0", "0", "0", "0"});
    return t;
}

inline Figure estimate_convergence_figure(const Table& t, const std::string& caption) {
    Figure fig;
    fig.title = "Estimation error vs horizon";
    fig.x_label = "T (rounds)";
    fig.y_label = "median ||theta_hat - theta*||_2";
    fig.caption = caption;
    auto method_col = t.column_index("method");
    auto pick = [&](const std::string& method) {
        Table sub;
        sub.columns = t.columns;
        for (const auto& row : t.rows)
            if (row[method_col] == method) sub.rows.push_back(row);
        return sub;
    };
    for (const auto& [method, color] :
         {std::pair{"ols", "#ff7f0e"}, std::pair{"2sls", "#1f77b4"}}) {
        Table sub = pick(method);
        Series s = detail::series_from_table(sub, "T", "median_error", method, color);
        s.band_lo = sub.numeric_column("min_error");
        s.band_hi = sub.numeric_column("max_error");
        fig.series.push_back(std::move(s));
    }
    Series ref = detail::series_from_table(pick("ref-1/sqrtT"), "T", "median_error",
                                           "c/sqrt(T)", "#d62728");
    ref.dashed = true;
    fig.series.push_back(std::move(ref));
    return fig;
}

// --- ols-vs-2sls ------------------------------------------------------------

/// First-coordinate (SAT) estimates on growing log prefixes.
inline Table sat_coefficient_table(const ExperimentConfig& config) {
    Table t;
    t.columns = {"T",        "ols_median",  "ols_stddev",  "ols_min",  "ols_max",
                 "tsls_median", "tsls_stddev", "tsls_min", "tsls_max", "theta_star"};
    const auto& inst = config.instance;
    Index t_max = *std::max_element(config.horizons.begin(), config.horizons.end());
    std::vector<Index> checkpoints;
    for (int k = 1; k <= 10; ++k) checkpoints.push_back(t_max * k / 10);

    std::vector<InteractionLog> logs;
    for (auto seed : config.seeds) {
        RuleSchedule sched = inst.schedule;
        sched.horizon = t_max;
        logs.push_back(run_simulation(inst.population, sched, seed));
    }
    for (Index T : checkpoints) {
        std::vector<double> ols_c, tsls_c;
        for (const auto& log : logs) {
            InteractionLog prefix;
            prefix.m = log.m;
            prefix.records.assign(log.records.begin(), log.records.begin() + T);
            ols_c.push_back(ols_fit(prefix).coefficients[0]);
            tsls_c.push_back(tsls_fit(prefix).theta_hat[0]);
        }
        t.add_row({format_double(static_cast<double>(T)), format_double(stats::median(ols_c)),
                   format_double(stats::stddev(ols_c)),
                   format_double(*std::min_element(ols_c.begin(), ols_c.end())),
                   format_double(*std::max_element(ols_c.begin(), ols_c.end())),
                   format_double(stats::median(tsls_c)), format_double(stats::stddev(tsls_c)),
                   format_double(*std::min_element(tsls_c.begin(), tsls_c.end())),
                   format_double(*std::max_element(tsls_c.begin(), tsls_c.end())),
                   format_double(inst.population.causal.theta_star[0])});
    }
    return t;
}

inline Figure sat_coefficient_figure(const Table& t, const std::string& caption) {
    Figure fig;
    fig.title = "First-coordinate estimate: OLS vs 2SLS";
    fig.x_label = "T (rounds)";
    fig.y_label = "estimated coefficient";
    fig.caption = caption;
    Series ols = detail::series_from_table(t, "T", "ols_median", "ols", "#ff7f0e");
    ols.band_lo = t.numeric_column("ols_min");
    ols.band_hi = t.numeric_column("ols_max");
    Series tsls = detail::series_from_table(t, "T", "tsls_median", "2sls", "#1f77b4");
    tsls.band_lo = t.numeric_column("tsls_min");
    tsls.band_hi = t.numeric_column("tsls_max");
    Series ref = detail::series_from_table(t, "T", "theta_star", "true effect", "#d62728");
    ref.dashed = true;
    fig.series = {std::move(ols), std::move(tsls), std::move(ref)};
    return fig;
}

// --- sgd-vs-ssgd ------------------------------------------------------------

inline SgdConfig one_d_descent_config(double theta0, Index steps, double eta0,
                                      SgdConfig::GradientKind kind) {
    SgdConfig config;
    config.initial_rule = Vector::Constant(1, theta0);
    config.steps = steps;
    config.step_size = SgdConfig::StepSizeKind::Decaying;
    config.eta0 = eta0;
    config.gradient = kind;
    return config;
}

/// Grid minimizer of the analytic 1D risk.
inline double one_d_grid_minimizer(const OneDPopulation& pop, double lo = -2.0, double hi = 2.0,
                                   double step = 1e-4) {
    double best_theta = lo, best_risk = one_d_risk(pop, lo);
    for (double theta = lo; theta <= hi; theta += step) {
        double r = one_d_risk(pop, theta);
        if (r < best_risk) best_risk = r, best_theta = theta;
    }
    return best_theta;
}

/// Canonical trajectory serialization: t,theta_1..theta_m,risk_sample.
inline Table trajectory_table(const Trajectory& trajectory) {
    if (trajectory.points.empty()) throw ValidationError("cannot serialize an empty trajectory");
    Table t;
    t.columns = {"t"};
    for (Index i = 1; i <= trajectory.points.front().theta.size(); ++i)
        t.columns.push_back("theta_" + std::to_string(i));
    t.columns.push_back("risk_sample");
    for (const auto& point : trajectory.points) {
        std::vector<std::string> row = {format_double(static_cast<double>(point.t))};
        for (Index i = 0; i < point.theta.size(); ++i)
            row.push_back(format_double(point.theta[i]));
        row.push_back(format_double(point.risk_sample));
        t.add_row(std::move(row));
    }
    return t;
}

inline Table sgd_trajectories_table(const OneDPopulation& pop, double theta0, Index steps,
                                    double eta0) {
    Trajectory corrected = sgd_minimize_risk(
        one_d_descent_config(theta0, steps, eta0, SgdConfig::GradientKind::Corrected), pop);
    Trajectory simple = sgd_minimize_risk(
        one_d_descent_config(theta0, steps, eta0, SgdConfig::GradientKind::Simple), pop);
    Table t;
    t.columns = {"t", "theta_corrected", "risk_corrected", "theta_simple", "risk_simple"};
    for (std::size_t i = 0; i < corrected.points.size(); ++i)
        t.add_row({format_double(static_cast<double>(corrected.points[i].t)),
                   format_double(corrected.points[i].theta[0]),
                   format_double(corrected.points[i].risk_sample),
                   format_double(simple.points[i].theta[0]),
                   format_double(simple.points[i].risk_sample)});
    return t;
}

inline Table one_d_risk_curve_table(const OneDPopulation& pop, double lo, double hi, double step) {
    Table t;
    t.columns = {"theta", "risk"};
    for (double theta = lo; theta <= hi + 1e-12; theta += step)
        t.add_row({format_double(theta), format_double(one_d_risk(pop, theta))});
    return t;
}

inline Table sgd_summary_table(const OneDPopulation& pop, const Table& trajectories) {
    auto theta_c = trajectories.numeric_column("theta_corrected");
    auto theta_s = trajectories.numeric_column("theta_simple");
    auto risk_c = trajectories.numeric_column("risk_corrected");
    auto risk_s = trajectories.numeric_column("risk_simple");
    double minimizer = one_d_grid_minimizer(pop);
    Table t;
    t.columns = {"final_theta_corrected", "final_risk_corrected", "final_theta_simple",
                 "final_risk_simple", "grid_minimizer", "grid_min_risk", "theta_star"};
    t.add_row({format_double(theta_c.back()), format_double(risk_c.back()),
               format_double(theta_s.back()), format_double(risk_s.back()),
               format_double(minimizer), format_double(one_d_risk(pop, minimizer)),
               format_double(pop.theta_star)});
    return t;
}

inline Figure sgd_theta_figure(const Table& trajectories, const Table& summary,
                               const std::string& caption) {
    Figure fig;
    fig.title = "Gradient descent iterates, corrected vs simple gradient";
    fig.x_label = "step";
    fig.y_label = "theta_t";
    fig.caption = caption;
    Series c = detail::series_from_table(trajectories, "t", "theta_corrected", "corrected (sgd)",
                                         "#1f77b4");
    Series s = detail::series_from_table(trajectories, "t", "theta_simple", "simple (ssgd)",
                                         "#ff7f0e");
    auto t_col = trajectories.numeric_column("t");
    double minimizer = summary.numeric_column("grid_minimizer")[0];
    Series ref;
    ref.label = "global minimizer";
    ref.color = "#d62728";
    ref.dashed = true;
    ref.x = {t_col.front(), t_col.back()};
    ref.y = {minimizer, minimizer};
    fig.series = {std::move(c), std::move(s), std::move(ref)};
    return fig;
}

inline Figure sgd_risk_curve_figure(const Table& curve, const Table& summary,
                                    const std::string& caption) {
    Figure fig;
    fig.title = "Analytic predictive risk with final iterates";
    fig.x_label = "theta";
    fig.y_label = "risk";
    fig.caption = caption;
    fig.series.push_back(detail::series_from_table(curve, "theta", "risk", "risk", "#2ca02c"));
    Series finals;
    finals.label = "final iterates";
    finals.color = "#d62728";
    finals.line = false;
    finals.markers = true;
    finals.x = {summary.numeric_column("final_theta_corrected")[0],
                summary.numeric_column("final_theta_simple")[0]};
    finals.y = {summary.numeric_column("final_risk_corrected")[0],
                summary.numeric_column("final_risk_simple")[0]};
    fig.series.push_back(std::move(finals));
    return fig;
}

// --- outcome-max ------------------------------------------------------------

/// Expected outcome of the estimated outcome-maximizing rule against
/// random feasible rules, all on the unit ball and sharing Monte-Carlo
/// agents.
inline Table outcome_max_table(const ExperimentConfig& config, Index fit_horizon = 2000,
                               Index random_rules = 100, Index mc_samples = 4000) {
    const auto& inst = config.instance;
    std::uint64_t seed = config.seeds.front();
    RuleSchedule sched = inst.schedule;
    sched.horizon = fit_horizon;
    TslsFit fit = tsls_fit(run_simulation(inst.population, sched, seed));
    ConstraintSet ball = ConstraintSet::l2_ball(1.0);
    AssessmentRule theta_ao = outcome_maximizing_rule(fit.lambda_hat, ball);

    Table t;
    t.columns = {"label", "theta_1", "theta_2", "expected_outcome", "std_error"};
    auto add = [&](const std::string& label, const AssessmentRule& rule) {
        MonteCarloEstimate est = expected_outcome(rule, inst.population, mc_samples, seed + 1);
        t.add_row({label, format_double(rule.weights[0]), format_double(rule.weights[1]),
                   format_double(est.value), format_double(est.std_error)});
    };
    add("theta_ao", theta_ao);
    RngStream directions(seed, 0, StreamPurpose::MonteCarlo);
    for (Index k = 0; k < random_rules; ++k) {
        Vector v(inst.population.m);
        for (Index i = 0; i < v.size(); ++i) v[i] = directions.normal(0.0, 1.0);
        double r = std::pow(directions.uniform01(), 1.0 / static_cast<double>(v.size()));
        v *= r / std::max(v.norm(), 1e-300);
        add("random_" + std::to_string(k + 1), AssessmentRule{v, 0.0});
    }
    return t;
}

inline Figure outcome_max_figure(const Table& t, const std::string& caption) {
    Figure fig;
    fig.title = "Expected agent outcome by deployed rule";
    fig.x_label = "rule (0 = theta_ao, then random rules)";
    fig.y_label = "E[y]";
    fig.caption = caption;
    auto values = t.numeric_column("expected_outcome");
    Series random;
    random.label = "random feasible rules";
    random.color = "#7f7f7f";
    random.line = false;
    random.markers = true;
    for (std::size_t i = 1; i < values.size(); ++i) {
        random.x.push_back(static_cast<double>(i));
        random.y.push_back(values[i]);
    }
    Series best;
    best.label = "theta_ao";
    best.color = "#d62728";
    best.line = false;
    best.markers = true;
    best.x = {0.0};
    best.y = {values[0]};
    fig.series = {std::move(random), std::move(best)};
    return fig;
}

// --- fairness-audit ----------------------------------------------------------

inline Table fairness_audit_table(const ExperimentConfig& config, Index pairs = 2000) {
    const auto& inst = config.instance;
    std::uint64_t seed = config.seeds.front();
    AssessmentRule causal_rule{inst.population.causal.theta_star, 0.0};
    Vector off = inst.population.causal.theta_star;
    off[0] += 0.05;  // weight on the non-causal first coordinate
    AssessmentRule non_causal_rule{off, 0.0};

    Table t;
    t.columns = {"rule", "violation_rate", "max_gap_to_distance", "pairs",
                 "worst_gap", "worst_distance", "theta_star_scale"};
    for (const auto& [label, rule] : {std::pair{"theta_star", causal_rule},
                                      std::pair{"non_causal", non_causal_rule}}) {
        AuditSummary s = audit_population(inst.population, rule, pairs, seed);
        t.add_row({label, format_double(s.violation_rate), format_double(s.max_gap_to_distance),
                   format_double(static_cast<double>(s.pairs)), format_double(s.worst_gap),
                   format_double(s.worst_distance), format_double(s.theta_star_scale)});
    }
    return t;
}

inline Table fairness_pairs_table(const ExperimentConfig& config, Index pairs = 500) {
    const auto& inst = config.instance;
    std::uint64_t seed = config.seeds.front();
    Vector off = inst.population.causal.theta_star;
    off[0] += 0.05;
    auto reports = audit_pair_reports(inst.population, AssessmentRule{off, 0.0}, pairs, seed);
    Table t;
    t.columns = {"pair", "distance", "gap", "satisfied"};
    for (std::size_t i = 0; i < reports.size(); ++i)
        t.add_row({format_double(static_cast<double>(i)), format_double(reports[i].distance),
                   format_double(reports[i].gap), reports[i].satisfied ? "1" : "0"});
    return t;
}

inline Figure fairness_scatter_figure(const Table& pairs, const std::string& caption) {
    Figure fig;
    fig.title = "Prediction gap vs causal similarity (non-causal rule)";
    fig.x_label = "d(u, u')";
    fig.y_label = "|y_hat - y_hat'|";
    fig.caption = caption;
    Series pts;
    pts.label = "sampled pairs";
    pts.color = "#1f77b4";
    pts.line = false;
    pts.markers = true;
    pts.x = pairs.numeric_column("distance");
    pts.y = pairs.numeric_column("gap");
    double hi = 0.0;
    for (double v : pts.x) hi = std::max(hi, v);
    for (double v : pts.y) hi = std::max(hi, v);
    Series diag;
    diag.label = "gap = distance";
    diag.color = "#d62728";
    diag.dashed = true;
    diag.x = {0.0, hi};
    diag.y = {0.0, hi};
    fig.series = {std::move(pts), std::move(diag)};
    return fig;
}

// --- dispatch ----------------------------------------------------------------

inline ExperimentOutput run_experiment(const ExperimentConfig& config) {
    if (config.seeds.empty()) throw ValidationError("experiment requires a non-empty seed list");
    if (config.horizons.empty())
        throw ValidationError("experiment requires a non-empty horizon list");
    ExperimentOutput out;
    std::string caption = detail::seed_caption(config.seeds);
    if (config.experiment == "estimate-convergence") {
        Table t = estimate_convergence_table(config);
        out.figures.emplace_back("estimate_convergence", estimate_convergence_figure(t, caption));
        out.tables.emplace_back("estimate_convergence", std::move(t));
    } else if (config.experiment == "ols-vs-2sls") {
        Table t = sat_coefficient_table(config);
        out.figures.emplace_back("sat_coefficient", sat_coefficient_figure(t, caption));
        out.tables.emplace_back("sat_coefficient", std::move(t));
    } else if (config.experiment == "sgd-vs-ssgd") {
        OneDPopulation pop = one_d_sign_flip_population();
        Table traj = sgd_trajectories_table(pop, 0.5, 1000, 0.001);
        Table curve = one_d_risk_curve_table(pop, -0.5, 1.2, 0.002);
        Table summary = sgd_summary_table(pop, traj);
        out.figures.emplace_back("sgd_theta", sgd_theta_figure(traj, summary, caption));
        out.figures.emplace_back("sgd_risk_curve", sgd_risk_curve_figure(curve, summary, caption));
        out.tables.emplace_back(
            "sgd_corrected_trajectory",
            trajectory_table(sgd_minimize_risk(
                one_d_descent_config(0.5, 1000, 0.001, SgdConfig::GradientKind::Corrected), pop)));
        out.tables.emplace_back(
            "sgd_simple_trajectory",
            trajectory_table(sgd_minimize_risk(
                one_d_descent_config(0.5, 1000, 0.001, SgdConfig::GradientKind::Simple), pop)));
        out.tables.emplace_back("sgd_trajectories", std::move(traj));
        out.tables.emplace_back("sgd_risk_curve", std::move(curve));
        out.tables.emplace_back("sgd_summary", std::move(summary));
    } else if (config.experiment == "outcome-max") {
        Table t = outcome_max_table(config);
        out.figures.emplace_back("outcome_max", outcome_max_figure(t, caption));
        out.tables.emplace_back("outcome_max", std::move(t));
    } else if (config.experiment == "fairness-audit") {
        Table summary = fairness_audit_table(config);
        Table pairs = fairness_pairs_table(config);
        out.figures.emplace_back("fairness_scatter", fairness_scatter_figure(pairs, caption));
        out.tables.emplace_back("fairness_audit", std::move(summary));
        out.tables.emplace_back("fairness_pairs", std::move(pairs));
    } else {
        throw ValidationError("unknown experiment id '" + config.experiment + "'");
    }
    return out;
}

inline void write_output(const ExperimentOutput& out, const std::string& dir) {
    std::error_code ec;
    std::filesystem::create_directories(dir, ec);
    if (ec) throw IoError("cannot create output directory '" + dir + "': " + ec.message());
    for (const auto& [name, table] : out.tables) write_csv(table, dir + "/" + name + ".csv");
    for (const auto& [name, figure] : out.figures) write_svg(figure, dir + "/" + name + ".svg");
}

}  // namespace strategiciv
