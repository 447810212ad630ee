// strategic-iv: simulate strategic agent populations, recover causal
// coefficients from interaction logs, optimize deployed rules, audit
// individual fairness, and reproduce the bundled experiments.

#include <cstdint>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "strategiciv/experiments.hpp"
#include "strategiciv/json_io.hpp"

namespace siv = strategiciv;

namespace {

constexpr int kExitUsage = 1;
constexpr int kExitNumerical = 2;
constexpr int kExitIo = 3;

siv::AdmissionsInstance load_population(const std::string& population) {
    if (population == "admissions") return siv::admissions_spec();
    return siv::load_instance(population);
}

siv::Vector parse_vector_flag(const std::string& text) {
    auto fields = siv::split_csv_line(text);
    siv::Vector v(static_cast<siv::Index>(fields.size()));
    for (std::size_t i = 0; i < fields.size(); ++i)
        v[static_cast<siv::Index>(i)] = siv::parse_double(fields[i], 1);
    return v;
}

// ball:<radius> or box:<lo1,...>:<hi1,...>
siv::ConstraintSet parse_constraint_flag(const std::string& text) {
    if (text.rfind("ball:", 0) == 0)
        return siv::ConstraintSet::l2_ball(siv::parse_double(text.substr(5), 1));
    if (text.rfind("box:", 0) == 0) {
        std::string rest = text.substr(4);
        auto colon = rest.find(':');
        if (colon == std::string::npos)
            throw siv::ValidationError("box constraint needs box:<lo,...>:<hi,...>");
        return siv::ConstraintSet::box(parse_vector_flag(rest.substr(0, colon)),
                                       parse_vector_flag(rest.substr(colon + 1)));
    }
    throw siv::ValidationError("constraint must be ball:<radius> or box:<lo,...>:<hi,...>");
}

void emit(const std::string& text, const std::string& out_path) {
    if (out_path.empty() || out_path == "-") {
        std::cout << text;
        return;
    }
    std::ofstream out(out_path, std::ios::binary);
    if (!out) throw siv::IoError("cannot open '" + out_path + "' for writing");
    out << text;
    if (!out) throw siv::IoError("write failed for '" + out_path + "'");
}

std::vector<std::uint64_t> parse_seed_list(const std::string& text) {
    std::vector<std::uint64_t> seeds;
    for (const auto& f : siv::split_csv_line(text))
        seeds.push_back(static_cast<std::uint64_t>(std::stoull(f)));
    if (seeds.empty()) throw siv::ValidationError("empty seed list");
    return seeds;
}

std::vector<siv::Index> parse_horizon_list(const std::string& text) {
    std::vector<siv::Index> horizons;
    for (const auto& f : siv::split_csv_line(text))
        horizons.push_back(static_cast<siv::Index>(std::stoll(f)));
    if (horizons.empty()) throw siv::ValidationError("empty horizon list");
    return horizons;
}

int run_simulate(const std::string& population, std::uint64_t seed,
                 std::optional<long> horizon, const std::string& out_path) {
    auto inst = load_population(population);
    if (horizon) inst.schedule.horizon = *horizon;
    siv::InteractionLog log = siv::run_simulation(inst.population, inst.schedule, seed);
    std::ostringstream buffer;
    siv::write_log(log, buffer);
    emit(buffer.str(), out_path);
    return 0;
}

int run_estimate(const std::string& log_path, const std::string& method, double delta,
                 std::optional<double> sigma_g, const std::string& out_path) {
    siv::InteractionLog log = siv::read_log(log_path);
    siv::Json result;
    result["method"] = method;
    if (method == "ols") {
        result["fit"] = siv::to_json(siv::ols_fit(log));
    } else {
        siv::TslsFit fit = siv::tsls_fit(log);
        result["fit"] = siv::to_json(fit);
        siv::Json bound;
        bound["delta"] = delta;
        bound["confidence"] = siv::bound_confidence(delta);
        try {
            bound["value"] = siv::theta_error_bound(fit, log, delta, sigma_g);
        } catch (const siv::VacuousBoundError&) {
            bound["value"] = "vacuous";
        }
        result["bound"] = bound;
    }
    emit(result.dump(2) + "\n", out_path);
    return 0;
}

int run_optimize(const std::string& log_path, const std::string& constraint,
                 const std::string& population, siv::Index mc_samples, std::uint64_t seed,
                 const std::string& out_path) {
    siv::InteractionLog log = siv::read_log(log_path);
    siv::TslsFit fit = siv::tsls_fit(log);
    siv::ConstraintSet set = parse_constraint_flag(constraint);
    siv::AssessmentRule rule = siv::outcome_maximizing_rule(fit.lambda_hat, set);

    siv::Json result;
    result["lambda_hat"] = siv::detail::vector_to_json(fit.lambda_hat);
    result["theta_ao"] = siv::detail::vector_to_json(rule.weights);
    result["objective"] = rule.weights.dot(fit.lambda_hat);
    if (!population.empty()) {
        auto inst = load_population(population);
        siv::MonteCarloEstimate est =
            siv::expected_outcome(rule, inst.population, mc_samples, seed);
        result["expected_outcome"] = {{"value", est.value},
                                      {"std_error", est.std_error},
                                      {"samples", est.samples}};
    }
    emit(result.dump(2) + "\n", out_path);
    return 0;
}

int run_fairness(const std::string& population, const std::string& rule_text, siv::Index pairs,
                 std::uint64_t seed, const std::string& out_path) {
    auto inst = load_population(population);
    siv::AssessmentRule rule{inst.population.causal.theta_star, 0.0};
    if (!rule_text.empty()) rule.weights = parse_vector_flag(rule_text);
    siv::AuditSummary summary = siv::audit_population(inst.population, rule, pairs, seed);
    siv::Json result = siv::to_json(summary);
    result["rule"] = siv::detail::vector_to_json(rule.weights);
    emit(result.dump(2) + "\n", out_path);
    return 0;
}

int run_reproduce(const std::string& experiment, const std::string& config_path,
                  const std::string& seeds_text, const std::string& horizons_text,
                  const std::string& population, const std::string& out_dir) {
    siv::ExperimentConfig config;
    if (!config_path.empty()) {
        std::ifstream in(config_path);
        if (!in) throw siv::IoError("cannot open '" + config_path + "' for reading");
        siv::Json j;
        try {
            j = siv::Json::parse(in);
        } catch (const siv::Json::parse_error& e) {
            throw siv::ParseError("invalid JSON in '" + config_path + "': " + e.what());
        }
        siv::detail::reject_unknown_keys(
            j, {"experiment", "seeds", "horizons", "output_dir", "population"}, "experiment config");
        if (j.contains("experiment")) config.experiment = j.at("experiment").get<std::string>();
        if (j.contains("seeds")) config.seeds = j.at("seeds").get<std::vector<std::uint64_t>>();
        if (j.contains("horizons")) config.horizons = j.at("horizons").get<std::vector<siv::Index>>();
        if (j.contains("output_dir")) config.output_dir = j.at("output_dir").get<std::string>();
        if (j.contains("population")) {
            if (j.at("population").is_string())
                config.instance = load_population(j.at("population").get<std::string>());
            else
                config.instance = siv::instance_from_json(j.at("population"));
        }
    }
    // Flags override config-file values.
    if (!experiment.empty()) config.experiment = experiment;
    if (!seeds_text.empty()) config.seeds = parse_seed_list(seeds_text);
    if (!horizons_text.empty()) config.horizons = parse_horizon_list(horizons_text);
    if (!population.empty()) config.instance = load_population(population);
    if (!out_dir.empty()) config.output_dir = out_dir;
    if (config.experiment.empty())
        throw siv::ValidationError("reproduce requires --experiment or a config file");

    siv::ExperimentOutput out = siv::run_experiment(config);
    siv::write_output(out, config.output_dir);
    for (const auto& [name, table] : out.tables)
        std::cout << "wrote " << config.output_dir << "/" << name << ".csv\n";
    for (const auto& [name, figure] : out.figures)
        std::cout << "wrote " << config.output_dir << "/" << name << ".svg\n";
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"strategic assessment rules as instruments: simulation, causal recovery, "
                 "optimization, and fairness auditing"};
    app.require_subcommand(1);

    std::string population = "admissions";
    std::uint64_t seed = 1;
    std::optional<long> horizon;
    std::string out_path;
    std::string log_path;
    std::string method = "2sls";
    double delta = 0.05;
    std::optional<double> sigma_g_flag;
    std::string constraint = "ball:1";
    siv::Index mc_samples = 4000;
    siv::Index pairs = 1000;
    std::string rule_text;
    std::string experiment;
    std::string config_path;
    std::string seeds_text;
    std::string horizons_text;
    std::string opt_population;

    auto* sim = app.add_subcommand("simulate", "sample an interaction log");
    sim->add_option("--population", population, "population config path or 'admissions'");
    sim->add_option("--seed", seed, "64-bit simulation seed");
    sim->add_option("-T,--horizon", horizon, "number of rounds (overrides the schedule)");
    sim->add_option("--out", out_path, "output CSV path ('-' for stdout)");

    auto* est = app.add_subcommand("estimate", "fit OLS or 2SLS on a log");
    est->add_option("--log", log_path, "interaction log CSV")->required();
    est->add_option("--method", method, "ols or 2sls")
        ->check(CLI::IsMember({"ols", "2sls"}));
    est->add_option("--delta", delta, "bound confidence parameter");
    est->add_option("--sigma-g", sigma_g_flag, "offset sub-Gaussian scale for the bound");
    est->add_option("--out", out_path, "output JSON path ('-' for stdout)");

    auto* opt = app.add_subcommand("optimize", "outcome-maximizing rule from a fitted log");
    opt->add_option("--log", log_path, "interaction log CSV")->required();
    opt->add_option("--constraint", constraint, "ball:<r> or box:<lo,...>:<hi,...>");
    opt->add_option("--population", opt_population,
                    "population for Monte-Carlo outcome evaluation");
    opt->add_option("--mc-samples", mc_samples, "Monte-Carlo sample count");
    opt->add_option("--seed", seed, "Monte-Carlo seed");
    opt->add_option("--out", out_path, "output JSON path ('-' for stdout)");

    auto* fair = app.add_subcommand("fairness", "audit individual fairness of a rule");
    fair->add_option("--population", population, "population config path or 'admissions'");
    fair->add_option("--rule", rule_text, "rule weights w1,w2,... (default theta_star)");
    fair->add_option("--pairs", pairs, "number of sampled pairs");
    fair->add_option("--seed", seed, "sampling seed");
    fair->add_option("--out", out_path, "output JSON path ('-' for stdout)");

    auto* rep = app.add_subcommand("reproduce", "rerun a bundled experiment");
    rep->add_option("--experiment", experiment,
                    "estimate-convergence | ols-vs-2sls | sgd-vs-ssgd | outcome-max | "
                    "fairness-audit");
    rep->add_option("--config", config_path, "experiment config JSON");
    rep->add_option("--seeds", seeds_text, "comma-separated seed list (default 1..10)");
    rep->add_option("--horizons", horizons_text, "comma-separated horizons (default 500,2000,5000)");
    rep->add_option("--population", opt_population, "population config path or 'admissions'");
    rep->add_option("--out", out_path, "output directory");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        int code = app.exit(e);
        return code == 0 ? 0 : kExitUsage;
    }

    try {
        if (sim->parsed()) return run_simulate(population, seed, horizon, out_path);
        if (est->parsed()) return run_estimate(log_path, method, delta, sigma_g_flag, out_path);
        if (opt->parsed())
            return run_optimize(log_path, constraint, opt_population, mc_samples, seed, out_path);
        if (fair->parsed()) return run_fairness(population, rule_text, pairs, seed, out_path);
        if (rep->parsed())
            return run_reproduce(experiment, config_path, seeds_text, horizons_text,
                                 opt_population, out_path);
    } catch (const siv::ParseError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitIo;
    } catch (const siv::IoError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitIo;
    } catch (const siv::ValidationError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitUsage;
    } catch (const siv::Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitNumerical;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitUsage;
    }
    return 0;
}
