// Exercises the strategic-iv binary end to end.  argv[1] is the path to
// the built executable; a scratch directory is created next to the test.
#define DOCTEST_CONFIG_IMPLEMENT
#include <doctest.h>

#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <sys/wait.h>

#include "strategiciv/csv.hpp"
#include "strategiciv/json_io.hpp"
#include "strategiciv/model.hpp"
#include "strategiciv/simulate.hpp"

namespace fs = std::filesystem;
using namespace strategiciv;

namespace {

std::string g_binary;
fs::path g_scratch;

int run_cli(const std::string& args, const std::string& stdout_file = "") {
    std::string cmd = "'" + g_binary + "' " + args;
    if (!stdout_file.empty()) cmd += " > '" + stdout_file + "'";
    cmd += " 2> '" + (g_scratch / "stderr.txt").string() + "'";
    int rc = std::system(cmd.c_str());
    return WIFEXITED(rc) ? WEXITSTATUS(rc) : -1;
}

std::string slurp(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    std::ostringstream out;
    out << in.rdbuf();
    return out.str();
}

Json slurp_json(const fs::path& path) { return Json::parse(slurp(path)); }

std::string fixture_log(const std::string& name, double offset, Index horizon = 12) {
    AgentType agent{(Vector(2) << 800.0, 1.8).finished(),
                    (Matrix(2, 2) << 10, 0, 0, 1).finished(), offset};
    CausalModel model{(Vector(2) << 0.0, 0.5).finished()};
    std::vector<Vector> rules = {(Vector(2) << 1.0, 0.0).finished(),
                                 (Vector(2) << 0.0, 1.0).finished(),
                                 (Vector(2) << 1.0, 1.0).finished()};
    InteractionLog log;
    log.m = 2;
    for (Index t = 0; t < horizon; ++t) {
        AssessmentRule rule{rules[static_cast<std::size_t>(t % 3)], 0.0};
        Vector x = observe_features(agent, rule);
        log.records.push_back({rule, x, realize_outcome(agent, x, model)});
    }
    fs::path path = g_scratch / name;
    write_log(log, path.string());
    return path.string();
}

}  // namespace

TEST_CASE("simulate writes a deterministic admissions log") {
    fs::path a = g_scratch / "sim_a.csv";
    fs::path b = g_scratch / "sim_b.csv";
    CHECK(run_cli("simulate --population admissions --seed 1 -T 100 --out '" + a.string() + "'") == 0);
    CHECK(run_cli("simulate --population admissions --seed 1 -T 100 --out '" + b.string() + "'") == 0);
    std::string text = slurp(a);
    CHECK(text == slurp(b));

    std::istringstream in(text);
    InteractionLog log = read_log(in);
    CHECK(log.m == 2);
    CHECK(log.size() == 100);
    CHECK(log.groups.size() == 100);
    CHECK(text.rfind("theta_1,theta_2,x_1,x_2,y,group\n", 0) == 0);

    fs::path empty = g_scratch / "sim_empty.csv";
    CHECK(run_cli("simulate --population admissions --seed 1 -T 0 --out '" + empty.string() + "'") == 0);
    CHECK(slurp(empty) == "theta_1,theta_2,x_1,x_2,y\n");
    InteractionLog parsed = read_log(empty.string());
    CHECK(parsed.size() == 0);
    CHECK(parsed.m == 2);
}

TEST_CASE("estimate on the noiseless fixture recovers theta_star") {
    std::string log = fixture_log("fixture.csv", 0.5);
    fs::path out = g_scratch / "fit.json";
    CHECK(run_cli("estimate --log '" + log + "' --method 2sls --out '" + out.string() + "'") == 0);
    Json fit = slurp_json(out);
    CHECK(fit["method"] == "2sls");
    CHECK(std::abs(fit["fit"]["theta_hat"][0].get<double>()) <= 1e-8);
    CHECK(std::abs(fit["fit"]["theta_hat"][1].get<double>() - 0.5) <= 1e-8);
    CHECK(fit["bound"]["confidence"].get<double>() == doctest::Approx(0.7));
}

TEST_CASE("estimate exit codes") {
    // One data row: T < m+2, insufficient variation.
    fs::path tiny = g_scratch / "tiny.csv";
    std::ofstream(tiny) << "theta_1,theta_2,x_1,x_2,y\n1,2,3,4,5\n";
    CHECK(run_cli("estimate --log '" + tiny.string() + "' --method 2sls") == 2);
    CHECK(slurp(g_scratch / "stderr.txt").find("insufficient variation") != std::string::npos);

    CHECK(run_cli("estimate --log '" + (g_scratch / "missing.csv").string() + "'") == 3);

    fs::path malformed = g_scratch / "malformed.csv";
    std::ofstream(malformed) << "theta_1,theta_2,x_1,x_2,y\n1,2,3\n";
    CHECK(run_cli("estimate --log '" + malformed.string() + "'") == 3);

    CHECK(run_cli("estimate") == 1);            // missing required flag
    CHECK(run_cli("estimate --log x --method ridge") == 1);
}

TEST_CASE("ols vs 2sls on one admissions log") {
    fs::path log = g_scratch / "admissions.csv";
    CHECK(run_cli("simulate --population admissions --seed 1 -T 5000 --out '" + log.string() + "'") == 0);
    fs::path ols_out = g_scratch / "ols.json";
    fs::path tsls_out = g_scratch / "tsls.json";
    CHECK(run_cli("estimate --log '" + log.string() + "' --method ols --out '" + ols_out.string() + "'") == 0);
    CHECK(run_cli("estimate --log '" + log.string() + "' --method 2sls --out '" + tsls_out.string() + "'") == 0);
    double ols_sat = slurp_json(ols_out)["fit"]["coefficients"][0].get<double>();
    double tsls_sat = slurp_json(tsls_out)["fit"]["theta_hat"][0].get<double>();
    CHECK(std::abs(ols_sat) >= 5.0 * std::abs(tsls_sat));
}

TEST_CASE("optimize emits the outcome-maximizing rule") {
    std::string log = fixture_log("fixture_opt.csv", 0.5, 30);
    fs::path out = g_scratch / "opt.json";
    CHECK(run_cli("optimize --log '" + log + "' --constraint ball:1 --out '" + out.string() + "'") == 0);
    Json j = slurp_json(out);
    double n = 0.0;
    for (const auto& v : j["theta_ao"]) n += v.get<double>() * v.get<double>();
    CHECK(std::sqrt(n) == doctest::Approx(1.0).epsilon(1e-9));
    CHECK(j["objective"].get<double>() > 0.0);
}

TEST_CASE("fairness audit of the causal rule reports zero violations") {
    fs::path out = g_scratch / "audit.json";
    CHECK(run_cli("fairness --population admissions --pairs 300 --seed 2 --out '" +
                  out.string() + "'") == 0);
    Json j = slurp_json(out);
    CHECK(j["violation_rate"].get<double>() == 0.0);
    CHECK(j["pairs"].get<long>() == 300);
}

TEST_CASE("reproduce writes tables and figures") {
    fs::path dir = g_scratch / "repro";
    CHECK(run_cli("reproduce --experiment sgd-vs-ssgd --out '" + dir.string() + "'") == 0);
    CHECK(fs::exists(dir / "sgd_trajectories.csv"));
    CHECK(fs::exists(dir / "sgd_corrected_trajectory.csv"));
    CHECK(fs::exists(dir / "sgd_simple_trajectory.csv"));
    CHECK(fs::exists(dir / "sgd_summary.csv"));
    CHECK(fs::exists(dir / "sgd_theta.svg"));
    CHECK(fs::exists(dir / "sgd_risk_curve.svg"));
    std::string svg = slurp(dir / "sgd_theta.svg");
    CHECK(svg.find("<svg") != std::string::npos);
    CHECK(svg.find("seeds:") != std::string::npos);

    CHECK(run_cli("reproduce --experiment nonsense --out '" + dir.string() + "'") == 1);
}

TEST_CASE("estimate-convergence table has a decreasing 2sls median column") {
    fs::path dir = g_scratch / "repro_ec";
    CHECK(run_cli("reproduce --experiment estimate-convergence --out '" + dir.string() + "'") == 0);
    Table t = read_csv((dir / "estimate_convergence.csv").string());
    std::size_t method = t.column_index("method");
    std::size_t med = t.column_index("median_error");
    std::vector<double> tsls;
    for (std::size_t r = 0; r < t.rows.size(); ++r)
        if (t.rows[r][method] == "2sls")
            tsls.push_back(parse_double(t.rows[r][med], static_cast<long>(r) + 2));
    REQUIRE(tsls.size() == 3);
    CHECK(tsls[0] > tsls[1]);
    CHECK(tsls[1] > tsls[2]);
    CHECK(fs::exists(dir / "estimate_convergence.svg"));
}

TEST_CASE("config file drives reproduce, flags override") {
    fs::path config = g_scratch / "config.json";
    std::ofstream(config) << R"({"experiment":"fairness-audit","seeds":[3],"output_dir":")"
                          << (g_scratch / "from_config").string() << R"("})";
    CHECK(run_cli("reproduce --config '" + config.string() + "'") == 0);
    CHECK(fs::exists(g_scratch / "from_config" / "fairness_audit.csv"));

    std::ofstream(config) << R"({"experiment":"fairness-audit","bogus":1})";
    CHECK(run_cli("reproduce --config '" + config.string() + "'") == 3);
}

int main(int argc, char** argv) {
    if (argc < 2) {
        std::fprintf(stderr, "usage: test_cli <path-to-strategic-iv>\n");
        return 2;
    }
    g_binary = argv[1];
    g_scratch = fs::temp_directory_path() / "strategic_iv_cli_test";
    fs::remove_all(g_scratch);
    fs::create_directories(g_scratch);

    doctest::Context context;
    context.applyCommandLine(argc - 1, argv + 1);
    int rc = context.run();
    fs::remove_all(g_scratch);
    return rc;
}
