#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <istream>
#include <optional>
#include <ostream>
#include <string>
#include <utility>

#include "strategiciv/csv.hpp"
#include "strategiciv/model.hpp"
#include "strategiciv/population.hpp"
#include "strategiciv/rng.hpp"

namespace strategiciv {

namespace detail {

inline std::size_t pick_group(const PopulationSpec& spec, double u) {
    double acc = 0.0;
    for (std::size_t i = 0; i < spec.groups.size(); ++i) {
        acc += spec.groups[i].mixture_weight;
        if (u < acc) return i;
    }
    return spec.groups.size() - 1;
}

inline AgentType sample_from_group(const SubpopulationSpec& g, std::uint64_t seed,
                                   std::uint64_t round) {
    AgentType agent;
    RngStream baseline(seed, round, StreamPurpose::Baseline);
    agent.baseline_features.resize(g.baseline_mean.size());
    for (Index i = 0; i < g.baseline_mean.size(); ++i) {
        double v = baseline.normal(g.baseline_mean[i], g.baseline_stddev[i]);
        if (!g.baseline_clamp.empty() && g.baseline_clamp[static_cast<std::size_t>(i)]) {
            const auto& c = *g.baseline_clamp[static_cast<std::size_t>(i)];
            v = std::clamp(v, c.lo, c.hi);
        }
        agent.baseline_features[i] = v;
    }

    agent.effort_matrix = g.effort_matrix_mean;
    RngStream noise(seed, round, StreamPurpose::EffortNoise);
    for (const auto& e : g.effort_noise)
        agent.effort_matrix(e.row, e.col) += e.sign * std::abs(noise.normal(e.mean, e.stddev));

    RngStream offset(seed, round, StreamPurpose::Offset);
    agent.outcome_offset = offset.normal(g.offset_mean, g.offset_stddev);
    return agent;
}

}  // namespace detail

/// Draw one agent for the given round.  The group is chosen by mixture
/// weight, baselines are entrywise normal then clamped, the effort matrix
/// is the group mean with each listed entry shifted by sign * |noise|,
/// and the offset is normal.  Deterministic in (spec, seed, round).
inline std::pair<AgentType, std::string> sample_agent(const PopulationSpec& spec,
                                                      std::uint64_t seed, std::uint64_t round = 0) {
    validate(spec);
    RngStream group_stream(seed, round, StreamPurpose::Group);
    std::size_t gi = detail::pick_group(spec, group_stream.uniform01());
    return {detail::sample_from_group(spec.groups[gi], seed, round), spec.groups[gi].label};
}

/// Draw the round-t rule from a schedule.  Rule draws use their own
/// sub-stream and never read the agent's type.
inline AssessmentRule schedule_rule(const RuleSchedule& sched, std::uint64_t seed,
                                    std::uint64_t round) {
    if (sched.kind == RuleSchedule::Kind::FixedList)
        return sched.rules[static_cast<std::size_t>(round % sched.rules.size())];
    RngStream stream(seed, round, StreamPurpose::Rule);
    AssessmentRule rule;
    rule.weights.resize(sched.center.size());
    for (Index i = 0; i < sched.center.size(); ++i)
        rule.weights[i] = stream.normal(sched.center[i], sched.stddev[i]);
    return rule;
}

/// Run the simulation: one fresh agent per round, the scheduled rule
/// deployed, features and outcome recorded.  Fully deterministic given
/// the seed; records are ordered by round index.
inline InteractionLog run_simulation(const PopulationSpec& spec, const RuleSchedule& schedule,
                                     std::uint64_t seed) {
    validate(spec);
    validate(schedule, spec.m);
    InteractionLog log;
    log.m = spec.m;
    log.records.reserve(static_cast<std::size_t>(schedule.horizon));
    log.groups.reserve(static_cast<std::size_t>(schedule.horizon));
    for (Index t = 0; t < schedule.horizon; ++t) {
        auto round = static_cast<std::uint64_t>(t);
        AssessmentRule rule = schedule_rule(schedule, seed, round);
        auto [agent, label] = sample_agent(spec, seed, round);
        Vector x = observe_features(agent, rule);
        double y = realize_outcome(agent, x, spec.causal);
        log.records.push_back({std::move(rule), std::move(x), y});
        log.groups.push_back(label);
    }
    return log;
}

/// Write a log as CSV: header theta_1..theta_m,x_1..x_m,y[,group], one
/// row per round, doubles formatted so they re-read bit-exactly.
inline void write_log(const InteractionLog& log, std::ostream& out) {
    for (Index i = 1; i <= log.m; ++i) out << "theta_" << i << ',';
    for (Index i = 1; i <= log.m; ++i) out << "x_" << i << ',';
    out << 'y';
    if (log.has_groups()) out << ",group";
    out << '\n';
    for (std::size_t t = 0; t < log.records.size(); ++t) {
        const auto& rec = log.records[t];
        for (Index i = 0; i < log.m; ++i) out << format_double(rec.rule.weights[i]) << ',';
        for (Index i = 0; i < log.m; ++i) out << format_double(rec.features[i]) << ',';
        out << format_double(rec.outcome);
        if (log.has_groups()) out << ',' << log.groups[t];
        out << '\n';
    }
}

inline void write_log(const InteractionLog& log, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot open '" + path + "' for writing");
    write_log(log, out);
    if (!out) throw IoError("write failed for '" + path + "'");
}

/// Parse a CSV log.  The header fixes m; every data row must carry
/// 2m+1 numeric fields (plus the group label when present).  Errors name
/// the offending 1-based line.
inline InteractionLog read_log(std::istream& in, std::optional<Index> expect_m = {}) {
    std::string line;
    if (!std::getline(in, line)) throw ParseError("line 1: empty input, expected a header");
    if (!line.empty() && line.back() == '\r') line.pop_back();
    auto header = split_csv_line(line);

    bool has_group = !header.empty() && header.back() == "group";
    std::size_t data_cols = header.size() - (has_group ? 1 : 0);
    if (data_cols < 3 || data_cols % 2 == 0)
        throw ParseError("line 1: header has " + std::to_string(header.size()) +
                         " columns, expected theta_1..theta_m,x_1..x_m,y[,group]");
    Index m = static_cast<Index>((data_cols - 1) / 2);
    for (Index i = 0; i < m; ++i) {
        if (header[static_cast<std::size_t>(i)] != "theta_" + std::to_string(i + 1) ||
            header[static_cast<std::size_t>(m + i)] != "x_" + std::to_string(i + 1))
            throw ParseError("line 1: malformed header column '" +
                             header[static_cast<std::size_t>(i)] + "'");
    }
    if (header[static_cast<std::size_t>(2 * m)] != "y")
        throw ParseError("line 1: malformed header, expected 'y' after the feature columns");
    if (expect_m && *expect_m != m)
        throw ParseError("line 1: header declares m=" + std::to_string(m) + " but m=" +
                         std::to_string(*expect_m) + " was expected");

    InteractionLog log;
    log.m = m;
    long line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        auto fields = split_csv_line(line);
        if (fields.size() != header.size())
            throw ParseError("line " + std::to_string(line_no) + ": expected " +
                             std::to_string(header.size()) + " fields, got " +
                             std::to_string(fields.size()));
        Interaction rec;
        rec.rule.weights.resize(m);
        rec.features.resize(m);
        for (Index i = 0; i < m; ++i)
            rec.rule.weights[i] = parse_double(fields[static_cast<std::size_t>(i)], line_no);
        for (Index i = 0; i < m; ++i)
            rec.features[i] = parse_double(fields[static_cast<std::size_t>(m + i)], line_no);
        rec.outcome = parse_double(fields[static_cast<std::size_t>(2 * m)], line_no);
        if (!rec.rule.weights.allFinite() || !rec.features.allFinite() ||
            !std::isfinite(rec.outcome))
            throw ParseError("line " + std::to_string(line_no) + ": non-finite value");
        log.records.push_back(std::move(rec));
        if (has_group) log.groups.push_back(fields.back());
    }
    return log;
}

inline InteractionLog read_log(const std::string& path, std::optional<Index> expect_m = {}) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open '" + path + "' for reading");
    return read_log(in, expect_m);
}

}  // namespace strategiciv
