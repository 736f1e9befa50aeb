#pragma once

#include "bars.hpp"
#include "bounds.hpp"
#include "errors.hpp"
#include "experiments.hpp"
#include "meander.hpp"
#include "permutation.hpp"
#include "renewal.hpp"
#include "tree.hpp"
#include "useful_bars.hpp"

#include <json.hpp>

#include <chrono>
#include <cmath>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

namespace stirring
{
    inline constexpr const char *library_version = "stirring 0.1.0";
    inline constexpr int record_schema = 1;

    /// Everything a subcommand may read. Shared by the command line, config files and run records.
    struct CommandOptions
    {
        std::string command;
        ExperimentConfig cfg;
        bool tree_given = false;
        std::optional<std::uint32_t> d;
        std::optional<std::uint32_t> d0;
        std::string bars_path;
        std::string estimator = "useful";
        std::vector<double> grid;
        double beta = 2;
        std::size_t walk_length = 1000000;
        std::size_t replicas = 20;
        std::string normalization = "level";
        std::string start = "phi";
        double start_height = 0;
        std::optional<double> at;
        std::optional<double> from;
        double quad_tol = 1e-9;
    };

    struct CommandResult
    {
        int status = 0;
        nlohmann::json record;
        std::string text;
        std::vector<std::pair<std::string, std::string>> files;
    };

    namespace detail
    {
        inline nlohmann::json bars_json(const std::vector<Bar> &bars)
        {
            auto out = nlohmann::json::array();
            for (const auto &b : bars)
            {
                out.push_back({format_path(b.edge.child), b.height});
            }
            return out;
        }

        inline std::vector<Bar> bars_from_json(const nlohmann::json &j)
        {
            std::vector<Bar> out;
            for (const auto &b : j)
            {
                auto v = try_parse_path(b.at(0).get<std::string>());
                if (!v || v->is_root())
                {
                    throw ParseError("bad edge in record: " + b.at(0).dump());
                }
                out.push_back({EdgeId{*v}, b.at(1).get<double>()});
            }
            return out;
        }

        inline nlohmann::json finite_or_null(double x)
        {
            return std::isfinite(x) ? nlohmann::json(x) : nlohmann::json(nullptr);
        }

        inline double from_finite_or_null(const nlohmann::json &j, double fallback)
        {
            return j.is_null() ? fallback : j.get<double>();
        }

        inline nlohmann::json estimate_json(const EstimateRecord &e)
        {
            nlohmann::json hist = nlohmann::json::array();
            for (auto [value, count] : e.histogram)
            {
                hist.push_back({value, count});
            }
            return {{"estimator", e.estimator},
                    {"estimate", e.estimate},
                    {"lo99", e.ci99.lo},
                    {"hi99", e.ci99.hi},
                    {"successes", e.successes},
                    {"n", e.n},
                    {"censored_depth", e.censored_depth},
                    {"censored_budget", e.censored_budget},
                    {"censored_horizon", e.censored_horizon},
                    {"discarded", e.discarded},
                    {"reference", e.reference},
                    {"tallies", e.tallies},
                    {"histogram", hist}};
        }

        inline TreeSpec resolve_tree(CommandOptions &o)
        {
            if (!o.tree_given && o.d)
            {
                o.cfg.tree = "regular:" + std::to_string(*o.d);
            }
            auto tree = o.cfg.tree_spec();
            if (!o.bars_path.empty())
            {
                std::ifstream in(o.bars_path);
                if (!in)
                {
                    throw ParseError("cannot open bar file " + o.bars_path);
                }
                o.cfg.fixed_bars = read_bar_file(in, tree);
                o.cfg.use_fixed_bars = true;
                o.bars_path.clear();
            }
            return tree;
        }

        inline std::vector<double> grid_or_T(const CommandOptions &o)
        {
            return o.grid.empty() ? std::vector<double>{o.cfg.T} : o.grid;
        }

        /// Structural checks on a trajectory: consecutive crossings chain, clocks increase and
        /// every crossing height is the start height advanced by the clock, modulo T.
        inline std::string trajectory_violation(const Trajectory &traj)
        {
            NodeIndex at = traj.start;
            double last = 0;
            for (std::size_t k = 0; k < traj.events.size(); ++k)
            {
                const auto &e = traj.events[k];
                if (e.from != at)
                {
                    return "crossing " + std::to_string(k) + " does not start where the previous one ended";
                }
                if (!(e.clock > last))
                {
                    return "crossing " + std::to_string(k) + " does not advance the clock";
                }
                const double h = std::fmod(traj.start_height + e.clock, traj.T);
                const double diff = std::abs(h - e.height);
                if (std::min(diff, traj.T - diff) > 1e-9 * std::max(1.0, e.clock))
                {
                    return "crossing " + std::to_string(k) + " height disagrees with its clock";
                }
                at = e.to;
                last = e.clock;
            }
            return {};
        }
    }

    inline nlohmann::json options_json(const CommandOptions &o)
    {
        const auto &c = o.cfg;
        nlohmann::json j{{"command", o.command},
                         {"tree", c.tree},
                         {"T", c.T},
                         {"runs", c.runs},
                         {"budget", c.budget},
                         {"horizon", detail::finite_or_null(c.horizon)},
                         {"depth_cap", c.depth_cap},
                         {"seed", c.seed},
                         {"jobs", c.jobs},
                         {"s0", c.s0},
                         {"min_episodes", c.min_episodes},
                         {"max_runs", c.max_runs},
                         {"estimator", o.estimator},
                         {"grid", o.grid},
                         {"beta", detail::finite_or_null(o.beta)},
                         {"walk_length", o.walk_length},
                         {"replicas", o.replicas},
                         {"normalization", o.normalization},
                         {"start", o.start},
                         {"start_height", o.start_height},
                         {"quad_tol", o.quad_tol}};
        j["d0"] = o.d0 ? nlohmann::json(*o.d0) : nlohmann::json(nullptr);
        j["at"] = o.at ? nlohmann::json(*o.at) : nlohmann::json(nullptr);
        j["from"] = o.from ? nlohmann::json(*o.from) : nlohmann::json(nullptr);
        j["fixed_bars"] = c.use_fixed_bars ? detail::bars_json(c.fixed_bars) : nlohmann::json(nullptr);
        return j;
    }

    inline CommandOptions options_from_json(const nlohmann::json &j)
    {
        CommandOptions o;
        auto &c = o.cfg;
        o.command = j.at("command").get<std::string>();
        c.tree = j.at("tree").get<std::string>();
        o.tree_given = true;
        c.T = j.at("T").get<double>();
        c.runs = j.at("runs").get<std::size_t>();
        c.budget = j.at("budget").get<std::size_t>();
        c.horizon = detail::from_finite_or_null(j.at("horizon"), infinity);
        c.depth_cap = j.at("depth_cap").get<std::size_t>();
        c.seed = j.at("seed").get<std::uint64_t>();
        c.jobs = j.at("jobs").get<unsigned>();
        c.s0 = j.at("s0").get<double>();
        c.min_episodes = j.at("min_episodes").get<std::size_t>();
        c.max_runs = j.at("max_runs").get<std::size_t>();
        o.estimator = j.at("estimator").get<std::string>();
        o.grid = j.at("grid").get<std::vector<double>>();
        o.beta = detail::from_finite_or_null(j.at("beta"), infinity);
        o.walk_length = j.at("walk_length").get<std::size_t>();
        o.replicas = j.at("replicas").get<std::size_t>();
        o.normalization = j.at("normalization").get<std::string>();
        o.start = j.at("start").get<std::string>();
        o.start_height = j.at("start_height").get<double>();
        o.quad_tol = j.at("quad_tol").get<double>();
        if (!j.at("d0").is_null())
        {
            o.d0 = j.at("d0").get<std::uint32_t>();
        }
        if (!j.at("at").is_null())
        {
            o.at = j.at("at").get<double>();
        }
        if (!j.at("from").is_null())
        {
            o.from = j.at("from").get<double>();
        }
        if (!j.at("fixed_bars").is_null())
        {
            c.fixed_bars = detail::bars_from_json(j.at("fixed_bars"));
            c.use_fixed_bars = true;
        }
        return o;
    }

    inline CommandResult command_simulate(CommandOptions o)
    {
        auto tree = detail::resolve_tree(o);
        auto store = o.cfg.store(o.cfg.seed);
        RunOptions opt;
        opt.budget = o.cfg.budget;
        opt.horizon = o.cfg.horizon;
        if (!o.cfg.use_fixed_bars && std::isinf(opt.horizon) && opt.budget > (std::size_t{1} << 24))
        {
            throw PreconditionViolated("simulate needs a finite --horizon or a --budget of at most 2^24");
        }
        auto traj = run_meander(store, tree, tree.parse_vertex(o.start), o.start_height, opt);
        CommandResult r;
        std::ostringstream dump;
        write_trajectory(dump, traj);
        r.files.emplace_back("trajectory.tsv", dump.str());
        auto violation = detail::trajectory_violation(traj);
        nlohmann::json res{{"verdict", verdict_name(traj.verdict)},
                           {"events", traj.events.size()},
                           {"known_until", detail::finite_or_null(traj.known_until)},
                           {"period", traj.period},
                           {"vertices_materialized", traj.tree->size()},
                           {"invariant_violation", violation}};
        if (traj.verdict == Verdict::Periodic)
        {
            res["cycle_length"] = std::llround(traj.period / traj.T);
        }
        r.record["results"] = res;
        r.text = res.dump(2) + "\n";
        if (!violation.empty())
        {
            r.status = 1;
            r.text += dump.str();
        }
        return r;
    }

    inline CommandResult command_perm(CommandOptions o)
    {
        auto tree = detail::resolve_tree(o);
        if (!tree.is_finite())
        {
            throw PreconditionViolated("perm needs a finite tree (fig1, truncated:D:L or explicit:...)");
        }
        auto bars = o.cfg.use_fixed_bars ? o.cfg.fixed_bars : BarStore(o.cfg.T, o.cfg.seed).all_bars(tree);
        auto composed = compose_transpositions(tree, bars);
        auto meander = meander_permutation(tree, bars, o.cfg.T);
        nlohmann::json cycles = nlohmann::json::array();
        for (const auto &cycle : cycle_decomposition(meander))
        {
            nlohmann::json names = nlohmann::json::array();
            for (const auto &v : cycle)
            {
                names.push_back(tree.name(v));
            }
            cycles.push_back(names);
        }
        CommandResult r;
        r.record["results"] = {{"cycles", cycles},
                               {"cycle_type", cycle_type(meander)},
                               {"bars", bars.size()},
                               {"oracle_agrees", composed == meander}};
        r.text = cycles.dump() + "\n";
        if (!(composed == meander))
        {
            r.status = 1;
            r.text += "meander and transposition composition disagree\n";
        }
        return r;
    }

    inline CommandResult command_useful(CommandOptions o)
    {
        auto tree = detail::resolve_tree(o);
        const double t = o.at.value_or(o.cfg.T);
        if (!(t > 0))
        {
            throw PreconditionViolated("--at must be positive");
        }
        auto store = o.cfg.store(o.cfg.seed);
        RunOptions opt;
        opt.budget = o.cfg.budget;
        opt.horizon = t;
        auto traj = run_meander(store, tree, VertexId::root(), 0.0, opt);
        TrajectoryIndex ix(traj, std::min(t, traj.known_until));
        auto report = o.from ? useful_bars_between(ix, *o.from, t) : useful_bars_at(ix, t);
        nlohmann::json members = nlohmann::json::array();
        for (const auto &m : report.members)
        {
            members.push_back({{"edge", traj.tree->name(m.edge)},
                               {"height", m.height},
                               {"crossed_at", m.child_enter},
                               {"left_at", m.child_exit}});
        }
        CommandResult r;
        nlohmann::json res{{"t", t}, {"size", report.size()}, {"members", members}};
        if (o.from)
        {
            res["s"] = *o.from;
            if (is_downward_regeneration_time(ix, *o.from, t))
            {
                const bool ok = compare_useful_sets(ix, *o.from, t).ok();
                res["regeneration_check"] = ok;
                if (!ok)
                {
                    r.status = 1;
                }
            }
        }
        r.record["results"] = res;
        r.text = res.dump(2) + "\n";
        return r;
    }

    inline CommandResult command_renewal(CommandOptions o)
    {
        SrgNormalization norm;
        if (o.normalization == "level")
        {
            norm = SrgNormalization::PerLevel;
        }
        else if (o.normalization == "step")
        {
            norm = SrgNormalization::PerStep;
        }
        else
        {
            throw ParseError("normalization must be 'level' or 'step'");
        }
        auto est = srg_density_estimate(o.beta, o.walk_length, o.replicas, o.cfg.seed, norm);
        CommandResult r;
        nlohmann::json res{{"beta", detail::finite_or_null(o.beta)},
                           {"normalization", o.normalization},
                           {"mean", est.mean},
                           {"se", est.se},
                           {"lo99", est.ci99.lo},
                           {"hi99", est.ci99.hi},
                           {"replicas", est.replicas},
                           {"formula",
                            std::isinf(o.beta) ? 1.0
                            : norm == SrgNormalization::PerLevel ? srg_level_density(o.beta)
                                                                 : srg_step_density(o.beta)}};
        r.record["results"] = res;
        r.text = res.dump(2) + "\n";
        return r;
    }

    inline CommandResult command_bounds(CommandOptions o)
    {
        if (!o.d0)
        {
            if (!o.d)
            {
                throw PreconditionViolated("bounds needs --d0 (or --d, taken as d0 - 1)");
            }
            o.d0 = *o.d + 1;
        }
        std::ostringstream csv;
        csv.precision(17);
        csv << "d0,T,percolation_bound,expr_value,clause,verdict\n";
        nlohmann::json rows = nlohmann::json::array();
        for (double T : detail::grid_or_T(o))
        {
            auto c = classify_T(*o.d0, T, o.quad_tol);
            csv << *o.d0 << ',' << T << ',' << c.percolation_bound << ',' << c.expr_value << ','
                << (c.clause.empty() ? "none" : c.clause) << ',' << verdict_name(c.verdict) << '\n';
            rows.push_back({{"d0", *o.d0},
                            {"T", T},
                            {"percolation_bound", c.percolation_bound},
                            {"expr_value", c.expr_value},
                            {"clause", c.clause},
                            {"verdict", verdict_name(c.verdict)},
                            {"expr_discrepancy", c.expr_discrepancy}});
        }
        CommandResult r;
        r.record["results"] = {{"rows", rows}};
        r.text = csv.str();
        r.files.emplace_back("bounds.csv", csv.str());
        return r;
    }

    inline CommandResult command_sweep(CommandOptions o)
    {
        detail::resolve_tree(o);
        const auto grid = detail::grid_or_T(o);
        CommandResult r;
        if (o.estimator == "invariants")
        {
            nlohmann::json rows = nlohmann::json::array();
            for (double T : grid)
            {
                auto c = o.cfg;
                c.T = T;
                auto s = useful_bar_invariant_sweep(c);
                rows.push_back({{"T", T},
                                {"trajectories", s.trajectories},
                                {"pairs", s.pairs},
                                {"regeneration_pairs", s.regeneration_pairs},
                                {"regeneration_violations", s.regeneration_violations},
                                {"downward_pairs", s.downward_pairs},
                                {"downward_violations", s.downward_violations},
                                {"loss_checks", s.loss_checks},
                                {"loss_violations", s.loss_violations}});
                if (s.downward_violations || s.loss_violations)
                {
                    r.status = 1;
                    rows.back()["first_violating_seed"] = *s.first_violating_seed;
                }
            }
            r.record["results"] = {{"rows", rows}};
            r.text = rows.dump(2) + "\n";
            return r;
        }
        auto rows = sweep_T(o.cfg, grid, o.estimator);
        nlohmann::json out = nlohmann::json::array();
        for (const auto &row : rows)
        {
            auto e = detail::estimate_json(row.record);
            e["T"] = row.T;
            out.push_back(e);
            if (!row.record.histogram.empty())
            {
                std::ostringstream name;
                name << "histogram_T" << row.T << ".csv";
                r.files.emplace_back(name.str(), histogram_csv(row.record.histogram));
            }
        }
        auto csv = sweep_csv(rows, o.cfg.seed);
        r.files.emplace_back("sweep.csv", csv);
        r.record["results"] = {{"rows", out}};
        r.text = csv;
        return r;
    }

    /// Runs one subcommand and wraps its results in a RunRecord.
    inline CommandResult run_command(const CommandOptions &o)
    {
        const auto started = std::chrono::steady_clock::now();
        CommandResult r;
        if (o.command == "simulate")
        {
            r = command_simulate(o);
        }
        else if (o.command == "perm")
        {
            r = command_perm(o);
        }
        else if (o.command == "useful")
        {
            r = command_useful(o);
        }
        else if (o.command == "renewal")
        {
            r = command_renewal(o);
        }
        else if (o.command == "bounds")
        {
            r = command_bounds(o);
        }
        else if (o.command == "sweep")
        {
            r = command_sweep(o);
        }
        else
        {
            throw ParseError("unknown command '" + o.command + "'");
        }
        // Record the options as resolved, so that a replay needs nothing but the record.
        CommandOptions resolved = o;
        detail::resolve_tree(resolved);
        auto results = std::move(r.record["results"]);
        r.record = {{"schema", record_schema},
                    {"version", library_version},
                    {"config", options_json(resolved)},
                    {"results", std::move(results)},
                    {"status", r.status},
                    {"rng",
                     {{"generator", "splitmix64 counter streams"},
                      {"master_seed", o.cfg.seed},
                      {"run_seed", "derive_seed(master_seed, run index)"},
                      {"edge_stream", "hash_combine(run_seed, path hash of the edge's child end)"}}},
                    {"wall_clock_seconds",
                     std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count()}};
        return r;
    }

    /// Re-runs the command stored in a RunRecord and compares its results. `jobs` overrides the
    /// recorded parallelism without changing the stored config.
    inline CommandResult replay_record(const nlohmann::json &record, std::optional<unsigned> jobs)
    {
        if (record.value("schema", 0) != record_schema)
        {
            throw ParseError("unsupported run record schema");
        }
        auto o = options_from_json(record.at("config"));
        const auto recorded_jobs = o.cfg.jobs;
        if (jobs)
        {
            o.cfg.jobs = *jobs;
        }
        auto r = run_command(o);
        r.record["config"]["jobs"] = recorded_jobs;
        const bool same = r.record.at("results") == record.at("results");
        r.files.clear();
        r.text = same ? "replay matches the record\n" : "replay differs from the record\n";
        r.status = same ? 0 : 1;
        return r;
    }
}
