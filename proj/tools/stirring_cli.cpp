#include <stirring/commands.hpp>

#include <CLI11.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>

using namespace stirring;

namespace
{
    bool is_usage_error(const Error &e)
    {
        return dynamic_cast<const ParseError *>(&e) || dynamic_cast<const PreconditionViolated *>(&e) ||
               dynamic_cast<const DomainError *>(&e) || dynamic_cast<const InvalidTree *>(&e) ||
               dynamic_cast<const InvalidVertex *>(&e);
    }

    void write_outputs(const std::string &dir, const CommandResult &r)
    {
        if (dir.empty())
        {
            return;
        }
        std::filesystem::create_directories(dir);
        for (const auto &[name, contents] : r.files)
        {
            std::ofstream(std::filesystem::path(dir) / name) << contents;
        }
        std::ofstream(std::filesystem::path(dir) / "run.json") << r.record.dump(2) << '\n';
    }
}

int main(int argc, char **argv)
{
    CLI::App app{"Random stirring model and cyclic-time random meander on rooted trees"};
    app.require_subcommand(1);
    app.fallthrough();
    app.set_config("--config", "", "flat key = value file; flags on the command line win");

    CommandOptions o;
    auto &c = o.cfg;
    std::string out_dir;
    std::string record_path;
    std::optional<unsigned> jobs;

    app.add_option("--tree", c.tree, "regular:D, angel:D0[:same-root], truncated:D:L, explicit:c0,c1,... or fig1")
        ->each([&](const std::string &) { o.tree_given = true; });
    app.add_option("--d", o.d, "offspring per vertex (regular tree) when --tree is absent")->check(CLI::Range(2u, 1u << 20));
    app.add_option("--d0", o.d0, "vertex degree for the bounds subcommand")->check(CLI::Range(2u, 1u << 30));
    app.add_option("--T", c.T, "cycle length T")->check(CLI::PositiveNumber);
    app.add_option("--grid", o.grid, "values of T to sweep")->delimiter(',');
    app.add_option("--runs", c.runs, "independent runs")->check(CLI::PositiveNumber);
    app.add_option("--seed", c.seed, "master seed");
    app.add_option("--depth-cap", c.depth_cap, "depth at which lazy trees stop growing")->check(CLI::PositiveNumber);
    app.add_option("--budget", c.budget, "crossing budget per run")->check(CLI::PositiveNumber);
    app.add_option("--horizon", c.horizon, "clock horizon per run")->check(CLI::PositiveNumber);
    app.add_option("--jobs", jobs, "worker threads (results do not depend on it)")->check(CLI::PositiveNumber);
    app.add_option("--out", out_dir, "directory for run.json and CSV/TSV artifacts");
    app.add_option("--bars", o.bars_path, "fixed environment: bar file with lines '<edge> <height>'");
    app.add_option("--estimator", o.estimator, "useful, frontier, return, cycle or invariants");
    app.add_option("--s0", c.s0, "return estimator: watch from this clock (default T)");
    app.add_option("--min-episodes", c.min_episodes, "frontier estimator: episodes to collect");
    app.add_option("--max-runs", c.max_runs, "frontier estimator: run cap");
    app.add_option("--beta", o.beta, "renewal: walk bias (inf for the staircase)");
    app.add_option("--n", o.walk_length, "renewal: walk length");
    app.add_option("--replicas", o.replicas, "renewal: replicas");
    app.add_option("--normalization", o.normalization, "renewal: level or step")
        ->check(CLI::IsMember({"level", "step"}));
    app.add_option("--start", o.start, "simulate: start vertex");
    app.add_option("--start-height", o.start_height, "simulate: start height in [0,T)");
    app.add_option("--at", o.at, "useful: query time t");
    app.add_option("--from", o.from, "useful: relative start s for U_{s,t}");
    app.add_option("--quad-tol", o.quad_tol, "bounds: quadrature tolerance")->check(CLI::PositiveNumber);
    app.add_option("--record", record_path, "replay: run record JSON");

    for (auto [name, help] : std::initializer_list<std::pair<const char *, const char *>>{
             {"simulate", "run the meander and dump its crossings"},
             {"perm", "stirring permutation of a finite tree, as cycles"},
             {"useful", "useful bars U_t or U_{s,t} of one trajectory"},
             {"renewal", "strong renewal density of the biased walk"},
             {"bounds", "analytic criteria and classification of T"},
             {"sweep", "Monte Carlo estimator over a T grid"},
             {"replay", "re-run a run record and compare"}})
    {
        app.add_subcommand(name, help);
    }

    try
    {
        app.parse(argc, argv);
    }
    catch (const CLI::CallForHelp &e)
    {
        return app.exit(e);
    }
    catch (const CLI::ParseError &e)
    {
        app.exit(e);
        std::cerr << app.help();
        return 2;
    }

    o.command = app.get_subcommands().front()->get_name();
    if (jobs)
    {
        c.jobs = *jobs;
    }

    try
    {
        CommandResult r;
        if (o.command == "replay")
        {
            if (record_path.empty())
            {
                std::cerr << "replay needs --record\n";
                return 2;
            }
            std::ifstream in(record_path);
            if (!in)
            {
                std::cerr << "cannot open " << record_path << '\n';
                return 2;
            }
            r = replay_record(nlohmann::json::parse(in), jobs);
        }
        else
        {
            r = run_command(o);
        }
        std::cout << r.text;
        write_outputs(out_dir, r);
        return r.status;
    }
    catch (const nlohmann::json::exception &e)
    {
        std::cerr << "error: malformed record: " << e.what() << '\n';
        return 2;
    }
    catch (const Error &e)
    {
        std::cerr << "error: " << e.what() << '\n';
        return is_usage_error(e) ? 2 : 1;
    }
}
