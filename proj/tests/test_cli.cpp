#include <stirring/commands.hpp>

#include <gtest/gtest.h>

#include <array>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sys/wait.h>

using namespace stirring;

namespace
{
    struct Run
    {
        int status;
        std::string out;
    };

    Run cli(const std::string &args)
    {
        const std::string cmd = std::string(STIRRING_CLI) + " " + args + " 2>/dev/null";
        Run r{0, {}};
        FILE *pipe = popen(cmd.c_str(), "r");
        std::array<char, 4096> buf;
        while (auto n = fread(buf.data(), 1, buf.size(), pipe))
        {
            r.out.append(buf.data(), n);
        }
        r.status = WEXITSTATUS(pclose(pipe));
        return r;
    }

    std::filesystem::path scratch(const std::string &name)
    {
        auto dir = std::filesystem::temp_directory_path() / ("stirring_cli_test_" + std::to_string(::getpid()));
        std::filesystem::create_directories(dir);
        return dir / name;
    }
}

TEST(Cli, BoundsRow)
{
    auto r = cli("bounds --d0 40 --T 10.725");
    EXPECT_EQ(r.status, 0);
    EXPECT_NE(r.out.find("d0,T,percolation_bound,expr_value,clause,verdict\n"), std::string::npos);
    EXPECT_NE(r.out.find(",LemmaB2(3),ProvedInfiniteCycles"), std::string::npos);
}

TEST(Cli, FigureOnePermutation)
{
    auto r = cli("perm --tree fig1 --T 1 --bars " + std::string(STIRRING_DATA) + "/fig1.bars");
    EXPECT_EQ(r.status, 0);
    EXPECT_EQ(r.out.rfind(R"([["phi","v","w"],)", 0), 0u);
}

TEST(Cli, UsageErrorsExitTwo)
{
    EXPECT_EQ(cli("").status, 2);
    EXPECT_EQ(cli("frobnicate").status, 2);
    EXPECT_EQ(cli("bounds --T 1").status, 2);
    EXPECT_EQ(cli("sweep --T -3").status, 2);
    EXPECT_EQ(cli("perm --tree regular:3 --T 1").status, 2);
    EXPECT_EQ(cli("replay --record /nonexistent/run.json").status, 2);
}

TEST(Cli, ConfigFileIsOverriddenByFlags)
{
    auto cfg = scratch("run.cfg");
    std::ofstream(cfg) << "tree = regular:3\nT = 2\nruns = 5\nseed = 11\nestimator = cycle\n";
    auto out = scratch("cfg_out");
    auto r = cli("sweep --config " + cfg.string() + " --runs 7 --out " + out.string());
    ASSERT_EQ(r.status, 0);
    std::ifstream in(out / "run.json");
    auto record = nlohmann::json::parse(in);
    EXPECT_EQ(record.at("schema"), 1);
    EXPECT_EQ(record.at("config").at("runs"), 7);
    EXPECT_EQ(record.at("config").at("seed"), 11);
    EXPECT_EQ(record.at("config").at("tree"), "regular:3");
    EXPECT_TRUE(std::filesystem::exists(out / "sweep.csv"));
    EXPECT_EQ(cli("replay --jobs 3 --record " + (out / "run.json").string()).status, 0);
}

TEST(Cli, TamperedRecordFailsReplay)
{
    auto out = scratch("tamper");
    ASSERT_EQ(cli("sweep --tree regular:3 --T 3 --runs 10 --seed 2 --out " + out.string()).status, 0);
    nlohmann::json record;
    {
        std::ifstream in(out / "run.json");
        record = nlohmann::json::parse(in);
    }
    record["results"]["rows"][0]["successes"] = 12345;
    std::ofstream(out / "bad.json") << record.dump();
    EXPECT_EQ(cli("replay --record " + (out / "bad.json").string()).status, 1);
}

TEST(Commands, RecordReplayIsAFixedPoint)
{
    CommandOptions o;
    o.command = "sweep";
    o.cfg.tree = "regular:4";
    o.tree_given = true;
    o.cfg.T = 3;
    o.cfg.runs = 20;
    o.cfg.seed = 8;
    o.cfg.horizon = 30;
    o.estimator = "return";
    o.grid = {1, 3};
    auto first = run_command(o);
    auto again = replay_record(nlohmann::json::parse(first.record.dump()), 4u);
    EXPECT_EQ(again.status, 0);
    auto a = first.record, b = again.record;
    a.erase("wall_clock_seconds");
    b.erase("wall_clock_seconds");
    EXPECT_EQ(a, b);
    EXPECT_EQ(options_json(options_from_json(a.at("config"))), a.at("config"));
}

TEST(Commands, FixedBarsTravelInTheRecord)
{
    CommandOptions o;
    o.command = "simulate";
    o.cfg.tree = "fig1";
    o.tree_given = true;
    o.cfg.T = 1;
    o.bars_path = std::string(STIRRING_DATA) + "/fig1.bars";
    auto r = run_command(o);
    EXPECT_EQ(r.record.at("results").at("cycle_length"), 3);
    EXPECT_EQ(r.record.at("config").at("fixed_bars").size(), 2u);
    EXPECT_EQ(replay_record(r.record, std::nullopt).status, 0);
}

TEST(Commands, TrajectoryChecks)
{
    auto traj = run_meander(BarStore(4.0, 3), TreeSpec::regular(3, 50), VertexId::root(), 0.0);
    EXPECT_EQ(detail::trajectory_violation(traj), "");
    ASSERT_GT(traj.events.size(), 3u);
    auto broken = traj;
    broken.events[2].height += 0.01;
    EXPECT_NE(detail::trajectory_violation(broken), "");
    broken = traj;
    std::swap(broken.events[1], broken.events[2]);
    EXPECT_NE(detail::trajectory_violation(broken), "");
}

TEST(Commands, UsefulReportsRegenerationCheck)
{
    CommandOptions o;
    o.command = "useful";
    o.cfg.tree = "regular:2";
    o.tree_given = true;
    o.cfg.T = 5;
    o.cfg.seed = 1;
    o.at = 12;
    auto r = run_command(o);
    EXPECT_EQ(r.status, 0);
    EXPECT_EQ(r.record.at("results").at("size"), r.record.at("results").at("members").size());
}
