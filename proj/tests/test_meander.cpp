#include <stirring/meander.hpp>
#include <stirring/permutation.hpp>

#include <gtest/gtest.h>

#include <cmath>
#include <map>
#include <sstream>

using namespace stirring;

namespace
{
    constexpr double T = 1.0;
    const VertexId phi = VertexId::root();
    const VertexId v{{0}};
    const VertexId w{{1}};

    BarStore figure1_store()
    {
        return BarStore::fixed(T, {{EdgeId{v}, 0.3 * T}, {EdgeId{w}, 0.6 * T}});
    }
}

TEST(Meander, FigureOneTrace)
{
    auto traj = run_meander(figure1_store(), TreeSpec::figure1(), phi, 0.0);
    ASSERT_EQ(traj.verdict, Verdict::Periodic);
    ASSERT_EQ(traj.events.size(), 4u);
    const double clocks[] = {0.3, 1.3, 1.6, 2.6};
    const VertexId edges[] = {v, v, w, w};
    const bool down[] = {true, false, true, false};
    for (int i = 0; i < 4; ++i)
    {
        EXPECT_NEAR(traj.events[i].clock, clocks[i] * T, 1e-12);
        EXPECT_EQ(traj.tree->vertex(traj.events[i].edge), edges[i]);
        EXPECT_EQ(traj.events[i].downward(), down[i]);
    }
    EXPECT_EQ(traj.first_repeat_index, 0u);
    EXPECT_NEAR(traj.period, 3 * T, 1e-12);
    EXPECT_EQ(traj.vertex_id_at(3 * T), phi);
    EXPECT_EQ(traj.vertex_id_at(T), v);
    EXPECT_EQ(traj.vertex_id_at(2 * T), w);
    // Unrolled events repeat the period.
    EXPECT_NEAR(traj.event(5).clock, 4.3 * T, 1e-12);
    EXPECT_EQ(traj.event(6).to, traj.events[2].to);
}

TEST(Meander, EmptyEnvironmentIsStuck)
{
    auto traj = run_meander(BarStore::fixed(T, {}), TreeSpec::figure1(), phi, 0.0);
    EXPECT_EQ(traj.verdict, Verdict::Stuck);
    EXPECT_TRUE(traj.events.empty());
    EXPECT_EQ(traj.vertex_id_at(100.0), phi);
    EXPECT_TRUE(frontier_times(traj).empty());
    auto c = root_cycle_length(BarStore::fixed(T, {}), TreeSpec::figure1(), 100);
    EXPECT_EQ(c, (CycleVerdict{CycleVerdict::Outcome::FiniteCycle, 1}));
}

TEST(Meander, SingleBarPingPong)
{
    auto store = BarStore::fixed(T, {{EdgeId{v}, 0.5 * T}});
    auto traj = run_meander(store, TreeSpec::figure1(), phi, 0.0);
    ASSERT_EQ(traj.verdict, Verdict::Periodic);
    ASSERT_EQ(traj.events.size(), 2u);
    EXPECT_NEAR(traj.events[0].clock, 0.5, 1e-12);
    EXPECT_NEAR(traj.events[1].clock, 1.5, 1e-12);
    EXPECT_NEAR(traj.event(2).clock, 2.5, 1e-12);
    auto perm = compose_transpositions(TreeSpec::figure1(), {{EdgeId{v}, 0.5 * T}});
    EXPECT_EQ(perm(phi), v);
    EXPECT_EQ(perm(v), phi);
    auto c = root_cycle_length(store, TreeSpec::figure1(), 100);
    EXPECT_EQ(c.length, 2u);
}

TEST(Meander, HittingTimes)
{
    auto traj = run_meander(figure1_store(), TreeSpec::figure1(), phi, 0.0);
    auto hv = hitting_time(traj, 0.0, std::vector<VertexId>{v});
    EXPECT_TRUE(hv.hit);
    EXPECT_NEAR(hv.time, 0.3 * T, 1e-12);
    auto here = hitting_time(traj, 0.0, std::vector<VertexId>{phi});
    EXPECT_TRUE(here.hit);
    EXPECT_EQ(here.time, 0.0);
    auto never = hitting_time(traj, 0.0, std::vector<VertexId>{v.child(0)});
    EXPECT_FALSE(never.hit);
    EXPECT_TRUE(never.proven_never);
    auto later = hitting_time(traj, 2.7 * T, std::vector<VertexId>{w});
    EXPECT_TRUE(later.hit);
    EXPECT_NEAR(later.time, 4.6 * T, 1e-12);
}

TEST(Meander, HorizonCensorsQueries)
{
    RunOptions opt;
    opt.horizon = 1.0;
    opt.detect_period = false;
    auto traj = run_meander(figure1_store(), TreeSpec::figure1(), phi, 0.0, opt);
    EXPECT_EQ(traj.verdict, Verdict::HorizonReached);
    EXPECT_EQ(traj.events.size(), 1u);
    EXPECT_THROW(traj.vertex_at(1.5), QueryBeyondHorizon);
    auto miss = hitting_time(traj, 0.5, std::vector<VertexId>{w});
    EXPECT_FALSE(miss.hit);
    EXPECT_FALSE(miss.proven_never);
}

TEST(Meander, FrontierTimesFigureOne)
{
    auto traj = run_meander(figure1_store(), TreeSpec::figure1(), phi, 0.0);
    auto f = frontier_times(traj);
    ASSERT_EQ(f.size(), 2u);
    EXPECT_NEAR(f[0], 0.3 * T, 1e-12);
    EXPECT_NEAR(f[1], 1.6 * T, 1e-12);
}

TEST(Meander, RootCycleLengthFigureOne)
{
    auto c = root_cycle_length(figure1_store(), TreeSpec::figure1(), 1000);
    EXPECT_EQ(c, (CycleVerdict{CycleVerdict::Outcome::FiniteCycle, 3}));
}

TEST(Meander, RootCycleMatchesCompositionOracle)
{
    auto tree = TreeSpec::truncated_regular(3, 4);
    for (std::uint64_t seed = 0; seed < 1000; ++seed)
    {
        BarStore store(1.0, seed);
        auto bars = store.all_bars(tree);
        auto perm = compose_transpositions(tree, bars);
        auto c = root_cycle_length(store, tree, 1 << 20);
        ASSERT_EQ(c.outcome, CycleVerdict::Outcome::FiniteCycle) << seed;
        ASSERT_EQ(c.length, cycle_length_of(perm, phi)) << seed;
    }
}

TEST(Meander, InvariantsOnRandomTrajectories)
{
    auto tree = TreeSpec::regular(2, 40);
    for (std::uint64_t seed = 0; seed < 200; ++seed)
    {
        BarStore store(5.0, seed);
        RunOptions opt;
        opt.horizon = 200.0;
        auto traj = run_meander(store, tree, phi, 0.0, opt);
        NodeIndex at = traj.start;
        std::map<std::pair<NodeIndex, double>, bool> last_direction;
        double prev = 0;
        for (std::size_t k = 0; k < traj.events.size(); ++k)
        {
            const auto &e = traj.events[k];
            ASSERT_EQ(e.from, at);
            ASSERT_TRUE(e.edge == e.to ? traj.tree->parent(e.to) == e.from : traj.tree->parent(e.from) == e.to);
            ASSERT_GT(e.clock, prev);
            double expected = std::fmod(traj.start_height + e.clock, store.T());
            double diff = std::abs(expected - e.height);
            diff = std::min(diff, store.T() - diff);
            ASSERT_LE(diff, (k + 1) * std::ldexp(1.0, -40) * store.T());
            // Each bar is crossed in alternating directions.
            auto key = std::make_pair(e.edge, e.height);
            auto it = last_direction.find(key);
            if (it != last_direction.end())
            {
                ASSERT_NE(it->second, e.downward());
            }
            last_direction[key] = e.downward();
            at = e.to;
            prev = e.clock;
        }
    }
}

TEST(Meander, PeriodicReplayReproducesEvents)
{
    auto tree = TreeSpec::truncated_regular(2, 5);
    int periodic = 0;
    for (std::uint64_t seed = 0; seed < 300; ++seed)
    {
        BarStore store(1.5, seed);
        auto traj = run_meander(store, tree, phi, 0.0);
        if (traj.verdict != Verdict::Periodic)
        {
            continue;
        }
        ++periodic;
        const auto p = traj.events.size() - traj.first_repeat_index;
        RunOptions opt;
        opt.detect_period = false;
        opt.budget = traj.first_repeat_index + 2 * p + 1;
        auto raw = run_meander(store, tree, phi, 0.0, opt);
        ASSERT_GE(raw.events.size(), traj.first_repeat_index + 2 * p);
        for (std::size_t k = 0; k < traj.first_repeat_index + 2 * p; ++k)
        {
            auto a = traj.event(k);
            const auto &b = raw.events[k];
            ASSERT_EQ(traj.tree->vertex(a.to), raw.tree->vertex(b.to));
            ASSERT_EQ(a.height, b.height);
            ASSERT_NEAR(a.clock, b.clock, 1e-9 * (1 + b.clock));
        }
    }
    EXPECT_GT(periodic, 250);
}

TEST(Meander, DepthCapIsCensoring)
{
    BarStore store(11.0, 3);
    auto c = root_cycle_length(store, TreeSpec::regular(5, 30), 1 << 20, 3);
    EXPECT_EQ(c.outcome, CycleVerdict::Outcome::CensoredAtDepth);
    RunOptions opt;
    opt.budget = 10;
    auto traj = run_meander(store, TreeSpec::regular(5, 100), phi, 0.0, opt);
    EXPECT_EQ(traj.verdict, Verdict::BudgetExhausted);
    EXPECT_EQ(traj.events.size(), 10u);
}

TEST(Meander, DumpFormat)
{
    auto store = figure1_store();
    auto traj = run_meander(store, TreeSpec::figure1(), phi, 0.0);
    std::ostringstream out;
    write_trajectory(out, traj);
    std::istringstream in(out.str());
    std::string line;
    std::getline(in, line);
    EXPECT_EQ(line, "T=1 seed=0");
    std::getline(in, line);
    EXPECT_EQ(line, "0.29999999999999999\tv\tdown\t0.29999999999999999");
    std::getline(in, line);
    EXPECT_EQ(line.substr(line.find('\t')), "\tv\tup\t0.29999999999999999");
}
