#pragma once

#include "bars.hpp"
#include "errors.hpp"
#include "tree.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdio>
#include <functional>
#include <limits>
#include <memory>
#include <ostream>
#include <unordered_map>
#include <vector>

namespace stirring
{
    inline constexpr double infinity = std::numeric_limits<double>::infinity();

    /// A crossing of the bar on edge `edge` (named by its child node) at the given height.
    struct CrossingEvent
    {
        double clock;
        NodeIndex edge;
        double height;
        NodeIndex from;
        NodeIndex to;

        bool downward() const noexcept { return to == edge; }
    };

    enum class Verdict
    {
        Periodic,
        Stuck,
        DepthCapHit,
        BudgetExhausted,
        HorizonReached,
    };

    inline const char *verdict_name(Verdict v)
    {
        switch (v)
        {
        case Verdict::Periodic:
            return "Periodic";
        case Verdict::Stuck:
            return "Stuck";
        case Verdict::DepthCapHit:
            return "DepthCapHit";
        case Verdict::BudgetExhausted:
            return "BudgetExhausted";
        case Verdict::HorizonReached:
            return "HorizonReached";
        }
        return "?";
    }

    struct RunOptions
    {
        std::size_t budget = std::size_t{1} << 22;
        double horizon = infinity;
        bool detect_period = true;
        std::size_t pole_cache_limit = std::size_t{1} << 22;
    };

    /// The recorded meander. For a periodic trajectory `events` holds everything up to the first
    /// repeat; later events are reconstructed by unrolling the period.
    class Trajectory
    {
    public:
        double T = 1;
        std::uint64_t seed = 0;
        std::shared_ptr<LazyTree> tree;
        NodeIndex start = LazyTree::root();
        double start_height = 0;
        std::vector<CrossingEvent> events;
        Verdict verdict = Verdict::Stuck;
        std::size_t first_repeat_index = 0;
        /// Clock length of one period (periodic trajectories only).
        double period = 0;
        /// Y is determined on [0, known_until].
        double known_until = infinity;

        bool periodic() const noexcept { return verdict == Verdict::Periodic; }

        /// True when event k exists and is known.
        bool has_event(std::size_t k) const noexcept { return periodic() || k < events.size(); }

        CrossingEvent event(std::size_t k) const
        {
            if (k < events.size())
            {
                return events[k];
            }
            if (!periodic())
            {
                throw QueryBeyondHorizon("event index past the recorded trajectory");
            }
            const auto r = first_repeat_index;
            const auto p = events.size() - r;
            auto e = events[r + (k - r) % p];
            e.clock += static_cast<double>((k - r) / p) * period;
            return e;
        }

        /// Number of events with clock <= t.
        std::size_t count_until(double t) const
        {
            check_known(t);
            auto upto = [&](double x)
            {
                return static_cast<std::size_t>(
                    std::upper_bound(events.begin(), events.end(), x,
                                     [](double c, const CrossingEvent &e) { return c < e.clock; }) -
                    events.begin());
            };
            if (!periodic() || events.empty() || t < events.back().clock)
            {
                return upto(t);
            }
            const auto r = first_repeat_index;
            const auto p = events.size() - r;
            const double base = events[r].clock;
            auto q = static_cast<std::size_t>(std::floor((t - base) / period));
            std::size_t k = r + q * p;
            while (has_event(k) && event(k).clock <= t)
            {
                ++k;
            }
            while (k > 0 && event(k - 1).clock > t)
            {
                --k;
            }
            return k;
        }

        NodeIndex vertex_at(double t) const
        {
            auto k = count_until(t);
            return k == 0 ? start : event(k - 1).to;
        }

        VertexId vertex_id_at(double t) const { return tree->vertex(vertex_at(t)); }

        /// The events with clock <= t, unrolled through the period where needed.
        std::vector<CrossingEvent> events_until(double t) const
        {
            auto k = count_until(t);
            std::vector<CrossingEvent> out;
            out.reserve(k);
            for (std::size_t i = 0; i < k; ++i)
            {
                out.push_back(event(i));
            }
            return out;
        }

        void check_known(double t) const
        {
            if (t > known_until)
            {
                throw QueryBeyondHorizon("query time past the covered part of the trajectory");
            }
        }
    };

    namespace detail
    {
        struct JointKey
        {
            NodeIndex pole;
            std::uint64_t height_bits;
            bool operator==(const JointKey &) const = default;
        };

        struct JointKeyHash
        {
            std::size_t operator()(const JointKey &k) const noexcept
            {
                return static_cast<std::size_t>(hash_combine(k.pole, k.height_bits));
            }
        };

        class PoleCache
        {
        public:
            PoleCache(const BarStore &store, LazyTree &tree, std::size_t limit)
                : store_(store), tree_(tree), limit_(limit)
            {
            }

            const std::vector<PoleJoint> &get(NodeIndex n)
            {
                if (n >= poles_.size())
                {
                    poles_.resize(tree_.size());
                    built_.resize(tree_.size(), 0);
                }
                if (!built_[n])
                {
                    if (held_ > limit_)
                    {
                        // Poles are pure functions of the environment, so dropping them is safe.
                        for (auto &p : poles_)
                        {
                            std::vector<PoleJoint>().swap(p);
                        }
                        std::fill(built_.begin(), built_.end(), 0);
                        held_ = 0;
                    }
                    poles_[n] = build_pole(store_, tree_, n);
                    built_[n] = 1;
                    held_ += poles_[n].size() + 1;
                }
                return poles_[n];
            }

        private:
            const BarStore &store_;
            LazyTree &tree_;
            std::size_t limit_;
            std::vector<std::vector<PoleJoint>> poles_;
            std::vector<char> built_;
            std::size_t held_ = 0;
        };
    }

    /// Runs the meander from (start, start_height) until it is periodic, stuck, censored or past
    /// the horizon.
    inline Trajectory run_meander(const BarStore &store, std::shared_ptr<LazyTree> tree, NodeIndex start,
                                  double start_height, const RunOptions &opt = {})
    {
        const double T = store.T();
        if (!(start_height >= 0 && start_height < T))
        {
            throw DomainError("start height outside [0,T)");
        }
        if (opt.budget == 0)
        {
            throw DomainError("event budget must be positive");
        }
        Trajectory traj;
        traj.T = T;
        traj.seed = store.master_seed();
        traj.tree = tree;
        traj.start = start;
        traj.start_height = start_height;

        detail::PoleCache poles(store, *tree, opt.pole_cache_limit);
        std::unordered_map<detail::JointKey, std::size_t, detail::JointKeyHash> seen;

        NodeIndex at = start;
        double h = start_height;
        std::uint64_t laps = 0;
        auto last_clock = [&] { return traj.events.empty() ? 0.0 : traj.events.back().clock; };

        while (true)
        {
            const std::vector<PoleJoint> *pole = nullptr;
            try
            {
                pole = &poles.get(at);
            }
            catch (const DepthCapExceeded &)
            {
                traj.verdict = Verdict::DepthCapHit;
                traj.known_until = last_clock();
                return traj;
            }
            if (pole->empty())
            {
                traj.verdict = Verdict::Stuck;
                traj.known_until = infinity;
                return traj;
            }
            auto it = std::upper_bound(pole->begin(), pole->end(), h,
                                       [](double x, const PoleJoint &j) { return x < j.height; });
            std::uint64_t next_laps = laps;
            if (it == pole->end())
            {
                it = pole->begin();
                ++next_laps;
            }
            const double hb = it->height;
            const double clock = static_cast<double>(next_laps) * T + (hb - start_height);
            NodeIndex to = it->slot == parent_slot ? tree->parent(at) : tree->child(at, it->slot);
            NodeIndex edge = it->slot == parent_slot ? at : to;

            if (opt.detect_period)
            {
                detail::JointKey key{to, std::bit_cast<std::uint64_t>(hb)};
                auto [pos, fresh] = seen.emplace(key, traj.events.size());
                if (!fresh)
                {
                    traj.verdict = Verdict::Periodic;
                    traj.first_repeat_index = pos->second;
                    traj.period = clock - traj.events[pos->second].clock;
                    traj.known_until = infinity;
                    return traj;
                }
            }
            if (clock > opt.horizon)
            {
                traj.verdict = Verdict::HorizonReached;
                traj.known_until = opt.horizon;
                return traj;
            }
            if (traj.events.size() >= opt.budget)
            {
                traj.verdict = Verdict::BudgetExhausted;
                traj.known_until = last_clock();
                return traj;
            }
            traj.events.push_back(CrossingEvent{clock, edge, hb, at, to});
            at = to;
            h = hb;
            laps = next_laps;
        }
    }

    inline Trajectory run_meander(const BarStore &store, const TreeSpec &tree, const VertexId &start,
                                  double start_height, const RunOptions &opt = {})
    {
        auto lazy = std::make_shared<LazyTree>(tree);
        auto n = lazy->intern(start);
        return run_meander(store, lazy, n, start_height, opt);
    }

    struct HitResult
    {
        bool hit = false;
        double time = infinity;
        /// For a miss: true when the trajectory provably never enters the target.
        bool proven_never = false;
    };

    /// H_{t,A}: the first time >= t at which Y lies in A.
    inline HitResult hitting_time(const Trajectory &traj, double t, const std::function<bool(NodeIndex)> &in_target)
    {
        traj.check_known(t);
        if (in_target(traj.vertex_at(t)))
        {
            return {true, t, false};
        }
        auto k = traj.count_until(t);
        // A periodic trajectory covers its whole orbit within one period of events.
        const std::size_t limit = traj.periodic() ? k + traj.events.size() + 1 : traj.events.size();
        for (; k < limit; ++k)
        {
            auto e = traj.event(k);
            if (in_target(e.to))
            {
                if (e.clock > traj.known_until)
                {
                    break;
                }
                return {true, e.clock, false};
            }
        }
        return {false, infinity, traj.periodic() || traj.verdict == Verdict::Stuck};
    }

    inline HitResult hitting_time(const Trajectory &traj, double t, const std::vector<VertexId> &target)
    {
        std::vector<NodeIndex> nodes;
        for (const auto &v : target)
        {
            if (auto n = traj.tree->find(v))
            {
                nodes.push_back(*n);
            }
        }
        return hitting_time(traj, t, [&](NodeIndex n) { return std::find(nodes.begin(), nodes.end(), n) != nodes.end(); });
    }

    /// Arrival times at vertices not visited before.
    inline std::vector<double> frontier_times(const Trajectory &traj)
    {
        std::vector<char> seen(traj.tree->size(), 0);
        seen[traj.start] = 1;
        std::vector<double> out;
        for (const auto &e : traj.events)
        {
            if (!seen[e.to])
            {
                seen[e.to] = 1;
                out.push_back(e.clock);
            }
        }
        return out;
    }

    struct CycleVerdict
    {
        enum class Outcome
        {
            FiniteCycle,
            CensoredAtDepth,
            CensoredAtBudget,
        };
        Outcome outcome;
        std::size_t length = 0;

        bool operator==(const CycleVerdict &) const = default;
    };

    /// Length of the root's cycle under the stirring permutation, from the meander at (root, 0).
    inline CycleVerdict root_cycle_length(const BarStore &store, const TreeSpec &tree, std::size_t budget,
                                          std::optional<std::size_t> depth_cap = std::nullopt)
    {
        const TreeSpec spec = depth_cap ? tree.with_depth_cap(depth_cap) : tree;
        RunOptions opt;
        opt.budget = budget;
        auto traj = run_meander(store, spec, VertexId::root(), 0.0, opt);
        switch (traj.verdict)
        {
        case Verdict::Stuck:
            return {CycleVerdict::Outcome::FiniteCycle, 1};
        case Verdict::Periodic:
            return {CycleVerdict::Outcome::FiniteCycle,
                    static_cast<std::size_t>(std::llround(traj.period / store.T()))};
        case Verdict::DepthCapHit:
            return {CycleVerdict::Outcome::CensoredAtDepth, 0};
        default:
            return {CycleVerdict::Outcome::CensoredAtBudget, 0};
        }
    }

    /// Header "T=<value> seed=<value>", then "clock<TAB>edge-path<TAB>down|up<TAB>height" per event.
    inline void write_trajectory(std::ostream &out, const Trajectory &traj)
    {
        char buf[96];
        std::snprintf(buf, sizeof buf, "T=%.17g seed=%llu\n", traj.T, static_cast<unsigned long long>(traj.seed));
        out << buf;
        for (const auto &e : traj.events)
        {
            std::snprintf(buf, sizeof buf, "%.17g", e.clock);
            out << buf << '\t' << traj.tree->name(e.edge) << '\t' << (e.downward() ? "down" : "up") << '\t';
            std::snprintf(buf, sizeof buf, "%.17g", e.height);
            out << buf << '\n';
        }
    }
}
