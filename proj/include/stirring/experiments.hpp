#pragma once

#include "bars.hpp"
#include "bounds.hpp"
#include "errors.hpp"
#include "meander.hpp"
#include "rng.hpp"
#include "stats.hpp"
#include "tree.hpp"
#include "useful_bars.hpp"

#include <atomic>
#include <cmath>
#include <cstdint>
#include <exception>
#include <map>
#include <mutex>
#include <optional>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

namespace stirring
{
    struct ExperimentConfig
    {
        std::string tree = "regular:2";
        double T = 1;
        std::size_t runs = 100;
        std::size_t budget = std::size_t{1} << 20;
        double horizon = infinity;  ///< estimator-specific default when infinite
        std::size_t depth_cap = std::size_t{1} << 20;
        std::uint64_t seed = 0;
        unsigned jobs = 1;
        double s0 = 0;                  ///< return probability: start of the watch window (0 means T)
        std::size_t min_episodes = 500; ///< frontier departure: stop once this many episodes are seen
        std::size_t max_runs = 100000;  ///< frontier departure: hard cap on runs
        std::vector<Bar> fixed_bars;    ///< optional fixed environment (cycle survey, simulate)
        bool use_fixed_bars = false;

        TreeSpec tree_spec() const { return parse_tree_spec(tree, depth_cap); }

        BarStore store(std::uint64_t run_seed) const
        {
            return use_fixed_bars ? BarStore::fixed(T, fixed_bars) : BarStore(T, run_seed);
        }

        std::uint64_t run_seed(std::size_t i) const { return derive_seed(seed, i); }
    };

    struct EstimateRecord
    {
        std::string estimator;
        double estimate = 0;
        Interval ci99{0, 0};
        std::uint64_t successes = 0;
        std::uint64_t n = 0;  ///< runs or episodes entering the proportion
        std::uint64_t censored_depth = 0;
        std::uint64_t censored_budget = 0;
        std::uint64_t censored_horizon = 0;
        std::uint64_t discarded = 0;
        std::map<std::string, std::uint64_t> tallies;
        std::map<std::size_t, std::uint64_t> histogram;
        double reference = 0;  ///< the bound or target the estimate is read against, if any

        void finish()
        {
            estimate = n ? static_cast<double>(successes) / static_cast<double>(n) : 0.0;
            ci99 = n ? wilson_interval(successes, n, z99) : Interval{0, 1};
        }

        double standard_error() const
        {
            return n ? std::sqrt(estimate * (1 - estimate) / static_cast<double>(n)) : 0.0;
        }

        bool operator==(const EstimateRecord &) const = default;
    };

    /// Runs f(i) for i in [begin, end) on `jobs` threads and returns the results in index order.
    template <class R, class F>
    std::vector<R> parallel_map(std::size_t begin, std::size_t end, unsigned jobs, F &&f)
    {
        std::vector<std::optional<R>> slots(end > begin ? end - begin : 0);
        std::atomic<std::size_t> next{begin};
        std::exception_ptr failure;
        std::mutex failure_mutex;
        auto worker = [&] {
            for (std::size_t i; (i = next.fetch_add(1)) < end;)
            {
                try
                {
                    slots[i - begin].emplace(f(i));
                }
                catch (...)
                {
                    std::lock_guard lock(failure_mutex);
                    if (!failure)
                    {
                        failure = std::current_exception();
                    }
                    next.store(end);
                }
            }
        };
        const unsigned n = std::max(1u, std::min<unsigned>(jobs, static_cast<unsigned>(slots.size())));
        if (n <= 1)
        {
            worker();
        }
        else
        {
            std::vector<std::thread> pool;
            for (unsigned k = 0; k < n; ++k)
            {
                pool.emplace_back(worker);
            }
            for (auto &t : pool)
            {
                t.join();
            }
        }
        if (failure)
        {
            std::rethrow_exception(failure);
        }
        std::vector<R> out;
        out.reserve(slots.size());
        for (auto &s : slots)
        {
            out.push_back(std::move(*s));
        }
        return out;
    }

    namespace detail
    {
        inline std::uint32_t regular_degree(const TreeSpec &tree)
        {
            if (tree.is_finite())
            {
                throw DomainError("estimator needs an infinite regular tree");
            }
            return tree.offspring_count(VertexId{{0}});
        }

        inline void tally_censoring(EstimateRecord &rec, Verdict v)
        {
            switch (v)
            {
            case Verdict::DepthCapHit:
                ++rec.censored_depth;
                break;
            case Verdict::BudgetExhausted:
                ++rec.censored_budget;
                break;
            case Verdict::HorizonReached:
                ++rec.censored_horizon;
                break;
            default:
                break;
            }
        }

        inline Trajectory simulate_run(const ExperimentConfig &cfg, const TreeSpec &tree, std::size_t i,
                                       double horizon)
        {
            auto store = cfg.store(cfg.run_seed(i));
            RunOptions opt;
            opt.budget = cfg.budget;
            opt.horizon = horizon;
            return run_meander(store, tree, VertexId::root(), 0.0, opt);
        }
    }

    /// Fraction of runs with |U_{0,T}| >= ceil(T d / 18), plus the histogram of |U_{0,T}|.
    inline EstimateRecord estimate_useful_bar_count(const ExperimentConfig &cfg)
    {
        if (!(cfg.T > 0))
        {
            throw DomainError("T must be positive");
        }
        const auto tree = cfg.tree_spec();
        const auto d = detail::regular_degree(tree);
        const double threshold = std::ceil(cfg.T * d / 18);
        struct Run
        {
            Verdict verdict;
            bool complete;
            std::size_t count;
        };
        auto runs = parallel_map<Run>(0, cfg.runs, cfg.jobs, [&](std::size_t i) {
            auto traj = detail::simulate_run(cfg, tree, i, cfg.T);
            if (traj.known_until < cfg.T)
            {
                return Run{traj.verdict, false, 0};
            }
            TrajectoryIndex ix(traj, cfg.T);
            return Run{traj.verdict, true, useful_bars_between(ix, 0.0, cfg.T).size()};
        });
        EstimateRecord rec;
        rec.estimator = "useful";
        rec.reference = 0.8;
        rec.tallies["threshold"] = static_cast<std::uint64_t>(threshold);
        std::uint64_t total = 0;
        for (const auto &r : runs)
        {
            if (!r.complete)
            {
                detail::tally_censoring(rec, r.verdict);
                continue;
            }
            ++rec.n;
            ++rec.histogram[r.count];
            total += r.count;
            rec.successes += static_cast<double>(r.count) >= threshold;
        }
        rec.tallies["total_useful"] = total;
        rec.finish();
        return rec;
    }

    /// Mean of a histogram produced by estimate_useful_bar_count.
    inline double histogram_mean(const std::map<std::size_t, std::uint64_t> &h)
    {
        double s = 0, n = 0;
        for (auto [value, count] : h)
        {
            s += static_cast<double>(value) * static_cast<double>(count);
            n += static_cast<double>(count);
        }
        return n > 0 ? s / n : 0.0;
    }

    /// Returns to useful bars and whether they end in a frontier departure. Every useful bar with
    /// e+ != root is examined from the moment its child end is first left; an episode needs an
    /// observed return to the child end. Runs are taken in batches of cfg.runs until at least
    /// cfg.min_episodes episodes are seen or cfg.max_runs is reached.
    inline EstimateRecord estimate_frontier_departure(const ExperimentConfig &cfg)
    {
        if (!(cfg.T > 0))
        {
            throw DomainError("T must be positive");
        }
        const auto tree = cfg.tree_spec();
        const auto d = detail::regular_degree(tree);
        const double horizon = std::isinf(cfg.horizon) ? 20 * cfg.T : cfg.horizon;
        struct Run
        {
            std::uint64_t frontier = 0, other = 0, no_return = 0, censored = 0;
        };
        auto one = [&](std::size_t i) {
            Run out;
            auto traj = detail::simulate_run(cfg, tree, i, horizon);
            const double t_max = std::min(traj.known_until, horizon);
            TrajectoryIndex ix(traj, t_max);
            const auto &ev = ix.events();
            const auto &lazy = ix.tree();
            for (std::size_t k = 0; k < ev.size(); ++k)
            {
                if (!ev[k].downward() || lazy.parent(ev[k].edge) == LazyTree::root())
                {
                    continue;
                }
                // Cheap filters before the full membership test: a first visit to the child end
                // that is left deeper.
                const auto &child_visits = ix.sojourns_at(ev[k].to);
                if (child_visits.front() != k + 1 || k + 1 >= ev.size() || ev[k + 1].from != ev[k].to ||
                    !ev[k + 1].downward())
                {
                    continue;
                }
                const double t = std::nextafter(ev[k + 1].clock, infinity);
                if (t > t_max)
                {
                    continue;
                }
                auto at_t = useful_bars_at(ix, t);
                const UsefulBar *bar = nullptr;
                for (const auto &m : at_t.members)
                {
                    if (m.event == k)
                    {
                        bar = &m;
                    }
                }
                if (!bar)
                {
                    continue;
                }
                auto ret = classify_return_detail(ix, *bar, t, 0.0);
                if (ret.return_time == infinity)
                {
                    ++out.no_return;
                }
                else if (ret.departure_time == infinity)
                {
                    ++out.censored;
                }
                else if (ret.frontier_departure)
                {
                    ++out.frontier;
                }
                else
                {
                    ++out.other;
                }
            }
            return out;
        };
        EstimateRecord rec;
        rec.estimator = "frontier";
        rec.reference = (d - 1.0) / (d + 1.0) * -std::expm1(-(d - 1.0) * cfg.T / 2);
        const std::size_t batch = std::max<std::size_t>(cfg.runs, 1);
        std::size_t done = 0;
        std::uint64_t no_return = 0;
        while (rec.n < cfg.min_episodes && done < cfg.max_runs)
        {
            const std::size_t end = std::min(done + batch, cfg.max_runs);
            for (const auto &r : parallel_map<Run>(done, end, cfg.jobs, one))
            {
                rec.successes += r.frontier;
                rec.n += r.frontier + r.other;
                rec.censored_horizon += r.censored;
                no_return += r.no_return;
            }
            done = end;
        }
        rec.discarded = no_return;
        rec.tallies["runs"] = done;
        rec.tallies["no_return_observed"] = no_return;
        rec.finish();
        return rec;
    }

    /// Fraction of runs in which Y is not seen at the root during [s0, horizon]. Runs that do not
    /// return are necessarily censored (by horizon, depth or budget); a periodic orbit always
    /// returns.
    inline EstimateRecord estimate_return_probability(const ExperimentConfig &cfg)
    {
        if (!(cfg.T > 0))
        {
            throw DomainError("T must be positive");
        }
        const auto tree = cfg.tree_spec();
        const double s0 = cfg.s0 > 0 ? cfg.s0 : cfg.T;
        const double horizon = std::isinf(cfg.horizon) ? 50 * cfg.T : cfg.horizon;
        if (!(horizon > s0))
        {
            throw DomainError("horizon must exceed s0");
        }
        struct Run
        {
            Verdict verdict;
            bool returned;
            bool proven_never;
        };
        auto runs = parallel_map<Run>(0, cfg.runs, cfg.jobs, [&](std::size_t i) {
            auto traj = detail::simulate_run(cfg, tree, i, horizon);
            if (traj.known_until < s0)
            {
                return Run{traj.verdict, false, false};
            }
            auto hit = hitting_time(traj, s0, [](NodeIndex v) { return v == LazyTree::root(); });
            return Run{traj.verdict, hit.hit && hit.time <= horizon, hit.proven_never};
        });
        EstimateRecord rec;
        rec.estimator = "return";
        rec.tallies["returned"] = 0;
        rec.tallies["not_returned"] = 0;
        rec.tallies["censored"] = 0;
        for (const auto &r : runs)
        {
            ++rec.n;
            if (r.returned)
            {
                ++rec.tallies["returned"];
                continue;
            }
            ++rec.successes;
            if (r.proven_never)
            {
                ++rec.tallies["not_returned"];
            }
            else
            {
                ++rec.tallies["censored"];
                detail::tally_censoring(rec, r.verdict);
            }
        }
        rec.finish();
        return rec;
    }

    /// Histogram of root-cycle lengths; censored runs (candidate infinite cycles) are counted as
    /// successes of the estimate.
    inline EstimateRecord cycle_length_survey(const ExperimentConfig &cfg)
    {
        const auto tree = cfg.tree_spec();
        auto runs = parallel_map<CycleVerdict>(0, cfg.runs, cfg.jobs, [&](std::size_t i) {
            return root_cycle_length(cfg.store(cfg.run_seed(i)), tree, cfg.budget);
        });
        EstimateRecord rec;
        rec.estimator = "cycle";
        for (const auto &r : runs)
        {
            ++rec.n;
            switch (r.outcome)
            {
            case CycleVerdict::Outcome::FiniteCycle:
                ++rec.histogram[r.length];
                break;
            case CycleVerdict::Outcome::CensoredAtDepth:
                ++rec.censored_depth;
                ++rec.successes;
                break;
            case CycleVerdict::Outcome::CensoredAtBudget:
                ++rec.censored_budget;
                ++rec.successes;
                break;
            }
        }
        rec.finish();
        return rec;
    }

    /// Checks the useful-bar invariants on every pair of event times (s, t), s < t, of each
    /// trajectory over [0, horizon]: U_s and U_{s,t} disjoint and both inside U_t when s is a
    /// t-regeneration time (reported separately for the literal and the downward notion), and at
    /// most two bars of U_t lost at the next visit to the last useful bar's grandparent end.
    struct InvariantSweep
    {
        std::uint64_t trajectories = 0;
        std::uint64_t pairs = 0;
        std::uint64_t regeneration_pairs = 0;
        std::uint64_t regeneration_violations = 0;
        std::uint64_t downward_pairs = 0;
        std::uint64_t downward_violations = 0;
        std::uint64_t loss_checks = 0;
        std::uint64_t loss_violations = 0;
        std::optional<std::uint64_t> first_violating_seed;

        bool operator==(const InvariantSweep &) const = default;
    };

    inline InvariantSweep useful_bar_invariant_sweep(const ExperimentConfig &cfg)
    {
        const auto tree = cfg.tree_spec();
        const double horizon = std::isinf(cfg.horizon) ? 3 * cfg.T : cfg.horizon;
        auto runs = parallel_map<InvariantSweep>(0, cfg.runs, cfg.jobs, [&](std::size_t i) {
            InvariantSweep out;
            out.trajectories = 1;
            auto traj = detail::simulate_run(cfg, tree, i, horizon);
            TrajectoryIndex ix(traj, std::min(traj.known_until, horizon));
            std::vector<double> times{0.0};
            for (const auto &e : ix.events())
            {
                times.push_back(e.clock);
            }
            for (std::size_t j = 1; j < times.size(); ++j)
            {
                const double t = times[j];
                for (std::size_t a = 0; a < j; ++a)
                {
                    const double s = times[a];
                    ++out.pairs;
                    if (!is_regeneration_time(ix, s, t))
                    {
                        continue;
                    }
                    const bool ok = compare_useful_sets(ix, s, t).ok();
                    ++out.regeneration_pairs;
                    out.regeneration_violations += !ok;
                    if (is_downward_regeneration_time(ix, s, t))
                    {
                        ++out.downward_pairs;
                        out.downward_violations += !ok;
                    }
                }
                if (useful_bars_at(ix, t).size() == 0)
                {
                    continue;
                }
                try
                {
                    auto lost = useful_bars_lost(ix, t);
                    ++out.loss_checks;
                    out.loss_violations += lost.lost > 2;
                }
                catch (const PreconditionViolated &)
                {
                }
            }
            if (out.downward_violations || out.loss_violations)
            {
                out.first_violating_seed = cfg.run_seed(i);
            }
            return out;
        });
        InvariantSweep total;
        for (const auto &r : runs)
        {
            total.trajectories += r.trajectories;
            total.pairs += r.pairs;
            total.regeneration_pairs += r.regeneration_pairs;
            total.regeneration_violations += r.regeneration_violations;
            total.downward_pairs += r.downward_pairs;
            total.downward_violations += r.downward_violations;
            total.loss_checks += r.loss_checks;
            total.loss_violations += r.loss_violations;
            if (!total.first_violating_seed && r.first_violating_seed)
            {
                total.first_violating_seed = r.first_violating_seed;
            }
        }
        return total;
    }

    inline EstimateRecord run_estimator(const std::string &name, const ExperimentConfig &cfg)
    {
        if (name == "useful")
        {
            return estimate_useful_bar_count(cfg);
        }
        if (name == "frontier")
        {
            return estimate_frontier_departure(cfg);
        }
        if (name == "return")
        {
            return estimate_return_probability(cfg);
        }
        if (name == "cycle")
        {
            return cycle_length_survey(cfg);
        }
        throw ParseError("unknown estimator '" + name + "' (useful, frontier, return, cycle)");
    }

    struct SweepRow
    {
        double T;
        EstimateRecord record;
    };

    /// Runs one estimator over an increasing grid of T with the same master seed, so that run i
    /// sees the same environment below min(T, T') at every grid point.
    inline std::vector<SweepRow> sweep_T(const ExperimentConfig &cfg, const std::vector<double> &grid,
                                         const std::string &estimator)
    {
        if (grid.empty())
        {
            throw DomainError("empty T grid");
        }
        for (std::size_t i = 1; i < grid.size(); ++i)
        {
            if (!(grid[i - 1] < grid[i]))
            {
                throw DomainError("T grid must be increasing");
            }
        }
        std::vector<SweepRow> rows;
        for (double T : grid)
        {
            auto c = cfg;
            c.T = T;
            rows.push_back({T, run_estimator(estimator, c)});
        }
        return rows;
    }

    inline constexpr const char *sweep_csv_header =
        "T,estimator,estimate,lo99,hi99,n,censored_depth,censored_budget,censored_horizon,seed";

    inline std::string sweep_csv(const std::vector<SweepRow> &rows, std::uint64_t seed)
    {
        std::ostringstream out;
        out.precision(17);
        out << sweep_csv_header << '\n';
        for (const auto &r : rows)
        {
            const auto &e = r.record;
            out << r.T << ',' << e.estimator << ',' << e.estimate << ',' << e.ci99.lo << ',' << e.ci99.hi << ','
                << e.n << ',' << e.censored_depth << ',' << e.censored_budget << ',' << e.censored_horizon << ','
                << seed << '\n';
        }
        return out.str();
    }

    inline std::string histogram_csv(const std::map<std::size_t, std::uint64_t> &h)
    {
        std::ostringstream out;
        out << "length,count\n";
        for (auto [value, count] : h)
        {
            out << value << ',' << count << '\n';
        }
        return out.str();
    }
}
