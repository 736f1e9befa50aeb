#pragma once

#include "bars.hpp"
#include "errors.hpp"
#include "meander.hpp"
#include "tree.hpp"

#include <algorithm>
#include <bit>
#include <cstdint>
#include <limits>
#include <set>
#include <utility>
#include <vector>

namespace stirring
{
    inline constexpr std::size_t no_event = std::numeric_limits<std::size_t>::max();

    /// A maximal interval [enter, exit) during which Y sits at one vertex. Sojourn 0 starts at
    /// time 0; sojourn i > 0 starts with event i - 1 and ends with event i.
    struct Sojourn
    {
        NodeIndex vertex;
        double enter;
        double exit;
    };

    /// Sojourn decomposition of a trajectory over [0, t_max], with per-vertex lookup. The last
    /// sojourn's exit is the next event's clock when that is known, and infinity otherwise.
    class TrajectoryIndex
    {
    public:
        TrajectoryIndex(const Trajectory &traj, double t_max) : traj_(&traj), t_max_(t_max)
        {
            traj.check_known(t_max);
            events_ = traj.events_until(t_max);
            sojourns_.reserve(events_.size() + 1);
            sojourns_.push_back({traj.start, 0.0, infinity});
            for (const auto &e : events_)
            {
                sojourns_.back().exit = e.clock;
                sojourns_.push_back({e.to, e.clock, infinity});
            }
            if (traj.has_event(events_.size()) && (traj.periodic() || events_.size() < traj.events.size()))
            {
                sojourns_.back().exit = traj.event(events_.size()).clock;
            }
            by_vertex_.assign(traj.tree->size(), {});
            for (std::uint32_t i = 0; i < sojourns_.size(); ++i)
            {
                by_vertex_[sojourns_[i].vertex].push_back(i);
            }
        }

        const Trajectory &trajectory() const noexcept { return *traj_; }
        const LazyTree &tree() const noexcept { return *traj_->tree; }
        double t_max() const noexcept { return t_max_; }
        double T() const noexcept { return traj_->T; }
        const std::vector<CrossingEvent> &events() const noexcept { return events_; }
        const std::vector<Sojourn> &sojourns() const noexcept { return sojourns_; }

        const std::vector<std::uint32_t> &sojourns_at(NodeIndex v) const
        {
            static const std::vector<std::uint32_t> none;
            return v < by_vertex_.size() ? by_vertex_[v] : none;
        }

        void check(double t) const
        {
            if (t > t_max_)
            {
                throw QueryBeyondHorizon("query time past the indexed part of the trajectory");
            }
        }

        /// Index of the sojourn containing time t.
        std::size_t sojourn_at(double t) const
        {
            check(t);
            auto k = std::upper_bound(events_.begin(), events_.end(), t,
                                      [](double c, const CrossingEvent &e) { return c < e.clock; }) -
                     events_.begin();
            return static_cast<std::size_t>(k);
        }

        NodeIndex vertex_at(double t) const { return sojourns_[sojourn_at(t)].vertex; }

        /// Sojourns at v meeting [a, b] (closed) or [a, b) (half-open); returns count and the first one.
        std::pair<std::size_t, std::size_t> meeting(NodeIndex v, double a, double b, bool closed) const
        {
            std::size_t count = 0, first = no_event;
            for (auto i : sojourns_at(v))
            {
                const auto &s = sojourns_[i];
                const bool starts_in_time = closed ? s.enter <= b : s.enter < b;
                if (starts_in_time && s.exit > a)
                {
                    if (count++ == 0)
                    {
                        first = i;
                    }
                }
            }
            return {count, first};
        }

        /// True when the vertex is visited somewhere in [a, b).
        bool visited_in(NodeIndex v, double a, double b) const { return meeting(v, a, b, false).first > 0; }

    private:
        const Trajectory *traj_;
        double t_max_;
        std::vector<CrossingEvent> events_;
        std::vector<Sojourn> sojourns_;
        std::vector<std::vector<std::uint32_t>> by_vertex_;
    };

    struct UsefulBar
    {
        NodeIndex edge;  ///< child end of the supporting edge
        double height;
        std::size_t event;     ///< index of the qualifying downward crossing
        double parent_enter;   ///< arrival at the parent end
        double child_enter;    ///< arrival at the child end (the crossing time)
        double child_exit;     ///< departure from the child end

        std::pair<NodeIndex, std::uint64_t> key() const noexcept
        {
            return {edge, std::bit_cast<std::uint64_t>(height)};
        }
    };

    struct UsefulBarReport
    {
        double from_time = 0;  ///< s for relative reports, 0 otherwise
        double at_time = 0;
        std::vector<UsefulBar> members;  ///< in crossing order

        std::size_t size() const noexcept { return members.size(); }

        bool contains(const UsefulBar &b) const
        {
            return std::any_of(members.begin(), members.end(), [&](const UsefulBar &m) { return m.key() == b.key(); });
        }

        std::vector<Bar> bars(const LazyTree &tree) const
        {
            std::vector<Bar> out;
            for (const auto &m : members)
            {
                out.push_back(Bar{EdgeId{tree.vertex(m.edge)}, m.height});
            }
            return out;
        }
    };

    /// U_t: bars crossed downward before t from a parent visited only during the single sojourn
    /// that ended with this crossing, at most T/2 after arriving there, into a child first reached
    /// by this crossing and left for good before t.
    inline UsefulBarReport useful_bars_at(const TrajectoryIndex &ix, double t)
    {
        ix.check(t);
        UsefulBarReport r;
        r.at_time = t;
        const auto &ev = ix.events();
        const auto &so = ix.sojourns();
        for (std::size_t k = 0; k < ev.size() && ev[k].clock < t; ++k)
        {
            const auto &e = ev[k];
            if (!e.downward())
            {
                continue;
            }
            const NodeIndex up = e.from, down = e.to;
            // The parent's visits in [0, t] must be the one sojourn ending with event k.
            const auto &ups = ix.sojourns_at(up);
            std::size_t up_count = 0;
            for (auto i : ups)
            {
                up_count += so[i].enter <= t;
            }
            if (up_count != 1 || ups.front() != k)
            {
                continue;
            }
            const double h_up = so[k].enter;
            // The crossing is the first arrival at the child.
            const auto &downs = ix.sojourns_at(down);
            if (downs.front() != k + 1)
            {
                continue;
            }
            if (e.clock - h_up > ix.T() / 2)
            {
                continue;
            }
            std::size_t down_count = 0;
            for (auto i : downs)
            {
                down_count += so[i].enter < t;
            }
            if (down_count != 1 || !(so[k + 1].exit < t))
            {
                continue;
            }
            r.members.push_back({e.edge, e.height, k, h_up, e.clock, so[k + 1].exit});
        }
        return r;
    }

    /// U_{s,t}: like U_t but relative to time s, restricted to edges strictly below Y(s) whose
    /// parent end is reached as a new distance record from Y(s).
    inline UsefulBarReport useful_bars_between(const TrajectoryIndex &ix, double s, double t)
    {
        ix.check(t);
        if (!(s >= 0 && s < t))
        {
            throw DomainError("useful_bars_between needs 0 <= s < t");
        }
        UsefulBarReport r;
        r.from_time = s;
        r.at_time = t;
        const auto &tree = ix.tree();
        const auto &ev = ix.events();
        const auto &so = ix.sojourns();
        const auto first = ix.sojourn_at(s);
        const NodeIndex base = so[first].vertex;

        // record[i] marks sojourns i > first whose arrival sets a strict distance record from Y(s).
        std::vector<char> record(so.size(), 0);
        std::uint32_t best = 0;
        for (std::size_t i = first + 1; i < so.size() && so[i].enter < t; ++i)
        {
            auto dist = tree.distance(base, so[i].vertex);
            if (dist > best)
            {
                best = dist;
                record[i] = 1;
            }
        }

        for (std::size_t k = first; k < ev.size() && ev[k].clock < t; ++k)
        {
            const auto &e = ev[k];
            if (!e.downward() || e.clock < s)
            {
                continue;
            }
            const NodeIndex up = e.from, down = e.to;
            if (up == base || !tree.is_descendent(up, base))
            {
                continue;
            }
            // Parent visited in [s, t] only during sojourn k, which began as a record arrival.
            auto [up_count, up_first] = ix.meeting(up, s, t, true);
            if (up_count != 1 || up_first != k || !record[k])
            {
                continue;
            }
            // The crossing is the first arrival at the child after s.
            if (ix.visited_in(down, s, e.clock))
            {
                continue;
            }
            if (e.clock - so[k].enter > ix.T() / 2)
            {
                continue;
            }
            auto [down_count, down_first] = ix.meeting(down, s, t, false);
            if (down_count != 1 || down_first != k + 1 || !(so[k + 1].exit < t))
            {
                continue;
            }
            r.members.push_back({e.edge, e.height, k, so[k].enter, e.clock, so[k + 1].exit});
        }
        return r;
    }

    inline UsefulBarReport useful_bars_at(const Trajectory &traj, double t)
    {
        return useful_bars_at(TrajectoryIndex(traj, t), t);
    }

    inline UsefulBarReport useful_bars_between(const Trajectory &traj, double s, double t)
    {
        return useful_bars_between(TrajectoryIndex(traj, t), s, t);
    }

    /// s is a t-regeneration time when the visits of Y(s)'s vertex within [0, t] form one interval.
    inline bool is_regeneration_time(const TrajectoryIndex &ix, double s, double t)
    {
        ix.check(t);
        if (s > t)
        {
            throw DomainError("regeneration time must not exceed t");
        }
        auto v = ix.vertex_at(s);
        return ix.meeting(v, 0.0, t, true).first == 1;
    }

    inline bool is_regeneration_time(const Trajectory &traj, double s, double t)
    {
        return is_regeneration_time(TrajectoryIndex(traj, t), s, t);
    }

    /// True when Y stays in the descendent tree of Y(s) throughout [s, t].
    inline bool stays_below(const TrajectoryIndex &ix, double s, double t)
    {
        ix.check(t);
        if (s > t)
        {
            throw DomainError("stays_below needs s <= t");
        }
        auto first = ix.sojourn_at(s);
        const auto &so = ix.sojourns();
        const NodeIndex base = so[first].vertex;
        for (auto i = first + 1; i < so.size() && so[i].enter <= t; ++i)
        {
            if (!ix.tree().is_descendent(so[i].vertex, base))
            {
                return false;
            }
        }
        return true;
    }

    /// A t-regeneration time whose vertex, if left before t, is left towards its offspring.
    /// Equivalently Y stays in the descendent tree of Y(s) throughout [s, t].
    inline bool is_downward_regeneration_time(const TrajectoryIndex &ix, double s, double t)
    {
        if (!is_regeneration_time(ix, s, t))
        {
            return false;
        }
        const auto i = ix.sojourn_at(s);
        const auto &so = ix.sojourns();
        if (!(so[i].exit < t) || i + 1 >= so.size())
        {
            return true;
        }
        return ix.tree().parent(so[i + 1].vertex) == so[i].vertex;
    }

    struct DisjointnessCheck
    {
        bool disjoint = true;
        bool earlier_contained = true;  ///< U_s within U_t
        bool later_contained = true;    ///< U_{s,t} within U_t

        bool ok() const noexcept { return disjoint && earlier_contained && later_contained; }
    };

    /// Compares U_s, U_{s,t} and U_t without any precondition on s.
    inline DisjointnessCheck compare_useful_sets(const TrajectoryIndex &ix, double s, double t)
    {
        DisjointnessCheck c;
        auto at_t = useful_bars_at(ix, t);
        auto between = useful_bars_between(ix, s, t);
        if (s > 0)
        {
            auto at_s = useful_bars_at(ix, s);
            for (const auto &m : at_s.members)
            {
                c.earlier_contained = c.earlier_contained && at_t.contains(m);
                c.disjoint = c.disjoint && !between.contains(m);
            }
        }
        for (const auto &m : between.members)
        {
            c.later_contained = c.later_contained && at_t.contains(m);
        }
        return c;
    }

    /// U_s and U_{s,t} are disjoint subsets of U_t whenever s is a t-regeneration time.
    inline bool check_lemma4(const TrajectoryIndex &ix, double s, double t)
    {
        if (!is_regeneration_time(ix, s, t))
        {
            throw PreconditionViolated("s is not a t-regeneration time");
        }
        return compare_useful_sets(ix, s, t).ok();
    }

    inline bool check_lemma4(const Trajectory &traj, double s, double t)
    {
        return check_lemma4(TrajectoryIndex(traj, t), s, t);
    }

    struct DamageReport
    {
        double return_time;         ///< first visit to the grandparent end of the last useful bar after t
        std::size_t lost;           ///< members of U_t missing from U at return_time
        std::vector<UsefulBar> lost_bars;
    };

    /// Bars of U_t lost by the first visit after t to the parent of the last useful bar's parent end.
    inline DamageReport useful_bars_lost(const TrajectoryIndex &ix, double t)
    {
        auto at_t = useful_bars_at(ix, t);
        if (at_t.members.empty())
        {
            throw PreconditionViolated("no useful bar at t");
        }
        const auto &last = at_t.members.back();
        const auto &tree = ix.tree();
        const NodeIndex up = tree.parent(last.edge);
        if (up == LazyTree::root())
        {
            throw PreconditionViolated("the last useful bar hangs from the root");
        }
        const NodeIndex grand = tree.parent(up);
        double h = infinity;
        for (auto i : ix.sojourns_at(grand))
        {
            const auto &so = ix.sojourns()[i];
            if (so.exit > t)
            {
                h = std::max(so.enter, t);
                break;
            }
        }
        if (h > ix.t_max())
        {
            throw PreconditionViolated("the return to the grandparent vertex is not covered");
        }
        auto later = useful_bars_at(ix, h);
        DamageReport rep{h, 0, {}};
        for (const auto &m : at_t.members)
        {
            if (!later.contains(m))
            {
                ++rep.lost;
                rep.lost_bars.push_back(m);
            }
        }
        return rep;
    }

    /// At most two useful bars are lost when Y next visits the last useful bar's grandparent end.
    inline bool check_lemma8(const TrajectoryIndex &ix, double t) { return useful_bars_lost(ix, t).lost <= 2; }

    inline bool check_lemma8(const Trajectory &traj, double t)
    {
        return check_lemma8(TrajectoryIndex(traj, traj.known_until < infinity ? traj.known_until : t), t);
    }

    enum class ReturnClass
    {
        NoReturnObserved,
        GoodReturn,
        BadReturn,
        Censored,  ///< the return happened but its outcome lies past the covered time
    };

    inline const char *return_class_name(ReturnClass c)
    {
        switch (c)
        {
        case ReturnClass::NoReturnObserved:
            return "NoReturnObserved";
        case ReturnClass::GoodReturn:
            return "GoodReturn";
        case ReturnClass::BadReturn:
            return "BadReturn";
        case ReturnClass::Censored:
            return "Censored";
        }
        return "?";
    }

    struct ReturnDetail
    {
        ReturnClass outcome = ReturnClass::NoReturnObserved;
        double return_time = infinity;     ///< H_{t, child end}
        double departure_time = infinity;  ///< first exit from the edge's two ends after the return
        bool frontier_departure = false;
        bool stays_below = false;
        std::size_t advance_bars = 0;      ///< |U_{f, f+T}| for the frontier time f
    };

    /// Outcome of the first departure from {e+, e-} after Y returns to e-.
    struct Departure
    {
        bool known = false;
        double time = infinity;
        bool frontier = false;
    };

    inline Departure departure_after(const TrajectoryIndex &ix, NodeIndex up, NodeIndex down, double eta)
    {
        Departure d;
        const auto &so = ix.sojourns();
        const auto &tree = ix.tree();
        for (auto i = ix.sojourn_at(eta) + 1; i < so.size(); ++i)
        {
            const NodeIndex v = so[i].vertex;
            if (v == up || v == down)
            {
                continue;
            }
            d.known = true;
            d.time = so[i].enter;
            const NodeIndex p = tree.parent(v);
            const bool offspring = v != LazyTree::root() && (p == up || p == down);
            d.frontier = offspring && ix.sojourns_at(v).front() == i;
            return d;
        }
        return d;
    }

    /// Classifies the return of Y to the child end of a useful bar after t. A good return leaves
    /// the edge into a fresh offspring at the frontier time f, stays below Y(f) on [f, f+T] and
    /// collects at least c1*T useful bars in U_{f,f+T}.
    inline ReturnDetail classify_return_detail(const TrajectoryIndex &ix, const UsefulBar &bar, double t, double c1)
    {
        auto at_t = useful_bars_at(ix, t);
        if (!at_t.contains(bar))
        {
            throw NotAUsefulBar("bar is not in U_t");
        }
        ReturnDetail out;
        const auto &tree = ix.tree();
        const NodeIndex down = bar.edge, up = tree.parent(bar.edge);
        for (auto i : ix.sojourns_at(down))
        {
            const auto &so = ix.sojourns()[i];
            if (so.exit > t && so.enter >= bar.child_enter)
            {
                if (so.enter <= t && so.exit > t)
                {
                    out.return_time = t;
                }
                else
                {
                    out.return_time = so.enter;
                }
                break;
            }
        }
        if (out.return_time == infinity)
        {
            out.outcome = ReturnClass::NoReturnObserved;
            return out;
        }
        auto dep = departure_after(ix, up, down, out.return_time);
        if (!dep.known)
        {
            out.outcome = ReturnClass::Censored;
            return out;
        }
        out.departure_time = dep.time;
        out.frontier_departure = dep.frontier;
        if (!dep.frontier)
        {
            out.outcome = ReturnClass::BadReturn;
            return out;
        }
        const double f = dep.time;
        if (f + ix.T() > ix.t_max())
        {
            out.outcome = ReturnClass::Censored;
            return out;
        }
        out.stays_below = stays_below(ix, f, f + ix.T());
        out.advance_bars = useful_bars_between(ix, f, f + ix.T()).size();
        out.outcome = out.stays_below && static_cast<double>(out.advance_bars) >= c1 * ix.T()
                          ? ReturnClass::GoodReturn
                          : ReturnClass::BadReturn;
        return out;
    }

    inline ReturnClass classify_return(const TrajectoryIndex &ix, const UsefulBar &bar, double t, double c1)
    {
        return classify_return_detail(ix, bar, t, c1).outcome;
    }

    /// Rapid advance from a frontier time f: Y stays below Y(f) on [f, f+T] and |U_{f,f+T}| >= c1*T.
    inline bool rapid_advance(const TrajectoryIndex &ix, double f, double c1)
    {
        const double end = f + ix.T();
        return stays_below(ix, f, end) &&
               static_cast<double>(useful_bars_between(ix, f, end).size()) >= c1 * ix.T();
    }
}
