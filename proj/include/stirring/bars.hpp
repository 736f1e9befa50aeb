#pragma once

#include "errors.hpp"
#include "rng.hpp"
#include "tree.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <istream>
#include <limits>
#include <map>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <unordered_map>
#include <vector>

namespace stirring
{
    struct Bar
    {
        EdgeId edge;
        double height;

        friend auto operator<=>(const Bar &, const Bar &) = default;
        friend bool operator==(const Bar &, const Bar &) = default;
    };

    /// The bar environment. In Poisson mode each edge carries a rate-one Poisson process on
    /// [0,T), sampled on first request from a stream keyed by (seed, edge path), so the
    /// environment never depends on the order of queries. In fixed mode the bars are given.
    class BarStore
    {
    public:
        BarStore(double T, std::uint64_t master_seed) : T_(T), seed_(master_seed)
        {
            if (!(T > 0) || !std::isfinite(T))
            {
                throw DomainError("T must be positive and finite");
            }
        }

        /// Environment consisting of exactly the given bars.
        static BarStore fixed(double T, const std::vector<Bar> &bars)
        {
            BarStore store(T, 0);
            store.fixed_ = true;
            for (const auto &b : bars)
            {
                if (!(b.height >= 0 && b.height < T))
                {
                    throw DomainError("bar height outside [0,T)");
                }
                if (b.edge.child.is_root())
                {
                    throw InvalidVertex("the root has no parent edge");
                }
                store.fixed_bars_[path_hash(b.edge.child)].push_back(b.height);
            }
            for (auto &[h, heights] : store.fixed_bars_)
            {
                std::sort(heights.begin(), heights.end());
                if (std::adjacent_find(heights.begin(), heights.end()) != heights.end())
                {
                    throw HeightCollision("two bars on one edge share a height");
                }
            }
            return store;
        }

        double T() const noexcept { return T_; }
        std::uint64_t master_seed() const noexcept { return seed_; }
        bool is_fixed() const noexcept { return fixed_; }

        /// Number of times a non-increasing arrival had to be re-drawn.
        std::uint64_t redraws() const noexcept { return redraws_; }

        /// Heights on the edge whose child end has the given path hash, strictly increasing.
        std::vector<double> sample_edge(std::uint64_t edge_hash) const
        {
            if (fixed_)
            {
                auto it = fixed_bars_.find(edge_hash);
                return it == fixed_bars_.end() ? std::vector<double>{} : it->second;
            }
            std::vector<double> heights;
            CounterStream stream(hash_combine(seed_, edge_hash));
            double s = 0;
            while (true)
            {
                double next = s + stream.exponential();
                if (next >= T_)
                {
                    break;
                }
                if (next <= s || (!heights.empty() && next <= heights.back()))
                {
                    ++redraws_;
                    continue;
                }
                heights.push_back(next);
                s = next;
            }
            return heights;
        }

        /// Memoized per edge. The memo is an optimization only and may be dropped at any time.
        const std::vector<double> &bars_on_edge(const EdgeId &e) const
        {
            if (e.child.is_root())
            {
                throw InvalidVertex("the root has no parent edge");
            }
            auto key = path_hash(e.child);
            auto it = memo_.find(key);
            if (it == memo_.end())
            {
                if (memo_.size() > memo_limit)
                {
                    memo_.clear();
                }
                it = memo_.emplace(key, sample_edge(key)).first;
            }
            return it->second;
        }

        /// Every bar of a finite tree, ordered by edge then height.
        std::vector<Bar> all_bars(const TreeSpec &tree) const
        {
            std::vector<Bar> out;
            for (const auto &v : tree.enumerate())
            {
                if (v.is_root())
                {
                    continue;
                }
                for (double h : sample_edge(path_hash(v)))
                {
                    out.push_back(Bar{EdgeId{v}, h});
                }
            }
            return out;
        }

        void clear_memo() const { memo_.clear(); }

    private:
        static constexpr std::size_t memo_limit = 1 << 18;

        double T_;
        std::uint64_t seed_;
        bool fixed_ = false;
        std::unordered_map<std::uint64_t, std::vector<double>> fixed_bars_;
        mutable std::unordered_map<std::uint64_t, std::vector<double>> memo_;
        mutable std::uint64_t redraws_ = 0;
    };

    inline constexpr std::uint32_t parent_slot = std::numeric_limits<std::uint32_t>::max();

    /// A joint on a pole: its height and the incident edge it belongs to (a child index, or
    /// parent_slot for the edge towards the root).
    struct PoleJoint
    {
        double height;
        std::uint32_t slot;
    };

    /// All joints on the pole at a materialized vertex, sorted by height.
    inline std::vector<PoleJoint> build_pole(const BarStore &store, const LazyTree &tree, NodeIndex n)
    {
        std::vector<PoleJoint> pole;
        if (n != LazyTree::root())
        {
            for (double h : store.sample_edge(tree.hash(n)))
            {
                pole.push_back({h, parent_slot});
            }
        }
        const auto k = tree.offspring(n);
        if (k > 0 && !tree.expandable(n))
        {
            throw DepthCapExceeded("pole at the depth cap needs unmaterializable child edges");
        }
        for (std::uint32_t i = 0; i < k; ++i)
        {
            for (double h : store.sample_edge(tree.child_hash(n, i)))
            {
                pole.push_back({h, i});
            }
        }
        std::sort(pole.begin(), pole.end(), [](const PoleJoint &a, const PoleJoint &b) { return a.height < b.height; });
        for (std::size_t i = 1; i < pole.size(); ++i)
        {
            if (pole[i].height == pole[i - 1].height)
            {
                throw HeightCollision("two joints on the pole at " + tree.name(n) + " share a height");
            }
        }
        return pole;
    }

    struct Joint
    {
        EdgeId edge;
        double height;
        double gap;
    };

    /// The first joint strictly above h on the pole at v, cyclically; nullopt when the pole is empty.
    inline std::optional<Joint> next_joint(const BarStore &store, const TreeSpec &tree, const VertexId &v, double h)
    {
        if (!(h >= 0 && h < store.T()))
        {
            throw DomainError("height outside [0,T)");
        }
        LazyTree lazy(tree);
        auto n = lazy.intern(v);
        auto pole = build_pole(store, lazy, n);
        if (pole.empty())
        {
            return std::nullopt;
        }
        auto it = std::upper_bound(pole.begin(), pole.end(), h,
                                   [](double x, const PoleJoint &j) { return x < j.height; });
        double gap;
        if (it == pole.end())
        {
            it = pole.begin();
            gap = it->height - h + store.T();
        }
        else
        {
            gap = it->height - h;
        }
        EdgeId e{it->slot == parent_slot ? v : v.child(it->slot)};
        return Joint{e, it->height, gap};
    }

    /// One bar per line, "edge-path<TAB>height", heights printed with 17 significant digits.
    inline void write_bar_file(std::ostream &out, const std::vector<Bar> &bars)
    {
        char buf[64];
        for (const auto &b : bars)
        {
            std::snprintf(buf, sizeof buf, "%.17g", b.height);
            out << format_path(b.edge.child) << '\t' << buf << '\n';
        }
    }

    /// Reads the format of write_bar_file; blank lines and lines starting with '#' are skipped.
    /// Vertex names are resolved against the tree, so labelled trees may use their labels.
    inline std::vector<Bar> read_bar_file(std::istream &in, const TreeSpec &tree)
    {
        std::vector<Bar> bars;
        std::string line;
        std::size_t lineno = 0;
        while (std::getline(in, line))
        {
            ++lineno;
            auto first = line.find_first_not_of(" \t\r");
            if (first == std::string::npos || line[first] == '#')
            {
                continue;
            }
            std::istringstream fields(line);
            std::string path, height;
            if (!(fields >> path >> height))
            {
                throw ParseError("bar file line " + std::to_string(lineno) + ": expected path and height");
            }
            double h = 0;
            try
            {
                std::size_t used = 0;
                h = std::stod(height, &used);
                if (used != height.size())
                {
                    throw std::invalid_argument("trailing characters");
                }
            }
            catch (const std::exception &)
            {
                throw ParseError("bar file line " + std::to_string(lineno) + ": bad height '" + height + "'");
            }
            auto v = tree.parse_vertex(path);
            if (v.is_root())
            {
                throw ParseError("bar file line " + std::to_string(lineno) + ": the root has no parent edge");
            }
            bars.push_back(Bar{EdgeId{v}, h});
        }
        return bars;
    }
}
