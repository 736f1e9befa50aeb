#pragma once

#include "bars.hpp"
#include "errors.hpp"
#include "meander.hpp"
#include "tree.hpp"

#include <algorithm>
#include <map>
#include <string>
#include <vector>

namespace stirring
{
    /// A permutation of the vertices of a finite tree. `image[i]` is where `vertices[i]` goes;
    /// both are indices into the lexicographically sorted vertex list.
    class Permutation
    {
    public:
        Permutation() = default;

        explicit Permutation(std::vector<VertexId> vertices)
            : vertices_(std::move(vertices)), image_(vertices_.size())
        {
            std::sort(vertices_.begin(), vertices_.end());
            for (std::size_t i = 0; i < image_.size(); ++i)
            {
                image_[i] = i;
            }
        }

        std::size_t size() const noexcept { return vertices_.size(); }
        const std::vector<VertexId> &vertices() const noexcept { return vertices_; }

        std::size_t index_of(const VertexId &v) const
        {
            auto it = std::lower_bound(vertices_.begin(), vertices_.end(), v);
            if (it == vertices_.end() || *it != v)
            {
                throw InvalidVertex("vertex " + format_path(v) + " not in the permutation's domain");
            }
            return static_cast<std::size_t>(it - vertices_.begin());
        }

        const VertexId &operator()(const VertexId &v) const { return vertices_[image_[index_of(v)]]; }

        void set(const VertexId &v, const VertexId &w) { image_[index_of(v)] = index_of(w); }

        std::size_t image_index(std::size_t i) const { return image_[i]; }

        bool is_bijection() const
        {
            std::vector<char> hit(image_.size(), 0);
            for (auto j : image_)
            {
                if (j >= hit.size() || hit[j])
                {
                    return false;
                }
                hit[j] = 1;
            }
            return true;
        }

        bool is_identity() const
        {
            for (std::size_t i = 0; i < image_.size(); ++i)
            {
                if (image_[i] != i)
                {
                    return false;
                }
            }
            return true;
        }

        /// (this after other)(v) = this(other(v)).
        Permutation after(const Permutation &other) const
        {
            if (other.vertices_ != vertices_)
            {
                throw InvalidVertex("permutations on different vertex sets");
            }
            Permutation out = *this;
            for (std::size_t i = 0; i < image_.size(); ++i)
            {
                out.image_[i] = image_[other.image_[i]];
            }
            return out;
        }

        friend bool operator==(const Permutation &a, const Permutation &b)
        {
            return a.vertices_ == b.vertices_ && a.image_ == b.image_;
        }

    private:
        std::vector<VertexId> vertices_;
        std::vector<std::size_t> image_;
    };

    /// Applies the transposition of each bar's endpoints in increasing order of height. The
    /// result maps a vertex to where the particle starting there ends up at time T.
    inline Permutation compose_transpositions(const TreeSpec &tree, std::vector<Bar> bars)
    {
        std::sort(bars.begin(), bars.end(), [](const Bar &a, const Bar &b) { return a.height < b.height; });
        for (std::size_t i = 1; i < bars.size(); ++i)
        {
            if (bars[i].height == bars[i - 1].height)
            {
                throw DuplicateHeight("two bars share a height");
            }
        }
        Permutation p(tree.enumerate());
        // occupant[x] is the starting vertex of whoever currently sits at x.
        std::vector<std::size_t> occupant(p.size());
        for (std::size_t i = 0; i < occupant.size(); ++i)
        {
            occupant[i] = i;
        }
        for (const auto &b : bars)
        {
            auto c = p.index_of(b.edge.child);
            auto q = p.index_of(b.edge.parent_vertex());
            std::swap(occupant[c], occupant[q]);
        }
        const auto &vs = p.vertices();
        for (std::size_t x = 0; x < occupant.size(); ++x)
        {
            p.set(vs[occupant[x]], vs[x]);
        }
        return p;
    }

    /// v -> Y_v(T), computed by running the meander from (v, 0) for duration T.
    inline Permutation meander_permutation(const TreeSpec &tree, const std::vector<Bar> &bars, double T)
    {
        for (std::size_t i = 0; i < bars.size(); ++i)
        {
            for (std::size_t j = i + 1; j < bars.size(); ++j)
            {
                if (bars[i].height == bars[j].height)
                {
                    throw DuplicateHeight("two bars share a height");
                }
            }
        }
        auto store = BarStore::fixed(T, bars);
        auto lazy = std::make_shared<LazyTree>(tree);
        Permutation p(tree.enumerate());
        RunOptions opt;
        opt.horizon = T;
        opt.detect_period = false;
        for (const auto &v : p.vertices())
        {
            auto traj = run_meander(store, lazy, lazy->intern(v), 0.0, opt);
            p.set(v, traj.vertex_id_at(T));
        }
        return p;
    }

    /// Disjoint cycles, each rotated to start at its least vertex, listed by that vertex.
    inline std::vector<std::vector<VertexId>> cycle_decomposition(const Permutation &p)
    {
        std::vector<std::vector<VertexId>> cycles;
        std::vector<char> done(p.size(), 0);
        for (std::size_t i = 0; i < p.size(); ++i)
        {
            if (done[i])
            {
                continue;
            }
            std::vector<VertexId> cycle;
            for (auto j = i; !done[j]; j = p.image_index(j))
            {
                done[j] = 1;
                cycle.push_back(p.vertices()[j]);
            }
            cycles.push_back(std::move(cycle));
        }
        return cycles;
    }

    /// Cycle lengths, sorted descending.
    inline std::vector<std::size_t> cycle_type(const Permutation &p)
    {
        std::vector<std::size_t> lengths;
        for (const auto &c : cycle_decomposition(p))
        {
            lengths.push_back(c.size());
        }
        std::sort(lengths.rbegin(), lengths.rend());
        return lengths;
    }

    inline std::size_t cycle_length_of(const Permutation &p, const VertexId &v)
    {
        auto start = p.index_of(v);
        std::size_t n = 1;
        for (auto j = p.image_index(start); j != start; j = p.image_index(j))
        {
            ++n;
        }
        return n;
    }
}
