#pragma once

#include "errors.hpp"
#include "rng.hpp"

#include <algorithm>
#include <charconv>
#include <compare>
#include <cstdint>
#include <limits>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <variant>
#include <vector>

namespace stirring
{
    /// A vertex addressed by the child indices along the path from the root. The root is the
    /// empty path. Comparison is lexicographic, so a parent sorts before its descendents and
    /// siblings sort by child index.
    struct VertexId
    {
        std::vector<std::uint32_t> path;

        static VertexId root() { return {}; }

        std::size_t depth() const noexcept { return path.size(); }
        bool is_root() const noexcept { return path.empty(); }

        VertexId parent() const
        {
            if (path.empty())
            {
                throw InvalidVertex("the root has no parent");
            }
            return VertexId{{path.begin(), path.end() - 1}};
        }

        VertexId child(std::uint32_t i) const
        {
            VertexId c = *this;
            c.path.push_back(i);
            return c;
        }

        friend auto operator<=>(const VertexId &, const VertexId &) = default;
        friend bool operator==(const VertexId &, const VertexId &) = default;
    };

    /// The edge (parent(child), child).
    struct EdgeId
    {
        VertexId child;

        VertexId parent_vertex() const { return child.parent(); }
        const VertexId &child_vertex() const noexcept { return child; }

        friend auto operator<=>(const EdgeId &, const EdgeId &) = default;
        friend bool operator==(const EdgeId &, const EdgeId &) = default;
    };

    /// "phi" for the root, "phi.0.3" otherwise.
    inline std::string format_path(const VertexId &v)
    {
        std::string out = "phi";
        for (auto i : v.path)
        {
            out += '.';
            out += std::to_string(i);
        }
        return out;
    }

    /// Accepts "phi", "root", "" and dotted index lists with or without the "phi." / "root." prefix.
    inline std::optional<VertexId> try_parse_path(std::string_view text)
    {
        VertexId v;
        if (text.empty() || text == "phi" || text == "root")
        {
            return v;
        }
        for (std::string_view prefix : {"phi.", "root."})
        {
            if (text.substr(0, prefix.size()) == prefix)
            {
                text.remove_prefix(prefix.size());
                break;
            }
        }
        while (!text.empty())
        {
            auto dot = text.find('.');
            auto piece = text.substr(0, dot);
            std::uint32_t value = 0;
            auto [ptr, ec] = std::from_chars(piece.data(), piece.data() + piece.size(), value);
            if (ec != std::errc{} || ptr != piece.data() + piece.size() || piece.empty())
            {
                return std::nullopt;
            }
            v.path.push_back(value);
            if (dot == std::string_view::npos)
            {
                break;
            }
            text.remove_prefix(dot + 1);
            if (text.empty())
            {
                return std::nullopt;
            }
        }
        return v;
    }

    inline std::uint64_t root_path_hash() noexcept { return mix64(0x726f6f745f706869ULL); }

    inline std::uint64_t child_path_hash(std::uint64_t parent_hash, std::uint32_t index) noexcept
    {
        return hash_combine(parent_hash, static_cast<std::uint64_t>(index) + 1);
    }

    /// Stable 64-bit hash of a vertex path; identifies the edge above a non-root vertex.
    inline std::uint64_t path_hash(const VertexId &v) noexcept
    {
        std::uint64_t h = root_path_hash();
        for (auto i : v.path)
        {
            h = child_path_hash(h, i);
        }
        return h;
    }

    inline std::size_t graph_distance(const VertexId &v, const VertexId &w) noexcept
    {
        auto [a, b] = std::mismatch(v.path.begin(), v.path.end(), w.path.begin(), w.path.end());
        auto common = static_cast<std::size_t>(a - v.path.begin());
        return v.depth() + w.depth() - 2 * common;
    }

    /// True when v lies in the descendent tree of w (v == w included).
    inline bool is_descendent(const VertexId &v, const VertexId &w) noexcept
    {
        return w.depth() <= v.depth() && std::equal(w.path.begin(), w.path.end(), v.path.begin());
    }

    /// Deepest common ancestor.
    inline VertexId meet(const VertexId &v, const VertexId &w)
    {
        auto [a, b] = std::mismatch(v.path.begin(), v.path.end(), w.path.begin(), w.path.end());
        return VertexId{{v.path.begin(), a}};
    }

    enum class RootConvention
    {
        FullDegree,     ///< root has d0 offspring, so every untruncated vertex has degree d0
        SameOffspring,  ///< root has d0 - 1 offspring like every other vertex
    };

    class TreeSpec
    {
    public:
        struct RegularOffspring
        {
            std::uint32_t d;
        };
        struct AngelRegular
        {
            std::uint32_t d0;
            RootConvention root = RootConvention::FullDegree;
        };
        struct ExplicitFinite
        {
            /// offspring[i] lists the node indices of the children of node i; node 0 is the root.
            std::vector<std::vector<std::uint32_t>> offspring;
            std::vector<std::string> labels;
        };
        using Kind = std::variant<RegularOffspring, AngelRegular, ExplicitFinite>;

        static TreeSpec regular(std::uint32_t d, std::size_t depth_cap)
        {
            if (d == 0)
            {
                throw InvalidTree("regular tree needs at least one offspring per vertex");
            }
            if (depth_cap == 0)
            {
                throw InvalidTree("infinite trees need a positive depth cap");
            }
            return TreeSpec(RegularOffspring{d}, depth_cap);
        }

        static TreeSpec angel(std::uint32_t d0, std::size_t depth_cap,
                              RootConvention root = RootConvention::FullDegree)
        {
            if (d0 < 2)
            {
                throw InvalidTree("angel tree needs degree at least 2");
            }
            if (depth_cap == 0)
            {
                throw InvalidTree("infinite trees need a positive depth cap");
            }
            return TreeSpec(AngelRegular{d0, root}, depth_cap);
        }

        static TreeSpec explicit_finite(std::vector<std::vector<std::uint32_t>> offspring,
                                        std::vector<std::string> labels = {},
                                        std::optional<std::size_t> depth_cap = std::nullopt)
        {
            validate(offspring, labels);
            return TreeSpec(ExplicitFinite{std::move(offspring), std::move(labels)}, depth_cap);
        }

        /// Finite tree from offspring counts listed in breadth-first order (root first).
        static TreeSpec from_offspring_counts(const std::vector<std::uint32_t> &counts,
                                              std::vector<std::string> labels = {})
        {
            if (counts.empty())
            {
                throw InvalidTree("empty offspring-count list");
            }
            std::vector<std::vector<std::uint32_t>> offspring(counts.size());
            std::uint32_t next = 1;
            for (std::size_t i = 0; i < counts.size(); ++i)
            {
                if (i >= next)
                {
                    throw InvalidTree("offspring counts describe a disconnected forest");
                }
                for (std::uint32_t c = 0; c < counts[i]; ++c)
                {
                    if (next >= counts.size())
                    {
                        throw InvalidTree("offspring counts reference more vertices than listed");
                    }
                    offspring[i].push_back(next++);
                }
            }
            if (next != counts.size())
            {
                throw InvalidTree("offspring counts leave vertices unreachable");
            }
            return explicit_finite(std::move(offspring), std::move(labels));
        }

        /// The complete d-ary tree cut at the given depth; vertices at that depth are leaves.
        static TreeSpec truncated_regular(std::uint32_t d, std::size_t depth)
        {
            std::vector<std::uint32_t> counts;
            std::size_t level = 1;
            for (std::size_t k = 0; k <= depth; ++k)
            {
                for (std::size_t i = 0; i < level; ++i)
                {
                    counts.push_back(k == depth ? 0 : d);
                }
                level *= d;
            }
            return from_offspring_counts(counts);
        }

        /// Root phi with offspring v and w, each of which has two offspring.
        static TreeSpec figure1()
        {
            return from_offspring_counts({2, 2, 2, 0, 0, 0, 0}, {"phi", "v", "w", "v0", "v1", "w0", "w1"});
        }

        const Kind &kind() const noexcept { return kind_; }
        std::optional<std::size_t> depth_cap() const noexcept { return depth_cap_; }

        TreeSpec with_depth_cap(std::optional<std::size_t> cap) const
        {
            if (!cap && !is_finite())
            {
                throw InvalidTree("infinite trees need a depth cap");
            }
            TreeSpec copy = *this;
            copy.depth_cap_ = cap;
            return copy;
        }

        bool is_finite() const noexcept { return std::holds_alternative<ExplicitFinite>(kind_); }

        bool has_labels() const noexcept
        {
            auto *e = std::get_if<ExplicitFinite>(&kind_);
            return e && !e->labels.empty();
        }

        /// Offspring count for a vertex described by depth and (for explicit trees) node index.
        std::uint32_t offspring_at(std::size_t depth, std::uint32_t explicit_index) const
        {
            return std::visit(
                [&](const auto &k) -> std::uint32_t
                {
                    using K = std::decay_t<decltype(k)>;
                    if constexpr (std::is_same_v<K, RegularOffspring>)
                    {
                        return k.d;
                    }
                    else if constexpr (std::is_same_v<K, AngelRegular>)
                    {
                        return depth == 0 && k.root == RootConvention::FullDegree ? k.d0 : k.d0 - 1;
                    }
                    else
                    {
                        return static_cast<std::uint32_t>(k.offspring.at(explicit_index).size());
                    }
                },
                kind_);
        }

        /// Node index of the i-th child in an explicit tree (0 for lazy kinds).
        std::uint32_t explicit_child(std::uint32_t explicit_index, std::uint32_t i) const
        {
            if (auto *e = std::get_if<ExplicitFinite>(&kind_))
            {
                return e->offspring.at(explicit_index).at(i);
            }
            return 0;
        }

        /// Resolves a path in an explicit tree; lazy kinds always resolve to 0.
        std::optional<std::uint32_t> explicit_index(const VertexId &v) const
        {
            auto *e = std::get_if<ExplicitFinite>(&kind_);
            if (!e)
            {
                return 0;
            }
            std::uint32_t node = 0;
            for (auto i : v.path)
            {
                if (i >= e->offspring[node].size())
                {
                    return std::nullopt;
                }
                node = e->offspring[node][i];
            }
            return node;
        }

        bool contains(const VertexId &v) const
        {
            if (depth_cap_ && v.depth() > *depth_cap_)
            {
                return false;
            }
            if (is_finite())
            {
                return explicit_index(v).has_value();
            }
            std::size_t depth = 0;
            for (auto i : v.path)
            {
                if (i >= offspring_at(depth++, 0))
                {
                    return false;
                }
            }
            return true;
        }

        std::uint32_t offspring_count(const VertexId &v) const
        {
            auto idx = explicit_index(v);
            if (!idx || !contains(v))
            {
                throw InvalidVertex("vertex " + format_path(v) + " is not in the tree");
            }
            return offspring_at(v.depth(), *idx);
        }

        /// Display name: the label for labelled trees, the path string otherwise.
        std::string name(const VertexId &v) const
        {
            if (auto *e = std::get_if<ExplicitFinite>(&kind_); e && !e->labels.empty())
            {
                if (auto idx = explicit_index(v))
                {
                    return e->labels.at(*idx);
                }
            }
            return format_path(v);
        }

        /// Inverse of name(); also accepts plain path strings on labelled trees.
        VertexId parse_vertex(std::string_view text) const
        {
            if (auto *e = std::get_if<ExplicitFinite>(&kind_); e && !e->labels.empty())
            {
                auto it = std::find(e->labels.begin(), e->labels.end(), text);
                if (it != e->labels.end())
                {
                    return path_of_explicit(static_cast<std::uint32_t>(it - e->labels.begin()));
                }
            }
            auto v = try_parse_path(text);
            if (!v || !contains(*v))
            {
                throw ParseError("unknown vertex '" + std::string(text) + "'");
            }
            return *v;
        }

        /// Short textual form understood by parse_tree_spec.
        std::string describe() const
        {
            return std::visit(
                [&](const auto &k) -> std::string
                {
                    using K = std::decay_t<decltype(k)>;
                    if constexpr (std::is_same_v<K, RegularOffspring>)
                    {
                        return "regular:" + std::to_string(k.d);
                    }
                    else if constexpr (std::is_same_v<K, AngelRegular>)
                    {
                        return "angel:" + std::to_string(k.d0) +
                               (k.root == RootConvention::SameOffspring ? ":same-root" : "");
                    }
                    else
                    {
                        if (k.labels == figure1_labels())
                        {
                            return "fig1";
                        }
                        std::string out = "explicit:";
                        // Breadth-first offspring counts reproduce the tree when children are
                        // numbered in breadth-first order, which every factory here guarantees.
                        for (std::size_t i = 0; i < k.offspring.size(); ++i)
                        {
                            out += (i ? "," : "") + std::to_string(k.offspring[i].size());
                        }
                        return out;
                    }
                },
                kind_);
        }

        /// All vertices of a finite tree (depth cap respected) in lexicographic order.
        std::vector<VertexId> enumerate() const
        {
            auto *e = std::get_if<ExplicitFinite>(&kind_);
            if (!e)
            {
                throw InvalidTree("cannot enumerate an infinite tree");
            }
            std::vector<VertexId> out;
            std::vector<std::pair<std::uint32_t, VertexId>> stack{{0, VertexId::root()}};
            while (!stack.empty())
            {
                auto [node, v] = std::move(stack.back());
                stack.pop_back();
                out.push_back(v);
                if (depth_cap_ && v.depth() >= *depth_cap_)
                {
                    continue;
                }
                const auto &kids = e->offspring[node];
                for (std::size_t i = kids.size(); i-- > 0;)
                {
                    stack.emplace_back(kids[i], v.child(static_cast<std::uint32_t>(i)));
                }
            }
            return out;
        }

    private:
        TreeSpec(Kind kind, std::optional<std::size_t> cap) : kind_(std::move(kind)), depth_cap_(cap) {}

        static const std::vector<std::string> &figure1_labels()
        {
            static const std::vector<std::string> labels{"phi", "v", "w", "v0", "v1", "w0", "w1"};
            return labels;
        }

        static void validate(const std::vector<std::vector<std::uint32_t>> &offspring,
                             const std::vector<std::string> &labels)
        {
            if (offspring.empty())
            {
                throw InvalidTree("explicit tree has no vertices");
            }
            if (!labels.empty() && labels.size() != offspring.size())
            {
                throw InvalidTree("label count does not match vertex count");
            }
            std::vector<int> seen(offspring.size(), 0);
            seen[0] = 1;
            std::vector<std::uint32_t> stack{0};
            std::size_t reached = 1;
            while (!stack.empty())
            {
                auto node = stack.back();
                stack.pop_back();
                for (auto c : offspring[node])
                {
                    if (c >= offspring.size())
                    {
                        throw InvalidTree("child index out of range");
                    }
                    if (seen[c])
                    {
                        throw InvalidTree("offspring lists contain a cycle or a shared child");
                    }
                    seen[c] = 1;
                    ++reached;
                    stack.push_back(c);
                }
            }
            if (reached != offspring.size())
            {
                throw InvalidTree("explicit tree is not connected from the root");
            }
            // A vertex listed as a child of an unreachable vertex would also be caught above.
        }

        VertexId path_of_explicit(std::uint32_t target) const
        {
            const auto &e = std::get<ExplicitFinite>(kind_);
            std::vector<std::uint32_t> parent(e.offspring.size(), 0), slot(e.offspring.size(), 0);
            for (std::uint32_t i = 0; i < e.offspring.size(); ++i)
            {
                for (std::uint32_t j = 0; j < e.offspring[i].size(); ++j)
                {
                    parent[e.offspring[i][j]] = i;
                    slot[e.offspring[i][j]] = j;
                }
            }
            VertexId v;
            for (auto n = target; n != 0; n = parent[n])
            {
                v.path.push_back(slot[n]);
            }
            std::reverse(v.path.begin(), v.path.end());
            return v;
        }

        Kind kind_;
        std::optional<std::size_t> depth_cap_;
    };

    /// Parses "regular:D", "angel:D0[:same-root]", "truncated:D:DEPTH", "fig1" and
    /// "explicit:c0,c1,..." (breadth-first offspring counts).
    inline TreeSpec parse_tree_spec(std::string_view text, std::optional<std::size_t> depth_cap)
    {
        auto number = [&](std::string_view s) -> std::uint32_t
        {
            std::uint32_t value = 0;
            auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), value);
            if (ec != std::errc{} || ptr != s.data() + s.size())
            {
                throw ParseError("bad number '" + std::string(s) + "' in tree spec");
            }
            return value;
        };
        auto split = [](std::string_view s, char sep)
        {
            std::vector<std::string_view> parts;
            while (true)
            {
                auto p = s.find(sep);
                parts.push_back(s.substr(0, p));
                if (p == std::string_view::npos)
                {
                    break;
                }
                s.remove_prefix(p + 1);
            }
            return parts;
        };
        if (text == "fig1" || text == "figure1")
        {
            return TreeSpec::figure1();
        }
        auto parts = split(text, ':');
        const auto cap = depth_cap.value_or(1u << 20);
        if (parts[0] == "regular" && parts.size() == 2)
        {
            return TreeSpec::regular(number(parts[1]), cap);
        }
        if (parts[0] == "angel" && (parts.size() == 2 || parts.size() == 3))
        {
            auto conv = RootConvention::FullDegree;
            if (parts.size() == 3)
            {
                if (parts[2] != "same-root")
                {
                    throw ParseError("unknown angel root convention '" + std::string(parts[2]) + "'");
                }
                conv = RootConvention::SameOffspring;
            }
            return TreeSpec::angel(number(parts[1]), cap, conv);
        }
        if (parts[0] == "truncated" && parts.size() == 3)
        {
            return TreeSpec::truncated_regular(number(parts[1]), number(parts[2]));
        }
        if (parts[0] == "explicit" && parts.size() == 2)
        {
            std::vector<std::uint32_t> counts;
            for (auto c : split(parts[1], ','))
            {
                counts.push_back(number(c));
            }
            return TreeSpec::from_offspring_counts(counts);
        }
        throw ParseError("unrecognised tree spec '" + std::string(text) + "'");
    }

    /// Children of v in index order.
    inline std::vector<VertexId> children(const TreeSpec &tree, const VertexId &v)
    {
        if (tree.depth_cap() && v.depth() >= *tree.depth_cap())
        {
            throw DepthCapExceeded("vertex " + format_path(v) + " sits at the depth cap");
        }
        auto n = tree.offspring_count(v);
        std::vector<VertexId> out;
        out.reserve(n);
        for (std::uint32_t i = 0; i < n; ++i)
        {
            out.push_back(v.child(i));
        }
        return out;
    }

    using NodeIndex = std::uint32_t;
    inline constexpr NodeIndex no_node = std::numeric_limits<NodeIndex>::max();

    /// Arena of the vertices a simulation has touched. Vertices are materialized on demand, so an
    /// infinite tree costs memory proportional to the visited region only.
    class LazyTree
    {
    public:
        explicit LazyTree(TreeSpec spec) : spec_(std::move(spec))
        {
            nodes_.push_back(Node{no_node, 0, 0, 0, root_path_hash()});
        }

        const TreeSpec &spec() const noexcept { return spec_; }
        static constexpr NodeIndex root() noexcept { return 0; }
        std::size_t size() const noexcept { return nodes_.size(); }

        NodeIndex parent(NodeIndex n) const noexcept { return nodes_[n].parent; }
        std::uint32_t depth(NodeIndex n) const noexcept { return nodes_[n].depth; }
        std::uint32_t child_index(NodeIndex n) const noexcept { return nodes_[n].index; }
        std::uint64_t hash(NodeIndex n) const noexcept { return nodes_[n].hash; }

        std::uint32_t offspring(NodeIndex n) const
        {
            return spec_.offspring_at(nodes_[n].depth, nodes_[n].explicit_index);
        }

        /// False at the depth cap: the vertex exists but its offspring may not be materialized.
        bool expandable(NodeIndex n) const noexcept
        {
            return !spec_.depth_cap() || nodes_[n].depth < *spec_.depth_cap();
        }

        std::uint64_t child_hash(NodeIndex n, std::uint32_t i) const noexcept
        {
            return child_path_hash(nodes_[n].hash, i);
        }

        std::optional<NodeIndex> find_child(NodeIndex n, std::uint32_t i) const
        {
            auto it = lookup_.find(key(n, i));
            if (it == lookup_.end())
            {
                return std::nullopt;
            }
            return it->second;
        }

        NodeIndex child(NodeIndex n, std::uint32_t i)
        {
            if (auto found = find_child(n, i))
            {
                return *found;
            }
            if (!expandable(n))
            {
                throw DepthCapExceeded("offspring of a vertex at the depth cap requested");
            }
            if (i >= offspring(n))
            {
                throw InvalidVertex("child index out of range");
            }
            const Node &p = nodes_[n];
            Node c{n, i, p.depth + 1, spec_.explicit_child(p.explicit_index, i), child_path_hash(p.hash, i)};
            auto id = static_cast<NodeIndex>(nodes_.size());
            nodes_.push_back(c);
            lookup_.emplace(key(n, i), id);
            return id;
        }

        NodeIndex intern(const VertexId &v)
        {
            if (!spec_.contains(v))
            {
                throw InvalidVertex("vertex " + format_path(v) + " is not in the tree");
            }
            NodeIndex n = root();
            for (auto i : v.path)
            {
                if (auto found = find_child(n, i))
                {
                    n = *found;
                    continue;
                }
                const Node &p = nodes_[n];
                Node c{n, i, p.depth + 1, spec_.explicit_child(p.explicit_index, i), child_path_hash(p.hash, i)};
                auto id = static_cast<NodeIndex>(nodes_.size());
                nodes_.push_back(c);
                lookup_.emplace(key(n, i), id);
                n = id;
            }
            return n;
        }

        std::optional<NodeIndex> find(const VertexId &v) const
        {
            NodeIndex n = root();
            for (auto i : v.path)
            {
                auto c = find_child(n, i);
                if (!c)
                {
                    return std::nullopt;
                }
                n = *c;
            }
            return n;
        }

        VertexId vertex(NodeIndex n) const
        {
            VertexId v;
            v.path.resize(nodes_[n].depth);
            for (auto k = v.path.size(); k-- > 0; n = nodes_[n].parent)
            {
                v.path[k] = nodes_[n].index;
            }
            return v;
        }

        std::string name(NodeIndex n) const { return spec_.name(vertex(n)); }

        NodeIndex ancestor_at_depth(NodeIndex n, std::uint32_t depth) const noexcept
        {
            while (nodes_[n].depth > depth)
            {
                n = nodes_[n].parent;
            }
            return n;
        }

        /// x lies in the descendent tree of a (x == a included).
        bool is_descendent(NodeIndex x, NodeIndex a) const noexcept
        {
            return nodes_[x].depth >= nodes_[a].depth && ancestor_at_depth(x, nodes_[a].depth) == a;
        }

        std::uint32_t distance(NodeIndex a, NodeIndex b) const noexcept
        {
            std::uint32_t steps = 0;
            while (nodes_[a].depth > nodes_[b].depth)
            {
                a = nodes_[a].parent;
                ++steps;
            }
            while (nodes_[b].depth > nodes_[a].depth)
            {
                b = nodes_[b].parent;
                ++steps;
            }
            while (a != b)
            {
                a = nodes_[a].parent;
                b = nodes_[b].parent;
                steps += 2;
            }
            return steps;
        }

    private:
        struct Node
        {
            NodeIndex parent;
            std::uint32_t index;
            std::uint32_t depth;
            std::uint32_t explicit_index;
            std::uint64_t hash;
        };

        static std::uint64_t key(NodeIndex n, std::uint32_t i) noexcept
        {
            return (static_cast<std::uint64_t>(n) << 32) | i;
        }

        TreeSpec spec_;
        std::vector<Node> nodes_;
        std::unordered_map<std::uint64_t, NodeIndex> lookup_;
    };
}
