#include <stirring/tree.hpp>

#include <gtest/gtest.h>

#include <set>

using namespace stirring;

TEST(Tree, PathFormattingRoundTrips)
{
    VertexId v{{0, 3, 1}};
    EXPECT_EQ(format_path(v), "phi.0.3.1");
    EXPECT_EQ(try_parse_path("phi.0.3.1"), v);
    EXPECT_EQ(try_parse_path("0.3.1"), v);
    EXPECT_EQ(try_parse_path("root.0.3.1"), v);
    EXPECT_EQ(try_parse_path("phi"), VertexId::root());
    EXPECT_FALSE(try_parse_path("phi.x").has_value());
    EXPECT_FALSE(try_parse_path("phi.1.").has_value());
}

TEST(Tree, ChildrenOfRegularTree)
{
    auto tree = TreeSpec::regular(3, 5);
    auto kids = children(tree, VertexId::root());
    ASSERT_EQ(kids.size(), 3u);
    EXPECT_EQ(kids[2], VertexId{{2}});
    EXPECT_EQ(children(tree, VertexId{{1, 1}}).size(), 3u);
}

TEST(Tree, DegreeTreeRootConventions)
{
    EXPECT_EQ(TreeSpec::angel(40, 3).offspring_count(VertexId::root()), 40u);
    EXPECT_EQ(TreeSpec::angel(40, 3).offspring_count(VertexId{{0}}), 39u);
    EXPECT_EQ(TreeSpec::angel(40, 3, RootConvention::SameOffspring).offspring_count(VertexId::root()), 39u);
}

TEST(Tree, DepthCapIsEnforced)
{
    auto tree = TreeSpec::regular(2, 2);
    EXPECT_THROW(children(tree, VertexId{{0, 1}}), DepthCapExceeded);
    EXPECT_THROW(TreeSpec::regular(2, 0), InvalidTree);
}

TEST(Tree, FigureOneTreeHasSevenVertices)
{
    auto tree = TreeSpec::figure1();
    auto all = tree.enumerate();
    ASSERT_EQ(all.size(), 7u);
    EXPECT_TRUE(std::is_sorted(all.begin(), all.end()));
    EXPECT_EQ(tree.name(VertexId{{0}}), "v");
    EXPECT_EQ(tree.name(VertexId{{1, 1}}), std::string("w1"));
    EXPECT_EQ(tree.parse_vertex("w"), VertexId{{1}});
    EXPECT_EQ(tree.parse_vertex("phi.1.0"), (VertexId{{1, 0}}));
    EXPECT_EQ(tree.describe(), "fig1");
}

TEST(Tree, TruncatedTreeSize)
{
    auto tree = TreeSpec::truncated_regular(3, 4);
    EXPECT_EQ(tree.enumerate().size(), 1u + 3 + 9 + 27 + 81);
    EXPECT_EQ(tree.offspring_count(VertexId{{2, 2, 2, 2}}), 0u);
    EXPECT_FALSE(tree.contains(VertexId{{0, 0, 0, 0, 0}}));
}

TEST(Tree, ExplicitSpecRejectsBrokenInput)
{
    EXPECT_THROW(TreeSpec::explicit_finite({{1}, {0}}), InvalidTree);
    EXPECT_THROW(TreeSpec::explicit_finite({{1}, {}, {}}), InvalidTree);
    EXPECT_THROW(TreeSpec::from_offspring_counts({3, 0}), InvalidTree);
}

TEST(Tree, ParseTreeSpecForms)
{
    EXPECT_EQ(parse_tree_spec("regular:39", 10).describe(), "regular:39");
    EXPECT_EQ(parse_tree_spec("angel:40:same-root", 10).describe(), "angel:40:same-root");
    EXPECT_EQ(parse_tree_spec("truncated:2:3", std::nullopt).enumerate().size(), 15u);
    EXPECT_EQ(parse_tree_spec("explicit:2,0,1,0", std::nullopt).enumerate().size(), 4u);
    auto round = parse_tree_spec(TreeSpec::truncated_regular(2, 2).describe(), std::nullopt);
    EXPECT_EQ(round.enumerate().size(), 7u);
    EXPECT_THROW(parse_tree_spec("cactus:3", 10), ParseError);
}

TEST(Tree, DistanceAndDescendents)
{
    VertexId a{{0, 1, 2}}, b{{0, 2}};
    EXPECT_EQ(graph_distance(a, b), 3u);
    EXPECT_EQ(graph_distance(a, a), 0u);
    EXPECT_TRUE(is_descendent(a, VertexId{{0}}));
    EXPECT_FALSE(is_descendent(VertexId{{0}}, a));
    EXPECT_EQ(meet(a, b), VertexId{{0}});
}

TEST(LazyTree, MatchesPathArithmetic)
{
    LazyTree lazy(TreeSpec::regular(4, 50));
    std::vector<VertexId> vs{{{0, 1, 2}}, {{0, 2}}, {{3}}, {{0, 1, 2, 3, 0}}, {}};
    for (const auto &v : vs)
    {
        auto n = lazy.intern(v);
        EXPECT_EQ(lazy.vertex(n), v);
        EXPECT_EQ(lazy.hash(n), path_hash(v));
        EXPECT_EQ(lazy.depth(n), v.depth());
    }
    for (const auto &v : vs)
    {
        for (const auto &w : vs)
        {
            auto n = *lazy.find(v), m = *lazy.find(w);
            EXPECT_EQ(lazy.distance(n, m), graph_distance(v, w));
            EXPECT_EQ(lazy.is_descendent(n, m), is_descendent(v, w));
        }
    }
}

TEST(LazyTree, HashesOfDistinctPathsDiffer)
{
    std::set<std::uint64_t> seen;
    LazyTree lazy(TreeSpec::regular(6, 5));
    std::vector<NodeIndex> frontier{LazyTree::root()};
    seen.insert(lazy.hash(LazyTree::root()));
    for (int depth = 0; depth < 4; ++depth)
    {
        std::vector<NodeIndex> next;
        for (auto n : frontier)
        {
            for (std::uint32_t i = 0; i < 6; ++i)
            {
                auto c = lazy.child(n, i);
                EXPECT_TRUE(seen.insert(lazy.hash(c)).second);
                next.push_back(c);
            }
        }
        frontier = std::move(next);
    }
    EXPECT_EQ(seen.size(), 1u + 6 + 36 + 216 + 1296);
}

TEST(LazyTree, ChildAtCapThrows)
{
    LazyTree lazy(TreeSpec::regular(2, 1));
    auto c = lazy.child(LazyTree::root(), 1);
    EXPECT_FALSE(lazy.expandable(c));
    EXPECT_THROW(lazy.child(c, 0), DepthCapExceeded);
}
