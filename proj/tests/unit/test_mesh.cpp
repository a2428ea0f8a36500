#include "vpflow/mesh.hpp"

#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <set>

namespace {

using vpflow::BoundaryTag;
using vpflow::Mesh;
using vpflow::Vec2;

Vec2 bbox_min(const Mesh& m)
{
    Vec2 lo = m.vertices.front();
    for (const auto& v : m.vertices) lo = lo.cwiseMin(v);
    return lo;
}

Vec2 bbox_max(const Mesh& m)
{
    Vec2 hi = m.vertices.front();
    for (const auto& v : m.vertices) hi = hi.cwiseMax(v);
    return hi;
}

double boundary_length(const Mesh& m, BoundaryTag tag)
{
    double len = 0.0;
    for (const auto& e : m.boundary_edges) {
        if (e.tag == tag) len += (m.vertices[e.vertices[1]] - m.vertices[e.vertices[0]]).norm();
    }
    return len;
}

TEST(Mesh, SmallestRectangle)
{
    const Mesh m = vpflow::build_rectangle({0.0, 0.0}, {1.0, 1.0}, 1, 1);
    EXPECT_EQ(m.num_vertices(), 4u);
    EXPECT_EQ(m.num_triangles(), 2u);
    EXPECT_EQ(m.boundary_edges.size(), 4u);
    EXPECT_TRUE(vpflow::check_mesh(m).empty());
}

TEST(Mesh, RectangleCountsFollowGridFormula)
{
    const Mesh m = vpflow::build_rectangle({0.0, -1.0}, {4.0, 2.0}, 4, 2);
    EXPECT_EQ(m.num_vertices(), 15u);
    EXPECT_EQ(m.num_triangles(), 16u);
    EXPECT_NEAR(m.h_max, std::sqrt(2.0), 1e-14);
    for (const auto& e : m.boundary_edges) EXPECT_EQ(e.tag, BoundaryTag::Wall);
}

TEST(Mesh, RectangleAreaEqualsExtent)
{
    const Mesh m = vpflow::build_rectangle({0.3, -1.7}, {2.5, 1.25}, 7, 3);
    EXPECT_NEAR(vpflow::total_area(m), 2.5 * 1.25, 1e-12);
}

TEST(Mesh, RectangleRejectsBadInput)
{
    EXPECT_THROW(vpflow::build_rectangle({0, 0}, {1, 1}, 0, 1), std::invalid_argument);
    EXPECT_THROW(vpflow::build_rectangle({0, 0}, {1, 1}, 1, -2), std::invalid_argument);
    EXPECT_THROW(vpflow::build_rectangle({0, 0}, {0, 1}, 1, 1), std::invalid_argument);
    EXPECT_THROW(vpflow::build_rectangle({0, 0}, {1, -1}, 1, 1), std::invalid_argument);
}

TEST(Mesh, ChannelBoundingBoxAndArea)
{
    const Mesh m = vpflow::build_channel(4.0, 0.5, 2.0, 2);
    EXPECT_TRUE(vpflow::check_mesh(m).empty());
    EXPECT_NEAR(vpflow::total_area(m), 24.0, 1e-12);
    EXPECT_TRUE(bbox_min(m).isApprox(Vec2(-5.0, -2.0)));
    EXPECT_TRUE(bbox_max(m).isApprox(Vec2(5.0, 2.0)));
}

TEST(Mesh, ChannelCavityLength)
{
    const Mesh m = vpflow::build_channel(3.0, 0.2, 1.2, 5);
    EXPECT_TRUE(vpflow::check_mesh(m).empty());
    double xmin = 1e9, xmax = -1e9;
    for (const auto& v : m.vertices) {
        if (v.y() > 1.0 + 1e-12) {
            xmin = std::min(xmin, v.x());
            xmax = std::max(xmax, v.x());
        }
    }
    EXPECT_NEAR(xmax - xmin, 5.0, 1e-12);
    EXPECT_NEAR(vpflow::total_area(m), 2 * 2 * 3.0 + 5.0 * 2.4, 1e-12);
}

TEST(Mesh, ChannelTags)
{
    const Mesh m = vpflow::build_channel(3.0, 0.2, 1.2, 5);
    EXPECT_NEAR(boundary_length(m, BoundaryTag::Inflow), 2.0, 1e-12);
    EXPECT_NEAR(boundary_length(m, BoundaryTag::Outflow), 2.0, 1e-12);
    // Walls: two section walls per side, cavity floor/roof and four steps.
    EXPECT_NEAR(boundary_length(m, BoundaryTag::Wall), 4 * 3.0 + 2 * 5.0 + 4 * 0.2, 1e-12);
    for (const auto& e : m.boundary_edges) {
        const Vec2 mid = 0.5 * (m.vertices[e.vertices[0]] + m.vertices[e.vertices[1]]);
        if (e.tag == BoundaryTag::Inflow) {
            EXPECT_NEAR(mid.x(), -5.5, 1e-12);
        }
        if (e.tag == BoundaryTag::Outflow) {
            EXPECT_NEAR(mid.x(), 5.5, 1e-12);
        }
    }
}

TEST(Mesh, ChannelRejectsMisalignedGridAndFlatCavity)
{
    EXPECT_THROW(vpflow::build_channel(3.0, 0.2, 1.2, 3), std::invalid_argument);
    EXPECT_THROW(vpflow::build_channel(3.0, 0.2, 1.0, 10), std::invalid_argument);
    EXPECT_THROW(vpflow::build_channel(3.0, 0.2, 0.8, 10), std::invalid_argument);
}

TEST(Mesh, GradedChannelIsValid)
{
    const Mesh m = vpflow::build_channel_graded(3.0, 0.2, 1.2, {0.2, 0.02, 1.3});
    EXPECT_TRUE(vpflow::check_mesh(m).empty());
    EXPECT_NEAR(vpflow::total_area(m), 24.0, 1e-11);
    EXPECT_NEAR(boundary_length(m, BoundaryTag::Inflow), 2.0, 1e-12);
    // The end wall of the cavity is resolved at the fine spacing; the first
    // cell may exceed it by the growth over one cell.
    double closest = 1e9;
    for (const auto& v : m.vertices) {
        if (v.x() > -2.5 + 1e-12) {
            closest = std::min(closest, v.x() + 2.5);
        }
    }
    EXPECT_LE(closest, 0.02 * 1.3);
}

TEST(Mesh, RefinementSplitsEveryTriangle)
{
    const Mesh base = vpflow::build_rectangle({0, 0}, {1, 1}, 1, 1);
    const Mesh once = vpflow::refine_uniform(base);
    EXPECT_EQ(once.num_triangles(), 8u);
    const Mesh twice = vpflow::refine_uniform(base, 2);
    EXPECT_EQ(twice.num_triangles(), 32u);
    EXPECT_NEAR(twice.h_max, base.h_max / 4.0, 1e-14);
}

TEST(Mesh, RefinementKeepsInvariants)
{
    const Mesh channel = vpflow::build_channel(1.0, 0.5, 1.5, 2);
    for (int depth = 1; depth <= 5; ++depth) {
        const Mesh square = vpflow::refine_uniform(vpflow::build_rectangle({0, 0}, {1, 1}, 1, 1), depth);
        EXPECT_TRUE(vpflow::check_mesh(square).empty()) << "depth " << depth;
        EXPECT_NEAR(vpflow::total_area(square), 1.0, 1e-12);
    }
    for (int depth = 1; depth <= 3; ++depth) {
        const Mesh fine = vpflow::refine_uniform(channel, depth);
        EXPECT_TRUE(vpflow::check_mesh(fine).empty()) << "depth " << depth;
        EXPECT_NEAR(vpflow::total_area(fine), vpflow::total_area(channel), 1e-12 * vpflow::total_area(channel));
        EXPECT_NEAR(boundary_length(fine, BoundaryTag::Inflow), 2.0, 1e-12);
        EXPECT_NEAR(boundary_length(fine, BoundaryTag::Outflow), 2.0, 1e-12);
    }
}

TEST(Mesh, BoundaryTagsPartitionTheBoundary)
{
    vpflow::Mesh m = vpflow::refine_uniform(vpflow::build_rectangle({0, 0}, {1, 1}, 2, 2), 2);
    vpflow::retag_boundary(m, [](const Vec2& x) { return x.y() > 1.0 - 1e-12; }, BoundaryTag::Lid);
    std::set<std::pair<int, int>> seen;
    double total = 0.0;
    for (const auto& e : m.boundary_edges) {
        const auto key = std::minmax(e.vertices[0], e.vertices[1]);
        EXPECT_TRUE(seen.insert(key).second);
        total += (m.vertices[e.vertices[1]] - m.vertices[e.vertices[0]]).norm();
    }
    EXPECT_NEAR(total, 4.0, 1e-12);
    EXPECT_NEAR(boundary_length(m, BoundaryTag::Lid), 1.0, 1e-12);
}

TEST(Mesh, VertexTagsPreferWalls)
{
    vpflow::Mesh m = vpflow::build_rectangle({0, 0}, {1, 1}, 2, 2);
    vpflow::retag_boundary(m, [](const Vec2& x) { return x.y() > 1.0 - 1e-12; }, BoundaryTag::Lid);
    const auto tags = vpflow::vertex_boundary_tags(m);
    for (std::size_t v = 0; v < m.num_vertices(); ++v) {
        const Vec2& x = m.vertices[v];
        if (x.y() == 1.0 && x.x() > 0.0 && x.x() < 1.0) {
            EXPECT_EQ(tags[v], BoundaryTag::Lid);
        } else if (x.y() == 1.0) {
            EXPECT_EQ(tags[v], BoundaryTag::Wall);
        } else if (x.x() == 0.5 && x.y() == 0.5) {
            EXPECT_FALSE(tags[v].has_value());
        }
    }
}

TEST(Mesh, CheckMeshReportsInvertedTriangle)
{
    vpflow::Mesh m = vpflow::build_rectangle({0, 0}, {1, 1}, 1, 1);
    std::swap(m.triangles[0][1], m.triangles[0][2]);
    EXPECT_FALSE(vpflow::check_mesh(m).empty());
}

TEST(Mesh, EulerRelationWithHoles)
{
    const Mesh m = vpflow::build_rectangle({0, 0}, {1, 1}, 3, 3);
    EXPECT_TRUE(vpflow::check_mesh(m, 0).empty());
    EXPECT_FALSE(vpflow::check_mesh(m, 1).empty());
}

} // namespace
