#include "vpflow/postprocess.hpp"

#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <memory>
#include <numbers>
#include <sstream>

using namespace vpflow;

namespace {

std::shared_ptr<const Mesh> square(int n)
{
    return std::make_shared<const Mesh>(build_rectangle({0, 0}, {1, 1}, n, n));
}

std::shared_ptr<const Mesh> two_triangles()
{
    auto m = std::make_shared<Mesh>();
    m->vertices = {Vec2(0, 0), Vec2(1, 0), Vec2(1, 1), Vec2(0, 1)};
    m->triangles = {{0, 1, 2}, {0, 2, 3}};
    m->boundary_edges = {{{0, 1}, BoundaryTag::Wall},
                         {{1, 2}, BoundaryTag::Wall},
                         {{2, 3}, BoundaryTag::Lid},
                         {{3, 0}, BoundaryTag::Wall}};
    m->h_max = std::sqrt(2.0);
    return m;
}

} // namespace

TEST(Postprocess, VelocityErrorsVanishForAffineFields)
{
    auto mesh = square(4);
    State s(mesh);
    auto u = [](const Vec2& x) { return Vec2(1.0 + x.x() - 2.0 * x.y(), 3.0 * x.y()); };
    s.velocity_block() = interpolate_velocity(*mesh, u);
    EXPECT_LT(error_l2_velocity(s, u), 1e-14);
    Eigen::Matrix2d g;
    g << 1.0, -2.0, 0.0, 3.0;
    EXPECT_LT(error_h1_velocity(s, [&](const Vec2&) { return g; }), 1e-13);
}

TEST(Postprocess, VelocityErrorsOfZeroField)
{
    auto mesh = square(3);
    const State s(mesh);
    EXPECT_NEAR(error_l2_velocity(s, [](const Vec2&) { return Vec2(1.0, 2.0); }), std::sqrt(5.0), 1e-13);
    // |x|^2 integrated over the unit square is 2/3.
    EXPECT_NEAR(error_l2_velocity(s, [](const Vec2& x) { return x; }), std::sqrt(2.0 / 3.0), 1e-13);
    Eigen::Matrix2d g;
    g << 1.0, 2.0, 0.0, 2.0;
    EXPECT_NEAR(error_h1_velocity(s, [&](const Vec2&) { return g; }), 3.0, 1e-13);
}

TEST(Postprocess, L2ErrorConvergesAtSecondOrder)
{
    auto u = [](const Vec2& x) { return Vec2(std::sin(x.x()) * x.y(), x.x() * x.x()); };
    double previous = 0.0;
    for (int n : {4, 8, 16}) {
        auto mesh = square(n);
        State s(mesh);
        s.velocity_block() = interpolate_velocity(*mesh, u);
        const double e = error_l2_velocity(s, u);
        if (previous > 0.0) {
            EXPECT_NEAR(previous / e, 4.0, 0.3);
        }
        previous = e;
    }
}

TEST(Postprocess, PressureErrorIgnoresConstants)
{
    auto mesh = square(4);
    State s(mesh);
    const Eigen::VectorXd p = interpolate_scalar(*mesh, [](const Vec2& x) { return 5.0 + x.x(); });
    s.coeffs.segment(s.layout.pressure_offset(), s.layout.n_pressure) = p;
    EXPECT_LT(error_l2_pressure(s, [](const Vec2& x) { return x.x() - 7.0; }), 1e-14);
    EXPECT_NEAR(mean_value(*mesh, p), 5.5, 1e-14);
}

TEST(Postprocess, VelocityNormUsesConsistentMass)
{
    auto mesh = square(5);
    Eigen::VectorXd u = interpolate_velocity(*mesh, [](const Vec2&) { return Vec2(1.0, 2.0); });
    EXPECT_NEAR(l2_norm_velocity(*mesh, u), std::sqrt(5.0), 1e-13);
    u = interpolate_velocity(*mesh, [](const Vec2& x) { return Vec2(x.x(), 0.0); });
    EXPECT_NEAR(l2_norm_velocity(*mesh, u), std::sqrt(1.0 / 3.0), 1e-13);
}

TEST(Postprocess, CellFieldsAndPlugMask)
{
    auto mesh = square(2);
    State s(mesh);
    // Only the centre vertex moves, so corner cells away from it stay rigid.
    s.set_velocity(4, Vec2(0.1, 0.0));
    for (std::size_t t = 0; t < mesh->num_triangles(); ++t) {
        s.set_stress(t, SymTensor2{3.0, 4.0, 0.0});
    }
    const auto d = strain_rate_norms(s);
    const auto n = stress_norms(s);
    const auto mask = plug_mask(s, 1e-3);
    for (std::size_t t = 0; t < mesh->num_triangles(); ++t) {
        EXPECT_DOUBLE_EQ(n[t], 5.0);
        EXPECT_EQ(mask[t] != 0, d[t] < 1e-3);
    }
    EXPECT_GT(std::count(mask.begin(), mask.end(), 1), 0);
    EXPECT_LT(std::count(mask.begin(), mask.end(), 1), static_cast<long>(mesh->num_triangles()));
    const auto none = plug_mask(s, 0.0);
    EXPECT_EQ(std::count(none.begin(), none.end(), 1), 0);
    EXPECT_THROW(plug_mask(s, -1.0), std::invalid_argument);
}

TEST(Postprocess, CellToVertexPreservesConstants)
{
    auto mesh = square(3);
    const Eigen::VectorXd v = cell_to_vertex(*mesh, std::vector<double>(mesh->num_triangles(), 2.5));
    EXPECT_LT((v.array() - 2.5).abs().maxCoeff(), 1e-14);
}

TEST(Postprocess, StreamFunctionRecoversPotential)
{
    const double pi = std::numbers::pi;
    auto psi = [&](const Vec2& x) { return std::pow(std::sin(pi * x.x()) * std::sin(pi * x.y()), 2); };
    auto u = [&](const Vec2& x) {
        const double sx = std::sin(pi * x.x()), sy = std::sin(pi * x.y());
        const double cx = std::cos(pi * x.x()), cy = std::cos(pi * x.y());
        return Vec2(2.0 * pi * sx * sx * sy * cy, -2.0 * pi * sy * sy * sx * cx);
    };
    double previous = 0.0;
    for (int n : {8, 16, 32}) {
        auto mesh = square(n);
        State s(mesh);
        s.velocity_block() = interpolate_velocity(*mesh, u);
        const Eigen::VectorXd got = stream_function(s);
        const Eigen::VectorXd want = interpolate_scalar(*mesh, psi);
        const double err = (got - want).lpNorm<Eigen::Infinity>();
        if (previous > 0.0) {
            EXPECT_GT(previous / err, 3.0);
        }
        previous = err;
    }
    EXPECT_LT(previous, 1e-2);
}

TEST(Postprocess, VtkGoldenOutput)
{
    FieldSnapshot snap;
    snap.mesh = two_triangles();
    snap.add_point_scalar("p", Eigen::Vector4d(0.0, 0.5, -0.0, 0.125));
    Eigen::VectorXd u(8);
    u << 1, 0, 0.25, -1, 0, 0, 0, 0;
    snap.add_point_vector("velocity", u);
    snap.add_cell_scalar("plug", {1.0, 0.0});
    std::ostringstream out;
    write_vtk(snap, out);
    const std::string golden = R"(# vtk DataFile Version 3.0
vpflow
ASCII
DATASET UNSTRUCTURED_GRID
POINTS 4 double
0 0 0
1 0 0
1 1 0
0 1 0
CELLS 2 8
3 0 1 2
3 0 2 3
CELL_TYPES 2
5
5
POINT_DATA 4
SCALARS p double 1
LOOKUP_TABLE default
0
0.5
0
0.125
VECTORS velocity double
1 0 0
0.25 -1 0
0 0 0
0 0 0
CELL_DATA 2
SCALARS plug double 1
LOOKUP_TABLE default
1
0
)";
    EXPECT_EQ(out.str(), golden);
}

TEST(Postprocess, VtkFileRoundTripAndValidation)
{
    auto mesh = square(2);
    State s(mesh);
    const FieldSnapshot snap = make_snapshot(s);
    const auto path = std::filesystem::temp_directory_path() / "vpflow_snapshot_test.vtk";
    write_vtk(snap, path);
    std::ifstream in(path);
    std::stringstream buffer;
    buffer << in.rdbuf();
    std::ostringstream direct;
    write_vtk(snap, direct);
    EXPECT_EQ(buffer.str(), direct.str());
    for (const char* name : {"velocity", "pressure", "stress_xx", "strain_rate_norm", "plug"}) {
        EXPECT_NE(direct.str().find(name), std::string::npos) << name;
    }
    std::filesystem::remove(path);

    FieldSnapshot bad = snap;
    bad.add_cell_scalar("short", {1.0});
    EXPECT_THROW(validate(bad), std::invalid_argument);
    EXPECT_THROW(write_vtk(snap, std::filesystem::path("/nonexistent/dir/out.vtk")), std::runtime_error);
}

TEST(Postprocess, LineSamplingInterpolatesP1Fields)
{
    auto mesh = square(5);
    FieldSnapshot snap;
    snap.mesh = mesh;
    snap.add_point_scalar("f", interpolate_scalar(*mesh, [](const Vec2& x) { return 2.0 * x.x() + 3.0 * x.y(); }));
    const LineSamples ls = sample_line(snap, Vec2(0.0, 0.1), Vec2(1.0, 0.9), 11);
    ASSERT_EQ(ls.points.size(), 11u);
    ASSERT_EQ(ls.names, std::vector<std::string>{"f"});
    for (std::size_t i = 0; i < ls.points.size(); ++i) {
        EXPECT_NEAR(ls.values[0][i], 2.0 * ls.points[i].x() + 3.0 * ls.points[i].y(), 1e-13);
    }
    EXPECT_THROW(sample_line(snap, Vec2(0.0, 0.5), Vec2(1.5, 0.5), 5), std::out_of_range);
    EXPECT_THROW(sample_line(snap, Vec2(0.0, 0.5), Vec2(1.0, 0.5), 1), std::invalid_argument);

    std::ostringstream out;
    write_csv(ls, out);
    const std::string csv = out.str();
    EXPECT_EQ(csv.substr(0, csv.find('\n')), "x,y,f");
    EXPECT_EQ(std::count(csv.begin(), csv.end(), '\n'), 12);
}

TEST(Postprocess, PointLocatorFindsVertices)
{
    auto mesh = square(4);
    const PointLocator loc(mesh);
    std::size_t tri = 0;
    std::array<double, 3> bary{};
    for (const auto& v : mesh->vertices) {
        ASSERT_TRUE(loc.locate(v, tri, bary));
        EXPECT_LT((map_to_element(*mesh, tri, bary) - v).norm(), 1e-13);
    }
    ASSERT_TRUE(loc.locate(Vec2(0.33, 0.71), tri, bary));
    EXPECT_LT((map_to_element(*mesh, tri, bary) - Vec2(0.33, 0.71)).norm(), 1e-13);
    EXPECT_FALSE(loc.locate(Vec2(-0.1, 0.5), tri, bary));
}
