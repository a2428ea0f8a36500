#ifndef VPFLOW_MESH_HPP
#define VPFLOW_MESH_HPP

#include <Eigen/Core>

#include <array>
#include <cstddef>
#include <functional>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace vpflow {

using Vec2 = Eigen::Vector2d;

enum class BoundaryTag { Inflow, Outflow, Wall, Lid };

std::string_view to_string(BoundaryTag tag);

struct BoundaryEdge {
    std::array<int, 2> vertices;
    BoundaryTag tag = BoundaryTag::Wall;
};

/// Conforming triangulation of a polygonal domain. Triangles are stored
/// counter-clockwise; boundary edges carry exactly one tag.
struct Mesh {
    std::vector<Vec2> vertices;
    std::vector<std::array<int, 3>> triangles;
    std::vector<BoundaryEdge> boundary_edges;
    double h_max = 0.0;

    std::size_t num_vertices() const { return vertices.size(); }
    std::size_t num_triangles() const { return triangles.size(); }
};

/// Structured nx-by-ny grid over [origin, origin + extent]; every cell is
/// split along its lower-left to upper-right diagonal. All boundary edges
/// are tagged Wall.
Mesh build_rectangle(const Vec2& origin, const Vec2& extent, int nx, int ny);

/// Full expansion-contraction channel: inflow and outflow sections of
/// half-width 1 and length `l_hat`, a central cavity of half-width `h` and
/// length 1/`delta`, symmetric about y = 0 and centred at x = 0.
/// `cells_per_unit` must place grid lines on every geometric interface.
Mesh build_channel(double l_hat, double delta, double h, int cells_per_unit);

/// Spacing of a graded channel grid: `fine` at the cavity end walls, the
/// re-entrant corners and throughout the recesses, growing linearly with
/// the distance by `growth - 1` per unit length up to `coarse`.
struct ChannelGrading {
    double coarse = 0.1;
    double fine = 0.01;
    double growth = 1.2;
};

/// Same domain and tags as build_channel on a graded tensor grid.
Mesh build_channel_graded(double l_hat, double delta, double h, const ChannelGrading& grading);

/// Red refinement: each triangle is split into four through its edge
/// midpoints. Boundary tags are inherited.
Mesh refine_uniform(const Mesh& mesh);

Mesh refine_uniform(const Mesh& mesh, int times);

/// Retags every boundary edge whose midpoint satisfies `where`.
void retag_boundary(Mesh& mesh, const std::function<bool(const Vec2&)>& where, BoundaryTag tag);

double triangle_signed_area(const Mesh& mesh, std::size_t tri);
double triangle_diameter(const Mesh& mesh, std::size_t tri);
double total_area(const Mesh& mesh);
std::size_t count_edges(const Mesh& mesh);

/// Tag owning each vertex, or nullopt for interior vertices. A vertex shared
/// by differently tagged edges takes the tag with the highest priority:
/// Wall, then Inflow/Outflow, then Lid.
std::vector<std::optional<BoundaryTag>> vertex_boundary_tags(const Mesh& mesh);

/// Returns a description of every violated mesh invariant (empty if valid).
/// `holes` is the number of holes of the domain for the Euler relation.
std::vector<std::string> check_mesh(const Mesh& mesh, int holes = 0);

} // namespace vpflow

#endif // VPFLOW_MESH_HPP
