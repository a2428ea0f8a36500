#include "vpflow/spaces.hpp"

#include <stdexcept>
#include <string>

namespace vpflow {

ElementData p1_element_data(const Mesh& mesh, std::size_t tri)
{
    if (tri >= mesh.num_triangles()) {
        throw std::out_of_range("p1_element_data: triangle index out of range");
    }
    const auto& t = mesh.triangles[tri];
    const Vec2& x0 = mesh.vertices[t[0]];
    const Vec2& x1 = mesh.vertices[t[1]];
    const Vec2& x2 = mesh.vertices[t[2]];
    const double two_area = (x1.x() - x0.x()) * (x2.y() - x0.y()) - (x2.x() - x0.x()) * (x1.y() - x0.y());
    if (!(two_area > 0.0)) {
        throw std::invalid_argument("p1_element_data: degenerate triangle " + std::to_string(tri));
    }
    ElementData e;
    e.area = 0.5 * two_area;
    e.grad[0] = Vec2(x1.y() - x2.y(), x2.x() - x1.x()) / two_area;
    e.grad[1] = Vec2(x2.y() - x0.y(), x0.x() - x2.x()) / two_area;
    e.grad[2] = Vec2(x0.y() - x1.y(), x1.x() - x0.x()) / two_area;
    return e;
}

std::vector<ElementData> all_element_data(const Mesh& mesh)
{
    std::vector<ElementData> data(mesh.num_triangles());
    for (std::size_t t = 0; t < data.size(); ++t) {
        data[t] = p1_element_data(mesh, t);
    }
    return data;
}

Eigen::Matrix2d velocity_gradient(const State& state, std::size_t tri, const ElementData& element)
{
    const auto& t = state.mesh->triangles[tri];
    Eigen::Matrix2d g = Eigen::Matrix2d::Zero();
    for (int a = 0; a < 3; ++a) {
        g += state.velocity(t[a]) * element.grad[a].transpose();
    }
    return g;
}

SymTensor2 sym_gradient(const State& state, std::size_t tri, const ElementData& element)
{
    const Eigen::Matrix2d g = velocity_gradient(state, tri, element);
    return {g(0, 0), g(1, 1), 0.5 * (g(0, 1) + g(1, 0))};
}

SymTensor2 sym_gradient(const State& state, std::size_t tri)
{
    return sym_gradient(state, tri, p1_element_data(*state.mesh, tri));
}

Eigen::VectorXd interpolate_velocity(const Mesh& mesh, const std::function<Vec2(const Vec2&)>& f)
{
    Eigen::VectorXd out(2 * mesh.num_vertices());
    for (std::size_t v = 0; v < mesh.num_vertices(); ++v) {
        const Vec2 value = f(mesh.vertices[v]);
        out[2 * v] = value.x();
        out[2 * v + 1] = value.y();
    }
    return out;
}

Eigen::VectorXd interpolate_scalar(const Mesh& mesh, const std::function<double(const Vec2&)>& f)
{
    Eigen::VectorXd out(mesh.num_vertices());
    for (std::size_t v = 0; v < mesh.num_vertices(); ++v) {
        out[v] = f(mesh.vertices[v]);
    }
    return out;
}

std::span<const QuadraturePoint> centroid_rule()
{
    static const QuadraturePoint rule[] = {{{1.0 / 3.0, 1.0 / 3.0, 1.0 / 3.0}, 1.0}};
    return rule;
}

std::span<const QuadraturePoint> midpoint_rule()
{
    static const QuadraturePoint rule[] = {
        {{0.5, 0.5, 0.0}, 1.0 / 3.0},
        {{0.0, 0.5, 0.5}, 1.0 / 3.0},
        {{0.5, 0.0, 0.5}, 1.0 / 3.0},
    };
    return rule;
}

std::span<const QuadraturePoint> degree4_rule()
{
    constexpr double a1 = 0.445948490915965, b1 = 1.0 - 2.0 * a1, w1 = 0.223381589678011;
    constexpr double a2 = 0.091576213509771, b2 = 1.0 - 2.0 * a2, w2 = 0.109951743655322;
    static const QuadraturePoint rule[] = {
        {{a1, a1, b1}, w1}, {{a1, b1, a1}, w1}, {{b1, a1, a1}, w1},
        {{a2, a2, b2}, w2}, {{a2, b2, a2}, w2}, {{b2, a2, a2}, w2},
    };
    return rule;
}

Vec2 map_to_element(const Mesh& mesh, std::size_t tri, const std::array<double, 3>& bary)
{
    const auto& t = mesh.triangles[tri];
    return bary[0] * mesh.vertices[t[0]] + bary[1] * mesh.vertices[t[1]] + bary[2] * mesh.vertices[t[2]];
}

} // namespace vpflow
