#ifndef VPFLOW_SPACES_HPP
#define VPFLOW_SPACES_HPP

#include "vpflow/mesh.hpp"
#include "vpflow/tensor.hpp"

#include <Eigen/Core>

#include <array>
#include <cstddef>
#include <functional>
#include <memory>
#include <span>
#include <vector>

namespace vpflow {

/// Global unknown ordering [S | u | p | lambda]: three stress components per
/// triangle (P0, discontinuous), two velocity components per vertex (P1,
/// interleaved), one pressure per vertex (P1) and the mean-zero multiplier.
struct DofLayout {
    std::size_t n_stress = 0;
    std::size_t n_velocity = 0;
    std::size_t n_pressure = 0;
    std::size_t n_multiplier = 1;

    explicit DofLayout(const Mesh& mesh)
        : n_stress(3 * mesh.num_triangles()),
          n_velocity(2 * mesh.num_vertices()),
          n_pressure(mesh.num_vertices())
    {
    }

    std::size_t stress_offset() const { return 0; }
    std::size_t velocity_offset() const { return n_stress; }
    std::size_t pressure_offset() const { return n_stress + n_velocity; }
    std::size_t multiplier_offset() const { return n_stress + n_velocity + n_pressure; }
    std::size_t total() const { return n_stress + n_velocity + n_pressure + n_multiplier; }

    std::size_t stress(std::size_t tri, int component) const { return 3 * tri + component; }
    std::size_t velocity(std::size_t vertex, int component) const
    {
        return n_stress + 2 * vertex + component;
    }
    std::size_t pressure(std::size_t vertex) const { return pressure_offset() + vertex; }
    std::size_t multiplier() const { return multiplier_offset(); }

    friend bool operator==(const DofLayout&, const DofLayout&) = default;
};

/// Coefficients of a discrete (S, u, p, lambda) on a shared mesh.
struct State {
    std::shared_ptr<const Mesh> mesh;
    DofLayout layout;
    Eigen::VectorXd coeffs;

    explicit State(std::shared_ptr<const Mesh> m)
        : mesh(std::move(m)), layout(*mesh), coeffs(Eigen::VectorXd::Zero(layout.total()))
    {
    }

    SymTensor2 stress(std::size_t tri) const
    {
        const auto o = layout.stress(tri, 0);
        return {coeffs[o], coeffs[o + 1], coeffs[o + 2]};
    }
    void set_stress(std::size_t tri, const SymTensor2& s)
    {
        const auto o = layout.stress(tri, 0);
        coeffs[o] = s.xx;
        coeffs[o + 1] = s.yy;
        coeffs[o + 2] = s.xy;
    }
    Vec2 velocity(std::size_t vertex) const
    {
        return {coeffs[layout.velocity(vertex, 0)], coeffs[layout.velocity(vertex, 1)]};
    }
    void set_velocity(std::size_t vertex, const Vec2& v)
    {
        coeffs[layout.velocity(vertex, 0)] = v.x();
        coeffs[layout.velocity(vertex, 1)] = v.y();
    }
    double pressure(std::size_t vertex) const { return coeffs[layout.pressure(vertex)]; }
    double multiplier() const { return coeffs[layout.multiplier()]; }

    auto velocity_block() { return coeffs.segment(layout.velocity_offset(), layout.n_velocity); }
    auto velocity_block() const { return coeffs.segment(layout.velocity_offset(), layout.n_velocity); }
    auto pressure_block() const { return coeffs.segment(layout.pressure_offset(), layout.n_pressure); }
};

/// Area and constant gradients of the three barycentric basis functions.
struct ElementData {
    double area = 0.0;
    std::array<Vec2, 3> grad;
};

ElementData p1_element_data(const Mesh& mesh, std::size_t tri);

std::vector<ElementData> all_element_data(const Mesh& mesh);

/// Symmetric gradient of the P1 velocity, constant on the triangle.
SymTensor2 sym_gradient(const State& state, std::size_t tri);
SymTensor2 sym_gradient(const State& state, std::size_t tri, const ElementData& element);

/// Gradient of the P1 velocity on a triangle, rows = components.
Eigen::Matrix2d velocity_gradient(const State& state, std::size_t tri, const ElementData& element);

/// Vertex samples of `f` in the velocity block ordering.
Eigen::VectorXd interpolate_velocity(const Mesh& mesh, const std::function<Vec2(const Vec2&)>& f);

/// Vertex samples of a scalar function.
Eigen::VectorXd interpolate_scalar(const Mesh& mesh, const std::function<double(const Vec2&)>& f);

/// Barycentric quadrature on the reference simplex; weights sum to 1 and are
/// scaled by the element area.
struct QuadraturePoint {
    std::array<double, 3> bary;
    double weight;
};

std::span<const QuadraturePoint> centroid_rule();
/// Edge-midpoint rule, exact for quadratics.
std::span<const QuadraturePoint> midpoint_rule();
/// Six-point rule, exact for polynomials of degree 4.
std::span<const QuadraturePoint> degree4_rule();

Vec2 map_to_element(const Mesh& mesh, std::size_t tri, const std::array<double, 3>& bary);

} // namespace vpflow

#endif // VPFLOW_SPACES_HPP
