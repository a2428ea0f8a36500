#ifndef VPFLOW_POSTPROCESS_HPP
#define VPFLOW_POSTPROCESS_HPP

#include "vpflow/mesh.hpp"
#include "vpflow/spaces.hpp"

#include <Eigen/Core>

#include <array>

#include <filesystem>
#include <functional>
#include <iosfwd>
#include <memory>
#include <string>
#include <vector>

namespace vpflow {

using VectorField = std::function<Vec2(const Vec2&)>;
using ScalarField = std::function<double(const Vec2&)>;
using GradientField = std::function<Eigen::Matrix2d(const Vec2&)>;

/// ||u_h - u||_{L2}, integrated with the degree-4 rule.
double error_l2_velocity(const State& state, const VectorField& exact);

/// |u_h - u|_{H1}; `exact_gradient` has rows = velocity components.
double error_h1_velocity(const State& state, const GradientField& exact_gradient);

/// L2 pressure error after removing the mean of both fields.
double error_l2_pressure(const State& state, const ScalarField& exact);

/// Integral mean of a P1 field.
double mean_value(const Mesh& mesh, const Eigen::VectorXd& nodal);

/// sqrt(d^T M d) for a velocity-block difference d, M the P1 mass matrix.
double l2_norm_velocity(const Mesh& mesh, const Eigen::VectorXd& velocity_block);

/// Per-cell |D(u_h)|.
std::vector<double> strain_rate_norms(const State& state);

/// Per-cell |S_h|.
std::vector<double> stress_norms(const State& state);

/// Area-weighted vertex average of a cell field.
Eigen::VectorXd cell_to_vertex(const Mesh& mesh, const std::vector<double>& cell_values);

/// Cells with |D(u_h)| < threshold. Throws on a negative threshold.
std::vector<char> plug_mask(const State& state, double threshold);

/// P1 stream function: int grad psi . grad phi = int omega phi with the
/// elementwise vorticity omega and psi = 0 on the boundary.
Eigen::VectorXd stream_function(const State& state);

struct NamedField {
    std::string name;
    /// One entry per vertex or cell; vector fields store 3 components per entry.
    std::vector<double> values;
    int components = 1;
};

/// Fields attached to one mesh for file output.
struct FieldSnapshot {
    std::shared_ptr<const Mesh> mesh;
    std::vector<NamedField> point_fields;
    std::vector<NamedField> cell_fields;

    void add_point_scalar(std::string name, const Eigen::VectorXd& values);
    void add_point_vector(std::string name, const Eigen::VectorXd& velocity_block);
    void add_cell_scalar(std::string name, std::vector<double> values);
};

/// Throws std::invalid_argument if a field length does not match the mesh.
void validate(const FieldSnapshot& snapshot);

/// Velocity, pressure, stress components, |D(u)|, |S| and the plug mask for
/// `plug_threshold`.
FieldSnapshot make_snapshot(const State& state, double plug_threshold = 1e-3);

/// Legacy ASCII VTK unstructured grid with 17 significant digits.
void write_vtk(const FieldSnapshot& snapshot, std::ostream& out);
void write_vtk(const FieldSnapshot& snapshot, const std::filesystem::path& path);

/// Nodal scalar fields sampled by P1 interpolation along a segment.
struct LineSamples {
    std::vector<Vec2> points;
    std::vector<std::string> names;
    /// values[f][i]: field f at point i.
    std::vector<std::vector<double>> values;
};

/// `n` >= 2 evenly spaced samples from `start` to `end` of every scalar
/// point field. Throws std::out_of_range naming the first point outside the mesh.
LineSamples sample_line(const FieldSnapshot& snapshot, const Vec2& start, const Vec2& end, int n);

/// CSV with header "x,y,<field names>".
void write_csv(const LineSamples& samples, std::ostream& out);

/// Locates the triangle containing `x` and its barycentric coordinates.
class PointLocator {
public:
    explicit PointLocator(std::shared_ptr<const Mesh> mesh);

    /// Returns false if `x` lies outside every triangle.
    bool locate(const Vec2& x, std::size_t& tri, std::array<double, 3>& bary) const;

private:
    std::shared_ptr<const Mesh> mesh_;
    Vec2 lo_;
    Vec2 cell_;
    int nx_ = 1;
    int ny_ = 1;
    std::vector<std::vector<std::size_t>> bins_;
};

} // namespace vpflow

#endif // VPFLOW_POSTPROCESS_HPP
