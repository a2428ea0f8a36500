#include "vpflow/postprocess.hpp"

#include <Eigen/SparseCholesky>
#include <Eigen/SparseCore>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <locale>
#include <ostream>
#include <stdexcept>
#include <string>

namespace vpflow {

namespace {

double interpolate(const Eigen::VectorXd& nodal, const std::array<int, 3>& tri, const std::array<double, 3>& bary)
{
    return bary[0] * nodal[tri[0]] + bary[1] * nodal[tri[1]] + bary[2] * nodal[tri[2]];
}

Vec2 interpolate_velocity_at(const State& state, std::size_t k, const std::array<double, 3>& bary)
{
    const auto& tri = state.mesh->triangles[k];
    return bary[0] * state.velocity(tri[0]) + bary[1] * state.velocity(tri[1]) + bary[2] * state.velocity(tri[2]);
}

// Integral of `integrand(k, bary, x)` over the mesh with the degree-4 rule.
template <class F>
double integrate(const Mesh& mesh, F&& integrand)
{
    double total = 0.0;
    for (std::size_t k = 0; k < mesh.num_triangles(); ++k) {
        const double area = triangle_signed_area(mesh, k);
        double local = 0.0;
        for (const auto& q : degree4_rule()) {
            local += q.weight * integrand(k, q.bary, map_to_element(mesh, k, q.bary));
        }
        total += area * local;
    }
    return total;
}

void write_number(std::ostream& out, double v)
{
    // -0 and 0 print identically so golden output does not depend on signed zeros.
    out << (v == 0.0 ? 0.0 : v);
}

} // namespace

double error_l2_velocity(const State& state, const VectorField& exact)
{
    const double sq = integrate(*state.mesh, [&](std::size_t k, const std::array<double, 3>& bary, const Vec2& x) {
        return (interpolate_velocity_at(state, k, bary) - exact(x)).squaredNorm();
    });
    return std::sqrt(std::max(sq, 0.0));
}

double error_h1_velocity(const State& state, const GradientField& exact_gradient)
{
    const auto elements = all_element_data(*state.mesh);
    const double sq = integrate(*state.mesh, [&](std::size_t k, const std::array<double, 3>&, const Vec2& x) {
        return (velocity_gradient(state, k, elements[k]) - exact_gradient(x)).squaredNorm();
    });
    return std::sqrt(std::max(sq, 0.0));
}

double mean_value(const Mesh& mesh, const Eigen::VectorXd& nodal)
{
    double integral = 0.0;
    double area = 0.0;
    for (std::size_t k = 0; k < mesh.num_triangles(); ++k) {
        const auto& t = mesh.triangles[k];
        const double a = triangle_signed_area(mesh, k);
        integral += a * (nodal[t[0]] + nodal[t[1]] + nodal[t[2]]) / 3.0;
        area += a;
    }
    return integral / area;
}

double error_l2_pressure(const State& state, const ScalarField& exact)
{
    const Mesh& mesh = *state.mesh;
    const Eigen::VectorXd p = state.pressure_block();
    const double mean_h = mean_value(mesh, p);
    const double mean_e =
        integrate(mesh, [&](std::size_t, const std::array<double, 3>&, const Vec2& x) { return exact(x); }) /
        total_area(mesh);
    const double sq = integrate(mesh, [&](std::size_t k, const std::array<double, 3>& bary, const Vec2& x) {
        const double d = (interpolate(p, mesh.triangles[k], bary) - mean_h) - (exact(x) - mean_e);
        return d * d;
    });
    return std::sqrt(std::max(sq, 0.0));
}

double l2_norm_velocity(const Mesh& mesh, const Eigen::VectorXd& velocity_block)
{
    if (velocity_block.size() != static_cast<Eigen::Index>(2 * mesh.num_vertices())) {
        throw std::invalid_argument("l2_norm_velocity: size does not match the mesh");
    }
    double sq = 0.0;
    for (std::size_t k = 0; k < mesh.num_triangles(); ++k) {
        const auto& t = mesh.triangles[k];
        const double area = triangle_signed_area(mesh, k);
        for (int c = 0; c < 2; ++c) {
            const double a = velocity_block[2 * t[0] + c];
            const double b = velocity_block[2 * t[1] + c];
            const double d = velocity_block[2 * t[2] + c];
            sq += area / 6.0 * (a * a + b * b + d * d + a * b + b * d + a * d);
        }
    }
    return std::sqrt(std::max(sq, 0.0));
}

std::vector<double> strain_rate_norms(const State& state)
{
    std::vector<double> out(state.mesh->num_triangles());
    for (std::size_t k = 0; k < out.size(); ++k) {
        out[k] = norm(sym_gradient(state, k));
    }
    return out;
}

std::vector<double> stress_norms(const State& state)
{
    std::vector<double> out(state.mesh->num_triangles());
    for (std::size_t k = 0; k < out.size(); ++k) {
        out[k] = norm(state.stress(k));
    }
    return out;
}

Eigen::VectorXd cell_to_vertex(const Mesh& mesh, const std::vector<double>& cell_values)
{
    if (cell_values.size() != mesh.num_triangles()) {
        throw std::invalid_argument("cell_to_vertex: size does not match the mesh");
    }
    Eigen::VectorXd sum = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(mesh.num_vertices()));
    Eigen::VectorXd weight = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(mesh.num_vertices()));
    for (std::size_t k = 0; k < mesh.num_triangles(); ++k) {
        const double a = triangle_signed_area(mesh, k);
        for (int v : mesh.triangles[k]) {
            sum[v] += a * cell_values[k];
            weight[v] += a;
        }
    }
    return sum.cwiseQuotient(weight);
}

std::vector<char> plug_mask(const State& state, double threshold)
{
    if (!(threshold >= 0.0)) {
        throw std::invalid_argument("plug_mask: threshold must be non-negative");
    }
    const auto d = strain_rate_norms(state);
    std::vector<char> mask(d.size());
    for (std::size_t k = 0; k < d.size(); ++k) {
        mask[k] = d[k] < threshold ? 1 : 0;
    }
    return mask;
}

Eigen::VectorXd stream_function(const State& state)
{
    const Mesh& mesh = *state.mesh;
    const auto n = static_cast<Eigen::Index>(mesh.num_vertices());
    std::vector<char> on_boundary(mesh.num_vertices(), 0);
    for (const auto& e : mesh.boundary_edges) {
        on_boundary[e.vertices[0]] = on_boundary[e.vertices[1]] = 1;
    }

    std::vector<Eigen::Triplet<double>> trip;
    Eigen::VectorXd rhs = Eigen::VectorXd::Zero(n);
    for (std::size_t k = 0; k < mesh.num_triangles(); ++k) {
        const auto& t = mesh.triangles[k];
        const ElementData e = p1_element_data(mesh, k);
        const Eigen::Matrix2d g = velocity_gradient(state, k, e);
        const double omega = g(1, 0) - g(0, 1);
        for (int a = 0; a < 3; ++a) {
            if (on_boundary[t[a]]) {
                continue;
            }
            rhs[t[a]] += omega * e.area / 3.0;
            for (int b = 0; b < 3; ++b) {
                if (!on_boundary[t[b]]) {
                    trip.emplace_back(t[a], t[b], e.area * e.grad[a].dot(e.grad[b]));
                }
            }
        }
    }
    for (Eigen::Index v = 0; v < n; ++v) {
        if (on_boundary[v]) {
            trip.emplace_back(static_cast<int>(v), static_cast<int>(v), 1.0);
        }
    }
    Eigen::SparseMatrix<double> stiffness(n, n);
    stiffness.setFromTriplets(trip.begin(), trip.end());
    Eigen::SimplicialLDLT<Eigen::SparseMatrix<double>> ldlt(stiffness);
    if (ldlt.info() != Eigen::Success) {
        throw std::runtime_error("stream_function: stiffness factorisation failed");
    }
    return ldlt.solve(rhs);
}

void FieldSnapshot::add_point_scalar(std::string name, const Eigen::VectorXd& values)
{
    point_fields.push_back({std::move(name), std::vector<double>(values.data(), values.data() + values.size()), 1});
}

void FieldSnapshot::add_point_vector(std::string name, const Eigen::VectorXd& velocity_block)
{
    NamedField f{std::move(name), {}, 3};
    const Eigen::Index n = velocity_block.size() / 2;
    f.values.reserve(static_cast<std::size_t>(3 * n));
    for (Eigen::Index v = 0; v < n; ++v) {
        f.values.insert(f.values.end(), {velocity_block[2 * v], velocity_block[2 * v + 1], 0.0});
    }
    point_fields.push_back(std::move(f));
}

void FieldSnapshot::add_cell_scalar(std::string name, std::vector<double> values)
{
    cell_fields.push_back({std::move(name), std::move(values), 1});
}

void validate(const FieldSnapshot& snapshot)
{
    if (!snapshot.mesh) {
        throw std::invalid_argument("FieldSnapshot: missing mesh");
    }
    auto check = [](const NamedField& f, std::size_t count) {
        if (f.components != 1 && f.components != 3) {
            throw std::invalid_argument("FieldSnapshot: field '" + f.name + "' must have 1 or 3 components");
        }
        if (f.values.size() != count * static_cast<std::size_t>(f.components)) {
            throw std::invalid_argument("FieldSnapshot: field '" + f.name + "' has the wrong length");
        }
        if (f.name.empty() || f.name.find_first_of(" \t\n") != std::string::npos) {
            throw std::invalid_argument("FieldSnapshot: field names must be non-empty without whitespace");
        }
    };
    for (const auto& f : snapshot.point_fields) {
        check(f, snapshot.mesh->num_vertices());
    }
    for (const auto& f : snapshot.cell_fields) {
        check(f, snapshot.mesh->num_triangles());
    }
}

FieldSnapshot make_snapshot(const State& state, double plug_threshold)
{
    FieldSnapshot snap;
    snap.mesh = state.mesh;
    snap.add_point_vector("velocity", state.velocity_block());
    snap.add_point_scalar("pressure", state.pressure_block());
    const std::size_t n_cells = state.mesh->num_triangles();
    std::vector<double> sxx(n_cells), syy(n_cells), sxy(n_cells);
    for (std::size_t k = 0; k < n_cells; ++k) {
        const SymTensor2 s = state.stress(k);
        sxx[k] = s.xx;
        syy[k] = s.yy;
        sxy[k] = s.xy;
    }
    snap.add_cell_scalar("stress_xx", std::move(sxx));
    snap.add_cell_scalar("stress_yy", std::move(syy));
    snap.add_cell_scalar("stress_xy", std::move(sxy));
    snap.add_cell_scalar("strain_rate_norm", strain_rate_norms(state));
    snap.add_cell_scalar("stress_norm", stress_norms(state));
    const auto mask = plug_mask(state, plug_threshold);
    snap.add_cell_scalar("plug", std::vector<double>(mask.begin(), mask.end()));
    return snap;
}

void write_vtk(const FieldSnapshot& snapshot, std::ostream& out)
{
    validate(snapshot);
    const Mesh& mesh = *snapshot.mesh;
    out.imbue(std::locale::classic());
    out.precision(17);
    out << "# vtk DataFile Version 3.0\nvpflow\nASCII\nDATASET UNSTRUCTURED_GRID\n";
    out << "POINTS " << mesh.num_vertices() << " double\n";
    for (const auto& x : mesh.vertices) {
        write_number(out, x.x());
        out << ' ';
        write_number(out, x.y());
        out << " 0\n";
    }
    out << "CELLS " << mesh.num_triangles() << ' ' << 4 * mesh.num_triangles() << '\n';
    for (const auto& t : mesh.triangles) {
        out << "3 " << t[0] << ' ' << t[1] << ' ' << t[2] << '\n';
    }
    out << "CELL_TYPES " << mesh.num_triangles() << '\n';
    for (std::size_t k = 0; k < mesh.num_triangles(); ++k) {
        out << "5\n";
    }

    auto write_fields = [&](const std::vector<NamedField>& fields) {
        for (const auto& f : fields) {
            if (f.components == 1) {
                out << "SCALARS " << f.name << " double 1\nLOOKUP_TABLE default\n";
                for (double v : f.values) {
                    write_number(out, v);
                    out << '\n';
                }
            } else {
                out << "VECTORS " << f.name << " double\n";
                for (std::size_t i = 0; i < f.values.size(); i += 3) {
                    write_number(out, f.values[i]);
                    out << ' ';
                    write_number(out, f.values[i + 1]);
                    out << ' ';
                    write_number(out, f.values[i + 2]);
                    out << '\n';
                }
            }
        }
    };
    if (!snapshot.point_fields.empty()) {
        out << "POINT_DATA " << mesh.num_vertices() << '\n';
        write_fields(snapshot.point_fields);
    }
    if (!snapshot.cell_fields.empty()) {
        out << "CELL_DATA " << mesh.num_triangles() << '\n';
        write_fields(snapshot.cell_fields);
    }
}

void write_vtk(const FieldSnapshot& snapshot, const std::filesystem::path& path)
{
    std::ofstream file(path, std::ios::binary);
    if (!file) {
        throw std::runtime_error("write_vtk: cannot open " + path.string());
    }
    write_vtk(snapshot, file);
    if (!file) {
        throw std::runtime_error("write_vtk: write failed for " + path.string());
    }
}

PointLocator::PointLocator(std::shared_ptr<const Mesh> mesh) : mesh_(std::move(mesh))
{
    if (!mesh_ || mesh_->num_triangles() == 0) {
        throw std::invalid_argument("PointLocator: empty mesh");
    }
    Vec2 hi = mesh_->vertices.front();
    lo_ = hi;
    for (const auto& x : mesh_->vertices) {
        lo_ = lo_.cwiseMin(x);
        hi = hi.cwiseMax(x);
    }
    const auto side = static_cast<int>(std::ceil(std::sqrt(static_cast<double>(mesh_->num_triangles()))));
    nx_ = ny_ = std::max(side, 1);
    cell_ = ((hi - lo_) / side).cwiseMax(Vec2::Constant(1e-300));
    bins_.resize(static_cast<std::size_t>(nx_ * ny_));
    for (std::size_t k = 0; k < mesh_->num_triangles(); ++k) {
        Vec2 tlo = mesh_->vertices[mesh_->triangles[k][0]];
        Vec2 thi = tlo;
        for (int v : mesh_->triangles[k]) {
            tlo = tlo.cwiseMin(mesh_->vertices[v]);
            thi = thi.cwiseMax(mesh_->vertices[v]);
        }
        const int i0 = std::clamp(static_cast<int>((tlo.x() - lo_.x()) / cell_.x()), 0, nx_ - 1);
        const int i1 = std::clamp(static_cast<int>((thi.x() - lo_.x()) / cell_.x()), 0, nx_ - 1);
        const int j0 = std::clamp(static_cast<int>((tlo.y() - lo_.y()) / cell_.y()), 0, ny_ - 1);
        const int j1 = std::clamp(static_cast<int>((thi.y() - lo_.y()) / cell_.y()), 0, ny_ - 1);
        for (int j = j0; j <= j1; ++j) {
            for (int i = i0; i <= i1; ++i) {
                bins_[static_cast<std::size_t>(j * nx_ + i)].push_back(k);
            }
        }
    }
}

bool PointLocator::locate(const Vec2& x, std::size_t& tri, std::array<double, 3>& bary) const
{
    const double fx = (x.x() - lo_.x()) / cell_.x();
    const double fy = (x.y() - lo_.y()) / cell_.y();
    if (fx < -1e-9 || fy < -1e-9 || fx > nx_ + 1e-9 || fy > ny_ + 1e-9) {
        return false;
    }
    const int i = std::clamp(static_cast<int>(fx), 0, nx_ - 1);
    const int j = std::clamp(static_cast<int>(fy), 0, ny_ - 1);
    constexpr double tol = -1e-10;
    for (std::size_t k : bins_[static_cast<std::size_t>(j * nx_ + i)]) {
        const auto& t = mesh_->triangles[k];
        const Vec2& a = mesh_->vertices[t[0]];
        const Vec2& b = mesh_->vertices[t[1]];
        const Vec2& c = mesh_->vertices[t[2]];
        const double det = (b.x() - a.x()) * (c.y() - a.y()) - (c.x() - a.x()) * (b.y() - a.y());
        const double l1 = ((x.x() - a.x()) * (c.y() - a.y()) - (c.x() - a.x()) * (x.y() - a.y())) / det;
        const double l2 = ((b.x() - a.x()) * (x.y() - a.y()) - (x.x() - a.x()) * (b.y() - a.y())) / det;
        const double l0 = 1.0 - l1 - l2;
        if (l0 >= tol && l1 >= tol && l2 >= tol) {
            tri = k;
            bary = {l0, l1, l2};
            return true;
        }
    }
    return false;
}

LineSamples sample_line(const FieldSnapshot& snapshot, const Vec2& start, const Vec2& end, int n)
{
    validate(snapshot);
    if (n < 2) {
        throw std::invalid_argument("sample_line: need at least two samples");
    }
    const PointLocator locator(snapshot.mesh);
    LineSamples out;
    std::vector<const NamedField*> fields;
    for (const auto& f : snapshot.point_fields) {
        if (f.components == 1) {
            fields.push_back(&f);
            out.names.push_back(f.name);
        }
    }
    out.values.assign(fields.size(), std::vector<double>(static_cast<std::size_t>(n)));
    for (int i = 0; i < n; ++i) {
        const double s = static_cast<double>(i) / (n - 1);
        const Vec2 x = (1.0 - s) * start + s * end;
        std::size_t k = 0;
        std::array<double, 3> bary{};
        if (!locator.locate(x, k, bary)) {
            throw std::out_of_range("sample_line: sample " + std::to_string(i) + " lies outside the mesh");
        }
        out.points.push_back(x);
        const auto& t = snapshot.mesh->triangles[k];
        for (std::size_t f = 0; f < fields.size(); ++f) {
            const auto& v = fields[f]->values;
            out.values[f][static_cast<std::size_t>(i)] = bary[0] * v[t[0]] + bary[1] * v[t[1]] + bary[2] * v[t[2]];
        }
    }
    return out;
}

void write_csv(const LineSamples& samples, std::ostream& out)
{
    out.imbue(std::locale::classic());
    out.precision(17);
    out << "x,y";
    for (const auto& name : samples.names) {
        out << ',' << name;
    }
    out << '\n';
    for (std::size_t i = 0; i < samples.points.size(); ++i) {
        out << samples.points[i].x() << ',' << samples.points[i].y();
        for (const auto& field : samples.values) {
            out << ',' << field[i];
        }
        out << '\n';
    }
}

} // namespace vpflow
