#include "vpflow/assembly.hpp"

#include <Eigen/SVD>

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>

namespace vpflow {

namespace {

// Consistent P1 mass matrix entry on a triangle.
double mass_entry(double area, int a, int b) { return area / 12.0 * (a == b ? 2.0 : 1.0); }

} // namespace

void validate(const ProblemSpec& spec)
{
    if (!spec.mesh) {
        throw std::invalid_argument("ProblemSpec: missing mesh");
    }
    validate(spec.reg);
    if (!(spec.alpha >= 0.0)) {
        throw std::invalid_argument("ProblemSpec: alpha must be non-negative");
    }
    if (!(spec.stabilisation >= 0.0)) {
        throw std::invalid_argument("ProblemSpec: stabilisation coefficient must be non-negative");
    }
    const auto n_vel = static_cast<Eigen::Index>(2 * spec.mesh->num_vertices());
    if (spec.body_force.size() != 0 && spec.body_force.size() != n_vel) {
        throw std::invalid_argument("ProblemSpec: body force size does not match the mesh");
    }
    if (spec.previous_velocity.size() != 0 && spec.previous_velocity.size() != n_vel) {
        throw std::invalid_argument("ProblemSpec: previous velocity size does not match the mesh");
    }
    for (const auto& e : spec.mesh->boundary_edges) {
        if (spec.dirichlet.find(e.tag) == spec.dirichlet.end()) {
            throw std::invalid_argument("ProblemSpec: no Dirichlet data for boundary tag '" +
                                        std::string(to_string(e.tag)) + "'");
        }
    }
}

Eigen::VectorXd effective_body_force(const ProblemSpec& spec)
{
    Eigen::VectorXd f = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(2 * spec.mesh->num_vertices()));
    if (spec.body_force.size() != 0) {
        f += spec.body_force;
    }
    if (spec.previous_velocity.size() != 0) {
        f += spec.alpha * spec.previous_velocity;
    }
    return f;
}

ProblemSpec apply_time_step(const ProblemSpec& spec, const Eigen::VectorXd& u_old, double dt)
{
    if (!(dt > 0.0)) {
        throw std::invalid_argument("apply_time_step: time step must be positive");
    }
    if (u_old.size() != static_cast<Eigen::Index>(2 * spec.mesh->num_vertices())) {
        throw std::invalid_argument("apply_time_step: velocity block size does not match the mesh");
    }
    ProblemSpec out = spec;
    out.alpha = 1.0 / dt;
    out.previous_velocity = u_old;
    return out;
}

Assembler::Assembler(ProblemSpec spec)
    : spec_(std::move(spec)), layout_((validate(spec_), *spec_.mesh))
{
    const Mesh& mesh = *spec_.mesh;
    elements_ = all_element_data(mesh);
    h2_.resize(mesh.num_triangles());
    for (std::size_t t = 0; t < mesh.num_triangles(); ++t) {
        const double h = triangle_diameter(mesh, t);
        h2_[t] = h * h;
    }
    dirichlet_mask_.assign(layout_.total(), 0);
    dirichlet_values_ = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(layout_.total()));
    const auto tags = vertex_boundary_tags(mesh);
    for (std::size_t v = 0; v < mesh.num_vertices(); ++v) {
        if (!tags[v]) {
            continue;
        }
        const Vec2 g = spec_.dirichlet.at(*tags[v])(mesh.vertices[v]);
        for (int c = 0; c < 2; ++c) {
            const auto dof = layout_.velocity(v, c);
            dirichlet_mask_[dof] = 1;
            dirichlet_values_[static_cast<Eigen::Index>(dof)] = g[c];
        }
    }
    spec_.body_force = effective_body_force(spec_);
    spec_.previous_velocity.resize(0);
}

void Assembler::check_state(const State& state) const
{
    if (!(state.layout == layout_) || state.coeffs.size() != static_cast<Eigen::Index>(layout_.total())) {
        throw std::invalid_argument("Assembler: state layout does not match the problem");
    }
}

void Assembler::apply_dirichlet(State& state) const
{
    check_state(state);
    for (std::size_t i = 0; i < dirichlet_mask_.size(); ++i) {
        if (dirichlet_mask_[i]) {
            state.coeffs[static_cast<Eigen::Index>(i)] = dirichlet_values_[static_cast<Eigen::Index>(i)];
        }
    }
}

Eigen::VectorXd Assembler::residual(const State& state) const
{
    check_state(state);
    const Mesh& mesh = *spec_.mesh;
    const auto& f = spec_.body_force;
    const double alpha = spec_.alpha;
    const double lambda = state.multiplier();
    Eigen::VectorXd r = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(layout_.total()));

    for (std::size_t k = 0; k < mesh.num_triangles(); ++k) {
        const auto& tri = mesh.triangles[k];
        const ElementData& e = elements_[k];
        const double A = e.area;
        const SymTensor2 S = state.stress(k);
        const SymTensor2 D = sym_gradient(state, k, e);
        const SymTensor2 G = eval_g_reg(spec_.reg, S, D);
        r[static_cast<Eigen::Index>(layout_.stress(k, 0))] = A * G.xx;
        r[static_cast<Eigen::Index>(layout_.stress(k, 1))] = A * G.yy;
        r[static_cast<Eigen::Index>(layout_.stress(k, 2))] = A * G.xy;

        double p_sum = 0.0;
        for (int a = 0; a < 3; ++a) {
            p_sum += state.pressure(tri[a]);
        }
        const double p_int = A * p_sum / 3.0;
        const double div_u = D.xx + D.yy;

        for (int a = 0; a < 3; ++a) {
            const double gx = e.grad[a].x();
            const double gy = e.grad[a].y();
            const auto i0 = static_cast<Eigen::Index>(layout_.velocity(tri[a], 0));
            const auto i1 = i0 + 1;
            r[i0] += A * (S.xx * gx + S.xy * gy) - p_int * gx;
            r[i1] += A * (S.xy * gx + S.yy * gy) - p_int * gy;
            for (int b = 0; b < 3; ++b) {
                const double m = mass_entry(A, a, b);
                const Vec2 ub = state.velocity(tri[b]);
                r[i0] += alpha * m * ub.x() - m * f[2 * tri[b]];
                r[i1] += alpha * m * ub.y() - m * f[2 * tri[b] + 1];
            }

            double stab = 0.0;
            for (int b = 0; b < 3; ++b) {
                stab += e.grad[a].dot(e.grad[b]) * state.pressure(tri[b]);
            }
            const auto ip = static_cast<Eigen::Index>(layout_.pressure(tri[a]));
            r[ip] += -A / 3.0 * div_u - spec_.stabilisation * h2_[k] * A * stab + lambda * A / 3.0;
        }
        r[static_cast<Eigen::Index>(layout_.multiplier())] += p_int;
    }

    for (std::size_t i = 0; i < dirichlet_mask_.size(); ++i) {
        if (dirichlet_mask_[i]) {
            const auto ii = static_cast<Eigen::Index>(i);
            r[ii] = state.coeffs[ii] - dirichlet_values_[ii];
        }
    }
    return r;
}

std::vector<Eigen::Triplet<double>> Assembler::jacobian_triplets(const State& state, double& min_sv) const
{
    check_state(state);
    const Mesh& mesh = *spec_.mesh;
    const double alpha = spec_.alpha;
    std::vector<Eigen::Triplet<double>> trip;
    trip.reserve(mesh.num_triangles() * (9 + 18 + 18 + 36 + 9 + 9 + 18 + 6) + layout_.total());
    min_sv = std::numeric_limits<double>::infinity();

    auto add = [&](std::size_t row, std::size_t col, double v) {
        if (!dirichlet_mask_[row]) {
            trip.emplace_back(static_cast<int>(row), static_cast<int>(col), v);
        }
    };

    for (std::size_t k = 0; k < mesh.num_triangles(); ++k) {
        const auto& tri = mesh.triangles[k];
        const ElementData& e = elements_[k];
        const double A = e.area;
        const SymTensor2 S = state.stress(k);
        const SymTensor2 D = sym_gradient(state, k, e);
        const auto jac = jacobian_selection_reg(spec_.reg, S, D);
        const Eigen::Matrix3d& d1 = jac.d1.matrix();
        const Eigen::Matrix3d& d2 = jac.d2.matrix();
        min_sv = std::min(min_sv, Eigen::JacobiSVD<Eigen::Matrix3d>(d1).singularValues()[2]);

        // D(u) components as a function of the six local velocity dofs.
        Eigen::Matrix<double, 3, 6> BD = Eigen::Matrix<double, 3, 6>::Zero();
        for (int a = 0; a < 3; ++a) {
            const double gx = e.grad[a].x();
            const double gy = e.grad[a].y();
            BD(0, 2 * a) = gx;
            BD(1, 2 * a + 1) = gy;
            BD(2, 2 * a) = 0.5 * gy;
            BD(2, 2 * a + 1) = 0.5 * gx;
        }
        const Eigen::Matrix<double, 3, 6> stress_vel = A * d2 * BD;

        for (int i = 0; i < 3; ++i) {
            const auto row = layout_.stress(k, i);
            for (int j = 0; j < 3; ++j) {
                add(row, layout_.stress(k, j), A * d1(i, j));
            }
            for (int a = 0; a < 3; ++a) {
                for (int c = 0; c < 2; ++c) {
                    add(row, layout_.velocity(tri[a], c), stress_vel(i, 2 * a + c));
                }
            }
        }

        for (int a = 0; a < 3; ++a) {
            const double gx = e.grad[a].x();
            const double gy = e.grad[a].y();
            const auto row0 = layout_.velocity(tri[a], 0);
            const auto row1 = layout_.velocity(tri[a], 1);
            add(row0, layout_.stress(k, 0), A * gx);
            add(row0, layout_.stress(k, 2), A * gy);
            add(row1, layout_.stress(k, 1), A * gy);
            add(row1, layout_.stress(k, 2), A * gx);
            for (int b = 0; b < 3; ++b) {
                add(row0, layout_.pressure(tri[b]), -A / 3.0 * gx);
                add(row1, layout_.pressure(tri[b]), -A / 3.0 * gy);
                if (alpha != 0.0) {
                    const double m = alpha * mass_entry(A, a, b);
                    add(row0, layout_.velocity(tri[b], 0), m);
                    add(row1, layout_.velocity(tri[b], 1), m);
                }
            }

            const auto prow = layout_.pressure(tri[a]);
            for (int b = 0; b < 3; ++b) {
                add(prow, layout_.velocity(tri[b], 0), -A / 3.0 * e.grad[b].x());
                add(prow, layout_.velocity(tri[b], 1), -A / 3.0 * e.grad[b].y());
                add(prow, layout_.pressure(tri[b]), -spec_.stabilisation * h2_[k] * A * e.grad[a].dot(e.grad[b]));
            }
            add(prow, layout_.multiplier(), A / 3.0);
            add(layout_.multiplier(), prow, A / 3.0);
        }
    }
    for (std::size_t i = 0; i < dirichlet_mask_.size(); ++i) {
        if (dirichlet_mask_[i]) {
            trip.emplace_back(static_cast<int>(i), static_cast<int>(i), 1.0);
        }
    }
    return trip;
}

Eigen::SparseMatrix<double> Assembler::raw_jacobian(const State& state) const
{
    double min_sv = 0.0;
    const auto trip = jacobian_triplets(state, min_sv);
    const auto n = static_cast<Eigen::Index>(layout_.total());
    Eigen::SparseMatrix<double> m(n, n);
    m.setFromTriplets(trip.begin(), trip.end());
    return m;
}

SparseSystem Assembler::jacobian(const State& state) const { return jacobian(state, residual(state)); }

SparseSystem Assembler::jacobian(const State& state, const Eigen::VectorXd& residual) const
{
    SparseSystem sys;
    auto trip = jacobian_triplets(state, sys.min_stress_block_singular_value);
    sys.rhs = -residual;

    // Known Dirichlet increments move to the right-hand side.
    std::erase_if(trip, [&](const Eigen::Triplet<double>& t) {
        const auto col = static_cast<std::size_t>(t.col());
        if (!dirichlet_mask_[col] || t.row() == t.col()) {
            return false;
        }
        sys.rhs[t.row()] -= t.value() * sys.rhs[t.col()];
        return true;
    });
    const auto n = static_cast<Eigen::Index>(layout_.total());
    sys.matrix.resize(n, n);
    sys.matrix.setFromTriplets(trip.begin(), trip.end());
    return sys;
}

Eigen::VectorXd assemble_residual(const ProblemSpec& spec, const State& state)
{
    return Assembler(spec).residual(state);
}

SparseSystem assemble_jacobian(const ProblemSpec& spec, const State& state)
{
    return Assembler(spec).jacobian(state);
}

} // namespace vpflow
