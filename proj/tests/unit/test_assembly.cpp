#include "vpflow/assembly.hpp"
#include "vpflow/linsolve.hpp"
#include "vpflow/newton.hpp"

#include <gtest/gtest.h>

#include <Eigen/Dense>

#include <cmath>
#include <memory>
#include <random>

using namespace vpflow;

namespace {

std::shared_ptr<const Mesh> square(int n)
{
    return std::make_shared<const Mesh>(build_rectangle({0, 0}, {1, 1}, n, n));
}

ProblemSpec make_spec(std::shared_ptr<const Mesh> mesh, ConstitutiveModel model, double eps1, double eps2,
                      VelocityFunction wall = [](const Vec2&) { return Vec2(0, 0); })
{
    ProblemSpec spec;
    spec.mesh = std::move(mesh);
    spec.reg = RegularizedModel{std::move(model), eps1, eps2};
    spec.dirichlet[BoundaryTag::Wall] = std::move(wall);
    return spec;
}

State random_state(std::shared_ptr<const Mesh> mesh, unsigned seed)
{
    State s(std::move(mesh));
    std::mt19937 rng(seed);
    std::normal_distribution<double> n(0.0, 1.0);
    for (Eigen::Index i = 0; i < s.coeffs.size(); ++i) {
        s.coeffs[i] = n(rng);
    }
    return s;
}

// Gradients of the barycentric basis from the inverse of the affine map.
std::array<Vec2, 3> reference_gradients(const Mesh& m, std::size_t t, double& area)
{
    const auto& tri = m.triangles[t];
    Eigen::Matrix2d J;
    J.col(0) = m.vertices[tri[1]] - m.vertices[tri[0]];
    J.col(1) = m.vertices[tri[2]] - m.vertices[tri[0]];
    area = 0.5 * std::abs(J.determinant());
    const Eigen::Matrix2d JinvT = J.inverse().transpose();
    return {JinvT * Vec2(-1, -1), JinvT * Vec2(1, 0), JinvT * Vec2(0, 1)};
}

Eigen::MatrixXd fd_jacobian(const Assembler& a, const State& s, double h)
{
    const Eigen::Index n = s.coeffs.size();
    Eigen::MatrixXd J(n, n);
    for (Eigen::Index j = 0; j < n; ++j) {
        State p = s, m = s;
        p.coeffs[j] += h;
        m.coeffs[j] -= h;
        J.col(j) = (a.residual(p) - a.residual(m)) / (2.0 * h);
    }
    return J;
}

} // namespace

TEST(Assembly, AffineNewtonianFlowHasZeroResidual)
{
    auto mesh = square(4);
    const double nu = 0.7;
    const auto spec = make_spec(mesh, Newtonian{nu}, 0.0, 0.0, [](const Vec2& x) { return Vec2(x.x(), -x.y()); });
    const Assembler a(spec);
    State s(mesh);
    a.apply_dirichlet(s);
    s.velocity_block() = interpolate_velocity(*mesh, [](const Vec2& x) { return Vec2(x.x(), -x.y()); });
    for (std::size_t t = 0; t < mesh->num_triangles(); ++t) {
        s.set_stress(t, SymTensor2{2.0 * nu, -2.0 * nu, 0.0});
    }
    EXPECT_LT(a.residual(s).lpNorm<Eigen::Infinity>(), 1e-13);
}

TEST(Assembly, StressRowsMatchElementFormula)
{
    auto mesh = square(2);
    const double nu = 0.7, e1 = 0.1, e2 = 0.2;
    const Assembler a(make_spec(mesh, Newtonian{nu}, e1, e2));
    const State s = random_state(mesh, 1);
    const Eigen::VectorXd r = a.residual(s);
    for (std::size_t t = 0; t < mesh->num_triangles(); ++t) {
        double area = 0.0;
        const auto g = reference_gradients(*mesh, t, area);
        Eigen::Matrix2d L = Eigen::Matrix2d::Zero();
        for (int k = 0; k < 3; ++k) {
            L += s.velocity(mesh->triangles[t][k]) * g[k].transpose();
        }
        const Eigen::Matrix2d D = 0.5 * (L + L.transpose());
        const SymTensor2 S = s.stress(t);
        Eigen::Matrix2d Sm;
        Sm << S.xx, S.xy, S.xy, S.yy;
        const Eigen::Matrix2d G = (Sm - e1 * D) - 2.0 * nu * (D - e2 * Sm);
        EXPECT_NEAR(r[3 * t], area * G(0, 0), 1e-12);
        EXPECT_NEAR(r[3 * t + 1], area * G(1, 1), 1e-12);
        EXPECT_NEAR(r[3 * t + 2], area * G(0, 1), 1e-12);
    }
}

TEST(Assembly, InteriorRowsMatchHandAssembly)
{
    auto mesh = square(2);
    ProblemSpec spec = make_spec(mesh, Newtonian{1.0}, 0.0, 0.0);
    spec.alpha = 3.0;
    spec.stabilisation = 0.2;
    spec.body_force = Eigen::VectorXd::Constant(18, 0.0);
    for (int v = 0; v < 9; ++v) {
        spec.body_force[2 * v] = 1.0 + v;
        spec.body_force[2 * v + 1] = -0.5 * v;
    }
    const Assembler a(spec);
    const State s = random_state(mesh, 2);
    const Eigen::VectorXd r = a.residual(s);

    // The single interior vertex of the 2x2 grid.
    int c = -1;
    for (int v = 0; v < 9; ++v) {
        if ((mesh->vertices[v] - Vec2(0.5, 0.5)).norm() < 1e-12) {
            c = v;
        }
    }
    ASSERT_GE(c, 0);
    Vec2 mom = Vec2::Zero();
    double cont = 0.0;
    for (std::size_t t = 0; t < mesh->num_triangles(); ++t) {
        const auto& tri = mesh->triangles[t];
        int lc = -1;
        for (int k = 0; k < 3; ++k) {
            if (tri[k] == c) {
                lc = k;
            }
        }
        if (lc < 0) {
            continue;
        }
        double area = 0.0;
        const auto g = reference_gradients(*mesh, t, area);
        const SymTensor2 S = s.stress(t);
        Eigen::Matrix2d Sm;
        Sm << S.xx, S.xy, S.xy, S.yy;
        double pbar = 0.0, divu = 0.0, stab = 0.0;
        for (int k = 0; k < 3; ++k) {
            pbar += s.pressure(tri[k]) / 3.0;
            divu += g[k].dot(s.velocity(tri[k]));
            stab += g[lc].dot(g[k]) * s.pressure(tri[k]);
            const double m = area / 12.0 * (k == lc ? 2.0 : 1.0);
            const Vec2 f(spec.body_force[2 * tri[k]], spec.body_force[2 * tri[k] + 1]);
            mom += m * (spec.alpha * s.velocity(tri[k]) - f);
        }
        double diam = 0.0;
        for (int i = 0; i < 3; ++i) {
            diam = std::max(diam, (mesh->vertices[tri[i]] - mesh->vertices[tri[(i + 1) % 3]]).norm());
        }
        mom += area * (Sm * g[lc]) - area * pbar * g[lc];
        cont += -area / 3.0 * divu - 0.2 * diam * diam * area * stab + s.multiplier() * area / 3.0;
    }
    const DofLayout& l = a.layout();
    EXPECT_NEAR(r[l.velocity(c, 0)], mom.x(), 1e-12);
    EXPECT_NEAR(r[l.velocity(c, 1)], mom.y(), 1e-12);
    EXPECT_NEAR(r[l.pressure(c)], cont, 1e-12);

    double pint = 0.0;
    for (std::size_t t = 0; t < mesh->num_triangles(); ++t) {
        double area = 0.0;
        reference_gradients(*mesh, t, area);
        for (int k = 0; k < 3; ++k) {
            pint += area / 3.0 * s.pressure(mesh->triangles[t][k]);
        }
    }
    EXPECT_NEAR(r[l.multiplier()], pint, 1e-12);

    // Boundary velocity rows are u - g.
    EXPECT_NEAR(r[l.velocity(0, 0)], s.velocity(0).x(), 0.0);
}

TEST(Assembly, JacobianMatchesFiniteDifferences)
{
    auto mesh = square(3);
    for (const ConstitutiveModel& model : {ConstitutiveModel{BinghamProduct{1.0, 0.5}},
                                           ConstitutiveModel{BinghamProjection{0.3, 0.5}},
                                           ConstitutiveModel{HerschelBulkley{0.5, 0.5, 1.6}}}) {
        const Assembler a(make_spec(mesh, model, 0.01, 0.01));
        const State s = random_state(mesh, 3);
        const Eigen::MatrixXd J = Eigen::MatrixXd(a.raw_jacobian(s));
        const Eigen::MatrixXd fd = fd_jacobian(a, s, 1e-6);
        EXPECT_LT((J - fd).norm() / fd.norm(), 1e-7) << model_name(model);
    }
}

TEST(Assembly, NewtonianJacobianIsStateIndependent)
{
    auto mesh = square(3);
    const Assembler a(make_spec(mesh, Newtonian{0.5}, 0.01, 0.01));
    const Eigen::MatrixXd J1 = Eigen::MatrixXd(a.raw_jacobian(random_state(mesh, 4)));
    const Eigen::MatrixXd J2 = Eigen::MatrixXd(a.raw_jacobian(random_state(mesh, 5)));
    EXPECT_EQ((J1 - J2).norm(), 0.0);
}

TEST(Assembly, NewtonianResidualIsAffine)
{
    auto mesh = square(3);
    const Assembler a(make_spec(mesh, Newtonian{0.5}, 0.01, 0.01));
    const State x = random_state(mesh, 6);
    const State dx = random_state(mesh, 7);
    State y = x;
    y.coeffs += dx.coeffs;
    const Eigen::VectorXd lin = a.residual(x) + a.raw_jacobian(x) * dx.coeffs;
    EXPECT_LT((a.residual(y) - lin).norm(), 1e-12 * (1.0 + lin.norm()));
}

TEST(Assembly, SparsityPattern)
{
    auto mesh = square(4);
    const Assembler a(make_spec(mesh, BinghamProduct{1.0, 0.5}, 0.01, 0.01));
    const Eigen::SparseMatrix<double, Eigen::RowMajor> J = a.raw_jacobian(random_state(mesh, 8));
    const DofLayout& l = a.layout();
    for (std::size_t t = 0; t < mesh->num_triangles(); ++t) {
        for (int c = 0; c < 3; ++c) {
            // Three stress components and six local velocities.
            EXPECT_LE(J.row(static_cast<Eigen::Index>(l.stress(t, c))).nonZeros(), 9);
        }
    }
    for (std::size_t i = 0; i < l.total(); ++i) {
        if (a.dirichlet_mask()[i]) {
            EXPECT_EQ(J.row(static_cast<Eigen::Index>(i)).nonZeros(), 1);
        }
    }
    EXPECT_EQ(J.rows(), static_cast<Eigen::Index>(l.total()));
    // Far below dense.
    EXPECT_LT(J.nonZeros(), J.rows() * 40);
}

TEST(Assembly, SaddlePointBlocksAreSymmetric)
{
    auto mesh = square(4);
    const Assembler a(make_spec(mesh, BinghamProduct{1.0, 0.5}, 0.01, 0.01));
    const Eigen::MatrixXd J = Eigen::MatrixXd(a.raw_jacobian(random_state(mesh, 9)));
    const DofLayout& l = a.layout();
    const auto& mask = a.dirichlet_mask();
    for (std::size_t i = l.velocity_offset(); i < l.pressure_offset(); ++i) {
        if (mask[i]) {
            continue;
        }
        for (std::size_t j = l.pressure_offset(); j < l.total(); ++j) {
            EXPECT_NEAR(J(i, j), J(j, i), 1e-14);
        }
    }
    for (std::size_t j = l.pressure_offset(); j < l.multiplier(); ++j) {
        EXPECT_NEAR(J(l.multiplier(), j), J(j, l.multiplier()), 1e-14);
    }
    // Pressure stabilisation block is symmetric negative semidefinite.
    const auto np = static_cast<Eigen::Index>(l.n_pressure);
    const Eigen::MatrixXd C = J.block(l.pressure_offset(), l.pressure_offset(), np, np);
    EXPECT_LT((C - C.transpose()).norm(), 1e-14);
    EXPECT_LT(Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd>(C).eigenvalues().maxCoeff(), 1e-12);
}

TEST(Assembly, DirichletEliminationGivesExactStep)
{
    // For a Newtonian law one Newton step from any state solves the discrete problem.
    auto mesh = square(4);
    const Assembler a(make_spec(mesh, Newtonian{0.5}, 0.0, 0.0, [](const Vec2& x) { return Vec2(x.y(), 0.0); }));
    State s = random_state(mesh, 10);
    const SparseSystem sys = a.jacobian(s);
    const Eigen::VectorXd dx = solve(factorise(sys), sys.rhs);
    s.coeffs += dx;
    EXPECT_LT(a.residual(s).norm(), 1e-11);
    for (std::size_t i = 0; i < a.dirichlet_mask().size(); ++i) {
        if (a.dirichlet_mask()[i]) {
            EXPECT_NEAR(s.coeffs[i], a.dirichlet_values()[i], 1e-14);
        }
    }
    // Dirichlet columns were moved to the right-hand side.
    const Eigen::MatrixXd M = Eigen::MatrixXd(sys.matrix);
    for (std::size_t j = 0; j < a.dirichlet_mask().size(); ++j) {
        if (a.dirichlet_mask()[j]) {
            EXPECT_EQ(M.col(j).cwiseAbs().sum(), 1.0);
        }
    }
}

TEST(Assembly, CondensedAndFullStepsAgree)
{
    auto mesh = square(5);
    const Assembler a(make_spec(mesh, BinghamProduct{1.0, 0.5}, 0.01, 0.01, [](const Vec2& x) {
        return Vec2(x.y() * (1.0 - x.y()), 0.0);
    }));
    const State s = random_state(mesh, 11);
    const Eigen::VectorXd r = a.residual(s);
    const Eigen::VectorXd full = newton_step(a, s, r, LinearStrategy::Full);
    const Eigen::VectorXd cond = newton_step(a, s, r, LinearStrategy::CondenseStress);
    EXPECT_LT((full - cond).norm(), 1e-9 * full.norm());
    EXPECT_LT((a.raw_jacobian(s) * full + r).norm(), 1e-9 * r.norm());
}

TEST(Assembly, TimeStepReplacesRatherThanAccumulates)
{
    auto mesh = square(2);
    ProblemSpec spec = make_spec(mesh, Newtonian{0.5}, 0.0, 0.0);
    spec.body_force = Eigen::VectorXd::Constant(18, 1.0);
    const Eigen::VectorXd u1 = Eigen::VectorXd::Constant(18, 2.0);
    const Eigen::VectorXd u2 = Eigen::VectorXd::Constant(18, -1.0);
    const ProblemSpec s1 = apply_time_step(spec, u1, 5e-4);
    EXPECT_DOUBLE_EQ(s1.alpha, 2000.0);
    EXPECT_TRUE(effective_body_force(s1).isApprox(Eigen::VectorXd::Constant(18, 1.0 + 4000.0)));
    const ProblemSpec s2 = apply_time_step(s1, u2, 5e-4);
    EXPECT_DOUBLE_EQ(s2.alpha, 2000.0);
    EXPECT_TRUE(effective_body_force(s2).isApprox(Eigen::VectorXd::Constant(18, 1.0 - 2000.0)));
    EXPECT_THROW(apply_time_step(spec, u1, 0.0), std::invalid_argument);
    EXPECT_THROW(apply_time_step(spec, Eigen::VectorXd::Zero(3), 1e-3), std::invalid_argument);
}

TEST(Assembly, SteadyStateOfTimeStepIsUnchanged)
{
    // u_old equal to the steady solution makes the time-stepped residual vanish as well.
    auto mesh = square(4);
    const auto wall = [](const Vec2& x) { return Vec2(x.y(), 0.0); };
    const ProblemSpec steady = make_spec(mesh, Newtonian{0.5}, 0.0, 0.0, wall);
    const Assembler a(steady);
    State s(mesh);
    const SparseSystem sys = a.jacobian(s);
    s.coeffs += solve(factorise(sys), sys.rhs);
    const Assembler b(apply_time_step(steady, s.velocity_block(), 1e-3));
    EXPECT_LT(b.residual(s).norm(), 1e-10);
}

TEST(Assembly, ValidationErrors)
{
    auto mesh = square(2);
    ProblemSpec ok = make_spec(mesh, Newtonian{0.5}, 0.0, 0.0);
    EXPECT_NO_THROW(validate(ok));
    ProblemSpec missing = ok;
    missing.dirichlet.clear();
    EXPECT_THROW(validate(missing), std::invalid_argument);
    ProblemSpec neg = ok;
    neg.alpha = -1.0;
    EXPECT_THROW(validate(neg), std::invalid_argument);
    ProblemSpec badf = ok;
    badf.body_force = Eigen::VectorXd::Zero(5);
    EXPECT_THROW(validate(badf), std::invalid_argument);
    ProblemSpec nomesh = ok;
    nomesh.mesh.reset();
    EXPECT_THROW(validate(nomesh), std::invalid_argument);

    const Assembler a(ok);
    State wrong(square(3));
    EXPECT_THROW(a.residual(wrong), std::invalid_argument);
}
