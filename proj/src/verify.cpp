#include "vpflow/verify.hpp"

#include "vpflow/assembly.hpp"
#include "vpflow/mesh.hpp"
#include "vpflow/newton.hpp"
#include "vpflow/postprocess.hpp"

#include <Eigen/Dense>

#include <cmath>
#include <memory>
#include <random>
#include <sstream>

namespace vpflow {

namespace {

PropertyResult result(std::string name, bool passed, const std::ostringstream& detail)
{
    return {std::move(name), passed, detail.str()};
}

SymTensor2 random_tensor(std::mt19937& rng, double scale)
{
    std::normal_distribution<double> n(0.0, scale);
    return {n(rng), n(rng), n(rng)};
}

Eigen::Matrix2d full(const SymTensor2& t)
{
    Eigen::Matrix2d m;
    m << t.xx, t.xy, t.xy, t.yy;
    return m;
}

std::vector<ConstitutiveModel> all_models()
{
    return {Newtonian{0.7},
            PowerLaw{1.3, 1.6},
            BinghamProduct{1.0, 0.5},
            BinghamMax{1.0, 0.5},
            BinghamProjection{1.0, 0.5},
            HerschelBulkley{1.0, 0.5, 1.7}};
}

double yield_stress_of(const ConstitutiveModel& model)
{
    return std::visit(
        [](const auto& m) -> double {
            if constexpr (requires { m.yield_stress; }) {
                return m.yield_stress;
            } else {
                return 0.0;
            }
        },
        model);
}

// Relation written on full 2x2 matrices.
Eigen::Matrix2d reference_g(const ConstitutiveModel& model, const Eigen::Matrix2d& s, const Eigen::Matrix2d& t)
{
    const double ns = s.norm();
    const double nt = t.norm();
    auto pos = [](double x) { return x > 0.0 ? x : 0.0; };
    if (const auto* m = std::get_if<Newtonian>(&model)) {
        return s - 2.0 * m->nu * t;
    }
    if (const auto* m = std::get_if<PowerLaw>(&model)) {
        return s - m->consistency * (nt > 0.0 ? std::pow(nt, m->r - 2.0) : 0.0) * t;
    }
    if (const auto* m = std::get_if<BinghamProduct>(&model)) {
        return nt * s - (m->yield_stress + 2.0 * m->nu * nt) * t;
    }
    if (const auto* m = std::get_if<BinghamMax>(&model)) {
        const double p = pos(ns - m->yield_stress);
        return p * s - 2.0 * m->nu * (m->yield_stress + p) * t;
    }
    if (const auto* m = std::get_if<BinghamProjection>(&model)) {
        const double p = pos(ns - m->yield_stress);
        return (ns > 0.0 ? p / ns : 0.0) * s - 2.0 * m->nu * t;
    }
    const auto& m = std::get<HerschelBulkley>(model);
    return nt * s - (m.yield_stress + 2.0 * m.nu * std::pow(nt, m.r - 1.0)) * t;
}

std::shared_ptr<const Mesh> unit_square(int n)
{
    return std::make_shared<const Mesh>(build_rectangle({0, 0}, {1, 1}, n, n));
}

ProblemSpec square_problem(std::shared_ptr<const Mesh> mesh, ConstitutiveModel model, double eps,
                           VelocityFunction wall)
{
    ProblemSpec spec;
    spec.mesh = std::move(mesh);
    spec.reg = RegularizedModel::symmetric(std::move(model), eps);
    spec.dirichlet[BoundaryTag::Wall] = std::move(wall);
    return spec;
}

State random_state(std::shared_ptr<const Mesh> mesh, std::mt19937& rng)
{
    State s(std::move(mesh));
    std::normal_distribution<double> n(0.0, 1.0);
    for (Eigen::Index i = 0; i < s.coeffs.size(); ++i) {
        s.coeffs[i] = n(rng);
    }
    return s;
}

const char* const kGoldenVtk = "# vtk DataFile Version 3.0\n"
                               "vpflow\n"
                               "ASCII\n"
                               "DATASET UNSTRUCTURED_GRID\n"
                               "POINTS 4 double\n"
                               "0 0 0\n"
                               "1 0 0\n"
                               "1 1 0\n"
                               "0 1 0\n"
                               "CELLS 2 8\n"
                               "3 0 1 2\n"
                               "3 0 2 3\n"
                               "CELL_TYPES 2\n"
                               "5\n"
                               "5\n"
                               "POINT_DATA 4\n"
                               "SCALARS p double 1\n"
                               "LOOKUP_TABLE default\n"
                               "0\n"
                               "0.5\n"
                               "0\n"
                               "0.125\n"
                               "VECTORS velocity double\n"
                               "1 0 0\n"
                               "0.25 -1 0\n"
                               "0 0 0\n"
                               "0 0 0\n"
                               "CELL_DATA 2\n"
                               "SCALARS plug double 1\n"
                               "LOOKUP_TABLE default\n"
                               "1\n"
                               "0\n";

} // namespace

PropertyResult check_constitutive_jacobian(unsigned seed, int samples, const JacobianSelector& selector)
{
    std::mt19937 rng(seed);
    const double h = 1e-6;
    double worst = 0.0;
    std::string worst_model;
    for (const auto& model : all_models()) {
        const double ts = yield_stress_of(model);
        int checked = 0;
        while (checked < samples) {
            const SymTensor2 s = random_tensor(rng, 1.5);
            const SymTensor2 t = random_tensor(rng, 1.0);
            if (norm(t) < 1e-2 || norm(s) < 1e-2 || std::abs(norm(s) - ts) < 1e-2) {
                continue;
            }
            ++checked;
            const JacobianPair j = selector(model, s, t);
            Eigen::Matrix3d d1, d2;
            for (int c = 0; c < 3; ++c) {
                Eigen::Vector3d e = Eigen::Vector3d::Zero();
                e[c] = h;
                const SymTensor2 de = SymTensor2::from_vector(e);
                d1.col(c) = (eval_g(model, s + de, t).as_vector() - eval_g(model, s - de, t).as_vector()) / (2 * h);
                d2.col(c) = (eval_g(model, s, t + de).as_vector() - eval_g(model, s, t - de).as_vector()) / (2 * h);
            }
            const double scale = std::max(1.0, d1.norm() + d2.norm());
            const double err = ((j.d1.matrix() - d1).norm() + (j.d2.matrix() - d2).norm()) / scale;
            if (err > worst) {
                worst = err;
                worst_model = std::string(model_name(model));
            }
        }
    }
    std::ostringstream d;
    d << "max relative error " << worst << " (" << worst_model << ")";
    return result("constitutive Jacobian vs finite differences", worst <= 1e-6, d);
}

PropertyResult check_assembled_jacobian(unsigned seed, int states)
{
    std::mt19937 rng(seed);
    auto mesh = unit_square(4);
    const std::vector<ConstitutiveModel> models = {BinghamProduct{1.0, 0.5}, BinghamProjection{0.3, 0.5},
                                                   HerschelBulkley{0.5, 0.5, 1.6}};
    const double h = 1e-6;
    double worst = 0.0;
    for (int k = 0; k < states; ++k) {
        const ConstitutiveModel& model = models[static_cast<std::size_t>(k) % models.size()];
        const Assembler a(square_problem(mesh, model, 0.01, [](const Vec2& x) { return Vec2(x.y(), 0.0); }));
        const State x = random_state(mesh, rng);
        const State v = random_state(mesh, rng);
        State xp = x, xm = x;
        xp.coeffs += h * v.coeffs;
        xm.coeffs -= h * v.coeffs;
        const Eigen::VectorXd fd = (a.residual(xp) - a.residual(xm)) / (2.0 * h);
        const Eigen::VectorXd jv = a.raw_jacobian(x) * v.coeffs;
        worst = std::max(worst, (fd - jv).norm() / std::max(1.0, jv.norm()));
    }
    std::ostringstream d;
    d << states << " states, max relative error " << worst;
    return result("assembled Jacobian vs directional differences", worst <= 1e-6, d);
}

PropertyResult check_monotonicity(unsigned seed, const std::vector<ConstitutiveModel>& models,
                                  const std::vector<double>& epsilons, int pairs)
{
    std::mt19937 rng(seed);
    std::uniform_real_distribution<double> logmag(-4.0, 1.0);
    int violations = 0;
    double worst = 0.0;
    for (const auto& model : models) {
        for (double eps : epsilons) {
            const RegularizedModel reg = RegularizedModel::symmetric(model, eps);
            const double c = eps / (1.0 + eps * eps);
            auto sample = [&] {
                SymTensor2 D = random_tensor(rng, 1.0);
                D *= std::pow(10.0, logmag(rng)) / norm(D);
                return std::pair{solve_pointwise_stress(reg, D), D};
            };
            for (int i = 0; i < pairs; ++i) {
                const auto [S1, D1] = sample();
                const auto [S2, D2] = sample();
                const SymTensor2 dS = S1 - S2, dD = D1 - D2;
                const double rhs = c * (contract(dS, dS) + contract(dD, dD));
                const double lhs = contract(dS, dD);
                // Equality holds for pairs inside the plug, so allow rounding.
                if (lhs < rhs * (1.0 - 1e-9) - 1e-14) {
                    ++violations;
                    worst = std::max(worst, (rhs - lhs) / std::max(rhs, 1e-300));
                }
            }
        }
    }
    std::ostringstream d;
    d << pairs * static_cast<int>(models.size() * epsilons.size()) << " pairs, " << violations << " violations";
    if (violations > 0) {
        d << ", worst relative shortfall " << worst;
    }
    return result("regularised graph strong monotonicity", violations == 0, d);
}

PropertyResult check_mesh_invariants()
{
    std::ostringstream d;
    bool ok = true;
    auto expect = [&](bool cond, const std::string& what) {
        if (!cond && ok) {
            d << what;
            ok = false;
        }
    };
    const Mesh rect = build_rectangle({0, 0}, {4, 2}, 8, 4);
    expect(check_mesh(rect).empty(), "rectangle failed mesh checks");
    expect(std::abs(total_area(rect) - 8.0) < 1e-12, "rectangle area");
    const Mesh fine = refine_uniform(rect, 2);
    expect(check_mesh(fine).empty(), "refined rectangle failed mesh checks");
    expect(fine.num_triangles() == 16 * rect.num_triangles(), "refinement triangle count");
    expect(std::abs(fine.h_max - rect.h_max / 4.0) < 1e-12, "refinement mesh size");
    const Mesh channel = build_channel(3.0, 0.2, 1.2, 5);
    expect(check_mesh(channel).empty(), "channel failed mesh checks");
    expect(std::abs(total_area(channel) - 24.0) < 1e-10, "channel area");
    const Mesh graded = build_channel_graded(3.0, 0.2, 1.2, ChannelGrading{});
    expect(check_mesh(graded).empty(), "graded channel failed mesh checks");
    expect(std::abs(total_area(graded) - 24.0) < 1e-10, "graded channel area");
    if (ok) {
        d << "rectangle, refinement, channel and graded channel consistent";
    }
    return result("mesh invariants", ok, d);
}

PropertyResult check_tensor_contraction(unsigned seed)
{
    std::mt19937 rng(seed);
    double worst = 0.0;
    for (int i = 0; i < 1000; ++i) {
        const SymTensor2 a = random_tensor(rng, 2.0), b = random_tensor(rng, 2.0), t = random_tensor(rng, 2.0);
        const double want = (full(a).array() * full(b).array()).sum();
        worst = std::max(worst, std::abs(contract(a, b) - want) / (1.0 + std::abs(want)));
        // (a (x) b) t = a (b : t)
        const Eigen::Matrix2d got = full(outer(a, b)(t));
        const Eigen::Matrix2d ref = full(a) * (full(b).array() * full(t).array()).sum();
        worst = std::max(worst, (got - ref).norm() / (1.0 + ref.norm()));
    }
    std::ostringstream d;
    d << "max relative error " << worst;
    return result("tensor contraction oracle", worst <= 1e-14, d);
}

PropertyResult check_constitutive_oracles(unsigned seed)
{
    std::mt19937 rng(seed);
    double worst = 0.0;
    for (const auto& model : all_models()) {
        for (int i = 0; i < 200; ++i) {
            const SymTensor2 s = random_tensor(rng, 1.5), t = random_tensor(rng, 1.0);
            const Eigen::Matrix2d ref = reference_g(model, full(s), full(t));
            worst = std::max(worst, (full(eval_g(model, s, t)) - ref).norm() / (1.0 + ref.norm()));
        }
    }
    const SymTensor2 g = eval_g(BinghamProduct{1.0, 0.5}, {2.0, -2.0, 0.0}, {1.0, -1.0, 0.0});
    const double r2 = std::sqrt(2.0);
    const bool example = std::abs(g.xx - (r2 - 1.0)) < 1e-14 && std::abs(g.yy - (1.0 - r2)) < 1e-14 && g.xy == 0.0;
    std::ostringstream d;
    d << "max relative error " << worst << (example ? "" : "; product-form example mismatch");
    return result("constitutive relations vs matrix formulas", worst <= 1e-12 && example, d);
}

PropertyResult check_zero_is_root()
{
    std::ostringstream d;
    bool ok = true;
    for (const auto& model : all_models()) {
        for (double eps : {0.5, 1e-4}) {
            const double n = norm(eval_g_reg(RegularizedModel::symmetric(model, eps), {}, {}));
            if (n != 0.0) {
                ok = false;
                d << model_name(model) << " eps=" << eps << " |G|=" << n << "; ";
            }
        }
    }
    if (ok) {
        d << "G_eps(0, 0) = 0 for every model";
    }
    return result("zero stress at zero strain rate", ok, d);
}

PropertyResult check_pointwise_solve(unsigned seed)
{
    std::mt19937 rng(seed);
    const double ts = 1.0, nu = 0.5;
    double worst = 0.0;
    for (const ConstitutiveModel& model : {ConstitutiveModel{BinghamProduct{ts, nu}},
                                           ConstitutiveModel{BinghamMax{ts, nu}},
                                           ConstitutiveModel{BinghamProjection{ts, nu}}}) {
        for (double eps : {0.5, 0.0166, 1e-3, 1e-4}) {
            const RegularizedModel reg = RegularizedModel::symmetric(model, eps);
            for (int i = 0; i < 20; ++i) {
                const SymTensor2 D = random_tensor(rng, 1.0);
                const double d = norm(D);
                // Yielded branch: S parallel to D with this magnitude.
                const double s = (ts + 2.0 * nu * d + eps * d) / (1.0 + 2.0 * nu * eps);
                if (d - eps * s < 1e-3) {
                    continue;
                }
                const SymTensor2 S = solve_pointwise_stress(reg, D);
                worst = std::max(worst, norm(S - (s / d) * D) / s);
            }
        }
    }
    std::ostringstream d;
    d << "max relative deviation from the radial solution " << worst;
    return result("pointwise stress solve vs radial oracle", worst <= 1e-9, d);
}

PropertyResult check_newtonian_one_iteration()
{
    auto mesh = std::make_shared<const Mesh>(build_rectangle({0, -1}, {4, 2}, 16, 8));
    const ProblemSpec spec =
        square_problem(mesh, Newtonian{0.5}, 1e-3, [](const Vec2& x) { return Vec2(1.0 - x.y() * x.y(), 0.0); });
    const NewtonResult r = solve_newton(spec, State(mesh), 1e-9, 5);
    std::ostringstream d;
    d << "iterations " << r.report.iterations << ", final residual " << r.report.residual_norms.back();
    return result("Newtonian problem converges in one iteration", r.report.converged && r.report.iterations == 1, d);
}

PropertyResult check_assembly_invariants(unsigned seed)
{
    std::mt19937 rng(seed);
    std::ostringstream d;
    bool ok = true;
    auto mesh = unit_square(4);
    const double nu = 0.7;
    const auto affine = [](const Vec2& x) { return Vec2(x.x(), -x.y()); };
    {
        const Assembler a(square_problem(mesh, Newtonian{nu}, 0.0, affine));
        State s(mesh);
        s.velocity_block() = interpolate_velocity(*mesh, affine);
        for (std::size_t t = 0; t < mesh->num_triangles(); ++t) {
            s.set_stress(t, SymTensor2{2.0 * nu, -2.0 * nu, 0.0});
        }
        const double r = a.residual(s).lpNorm<Eigen::Infinity>();
        if (r > 1e-12) {
            ok = false;
            d << "affine Newtonian flow residual " << r << "; ";
        }
    }
    {
        const Assembler a(square_problem(mesh, BinghamProduct{1.0, 0.5}, 0.01, affine));
        const Eigen::MatrixXd J = Eigen::MatrixXd(a.raw_jacobian(random_state(mesh, rng)));
        const DofLayout& l = a.layout();
        double asym = 0.0;
        for (std::size_t i = l.velocity_offset(); i < l.pressure_offset(); ++i) {
            if (a.dirichlet_mask()[i]) {
                const auto ii = static_cast<Eigen::Index>(i);
                if (J.row(ii).cwiseAbs().sum() != 1.0 || J(ii, ii) != 1.0) {
                    ok = false;
                    d << "Dirichlet row " << i << " is not an identity row; ";
                }
                continue;
            }
            for (std::size_t j = l.pressure_offset(); j < l.total(); ++j) {
                asym = std::max(asym, std::abs(J(i, j) - J(j, i)));
            }
        }
        if (asym > 1e-13) {
            ok = false;
            d << "velocity-pressure coupling asymmetric by " << asym << "; ";
        }
    }
    if (ok) {
        d << "affine flow is a root; Dirichlet rows identity; divergence blocks transposed";
    }
    return result("assembly invariants", ok, d);
}

PropertyResult check_vtk_golden()
{
    auto mesh = std::make_shared<Mesh>();
    mesh->vertices = {Vec2(0, 0), Vec2(1, 0), Vec2(1, 1), Vec2(0, 1)};
    mesh->triangles = {{0, 1, 2}, {0, 2, 3}};
    mesh->boundary_edges = {
        {{0, 1}, BoundaryTag::Wall}, {{1, 2}, BoundaryTag::Wall}, {{2, 3}, BoundaryTag::Lid}, {{3, 0}, BoundaryTag::Wall}};
    FieldSnapshot snap;
    snap.mesh = mesh;
    snap.add_point_scalar("p", Eigen::Vector4d(0.0, 0.5, -0.0, 0.125));
    Eigen::VectorXd u(8);
    u << 1, 0, 0.25, -1, 0, 0, 0, 0;
    snap.add_point_vector("velocity", u);
    snap.add_cell_scalar("plug", {1.0, 0.0});
    std::ostringstream a, b;
    write_vtk(snap, a);
    write_vtk(snap, b);
    const bool match = a.str() == kGoldenVtk;
    std::ostringstream d;
    d << (match ? "output matches the golden file" : "output differs from the golden file");
    if (a.str() != b.str()) {
        d << "; repeated writes differ";
    }
    return result("VTK golden file", match && a.str() == b.str(), d);
}

std::vector<PropertyResult> run_property_suite(unsigned seed)
{
    return {
        check_mesh_invariants(),
        check_tensor_contraction(seed),
        check_constitutive_oracles(seed),
        check_zero_is_root(),
        check_pointwise_solve(seed),
        check_constitutive_jacobian(seed),
        check_assembled_jacobian(seed),
        check_monotonicity(seed, {BinghamProduct{1.0, 0.5}, HerschelBulkley{1.0, 0.5, 1.7}}, {0.5, 0.01}),
        check_assembly_invariants(seed),
        check_newtonian_one_iteration(),
        check_vtk_golden(),
    };
}

} // namespace vpflow
