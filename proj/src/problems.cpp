#include "vpflow/problems.hpp"

#include "vpflow/errors.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>
#include <string>

namespace vpflow {

namespace {

constexpr double sqrt2 = std::numbers::sqrt2;

VelocityFunction constant_velocity(const Vec2& v)
{
    return [v](const Vec2&) { return v; };
}

double interpolate_at(const PointLocator& locator, const Mesh& mesh, const Eigen::VectorXd& nodal, const Vec2& x)
{
    std::size_t k = 0;
    std::array<double, 3> bary{};
    if (!locator.locate(x, k, bary)) {
        throw std::out_of_range("point (" + std::to_string(x.x()) + ", " + std::to_string(x.y()) +
                                ") lies outside the mesh");
    }
    const auto& t = mesh.triangles[k];
    return bary[0] * nodal[t[0]] + bary[1] * nodal[t[1]] + bary[2] * nodal[t[2]];
}

std::vector<double> schedule_to(const std::vector<double>& earlier, double eps)
{
    std::vector<double> out;
    for (double e : earlier) {
        if (e > eps) out.push_back(e);
    }
    out.push_back(eps);
    return out;
}

} // namespace

std::string_view to_string(BinghamForm form)
{
    switch (form) {
    case BinghamForm::Product: return "product";
    case BinghamForm::Max: return "max";
    case BinghamForm::Projection: return "projection";
    }
    return "unknown";
}

BinghamForm parse_bingham_form(std::string_view name)
{
    if (name == "product") return BinghamForm::Product;
    if (name == "max") return BinghamForm::Max;
    if (name == "projection") return BinghamForm::Projection;
    throw std::invalid_argument("unknown Bingham form '" + std::string(name) + "'");
}

ConstitutiveModel bingham_model(BinghamForm form, double yield_stress, double nu)
{
    switch (form) {
    case BinghamForm::Product: return BinghamProduct{yield_stress, nu};
    case BinghamForm::Max: return BinghamMax{yield_stress, nu};
    case BinghamForm::Projection: return BinghamProjection{yield_stress, nu};
    }
    throw std::invalid_argument("unknown Bingham form");
}

PoiseuilleExact poiseuille_exact(double yield_stress, const Vec2& x)
{
    const double y = std::abs(x.y());
    const double c = sqrt2 * yield_stress;
    const double u = y <= 0.5 ? c / 4.0 : c * (y - y * y);
    return {Vec2(u, 0.0), c * (16.0 - x.x())};
}

Eigen::Matrix2d poiseuille_exact_gradient(double yield_stress, const Vec2& x)
{
    const double y = x.y();
    Eigen::Matrix2d g = Eigen::Matrix2d::Zero();
    if (std::abs(y) > 0.5) {
        const double s = y > 0.0 ? 1.0 : -1.0;
        g(0, 1) = sqrt2 * yield_stress * (s - 2.0 * y);
    }
    return g;
}

ProblemSpec poiseuille_spec(const PoiseuilleCase& pc, std::shared_ptr<const Mesh> mesh, double eps)
{
    ProblemSpec spec;
    spec.mesh = std::move(mesh);
    spec.reg = RegularizedModel::symmetric(bingham_model(pc.form, pc.yield_stress), eps);
    const double tau = pc.yield_stress;
    spec.dirichlet[BoundaryTag::Wall] = [tau](const Vec2& x) { return poiseuille_exact(tau, x).velocity; };
    return spec;
}

PoiseuilleRecord run_poiseuille(const PoiseuilleCase& pc, int refinements, const ContinuationSchedule& schedule,
                                const NewtonOptions& options)
{
    if (refinements < 0) {
        throw std::invalid_argument("run_poiseuille: refinements must be non-negative");
    }
    validate(schedule);
    const double tau = pc.yield_stress;
    const VectorField exact_u = [tau](const Vec2& x) { return poiseuille_exact(tau, x).velocity; };
    const GradientField exact_grad = [tau](const Vec2& x) { return poiseuille_exact_gradient(tau, x); };
    const ScalarField exact_p = [tau](const Vec2& x) { return poiseuille_exact(tau, x).pressure; };

    PoiseuilleRecord record;
    for (int level = 0; level <= refinements; ++level) {
        const int scale = 1 << level;
        auto mesh = std::make_shared<const Mesh>(
            build_rectangle(Vec2(0.0, -1.0), Vec2(4.0, 2.0), pc.base_nx * scale, pc.base_ny * scale));
        PoiseuilleLevel out;
        out.level = level;
        out.h_max = mesh->h_max;
        out.dofs = DofLayout(*mesh).total();

        const ProblemSpec spec = poiseuille_spec(pc, mesh, schedule.epsilons.front());
        auto result = solve_continuation(spec, schedule, newtonian_initial_guess(spec), options,
                                         [&](const NewtonReport& report, const State& state) {
                                             out.stages.push_back({report.epsilon,
                                                                   error_l2_velocity(state, exact_u),
                                                                   error_h1_velocity(state, exact_grad),
                                                                   error_l2_pressure(state, exact_p), report});
                                         });
        if (!result.converged) {
            out.stages.push_back({result.reports.back().epsilon, 0.0, 0.0, 0.0, result.reports.back()});
            record.levels.push_back(std::move(out));
            return record;
        }
        const PointLocator locator(mesh);
        const Eigen::VectorXd u = result.state.velocity_block();
        const Eigen::VectorXd ux = Eigen::Map<const Eigen::VectorXd, 0, Eigen::InnerStride<2>>(
            u.data(), u.size() / 2);
        out.centre_velocity = interpolate_at(locator, *mesh, ux, Vec2(2.0, 0.0));
        out.state = std::move(result.state);
        out.converged = true;
        record.levels.push_back(std::move(out));
    }
    record.converged = true;
    return record;
}

VortexMetrics vortex_metrics(const Mesh& mesh, const Eigen::VectorXd& psi)
{
    if (psi.size() != static_cast<Eigen::Index>(mesh.num_vertices()) || psi.size() == 0) {
        throw std::invalid_argument("vortex_metrics: size does not match the mesh");
    }
    Eigen::Index best = 0;
    psi.cwiseAbs().maxCoeff(&best);
    return {std::abs(psi[best]), mesh.vertices[best].x(), mesh.vertices[best].y()};
}

CavityResult run_cavity(const CavityCase& cc, int refinements, const StepObserver& observer)
{
    if (refinements < 0) {
        throw std::invalid_argument("run_cavity: refinements must be non-negative");
    }
    if (!(cc.dt > 0.0) || !(cc.epsilon > 0.0) || cc.cells < 1) {
        throw std::invalid_argument("run_cavity: dt, epsilon and cells must be positive");
    }
    Mesh grid = build_rectangle(Vec2(0.0, 0.0), Vec2(1.0, 1.0), cc.cells << refinements, cc.cells << refinements);
    retag_boundary(grid, [](const Vec2& m) { return m.y() > 1.0 - 1e-12; }, BoundaryTag::Lid);
    auto mesh = std::make_shared<const Mesh>(std::move(grid));

    ProblemSpec steady;
    steady.mesh = mesh;
    steady.reg = RegularizedModel::symmetric(bingham_model(cc.form, cc.yield_stress), cc.epsilon);
    steady.dirichlet[BoundaryTag::Wall] = constant_velocity(Vec2(0.0, 0.0));
    steady.dirichlet[BoundaryTag::Lid] = constant_velocity(Vec2(1.0, 0.0));

    NewtonOptions options;
    options.tolerance = cc.newton_tolerance;
    options.max_iterations = cc.max_newton_iterations;
    options.max_backtracks = cc.max_backtracks;
    options.spurious_restarts = cc.spurious_restarts;
    const ContinuationSchedule fallback{schedule_to(cc.fallback, cc.epsilon), WarmStart::Reuse};
    const ContinuationSchedule per_step{schedule_to(cc.step_continuation, cc.epsilon), WarmStart::Reuse};
    NewtonOptions step_options = options;
    step_options.max_iterations = std::min(cc.step_iterations, cc.max_newton_iterations);

    CavityResult out;
    State state(mesh);
    for (int step = 1; step <= cc.max_steps; ++step) {
        const Eigen::VectorXd u_old = state.velocity_block();
        const ProblemSpec spec = apply_time_step(steady, u_old, cc.dt);
        if (step == 1) {
            state = newtonian_initial_guess(spec);
        }
        auto step_result = solve_continuation(spec, per_step, state, step_options);
        for (const auto& r : step_result.reports) {
            out.newton_iterations += r.iterations;
        }
        // Spurious elements persist across steps and slow every later one, so
        // a step ending on them also takes the fallback continuation.
        if (!step_result.converged || step_result.reports.back().spurious_elements > 0) {
            // Approach the target regularisation from the previous step.
            auto cont = solve_continuation(spec, fallback, state, options);
            if (!cont.converged) {
                throw SolverError("run_cavity: time step " + std::to_string(step) + " did not converge");
            }
            for (const auto& r : cont.reports) {
                out.newton_iterations += r.iterations;
            }
            state = std::move(cont.state);
        } else {
            state = std::move(step_result.state);
        }
        const double change = l2_norm_velocity(*mesh, state.velocity_block() - u_old);
        out.update_norms.push_back(change);
        out.steps = step;
        if (observer) {
            observer(step, change);
        }
        if (change < cc.steady_tolerance) {
            out.steady = true;
            break;
        }
    }
    out.stream = stream_function(state);
    const auto m = vortex_metrics(*mesh, out.stream);
    out.psi_max = m.psi_max;
    out.x_c = m.x_c;
    out.y_c = m.y_c;
    out.state = std::move(state);
    return out;
}

double InflowProfile::velocity(double y) const
{
    const double a = std::max(std::abs(y), plug);
    if (a >= 1.0) {
        return 0.0;
    }
    return gradient * (1.0 - a * a) - sqrt2 * yield_stress * (1.0 - a);
}

double InflowProfile::wall_strain_rate() const { return (2.0 * gradient - sqrt2 * yield_stress) / sqrt2; }

InflowProfile fixed_flux_profile(double yield_stress)
{
    if (!(yield_stress >= 0.0)) {
        throw std::invalid_argument("fixed_flux_profile: yield stress must be non-negative");
    }
    const double c = sqrt2 * yield_stress;
    // Flux through 0 <= y <= 1 at pressure gradient g.
    auto flux = [&](double g) {
        const double plug = std::min(yield_stress / (sqrt2 * g), 1.0);
        if (plug >= 1.0) return 0.0;
        const double u0 = g * (1.0 - plug * plug) - c * (1.0 - plug);
        const double yielded = g * ((1.0 - plug) - (1.0 - plug * plug * plug) / 3.0) - c * 0.5 * (1.0 - plug) * (1.0 - plug);
        return plug * u0 + yielded;
    };
    // No flow until the wall stress reaches the yield stress.
    double lo = std::max(0.5 * c, 1e-12);
    double hi = 2.0 * lo + 2.0;
    while (flux(hi) < 1.0) hi *= 2.0;
    for (int it = 0; it < 200 && hi - lo > 1e-15 * hi; ++it) {
        const double mid = 0.5 * (lo + hi);
        (flux(mid) < 1.0 ? lo : hi) = mid;
    }
    const double g = 0.5 * (lo + hi);
    return {yield_stress, g, yield_stress / (sqrt2 * g)};
}

ProblemSpec channel_spec(const ChannelCase& cc, std::shared_ptr<const Mesh> mesh)
{
    ProblemSpec spec;
    spec.mesh = std::move(mesh);
    spec.reg = RegularizedModel::symmetric(bingham_model(cc.form, cc.bn), cc.epsilon);
    const InflowProfile profile = fixed_flux_profile(cc.bn);
    const VelocityFunction inflow = [profile](const Vec2& x) { return Vec2(profile.velocity(x.y()), 0.0); };
    spec.dirichlet[BoundaryTag::Inflow] = inflow;
    spec.dirichlet[BoundaryTag::Outflow] = inflow;
    spec.dirichlet[BoundaryTag::Wall] = constant_velocity(Vec2(0.0, 0.0));
    return spec;
}

double dead_zone_length(const State& state, const ChannelCase& cc, double threshold)
{
    const Mesh& mesh = *state.mesh;
    const Eigen::VectorXd d = cell_to_vertex(mesh, strain_rate_norms(state));
    const PointLocator locator(state.mesh);
    const double x0 = -0.5 / cc.delta;
    const double y = 0.5 * (1.0 + cc.h);
    const double half = 0.5 / cc.delta;
    const int n = std::max(2, static_cast<int>(std::ceil(half / (0.25 * cc.grading.fine))));
    double prev_x = x0;
    double prev_v = interpolate_at(locator, mesh, d, Vec2(x0, y));
    if (prev_v >= threshold) {
        return 0.0;
    }
    for (int i = 1; i <= n; ++i) {
        const double x = x0 + half * i / n;
        const double v = interpolate_at(locator, mesh, d, Vec2(x, y));
        if (v >= threshold) {
            const double t = (threshold - prev_v) / (v - prev_v);
            return prev_x + t * (x - prev_x) - x0;
        }
        prev_x = x;
        prev_v = v;
    }
    return half;
}

double affine_r2(const std::vector<double>& x, const std::vector<double>& y)
{
    if (x.size() != y.size() || x.size() < 3) {
        throw std::invalid_argument("affine_r2: need at least three paired samples");
    }
    const auto n = static_cast<double>(x.size());
    double mx = 0.0, my = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        mx += x[i];
        my += y[i];
    }
    mx /= n;
    my /= n;
    double sxx = 0.0, sxy = 0.0, syy = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        sxx += (x[i] - mx) * (x[i] - mx);
        sxy += (x[i] - mx) * (y[i] - my);
        syy += (y[i] - my) * (y[i] - my);
    }
    if (syy == 0.0) {
        return 1.0;
    }
    return sxy * sxy / (sxx * syy);
}

ChannelResult run_channel(const ChannelCase& cc, int refinements)
{
    if (refinements < 0) {
        throw std::invalid_argument("run_channel: refinements must be non-negative");
    }
    if (!(cc.fit_margin >= 0.0) || !(2.0 * cc.fit_margin < cc.l_hat)) {
        throw std::invalid_argument("run_channel: fit_margin must leave part of the straight section");
    }
    auto mesh = std::make_shared<const Mesh>(
        refine_uniform(build_channel_graded(cc.l_hat, cc.delta, cc.h, cc.grading), refinements));
    const ProblemSpec spec = channel_spec(cc, mesh);

    NewtonOptions options;
    options.tolerance = cc.newton_tolerance;
    options.max_iterations = cc.max_newton_iterations;
    options.max_backtracks = cc.max_backtracks;
    options.spurious_restarts = cc.spurious_restarts;
    const ContinuationSchedule schedule{schedule_to(cc.continuation, cc.epsilon), WarmStart::Reuse};

    ChannelResult out;
    out.inflow = fixed_flux_profile(cc.bn);
    auto cont = solve_continuation(spec, schedule, newtonian_initial_guess(spec), options);
    out.reports = std::move(cont.reports);
    out.converged = cont.converged;
    if (!out.converged) {
        return out;
    }
    const State& state = cont.state;
    const double reference = out.inflow.wall_strain_rate();
    out.dead_zone_length = dead_zone_length(state, cc, cc.dead_zone_threshold * reference);
    out.dead_zone_length_coarse = dead_zone_length(state, cc, 10.0 * cc.dead_zone_threshold * reference);
    out.dead_zone_length_fine = dead_zone_length(state, cc, 0.1 * cc.dead_zone_threshold * reference);

    const double x_end = cc.l_hat + 0.5 / cc.delta;
    const double half_cavity = 0.5 / cc.delta;
    out.sample_height = 0.5 * (1.0 + out.inflow.plug);
    FieldSnapshot snap;
    snap.mesh = mesh;
    snap.add_point_scalar("pressure", state.pressure_block());
    out.pressure_line = sample_line(snap, Vec2(-x_end, out.sample_height), Vec2(x_end, out.sample_height),
                                    cc.pressure_samples);
    std::vector<double> xu, pu, xd, pd;
    for (std::size_t i = 0; i < out.pressure_line.points.size(); ++i) {
        const double x = out.pressure_line.points[i].x();
        const double p = out.pressure_line.values[0][i];
        if (x >= -x_end + cc.fit_margin && x <= -half_cavity - cc.fit_margin) {
            xu.push_back(x);
            pu.push_back(p);
        } else if (x >= half_cavity + cc.fit_margin && x <= x_end - cc.fit_margin) {
            xd.push_back(x);
            pd.push_back(p);
        }
    }
    out.upstream_r2 = affine_r2(xu, pu);
    out.downstream_r2 = affine_r2(xd, pd);
    out.state = cont.state;
    return out;
}

} // namespace vpflow
