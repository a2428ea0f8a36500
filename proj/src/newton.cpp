#include "vpflow/newton.hpp"

#include "vpflow/errors.hpp"
#include "vpflow/linsolve.hpp"

#include <Eigen/LU>
#include <spdlog/spdlog.h>

#include <cmath>
#include <ostream>
#include <stdexcept>
#include <string>

namespace vpflow {

namespace {

// Schur complement of the block-diagonal stress block. Returns false if a
// stress block is numerically singular.
bool condensed_solve(const SparseSystem& sys, Eigen::Index n_stress, Eigen::VectorXd& delta)
{
    using SpMat = Eigen::SparseMatrix<double>;
    const Eigen::Index n = sys.matrix.rows();
    const Eigen::Index n_rest = n - n_stress;

    SpMat a_ss = sys.matrix.topLeftCorner(n_stress, n_stress);
    const SpMat a_sr = sys.matrix.topRightCorner(n_stress, n_rest);
    const SpMat a_rs = sys.matrix.bottomLeftCorner(n_rest, n_stress);
    const SpMat a_rr = sys.matrix.bottomRightCorner(n_rest, n_rest);

    std::vector<Eigen::Triplet<double>> inv;
    inv.reserve(static_cast<std::size_t>(3 * n_stress));
    for (Eigen::Index k = 0; k < n_stress; k += 3) {
        Eigen::Matrix3d block = Eigen::Matrix3d::Zero();
        for (int j = 0; j < 3; ++j) {
            for (SpMat::InnerIterator it(a_ss, k + j); it; ++it) {
                block(it.row() - k, j) = it.value();
            }
        }
        Eigen::FullPivLU<Eigen::Matrix3d> lu(block);
        if (!lu.isInvertible()) {
            return false;
        }
        const Eigen::Matrix3d block_inv = lu.inverse();
        for (int i = 0; i < 3; ++i) {
            for (int j = 0; j < 3; ++j) {
                inv.emplace_back(static_cast<int>(k + i), static_cast<int>(k + j), block_inv(i, j));
            }
        }
    }
    SpMat a_ss_inv(n_stress, n_stress);
    a_ss_inv.setFromTriplets(inv.begin(), inv.end());

    const SpMat coupling = a_rs * a_ss_inv;
    SpMat schur = a_rr - SpMat(coupling * a_sr);
    schur.prune(0.0);
    const Eigen::VectorXd b_s = sys.rhs.head(n_stress);
    const Eigen::VectorXd b_r = sys.rhs.tail(n_rest) - coupling * b_s;

    const Eigen::VectorXd x_r = factorise(schur).solve(b_r);
    delta.resize(n);
    delta.tail(n_rest) = x_r;
    delta.head(n_stress) = a_ss_inv * (b_s - a_sr * x_r);
    return true;
}

} // namespace

void validate(const ContinuationSchedule& schedule)
{
    if (schedule.epsilons.empty()) {
        throw std::invalid_argument("continuation schedule is empty");
    }
    for (std::size_t i = 0; i < schedule.epsilons.size(); ++i) {
        if (!(schedule.epsilons[i] > 0.0)) {
            throw std::invalid_argument("continuation schedule: epsilons must be positive");
        }
        if (i > 0 && !(schedule.epsilons[i] < schedule.epsilons[i - 1])) {
            throw std::invalid_argument("continuation schedule: epsilons must be strictly decreasing");
        }
    }
}

ContinuationSchedule default_schedule(WarmStart mode) { return {{0.5, 0.0166, 0.001, 0.0001}, mode}; }

Eigen::VectorXd newton_step(const Assembler& assembler, const State& state, const Eigen::VectorXd& residual,
                            LinearStrategy strategy)
{
    const SparseSystem sys = assembler.jacobian(state, residual);
    Eigen::VectorXd delta;
    if (strategy == LinearStrategy::CondenseStress &&
        condensed_solve(sys, static_cast<Eigen::Index>(assembler.layout().n_stress), delta)) {
        return delta;
    }
    return factorise(sys).solve(sys.rhs);
}

std::size_t count_spurious_elements(const ProblemSpec& spec, const State& state)
{
    std::size_t count = 0;
    for (std::size_t k = 0; k < state.mesh->num_triangles(); ++k) {
        if (on_spurious_branch(spec.reg, state.stress(k), sym_gradient(state, k))) {
            ++count;
        }
    }
    return count;
}

std::size_t reset_spurious_stress(const ProblemSpec& spec, State& state)
{
    std::size_t count = 0;
    for (std::size_t k = 0; k < state.mesh->num_triangles(); ++k) {
        const SymTensor2 D = sym_gradient(state, k);
        if (on_spurious_branch(spec.reg, state.stress(k), D)) {
            try {
                state.set_stress(k, solve_pointwise_stress(spec.reg, D, state.stress(k)));
                ++count;
            } catch (const SolverError&) {
                // Leave the element to the Newton iteration.
            }
        }
    }
    return count;
}

State newtonian_initial_guess(const ProblemSpec& spec)
{
    ProblemSpec linear = spec;
    linear.reg.base = Newtonian{viscous_part(spec.reg.base)};
    const Assembler assembler(linear);
    State x(spec.mesh);
    const Eigen::VectorXd r = assembler.residual(x);
    x.coeffs += newton_step(assembler, x, r, LinearStrategy::CondenseStress);
    return x;
}

NewtonResult solve_newton(const ProblemSpec& spec, const State& init, const NewtonOptions& options)
{
    if (!(options.tolerance > 0.0)) {
        throw std::invalid_argument("solve_newton: tolerance must be positive");
    }
    if (options.max_iterations < 0 || options.max_backtracks < 0 || options.spurious_restarts < 0) {
        throw std::invalid_argument("solve_newton: iteration limits must be non-negative");
    }
    const Assembler assembler(spec);
    NewtonResult result{init, {}};
    State& x = result.state;
    NewtonReport& report = result.report;

    Eigen::VectorXd r = assembler.residual(x);
    report.residual_norms.push_back(r.norm());
    auto finish_converged = [&] {
        report.converged = true;
        report.spurious_elements = count_spurious_elements(spec, x);
        if (report.spurious_elements > 0) {
            spdlog::warn("Newton limit lies on a spurious root of the relation on {} elements",
                         report.spurious_elements);
        }
        return result;
    };
    // Converged state from before the latest restart. A restart that does not
    // converge again returns to it, so restarts never turn success into failure.
    Eigen::VectorXd before_restart;
    double before_restart_residual = 0.0;
    auto fall_back = [&] {
        spdlog::debug("Newton restart did not converge; keeping the limit before it");
        x.coeffs = before_restart;
        report.residual_norms.push_back(before_restart_residual);
        report.failure.clear();
        return finish_converged();
    };
    int restarts = 0;
    for (int k = 0;; ++k) {
        double res = report.residual_norms.back();
        if (!std::isfinite(res)) {
            report.failure = "non-finite residual at iteration " + std::to_string(k);
            return before_restart.size() > 0 ? fall_back() : result;
        }
        if (res < options.tolerance && restarts < options.spurious_restarts && k < options.max_iterations) {
            const Eigen::VectorXd converged = x.coeffs;
            if (reset_spurious_stress(spec, x) > 0) {
                // The history keeps the residual after the reset.
                ++restarts;
                before_restart = converged;
                before_restart_residual = res;
                r = assembler.residual(x);
                res = r.norm();
                report.residual_norms.back() = res;
            }
        }
        if (res < options.tolerance) {
            return finish_converged();
        }
        if (k == options.max_iterations) {
            return before_restart.size() > 0 ? fall_back() : result;
        }
        Eigen::VectorXd delta;
        try {
            delta = newton_step(assembler, x, r, options.linear);
        } catch (const SolverError& e) {
            if (before_restart.size() > 0) {
                return fall_back();
            }
            throw SolverError("Newton iteration " + std::to_string(k + 1) + ": " + e.what());
        }
        double scale = options.damping ? options.damping(k, res) : 1.0;
        const Eigen::VectorXd base = x.coeffs;
        x.coeffs = base + scale * delta;
        r = assembler.residual(x);
        // Without a decrease after the last halving the smallest step is kept.
        for (int b = 0; b < options.max_backtracks && !(r.norm() < (1.0 - 1e-4 * scale) * res); ++b) {
            scale *= 0.5;
            x.coeffs = base + scale * delta;
            r = assembler.residual(x);
        }
        report.residual_norms.push_back(r.norm());
        report.iterations = k + 1;
        spdlog::debug("Newton iteration {}: residual {:.3e}", k + 1, report.residual_norms.back());
    }
}

NewtonResult solve_newton(const ProblemSpec& spec, const State& init, double tolerance, int max_iterations)
{
    NewtonOptions options;
    options.tolerance = tolerance;
    options.max_iterations = max_iterations;
    return solve_newton(spec, init, options);
}

Eigen::VectorXd extrapolate(const Eigen::VectorXd& z1, double eps1, const Eigen::VectorXd& z2, double eps2,
                            double eps)
{
    if (eps2 == eps1) {
        throw std::invalid_argument("extrapolate: coincident epsilons");
    }
    return z2 + ((eps - eps2) / (eps2 - eps1)) * (z2 - z1);
}

ContinuationResult solve_continuation(const ProblemSpec& base, const ContinuationSchedule& schedule,
                                      const State& init, const NewtonOptions& options,
                                      const StageObserver& observer)
{
    validate(schedule);
    if (std::holds_alternative<BinghamMax>(base.reg.base) && schedule.warm_start == WarmStart::Reuse &&
        schedule.epsilons.size() > 1) {
        spdlog::warn("the max-form Bingham relation usually needs extrapolated warm starts to converge");
    }

    ContinuationResult out{init, {}, false};
    Eigen::VectorXd z_older;
    Eigen::VectorXd z_last;
    for (std::size_t i = 0; i < schedule.epsilons.size(); ++i) {
        const double eps = schedule.epsilons[i];
        ProblemSpec spec = base;
        spec.reg = RegularizedModel::symmetric(base.reg.base, eps);

        State start = out.state;
        if (schedule.warm_start == WarmStart::Extrapolate && i >= 2) {
            start.coeffs = extrapolate(z_older, schedule.epsilons[i - 2], z_last, schedule.epsilons[i - 1], eps);
        }

        NewtonReport report;
        try {
            auto stage = solve_newton(spec, start, options);
            report = std::move(stage.report);
            if (report.converged) {
                out.state = std::move(stage.state);
            }
        } catch (const SolverError& e) {
            report.failure = e.what();
        }
        report.epsilon = eps;
        const bool ok = report.converged;
        if (!ok) {
            spdlog::warn("continuation stage eps = {:g} failed after {} iterations{}", eps, report.iterations,
                         report.failure.empty() ? std::string() : ": " + report.failure);
        }
        out.reports.push_back(std::move(report));
        if (!ok) {
            return out;
        }
        if (observer) {
            observer(out.reports.back(), out.state);
        }
        z_older = std::move(z_last);
        z_last = out.state.coeffs;
    }
    out.converged = true;
    return out;
}

void write_residual_history(std::ostream& out, const NewtonReport& report)
{
    out << "iteration,residual\n";
    out.precision(17);
    for (std::size_t k = 0; k < report.residual_norms.size(); ++k) {
        out << k << ',' << report.residual_norms[k] << '\n';
    }
}

} // namespace vpflow
