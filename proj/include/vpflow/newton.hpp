#ifndef VPFLOW_NEWTON_HPP
#define VPFLOW_NEWTON_HPP

#include "vpflow/assembly.hpp"
#include "vpflow/spaces.hpp"

#include <functional>
#include <iosfwd>
#include <string>
#include <vector>

namespace vpflow {

struct NewtonReport {
    /// Euclidean residual norm of every iterate, starting with the initial guess.
    std::vector<double> residual_norms;
    bool converged = false;
    int iterations = 0;
    /// Regularisation parameter of the stage (continuation runs only).
    double epsilon = 0.0;
    /// Reason for stopping early; empty when converged or out of iterations.
    std::string failure;
    /// Elements of the final iterate on a spurious product-form root.
    std::size_t spurious_elements = 0;
};

enum class WarmStart { Reuse, Extrapolate };

struct ContinuationSchedule {
    std::vector<double> epsilons;
    WarmStart warm_start = WarmStart::Reuse;
};

/// Throws std::invalid_argument unless the epsilons are positive and strictly decreasing.
void validate(const ContinuationSchedule& schedule);

/// The four-stage schedule 0.5, 0.0166, 0.001, 0.0001.
ContinuationSchedule default_schedule(WarmStart mode = WarmStart::Reuse);

/// Scale in (0, 1] applied to the Newton step of iteration `k` whose
/// starting residual is `residual_norm`. Unset means full steps.
using DampingHook = std::function<double(int k, double residual_norm)>;

enum class LinearStrategy {
    /// Factorise the full [S | u | p | lambda] system.
    Full,
    /// Eliminate the element-local stress unknowns first.
    CondenseStress,
};

struct NewtonOptions {
    double tolerance = 1e-9;
    int max_iterations = 50;
    DampingHook damping;
    LinearStrategy linear = LinearStrategy::CondenseStress;
    /// Halve the step (at most this many times) until the residual norm
    /// decreases; 0 keeps full steps. Applied after `damping`.
    int max_backtracks = 0;
    /// Spurious product-form roots are absorbing for Newton. When the limit
    /// has some, their stress is moved to the admissible pointwise root and
    /// the iteration resumes, at most this many times. A resumed iteration
    /// that fails returns the limit reached before the restart.
    int spurious_restarts = 0;
};

struct NewtonResult {
    State state;
    NewtonReport report;
};

/// Number of elements whose (S, D(u)) lies on a spurious product-form root.
std::size_t count_spurious_elements(const ProblemSpec& spec, const State& state);

/// Replaces the stress of every element on a spurious root by the admissible
/// root of the pointwise relation at the same strain rate; returns the count.
std::size_t reset_spurious_stress(const ProblemSpec& spec, State& state);

/// Solution of the same problem with the Newtonian relation of matching
/// viscosity; a starting point away from the spurious roots.
State newtonian_initial_guess(const ProblemSpec& spec);

/// Semismooth Newton iteration with the generalised Jacobian selection.
/// Stops once the residual norm drops below the tolerance. A failed linear
/// solve throws SolverError naming the iteration; a non-finite residual
/// stops the iteration with `failure` set. Limits on spurious product-form
/// roots count as converged and are reported in `spurious_elements`.
NewtonResult solve_newton(const ProblemSpec& spec, const State& init, const NewtonOptions& options = {});

NewtonResult solve_newton(const ProblemSpec& spec, const State& init, double tolerance, int max_iterations);

/// One Newton correction delta with M(x) delta = -F(x), Dirichlet rows
/// included. Both strategies return the same step up to rounding.
Eigen::VectorXd newton_step(const Assembler& assembler, const State& state, const Eigen::VectorXd& residual,
                            LinearStrategy strategy);

struct ContinuationResult {
    State state;
    std::vector<NewtonReport> reports;
    bool converged = false;
};

/// Called after every converged continuation stage.
using StageObserver = std::function<void(const NewtonReport& report, const State& state)>;

/// Solves the symmetric regularisation G(S - eps D, D - eps S) for every
/// epsilon of the schedule, warm-starting each stage. The first stage starts
/// from `init`. Stops at the first failed stage.
ContinuationResult solve_continuation(const ProblemSpec& base, const ContinuationSchedule& schedule,
                                      const State& init, const NewtonOptions& options = {},
                                      const StageObserver& observer = {});

/// Warm start z2 + (eps - eps2)/(eps2 - eps1) (z2 - z1) from the last two stages.
Eigen::VectorXd extrapolate(const Eigen::VectorXd& z1, double eps1, const Eigen::VectorXd& z2, double eps2,
                            double eps);

/// CSV with header "iteration,residual".
void write_residual_history(std::ostream& out, const NewtonReport& report);

} // namespace vpflow

#endif // VPFLOW_NEWTON_HPP
