#ifndef VPFLOW_ASSEMBLY_HPP
#define VPFLOW_ASSEMBLY_HPP

#include "vpflow/constitutive.hpp"
#include "vpflow/mesh.hpp"
#include "vpflow/spaces.hpp"

#include <Eigen/Core>
#include <Eigen/SparseCore>

#include <functional>
#include <map>
#include <memory>
#include <vector>

namespace vpflow {

using VelocityFunction = std::function<Vec2(const Vec2&)>;

/// Regularised three-field problem
///   alpha u - div S + grad p = f,  div u = 0,  G_eps(S, D(u)) = 0
/// with Dirichlet velocity data on every tagged boundary segment.
struct ProblemSpec {
    std::shared_ptr<const Mesh> mesh;
    RegularizedModel reg;
    double alpha = 0.0;
    /// Nodal body force in velocity-block ordering; empty means zero.
    Eigen::VectorXd body_force;
    /// Velocity of the previous implicit Euler step; when set, the momentum
    /// load is body_force + alpha * previous_velocity.
    Eigen::VectorXd previous_velocity;
    std::map<BoundaryTag, VelocityFunction> dirichlet;
    double stabilisation = 0.2;
};

/// Throws std::invalid_argument on a malformed spec.
void validate(const ProblemSpec& spec);

/// Assembled Newton system: Dirichlet rows are identity rows and their
/// columns are eliminated into `rhs`, so `rhs` is -F(x) corrected for the
/// known Dirichlet increments.
struct SparseSystem {
    Eigen::SparseMatrix<double> matrix;
    Eigen::VectorXd rhs;
    /// Smallest singular value of the element stress-stress blocks d1_eps.
    double min_stress_block_singular_value = 0.0;
};

/// Caches geometry and boundary data of one ProblemSpec for repeated
/// residual and Jacobian evaluations.
class Assembler {
public:
    explicit Assembler(ProblemSpec spec);

    const ProblemSpec& spec() const { return spec_; }
    const DofLayout& layout() const { return layout_; }
    const std::vector<ElementData>& elements() const { return elements_; }

    /// Per-dof flag marking Dirichlet velocity unknowns.
    const std::vector<char>& dirichlet_mask() const { return dirichlet_mask_; }
    /// Prescribed value for each Dirichlet dof (0 elsewhere).
    const Eigen::VectorXd& dirichlet_values() const { return dirichlet_values_; }

    /// Copies the prescribed boundary values into `state`.
    void apply_dirichlet(State& state) const;

    Eigen::VectorXd residual(const State& state) const;

    /// Jacobian selection with -F as right-hand side.
    SparseSystem jacobian(const State& state) const;

    /// Jacobian and residual of one call, sharing the constitutive evaluation.
    SparseSystem jacobian(const State& state, const Eigen::VectorXd& residual) const;

    /// Unmodified Jacobian selection (Dirichlet rows identity, columns kept):
    /// the exact linearisation of residual().
    Eigen::SparseMatrix<double> raw_jacobian(const State& state) const;

private:
    void check_state(const State& state) const;
    std::vector<Eigen::Triplet<double>> jacobian_triplets(const State& state, double& min_sv) const;

    ProblemSpec spec_;
    DofLayout layout_;
    std::vector<ElementData> elements_;
    std::vector<double> h2_;
    std::vector<char> dirichlet_mask_;
    Eigen::VectorXd dirichlet_values_;
};

Eigen::VectorXd assemble_residual(const ProblemSpec& spec, const State& state);

SparseSystem assemble_jacobian(const ProblemSpec& spec, const State& state);

/// Total nodal momentum load, including the implicit Euler term.
Eigen::VectorXd effective_body_force(const ProblemSpec& spec);

/// Implicit Euler step: alpha = 1/dt and the load gains u_old/dt. Repeated
/// application replaces rather than accumulates the time-step terms.
ProblemSpec apply_time_step(const ProblemSpec& spec, const Eigen::VectorXd& u_old, double dt);

} // namespace vpflow

#endif // VPFLOW_ASSEMBLY_HPP
