#ifndef VPFLOW_CONSTITUTIVE_HPP
#define VPFLOW_CONSTITUTIVE_HPP

#include "vpflow/tensor.hpp"

#include <string_view>
#include <utility>
#include <variant>

namespace vpflow {

// Implicit constitutive relations G(sigma, tau) = 0 between the shear stress
// sigma and the symmetric velocity gradient tau.

/// sigma - 2 nu tau
struct Newtonian {
    double nu;
};

/// sigma - K |tau|^(r-2) tau
struct PowerLaw {
    double consistency;
    double r;
};

/// |tau| sigma - (tau_* + 2 nu |tau|) tau
struct BinghamProduct {
    double yield_stress;
    double nu;
};

/// (|sigma| - tau_*)^+ sigma - 2 nu (tau_* + (|sigma| - tau_*)^+) tau
struct BinghamMax {
    double yield_stress;
    double nu;
};

/// (|sigma| - tau_*)^+ sigma / |sigma| - 2 nu tau
struct BinghamProjection {
    double yield_stress;
    double nu;
};

/// |tau| sigma - (tau_* + 2 nu |tau|^(r-1)) tau
struct HerschelBulkley {
    double yield_stress;
    double nu;
    double r;
};

using ConstitutiveModel =
    std::variant<Newtonian, PowerLaw, BinghamProduct, BinghamMax, BinghamProjection, HerschelBulkley>;

/// Throws std::invalid_argument when parameters are out of range
/// (yield stress < 0, viscosity <= 0, exponent r <= 1).
void validate(const ConstitutiveModel& model);

std::string_view model_name(const ConstitutiveModel& model);

/// True for the smooth relations (Newtonian, power law), whose regularised
/// problem is affine for the Newtonian case.
bool is_newtonian(const ConstitutiveModel& model);

/// Graph regularisation G(S - eps1 D, D - eps2 S). eps1 has units of a
/// viscosity, eps2 of a fluidity.
struct RegularizedModel {
    ConstitutiveModel base;
    double eps1 = 0.0;
    double eps2 = 0.0;

    static RegularizedModel symmetric(ConstitutiveModel base, double eps)
    {
        return {std::move(base), eps, eps};
    }
};

void validate(const RegularizedModel& reg);

/// True at a root tau = D - eps2 S = 0 of a product-form relation whose
/// stress |S - eps1 D| exceeds the yield stress: G vanishes there but the
/// pair is not on the constitutive graph.
bool on_spurious_branch(const RegularizedModel& reg, const SymTensor2& S, const SymTensor2& D);

/// Viscosity of the Newtonian relation matching the model's viscous part.
double viscous_part(const ConstitutiveModel& model);

/// Partial derivatives [d1, d2] of G with respect to (sigma, tau).
struct JacobianPair {
    SymLinMap d1;
    SymLinMap d2;
};

SymTensor2 eval_g(const ConstitutiveModel& model, const SymTensor2& sigma, const SymTensor2& tau);

SymTensor2 eval_g_reg(const RegularizedModel& reg, const SymTensor2& S, const SymTensor2& D);

/// One element of the Clarke generalised Jacobian of G. On kinks the
/// positive-part derivative is taken as 0 at non-positive arguments, and
/// for the product forms phi = 0 is selected at |tau| = 0.
JacobianPair jacobian_selection(const ConstitutiveModel& model, const SymTensor2& sigma,
                                const SymTensor2& tau);

/// Chain rule through the regularisation:
/// d1_eps = d1 - eps2 d2, d2_eps = d2 - eps1 d1.
JacobianPair jacobian_selection_reg(const RegularizedModel& reg, const SymTensor2& S,
                                    const SymTensor2& D);

struct PointwiseSolveOptions {
    double tolerance = 1e-12;
    int max_iterations = 100;
};

/// Solves G_eps(S, D) = 0 for S at fixed D by a damped semismooth Newton
/// method on the three stress components. Requires eps1, eps2 > 0.
/// Throws SolverError if no admissible root is found.
SymTensor2 solve_pointwise_stress(const RegularizedModel& reg, const SymTensor2& D,
                                  const SymTensor2& S_init = {},
                                  const PointwiseSolveOptions& options = {});

/// Bercovier-Engelman regularised Bingham law 2 nu D + tau_* D / sqrt(eps^2 + |D|^2).
SymTensor2 eval_bercovier(double nu, double yield_stress, double eps, const SymTensor2& D);

} // namespace vpflow

#endif // VPFLOW_CONSTITUTIVE_HPP
