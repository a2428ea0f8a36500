#ifndef VPFLOW_VERIFY_HPP
#define VPFLOW_VERIFY_HPP

#include "vpflow/constitutive.hpp"

#include <functional>
#include <string>
#include <vector>

namespace vpflow {

/// Outcome of one self-check.
struct PropertyResult {
    std::string name;
    bool passed = false;
    std::string detail;
};

using JacobianSelector =
    std::function<JacobianPair(const ConstitutiveModel&, const SymTensor2&, const SymTensor2&)>;

/// Central differences against the Jacobian selection of every model at
/// `samples` random points away from the kinks; passes at relative error <= 1e-6.
/// The selector is a parameter so that mutated selections can be checked.
PropertyResult check_constitutive_jacobian(unsigned seed, int samples = 100,
                                           const JacobianSelector& selector = jacobian_selection);

/// Directional finite differences of the assembled residual against the
/// Jacobian at `states` random states; passes at relative error <= 1e-6.
PropertyResult check_assembled_jacobian(unsigned seed, int states = 20);

/// Strong monotonicity of the regularised graph with c_eps = eps / (1 + eps^2)
/// on `pairs` random pairs per (model, eps); passes with zero violations.
PropertyResult check_monotonicity(unsigned seed, const std::vector<ConstitutiveModel>& models,
                                  const std::vector<double>& epsilons, int pairs = 1000);

PropertyResult check_mesh_invariants();
PropertyResult check_tensor_contraction(unsigned seed);
PropertyResult check_constitutive_oracles(unsigned seed);
PropertyResult check_zero_is_root();
PropertyResult check_pointwise_solve(unsigned seed);
PropertyResult check_newtonian_one_iteration();
PropertyResult check_assembly_invariants(unsigned seed);
PropertyResult check_vtk_golden();

/// Every check above, in a fixed order.
std::vector<PropertyResult> run_property_suite(unsigned seed);

} // namespace vpflow

#endif // VPFLOW_VERIFY_HPP
