#include "vpflow/constitutive.hpp"

#include "vpflow/errors.hpp"

#include <Eigen/LU>

#include <algorithm>
#include <array>
#include <cmath>
#include <optional>
#include <stdexcept>
#include <string>

namespace vpflow {

namespace {

template <class... Ts>
struct overloaded : Ts... {
    using Ts::operator()...;
};
template <class... Ts>
overloaded(Ts...) -> overloaded<Ts...>;

double positive_part(double x) { return x > 0.0 ? x : 0.0; }

void require(bool ok, const char* what)
{
    if (!ok) {
        throw std::invalid_argument(what);
    }
}

constexpr double min_exponent = 1.0 + 1e-9;

// Relations written in product form admit a spurious family of roots
// tau = 0 with arbitrary sigma; only |sigma| <= tau_* is part of the graph.
bool has_degenerate_plug(const ConstitutiveModel& model)
{
    return std::holds_alternative<BinghamProduct>(model) ||
           std::holds_alternative<HerschelBulkley>(model);
}

double yield_stress_of(const ConstitutiveModel& model)
{
    return std::visit(overloaded{
                          [](const Newtonian&) { return 0.0; },
                          [](const PowerLaw&) { return 0.0; },
                          [](const auto& m) { return m.yield_stress; },
                      },
                      model);
}

} // namespace

void validate(const ConstitutiveModel& model)
{
    std::visit(overloaded{
                   [](const Newtonian& m) { require(m.nu > 0.0, "Newtonian: viscosity must be positive"); },
                   [](const PowerLaw& m) {
                       require(m.consistency > 0.0, "PowerLaw: consistency must be positive");
                       require(m.r >= min_exponent, "PowerLaw: exponent must exceed 1");
                   },
                   [](const HerschelBulkley& m) {
                       require(m.yield_stress >= 0.0, "HerschelBulkley: yield stress must be non-negative");
                       require(m.nu > 0.0, "HerschelBulkley: consistency must be positive");
                       require(m.r >= min_exponent, "HerschelBulkley: exponent must exceed 1");
                   },
                   [](const auto& m) {
                       require(m.yield_stress >= 0.0, "Bingham: yield stress must be non-negative");
                       require(m.nu > 0.0, "Bingham: viscosity must be positive");
                   },
               },
               model);
}

void validate(const RegularizedModel& reg)
{
    validate(reg.base);
    require(reg.eps1 >= 0.0 && reg.eps2 >= 0.0, "regularisation parameters must be non-negative");
}

std::string_view model_name(const ConstitutiveModel& model)
{
    return std::visit(overloaded{
                          [](const Newtonian&) { return std::string_view{"newtonian"}; },
                          [](const PowerLaw&) { return std::string_view{"power-law"}; },
                          [](const BinghamProduct&) { return std::string_view{"bingham-product"}; },
                          [](const BinghamMax&) { return std::string_view{"bingham-max"}; },
                          [](const BinghamProjection&) { return std::string_view{"bingham-projection"}; },
                          [](const HerschelBulkley&) { return std::string_view{"herschel-bulkley"}; },
                      },
                      model);
}

bool is_newtonian(const ConstitutiveModel& model) { return std::holds_alternative<Newtonian>(model); }

SymTensor2 eval_g(const ConstitutiveModel& model, const SymTensor2& sigma, const SymTensor2& tau)
{
    return std::visit(
        overloaded{
            [&](const Newtonian& m) { return sigma - 2.0 * m.nu * tau; },
            [&](const PowerLaw& m) {
                const double nt = norm(tau);
                const double factor = nt > 0.0 ? m.consistency * std::pow(nt, m.r - 2.0)
                                                : (m.r == 2.0 ? m.consistency : 0.0);
                return sigma - factor * tau;
            },
            [&](const BinghamProduct& m) {
                const double nt = norm(tau);
                return nt * sigma - (m.yield_stress + 2.0 * m.nu * nt) * tau;
            },
            [&](const BinghamMax& m) {
                const double excess = positive_part(norm(sigma) - m.yield_stress);
                return excess * sigma - 2.0 * m.nu * (m.yield_stress + excess) * tau;
            },
            [&](const BinghamProjection& m) {
                const double ns = norm(sigma);
                const double excess = positive_part(ns - m.yield_stress);
                SymTensor2 g = -2.0 * m.nu * tau;
                if (excess > 0.0) {
                    g += (excess / ns) * sigma;
                }
                return g;
            },
            [&](const HerschelBulkley& m) {
                const double nt = norm(tau);
                const double power = nt > 0.0 ? std::pow(nt, m.r - 1.0) : 0.0;
                return nt * sigma - (m.yield_stress + 2.0 * m.nu * power) * tau;
            },
        },
        model);
}

SymTensor2 eval_g_reg(const RegularizedModel& reg, const SymTensor2& S, const SymTensor2& D)
{
    return eval_g(reg.base, S - reg.eps1 * D, D - reg.eps2 * S);
}

JacobianPair jacobian_selection(const ConstitutiveModel& model, const SymTensor2& sigma,
                                const SymTensor2& tau)
{
    const SymLinMap I = SymLinMap::identity();
    return std::visit(
        overloaded{
            [&](const Newtonian& m) { return JacobianPair{I, -2.0 * m.nu * I}; },
            [&](const PowerLaw& m) {
                const double nt = norm(tau);
                if (nt == 0.0) {
                    // Classical derivative for r = 2; elsewhere the zero selection.
                    return JacobianPair{I, m.r == 2.0 ? -m.consistency * I : SymLinMap::zero()};
                }
                const double a = m.consistency * std::pow(nt, m.r - 2.0);
                const double b = m.consistency * (m.r - 2.0) * std::pow(nt, m.r - 4.0);
                return JacobianPair{I, -(a * I + b * outer(tau, tau))};
            },
            [&](const BinghamProduct& m) {
                const double nt = norm(tau);
                if (nt == 0.0) {
                    return JacobianPair{SymLinMap::zero(), -m.yield_stress * I};
                }
                const SymTensor2 dir = (1.0 / nt) * tau;
                SymLinMap d2 = outer(sigma, dir) - (m.yield_stress + 2.0 * m.nu * nt) * I -
                               (2.0 * m.nu) * outer(tau, dir);
                return JacobianPair{nt * I, d2};
            },
            [&](const BinghamMax& m) {
                const double ns = norm(sigma);
                const double excess = positive_part(ns - m.yield_stress);
                SymLinMap d1 = excess * I;
                if (excess > 0.0) {
                    d1 += outer(sigma - 2.0 * m.nu * tau, (1.0 / ns) * sigma);
                }
                return JacobianPair{d1, -2.0 * m.nu * (m.yield_stress + excess) * I};
            },
            [&](const BinghamProjection& m) {
                const double ns = norm(sigma);
                const double excess = positive_part(ns - m.yield_stress);
                SymLinMap d1 = SymLinMap::zero();
                if (excess > 0.0) {
                    d1 = (excess / ns) * I + (m.yield_stress / (ns * ns * ns)) * outer(sigma, sigma);
                }
                return JacobianPair{d1, -2.0 * m.nu * I};
            },
            [&](const HerschelBulkley& m) {
                const double nt = norm(tau);
                if (nt == 0.0) {
                    return JacobianPair{SymLinMap::zero(), -m.yield_stress * I};
                }
                const SymTensor2 dir = (1.0 / nt) * tau;
                const double power = std::pow(nt, m.r - 1.0);
                SymLinMap d2 = outer(sigma, dir) - (m.yield_stress + 2.0 * m.nu * power) * I -
                               (2.0 * m.nu * (m.r - 1.0) * std::pow(nt, m.r - 3.0)) * outer(tau, tau);
                return JacobianPair{nt * I, d2};
            },
        },
        model);
}

JacobianPair jacobian_selection_reg(const RegularizedModel& reg, const SymTensor2& S,
                                    const SymTensor2& D)
{
    const auto [d1, d2] = jacobian_selection(reg.base, S - reg.eps1 * D, D - reg.eps2 * S);
    return {d1 - reg.eps2 * d2, d2 - reg.eps1 * d1};
}

bool on_spurious_branch(const RegularizedModel& reg, const SymTensor2& S, const SymTensor2& D)
{
    if (!has_degenerate_plug(reg.base)) {
        return false;
    }
    const double nt = norm(D - reg.eps2 * S);
    const double ns = norm(S - reg.eps1 * D);
    const double tiny = 1e-9 * (norm(D) + reg.eps2 * norm(S)) + 1e-300;
    return nt <= tiny && ns > yield_stress_of(reg.base) * (1.0 + 1e-6) + 1e-12;
}

double viscous_part(const ConstitutiveModel& model)
{
    return std::visit(overloaded{
                          [](const PowerLaw& m) { return 0.5 * m.consistency; },
                          [](const auto& m) { return m.nu; },
                      },
                      model);
}

SymTensor2 solve_pointwise_stress(const RegularizedModel& reg, const SymTensor2& D,
                                  const SymTensor2& S_init, const PointwiseSolveOptions& options)
{
    validate(reg);
    if (!(reg.eps1 > 0.0) || !(reg.eps2 > 0.0)) {
        throw std::invalid_argument("solve_pointwise_stress: eps1 and eps2 must be positive");
    }
    const double tau_star = yield_stress_of(reg.base);

    // Residual scale: the size of the individual terms making up G.
    auto scale_of = [&](const SymTensor2& S) {
        const double ns = norm(S - reg.eps1 * D);
        const double nt = norm(D - reg.eps2 * S);
        return 1.0 + ns + nt + ns * nt + nt * nt;
    };
    auto admissible = [&](const SymTensor2& S) { return !on_spurious_branch(reg, S, D); };

    auto newton_from = [&](SymTensor2 S) -> std::optional<SymTensor2> {
        SymTensor2 G = eval_g_reg(reg, S, D);
        for (int it = 0; it <= options.max_iterations; ++it) {
            const double res = norm(G);
            if (res <= options.tolerance * scale_of(S)) {
                return S;
            }
            if (it == options.max_iterations) {
                break;
            }
            const auto jac = jacobian_selection_reg(reg, S, D);
            Eigen::FullPivLU<Eigen::Matrix3d> lu(jac.d1.matrix());
            if (!lu.isInvertible()) {
                return std::nullopt;
            }
            const SymTensor2 step = SymTensor2::from_vector(lu.solve(-G.as_vector()));
            double t = 1.0;
            SymTensor2 trial = S + step;
            SymTensor2 G_trial = eval_g_reg(reg, trial, D);
            while (norm(G_trial) > (1.0 - 1e-4 * t) * res && t > 1e-12) {
                t *= 0.5;
                trial = S + t * step;
                G_trial = eval_g_reg(reg, trial, D);
            }
            S = trial;
            G = G_trial;
        }
        return std::nullopt;
    };

    std::array<SymTensor2, 3> starts{S_init, SymTensor2{}, (1.0 / reg.eps2) * D};
    const double nd = norm(D);
    if (nd > 0.0) {
        // Rough yielded-branch estimate tau_* D/|D| + D.
        starts[1] = (tau_star / nd + 1.0) * D;
    }
    for (const auto& start : starts) {
        if (auto S = newton_from(start); S && admissible(*S)) {
            return *S;
        }
    }
    if (nd > 0.0) {
        // Isotropic relations have a root S = s D/|D|. The scalar residual is
        // negative at s = 0 and changes sign before the degenerate root s = |D|/eps2.
        const SymTensor2 n = (1.0 / nd) * D;
        auto g = [&](double s) { return contract(eval_g_reg(reg, s * n, D), n); };
        const double s_end = nd / reg.eps2;
        double lo = 0.0;
        double hi = -1.0;
        const int samples = 256;
        for (int i = 1; i < samples; ++i) {
            const double s_i = s_end * i / samples;
            if (g(s_i) > 0.0) {
                hi = s_i;
                break;
            }
            lo = s_i;
        }
        if (hi > 0.0 && g(lo) < 0.0) {
            for (int it = 0; it < 200 && hi - lo > 1e-15 * hi; ++it) {
                const double mid = 0.5 * (lo + hi);
                (g(mid) > 0.0 ? hi : lo) = mid;
            }
            if (auto S = newton_from(0.5 * (lo + hi) * n); S && admissible(*S)) {
                return *S;
            }
        }
    }
    throw SolverError("solve_pointwise_stress: no admissible root found for |D| = " + std::to_string(nd));
}

SymTensor2 eval_bercovier(double nu, double yield_stress, double eps, const SymTensor2& D)
{
    if (!(eps > 0.0)) {
        throw std::invalid_argument("eval_bercovier: eps must be positive");
    }
    const double nd = norm(D);
    return (2.0 * nu + yield_stress / std::sqrt(eps * eps + nd * nd)) * D;
}

} // namespace vpflow
