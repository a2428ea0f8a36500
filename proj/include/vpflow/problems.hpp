#ifndef VPFLOW_PROBLEMS_HPP
#define VPFLOW_PROBLEMS_HPP

#include "vpflow/constitutive.hpp"
#include "vpflow/mesh.hpp"
#include "vpflow/newton.hpp"
#include "vpflow/postprocess.hpp"
#include "vpflow/spaces.hpp"

#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace vpflow {

/// Implicit Bingham relations supported by the benchmark drivers.
enum class BinghamForm { Product, Max, Projection };

std::string_view to_string(BinghamForm form);
/// Parses "product", "max" or "projection"; throws std::invalid_argument otherwise.
BinghamForm parse_bingham_form(std::string_view name);

/// Bingham relation of the given form. The benchmarks use nu = 1/2.
ConstitutiveModel bingham_model(BinghamForm form, double yield_stress, double nu = 0.5);

// ---------------------------------------------------------------- Poiseuille

struct PoiseuilleExact {
    Vec2 velocity;
    double pressure = 0.0;
};

/// Flow between the plates y = -1 and y = 1 driven by the pressure drop
/// sqrt(2) tau_* per unit length; the plug is |y| <= 1/2.
PoiseuilleExact poiseuille_exact(double yield_stress, const Vec2& x);

/// Gradient of the exact velocity (rows = components).
Eigen::Matrix2d poiseuille_exact_gradient(double yield_stress, const Vec2& x);

struct PoiseuilleCase {
    double yield_stress = 1.0;
    BinghamForm form = BinghamForm::Product;
    /// Base grid on (0,4) x (-1,1); each refinement level halves the mesh size.
    int base_nx = 40;
    int base_ny = 20;
};

struct PoiseuilleStage {
    double epsilon = 0.0;
    double error_l2 = 0.0;
    double error_h1 = 0.0;
    double error_pressure = 0.0;
    NewtonReport report;
};

struct PoiseuilleLevel {
    int level = 0;
    std::size_t dofs = 0;
    double h_max = 0.0;
    std::vector<PoiseuilleStage> stages;
    /// Computed horizontal velocity at (2, 0).
    double centre_velocity = 0.0;
    std::optional<State> state;
    bool converged = false;
};

struct PoiseuilleRecord {
    std::vector<PoiseuilleLevel> levels;
    bool converged = false;
};

ProblemSpec poiseuille_spec(const PoiseuilleCase& pc, std::shared_ptr<const Mesh> mesh, double eps);

/// Runs the continuation schedule on levels 0..refinements and records the
/// errors after every stage. Stops at the first failing level.
PoiseuilleRecord run_poiseuille(const PoiseuilleCase& pc, int refinements, const ContinuationSchedule& schedule,
                                const NewtonOptions& options = {});

// -------------------------------------------------------------------- cavity

struct CavityCase {
    double yield_stress = 3.0;
    BinghamForm form = BinghamForm::Product;
    double dt = 0.0005;
    double epsilon = 1e-4;
    /// Stop when the L2 norm of the velocity update drops below this.
    double steady_tolerance = 1e-6;
    double newton_tolerance = 1e-7;
    int max_newton_iterations = 50;
    /// Step halvings per Newton iteration; see NewtonOptions::max_backtracks.
    int max_backtracks = 10;
    /// See NewtonOptions::spurious_restarts.
    int spurious_restarts = 3;
    int max_steps = 20000;
    /// Larger regularisations solved before `epsilon` in every time step.
    std::vector<double> step_continuation;
    /// Newton iterations allowed per stage of a time step before falling back.
    int step_iterations = 50;
    /// Schedule towards `epsilon` used when a time step fails.
    std::vector<double> fallback = {0.5, 0.0166, 0.001};
    /// Cells per side of the base grid on the unit square.
    int cells = 64;
};

struct CavityResult {
    std::optional<State> state;
    int steps = 0;
    bool steady = false;
    int newton_iterations = 0;
    /// L2 norm of the velocity update after every step.
    std::vector<double> update_norms;
    double psi_max = 0.0;
    double y_c = 0.0;
    double x_c = 0.0;
    Eigen::VectorXd stream;
};

/// Per-step progress callback: step index and update norm.
using StepObserver = std::function<void(int step, double update_norm)>;

/// Implicit Euler pseudo-time stepping to steady state for the lid-driven
/// cavity; the lid y = 1 moves with velocity (1, 0).
CavityResult run_cavity(const CavityCase& cc, int refinements, const StepObserver& observer = {});

struct VortexMetrics {
    double psi_max = 0.0;
    double x_c = 0.0;
    double y_c = 0.0;
};

/// max |psi| of the stream function and the location of the maximising vertex.
VortexMetrics vortex_metrics(const Mesh& mesh, const Eigen::VectorXd& psi);

// ------------------------------------------------------------------- channel

struct ChannelCase {
    double bn = 10.0;
    BinghamForm form = BinghamForm::Product;
    double l_hat = 3.0;
    double delta = 0.2;
    double h = 1.2;
    double epsilon = 1e-4;
    ChannelGrading grading;
    /// Earlier continuation stages; `epsilon` is appended as the last one.
    std::vector<double> continuation = {0.5, 0.1, 0.0166, 0.005, 0.001, 0.0003};
    double newton_tolerance = 1e-9;
    int max_newton_iterations = 50;
    /// Step halvings per Newton iteration; see NewtonOptions::max_backtracks.
    int max_backtracks = 10;
    /// See NewtonOptions::spurious_restarts.
    int spurious_restarts = 3;
    /// Relative dead-zone threshold on |D(u)|.
    double dead_zone_threshold = 1e-3;
    int pressure_samples = 401;
    /// Length of straight channel next to the inlet, outlet and cavity left
    /// out of the affine pressure fits (inlet pressure layer, corner singularity).
    double fit_margin = 1.0;
};

/// Fully developed Bingham profile with unit mean velocity on |y| <= 1.
struct InflowProfile {
    double yield_stress = 0.0;
    /// Magnitude of the driving pressure gradient.
    double gradient = 0.0;
    /// Half-width of the plug.
    double plug = 0.0;

    double velocity(double y) const;
    /// |D(u)| at the wall.
    double wall_strain_rate() const;
};

InflowProfile fixed_flux_profile(double yield_stress);

struct ChannelResult {
    std::optional<State> state;
    std::vector<NewtonReport> reports;
    bool converged = false;
    InflowProfile inflow;
    double dead_zone_length = 0.0;
    /// Dead-zone length at 10x and 0.1x the threshold.
    double dead_zone_length_coarse = 0.0;
    double dead_zone_length_fine = 0.0;
    double sample_height = 0.0;
    LineSamples pressure_line;
    /// Coefficient of determination of an affine fit to the pressure upstream of
    /// the cavity, over the straight section shortened by `fit_margin` at both ends.
    double upstream_r2 = 0.0;
    double downstream_r2 = 0.0;
};

ProblemSpec channel_spec(const ChannelCase& cc, std::shared_ptr<const Mesh> mesh);

ChannelResult run_channel(const ChannelCase& cc, int refinements);

/// Length from the cavity end wall x = -1/(2 delta) along y = (1 + h)/2 until
/// the vertex-averaged |D(u)| first reaches `threshold`.
double dead_zone_length(const State& state, const ChannelCase& cc, double threshold);

/// R^2 of the least-squares line through (x_i, y_i).
double affine_r2(const std::vector<double>& x, const std::vector<double>& y);

} // namespace vpflow

#endif // VPFLOW_PROBLEMS_HPP
