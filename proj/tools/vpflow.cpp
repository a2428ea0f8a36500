// Command-line driver for the benchmark problems and the self-check suite.

#include "vpflow/errors.hpp"
#include "vpflow/problems.hpp"
#include "vpflow/verify.hpp"

#include <CLI11.hpp>
#include <spdlog/fmt/fmt.h>
#include <spdlog/sinks/stdout_color_sinks.h>
#include <spdlog/spdlog.h>

#include <chrono>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <future>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#ifndef VPFLOW_VERSION
#define VPFLOW_VERSION "unknown"
#endif

namespace fs = std::filesystem;
using namespace vpflow;

namespace {

constexpr int kExitSolver = 1;
constexpr int kExitUsage = 2;

/// Bad input detected after parsing; maps to the usage exit code.
struct UsageError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

std::string num(double v)
{
    return fmt::format("{:.17g}", v);
}

std::vector<double> parse_list(const std::string& text, const std::string& what)
{
    std::vector<double> out;
    std::stringstream in(text);
    std::string item;
    while (std::getline(in, item, ',')) {
        std::size_t used = 0;
        double v = 0.0;
        try {
            v = std::stod(item, &used);
        } catch (const std::exception&) {
            throw UsageError(what + ": '" + item + "' is not a number");
        }
        if (used != item.size()) {
            throw UsageError(what + ": '" + item + "' is not a number");
        }
        out.push_back(v);
    }
    if (out.empty()) {
        throw UsageError(what + " is empty");
    }
    return out;
}

std::ofstream open_output(const fs::path& path)
{
    std::ofstream out(path);
    if (!out) {
        throw std::runtime_error("cannot write " + path.string());
    }
    return out;
}

std::string timestamp()
{
    const std::time_t now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
    std::tm utc{};
    gmtime_r(&now, &utc);
    char buf[32];
    std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &utc);
    return buf;
}

std::string option_value(const CLI::Option* opt)
{
    if (opt->count() == 0) {
        return opt->get_default_str();
    }
    std::string joined;
    for (const auto& r : opt->results()) {
        joined += (joined.empty() ? "" : ",") + r;
    }
    return joined;
}

void write_options(std::ostream& out, const CLI::App& app)
{
    for (const CLI::Option* opt : app.get_options()) {
        if (!opt->get_configurable() || opt->get_lnames().empty() || opt->get_lnames().front() == "config" ||
            opt->get_lnames().front() == "help" || opt->get_lnames().front() == "version") {
            continue;
        }
        out << opt->get_lnames().front() << "=\"" << option_value(opt) << "\"\n";
    }
}

/// The manifest is a config file: `vpflow --config manifest.toml` repeats the run.
void write_manifest(const CLI::App& app, const CLI::App& command, const fs::path& dir)
{
    auto out = open_output(dir / "manifest.toml");
    out << "# vpflow " << VPFLOW_VERSION << "\n# created " << timestamp() << "\n";
    write_options(out, app);
    out << '[' << command.get_name() << "]\n";
    write_options(out, command);
}

/// Runs `work` for every item on at most `jobs` threads; results keep the input order.
template <class T, class F>
auto run_sweep(const std::vector<T>& items, int jobs, F work)
{
    using R = decltype(work(items.front()));
    std::vector<R> results;
    results.reserve(items.size());
    for (std::size_t begin = 0; begin < items.size(); begin += static_cast<std::size_t>(jobs)) {
        std::vector<std::future<R>> batch;
        for (std::size_t i = begin; i < std::min(items.size(), begin + static_cast<std::size_t>(jobs)); ++i) {
            batch.push_back(std::async(std::launch::async, work, items[i]));
        }
        for (auto& f : batch) {
            results.push_back(f.get());
        }
    }
    return results;
}

// ---------------------------------------------------------------- poiseuille

struct PoiseuilleArgs {
    double tau_star = 1.0;
    int refinements = 2;
    std::string eps_schedule = "0.5,0.0166,0.001,0.0001";
    std::string form = "product";
    std::string warm_start = "reuse";
    double tol = 1e-9;
    int max_iter = 50;
    int base_nx = 40;
    int base_ny = 20;
};

int run_poiseuille_cmd(const PoiseuilleArgs& a, const fs::path& out_dir)
{
    PoiseuilleCase pc;
    pc.yield_stress = a.tau_star;
    pc.form = parse_bingham_form(a.form);
    pc.base_nx = a.base_nx;
    pc.base_ny = a.base_ny;
    ContinuationSchedule schedule{parse_list(a.eps_schedule, "--eps-schedule"),
                                  a.warm_start == "reuse" ? WarmStart::Reuse : WarmStart::Extrapolate};
    try {
        validate(schedule);
    } catch (const std::invalid_argument& e) {
        throw UsageError(e.what());
    }
    NewtonOptions options;
    options.tolerance = a.tol;
    options.max_iterations = a.max_iter;

    const PoiseuilleRecord rec = run_poiseuille(pc, a.refinements, schedule, options);

    auto errors = open_output(out_dir / "errors.csv");
    auto history = open_output(out_dir / "history.csv");
    errors << "level,dofs,h_max,epsilon,iterations,converged,spurious_elements,error_l2,error_h1,error_pressure,"
              "centre_velocity\n";
    history << "level,epsilon,iteration,residual\n";
    bool all = rec.converged;
    for (const auto& level : rec.levels) {
        for (const auto& st : level.stages) {
            const auto& r = st.report;
            errors << level.level << ',' << level.dofs << ',' << num(level.h_max) << ',' << num(st.epsilon) << ','
                   << r.iterations << ',' << (r.converged ? 1 : 0) << ',' << r.spurious_elements << ','
                   << num(st.error_l2) << ',' << num(st.error_h1) << ',' << num(st.error_pressure) << ','
                   << num(level.centre_velocity) << '\n';
            for (std::size_t k = 0; k < r.residual_norms.size(); ++k) {
                history << level.level << ',' << num(st.epsilon) << ',' << k << ',' << num(r.residual_norms[k])
                        << '\n';
            }
            all = all && r.converged;
            std::cout << fmt::format("level {} dofs {} eps {:g}: {} in {} iterations, L2 error {:.4e}\n",
                                     level.level, level.dofs, st.epsilon, r.converged ? "converged" : "FAILED",
                                     r.iterations, st.error_l2);
        }
        if (level.state) {
            write_vtk(make_snapshot(*level.state), out_dir / fmt::format("fields_level{}.vtk", level.level));
        }
    }
    return all ? 0 : kExitSolver;
}

// -------------------------------------------------------------------- cavity

struct CavityArgs {
    std::vector<double> tau_star;
    std::string form = "product";
    double dt = 5e-4;
    double eps = 1e-4;
    int refinements = 0;
    int cells = 64;
    int max_steps = 20000;
    double steady_tol = 1e-6;
    double newton_tol = 1e-7;
};

int run_cavity_cmd(const CavityArgs& a, int jobs, const fs::path& out_dir)
{
    const BinghamForm form = parse_bingham_form(a.form);
    auto results = run_sweep(a.tau_star, jobs, [&](double tau) {
        CavityCase cc;
        cc.yield_stress = tau;
        cc.form = form;
        cc.dt = a.dt;
        cc.epsilon = a.eps;
        cc.cells = a.cells;
        cc.max_steps = a.max_steps;
        cc.steady_tolerance = a.steady_tol;
        cc.newton_tolerance = a.newton_tol;
        std::optional<CavityResult> r;
        std::string failure;
        try {
            r = run_cavity(cc, a.refinements, [tau](int step, double change) {
                if (step % 100 == 0) {
                    spdlog::info("cavity tau* {:g}: step {} update {:.3e}", tau, step, change);
                }
            });
        } catch (const SolverError& e) {
            failure = e.what();
        }
        return std::make_pair(std::move(r), failure);
    });

    auto metrics = open_output(out_dir / "metrics.csv");
    auto updates = open_output(out_dir / "updates.csv");
    metrics << "tau_star,dofs,steps,steady,newton_iterations,psi_max,x_c,y_c\n";
    updates << "tau_star,step,update_norm\n";
    int code = 0;
    for (std::size_t i = 0; i < results.size(); ++i) {
        const double tau = a.tau_star[i];
        const auto& [r, failure] = results[i];
        if (!r) {
            std::cerr << "cavity tau* " << tau << ": " << failure << '\n';
            code = kExitSolver;
            continue;
        }
        const std::size_t dofs = r->state->coeffs.size();
        metrics << num(tau) << ',' << dofs << ',' << r->steps << ',' << (r->steady ? 1 : 0) << ','
                << r->newton_iterations << ',' << num(r->psi_max) << ',' << num(r->x_c) << ',' << num(r->y_c)
                << '\n';
        for (std::size_t k = 0; k < r->update_norms.size(); ++k) {
            updates << num(tau) << ',' << k + 1 << ',' << num(r->update_norms[k]) << '\n';
        }
        FieldSnapshot snap = make_snapshot(*r->state);
        snap.add_point_scalar("stream_function", r->stream);
        write_vtk(snap, out_dir / fmt::format("cavity_tau{:g}.vtk", tau));
        std::cout << fmt::format("tau* {:g}: {} after {} steps, psi_max {:.5f} at ({:.4f}, {:.4f})\n", tau,
                                 r->steady ? "steady" : "NOT steady", r->steps, r->psi_max, r->x_c, r->y_c);
        if (!r->steady) {
            code = kExitSolver;
        }
    }
    return code;
}

// ------------------------------------------------------------------- channel

struct ChannelArgs {
    std::vector<double> bn;
    std::string form = "product";
    double l_hat = 3.0;
    double delta = 0.2;
    double h = 1.2;
    double eps = 1e-4;
    std::string continuation = "0.5,0.1,0.0166,0.005,0.001,0.0003";
    int backtracks = 10;
    int refinements = 0;
    double grading_coarse = 0.1;
    double grading_fine = 0.01;
    double grading_growth = 1.2;
    double threshold = 1e-3;
    double tol = 1e-9;
};

int run_channel_cmd(const ChannelArgs& a, int jobs, const fs::path& out_dir)
{
    const BinghamForm form = parse_bingham_form(a.form);
    const std::vector<double> continuation = parse_list(a.continuation, "--continuation");
    auto results = run_sweep(a.bn, jobs, [&](double bn) {
        ChannelCase cc;
        cc.bn = bn;
        cc.form = form;
        cc.l_hat = a.l_hat;
        cc.delta = a.delta;
        cc.h = a.h;
        cc.epsilon = a.eps;
        cc.continuation = continuation;
        cc.max_backtracks = a.backtracks;
        cc.grading = {a.grading_coarse, a.grading_fine, a.grading_growth};
        cc.dead_zone_threshold = a.threshold;
        cc.newton_tolerance = a.tol;
        return run_channel(cc, a.refinements);
    });

    auto metrics = open_output(out_dir / "metrics.csv");
    metrics << "bn,dofs,converged,newton_iterations,dead_zone_length,dead_zone_length_coarse,dead_zone_length_fine,"
               "sample_height,upstream_r2,downstream_r2\n";
    int code = 0;
    for (std::size_t i = 0; i < results.size(); ++i) {
        const double bn = a.bn[i];
        const ChannelResult& r = results[i];
        int iterations = 0;
        for (const auto& rep : r.reports) {
            iterations += rep.iterations;
        }
        const std::size_t dofs = r.state ? r.state->coeffs.size() : 0;
        metrics << num(bn) << ',' << dofs << ',' << (r.converged ? 1 : 0) << ',' << iterations << ','
                << num(r.dead_zone_length) << ',' << num(r.dead_zone_length_coarse) << ','
                << num(r.dead_zone_length_fine) << ',' << num(r.sample_height) << ',' << num(r.upstream_r2) << ','
                << num(r.downstream_r2) << '\n';
        if (!r.converged) {
            std::cerr << "channel Bn " << bn << ": continuation failed\n";
            code = kExitSolver;
            continue;
        }
        auto line = open_output(out_dir / fmt::format("pressure_line_bn{:g}.csv", bn));
        write_csv(r.pressure_line, line);
        write_vtk(make_snapshot(*r.state), out_dir / fmt::format("channel_bn{:g}.vtk", bn));
        std::cout << fmt::format("Bn {:g}: dead zone {:.5f}, upstream pressure R^2 {:.6f}\n", bn, r.dead_zone_length,
                                 r.upstream_r2);
    }
    return code;
}

// -------------------------------------------------------------------- verify

int run_verify_cmd(unsigned seed)
{
    const auto results = run_property_suite(seed);
    const PropertyResult* first_failure = nullptr;
    for (const auto& r : results) {
        std::cout << (r.passed ? "PASS " : "FAIL ") << r.name << ": " << r.detail << '\n';
        if (!r.passed && first_failure == nullptr) {
            first_failure = &r;
        }
    }
    if (first_failure != nullptr) {
        std::cout << "first failing property: " << first_failure->name << '\n';
        return kExitSolver;
    }
    std::cout << "all " << results.size() << " properties passed\n";
    return 0;
}

} // namespace

int main(int argc, char** argv)
{
    spdlog::set_default_logger(spdlog::stderr_color_mt("vpflow"));

    CLI::App app{"Viscoplastic flow solver with implicit constitutive relations"};
    app.set_version_flag("--version", std::string(VPFLOW_VERSION));
    app.set_config("--config", "", "Read options from a key=value or TOML file");
    app.allow_config_extras(CLI::config_extras_mode::error);
    app.require_subcommand(1);

    std::string out = "vpflow-out";
    int jobs = 1;
    std::string log_level = "info";
    app.add_option("--out", out, "Output directory")->capture_default_str();
    app.add_option("--jobs", jobs, "Parallel sweep points")->check(CLI::PositiveNumber)->capture_default_str();
    app.add_option("--log-level", log_level, "spdlog level")
        ->check(CLI::IsMember({"trace", "debug", "info", "warn", "error", "off"}))
        ->capture_default_str();

    const auto forms = CLI::IsMember({"product", "max", "projection"});
    const auto non_negative = CLI::NonNegativeNumber;
    const auto positive = CLI::PositiveNumber;

    PoiseuilleArgs pa;
    auto* pois = app.add_subcommand("poiseuille", "Plane Poiseuille flow with known solution");
    pois->configurable();
    pois->add_option("--tau-star", pa.tau_star, "Yield stress")->check(non_negative)->capture_default_str();
    pois->add_option("--refinements", pa.refinements, "Uniform refinements of the base grid")
        ->check(non_negative)
        ->capture_default_str();
    pois->add_option("--eps-schedule", pa.eps_schedule, "Comma-separated decreasing epsilons")->capture_default_str();
    pois->add_option("--form", pa.form, "Bingham form")->check(forms)->capture_default_str();
    pois->add_option("--warm-start", pa.warm_start, "Warm start between stages")
        ->check(CLI::IsMember({"reuse", "extrapolate"}))
        ->capture_default_str();
    pois->add_option("--tol", pa.tol, "Newton residual tolerance")->check(positive)->capture_default_str();
    pois->add_option("--max-iter", pa.max_iter, "Newton iterations per stage")
        ->check(positive)
        ->capture_default_str();
    pois->add_option("--base-nx", pa.base_nx, "Base grid cells along x")->check(positive)->capture_default_str();
    pois->add_option("--base-ny", pa.base_ny, "Base grid cells along y")->check(positive)->capture_default_str();

    CavityArgs ca;
    auto* cav = app.add_subcommand("cavity", "Lid-driven cavity to steady state");
    cav->configurable();
    cav->add_option("--tau-star", ca.tau_star, "Yield stress; several values form a sweep")
        ->required()
        ->check(non_negative)
        ->delimiter(',');
    cav->add_option("--form", ca.form, "Bingham form")->check(forms)->capture_default_str();
    cav->add_option("--dt", ca.dt, "Pseudo-time step")->check(positive)->capture_default_str();
    cav->add_option("--eps", ca.eps, "Regularisation")->check(positive)->capture_default_str();
    cav->add_option("--refinements", ca.refinements, "Halvings of the base grid")
        ->check(non_negative)
        ->capture_default_str();
    cav->add_option("--cells", ca.cells, "Base cells per side")->check(positive)->capture_default_str();
    cav->add_option("--max-steps", ca.max_steps, "Time step limit")->check(positive)->capture_default_str();
    cav->add_option("--steady-tol", ca.steady_tol, "Steady-state update tolerance")
        ->check(positive)
        ->capture_default_str();
    cav->add_option("--newton-tol", ca.newton_tol, "Newton tolerance per step")
        ->check(positive)
        ->capture_default_str();

    ChannelArgs cha;
    auto* chan = app.add_subcommand("channel", "Channel with a square cavity");
    chan->configurable();
    chan->add_option("--bn", cha.bn, "Bingham number; several values form a sweep")
        ->required()
        ->check(non_negative)
        ->delimiter(',');
    chan->add_option("--form", cha.form, "Bingham form")->check(forms)->capture_default_str();
    chan->add_option("--l-hat", cha.l_hat, "Channel length on each side of the cavity")
        ->check(positive)
        ->capture_default_str();
    chan->add_option("--delta", cha.delta, "Inverse cavity width")->check(positive)->capture_default_str();
    chan->add_option("--depth", cha.h, "Cavity depth")->check(positive)->capture_default_str();
    chan->add_option("--eps", cha.eps, "Final regularisation")->check(positive)->capture_default_str();
    chan->add_option("--continuation", cha.continuation, "Earlier regularisation stages, decreasing")
        ->capture_default_str();
    chan->add_option("--backtracks", cha.backtracks, "Step halvings per Newton iteration")
        ->check(non_negative)
        ->capture_default_str();
    chan->add_option("--refinements", cha.refinements, "Uniform refinements of the graded mesh")
        ->check(non_negative)
        ->capture_default_str();
    chan->add_option("--grading-coarse", cha.grading_coarse, "Mesh size away from the corners")
        ->check(positive)
        ->capture_default_str();
    chan->add_option("--grading-fine", cha.grading_fine, "Mesh size at the cavity corners")
        ->check(positive)
        ->capture_default_str();
    chan->add_option("--grading-growth", cha.grading_growth, "Growth ratio of the grading")
        ->check(CLI::Range(1.0, 10.0))
        ->capture_default_str();
    chan->add_option("--threshold", cha.threshold, "Dead-zone threshold relative to the wall strain rate")
        ->check(positive)
        ->capture_default_str();
    chan->add_option("--tol", cha.tol, "Newton tolerance")->check(positive)->capture_default_str();

    unsigned seed = 42;
    auto* ver = app.add_subcommand("verify", "Property-based self checks");
    ver->configurable();
    ver->add_option("--seed", seed, "Random seed")->capture_default_str();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : kExitUsage;
    }
    spdlog::set_level(spdlog::level::from_str(log_level));

    try {
        if (ver->parsed()) {
            return run_verify_cmd(seed);
        }
        const fs::path dir(out);
        fs::create_directories(dir);
        write_manifest(app, *app.get_subcommands().front(), dir);
        if (pois->parsed()) {
            return run_poiseuille_cmd(pa, dir);
        }
        if (cav->parsed()) {
            return run_cavity_cmd(ca, jobs, dir);
        }
        return run_channel_cmd(cha, jobs, dir);
    } catch (const UsageError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitUsage;
    } catch (const std::invalid_argument& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitUsage;
    } catch (const SolverError& e) {
        std::cerr << "solver failure: " << e.what() << '\n';
        return kExitSolver;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitSolver;
    }
}
