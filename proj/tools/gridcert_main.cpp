// Command-line front end: certify | simulate | phase-portrait | report.

#include "gridcert/pipeline.hpp"
#include "gridcert/rng.hpp"

#include <CLI11.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

namespace {

using namespace gridcert;
namespace fs = std::filesystem;

std::vector<double> parse_list(const std::string& text, const std::string& flag) {
    std::vector<double> values;
    std::stringstream ss(text);
    std::string item;
    while (std::getline(ss, item, ',')) {
        try {
            values.push_back(std::stod(item));
        } catch (const std::exception&) {
            throw CaseError(flag, "cannot parse '" + item + "' as a number");
        }
    }
    if (values.empty()) throw CaseError(flag, "empty value list");
    return values;
}

DisturbanceSignal::Kind kind_from_flag(const std::string& s) {
    if (s == "zero") return DisturbanceSignal::Kind::zero;
    if (s == "constant") return DisturbanceSignal::Kind::constant_direction;
    if (s == "random" || s == "at-bound")
        return DisturbanceSignal::Kind::piecewise_constant_random;
    if (s == "adversarial") return DisturbanceSignal::Kind::adversarial_aligned;
    throw CaseError("--disturbance", "unknown kind '" + s + "'");
}

int cmd_certify(const RunConfig& cfg) {
    const CertifyOutcome outcome = run_certify(cfg);
    if (outcome.exit_code == 1) {
        std::cerr << "error: " << outcome.error << "\n";
        return 1;
    }
    std::cout << pretty_print(outcome.report);
    std::cout << "report written to " << outcome.report_path << "\n";
    if (outcome.exit_code == 2) std::cerr << "warning: " << outcome.error << "\n";
    return outcome.exit_code;
}

struct SimulateArgs {
    std::string report_path;
    std::string out_dir = ".";
    int trials = 100;
    std::string disturbance = "zero";
    double magnitude = -1.0;  // negative -> kind-dependent default
    double switch_period = 0.1;
    std::uint64_t seed = 1;
    double step = 1e-3;
    double horizon = 50.0;
    std::string x0_text;
    bool traces = false;
    double shell_lo = 0.9;
};

int cmd_simulate(const SimulateArgs& args) {
    const CertificationReport rep = load_report(args.report_path);
    const CertificationBundle bundle = rebuild_bundle(rep);
    fs::create_directories(args.out_dir);

    const double eta_bar = bundle.has_robustness ? bundle.robustness.eta_bar : 0.0;
    const auto kind = kind_from_flag(args.disturbance);
    double magnitude = args.magnitude;
    if (magnitude < 0.0) {
        switch (kind) {
            case DisturbanceSignal::Kind::zero: magnitude = 0.0; break;
            case DisturbanceSignal::Kind::adversarial_aligned:
                magnitude = 50.0 * eta_bar;
                break;
            default: magnitude = eta_bar * (1.0 - 1e-6); break;
        }
    }

    if (!args.x0_text.empty()) {
        // single trajectory from a user-given fault-cleared state
        Vector x0;
        if (args.x0_text == "0") {
            x0 = Vector::Zero(bundle.sys.state_dimension);
        } else {
            const auto vals = parse_list(args.x0_text, "--x0");
            if (static_cast<int>(vals.size()) != bundle.sys.state_dimension)
                throw CaseError("--x0", "expected " +
                                            std::to_string(bundle.sys.state_dimension) +
                                            " coordinates");
            x0 = Eigen::Map<const Vector>(vals.data(), vals.size());
        }
        if (!membership_X(bundle.cert, bundle.levels, bundle.sys, bundle.poly, x0))
            throw CaseError("--x0", "fault-cleared state is not inside the invariant set");

        CertificateContext ctx{&bundle.sys, &bundle.cert, &bundle.levels, &bundle.poly,
                               1e-9};
        ScenarioSpec scenario;
        scenario.initial_state = x0;
        scenario.step = args.step;
        scenario.horizon = args.horizon;
        scenario.disturbance.kind = kind;
        scenario.disturbance.magnitude = magnitude;
        scenario.disturbance.switch_period = args.switch_period;
        scenario.disturbance.seed = args.seed;
        const Trajectory traj = integrate(bundle.net, bundle.eq, scenario, &ctx);
        const std::string path = (fs::path(args.out_dir) / "trajectory.csv").string();
        write_trajectory_csv(path, traj, bundle.eq);
        std::cout << "trajectory written to " << path << "\n";
        return 0;
    }

    McConfig mc;
    mc.trials = args.trials;
    mc.seed = args.seed;
    mc.step = args.step;
    mc.horizon = args.horizon;
    mc.disturbance = kind;
    mc.magnitude = magnitude;
    mc.switch_period = args.switch_period;
    mc.shell_lo = args.shell_lo;
    const McSummary summary = monte_carlo_invariance(bundle.net, bundle.eq, bundle.cert,
                                                     bundle.levels, bundle.poly, mc);

    nlohmann::json jtrials = nlohmann::json::array();
    for (const auto& r : summary.records)
        jtrials.push_back({{"trial", r.trial},
                           {"seed", r.seed},
                           {"violated", r.violated},
                           {"first_exit_time", r.first_exit_time},
                           {"final_norm", r.final_norm},
                           {"converged", r.converged},
                           {"max_V", r.max_V}});
    nlohmann::json jsummary = {{"trials", summary.trials},
                               {"violations", summary.violations},
                               {"convergences", summary.convergences},
                               {"disturbance", args.disturbance},
                               {"magnitude", magnitude},
                               {"eta_bar", eta_bar},
                               {"seed", args.seed},
                               {"records", jtrials}};
    const std::string path = (fs::path(args.out_dir) / "mc_summary.json").string();
    std::ofstream out(path);
    out << jsummary.dump(2) << "\n";
    std::cout << "trials: " << summary.trials << ", violations: " << summary.violations
              << ", convergences: " << summary.convergences << "\n";
    std::cout << "summary written to " << path << "\n";

    if (args.traces) {
        const Vector x_f = sample_state_in_X(
            bundle.sys, bundle.cert, bundle.levels, bundle.poly,
            Rng::child_seed(args.seed, 77), args.shell_lo, 1.0, 200000);
        const Trajectory traj =
            frequency_traces(bundle.net, bundle.eq, bundle.cert, bundle.levels,
                             bundle.poly, x_f, args.step, args.horizon);
        const std::string tpath = (fs::path(args.out_dir) / "frequencies.csv").string();
        write_trajectory_csv(tpath, traj, bundle.eq);
        std::cout << "frequency traces written to " << tpath << "\n";
    }
    return summary.violations == 0 ? 0 : 3;
}

int cmd_phase_portrait(const std::string& report_path, const std::string& out_dir,
                       int n, double pad) {
    const CertificationReport rep = load_report(report_path);
    const CertificationBundle bundle = rebuild_bundle(rep);
    const PortraitGrid grid = default_portrait_grid(bundle.eq, bundle.poly, pad, n);
    const PortraitData data = phase_portrait(bundle.net, bundle.eq, bundle.cert,
                                             bundle.levels, bundle.poly, grid);
    write_portrait_csv(out_dir, data);
    std::cout << "portrait data written to " << out_dir << " (" << data.contour_vmax.size()
              << " V_max segments, " << data.contour_vhat.size() << " Vhat segments)\n";
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Transient stability certification with operational constraints "
                 "and a disturbance robustness bound"};
    app.require_subcommand(1);

    RunConfig cfg;
    std::string theta_text, omega_text;
    auto* certify = app.add_subcommand("certify", "run the certification pipeline");
    certify->add_option("--case", cfg.case_path, "case document")->required();
    certify->add_option("--theta-max", theta_text,
                        "angle-difference limit(s), rad (uniform or per-edge list)")
        ->required();
    certify->add_option("--omega-max", omega_text,
                        "frequency limit(s), rad/s (uniform or per-machine list)")
        ->required();
    certify->add_option("--eps-p", cfg.eps_P, "minimum eigenvalue of P");
    certify->add_option("--eps-gamma", cfg.eps_gamma, "minimum Gamma entry");
    certify->add_option("--eps-r", cfg.eps_R, "acceptance margin for lambda_max(R)");
    certify->add_option("--eq-tol", cfg.equilibrium_tolerance, "equilibrium residual");
    certify->add_option("--budget", cfg.budget, "certificate search iterations");
    certify->add_flag("--distribute-loads", cfg.distribute_interior_injections,
                      "shift interior injections onto boundary buses before Kron");
    certify->add_option("--seed", cfg.seed, "seed echoed into the report");
    certify->add_option("--out", cfg.out_dir, "output directory");

    SimulateArgs sim;
    auto* simulate = app.add_subcommand("simulate", "trajectories and Monte Carlo runs");
    simulate->add_option("--report", sim.report_path, "certification report")->required();
    simulate->add_option("--out", sim.out_dir, "output directory");
    simulate->add_option("--trials", sim.trials, "Monte Carlo trials");
    simulate->add_option("--disturbance", sim.disturbance,
                         "zero | constant | random | at-bound | adversarial");
    simulate->add_option("--magnitude", sim.magnitude,
                         "disturbance norm (default: kind-dependent)");
    simulate->add_option("--switch-period", sim.switch_period, "seconds");
    simulate->add_option("--seed", sim.seed, "master seed");
    simulate->add_option("--step", sim.step, "integration step, s");
    simulate->add_option("--horizon", sim.horizon, "horizon, s");
    simulate->add_option("--x0", sim.x0_text, "fault-cleared state (comma list or 0)");
    simulate->add_flag("--traces", sim.traces, "emit frequency traces");
    simulate->add_option("--shell-lo", sim.shell_lo, "boundary-shell sampling bias");

    std::string pp_report, pp_out = "portrait";
    int pp_n = 401;
    double pp_pad = 1.25;
    auto* portrait = app.add_subcommand("phase-portrait",
                                        "vector field + invariant-set contours (SMIB)");
    portrait->add_option("--report", pp_report, "certification report")->required();
    portrait->add_option("--out", pp_out, "output directory");
    portrait->add_option("--grid", pp_n, "grid points per axis");
    portrait->add_option("--pad", pp_pad, "box padding factor");

    std::string show_report;
    auto* show = app.add_subcommand("report", "pretty-print a stored report");
    show->add_option("--report", show_report, "certification report")->required();

    CLI11_PARSE(app, argc, argv);

    try {
        if (certify->parsed()) {
            cfg.theta_bar = parse_list(theta_text, "--theta-max");
            cfg.omega_bar = parse_list(omega_text, "--omega-max");
            return cmd_certify(cfg);
        }
        if (simulate->parsed()) return cmd_simulate(sim);
        if (portrait->parsed())
            return cmd_phase_portrait(pp_report, pp_out, pp_n, pp_pad);
        if (show->parsed()) {
            std::cout << pretty_print(load_report(show_report));
            return 0;
        }
    } catch (const CaseError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    } catch (const SolverError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
