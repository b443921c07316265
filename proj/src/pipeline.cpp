#include "gridcert/pipeline.hpp"

#include <filesystem>

namespace gridcert {

using nlohmann::json;

ConstraintPolytope broadcast_constraints(const LureSystem& sys,
                                         const std::vector<double>& theta_bar,
                                         const std::vector<double>& omega_bar) {
    ConstraintPolytope poly;
    if (theta_bar.size() == 1)
        poly.theta_bar = Vector::Constant(sys.edge_count, theta_bar[0]);
    else if (static_cast<int>(theta_bar.size()) == sys.edge_count)
        poly.theta_bar = Eigen::Map<const Vector>(theta_bar.data(), theta_bar.size());
    else
        throw CaseError("theta_bar", "expected 1 or " + std::to_string(sys.edge_count) +
                                         " values, got " + std::to_string(theta_bar.size()));
    if (omega_bar.size() == 1)
        poly.omega_bar = Vector::Constant(sys.machine_count, omega_bar[0]);
    else if (static_cast<int>(omega_bar.size()) == sys.machine_count)
        poly.omega_bar = Eigen::Map<const Vector>(omega_bar.data(), omega_bar.size());
    else
        throw CaseError("omega_bar", "expected 1 or " + std::to_string(sys.machine_count) +
                                         " values, got " + std::to_string(omega_bar.size()));
    return poly;
}

namespace {

json config_echo(const RunConfig& cfg) {
    return json{{"case", cfg.case_path},
                {"theta_bar", cfg.theta_bar},
                {"omega_bar", cfg.omega_bar},
                {"eps_P", cfg.eps_P},
                {"eps_gamma", cfg.eps_gamma},
                {"eps_R", cfg.eps_R},
                {"equilibrium_tolerance", cfg.equilibrium_tolerance},
                {"budget", cfg.budget},
                {"distribute_interior_injections", cfg.distribute_interior_injections},
                {"step", cfg.step},
                {"horizon", cfg.horizon},
                {"trials", cfg.trials},
                {"seed", cfg.seed}};
}

} // namespace

CertifyOutcome run_certify(const RunConfig& cfg) {
    CertifyOutcome out;
    std::string stage = "config";
    try {
        for (double t : {cfg.eps_P, cfg.eps_gamma, cfg.eps_R, cfg.equilibrium_tolerance})
            if (!(t > 0.0)) throw CaseError("tolerances", "all tolerances must be > 0");
        if (cfg.theta_bar.empty() || cfg.omega_bar.empty())
            throw CaseError("constraints", "theta_bar and omega_bar are required");

        stage = "parse";
        PowerNetwork net = parse_case_file(cfg.case_path);
        const int original_buses = net.bus_count();

        stage = "kron_reduce";
        const bool needs_reduction = net.interior_count() > 0;
        if (needs_reduction)
            net = kron_reduce(net, {cfg.distribute_interior_injections});

        stage = "solve_equilibrium";
        EquilibriumOptions eq_opts;
        eq_opts.tolerance = cfg.equilibrium_tolerance;
        EquilibriumState eq = solve_equilibrium(net, eq_opts);
        if (!eq.within_half_pi)
            throw CaseError("equilibrium",
                            "equilibrium angle spread reaches pi/2; certification "
                            "refuses this operating point");

        stage = "build_lure";
        LureSystem sys = build_lure(net, eq);

        stage = "sector_bounds";
        ConstraintPolytope poly =
            broadcast_constraints(sys, cfg.theta_bar, cfg.omega_bar);
        SectorBounds sector = sector_bounds(sys, poly);

        CertificationReport rep;
        rep.case_path = cfg.case_path;
        rep.reduced_case = serialize_case(net);
        rep.original_bus_count = original_buses;
        rep.kron_applied = needs_reduction;
        rep.equilibrium = eq;
        rep.polytope = poly;
        rep.sector = sector;
        rep.config_echo = config_echo(cfg);

        stage = "find_certificate";
        SearchOptions sopts;
        sopts.tol = {cfg.eps_P, cfg.eps_gamma, cfg.eps_R};
        sopts.budget = cfg.budget;
        CertificateSearchResult search = find_certificate(sys, sector, sopts);

        rep.status = search.status;
        rep.iterations = search.iterations;
        rep.first_feasible_iteration = search.first_feasible_iteration;
        rep.tolerances = sopts.tol;
        rep.budget = sopts.budget;
        if (search.status != SearchStatus::non_hurwitz) {
            rep.P = search.params.lyapunov.P;
            rep.lambda = search.params.lyapunov.lambda;
            rep.gamma = search.params.assembly.gamma;
            rep.margin = search.params.margin;
            rep.lambda_max_R = search.verification.lambda_max_R;
            rep.lambda_min_P = search.verification.lambda_min_P;
        } else {
            const int dim = sys.state_dimension;
            rep.P = Matrix::Zero(dim, dim);
            rep.lambda = Vector::Zero(sys.edge_count);
            rep.gamma = Vector::Zero(sys.edge_count);
        }

        if (search.status == SearchStatus::accepted) {
            stage = "compute_level_sets";
            rep.levels = compute_level_sets(search.params, sys, poly);
            rep.has_levels = true;

            stage = "compute_eta_bar";
            rep.robustness = compute_eta_bar(search.params, sys, rep.levels);
            rep.has_robustness = true;
        }

        stage = "write_report";
        std::filesystem::create_directories(cfg.out_dir);
        out.report_path =
            (std::filesystem::path(cfg.out_dir) / "report.json").string();
        save_report(out.report_path, rep);

        out.report = std::move(rep);
        out.exit_code = (search.status == SearchStatus::accepted) ? 0 : 2;
        if (out.exit_code == 2)
            out.error = "certificate search did not reach feasibility (stage "
                        "find_certificate); this does not prove the LMI infeasible";
        return out;
    } catch (const CaseError& e) {
        out.exit_code = 1;
        out.error = "[" + stage + "] " + e.what();
        return out;
    } catch (const SolverError& e) {
        out.exit_code = 1;
        out.error = "[" + stage + "] " + e.what();
        return out;
    }
}

} // namespace gridcert
