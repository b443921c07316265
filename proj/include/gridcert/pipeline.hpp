#pragma once

#include "gridcert/report.hpp"

namespace gridcert {

/// One run of the full certification pipeline:
/// parse -> kron_reduce -> solve_equilibrium -> build_lure -> sector_bounds
/// -> find_certificate -> compute_level_sets -> compute_eta_bar.
struct RunConfig {
    std::string case_path;
    std::vector<double> theta_bar;  // single value broadcasts to all edges
    std::vector<double> omega_bar;  // single value broadcasts to all machines
    double eps_P = 1e-6;
    double eps_gamma = 1e-6;
    double eps_R = 1e-8;
    double equilibrium_tolerance = 1e-10;
    int budget = 50000;
    bool distribute_interior_injections = false;
    double step = 1e-3;
    double horizon = 50.0;
    int trials = 100;
    std::uint64_t seed = 1;
    std::string out_dir = ".";
};

struct CertifyOutcome {
    int exit_code = 0;  // 0 success, 2 search-infeasibility, 1 input error
    CertificationReport report;
    std::string error;
    std::string report_path;
};

/// Runs the pipeline and writes <out_dir>/report.json (also on search
/// failure, for auditing). Input errors produce no report.
CertifyOutcome run_certify(const RunConfig& cfg);

ConstraintPolytope broadcast_constraints(const LureSystem& sys,
                                         const std::vector<double>& theta_bar,
                                         const std::vector<double>& omega_bar);

} // namespace gridcert
