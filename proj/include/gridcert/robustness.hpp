#pragma once

#include "gridcert/levelset.hpp"

namespace gridcert {

/// Every factor of the disturbance bound
///   eta_bar = sigma_min(-R) / (2 ||P H|| sqrt(sigma_max(P) + mu ||C||^2))
///             * sqrt(Vhat_max)
/// is recorded so the sources of conservatism stay auditable.
struct RobustnessReport {
    double mu = 0.0;              // max_k lambda_k (dhi_k - dlo_k)
    double psi1 = 0.0;            // sigma_min(P)
    double psi2 = 0.0;            // sigma_max(P) + mu ||C||^2
    double sigma_min_negR = 0.0;  // = -lambda_max(R)
    double PH_norm = 0.0;         // spectral norm of P H
    double C_norm = 0.0;          // spectral norm of C
    double Vhat_max = 0.0;
    double eta_bar = 0.0;
    std::string region_Xi;  // description of {eta : ||eta||_Linf < eta_bar}
};

RobustnessReport compute_eta_bar(const CertificateParams& cert, const LureSystem& sys,
                                 const LevelSetReport& levels);

struct Trajectory;  // sim.hpp

struct LissViolation {
    bool found = false;
    double time = 0.0;
    std::string what;
};

/// Checks the dissipation inequality
///   Vdot <= -sigma_min(-R) ||x||^2 + 2 ||P H|| ||x|| ||eta||
/// pointwise along a simulated trajectory (finite-difference Vdot), and that
/// V never exceeds V_max while the state stays inside the angle polytope.
LissViolation liss_bound_check(const CertificateParams& cert, const LureSystem& sys,
                               const ConstraintPolytope& poly,
                               const LevelSetReport& levels, const Trajectory& traj);

} // namespace gridcert
