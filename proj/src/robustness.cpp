#include "gridcert/robustness.hpp"
#include "gridcert/sim.hpp"

#include <Eigen/Eigenvalues>
#include <Eigen/SVD>

#include <cmath>
#include <sstream>

namespace gridcert {

namespace {

double spectral_norm(const Matrix& M) {
    Eigen::JacobiSVD<Matrix> svd(M);
    return svd.singularValues()(0);
}

} // namespace

RobustnessReport compute_eta_bar(const CertificateParams& cert, const LureSystem& sys,
                                 const LevelSetReport& levels) {
    if (!(cert.margin > 0.0))
        throw SolverError("compute_eta_bar: certificate margin must be positive (R < 0)");
    if (!(levels.Vhat_max > 0.0))
        throw SolverError("compute_eta_bar: Vhat_max must be positive");

    RobustnessReport rep;
    for (int k = 0; k < sys.edge_count; ++k)
        rep.mu = std::max(rep.mu, cert.lyapunov.lambda(k) *
                                      (cert.sector.upper(k) - cert.sector.lower(k)));

    Eigen::SelfAdjointEigenSolver<Matrix> ep(cert.lyapunov.P, Eigen::EigenvaluesOnly);
    rep.psi1 = ep.eigenvalues().minCoeff();
    rep.C_norm = spectral_norm(sys.C);
    rep.psi2 = ep.eigenvalues().maxCoeff() + rep.mu * rep.C_norm * rep.C_norm;

    Eigen::SelfAdjointEigenSolver<Matrix> er(cert.assembly.R, Eigen::EigenvaluesOnly);
    rep.sigma_min_negR = -er.eigenvalues().maxCoeff();
    rep.PH_norm = spectral_norm(cert.lyapunov.P * sys.H);
    rep.Vhat_max = levels.Vhat_max;

    rep.eta_bar = rep.sigma_min_negR / (2.0 * rep.PH_norm * std::sqrt(rep.psi2)) *
                  std::sqrt(rep.Vhat_max);

    std::ostringstream os;
    os << "{eta : ||eta(t)||_2 < " << rep.eta_bar
       << " p.u. for all t} (Euclidean norm across machines, sup over time)";
    rep.region_Xi = os.str();
    return rep;
}

LissViolation liss_bound_check(const CertificateParams& cert, const LureSystem& sys,
                               const ConstraintPolytope& poly,
                               const LevelSetReport& levels, const Trajectory& traj) {
    LissViolation out;
    if (traj.states.size() < 2) return out;

    Eigen::SelfAdjointEigenSolver<Matrix> er(cert.assembly.R, Eigen::EigenvaluesOnly);
    const double sigma = -er.eigenvalues().maxCoeff();
    const double ph = spectral_norm(cert.lyapunov.P * sys.H);
    const double dt = traj.times[1] - traj.times[0];

    auto inside_P = [&](const Vector& x) {
        const Vector edge = sys.equilibrium_edge_angles + sys.C * x;
        for (int k = 0; k < sys.edge_count; ++k)
            if (std::abs(edge(k)) > poly.theta_bar(k)) return false;
        return true;
    };

    for (std::size_t i = 0; i + 1 < traj.states.size(); ++i) {
        const Vector& x0 = traj.states[i];
        const Vector& x1 = traj.states[i + 1];
        const double v0 = evaluate_V(cert.lyapunov, sys, cert.sector, x0);
        const double v1 = evaluate_V(cert.lyapunov, sys, cert.sector, x1);

        if (v0 > levels.V_max * (1.0 + 1e-9) + 1e-12) {
            out.found = true;
            out.time = traj.times[i];
            out.what = "V exceeded V_max";
            return out;
        }
        // the sector condition only holds inside the polytope
        if (!inside_P(x0) || !inside_P(x1)) continue;

        const double vdot = (v1 - v0) / dt;
        const double eta0 = traj.disturbances[i].norm();
        auto bound = [&](const Vector& x, double eta_norm) {
            const double nx = x.norm();
            return -sigma * nx * nx + 2.0 * ph * nx * eta_norm;
        };
        const double b = std::max(bound(x0, eta0), bound(x1, eta0));
        // first-order finite-difference slack plus an absolute floor
        const double tol = 10.0 * dt * (1.0 + std::abs(vdot)) + 1e-8;
        if (vdot > b + tol) {
            out.found = true;
            out.time = traj.times[i];
            out.what = "dissipation inequality violated";
            return out;
        }
    }
    return out;
}

} // namespace gridcert
