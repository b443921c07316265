#include "gridcert/lure.hpp"

#include <cmath>

namespace gridcert {

LureSystem build_lure(const PowerNetwork& net, const EquilibriumState& eq) {
    if (!net.reduced())
        throw SolverError("build_lure: network still has interior buses");
    if (eq.angles.size() != net.machine_count())
        throw SolverError("build_lure: equilibrium dimension mismatch");
    if (!eq.converged)
        throw SolverError("build_lure: equilibrium not accepted");

    const int n = net.machine_count();
    const int m = net.edge_count();

    LureSystem sys;
    sys.machine_count = n;
    sys.edge_count = m;
    sys.state_dimension = 2 * n;
    sys.equilibrium = eq;
    sys.equilibrium_edge_angles = edge_angles(net, eq.angles, eq.reference_angle);
    sys.machine_incidence = net.machine_incidence();
    sys.edge_weights = net.edge_weights();
    sys.inertia = net.inertia_matrix();
    sys.damping = net.damping_matrix();
    sys.injection = net.injection_vector();

    const Matrix& Em = sys.machine_incidence;
    const Vector minv = sys.inertia.cwiseInverse();
    const Vector cos_eq = sys.equilibrium_edge_angles.array().cos();

    const Matrix weighted_laplacian =
        Em * (sys.edge_weights.array() * cos_eq.array()).matrix().asDiagonal() *
        Em.transpose();

    sys.A = Matrix::Zero(2 * n, 2 * n);
    sys.A.topRightCorner(n, n) = Matrix::Identity(n, n);
    sys.A.bottomLeftCorner(n, n) = -(minv.asDiagonal() * weighted_laplacian);
    sys.A.bottomRightCorner(n, n) = (-(minv.array() * sys.damping.array())).matrix().asDiagonal();

    sys.B = Matrix::Zero(2 * n, m);
    sys.B.bottomRows(n) = minv.asDiagonal() * Em * sys.edge_weights.asDiagonal();

    sys.C = Matrix::Zero(m, 2 * n);
    sys.C.leftCols(n) = Em.transpose();

    sys.H = Matrix::Zero(2 * n, n);
    sys.H.bottomRows(n) = minv.asDiagonal();

    return sys;
}

double phi_scalar(double eq_angle, double z) {
    const double th = eq_angle + z;
    return (std::sin(th) - std::sin(eq_angle)) - std::cos(eq_angle) * z;
}

Vector nonlinearity_phi(const LureSystem& sys, const Vector& z) {
    Vector phi(sys.edge_count);
    for (int k = 0; k < sys.edge_count; ++k)
        phi(k) = phi_scalar(sys.equilibrium_edge_angles(k), z(k));
    return phi;
}

namespace {

// The injection is taken as E Y sin(E^T theta*), the value the solved
// equilibrium actually balances, so x = 0 is an exact fixed point even
// though Newton only reaches the equilibrium tolerance. The two differ by
// at most that tolerance.
Vector rhs_nonlinear_impl(const Matrix& Em, const Vector& y, const Vector& minertia,
                          const Vector& damping, const Vector& eq_edge,
                          const Vector& x, const Vector& eta) {
    const int n = static_cast<int>(minertia.size());
    const Vector dtheta = x.head(n);
    const Vector omega = x.tail(n);

    // theta_ij = theta*_ij + (E^T dtheta) on machine rows; reference shift cancels
    const Vector edge = eq_edge + Em.transpose() * dtheta;
    const Vector delta_flow =
        Em * (y.array() * (eq_edge.array().sin() - edge.array().sin())).matrix();

    Vector xdot(2 * n);
    xdot.head(n) = omega;
    xdot.tail(n) =
        (delta_flow - damping.cwiseProduct(omega) + eta).cwiseQuotient(minertia);
    return xdot;
}

} // namespace

Vector rhs_nonlinear(const PowerNetwork& net, const EquilibriumState& eq,
                     const Vector& x, const Vector& eta) {
    return rhs_nonlinear_impl(net.machine_incidence(), net.edge_weights(),
                              net.inertia_matrix(), net.damping_matrix(),
                              edge_angles(net, eq.angles, eq.reference_angle), x, eta);
}

Vector rhs_nonlinear(const LureSystem& sys, const Vector& x, const Vector& eta) {
    return rhs_nonlinear_impl(sys.machine_incidence, sys.edge_weights, sys.inertia,
                              sys.damping, sys.equilibrium_edge_angles, x, eta);
}

Vector rhs_lure(const LureSystem& sys, const Vector& x, const Vector& eta) {
    return sys.A * x - sys.B * nonlinearity_phi(sys, sys.C * x) + sys.H * eta;
}

ConstraintPolytope uniform_polytope(const LureSystem& sys, double theta_bar,
                                    double omega_bar) {
    return {Vector::Constant(sys.edge_count, theta_bar),
            Vector::Constant(sys.machine_count, omega_bar)};
}

void validate_polytope(const LureSystem& sys, const ConstraintPolytope& poly) {
    if (poly.theta_bar.size() != sys.edge_count)
        throw CaseError("theta_bar", "expected one angle limit per edge");
    if (poly.omega_bar.size() != sys.machine_count)
        throw CaseError("omega_bar", "expected one frequency limit per machine");
    for (int k = 0; k < sys.edge_count; ++k) {
        const double eq = std::abs(sys.equilibrium_edge_angles(k));
        const double tb = poly.theta_bar(k);
        if (!(tb > eq))
            throw CaseError("theta_bar[" + std::to_string(k) + "]",
                            "angle limit must exceed the equilibrium angle |" +
                                std::to_string(eq) + "|");
        if (!(tb <= M_PI - eq))
            throw CaseError("theta_bar[" + std::to_string(k) + "]",
                            "angle limit must stay within pi - |theta*|");
    }
    for (int i = 0; i < sys.machine_count; ++i) {
        if (!(poly.omega_bar(i) > 0.0))
            throw CaseError("omega_bar[" + std::to_string(i) + "]",
                            "frequency limit must be > 0");
    }
}

namespace {

double chord_slope(double eq_angle, double th) {
    const double dz = th - eq_angle;
    if (std::abs(dz) < 1e-9) {
        // continuous extension; second-order correction keeps the scan smooth
        return std::cos(eq_angle) - 0.5 * std::sin(eq_angle) * dz;
    }
    return (std::sin(th) - std::sin(eq_angle)) / dz;
}

double golden_section(double eq_angle, double lo, double hi) {
    constexpr double inv_phi = 0.6180339887498949;
    double a = lo, b = hi;
    double x1 = b - inv_phi * (b - a);
    double x2 = a + inv_phi * (b - a);
    double f1 = chord_slope(eq_angle, x1);
    double f2 = chord_slope(eq_angle, x2);
    while (b - a > 1e-13) {
        if (f1 <= f2) {
            b = x2;
            x2 = x1;
            f2 = f1;
            x1 = b - inv_phi * (b - a);
            f1 = chord_slope(eq_angle, x1);
        } else {
            a = x1;
            x1 = x2;
            f1 = f2;
            x2 = a + inv_phi * (b - a);
            f2 = chord_slope(eq_angle, x2);
        }
    }
    return std::min(f1, f2);
}

} // namespace

double min_chord_slope(double eq_angle, double theta_bar) {
    constexpr int grid_points = 10000;
    const double lo = -theta_bar;
    const double hi = theta_bar;
    const double h = (hi - lo) / (grid_points - 1);

    double best = std::min(chord_slope(eq_angle, lo), chord_slope(eq_angle, hi));
    std::vector<double> f(grid_points);
    for (int i = 0; i < grid_points; ++i) f[i] = chord_slope(eq_angle, lo + i * h);

    // refine every local minimum bracket; the slope can have several dips
    for (int i = 0; i < grid_points; ++i) {
        const bool left_ok = (i == 0) || f[i] <= f[i - 1];
        const bool right_ok = (i == grid_points - 1) || f[i] <= f[i + 1];
        if (!(left_ok && right_ok)) continue;
        const double a = lo + std::max(0, i - 1) * h;
        const double b = lo + std::min(grid_points - 1, i + 1) * h;
        best = std::min(best, golden_section(eq_angle, a, b));
    }
    return best;
}

SectorBounds sector_bounds(const Vector& eq_edge_angles, const Vector& theta_bar) {
    const int m = static_cast<int>(eq_edge_angles.size());
    SectorBounds sb;
    sb.kind = SectorSetKind::general;
    sb.theta_bar = theta_bar;
    sb.lower.resize(m);
    sb.upper.resize(m);
    sb.xi.resize(m);
    for (int k = 0; k < m; ++k) {
        const double eq = eq_edge_angles(k);
        const double tb = theta_bar(k);
        if (std::abs(eq) >= M_PI / 2.0)
            throw CaseError("equilibrium",
                            "edge " + std::to_string(k) +
                                ": |theta*| must be below pi/2 for sector bounds");
        if (std::abs(eq) >= tb)
            throw CaseError("theta_bar[" + std::to_string(k) + "]",
                            "equilibrium angle lies outside the constraint window");
        sb.upper(k) = 1.0 - std::cos(eq);
        // floor slightly so the returned slope never over-estimates the true inf
        sb.lower(k) = min_chord_slope(eq, tb) - std::cos(eq) - 1e-13;
        sb.xi(k) = (1.0 - std::sin(std::abs(eq))) / (M_PI / 2.0 - std::abs(eq));
    }
    return sb;
}

SectorBounds sector_bounds(const LureSystem& sys, const ConstraintPolytope& poly) {
    validate_polytope(sys, poly);
    return sector_bounds(sys.equilibrium_edge_angles, poly.theta_bar);
}

SectorBounds sector_bounds_p1(const Vector& eq_edge_angles) {
    const int m = static_cast<int>(eq_edge_angles.size());
    SectorBounds sb;
    sb.kind = SectorSetKind::p1;
    sb.lower.resize(m);
    sb.upper.resize(m);
    sb.xi.resize(m);
    sb.theta_bar.resize(m);
    for (int k = 0; k < m; ++k) {
        const double eq = eq_edge_angles(k);
        sb.lower(k) = -std::cos(eq);
        sb.upper(k) = 1.0 - std::cos(eq);
        sb.xi(k) = (1.0 - std::sin(std::abs(eq))) / (M_PI / 2.0 - std::abs(eq));
        sb.theta_bar(k) = M_PI - std::abs(eq);
    }
    return sb;
}

SectorBounds sector_bounds_p2(const Vector& eq_edge_angles) {
    const int m = static_cast<int>(eq_edge_angles.size());
    SectorBounds sb;
    sb.kind = SectorSetKind::p2;
    sb.lower.resize(m);
    sb.upper.resize(m);
    sb.xi.resize(m);
    sb.theta_bar = Vector::Constant(m, M_PI / 2.0);
    for (int k = 0; k < m; ++k) {
        const double eq = eq_edge_angles(k);
        const double xi = (1.0 - std::sin(std::abs(eq))) / (M_PI / 2.0 - std::abs(eq));
        sb.lower(k) = xi - std::cos(eq);
        sb.upper(k) = 1.0 - std::cos(eq);
        sb.xi(k) = xi;
    }
    return sb;
}

} // namespace gridcert
