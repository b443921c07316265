#pragma once

#include "gridcert/network.hpp"

namespace gridcert {

/// Post-fault dynamics around the equilibrium, written as
///   xdot = A x - B phi(C x) + H eta,   x = (theta - theta*, omega).
/// phi acts edge-wise on z = C x (the angle-difference deviations).
struct LureSystem {
    Matrix A;  // 2n x 2n
    Matrix B;  // 2n x |E|
    Matrix C;  // |E| x 2n
    Matrix H;  // 2n x n

    EquilibriumState equilibrium;
    Vector equilibrium_edge_angles;  // theta*_ij per edge

    // copies of the network data the exact right-hand side needs
    Matrix machine_incidence;
    Vector edge_weights;
    Vector inertia;
    Vector damping;
    Vector injection;

    int machine_count = 0;
    int edge_count = 0;
    int state_dimension = 0;  // 2n
};

LureSystem build_lure(const PowerNetwork& net, const EquilibriumState& eq);

/// phi_k(z_k) = (sin th_ij - sin th*_ij) - cos th*_ij (th_ij - th*_ij),
/// th_ij = z_k + th*_ij.
Vector nonlinearity_phi(const LureSystem& sys, const Vector& z);
double phi_scalar(double eq_angle, double z);

/// Exact nonlinear right-hand side in shifted coordinates. The injection is
/// evaluated as E Y sin(E^T theta*) so the origin is an exact fixed point;
/// this differs from the raw P by at most the equilibrium tolerance.
Vector rhs_nonlinear(const PowerNetwork& net, const EquilibriumState& eq,
                     const Vector& x, const Vector& eta);
Vector rhs_nonlinear(const LureSystem& sys, const Vector& x, const Vector& eta);

/// Same vector field evaluated through the Lur'e decomposition.
Vector rhs_lure(const LureSystem& sys, const Vector& x, const Vector& eta);

/// Operational constraints: |theta_ij| <= theta_bar per edge,
/// |omega_i| <= omega_bar per machine.
struct ConstraintPolytope {
    Vector theta_bar;  // per edge, radians
    Vector omega_bar;  // per machine, rad/s
};

ConstraintPolytope uniform_polytope(const LureSystem& sys, double theta_bar,
                                    double omega_bar);

/// Throws CaseError unless |th*_ij| < theta_bar_ij <= pi - |th*_ij| and
/// omega_bar > 0 on every entry.
void validate_polytope(const LureSystem& sys, const ConstraintPolytope& poly);

enum class SectorSetKind { p1, p2, general };

struct SectorBounds {
    Vector lower;      // delta_lo per edge
    Vector upper;      // delta_hi = 1 - cos th*_ij per edge
    Vector xi;         // (1 - sin|th*|)/(pi/2 - |th*|) per edge
    Vector theta_bar;  // the window the lower bound was tightened over
    SectorSetKind kind = SectorSetKind::general;
};

/// Sector envelope of phi_k over th_ij in [-theta_bar, theta_bar]:
/// upper bound 1 - cos th*, lower bound inf of the chord slope
/// (sin th - sin th*)/(th - th*) minus cos th*, found by a dense grid scan
/// with golden-section refinement.
SectorBounds sector_bounds(const LureSystem& sys, const ConstraintPolytope& poly);
SectorBounds sector_bounds(const Vector& eq_edge_angles, const Vector& theta_bar);

/// Closed-form bounds for the half-range and full-range windows, kept as
/// regression oracles for the numeric scan.
SectorBounds sector_bounds_p1(const Vector& eq_edge_angles);
SectorBounds sector_bounds_p2(const Vector& eq_edge_angles);

/// min over th in [-theta_bar, theta_bar] of (sin th - sin th*)/(th - th*),
/// extended continuously to cos th* at th = th*.
double min_chord_slope(double eq_angle, double theta_bar);

} // namespace gridcert
