#pragma once

#include "gridcert/levelset.hpp"
#include "gridcert/robustness.hpp"

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

namespace gridcert {

struct DisturbanceSignal {
    enum class Kind { zero, constant_direction, piecewise_constant_random, adversarial_aligned };
    Kind kind = Kind::zero;
    double magnitude = 0.0;      // Euclidean sup-norm budget, enforced exactly
    double switch_period = 0.1;  // seconds, rounded to a multiple of the step
    std::uint64_t seed = 0;
    Vector direction;            // optional fixed direction (constant_direction)
};

struct ScenarioSpec {
    Vector initial_state;  // shifted coordinates x_f
    double step = 1e-3;
    double horizon = 50.0;
    DisturbanceSignal disturbance;
    int record_stride = 1;
};

struct Trajectory {
    std::vector<double> times;
    std::vector<Vector> states;        // x(t), shifted coordinates
    std::vector<Vector> disturbances;  // eta(t)
    std::vector<double> V_values;      // empty without certificate context
    std::vector<bool> in_X;
    bool diverged = false;
    double step = 0.0;
    ScenarioSpec scenario;
};

/// Everything the simulator needs to evaluate V / membership along the way.
struct CertificateContext {
    const LureSystem* system = nullptr;
    const CertificateParams* certificate = nullptr;
    const LevelSetReport* levels = nullptr;
    const ConstraintPolytope* polytope = nullptr;
    double membership_slack = 1e-9;
};

/// One classic fourth-order step for a generic vector field.
Vector rk4_step(const std::function<Vector(double, const Vector&)>& f, double t,
                const Vector& x, double dt);

/// Fixed-step integration of the exact nonlinear post-fault dynamics with
/// the disturbance held constant across each step (switch instants are
/// aligned to the step grid). Non-finite states truncate the trajectory
/// and set `diverged`.
Trajectory integrate(const PowerNetwork& net, const EquilibriumState& eq,
                     const ScenarioSpec& scenario,
                     const CertificateContext* ctx = nullptr);

struct McConfig {
    int trials = 100;
    std::uint64_t seed = 1;
    double step = 1e-3;
    double horizon = 50.0;
    DisturbanceSignal::Kind disturbance = DisturbanceSignal::Kind::zero;
    double magnitude = 0.0;
    double switch_period = 0.1;
    double shell_lo = 0.9;  // initial states rejected into V in [lo,hi]*V_max
    double shell_hi = 1.0;
    double membership_slack = 1e-9;
    double convergence_norm = 1e-3;  // ||x(T)|| threshold counted as converged
    int max_sample_attempts = 200000;
};

struct TrialRecord {
    int trial = 0;
    std::uint64_t seed = 0;
    bool violated = false;          // left X at some sample
    double first_exit_time = -1.0;  // -1 when never
    double final_norm = 0.0;
    bool converged = false;
    double max_V = 0.0;
};

struct McSummary {
    int trials = 0;
    int violations = 0;
    int convergences = 0;
    std::vector<TrialRecord> records;
};

/// Monte Carlo invariance study; trials are independent and run across
/// OpenMP threads with per-trial deterministic generators.
McSummary monte_carlo_invariance(const PowerNetwork& net, const EquilibriumState& eq,
                                 const CertificateParams& cert,
                                 const LevelSetReport& levels,
                                 const ConstraintPolytope& poly, const McConfig& cfg);

/// Serial reference; must produce bit-identical summaries.
McSummary monte_carlo_invariance_serial(const PowerNetwork& net,
                                        const EquilibriumState& eq,
                                        const CertificateParams& cert,
                                        const LevelSetReport& levels,
                                        const ConstraintPolytope& poly,
                                        const McConfig& cfg);

/// Rejection-samples one state from the boundary shell of X.
Vector sample_state_in_X(const LureSystem& sys, const CertificateParams& cert,
                         const LevelSetReport& levels, const ConstraintPolytope& poly,
                         std::uint64_t seed, double shell_lo, double shell_hi,
                         int max_attempts);

struct PortraitGrid {
    double theta_min = 0.0, theta_max = 0.0;  // raw angle range
    double omega_min = 0.0, omega_max = 0.0;
    int n_theta = 401;
    int n_omega = 401;
};

struct ContourSegment {
    double x0, y0, x1, y1;
};

struct PortraitData {
    PortraitGrid grid;
    std::vector<double> theta_samples;  // raw angle
    std::vector<double> omega_samples;
    std::vector<double> dtheta;  // field, row-major over (omega, theta)
    std::vector<double> domega;
    std::vector<ContourSegment> contour_vmax;
    std::vector<ContourSegment> contour_vhat;
    double theta_bar = 0.0;
    double omega_bar = 0.0;
    double equilibrium_angle = 0.0;
    double edge_orientation = 1.0;  // d(theta_ij)/dt = orientation * omega
};

/// Single-machine phase portrait: vector field on the grid plus the
/// V = V_max and V = Vhat_max contours (marching squares).
PortraitData phase_portrait(const PowerNetwork& net, const EquilibriumState& eq,
                            const CertificateParams& cert,
                            const LevelSetReport& levels,
                            const ConstraintPolytope& poly,
                            const PortraitGrid& grid_spec);

/// Default grid covering the constraint box with some margin.
PortraitGrid default_portrait_grid(const EquilibriumState& eq,
                                   const ConstraintPolytope& poly,
                                   double pad = 1.25, int n = 401);

/// Trajectory from a fault-cleared state inside X; throws CaseError when
/// x_f is not a member.
Trajectory frequency_traces(const PowerNetwork& net, const EquilibriumState& eq,
                            const CertificateParams& cert,
                            const LevelSetReport& levels,
                            const ConstraintPolytope& poly, const Vector& x_f,
                            double step = 1e-3, double horizon = 50.0);

/// Columns: t, theta_1..n (raw machine angles), omega_1..n, eta_1..n, V, in_X.
void write_trajectory_csv(const std::string& path, const Trajectory& traj,
                          const EquilibriumState& eq);
void write_portrait_csv(const std::string& directory, const PortraitData& data);

} // namespace gridcert
