#include "gridcert/sim.hpp"
#include "gridcert/rng.hpp"

#include <Eigen/Eigenvalues>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <iomanip>

namespace gridcert {

Vector rk4_step(const std::function<Vector(double, const Vector&)>& f, double t,
                const Vector& x, double dt) {
    const Vector k1 = f(t, x);
    const Vector k2 = f(t + 0.5 * dt, x + 0.5 * dt * k1);
    const Vector k3 = f(t + 0.5 * dt, x + 0.5 * dt * k2);
    const Vector k4 = f(t + dt, x + dt * k3);
    return x + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
}

namespace {

/// Allocation-free right-hand side of the shifted swing dynamics. Uses the
/// equilibrium-implied injection E Y sin(E^T theta*), matching rhs_nonlinear,
/// so x = 0 is an exact fixed point.
struct SwingRhs {
    Matrix Em;        // machine incidence
    Matrix EmT;
    Vector y;
    Vector minv;
    Vector damping;
    Vector eq_edge;
    Vector sin_eq;
    int n = 0;

    mutable Vector edge, weighted, flow;

    SwingRhs(const PowerNetwork& net, const EquilibriumState& eq)
        : Em(net.machine_incidence()),
          EmT(Em.transpose()),
          y(net.edge_weights()),
          minv(net.inertia_matrix().cwiseInverse()),
          damping(net.damping_matrix()),
          eq_edge(edge_angles(net, eq.angles, eq.reference_angle)),
          sin_eq(eq_edge.array().sin()),
          n(net.machine_count()),
          edge(net.edge_count()),
          weighted(net.edge_count()),
          flow(net.machine_count()) {}

    void operator()(const Vector& x, const Vector& eta, Vector& out) const {
        edge.noalias() = EmT * x.head(n);
        edge += eq_edge;
        weighted = (y.array() * (sin_eq.array() - edge.array().sin())).matrix();
        flow.noalias() = Em * weighted;
        out.head(n) = x.tail(n);
        out.tail(n) = minv.array() *
                      (flow - damping.cwiseProduct(x.tail(n)) + eta).array();
    }
};

struct Stepper {
    Vector k1, k2, k3, k4, tmp;

    explicit Stepper(int dim) : k1(dim), k2(dim), k3(dim), k4(dim), tmp(dim) {}

    void advance(const SwingRhs& f, Vector& x, const Vector& eta, double dt) {
        f(x, eta, k1);
        tmp = x + (0.5 * dt) * k1;
        f(tmp, eta, k2);
        tmp = x + (0.5 * dt) * k2;
        f(tmp, eta, k3);
        tmp = x + dt * k3;
        f(tmp, eta, k4);
        x += (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
    }
};

class DisturbanceGenerator {
public:
    DisturbanceGenerator(const DisturbanceSignal& sig, int n, double step,
                         const CertificateContext* ctx)
        : sig_(sig), rng_(sig.seed), ctx_(ctx), eta_(Vector::Zero(n)), n_(n) {
        switch_steps_ = std::max(1, static_cast<int>(std::llround(sig.switch_period / step)));
        if (sig_.kind == DisturbanceSignal::Kind::adversarial_aligned &&
            (ctx_ == nullptr || ctx_->certificate == nullptr || ctx_->system == nullptr))
            throw SolverError("adversarial disturbance needs a certificate context");
        if (sig_.kind == DisturbanceSignal::Kind::constant_direction) {
            Vector dir = sig_.direction.size() == n ? sig_.direction
                                                    : Vector(rng_.unit_vector(n));
            const double nrm = dir.norm();
            eta_ = (nrm > 0.0) ? Vector(sig_.magnitude * dir / nrm) : Vector::Zero(n);
        }
    }

    const Vector& at_step(int step_index, const Vector& x) {
        switch (sig_.kind) {
            case DisturbanceSignal::Kind::zero:
            case DisturbanceSignal::Kind::constant_direction:
                break;
            case DisturbanceSignal::Kind::piecewise_constant_random:
                if (step_index % switch_steps_ == 0)
                    eta_ = sig_.magnitude * rng_.unit_vector(n_);
                break;
            case DisturbanceSignal::Kind::adversarial_aligned:
                if (step_index % switch_steps_ == 0) {
                    // steepest ascent of the cross term 2 x^T P H eta
                    const Matrix& P = ctx_->certificate->lyapunov.P;
                    Vector dir = ctx_->system->H.transpose() * (P * x);
                    const double nrm = dir.norm();
                    eta_ = (nrm > 1e-14) ? Vector(sig_.magnitude * dir / nrm)
                                         : Vector(sig_.magnitude * rng_.unit_vector(n_));
                }
                break;
        }
        return eta_;
    }

private:
    DisturbanceSignal sig_;
    Rng rng_;
    const CertificateContext* ctx_;
    Vector eta_;
    int n_;
    int switch_steps_ = 1;
};

/// Allocation-free V / membership evaluation for the Monte Carlo hot loop;
/// small-vector heap traffic otherwise serializes the trial threads.
struct TrialEvaluator {
    const CertificateParams& cert;
    const LureSystem& sys;
    const ConstraintPolytope& poly;
    Matrix EmT;
    mutable Vector z, Px;

    TrialEvaluator(const CertificateParams& cert_, const LureSystem& sys_,
                   const ConstraintPolytope& poly_)
        : cert(cert_),
          sys(sys_),
          poly(poly_),
          EmT(sys_.machine_incidence.transpose()),
          z(sys_.edge_count),
          Px(sys_.state_dimension) {}

    double V(const Vector& x) const {
        z.noalias() = EmT * x.head(sys.machine_count);
        Px.noalias() = cert.lyapunov.P * x;
        double v = x.dot(Px);
        for (int k = 0; k < sys.edge_count; ++k)
            v += 2.0 * cert.lyapunov.lambda(k) *
                 sector_integral(sys.equilibrium_edge_angles(k), cert.sector.upper(k),
                                 z(k));
        return v;
    }

    /// uses the z left behind by V(x)
    bool in_polytope(double slack) const {
        for (int k = 0; k < sys.edge_count; ++k)
            if (std::abs(sys.equilibrium_edge_angles(k) + z(k)) >
                poly.theta_bar(k) + slack)
                return false;
        return true;
    }
};

} // namespace

Trajectory integrate(const PowerNetwork& net, const EquilibriumState& eq,
                     const ScenarioSpec& scenario, const CertificateContext* ctx) {
    if (!(scenario.step > 0.0)) throw SolverError("integrate: step must be > 0");
    if (!(scenario.horizon > 0.0)) throw SolverError("integrate: horizon must be > 0");

    const int n = net.machine_count();
    const int dim = 2 * n;
    const int steps = static_cast<int>(std::llround(scenario.horizon / scenario.step));
    const int stride = std::max(1, scenario.record_stride);

    SwingRhs rhs(net, eq);
    Stepper stepper(dim);
    DisturbanceGenerator gen(scenario.disturbance, n, scenario.step, ctx);

    Trajectory traj;
    traj.step = scenario.step;
    traj.scenario = scenario;
    traj.times.reserve(steps / stride + 2);

    Vector x = scenario.initial_state.size() == dim ? scenario.initial_state
                                                    : Vector::Zero(dim);

    auto record = [&](double t, const Vector& state, const Vector& eta) {
        traj.times.push_back(t);
        traj.states.push_back(state);
        traj.disturbances.push_back(eta);
        if (ctx != nullptr) {
            traj.V_values.push_back(evaluate_V(ctx->certificate->lyapunov, *ctx->system,
                                               ctx->certificate->sector, state));
            traj.in_X.push_back(membership_X(*ctx->certificate, *ctx->levels,
                                             *ctx->system, *ctx->polytope, state,
                                             ctx->membership_slack));
        }
    };

    for (int k = 0; k <= steps; ++k) {
        const double t = k * scenario.step;
        const Vector& eta = gen.at_step(k, x);
        if (!x.allFinite()) {
            traj.diverged = true;
            break;
        }
        if (k % stride == 0) record(t, x, eta);  // keeps the time grid uniform
        if (k == steps) break;
        stepper.advance(rhs, x, eta, scenario.step);
    }
    return traj;
}

Vector sample_state_in_X(const LureSystem& sys, const CertificateParams& cert,
                         const LevelSetReport& levels, const ConstraintPolytope& poly,
                         std::uint64_t seed, double shell_lo, double shell_hi,
                         int max_attempts) {
    const int dim = sys.state_dimension;
    Rng rng(seed);

    // cover {x^T P x <= shell_hi V_max}, a superset of the shell of X
    Eigen::SelfAdjointEigenSolver<Matrix> es(cert.lyapunov.P);
    const Vector scale = es.eigenvalues().cwiseMax(1e-300).cwiseSqrt().cwiseInverse();
    const double radius = std::sqrt(std::max(0.0, shell_hi * levels.V_max));

    for (int attempt = 0; attempt < max_attempts; ++attempt) {
        Vector u = rng.unit_vector(dim);
        const double r = radius * std::pow(rng.uniform(), 1.0 / dim);
        const Vector x = es.eigenvectors() * (scale.array() * u.array()).matrix() * r;

        const double v = evaluate_V(cert.lyapunov, sys, cert.sector, x);
        if (v < shell_lo * levels.V_max || v > shell_hi * levels.V_max) continue;
        if (!membership_X(cert, levels, sys, poly, x)) continue;
        return x;
    }
    throw SolverError("sample_state_in_X: rejection sampling exhausted");
}

namespace {

TrialRecord run_trial(const PowerNetwork& net, const EquilibriumState& eq,
                      const LureSystem& sys, const CertificateParams& cert,
                      const LevelSetReport& levels, const ConstraintPolytope& poly,
                      const McConfig& cfg, int trial) {
    TrialRecord rec;
    rec.trial = trial;
    rec.seed = Rng::child_seed(cfg.seed, static_cast<std::uint64_t>(trial));

    const Vector x0 =
        sample_state_in_X(sys, cert, levels, poly, Rng::child_seed(rec.seed, 1),
                          cfg.shell_lo, cfg.shell_hi, cfg.max_sample_attempts);

    CertificateContext ctx;
    ctx.system = &sys;
    ctx.certificate = &cert;
    ctx.levels = &levels;
    ctx.polytope = &poly;
    ctx.membership_slack = cfg.membership_slack;

    DisturbanceSignal sig;
    sig.kind = cfg.disturbance;
    sig.magnitude = cfg.magnitude;
    sig.switch_period = cfg.switch_period;
    sig.seed = Rng::child_seed(rec.seed, 2);

    const int n = net.machine_count();
    const int dim = 2 * n;
    const int steps = static_cast<int>(std::llround(cfg.horizon / cfg.step));

    SwingRhs rhs(net, eq);
    Stepper stepper(dim);
    DisturbanceGenerator gen(sig, n, cfg.step, &ctx);
    const TrialEvaluator eval(cert, sys, poly);

    Vector x = x0;
    for (int k = 0; k <= steps; ++k) {
        if (!x.allFinite()) {
            rec.violated = true;
            if (rec.first_exit_time < 0.0) rec.first_exit_time = k * cfg.step;
            break;
        }
        const double v = eval.V(x);
        rec.max_V = std::max(rec.max_V, v);
        const bool inside =
            v <= levels.V_max * (1.0 + cfg.membership_slack) + cfg.membership_slack &&
            eval.in_polytope(cfg.membership_slack);
        if (!inside && !rec.violated) {
            rec.violated = true;
            rec.first_exit_time = k * cfg.step;
        }
        if (k == steps) {
            rec.final_norm = x.norm();
            rec.converged = rec.final_norm <= cfg.convergence_norm;
            break;
        }
        const Vector& eta = gen.at_step(k, x);
        stepper.advance(rhs, x, eta, cfg.step);
    }
    return rec;
}

McSummary summarize(std::vector<TrialRecord> records) {
    McSummary s;
    s.trials = static_cast<int>(records.size());
    for (const auto& r : records) {
        if (r.violated) ++s.violations;
        if (r.converged) ++s.convergences;
    }
    s.records = std::move(records);
    return s;
}

} // namespace

McSummary monte_carlo_invariance(const PowerNetwork& net, const EquilibriumState& eq,
                                 const CertificateParams& cert,
                                 const LevelSetReport& levels,
                                 const ConstraintPolytope& poly, const McConfig& cfg) {
    const LureSystem sys = build_lure(net, eq);
    std::vector<TrialRecord> records(cfg.trials);
#pragma omp parallel for schedule(dynamic)
    for (int trial = 0; trial < cfg.trials; ++trial)
        records[trial] = run_trial(net, eq, sys, cert, levels, poly, cfg, trial);
    return summarize(std::move(records));
}

McSummary monte_carlo_invariance_serial(const PowerNetwork& net,
                                        const EquilibriumState& eq,
                                        const CertificateParams& cert,
                                        const LevelSetReport& levels,
                                        const ConstraintPolytope& poly,
                                        const McConfig& cfg) {
    const LureSystem sys = build_lure(net, eq);
    std::vector<TrialRecord> records(cfg.trials);
    for (int trial = 0; trial < cfg.trials; ++trial)
        records[trial] = run_trial(net, eq, sys, cert, levels, poly, cfg, trial);
    return summarize(std::move(records));
}

PortraitGrid default_portrait_grid(const EquilibriumState& eq,
                                   const ConstraintPolytope& poly, double pad, int n) {
    PortraitGrid g;
    const double tb = poly.theta_bar.maxCoeff();
    const double ob = poly.omega_bar.maxCoeff();
    g.theta_min = -pad * tb;
    g.theta_max = pad * tb;
    g.omega_min = -pad * ob;
    g.omega_max = pad * ob;
    g.n_theta = n;
    g.n_omega = n;
    (void)eq;
    return g;
}

namespace {

/// Marching squares on one cell; emits the segments of {f = 0}.
void cell_segments(double x0, double x1, double y0, double y1, double f00,
                   double f10, double f01, double f11,
                   std::vector<ContourSegment>& out) {
    struct Pt {
        double x, y;
    };
    Pt pts[4];
    int count = 0;
    auto cross = [&](double fa, double fb, double ax, double ay, double bx,
                     double by) {
        if ((fa < 0.0) == (fb < 0.0)) return;
        const double t = fa / (fa - fb);
        pts[count++] = {ax + t * (bx - ax), ay + t * (by - ay)};
    };
    cross(f00, f10, x0, y0, x1, y0);  // bottom
    cross(f10, f11, x1, y0, x1, y1);  // right
    cross(f11, f01, x1, y1, x0, y1);  // top
    cross(f01, f00, x0, y1, x0, y0);  // left
    if (count == 2) {
        out.push_back({pts[0].x, pts[0].y, pts[1].x, pts[1].y});
    } else if (count == 4) {
        // saddle: split along the sign of the cell center
        const double fc = 0.25 * (f00 + f10 + f01 + f11);
        if ((fc < 0.0) == (f00 < 0.0)) {
            out.push_back({pts[0].x, pts[0].y, pts[3].x, pts[3].y});
            out.push_back({pts[1].x, pts[1].y, pts[2].x, pts[2].y});
        } else {
            out.push_back({pts[0].x, pts[0].y, pts[1].x, pts[1].y});
            out.push_back({pts[2].x, pts[2].y, pts[3].x, pts[3].y});
        }
    }
}

} // namespace

PortraitData phase_portrait(const PowerNetwork& net, const EquilibriumState& eq,
                            const CertificateParams& cert,
                            const LevelSetReport& levels,
                            const ConstraintPolytope& poly,
                            const PortraitGrid& grid_spec) {
    const LureSystem sys = build_lure(net, eq);
    if (sys.state_dimension != 2)
        throw SolverError("phase_portrait: requires a single-machine system");

    // orientation of the single edge relative to the machine angle
    const double orient = sys.machine_incidence(0, 0);
    const double eq_edge = sys.equilibrium_edge_angles(0);

    PortraitData data;
    data.grid = grid_spec;
    data.theta_bar = poly.theta_bar(0);
    data.omega_bar = poly.omega_bar(0);
    data.equilibrium_angle = eq_edge;
    data.edge_orientation = orient;

    const int nt = grid_spec.n_theta;
    const int no = grid_spec.n_omega;
    data.theta_samples.resize(nt);
    data.omega_samples.resize(no);
    for (int j = 0; j < nt; ++j)
        data.theta_samples[j] =
            grid_spec.theta_min +
            (grid_spec.theta_max - grid_spec.theta_min) * j / (nt - 1);
    for (int i = 0; i < no; ++i)
        data.omega_samples[i] =
            grid_spec.omega_min +
            (grid_spec.omega_max - grid_spec.omega_min) * i / (no - 1);

    std::vector<double> V(static_cast<std::size_t>(nt) * no);
    data.dtheta.resize(V.size());
    data.domega.resize(V.size());

    SwingRhs rhs(net, eq);
    Vector x(2), xdot(2);
    const Vector eta0 = Vector::Zero(1);
    for (int i = 0; i < no; ++i) {
        for (int j = 0; j < nt; ++j) {
            const double edge_angle = data.theta_samples[j];
            const double z = edge_angle - eq_edge;
            x(0) = orient * z;  // machine angle deviation
            x(1) = data.omega_samples[i];
            rhs(x, eta0, xdot);
            const std::size_t idx = static_cast<std::size_t>(i) * nt + j;
            data.dtheta[idx] = orient * xdot(0);  // d(theta_ij)/dt
            data.domega[idx] = xdot(1);
            V[idx] = evaluate_V(cert.lyapunov, sys, cert.sector, x);
        }
    }

    auto trace = [&](double level, std::vector<ContourSegment>& out) {
        for (int i = 0; i + 1 < no; ++i) {
            for (int j = 0; j + 1 < nt; ++j) {
                const std::size_t idx = static_cast<std::size_t>(i) * nt + j;
                cell_segments(data.theta_samples[j], data.theta_samples[j + 1],
                              data.omega_samples[i], data.omega_samples[i + 1],
                              V[idx] - level, V[idx + 1] - level,
                              V[idx + nt] - level, V[idx + nt + 1] - level, out);
            }
        }
    };
    trace(levels.V_max, data.contour_vmax);
    trace(levels.Vhat_max, data.contour_vhat);
    return data;
}

Trajectory frequency_traces(const PowerNetwork& net, const EquilibriumState& eq,
                            const CertificateParams& cert,
                            const LevelSetReport& levels,
                            const ConstraintPolytope& poly, const Vector& x_f,
                            double step, double horizon) {
    const LureSystem sys = build_lure(net, eq);
    if (!membership_X(cert, levels, sys, poly, x_f))
        throw CaseError("x0", "fault-cleared state is not inside the invariant set");

    CertificateContext ctx;
    ctx.system = &sys;
    ctx.certificate = &cert;
    ctx.levels = &levels;
    ctx.polytope = &poly;

    ScenarioSpec scenario;
    scenario.initial_state = x_f;
    scenario.step = step;
    scenario.horizon = horizon;
    return integrate(net, eq, scenario, &ctx);
}

void write_trajectory_csv(const std::string& path, const Trajectory& traj,
                          const EquilibriumState& eq) {
    std::ofstream out(path);
    if (!out) throw SolverError("cannot open '" + path + "' for writing");
    out << std::setprecision(15);

    const int n = static_cast<int>(eq.angles.size());
    out << "t";
    for (int i = 1; i <= n; ++i) out << ",theta_" << i;
    for (int i = 1; i <= n; ++i) out << ",omega_" << i;
    for (int i = 1; i <= n; ++i) out << ",eta_" << i;
    out << ",V,in_X\n";

    const bool annotated = traj.V_values.size() == traj.times.size();
    for (std::size_t k = 0; k < traj.times.size(); ++k) {
        out << traj.times[k];
        for (int i = 0; i < n; ++i) out << "," << eq.angles(i) + traj.states[k](i);
        for (int i = 0; i < n; ++i) out << "," << traj.states[k](n + i);
        for (int i = 0; i < n; ++i) out << "," << traj.disturbances[k](i);
        if (annotated)
            out << "," << traj.V_values[k] << "," << (traj.in_X[k] ? 1 : 0);
        else
            out << ",nan,1";
        out << "\n";
    }
}

void write_portrait_csv(const std::string& directory, const PortraitData& data) {
    namespace fs = std::filesystem;
    fs::create_directories(directory);

    {
        std::ofstream out(fs::path(directory) / "field.csv");
        out << std::setprecision(15) << "theta,omega,dtheta,domega\n";
        const int nt = data.grid.n_theta;
        for (int i = 0; i < data.grid.n_omega; ++i)
            for (int j = 0; j < nt; ++j) {
                const std::size_t idx = static_cast<std::size_t>(i) * nt + j;
                out << data.theta_samples[j] << "," << data.omega_samples[i] << ","
                    << data.dtheta[idx] << "," << data.domega[idx] << "\n";
            }
    }
    auto dump_contour = [&](const std::string& name,
                            const std::vector<ContourSegment>& segs) {
        std::ofstream out(fs::path(directory) / name);
        out << std::setprecision(15) << "theta0,omega0,theta1,omega1\n";
        for (const auto& s : segs)
            out << s.x0 << "," << s.y0 << "," << s.x1 << "," << s.y1 << "\n";
    };
    dump_contour("contour_vmax.csv", data.contour_vmax);
    dump_contour("contour_vhat.csv", data.contour_vhat);

    {
        // angle boundary split into half-lines by the escape sign
        // theta * dtheta/dt >= 0; trajectories can only leave through those
        std::ofstream out(fs::path(directory) / "boundary.csv");
        out << std::setprecision(15)
            << "kind,coordinate,range_lo,range_hi,escape_side\n";
        for (double s : {-1.0, 1.0}) {
            const double th = s * data.theta_bar;
            // escape needs theta * d(theta)/dt >= 0, i.e. s*orient*omega >= 0
            const double e = s * data.edge_orientation;
            out << "P," << th << "," << 0.0 << "," << (e > 0 ? data.grid.omega_max
                                                             : data.grid.omega_min)
                << ",1\n";
            out << "P," << th << "," << (e > 0 ? data.grid.omega_min
                                               : data.grid.omega_max)
                << "," << 0.0 << ",0\n";
            out << "S," << s * data.omega_bar << "," << data.grid.theta_min << ","
                << data.grid.theta_max << ",0\n";
        }
    }
}

} // namespace gridcert
