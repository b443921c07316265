// Acceptance suite: one pass/fail line per criterion, nonzero exit on any
// failure. Each criterion pins its tolerances in code.

#include "gridcert/case_io.hpp"
#include "gridcert/pipeline.hpp"
#include "gridcert/rng.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

using namespace gridcert;

namespace {

int g_failures = 0;

void criterion(int number, const std::string& name,
               const std::function<bool(std::string&)>& body) {
    std::string detail;
    const auto t0 = std::chrono::steady_clock::now();
    bool ok = false;
    try {
        ok = body(detail);
    } catch (const std::exception& e) {
        detail = std::string("exception: ") + e.what();
    }
    const double secs =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    std::printf("%s  criterion %2d: %s (%.1f s)%s%s\n", ok ? "PASS" : "FAIL", number,
                name.c_str(), secs, detail.empty() ? "" : " -- ", detail.c_str());
    std::fflush(stdout);
    if (!ok) ++g_failures;
}

std::string cases_path(const std::string& name) {
    return std::string(GRIDCERT_CASES_DIR) + "/" + name;
}

struct CertifiedCase {
    PowerNetwork net;
    EquilibriumState eq;
    LureSystem sys;
    ConstraintPolytope poly;
    CertificateParams cert;
    LevelSetReport levels;
    RobustnessReport robustness;
    int search_iterations = 0;
    double verified_lambda_max = 0.0;
};

CertifiedCase certify(const std::string& case_file, double theta_bar,
                      double omega_bar) {
    PowerNetwork net = parse_case_file(cases_path(case_file));
    if (!net.reduced()) net = kron_reduce(net, {true});
    EquilibriumState eq = solve_equilibrium(net);
    LureSystem sys = build_lure(net, eq);
    ConstraintPolytope poly = uniform_polytope(sys, theta_bar, omega_bar);
    const SectorBounds sb = sector_bounds(sys, poly);

    CertificateSearchResult search = find_certificate(sys, sb);
    if (search.status != SearchStatus::accepted)
        throw SolverError("certificate search failed on " + case_file);

    // independent recomputation of lambda_max(R) from the returned parameters
    const LmiAssembly fresh = assemble_R(search.params.lyapunov, sys, sb,
                                         search.params.assembly.gamma);
    Eigen::SelfAdjointEigenSolver<Matrix> es(fresh.R, Eigen::EigenvaluesOnly);

    LevelSetReport levels = compute_level_sets(search.params, sys, poly);
    RobustnessReport rob = compute_eta_bar(search.params, sys, levels);
    return {std::move(net),
            std::move(eq),
            std::move(sys),
            std::move(poly),
            std::move(search.params),
            std::move(levels),
            std::move(rob),
            search.iterations,
            es.eigenvalues().maxCoeff()};
}

const double kThetaBarSmib = 3.0 * M_PI / 4.0;
const double kThetaBarIeee9 = M_PI / 6.0;
const double kOmegaBar = M_PI;

} // namespace

int main() {
    std::printf("gridcert acceptance suite\n");

    // certified cases shared by criteria 5..10; built (and timed) in criterion 4
    CertifiedCase* smib = nullptr;
    CertifiedCase* ieee9 = nullptr;

    criterion(1, "sector bounds: envelope property and closed forms", [](std::string& d) {
        const int samples = 10000;
        double worst = std::numeric_limits<double>::infinity();
        bool ok = true;

#pragma omp parallel for schedule(dynamic) reduction(min : worst) reduction(&& : ok)
        for (int i = 0; i < samples; ++i) {
            Rng rng(1000 + i);
            const double star = rng.uniform(-1.35, 1.35);
            const double window =
                rng.uniform(std::abs(star) + 1e-3, M_PI - std::abs(star));
            Vector eq(1);
            eq << star;
            SectorBounds sb;
            try {
                sb = sector_bounds(eq, Vector::Constant(1, window));
            } catch (const std::exception&) {
                ok = false;
                continue;
            }
            const double theta = rng.uniform(-window, window);
            const double z = theta - star;
            const double phi = phi_scalar(star, z);
            const double product =
                (phi - sb.lower(0) * z) * (sb.upper(0) * z - phi);
            worst = std::min(worst, product);
            if (product < -1e-12) ok = false;
        }

        // closed forms at the two reference windows
        double closed_form_err = 0.0;
        Rng rng(77);
        for (int i = 0; i < 200; ++i) {
            const double star = rng.uniform(-1.35, 1.35);
            Vector eq(1);
            eq << star;
            const double xi =
                (1.0 - std::sin(std::abs(star))) / (M_PI / 2.0 - std::abs(star));
            const double lo2 =
                sector_bounds(eq, Vector::Constant(1, M_PI / 2.0)).lower(0);
            closed_form_err = std::max(closed_form_err, std::abs(lo2 - (xi - std::cos(star))));
            const double lo1 =
                sector_bounds(eq, Vector::Constant(1, M_PI - std::abs(star))).lower(0);
            closed_form_err = std::max(closed_form_err, std::abs(lo1 - (-std::cos(star))));
        }
        std::ostringstream os;
        os << "worst product " << worst << ", closed-form error " << closed_form_err;
        d = os.str();
        return ok && closed_form_err <= 1e-6;
    });

    criterion(2, "Lur'e decomposition exact to 1e-12 relative", [](std::string& d) {
        Rng rng(53);
        double worst = 0.0;
        int states = 0;
        while (states < 1000) {
            const int n = 1 + static_cast<int>(rng.uniform() * 5);

            // random connected machine+reference network with feasible injections
            std::vector<Bus> buses;
            for (int i = 1; i <= n + 1; ++i) {
                Bus b;
                b.id = i;
                b.kind = i <= n ? BusKind::machine : BusKind::infinite_bus;
                if (i <= n) {
                    b.inertia = rng.uniform(0.05, 2.0);
                    b.damping = rng.uniform(0.2, 3.0);
                }
                buses.push_back(b);
            }
            std::set<std::pair<int, int>> used;
            std::vector<Line> lines;
            for (int i = 2; i <= n + 1; ++i) {
                const int parent = 1 + static_cast<int>(rng.uniform() * (i - 1));
                lines.push_back({parent, i, rng.uniform(0.5, 3.0)});
                used.insert({parent, i});
            }
            for (int e = 0; e < n; ++e) {
                int a = 1 + static_cast<int>(rng.uniform() * (n + 1));
                int b = 1 + static_cast<int>(rng.uniform() * (n + 1));
                if (a > b) std::swap(a, b);
                if (a == b || !used.insert({a, b}).second) continue;
                lines.push_back({a, b, rng.uniform(0.5, 3.0)});
            }
            PowerNetwork scaffold(buses, lines);
            Vector target(n);
            for (int i = 0; i < n; ++i) target(i) = rng.uniform(-0.5, 0.5);
            const Vector edge = edge_angles(scaffold, target, 0.0);
            const Vector flow =
                scaffold.machine_incidence() *
                (scaffold.edge_weights().array() * edge.array().sin()).matrix();
            for (int i = 0; i < n; ++i) buses[i].injection = flow(i);
            const PowerNetwork net(buses, lines);

            const EquilibriumState eq = solve_equilibrium(net);
            const LureSystem sys = build_lure(net, eq);
            for (int s = 0; s < 25 && states < 1000; ++s, ++states) {
                Vector x(2 * n), eta(n);
                for (int i = 0; i < 2 * n; ++i) x(i) = rng.uniform(-2.0, 2.0);
                for (int i = 0; i < n; ++i) eta(i) = rng.uniform(-1.0, 1.0);
                const Vector a = rhs_nonlinear(net, eq, x, eta);
                const Vector b = rhs_lure(sys, x, eta);
                const double rel = (a - b).lpNorm<Eigen::Infinity>() /
                                   std::max(1.0, a.lpNorm<Eigen::Infinity>());
                worst = std::max(worst, rel);
            }
        }
        std::ostringstream os;
        os << "worst relative mismatch " << worst;
        d = os.str();
        return worst <= 1e-12;
    });

    criterion(3, "gradient vs central differences, Hessian convexity floor",
              [](std::string& d) {
        Rng rng(7);
        double worst_grad = 0.0;
        double worst_floor = std::numeric_limits<double>::infinity();
        int states = 0;
        while (states < 1000) {
            const int n = 1 + static_cast<int>(rng.uniform() * 4);
            std::vector<Bus> buses;
            for (int i = 1; i <= n + 1; ++i) {
                Bus b;
                b.id = i;
                b.kind = i <= n ? BusKind::machine : BusKind::infinite_bus;
                if (i <= n) {
                    b.inertia = rng.uniform(0.1, 2.0);
                    b.damping = rng.uniform(0.2, 3.0);
                }
                buses.push_back(b);
            }
            std::vector<Line> lines;
            for (int i = 2; i <= n + 1; ++i)
                lines.push_back({1 + static_cast<int>(rng.uniform() * (i - 1)), i,
                                 rng.uniform(0.5, 3.0)});
            const PowerNetwork net(buses, lines);
            const EquilibriumState eq = solve_equilibrium(net);
            const LureSystem sys = build_lure(net, eq);

            Vector window(sys.edge_count);
            for (int k = 0; k < sys.edge_count; ++k) window(k) = rng.uniform(1.0, 3.0);
            const SectorBounds sb =
                sector_bounds(sys.equilibrium_edge_angles, window);

            Matrix G(2 * n, 2 * n);
            for (int i = 0; i < 2 * n; ++i)
                for (int j = 0; j < 2 * n; ++j) G(i, j) = rng.normal();
            LyapunovParams params;
            params.P = G * G.transpose() + 0.1 * Matrix::Identity(2 * n, 2 * n);
            params.lambda = Vector::Zero(sys.edge_count);
            for (int k = 0; k < sys.edge_count; ++k)
                params.lambda(k) = rng.uniform(0.0, 2.0);

            Eigen::SelfAdjointEigenSolver<Matrix> ep(params.P, Eigen::EigenvaluesOnly);
            const double floor = 2.0 * ep.eigenvalues().minCoeff();

            for (int s = 0; s < 10 && states < 1000; ++s, ++states) {
                Vector x(2 * n);
                for (int i = 0; i < 2 * n; ++i) x(i) = rng.uniform(-1.5, 1.5);

                const Vector g = gradient_V(params, sys, sb, x);
                Vector fd(2 * n);
                const double h = 1e-6;
                for (int i = 0; i < 2 * n; ++i) {
                    Vector xp = x, xm = x;
                    xp(i) += h;
                    xm(i) -= h;
                    fd(i) = (evaluate_V(params, sys, sb, xp) -
                             evaluate_V(params, sys, sb, xm)) /
                            (2.0 * h);
                }
                worst_grad = std::max(worst_grad,
                                      (g - fd).norm() / std::max(1.0, g.norm()));

                Eigen::SelfAdjointEigenSolver<Matrix> eh(
                    hessian_V(params, sys, sb, x), Eigen::EigenvaluesOnly);
                worst_floor = std::min(worst_floor,
                                       eh.eigenvalues().minCoeff() - floor);
            }
        }
        std::ostringstream os;
        os << "worst gradient error " << worst_grad << ", worst eig slack "
           << worst_floor;
        d = os.str();
        return worst_grad <= 1e-6 && worst_floor >= -1e-9;
    });

    criterion(4, "certificates found on SMIB and Kron-reduced IEEE 9-bus",
              [&](std::string& d) {
        smib = new CertifiedCase(certify("smib.case", kThetaBarSmib, kOmegaBar));
        ieee9 = new CertifiedCase(certify("ieee9_kron.case", kThetaBarIeee9, kOmegaBar));
        std::ostringstream os;
        os << "recomputed lambda_max(R): smib " << smib->verified_lambda_max
           << ", ieee9 " << ieee9->verified_lambda_max;
        d = os.str();
        return smib->verified_lambda_max <= -1e-8 &&
               ieee9->verified_lambda_max <= -1e-8;
    });

    criterion(5, "SMIB face minima match 1e6-point scans to 1e-3", [&](std::string& d) {
        if (!smib) return false;
        const auto& c = *smib;
        double worst = 0.0;

        const auto faces = enumerate_faces(c.sys, c.poly);
        std::vector<const FaceResult*> results;
        for (const auto& f : c.levels.outflow) results.push_back(&f);
        for (const auto& f : c.levels.frequency) results.push_back(&f);
        for (const auto& f : c.levels.plain) results.push_back(&f);

        for (std::size_t i = 0; i < faces.size(); ++i) {
            const FaceProblem& face = faces[i];
            const double range = 25.0;
            const int points = 1000000;
            double best = std::numeric_limits<double>::infinity();
            Vector x(2);
            for (int p = 0; p < points; ++p) {
                const double free = -range + 2.0 * range * p / (points - 1);
                if (face.kind == FaceProblem::Kind::frequency) {
                    x << free, face.offset;
                } else {
                    if (face.has_inequality && face.sign * free < 0.0) continue;
                    x << face.offset, free;
                }
                best = std::min(best,
                                evaluate_V(c.cert.lyapunov, c.sys, c.cert.sector, x));
            }
            worst = std::max(worst, std::abs(results[i]->value - best));
        }
        std::ostringstream os;
        os << "worst face deviation " << worst << "; Vhat_max " << c.levels.Vhat_max
           << " <= V_max " << c.levels.V_max;
        d = os.str();
        return worst <= 1e-3 && c.levels.Vhat_max <= c.levels.V_max + 1e-12;
    });

    criterion(6, "invariance: 100 undisturbed boundary-shell trajectories per case",
              [&](std::string& d) {
        if (!smib || !ieee9) return false;
        McConfig cfg;
        cfg.trials = 100;
        cfg.seed = 6;
        cfg.horizon = 50.0;
        cfg.convergence_norm = 1e-3;
        const McSummary a = monte_carlo_invariance(smib->net, smib->eq, smib->cert,
                                                   smib->levels, smib->poly, cfg);
        const McSummary b = monte_carlo_invariance(ieee9->net, ieee9->eq, ieee9->cert,
                                                   ieee9->levels, ieee9->poly, cfg);
        std::ostringstream os;
        os << "smib " << a.violations << " violations / " << a.convergences
           << " converged; ieee9 " << b.violations << " / " << b.convergences;
        d = os.str();
        return a.violations == 0 && a.convergences == 100 && b.violations == 0 &&
               b.convergences == 100;
    });

    criterion(7, "robustness: invariant at the bound, falsified at 50x adversarial",
              [&](std::string& d) {
        if (!smib || !ieee9) return false;
        int at_bound_exits = 0;
        int adversarial_exits = 0;
        for (const CertifiedCase* c : {smib, ieee9}) {
            McConfig cfg;
            cfg.trials = 100;
            cfg.seed = 7;
            cfg.horizon = 50.0;
            cfg.disturbance = DisturbanceSignal::Kind::piecewise_constant_random;
            cfg.magnitude = c->robustness.eta_bar * (1.0 - 1e-6);
            const McSummary mc = monte_carlo_invariance(c->net, c->eq, c->cert,
                                                        c->levels, c->poly, cfg);
            at_bound_exits += mc.violations;

            McConfig adv = cfg;
            adv.seed = 70;
            adv.horizon = 20.0;
            adv.disturbance = DisturbanceSignal::Kind::adversarial_aligned;
            adv.magnitude = 50.0 * c->robustness.eta_bar;
            const McSummary ma = monte_carlo_invariance(c->net, c->eq, c->cert,
                                                        c->levels, c->poly, adv);
            adversarial_exits += ma.violations;
        }
        std::ostringstream os;
        os << "at-bound exits " << at_bound_exits << ", 50x adversarial exits "
           << adversarial_exits << " (of 200)";
        d = os.str();
        return at_bound_exits == 0 && adversarial_exits >= 1;
    });

    criterion(8, "IEEE 9-bus disturbance bound in the reported regime",
              [&](std::string& d) {
        if (!ieee9) return false;
        const auto& r = ieee9->robustness;
        std::ostringstream os;
        os << "eta_bar " << r.eta_bar << "; factors: sigma_min(-R) " << r.sigma_min_negR
           << ", ||PH|| " << r.PH_norm << ", psi1 " << r.psi1 << ", psi2 " << r.psi2
           << ", mu " << r.mu << ", ||C|| " << r.C_norm << ", Vhat_max " << r.Vhat_max;
        d = os.str();
        return r.eta_bar > 0.0 && r.eta_bar >= 1e-4 && r.eta_bar <= 1e-1;
    });

    criterion(9, "phase portrait: level-set contours respect the constraint geometry",
              [&](std::string& d) {
        if (!smib) return false;
        const auto& c = *smib;
        const PortraitGrid grid = default_portrait_grid(c.eq, c.poly, 1.25, 801);
        const PortraitData data =
            phase_portrait(c.net, c.eq, c.cert, c.levels, c.poly, grid);
        if (data.contour_vmax.empty() || data.contour_vhat.empty()) {
            d = "empty contours";
            return false;
        }
        const double cell = (grid.theta_max - grid.theta_min) / (grid.n_theta - 1);
        const double cell_w = (grid.omega_max - grid.omega_min) / (grid.n_omega - 1);

        // the V_max contour may meet the angle boundary only where trajectories
        // flow back inside: theta * d(theta)/dt <= 0 at every contact point
        int escape_side_contacts = 0;
        int boundary_contacts = 0;
        for (const auto& s : data.contour_vmax) {
            for (const auto& [x, w] :
                 {std::pair{s.x0, s.y0}, std::pair{s.x1, s.y1}}) {
                if (std::abs(x) >= data.theta_bar - 2.0 * cell &&
                    std::abs(x) <= data.theta_bar + 2.0 * cell) {
                    ++boundary_contacts;
                    if (x * data.edge_orientation * w > 3.0 * cell_w)
                        ++escape_side_contacts;
                }
            }
        }

        // the Vhat_max contour never exits the angle box (tangency allowed)
        double vhat_extent = 0.0;
        for (const auto& s : data.contour_vhat)
            vhat_extent = std::max({vhat_extent, std::abs(s.x0), std::abs(s.x1)});

        // audit: V on the angle boundary never dips below Vhat_max
        double min_boundary_V = std::numeric_limits<double>::infinity();
        for (int i = 0; i <= 2000; ++i) {
            const double w = -M_PI + 2.0 * M_PI * i / 2000.0;
            for (double sgn : {-1.0, 1.0}) {
                Vector x(2);
                x << data.edge_orientation *
                         (sgn * data.theta_bar - data.equilibrium_angle),
                    w;
                min_boundary_V = std::min(
                    min_boundary_V,
                    evaluate_V(c.cert.lyapunov, c.sys, c.cert.sector, x));
            }
        }

        std::ostringstream os;
        os << boundary_contacts << " boundary contacts, " << escape_side_contacts
           << " on the escape side; Vhat contour |theta| <= " << vhat_extent
           << " vs bound " << data.theta_bar;
        d = os.str();
        return boundary_contacts > 0 && escape_side_contacts == 0 &&
               vhat_extent <= data.theta_bar + cell &&
               min_boundary_V >= c.levels.Vhat_max - 1e-9;
    });

    criterion(10, "frequency traces from X never violate the omega bound",
              [&](std::string& d) {
        if (!ieee9) return false;
        const auto& c = *ieee9;
        double worst = 0.0;
        for (std::uint64_t seed : {101ULL, 102ULL, 103ULL, 104ULL, 105ULL}) {
            const Vector x_f = sample_state_in_X(c.sys, c.cert, c.levels, c.poly,
                                                 seed, 0.8, 1.0, 200000);
            const Trajectory traj = frequency_traces(c.net, c.eq, c.cert, c.levels,
                                                     c.poly, x_f, 1e-3, 50.0);
            for (const auto& x : traj.states)
                for (int i = 0; i < c.sys.machine_count; ++i)
                    worst = std::max(worst, std::abs(x(c.sys.machine_count + i)));
        }
        std::ostringstream os;
        os << "max |omega_i(t)| " << worst << " vs bound " << kOmegaBar;
        d = os.str();
        return worst <= kOmegaBar + 1e-9;
    });

    delete smib;
    delete ieee9;

    if (g_failures == 0)
        std::printf("all criteria passed\n");
    else
        std::printf("%d criterion(s) failed\n", g_failures);
    return g_failures == 0 ? 0 : 1;
}
