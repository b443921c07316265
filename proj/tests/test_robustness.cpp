#include <doctest.h>

#include "gridcert/case_io.hpp"
#include "gridcert/pipeline.hpp"
#include "oracles.hpp"

#include <cmath>

using namespace gridcert;

namespace {

struct Certified {
    PowerNetwork net;
    EquilibriumState eq;
    LureSystem sys;
    ConstraintPolytope poly;
    CertificateParams cert;
    LevelSetReport levels;
};

Certified certified_smib() {
    std::vector<Bus> buses(2);
    buses[0] = {1, BusKind::machine, 1.0, 0.0, 0.5, 1.0, 1.0};
    buses[1] = {2, BusKind::infinite_bus, 1.0, 0.0, 0.0, 0.0, 0.0};
    PowerNetwork net(buses, {{1, 2, 1.0}});
    EquilibriumState eq = solve_equilibrium(net);
    LureSystem sys = build_lure(net, eq);
    ConstraintPolytope poly = uniform_polytope(sys, 3.0 * M_PI / 4.0, M_PI);
    const SectorBounds sb = sector_bounds(sys, poly);
    SearchOptions opts;
    opts.budget = 20000;
    CertificateSearchResult search = find_certificate(sys, sb, opts);
    REQUIRE(search.status == SearchStatus::accepted);
    LevelSetReport levels = compute_level_sets(search.params, sys, poly);
    return {std::move(net),  std::move(eq),           std::move(sys),
            std::move(poly), std::move(search.params), std::move(levels)};
}

} // namespace

TEST_CASE("compute_eta_bar: formula wiring and factor audit") {
    const Certified c = certified_smib();
    const RobustnessReport rep = compute_eta_bar(c.cert, c.sys, c.levels);

    CHECK(rep.eta_bar > 0.0);
    CHECK(rep.psi1 <= rep.psi2);
    CHECK(rep.Vhat_max == c.levels.Vhat_max);

    // eta_bar must equal the expression evaluated from its own factors
    CHECK(rep.eta_bar ==
          doctest::Approx(rep.sigma_min_negR /
                          (2.0 * rep.PH_norm * std::sqrt(rep.psi2)) *
                          std::sqrt(rep.Vhat_max))
              .epsilon(1e-15));

    // plain arithmetic on the published expression
    const double synthetic = 1.0 / (2.0 * 1.0 * std::sqrt(1.0)) * std::sqrt(4.0);
    CHECK(synthetic == doctest::Approx(1.0));

    // independent recomputation of every spectral factor
    Eigen::SelfAdjointEigenSolver<Matrix> ep(c.cert.lyapunov.P);
    Eigen::SelfAdjointEigenSolver<Matrix> er(c.cert.assembly.R);
    Eigen::JacobiSVD<Matrix> sc(c.sys.C);
    Eigen::JacobiSVD<Matrix> sph(Matrix(c.cert.lyapunov.P * c.sys.H));
    double mu = 0.0;
    for (int k = 0; k < c.sys.edge_count; ++k)
        mu = std::max(mu, c.cert.lyapunov.lambda(k) *
                              (c.cert.sector.upper(k) - c.cert.sector.lower(k)));
    const double psi2 = ep.eigenvalues().maxCoeff() +
                        mu * sc.singularValues()(0) * sc.singularValues()(0);
    const double eta2 = -er.eigenvalues().maxCoeff() /
                        (2.0 * sph.singularValues()(0) * std::sqrt(psi2)) *
                        std::sqrt(c.levels.Vhat_max);
    CHECK(std::abs(rep.eta_bar - eta2) <= 1e-12);
}

TEST_CASE("compute_eta_bar: mu vanishes with Lambda = 0") {
    Certified c = certified_smib();
    c.cert.lyapunov.lambda.setZero();
    const RobustnessReport rep = compute_eta_bar(c.cert, c.sys, c.levels);
    CHECK(rep.mu == 0.0);
}

TEST_CASE("compute_eta_bar: scales as sqrt(Vhat_max)") {
    const Certified c = certified_smib();
    const RobustnessReport base = compute_eta_bar(c.cert, c.sys, c.levels);

    LevelSetReport scaled = c.levels;
    scaled.Vhat_max *= 4.0;
    const RobustnessReport big = compute_eta_bar(c.cert, c.sys, scaled);
    CHECK(big.eta_bar == doctest::Approx(2.0 * base.eta_bar).epsilon(1e-12));
}

TEST_CASE("compute_eta_bar: rejects a non-strict certificate") {
    Certified c = certified_smib();
    c.cert.margin = 0.0;
    CHECK_THROWS_AS(compute_eta_bar(c.cert, c.sys, c.levels), SolverError);
}

TEST_CASE("liss_bound_check: undisturbed trajectories dissipate") {
    const Certified c = certified_smib();
    const RobustnessReport rob = compute_eta_bar(c.cert, c.sys, c.levels);

    CertificateContext ctx{&c.sys, &c.cert, &c.levels, &c.poly, 1e-9};
    ScenarioSpec scenario;
    scenario.initial_state = sample_state_in_X(c.sys, c.cert, c.levels, c.poly, 11,
                                               0.5, 0.9, 200000);
    scenario.horizon = 20.0;
    const Trajectory traj = integrate(c.net, c.eq, scenario, &ctx);

    const LissViolation v = liss_bound_check(c.cert, c.sys, c.poly, c.levels, traj);
    CHECK_FALSE(v.found);
    for (std::size_t i = 1; i < traj.V_values.size(); ++i)
        CHECK(traj.V_values[i] <= traj.V_values[i - 1] + 1e-10);
    (void)rob;
}

TEST_CASE("liss_bound_check: half-bound disturbance stays clean") {
    const Certified c = certified_smib();
    const RobustnessReport rob = compute_eta_bar(c.cert, c.sys, c.levels);

    CertificateContext ctx{&c.sys, &c.cert, &c.levels, &c.poly, 1e-9};
    ScenarioSpec scenario;
    scenario.initial_state = sample_state_in_X(c.sys, c.cert, c.levels, c.poly, 21,
                                               0.5, 0.9, 200000);
    scenario.horizon = 20.0;
    scenario.disturbance.kind = DisturbanceSignal::Kind::piecewise_constant_random;
    scenario.disturbance.magnitude = 0.5 * rob.eta_bar;
    scenario.disturbance.seed = 4;
    const Trajectory traj = integrate(c.net, c.eq, scenario, &ctx);

    const LissViolation v = liss_bound_check(c.cert, c.sys, c.poly, c.levels, traj);
    CHECK_FALSE(v.found);
    for (bool in : traj.in_X) CHECK(in);
}

TEST_CASE("liss_bound_check: a 10x adversarial disturbance is falsifiable") {
    const Certified c = certified_smib();
    const RobustnessReport rob = compute_eta_bar(c.cert, c.sys, c.levels);

    CertificateContext ctx{&c.sys, &c.cert, &c.levels, &c.poly, 1e-9};
    bool escaped = false;
    for (std::uint64_t seed = 1; seed <= 20 && !escaped; ++seed) {
        ScenarioSpec scenario;
        scenario.initial_state = sample_state_in_X(c.sys, c.cert, c.levels, c.poly,
                                                   seed, 0.9, 1.0, 200000);
        scenario.horizon = 10.0;
        scenario.disturbance.kind = DisturbanceSignal::Kind::adversarial_aligned;
        scenario.disturbance.magnitude = 10.0 * rob.eta_bar;
        scenario.disturbance.seed = seed;
        const Trajectory traj = integrate(c.net, c.eq, scenario, &ctx);
        const LissViolation v =
            liss_bound_check(c.cert, c.sys, c.poly, c.levels, traj);
        for (bool in : traj.in_X)
            if (!in) escaped = true;
        if (v.found) escaped = true;
    }
    CHECK(escaped);
}

TEST_CASE("end-to-end: at-bound trajectories keep membership and settle") {
    const Certified c = certified_smib();
    const RobustnessReport rob = compute_eta_bar(c.cert, c.sys, c.levels);

    McConfig cfg;
    cfg.trials = 25;
    cfg.seed = 5;
    cfg.horizon = 30.0;
    cfg.disturbance = DisturbanceSignal::Kind::piecewise_constant_random;
    cfg.magnitude = rob.eta_bar * (1.0 - 1e-6);
    const McSummary mc = monte_carlo_invariance(c.net, c.eq, c.cert, c.levels,
                                                c.poly, cfg);
    CHECK(mc.violations == 0);

    // and with eta = 0 every trajectory converges to the set {V < Vhat_max}
    McConfig zero = cfg;
    zero.disturbance = DisturbanceSignal::Kind::zero;
    zero.magnitude = 0.0;
    zero.horizon = 50.0;
    const McSummary mz = monte_carlo_invariance(c.net, c.eq, c.cert, c.levels,
                                                c.poly, zero);
    CHECK(mz.violations == 0);
    CHECK(mz.convergences == zero.trials);
}
