// Timing comparison: OpenMP kernels vs their serial reference
// implementations, on a synthetic ring network large enough to show the
// parallel split (level-set face batch, Monte Carlo trial batch).

#include "gridcert/pipeline.hpp"
#include "gridcert/rng.hpp"

#ifdef _OPENMP
#include <omp.h>
#endif

#include <chrono>
#include <cstdio>
#include <functional>

using namespace gridcert;

namespace {

double time_once(const std::function<void()>& fn) {
    const auto t0 = std::chrono::steady_clock::now();
    fn();
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0)
        .count();
}

double best_of(int reps, const std::function<void()>& fn) {
    double best = 1e300;
    for (int r = 0; r < reps; ++r) best = std::min(best, time_once(fn));
    return best;
}

PowerNetwork ring_network(int machines) {
    std::vector<Bus> buses;
    for (int i = 1; i <= machines + 1; ++i) {
        Bus b;
        b.id = i;
        b.kind = i <= machines ? BusKind::machine : BusKind::infinite_bus;
        if (i <= machines) {
            b.inertia = 0.2 + 0.05 * i;
            b.damping = 4.0;
            b.injection = (i % 2 == 0) ? 0.3 : -0.3;
        }
        buses.push_back(b);
    }
    std::vector<Line> lines;
    for (int i = 1; i <= machines; ++i) lines.push_back({i, i % (machines + 1) + 1, 2.0});
    for (int i = 1; i + 2 <= machines; i += 2) lines.push_back({i, i + 2, 1.0});
    return PowerNetwork(buses, lines);
}

} // namespace

int main() {
#ifdef _OPENMP
    std::printf("OpenMP enabled, max threads %d\n", omp_get_max_threads());
#else
    std::printf("OpenMP disabled; both columns run serially\n");
#endif

    const PowerNetwork net = ring_network(6);
    const EquilibriumState eq = solve_equilibrium(net);
    const LureSystem sys = build_lure(net, eq);
    const ConstraintPolytope poly = uniform_polytope(sys, 0.6, M_PI);
    const SectorBounds sb = sector_bounds(sys, poly);

    SearchOptions sopts;
    sopts.budget = 40000;
    const CertificateSearchResult search = find_certificate(sys, sb, sopts);
    if (search.status != SearchStatus::accepted) {
        std::printf("benchmark network failed to certify; aborting\n");
        return 1;
    }
    std::printf("network: %d machines, %d edges, %zu face problems\n",
                sys.machine_count, sys.edge_count,
                enumerate_faces(sys, poly).size());

    const LevelSetReport levels = compute_level_sets(search.params, sys, poly);

    const double ls_serial = best_of(3, [&] {
        (void)compute_level_sets_serial(search.params, sys, poly);
    });
    const double ls_parallel = best_of(3, [&] {
        (void)compute_level_sets(search.params, sys, poly);
    });

    McConfig cfg;
    cfg.trials = 64;
    cfg.seed = 1;
    cfg.horizon = 10.0;
    cfg.disturbance = DisturbanceSignal::Kind::piecewise_constant_random;
    cfg.magnitude = 0.005;

    const double mc_serial = best_of(3, [&] {
        (void)monte_carlo_invariance_serial(net, eq, search.params, levels, poly, cfg);
    });
    const double mc_parallel = best_of(3, [&] {
        (void)monte_carlo_invariance(net, eq, search.params, levels, poly, cfg);
    });

    std::printf("\n%-28s %10s %10s %8s\n", "kernel", "serial", "openmp", "speedup");
    std::printf("%-28s %9.3fs %9.3fs %7.2fx\n", "level-set face batch", ls_serial,
                ls_parallel, ls_serial / ls_parallel);
    std::printf("%-28s %9.3fs %9.3fs %7.2fx\n", "monte-carlo trials (64)", mc_serial,
                mc_parallel, mc_serial / mc_parallel);
    return 0;
}
