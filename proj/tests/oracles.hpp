#pragma once

// Test-only reference computations, kept independent of the implementation
// paths they check.

#include "gridcert/network.hpp"
#include "gridcert/rng.hpp"

#include <cmath>
#include <functional>
#include <set>

namespace oracles {

using gridcert::Matrix;
using gridcert::Vector;

/// Adaptive Simpson quadrature.
inline double simpson(const std::function<double(double)>& f, double a, double b,
                      double fa, double fm, double fb, double whole, double tol,
                      int depth) {
    const double m = 0.5 * (a + b);
    const double lm = 0.5 * (a + m);
    const double rm = 0.5 * (m + b);
    const double flm = f(lm);
    const double frm = f(rm);
    const double left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
    const double right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
    if (depth <= 0 || std::abs(left + right - whole) <= 15.0 * tol)
        return left + right + (left + right - whole) / 15.0;
    return simpson(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1) +
           simpson(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1);
}

inline double integrate(const std::function<double(double)>& f, double a, double b,
                        double tol = 1e-12) {
    if (a == b) return 0.0;
    const double fa = f(a);
    const double fb = f(b);
    const double fm = f(0.5 * (a + b));
    const double whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
    return simpson(f, a, b, fa, fm, fb, whole, tol, 48);
}

/// Central finite-difference gradient.
inline Vector fd_gradient(const std::function<double(const Vector&)>& f,
                          const Vector& x, double h = 1e-6) {
    Vector g(x.size());
    Vector xp = x, xm = x;
    for (Eigen::Index i = 0; i < x.size(); ++i) {
        xp(i) = x(i) + h;
        xm(i) = x(i) - h;
        g(i) = (f(xp) - f(xm)) / (2.0 * h);
        xp(i) = x(i);
        xm(i) = x(i);
    }
    return g;
}

/// Brute-force minimum of the chord slope (sin th - sin th*)/(th - th*) over
/// [-theta_bar, theta_bar], dense scan.
inline double brute_force_min_chord(double eq_angle, double theta_bar,
                                    int points = 1000000) {
    double best = std::numeric_limits<double>::infinity();
    for (int i = 0; i < points; ++i) {
        const double th = -theta_bar + 2.0 * theta_bar * i / (points - 1);
        const double dz = th - eq_angle;
        const double slope = std::abs(dz) < 1e-12
                                 ? std::cos(eq_angle)
                                 : (std::sin(th) - std::sin(eq_angle)) / dz;
        best = std::min(best, slope);
    }
    return best;
}

/// Random connected network: machine buses 1..n_machines, infinite bus
/// n_machines+1, then interior buses. Susceptances and machine parameters
/// drawn from moderate ranges.
inline gridcert::PowerNetwork random_network(gridcert::Rng& rng, int n_machines,
                                             int n_interior = 0,
                                             bool zero_injection = true) {
    using gridcert::Bus;
    using gridcert::BusKind;
    using gridcert::Line;

    const int n = n_machines + 1 + n_interior;
    std::vector<Bus> buses;
    for (int i = 1; i <= n; ++i) {
        Bus b;
        b.id = i;
        if (i <= n_machines) {
            b.kind = BusKind::machine;
            b.inertia = rng.uniform(0.05, 2.0);
            b.damping = rng.uniform(0.2, 3.0);
        } else if (i == n_machines + 1) {
            b.kind = BusKind::infinite_bus;
        } else {
            b.kind = BusKind::interior;
        }
        b.voltage = 1.0;
        buses.push_back(b);
    }

    std::set<std::pair<int, int>> used;
    std::vector<Line> lines;
    auto add_line = [&](int a, int b) {
        if (a > b) std::swap(a, b);
        if (a == b || !used.insert({a, b}).second) return false;
        lines.push_back({a, b, rng.uniform(0.5, 3.0)});
        return true;
    };
    for (int i = 2; i <= n; ++i) {
        const int parent = 1 + static_cast<int>(rng.uniform() * (i - 1));
        add_line(std::min(parent, i), std::max(parent, i));
    }
    const int extra = static_cast<int>(rng.uniform() * n);
    for (int e = 0; e < extra; ++e) {
        const int a = 1 + static_cast<int>(rng.uniform() * n);
        const int b = 1 + static_cast<int>(rng.uniform() * n);
        add_line(a, b);
    }

    gridcert::PowerNetwork net(buses, lines);
    if (zero_injection) return net;

    // injections from target angles guarantee a solvable equilibrium
    Vector target(n_machines);
    for (int i = 0; i < n_machines; ++i) target(i) = rng.uniform(-0.5, 0.5);
    const Vector edge = gridcert::edge_angles(net, target, 0.0);
    const Vector flow =
        net.machine_incidence() *
        (net.edge_weights().array() * edge.array().sin()).matrix();

    for (int i = 0; i < n_machines; ++i) buses[i].injection = flow(i);
    return gridcert::PowerNetwork(buses, lines);
}

} // namespace oracles
