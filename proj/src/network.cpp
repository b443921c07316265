#include "gridcert/network.hpp"

#include <algorithm>
#include <cmath>
#include <queue>
#include <set>

namespace gridcert {

namespace {

int count_kind(const std::vector<Bus>& buses, BusKind kind) {
    return static_cast<int>(
        std::count_if(buses.begin(), buses.end(),
                      [kind](const Bus& b) { return b.kind == kind; }));
}

} // namespace

PowerNetwork::PowerNetwork(std::vector<Bus> buses, std::vector<Line> lines)
    : buses_(std::move(buses)), lines_(std::move(lines)) {
    std::sort(buses_.begin(), buses_.end(),
              [](const Bus& a, const Bus& b) { return a.id < b.id; });
    for (auto& line : lines_) {
        if (line.from > line.to) std::swap(line.from, line.to);
    }
    std::sort(lines_.begin(), lines_.end(), [](const Line& a, const Line& b) {
        return std::pair(a.from, a.to) < std::pair(b.from, b.to);
    });
    validate();
    build_derived();
}

void PowerNetwork::validate() const {
    if (buses_.empty()) throw CaseError("buses", "empty bus list");

    for (std::size_t i = 0; i + 1 < buses_.size(); ++i) {
        if (buses_[i].id == buses_[i + 1].id)
            throw CaseError("buses[" + std::to_string(i + 1) + "].id",
                            "duplicate bus id " + std::to_string(buses_[i].id));
    }
    for (std::size_t i = 0; i < buses_.size(); ++i) {
        const Bus& b = buses_[i];
        const std::string path = "buses[" + std::to_string(i) + "]";
        if (b.voltage <= 0.0)
            throw CaseError(path + ".V", "voltage magnitude must be > 0");
        if (b.kind == BusKind::machine) {
            if (b.inertia <= 0.0)
                throw CaseError(path + ".M", "machine inertia must be > 0");
            if (b.damping <= 0.0)
                throw CaseError(path + ".D", "machine damping must be > 0");
        }
    }
    if (count_kind(buses_, BusKind::infinite_bus) != 1)
        throw CaseError("buses", "exactly one infinite bus is required");
    if (count_kind(buses_, BusKind::machine) < 1)
        throw CaseError("buses", "at least one machine bus is required");

    std::set<std::pair<int, int>> seen;
    for (std::size_t k = 0; k < lines_.size(); ++k) {
        const Line& l = lines_[k];
        const std::string path = "lines[" + std::to_string(k) + "]";
        if (l.from == l.to)
            throw CaseError(path, "self-loop on bus " + std::to_string(l.from));
        if (l.susceptance <= 0.0)
            throw CaseError(path + ".B", "susceptance must be > 0");
        if (row_of_bus_id(l.from) < 0)
            throw CaseError(path + ".from", "unknown bus id " + std::to_string(l.from));
        if (row_of_bus_id(l.to) < 0)
            throw CaseError(path + ".to", "unknown bus id " + std::to_string(l.to));
        if (!seen.insert({l.from, l.to}).second)
            throw CaseError(path, "duplicate line (" + std::to_string(l.from) + "," +
                                      std::to_string(l.to) + ")");
    }

    // connectivity over the undirected graph
    const int n = static_cast<int>(buses_.size());
    std::vector<std::vector<int>> adj(n);
    for (const Line& l : lines_) {
        const int a = row_of_bus_id(l.from);
        const int b = row_of_bus_id(l.to);
        adj[a].push_back(b);
        adj[b].push_back(a);
    }
    std::vector<bool> visited(n, false);
    std::queue<int> frontier;
    frontier.push(0);
    visited[0] = true;
    int reached = 1;
    while (!frontier.empty()) {
        const int v = frontier.front();
        frontier.pop();
        for (int w : adj[v]) {
            if (!visited[w]) {
                visited[w] = true;
                ++reached;
                frontier.push(w);
            }
        }
    }
    if (reached != n) throw CaseError("lines", "graph is not connected");
}

void PowerNetwork::build_derived() {
    const int n = static_cast<int>(buses_.size());
    const int m = static_cast<int>(lines_.size());

    incidence_ = Matrix::Zero(n, m);
    edge_weights_ = Vector::Zero(m);
    for (int k = 0; k < m; ++k) {
        const Line& l = lines_[k];
        const int a = row_of_bus_id(l.from);
        const int b = row_of_bus_id(l.to);
        incidence_(a, k) = 1.0;
        incidence_(b, k) = -1.0;
        edge_weights_(k) = l.susceptance * buses_[a].voltage * buses_[b].voltage;
    }

    machine_rows_.clear();
    for (int i = 0; i < n; ++i) {
        if (buses_[i].kind == BusKind::machine) machine_rows_.push_back(i);
        if (buses_[i].kind == BusKind::infinite_bus) reference_row_ = i;
    }

    const int nm = static_cast<int>(machine_rows_.size());
    machine_incidence_ = Matrix::Zero(nm, m);
    machine_inertia_ = Vector::Zero(nm);
    machine_damping_ = Vector::Zero(nm);
    machine_injection_ = Vector::Zero(nm);
    for (int i = 0; i < nm; ++i) {
        const Bus& b = buses_[machine_rows_[i]];
        machine_incidence_.row(i) = incidence_.row(machine_rows_[i]);
        machine_inertia_(i) = b.inertia;
        machine_damping_(i) = b.damping;
        machine_injection_(i) = b.injection;
    }
}

int PowerNetwork::interior_count() const {
    return count_kind(buses_, BusKind::interior);
}

int PowerNetwork::row_of_bus_id(int id) const {
    auto it = std::lower_bound(buses_.begin(), buses_.end(), id,
                               [](const Bus& b, int v) { return b.id < v; });
    if (it == buses_.end() || it->id != id) return -1;
    return static_cast<int>(it - buses_.begin());
}

Matrix PowerNetwork::laplacian() const {
    return incidence_ * edge_weights_.asDiagonal() * incidence_.transpose();
}

PowerNetwork kron_reduce(const PowerNetwork& net, const KronOptions& opts) {
    if (net.interior_count() == 0) return net;

    std::vector<int> boundary, interior;
    for (int i = 0; i < net.bus_count(); ++i) {
        if (net.buses()[i].kind == BusKind::interior)
            interior.push_back(i);
        else
            boundary.push_back(i);
    }
    const int nb = static_cast<int>(boundary.size());
    const int ni = static_cast<int>(interior.size());

    const Matrix L = net.laplacian();
    Matrix Lbb(nb, nb), Lbi(nb, ni), Lib(ni, nb), Lii(ni, ni);
    for (int r = 0; r < nb; ++r)
        for (int c = 0; c < nb; ++c) Lbb(r, c) = L(boundary[r], boundary[c]);
    for (int r = 0; r < nb; ++r)
        for (int c = 0; c < ni; ++c) Lbi(r, c) = L(boundary[r], interior[c]);
    for (int r = 0; r < ni; ++r)
        for (int c = 0; c < nb; ++c) Lib(r, c) = L(interior[r], boundary[c]);
    for (int r = 0; r < ni; ++r)
        for (int c = 0; c < ni; ++c) Lii(r, c) = L(interior[r], interior[c]);

    Eigen::FullPivLU<Matrix> lu(Lii);
    if (!lu.isInvertible())
        throw SolverError("kron_reduce: interior susceptance block is singular");

    const Matrix Lred = Lbb - Lbi * lu.solve(Lib);

    Vector interior_injection(ni);
    for (int r = 0; r < ni; ++r) interior_injection(r) = net.buses()[interior[r]].injection;

    Vector boundary_extra = Vector::Zero(nb);
    if (interior_injection.cwiseAbs().maxCoeff() > 1e-12) {
        if (!opts.distribute_interior_injections)
            throw CaseError("buses",
                            "interior buses carry nonzero net injection; enable "
                            "injection distribution or zero them out");
        // P_b <- P_b - L_bi L_ii^{-1} P_i, the exact elimination of the linear flow
        boundary_extra = -Lbi * lu.solve(interior_injection);
    }

    std::vector<Bus> buses;
    buses.reserve(nb);
    for (int r = 0; r < nb; ++r) {
        Bus b = net.buses()[boundary[r]];
        b.injection += boundary_extra(r);
        b.shunt_conductance = 0.0;  // already folded into the injection at parse
        buses.push_back(b);
    }

    std::vector<Line> lines;
    const double scale = Lred.cwiseAbs().maxCoeff();
    for (int r = 0; r < nb; ++r) {
        for (int c = r + 1; c < nb; ++c) {
            const double y = -Lred(r, c);
            if (std::abs(y) <= 1e-12 * std::max(1.0, scale)) continue;
            if (y < 0.0)
                throw SolverError("kron_reduce: negative equivalent edge weight");
            const Bus& ba = net.buses()[boundary[r]];
            const Bus& bb = net.buses()[boundary[c]];
            lines.push_back({ba.id, bb.id, y / (ba.voltage * bb.voltage)});
        }
    }
    return PowerNetwork(std::move(buses), std::move(lines));
}

Vector full_angles(const PowerNetwork& net, const Vector& machine_angles,
                   double reference_angle) {
    Vector theta = Vector::Constant(net.bus_count(), reference_angle);
    const auto& rows = net.machine_rows();
    for (std::size_t i = 0; i < rows.size(); ++i) theta(rows[i]) = machine_angles(i);
    return theta;
}

Vector edge_angles(const PowerNetwork& net, const Vector& machine_angles,
                   double reference_angle) {
    return net.incidence().transpose() *
           full_angles(net, machine_angles, reference_angle);
}

EquilibriumState solve_equilibrium(const PowerNetwork& net,
                                   const EquilibriumOptions& opts) {
    if (!net.reduced())
        throw SolverError("solve_equilibrium: network still has interior buses");

    const int nm = net.machine_count();
    const Matrix& Em = net.machine_incidence();
    const Vector& y = net.edge_weights();
    const Vector& P = net.injection_vector();

    Vector theta = Vector::Constant(nm, opts.reference_angle);  // flat start

    auto residual = [&](const Vector& th) -> Vector {
        const Vector d = edge_angles(net, th, opts.reference_angle);
        return P - Em * (y.array() * d.array().sin()).matrix();
    };

    Vector r = residual(theta);
    double rn = r.lpNorm<Eigen::Infinity>();
    int iter = 0;
    while (rn > opts.tolerance && iter < opts.max_iterations) {
        const Vector d = edge_angles(net, theta, opts.reference_angle);
        const Matrix J =
            -Em * (y.array() * d.array().cos()).matrix().asDiagonal() * Em.transpose();
        Eigen::FullPivLU<Matrix> lu(J);
        if (!lu.isInvertible())
            throw SolverError("solve_equilibrium: singular Jacobian at iteration " +
                              std::to_string(iter));
        const Vector step = -lu.solve(r);

        double alpha = 1.0;
        Vector trial = theta + alpha * step;
        Vector rt = residual(trial);
        double rtn = rt.lpNorm<Eigen::Infinity>();
        while (rtn >= rn && alpha > 1e-8) {
            alpha *= 0.5;
            trial = theta + alpha * step;
            rt = residual(trial);
            rtn = rt.lpNorm<Eigen::Infinity>();
        }
        if (rtn >= rn)
            throw SolverError("solve_equilibrium: damped Newton stalled at residual " +
                              std::to_string(rn));
        theta = trial;
        r = rt;
        rn = rtn;
        ++iter;
    }
    if (rn > opts.tolerance)
        throw SolverError("solve_equilibrium: no convergence within " +
                          std::to_string(opts.max_iterations) + " iterations");

    EquilibriumState eq;
    eq.angles = theta;
    eq.reference_angle = opts.reference_angle;
    eq.residual_norm = rn;
    eq.max_angle_difference =
        edge_angles(net, theta, opts.reference_angle).lpNorm<Eigen::Infinity>();
    eq.converged = true;
    eq.within_half_pi = eq.max_angle_difference < M_PI / 2.0;
    eq.iterations = iter;
    return eq;
}

} // namespace gridcert
