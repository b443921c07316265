#pragma once

#include "gridcert/types.hpp"

#include <optional>
#include <vector>

namespace gridcert {

enum class BusKind { machine, infinite_bus, interior };

struct Bus {
    int id = 0;
    BusKind kind = BusKind::interior;
    double voltage = 1.0;            // V_i, per-unit, > 0
    double shunt_conductance = 0.0;  // G_i, absorbed into the net injection
    double injection = 0.0;          // P_i net of the G_i V_i^2 term
    double inertia = 0.0;            // m_i, machine buses only
    double damping = 0.0;            // d_i, machine buses only
};

struct Line {
    int from = 0;
    int to = 0;
    double susceptance = 0.0;  // B_ij > 0, lossless inductive line
};

/// Lossless network over an undirected graph. Buses are kept sorted by id,
/// edges by (min id, max id) and oriented low id -> high id, so every
/// derived matrix has a deterministic layout.
///
/// The incidence matrix E is node-by-edge: column k has +1 at the from-bus
/// and -1 at the to-bus. The dynamic model uses the machine-row block of E;
/// the infinite bus keeps its row in the full E and acts as a grounding
/// term for its incident edges.
class PowerNetwork {
public:
    PowerNetwork(std::vector<Bus> buses, std::vector<Line> lines);

    const std::vector<Bus>& buses() const { return buses_; }
    const std::vector<Line>& lines() const { return lines_; }

    int bus_count() const { return static_cast<int>(buses_.size()); }
    int edge_count() const { return static_cast<int>(lines_.size()); }
    int machine_count() const { return static_cast<int>(machine_rows_.size()); }
    int interior_count() const;
    bool reduced() const { return interior_count() == 0; }

    const Matrix& incidence() const { return incidence_; }                  // buses x edges
    const Matrix& machine_incidence() const { return machine_incidence_; } // machines x edges
    const Vector& edge_weights() const { return edge_weights_; }           // y_k = B_ij V_i V_j

    const Vector& inertia_matrix() const { return machine_inertia_; }   // diag(M)
    const Vector& damping_matrix() const { return machine_damping_; }   // diag(D)
    const Vector& injection_vector() const { return machine_injection_; }

    int reference_row() const { return reference_row_; }
    const std::vector<int>& machine_rows() const { return machine_rows_; }

    /// Weighted graph Laplacian E diag(y) E^T over all buses.
    Matrix laplacian() const;

    int row_of_bus_id(int id) const;

private:
    std::vector<Bus> buses_;
    std::vector<Line> lines_;
    Matrix incidence_;
    Matrix machine_incidence_;
    Vector edge_weights_;
    Vector machine_inertia_;
    Vector machine_damping_;
    Vector machine_injection_;
    std::vector<int> machine_rows_;
    int reference_row_ = -1;

    void validate() const;
    void build_derived();
};

struct EquilibriumState {
    Vector angles;                 // theta* per machine node (machine order)
    double reference_angle = 0.0;  // infinite bus, held fixed
    double residual_norm = 0.0;    // ||P - E Y sin(E^T theta*)||_inf on machine rows
    double max_angle_difference = 0.0;  // ||E^T theta*||_inf over all edges
    bool converged = false;
    bool within_half_pi = false;   // flag only; downstream certification refuses if false
    int iterations = 0;
};

struct EquilibriumOptions {
    double tolerance = 1e-10;
    int max_iterations = 100;
    double reference_angle = 0.0;
};

struct KronOptions {
    /// Interior injections must be zero unless this is set, in which case they
    /// are shifted onto boundary buses through the inverse-electrical-distance
    /// distribution -L_bi L_ii^{-1}.
    bool distribute_interior_injections = false;
};

/// Eliminate interior buses through the Schur complement of the weighted
/// Laplacian. Returns a machine + infinite-bus network.
PowerNetwork kron_reduce(const PowerNetwork& net, const KronOptions& opts = {});

/// Damped Newton from flat start for P = E Y sin(E^T theta), reference fixed.
/// Throws SolverError on non-convergence; a solution with angle spread
/// >= pi/2 is returned but flagged (within_half_pi == false).
EquilibriumState solve_equilibrium(const PowerNetwork& net,
                                   const EquilibriumOptions& opts = {});

/// Stacked full angle vector (all buses) from machine angles + reference.
Vector full_angles(const PowerNetwork& net, const Vector& machine_angles,
                   double reference_angle);

/// E^T theta for all edges, given machine angles and the reference angle.
Vector edge_angles(const PowerNetwork& net, const Vector& machine_angles,
                   double reference_angle);

} // namespace gridcert
