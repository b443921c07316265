#pragma once

#include "gridcert/case_io.hpp"
#include "gridcert/robustness.hpp"
#include "gridcert/sim.hpp"

#include <json.hpp>

#include <string>

namespace gridcert {

/// Self-describing result document for one certification run. Everything a
/// later `simulate` invocation needs is embedded, including the reduced
/// network, so no re-search is required. Serialization is deterministic:
/// no timestamps, keys emitted in sorted order.
struct CertificationReport {
    std::string case_path;
    nlohmann::json reduced_case;  // serialize_case of the reduced network
    int original_bus_count = 0;
    bool kron_applied = false;

    EquilibriumState equilibrium;
    ConstraintPolytope polytope;
    SectorBounds sector;

    SearchStatus status = SearchStatus::search_exhausted;
    Matrix P;
    Vector lambda;
    Vector gamma;
    double margin = 0.0;
    double lambda_max_R = 0.0;
    double lambda_min_P = 0.0;
    int iterations = 0;
    int first_feasible_iteration = -1;
    SearchTolerances tolerances;
    int budget = 0;

    bool has_levels = false;
    LevelSetReport levels;
    bool has_robustness = false;
    RobustnessReport robustness;

    nlohmann::json config_echo;
};

nlohmann::json to_json(const CertificationReport& rep);
CertificationReport report_from_json(const nlohmann::json& j);

void save_report(const std::string& path, const CertificationReport& rep);
CertificationReport load_report(const std::string& path);

std::string pretty_print(const CertificationReport& rep);

/// Working objects reconstructed from a stored report.
struct CertificationBundle {
    PowerNetwork net;
    EquilibriumState eq;
    LureSystem sys;
    ConstraintPolytope poly;
    CertificateParams cert;
    LevelSetReport levels;
    RobustnessReport robustness;
    bool has_robustness = false;
};

/// Throws SolverError when the stored certificate was not accepted.
CertificationBundle rebuild_bundle(const CertificationReport& rep);

// json helpers shared by the report and the CLI
nlohmann::json matrix_to_json(const Matrix& m);  // dense, row-major
Matrix matrix_from_json(const nlohmann::json& j, int rows, int cols);
nlohmann::json vector_to_json(const Vector& v);
Vector vector_from_json(const nlohmann::json& j);

std::string status_to_string(SearchStatus s);
SearchStatus status_from_string(const std::string& s);

} // namespace gridcert
