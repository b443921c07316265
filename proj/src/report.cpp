#include "gridcert/report.hpp"

#include <fstream>
#include <sstream>

namespace gridcert {

using nlohmann::json;

json matrix_to_json(const Matrix& m) {
    json rows = json::array();
    for (Eigen::Index i = 0; i < m.rows(); ++i) {
        json row = json::array();
        for (Eigen::Index j = 0; j < m.cols(); ++j) row.push_back(m(i, j));
        rows.push_back(row);
    }
    return rows;
}

Matrix matrix_from_json(const json& j, int rows, int cols) {
    Matrix m(rows, cols);
    for (int i = 0; i < rows; ++i)
        for (int c = 0; c < cols; ++c) m(i, c) = j.at(i).at(c).get<double>();
    return m;
}

json vector_to_json(const Vector& v) {
    json arr = json::array();
    for (Eigen::Index i = 0; i < v.size(); ++i) arr.push_back(v(i));
    return arr;
}

Vector vector_from_json(const json& j) {
    Vector v(j.size());
    for (std::size_t i = 0; i < j.size(); ++i) v(i) = j.at(i).get<double>();
    return v;
}

std::string status_to_string(SearchStatus s) {
    switch (s) {
        case SearchStatus::accepted: return "accepted";
        case SearchStatus::search_exhausted: return "search_exhausted";
        case SearchStatus::non_hurwitz: return "non_hurwitz";
    }
    return "search_exhausted";
}

SearchStatus status_from_string(const std::string& s) {
    if (s == "accepted") return SearchStatus::accepted;
    if (s == "non_hurwitz") return SearchStatus::non_hurwitz;
    return SearchStatus::search_exhausted;
}

namespace {

json face_to_json(const FaceResult& f) {
    return json{{"id", f.face_id},
                {"value", f.value},
                {"argmin", vector_to_json(f.argmin)},
                {"kkt_residual", f.kkt_residual},
                {"inequality_active", f.inequality_active},
                {"converged", f.converged}};
}

FaceResult face_from_json(const json& j) {
    FaceResult f;
    f.face_id = j.at("id").get<std::string>();
    f.value = j.at("value").get<double>();
    f.argmin = vector_from_json(j.at("argmin"));
    f.kkt_residual = j.at("kkt_residual").get<double>();
    f.inequality_active = j.at("inequality_active").get<bool>();
    f.converged = j.at("converged").get<bool>();
    return f;
}

json levels_to_json(const LevelSetReport& r) {
    auto dump = [](const std::vector<FaceResult>& v) {
        json arr = json::array();
        for (const auto& f : v) arr.push_back(face_to_json(f));
        return arr;
    };
    return json{{"outflow", dump(r.outflow)},   {"frequency", dump(r.frequency)},
                {"plain", dump(r.plain)},       {"V_star", r.V_star},
                {"W_star", r.W_star},           {"Vhat_star", r.Vhat_star},
                {"V_max", r.V_max},             {"Vhat_max", r.Vhat_max},
                {"V_star_face", r.V_star_face}, {"W_star_face", r.W_star_face},
                {"Vhat_star_face", r.Vhat_star_face}};
}

LevelSetReport levels_from_json(const json& j) {
    LevelSetReport r;
    auto load = [](const json& arr, std::vector<FaceResult>& out) {
        for (const auto& f : arr) out.push_back(face_from_json(f));
    };
    load(j.at("outflow"), r.outflow);
    load(j.at("frequency"), r.frequency);
    load(j.at("plain"), r.plain);
    r.V_star = j.at("V_star").get<double>();
    r.W_star = j.at("W_star").get<double>();
    r.Vhat_star = j.at("Vhat_star").get<double>();
    r.V_max = j.at("V_max").get<double>();
    r.Vhat_max = j.at("Vhat_max").get<double>();
    r.V_star_face = j.at("V_star_face").get<std::string>();
    r.W_star_face = j.at("W_star_face").get<std::string>();
    r.Vhat_star_face = j.at("Vhat_star_face").get<std::string>();
    return r;
}

json robustness_to_json(const RobustnessReport& r) {
    return json{{"mu", r.mu},
                {"psi1", r.psi1},
                {"psi2", r.psi2},
                {"sigma_min_negR", r.sigma_min_negR},
                {"PH_norm", r.PH_norm},
                {"C_norm", r.C_norm},
                {"Vhat_max", r.Vhat_max},
                {"eta_bar", r.eta_bar},
                {"region_Xi", r.region_Xi}};
}

RobustnessReport robustness_from_json(const json& j) {
    RobustnessReport r;
    r.mu = j.at("mu").get<double>();
    r.psi1 = j.at("psi1").get<double>();
    r.psi2 = j.at("psi2").get<double>();
    r.sigma_min_negR = j.at("sigma_min_negR").get<double>();
    r.PH_norm = j.at("PH_norm").get<double>();
    r.C_norm = j.at("C_norm").get<double>();
    r.Vhat_max = j.at("Vhat_max").get<double>();
    r.eta_bar = j.at("eta_bar").get<double>();
    r.region_Xi = j.at("region_Xi").get<std::string>();
    return r;
}

std::string kind_name(SectorSetKind k) {
    switch (k) {
        case SectorSetKind::p1: return "P1";
        case SectorSetKind::p2: return "P2";
        case SectorSetKind::general: return "general";
    }
    return "general";
}

SectorSetKind kind_from_name(const std::string& s) {
    if (s == "P1") return SectorSetKind::p1;
    if (s == "P2") return SectorSetKind::p2;
    return SectorSetKind::general;
}

} // namespace

json to_json(const CertificationReport& rep) {
    json j;
    j["meta"] = {{"tool", "gridcert"}, {"version", "0.1.0"}};
    j["config"] = rep.config_echo;
    j["case"] = {{"path", rep.case_path},
                 {"reduced_network", rep.reduced_case},
                 {"original_bus_count", rep.original_bus_count},
                 {"kron_applied", rep.kron_applied}};
    j["equilibrium"] = {{"angles", vector_to_json(rep.equilibrium.angles)},
                        {"reference_angle", rep.equilibrium.reference_angle},
                        {"residual_norm", rep.equilibrium.residual_norm},
                        {"max_angle_difference", rep.equilibrium.max_angle_difference},
                        {"within_half_pi", rep.equilibrium.within_half_pi},
                        {"iterations", rep.equilibrium.iterations}};
    j["constraints"] = {{"theta_bar", vector_to_json(rep.polytope.theta_bar)},
                        {"omega_bar", vector_to_json(rep.polytope.omega_bar)}};
    j["sector"] = {{"lower", vector_to_json(rep.sector.lower)},
                   {"upper", vector_to_json(rep.sector.upper)},
                   {"xi", vector_to_json(rep.sector.xi)},
                   {"theta_bar", vector_to_json(rep.sector.theta_bar)},
                   {"kind", kind_name(rep.sector.kind)}};
    j["certificate"] = {{"status", status_to_string(rep.status)},
                        {"P", matrix_to_json(rep.P)},
                        {"lambda", vector_to_json(rep.lambda)},
                        {"gamma", vector_to_json(rep.gamma)},
                        {"margin", rep.margin},
                        {"lambda_max_R", rep.lambda_max_R},
                        {"lambda_min_P", rep.lambda_min_P},
                        {"iterations", rep.iterations},
                        {"first_feasible_iteration", rep.first_feasible_iteration},
                        {"budget", rep.budget},
                        {"tolerances",
                         {{"eps_P", rep.tolerances.eps_P},
                          {"eps_gamma", rep.tolerances.eps_gamma},
                          {"eps_R", rep.tolerances.eps_R}}}};
    if (rep.has_levels) j["level_sets"] = levels_to_json(rep.levels);
    if (rep.has_robustness) j["robustness"] = robustness_to_json(rep.robustness);
    return j;
}

CertificationReport report_from_json(const json& j) {
    CertificationReport rep;
    rep.case_path = j.at("case").at("path").get<std::string>();
    rep.reduced_case = j.at("case").at("reduced_network");
    rep.original_bus_count = j.at("case").at("original_bus_count").get<int>();
    rep.kron_applied = j.at("case").at("kron_applied").get<bool>();

    const json& je = j.at("equilibrium");
    rep.equilibrium.angles = vector_from_json(je.at("angles"));
    rep.equilibrium.reference_angle = je.at("reference_angle").get<double>();
    rep.equilibrium.residual_norm = je.at("residual_norm").get<double>();
    rep.equilibrium.max_angle_difference = je.at("max_angle_difference").get<double>();
    rep.equilibrium.within_half_pi = je.at("within_half_pi").get<bool>();
    rep.equilibrium.iterations = je.at("iterations").get<int>();
    rep.equilibrium.converged = true;

    rep.polytope.theta_bar = vector_from_json(j.at("constraints").at("theta_bar"));
    rep.polytope.omega_bar = vector_from_json(j.at("constraints").at("omega_bar"));

    const json& js = j.at("sector");
    rep.sector.lower = vector_from_json(js.at("lower"));
    rep.sector.upper = vector_from_json(js.at("upper"));
    rep.sector.xi = vector_from_json(js.at("xi"));
    rep.sector.theta_bar = vector_from_json(js.at("theta_bar"));
    rep.sector.kind = kind_from_name(js.at("kind").get<std::string>());

    const json& jc = j.at("certificate");
    rep.status = status_from_string(jc.at("status").get<std::string>());
    const int dim = 2 * static_cast<int>(rep.equilibrium.angles.size());
    rep.P = matrix_from_json(jc.at("P"), dim, dim);
    rep.lambda = vector_from_json(jc.at("lambda"));
    rep.gamma = vector_from_json(jc.at("gamma"));
    rep.margin = jc.at("margin").get<double>();
    rep.lambda_max_R = jc.at("lambda_max_R").get<double>();
    rep.lambda_min_P = jc.at("lambda_min_P").get<double>();
    rep.iterations = jc.at("iterations").get<int>();
    rep.first_feasible_iteration = jc.at("first_feasible_iteration").get<int>();
    rep.budget = jc.at("budget").get<int>();
    rep.tolerances.eps_P = jc.at("tolerances").at("eps_P").get<double>();
    rep.tolerances.eps_gamma = jc.at("tolerances").at("eps_gamma").get<double>();
    rep.tolerances.eps_R = jc.at("tolerances").at("eps_R").get<double>();

    if (j.contains("level_sets")) {
        rep.levels = levels_from_json(j.at("level_sets"));
        rep.has_levels = true;
    }
    if (j.contains("robustness")) {
        rep.robustness = robustness_from_json(j.at("robustness"));
        rep.has_robustness = true;
    }
    if (j.contains("config")) rep.config_echo = j.at("config");
    return rep;
}

void save_report(const std::string& path, const CertificationReport& rep) {
    std::ofstream out(path);
    if (!out) throw SolverError("cannot open '" + path + "' for writing");
    out << to_json(rep).dump(2) << "\n";
}

CertificationReport load_report(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw CaseError("", "cannot open report '" + path + "'");
    json j;
    in >> j;
    return report_from_json(j);
}

CertificationBundle rebuild_bundle(const CertificationReport& rep) {
    if (rep.status != SearchStatus::accepted)
        throw SolverError("report does not carry an accepted certificate");
    if (!rep.has_levels)
        throw SolverError("report does not carry level-set results");

    PowerNetwork net = parse_case(rep.reduced_case);
    EquilibriumState eq = rep.equilibrium;
    LureSystem sys = build_lure(net, eq);

    CertificateParams cert;
    cert.lyapunov = {rep.P, rep.lambda};
    cert.sector = rep.sector;
    cert.assembly = assemble_R(cert.lyapunov, sys, rep.sector, rep.gamma);
    cert.margin = -cert.assembly.max_eig_R;

    CertificationBundle bundle{std::move(net), std::move(eq), std::move(sys),
                               rep.polytope,   std::move(cert), rep.levels,
                               rep.robustness, rep.has_robustness};
    return bundle;
}

std::string pretty_print(const CertificationReport& rep) {
    std::ostringstream os;
    os.precision(6);
    os << "gridcert certification report\n";
    os << "  case: " << rep.case_path << (rep.kron_applied ? " (Kron-reduced)" : "")
       << "\n";
    os << "  machines: " << rep.equilibrium.angles.size()
       << ", edges: " << rep.sector.upper.size() << "\n";
    os << "  equilibrium: residual " << rep.equilibrium.residual_norm
       << ", max |theta*_ij| " << rep.equilibrium.max_angle_difference
       << (rep.equilibrium.within_half_pi ? "" : "  [exceeds pi/2]") << "\n";
    os << "  certificate: " << status_to_string(rep.status) << ", margin "
       << rep.margin << " (lambda_max R = " << rep.lambda_max_R << ")\n";
    os << "  iterations: " << rep.iterations << " (feasible at "
       << rep.first_feasible_iteration << ")\n";
    if (rep.has_levels) {
        os << "  level sets: V* = " << rep.levels.V_star << " (face "
           << rep.levels.V_star_face << "), W* = " << rep.levels.W_star << " (face "
           << rep.levels.W_star_face << "), Vhat* = " << rep.levels.Vhat_star
           << " (face " << rep.levels.Vhat_star_face << ")\n";
        os << "              V_max = " << rep.levels.V_max
           << ", Vhat_max = " << rep.levels.Vhat_max << "\n";
    }
    if (rep.has_robustness) {
        const auto& r = rep.robustness;
        os << "  robustness: eta_bar = " << r.eta_bar << " p.u.\n";
        os << "     factors: sigma_min(-R) = " << r.sigma_min_negR
           << ", ||PH|| = " << r.PH_norm << ", psi1 = " << r.psi1
           << ", psi2 = " << r.psi2 << ", mu = " << r.mu << "\n";
        os << "     region:  " << r.region_Xi << "\n";
    }
    return os.str();
}

} // namespace gridcert
