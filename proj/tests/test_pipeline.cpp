#include <doctest.h>

#include "gridcert/pipeline.hpp"

#include <filesystem>
#include <fstream>
#include <sstream>

using namespace gridcert;
namespace fs = std::filesystem;

namespace {

std::string cases_dir() { return GRIDCERT_CASES_DIR; }

std::string scratch(const std::string& name) {
    return (fs::temp_directory_path() / "gridcert_tests" / name).string();
}

std::string slurp(const std::string& path) {
    std::ifstream in(path);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

RunConfig smib_config(const std::string& out) {
    RunConfig cfg;
    cfg.case_path = cases_dir() + "/smib.case";
    cfg.theta_bar = {3.0 * M_PI / 4.0};
    cfg.omega_bar = {M_PI};
    cfg.budget = 20000;
    cfg.out_dir = scratch(out);
    return cfg;
}

} // namespace

TEST_CASE("run_certify: SMIB end to end with a positive disturbance bound") {
    const CertifyOutcome out = run_certify(smib_config("pipeline_smib"));
    REQUIRE(out.exit_code == 0);
    CHECK(out.report.status == SearchStatus::accepted);
    CHECK(out.report.has_robustness);
    CHECK(out.report.robustness.eta_bar > 0.0);
    CHECK(out.report.levels.Vhat_max <= out.report.levels.V_max);
    CHECK(fs::exists(out.report_path));

    // every aggregate is attained by one of the stored subproblems
    bool found = false;
    for (const auto& f : out.report.levels.outflow)
        if (f.value == out.report.levels.V_star) found = true;
    CHECK(found);
}

TEST_CASE("run_certify: byte-identical reports for identical configs") {
    const CertifyOutcome a = run_certify(smib_config("pipeline_det_a"));
    const CertifyOutcome b = run_certify(smib_config("pipeline_det_b"));
    REQUIRE(a.exit_code == 0);
    REQUIRE(b.exit_code == 0);
    CHECK(slurp(a.report_path) == slurp(b.report_path));
}

TEST_CASE("run_certify: malformed case exits 1 with a field diagnostic") {
    fs::create_directories(scratch("pipeline_bad"));
    const std::string bad = scratch("pipeline_bad") + "/broken.case";
    std::ofstream(bad) << R"({"buses": [{"id": 1, "kind": "machine", "V": 1.0,
        "M": -1.0, "D": 1.0}], "lines": []})";

    RunConfig cfg = smib_config("pipeline_bad");
    cfg.case_path = bad;
    const CertifyOutcome out = run_certify(cfg);
    CHECK(out.exit_code == 1);
    CHECK(out.error.find("buses[0].M") != std::string::npos);
    CHECK(out.error.find("parse") != std::string::npos);
}

TEST_CASE("run_certify: full IEEE 9-bus requires the load distribution flag") {
    RunConfig cfg = smib_config("pipeline_ieee9");
    cfg.case_path = cases_dir() + "/ieee9.case";
    cfg.theta_bar = {M_PI / 6.0};

    const CertifyOutcome without = run_certify(cfg);
    CHECK(without.exit_code == 1);
    CHECK(without.error.find("kron_reduce") != std::string::npos);

    cfg.distribute_interior_injections = true;
    const CertifyOutcome with = run_certify(cfg);
    REQUIRE(with.exit_code == 0);
    CHECK(with.report.kron_applied);
    CHECK(with.report.original_bus_count == 9);
    CHECK(with.report.robustness.eta_bar > 0.0);
}

TEST_CASE("report round-trip and bundle reconstruction") {
    const CertifyOutcome out = run_certify(smib_config("pipeline_rt"));
    REQUIRE(out.exit_code == 0);

    const CertificationReport loaded = load_report(out.report_path);
    CHECK(to_json(loaded) == to_json(out.report));

    const CertificationBundle bundle = rebuild_bundle(loaded);
    CHECK(bundle.cert.margin == doctest::Approx(out.report.margin).epsilon(1e-12));
    CHECK(bundle.levels.V_max == out.report.levels.V_max);
    CHECK(bundle.sys.state_dimension == 2);

    // the reloaded certificate still verifies independently
    const MarginReport verify =
        verify_certificate(bundle.cert.assembly, bundle.cert.lyapunov,
                           loaded.tolerances);
    CHECK(verify.accepted);
}

TEST_CASE("broadcast_constraints: uniform and per-edge forms") {
    const CertifyOutcome out = run_certify(smib_config("pipeline_bc"));
    REQUIRE(out.exit_code == 0);
    const CertificationBundle bundle = rebuild_bundle(out.report);

    const ConstraintPolytope uni =
        broadcast_constraints(bundle.sys, {1.0}, {2.0});
    CHECK(uni.theta_bar.size() == bundle.sys.edge_count);
    CHECK(uni.omega_bar.size() == bundle.sys.machine_count);
    CHECK(uni.theta_bar(0) == 1.0);

    CHECK_THROWS_AS(broadcast_constraints(bundle.sys, {1.0, 2.0, 3.0}, {2.0}),
                    CaseError);
}
