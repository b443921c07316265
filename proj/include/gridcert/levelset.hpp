#pragma once

#include "gridcert/certificate.hpp"

#include <string>
#include <vector>

namespace gridcert {

/// Minimize V over {x : a^T x = b} with at most one extra linear
/// inequality g^T x <= 0 (the out-flow side of an angle face).
struct FaceProblem {
    enum class Kind { angle_outflow, frequency, angle_plain };
    Kind kind = Kind::angle_plain;
    int index = 0;  // edge or machine index
    int sign = +1;  // +1 for the upper face, -1 for the lower
    Vector normal;  // a
    double offset = 0.0;  // b
    bool has_inequality = false;
    Vector inequality;  // g
    std::string id;
};

struct FaceResult {
    std::string face_id;
    double value = 0.0;
    Vector argmin;
    double kkt_residual = 0.0;
    bool inequality_active = false;
    bool converged = false;
    int iterations = 0;
};

struct LevelSetReport {
    std::vector<FaceResult> outflow;    // 2|E| problems, out-flow faces
    std::vector<FaceResult> frequency;  // 2n problems
    std::vector<FaceResult> plain;      // 2|E| problems, no inequality
    double V_star = 0.0;
    double W_star = 0.0;
    double Vhat_star = 0.0;
    double V_max = 0.0;     // min{V*, W*}
    double Vhat_max = 0.0;  // min{Vhat*, W*}
    // faces attaining each aggregate, for traceability
    std::string V_star_face;
    std::string W_star_face;
    std::string Vhat_star_face;
};

struct FaceSolveOptions {
    double kkt_tolerance = 1e-10;
    int max_iterations = 200;
};

struct LevelSetOptions {
    FaceSolveOptions solver;
};

/// All face problems for the polytope, in deterministic order.
std::vector<FaceProblem> enumerate_faces(const LureSystem& sys,
                                         const ConstraintPolytope& poly);

FaceResult minimize_V_on_face(const CertificateParams& cert, const LureSystem& sys,
                              const FaceProblem& face,
                              const FaceSolveOptions& opts = {});

/// Solves every face problem. The subproblems are independent; this entry
/// point runs them across OpenMP threads.
LevelSetReport compute_level_sets(const CertificateParams& cert,
                                  const LureSystem& sys,
                                  const ConstraintPolytope& poly,
                                  const LevelSetOptions& opts = {});

/// Serial reference implementation; must produce bit-identical results.
LevelSetReport compute_level_sets_serial(const CertificateParams& cert,
                                         const LureSystem& sys,
                                         const ConstraintPolytope& poly,
                                         const LevelSetOptions& opts = {});

/// x in X = {V(x) <= V_max} intersected with the angle polytope.
bool membership_X(const CertificateParams& cert, const LevelSetReport& report,
                  const LureSystem& sys, const ConstraintPolytope& poly,
                  const Vector& x, double slack = 0.0);

} // namespace gridcert
