#include "gridcert/levelset.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <limits>

namespace gridcert {

namespace {

/// Newton on the affine subspace {x0 + Z y}, Z an orthonormal basis of the
/// active constraints' null space. Strong convexity of V makes the reduced
/// Hessian positive definite, so plain damped Newton converges.
FaceResult minimize_on_subspace(const CertificateParams& cert, const LureSystem& sys,
                                const Matrix& constraints, const Vector& rhs,
                                const FaceSolveOptions& opts) {
    const int dim = sys.state_dimension;
    const int nc = static_cast<int>(constraints.cols());

    Eigen::HouseholderQR<Matrix> qr(constraints);
    const Matrix Qfull = qr.householderQ();
    const Matrix Z = Qfull.rightCols(dim - nc);

    // particular solution: least-norm point on the affine set
    Vector x = constraints *
               (constraints.transpose() * constraints).ldlt().solve(rhs);

    FaceResult res;
    for (int it = 0; it < opts.max_iterations; ++it) {
        const Vector grad = gradient_V(cert.lyapunov, sys, cert.sector, x);
        const Vector gr = Z.transpose() * grad;
        res.kkt_residual = gr.norm();
        res.iterations = it;
        if (res.kkt_residual <= opts.kkt_tolerance) {
            res.converged = true;
            break;
        }
        const Matrix Hr =
            Z.transpose() * hessian_V(cert.lyapunov, sys, cert.sector, x) * Z;
        const Vector dy = -Hr.ldlt().solve(gr);

        double alpha = 1.0;
        const double v0 = evaluate_V(cert.lyapunov, sys, cert.sector, x);
        Vector trial = x + alpha * (Z * dy);
        while (evaluate_V(cert.lyapunov, sys, cert.sector, trial) > v0 &&
               alpha > 1e-12) {
            alpha *= 0.5;
            trial = x + alpha * (Z * dy);
        }
        x = trial;
    }
    res.argmin = x;
    res.value = evaluate_V(cert.lyapunov, sys, cert.sector, x);
    return res;
}

} // namespace

std::vector<FaceProblem> enumerate_faces(const LureSystem& sys,
                                         const ConstraintPolytope& poly) {
    const int n = sys.machine_count;
    const int m = sys.edge_count;
    const int dim = sys.state_dimension;

    std::vector<FaceProblem> faces;
    faces.reserve(4 * m + 2 * n);

    auto edge_label = [&](int k) { return std::to_string(k); };

    // out-flow faces of P (Kind::angle_outflow): theta_ij = sign * theta_bar
    // with the escape-side inequality sign*(omega_i - omega_j) >= 0
    for (int k = 0; k < m; ++k) {
        for (int sign : {-1, +1}) {
            FaceProblem f;
            f.kind = FaceProblem::Kind::angle_outflow;
            f.index = k;
            f.sign = sign;
            f.normal = sys.C.row(k).transpose();
            f.offset = sign * poly.theta_bar(k) - sys.equilibrium_edge_angles(k);
            f.has_inequality = true;
            // omega difference along the edge orientation, as g^T x <= 0
            Vector g = Vector::Zero(dim);
            g.tail(n) = -sign * sys.machine_incidence.col(k);
            f.inequality = g;
            f.id = std::string("P") + (sign > 0 ? "+" : "-") + "_" + edge_label(k);
            faces.push_back(std::move(f));
        }
    }
    // frequency faces of S: omega_i = sign * omega_bar
    for (int i = 0; i < n; ++i) {
        for (int sign : {-1, +1}) {
            FaceProblem f;
            f.kind = FaceProblem::Kind::frequency;
            f.index = i;
            f.sign = sign;
            f.normal = Vector::Zero(dim);
            f.normal(n + i) = 1.0;
            f.offset = sign * poly.omega_bar(i);
            f.id = std::string("S") + (sign > 0 ? "+" : "-") + "_" + std::to_string(i);
            faces.push_back(std::move(f));
        }
    }
    // plain angle faces (no inequality), for the interior level
    for (int k = 0; k < m; ++k) {
        for (int sign : {-1, +1}) {
            FaceProblem f;
            f.kind = FaceProblem::Kind::angle_plain;
            f.index = k;
            f.sign = sign;
            f.normal = sys.C.row(k).transpose();
            f.offset = sign * poly.theta_bar(k) - sys.equilibrium_edge_angles(k);
            f.id = std::string("Phat") + (sign > 0 ? "+" : "-") + "_" + edge_label(k);
            faces.push_back(std::move(f));
        }
    }
    return faces;
}

FaceResult minimize_V_on_face(const CertificateParams& cert, const LureSystem& sys,
                              const FaceProblem& face, const FaceSolveOptions& opts) {
    const int dim = sys.state_dimension;

    Matrix constraints(dim, 1);
    constraints.col(0) = face.normal;
    Vector rhs(1);
    rhs(0) = face.offset;

    FaceResult res = minimize_on_subspace(cert, sys, constraints, rhs, opts);

    if (face.has_inequality && face.inequality.dot(res.argmin) > 0.0) {
        // single inequality + strongly convex objective: if the hyperplane
        // minimizer violates it, the constrained minimizer has it active
        Matrix both(dim, 2);
        both.col(0) = face.normal;
        both.col(1) = face.inequality;
        Vector rhs2(2);
        rhs2 << face.offset, 0.0;
        res = minimize_on_subspace(cert, sys, both, rhs2, opts);
        res.inequality_active = true;
    }
    res.face_id = face.id;
    return res;
}

namespace {

LevelSetReport assemble_report(const LureSystem& sys,
                               const std::vector<FaceProblem>& faces,
                               std::vector<FaceResult> results) {
    LevelSetReport rep;
    for (std::size_t i = 0; i < faces.size(); ++i) {
        switch (faces[i].kind) {
            case FaceProblem::Kind::angle_outflow:
                rep.outflow.push_back(std::move(results[i]));
                break;
            case FaceProblem::Kind::frequency:
                rep.frequency.push_back(std::move(results[i]));
                break;
            case FaceProblem::Kind::angle_plain:
                rep.plain.push_back(std::move(results[i]));
                break;
        }
    }
    auto min_value = [](const std::vector<FaceResult>& v, std::string& face) {
        double best = std::numeric_limits<double>::infinity();
        for (const auto& r : v)
            if (r.value < best) {
                best = r.value;
                face = r.face_id;
            }
        return best;
    };
    rep.V_star = min_value(rep.outflow, rep.V_star_face);
    rep.W_star = min_value(rep.frequency, rep.W_star_face);
    rep.Vhat_star = min_value(rep.plain, rep.Vhat_star_face);
    rep.V_max = std::min(rep.V_star, rep.W_star);
    rep.Vhat_max = std::min(rep.Vhat_star, rep.W_star);
    (void)sys;
    return rep;
}

} // namespace

LevelSetReport compute_level_sets(const CertificateParams& cert, const LureSystem& sys,
                                  const ConstraintPolytope& poly,
                                  const LevelSetOptions& opts) {
    const std::vector<FaceProblem> faces = enumerate_faces(sys, poly);
    std::vector<FaceResult> results(faces.size());

    const int count = static_cast<int>(faces.size());
#pragma omp parallel for schedule(dynamic)
    for (int i = 0; i < count; ++i)
        results[i] = minimize_V_on_face(cert, sys, faces[i], opts.solver);

    return assemble_report(sys, faces, std::move(results));
}

LevelSetReport compute_level_sets_serial(const CertificateParams& cert,
                                         const LureSystem& sys,
                                         const ConstraintPolytope& poly,
                                         const LevelSetOptions& opts) {
    const std::vector<FaceProblem> faces = enumerate_faces(sys, poly);
    std::vector<FaceResult> results(faces.size());
    for (std::size_t i = 0; i < faces.size(); ++i)
        results[i] = minimize_V_on_face(cert, sys, faces[i], opts.solver);
    return assemble_report(sys, faces, std::move(results));
}

bool membership_X(const CertificateParams& cert, const LevelSetReport& report,
                  const LureSystem& sys, const ConstraintPolytope& poly,
                  const Vector& x, double slack) {
    if (evaluate_V(cert.lyapunov, sys, cert.sector, x) >
        report.V_max * (1.0 + slack) + slack)
        return false;
    const Vector edge = sys.equilibrium_edge_angles + sys.C * x;
    for (int k = 0; k < sys.edge_count; ++k)
        if (std::abs(edge(k)) > poly.theta_bar(k) + slack) return false;
    return true;
}

} // namespace gridcert
