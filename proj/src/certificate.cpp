#include "gridcert/certificate.hpp"

#include <Eigen/Eigenvalues>

#include <cmath>
#include <limits>

namespace gridcert {

double sector_integral(double eq_angle, double delta_hi, double z) {
    // int_0^z (dhi s - phi(s)) ds with phi(s) = sin(th*+s) - sin th* - cos th* s
    return 0.5 * (delta_hi + std::cos(eq_angle)) * z * z + z * std::sin(eq_angle) +
           std::cos(eq_angle + z) - std::cos(eq_angle);
}

double evaluate_V(const LyapunovParams& params, const LureSystem& sys,
                  const SectorBounds& sector, const Vector& x) {
    const Vector z = sys.C * x;
    double v = x.dot(params.P * x);
    for (int k = 0; k < sys.edge_count; ++k)
        v += 2.0 * params.lambda(k) *
             sector_integral(sys.equilibrium_edge_angles(k), sector.upper(k), z(k));
    return v;
}

Vector gradient_V(const LyapunovParams& params, const LureSystem& sys,
                  const SectorBounds& sector, const Vector& x) {
    const Vector z = sys.C * x;
    Vector edge_term(sys.edge_count);
    for (int k = 0; k < sys.edge_count; ++k)
        edge_term(k) = params.lambda(k) *
                       (sector.upper(k) * z(k) -
                        phi_scalar(sys.equilibrium_edge_angles(k), z(k)));
    return 2.0 * (params.P * x) + 2.0 * (sys.C.transpose() * edge_term);
}

Matrix hessian_V(const LyapunovParams& params, const LureSystem& sys,
                 const SectorBounds& sector, const Vector& x) {
    (void)sector;  // dhi - phi'(z) = 1 - cos(th* + z) for the exact upper bound
    const Vector z = sys.C * x;
    Vector w(sys.edge_count);
    for (int k = 0; k < sys.edge_count; ++k)
        w(k) = 2.0 * params.lambda(k) *
               (1.0 - std::cos(sys.equilibrium_edge_angles(k) + z(k)));
    return 2.0 * params.P + sys.C.transpose() * w.asDiagonal() * sys.C;
}

LmiAssembly assemble_R(const LyapunovParams& params, const LureSystem& sys,
                       const SectorBounds& sector, const Vector& gamma) {
    const int ns = sys.state_dimension;
    const int m = sys.edge_count;
    for (int k = 0; k < m; ++k)
        if (!(gamma(k) > 0.0))
            throw SolverError("assemble_R: gamma must be entry-wise positive");

    const Matrix& A = sys.A;
    const Matrix& B = sys.B;
    const Matrix& C = sys.C;
    const Matrix& P = params.P;
    const auto Lam = params.lambda.asDiagonal();
    const auto Dlo = sector.lower.asDiagonal();
    const auto Dhi = sector.upper.asDiagonal();
    const auto Gam = gamma.asDiagonal();

    // printed block formulas
    const Matrix P_aug = P + C.transpose() * Lam * Dhi * C;
    Matrix R11 = A.transpose() * P_aug + P_aug.transpose() * A -
                 2.0 * C.transpose() * Dlo * Gam * Dhi * C;
    Matrix R12 = -P * B - A.transpose() * C.transpose() * Lam +
                 C.transpose() * (sector.lower + sector.upper).asDiagonal() * Gam;
    Matrix R22 = -2.0 * Matrix(Gam);

    LmiAssembly out;
    out.gamma = gamma;
    out.R.resize(ns + m, ns + m);
    out.R.topLeftCorner(ns, ns) = R11;
    out.R.topRightCorner(ns, m) = R12;
    out.R.bottomLeftCorner(m, ns) = R12.transpose();
    out.R.bottomRightCorner(m, m) = R22;

    // independent route: derivative quadratic form minus the sector term,
    // with the products expanded so the two assemblies do not share terms
    out.Q = Matrix::Zero(ns + m, ns + m);
    out.Q.topLeftCorner(ns, ns) = A.transpose() * P + P * A +
                                  A.transpose() * C.transpose() * Lam * Dhi * C +
                                  C.transpose() * Dhi * Lam * C * A;
    out.Q.topRightCorner(ns, m) = -P * B - A.transpose() * C.transpose() * Lam;
    out.Q.bottomLeftCorner(m, ns) = out.Q.topRightCorner(ns, m).transpose();

    out.Qtilde = Matrix::Zero(ns + m, ns + m);
    out.Qtilde.topLeftCorner(ns, ns) = 2.0 * C.transpose() * Dlo * Gam * Dhi * C;
    out.Qtilde.topRightCorner(ns, m) =
        -C.transpose() * (sector.lower + sector.upper).asDiagonal() * Gam;
    out.Qtilde.bottomLeftCorner(m, ns) = out.Qtilde.topRightCorner(ns, m).transpose();
    out.Qtilde.bottomRightCorner(m, m) = 2.0 * Matrix(Gam);

    const Matrix diff = out.R - (out.Q - out.Qtilde);
    const double mismatch = diff.cwiseAbs().maxCoeff();
    if (mismatch > 1e-12 * std::max(1.0, out.R.cwiseAbs().maxCoeff()))
        throw SolverError("assemble_R: block formulas disagree with Q - Qtilde");

    out.asymmetry_defect = (out.R - out.R.transpose()).cwiseAbs().maxCoeff();
    if (out.asymmetry_defect > 1e-9)
        throw SolverError("assemble_R: asymmetry defect exceeds 1e-9");
    out.R = 0.5 * (out.R + out.R.transpose());

    Eigen::SelfAdjointEigenSolver<Matrix> es(out.R, Eigen::EigenvaluesOnly);
    out.max_eig_R = es.eigenvalues().maxCoeff();
    return out;
}

MarginReport verify_certificate(const LmiAssembly& assembly,
                                const LyapunovParams& params,
                                const SearchTolerances& tol) {
    MarginReport rep;
    Eigen::SelfAdjointEigenSolver<Matrix> er(assembly.R, Eigen::EigenvaluesOnly);
    rep.lambda_max_R = er.eigenvalues().maxCoeff();
    Eigen::SelfAdjointEigenSolver<Matrix> ep(params.P, Eigen::EigenvaluesOnly);
    rep.lambda_min_P = ep.eigenvalues().minCoeff();
    rep.gamma_min = assembly.gamma.minCoeff();
    rep.accepted = rep.lambda_max_R <= -tol.eps_R && rep.lambda_min_P >= tol.eps_P &&
                   rep.gamma_min >= tol.eps_gamma;
    return rep;
}

bool is_hurwitz(const Matrix& A) {
    Eigen::EigenSolver<Matrix> es(A, /*computeEigenvectors=*/false);
    return es.eigenvalues().real().maxCoeff() < 0.0;
}

Matrix solve_lyapunov(const Matrix& A) {
    const int n = static_cast<int>(A.rows());
    Matrix K = Matrix::Zero(n * n, n * n);
    // vec(A^T P) = (I (x) A^T) vec(P), vec(P A) = (A^T (x) I) vec(P)
    for (int j = 0; j < n; ++j) K.block(j * n, j * n, n, n) = A.transpose();
    for (int j = 0; j < n; ++j)
        for (int i = 0; i < n; ++i)
            K.block(j * n, i * n, n, n) += A(i, j) * Matrix::Identity(n, n);
    Eigen::VectorXd rhs(n * n);
    const Matrix mid = -Matrix::Identity(n, n);
    for (int j = 0; j < n; ++j) rhs.segment(j * n, n) = mid.col(j);
    Eigen::FullPivLU<Matrix> lu(K);
    if (!lu.isInvertible())
        throw SolverError("solve_lyapunov: A has eigenvalues summing to zero");
    const Vector p = lu.solve(rhs);
    Matrix P(n, n);
    for (int j = 0; j < n; ++j) P.col(j) = p.segment(j * n, n);
    return 0.5 * (P + P.transpose());
}

namespace {

struct SearchPoint {
    Matrix P;
    Vector lambda;
    Vector gamma;
};

Matrix assemble_R_only(const SearchPoint& pt, const LureSystem& sys,
                       const SectorBounds& sector) {
    const int ns = sys.state_dimension;
    const int m = sys.edge_count;
    const Matrix& A = sys.A;
    const Matrix P_aug =
        pt.P + sys.C.transpose() * pt.lambda.asDiagonal() * sector.upper.asDiagonal() *
                   sys.C;
    Matrix R(ns + m, ns + m);
    R.topLeftCorner(ns, ns) =
        A.transpose() * P_aug + P_aug.transpose() * A -
        2.0 * sys.C.transpose() * sector.lower.asDiagonal() * pt.gamma.asDiagonal() *
            sector.upper.asDiagonal() * sys.C;
    R.topRightCorner(ns, m) =
        -pt.P * sys.B - A.transpose() * sys.C.transpose() * pt.lambda.asDiagonal() +
        sys.C.transpose() * (sector.lower + sector.upper).asDiagonal() *
            pt.gamma.asDiagonal();
    R.bottomLeftCorner(m, ns) = R.topRightCorner(ns, m).transpose();
    R.bottomRightCorner(m, m) = (-2.0 * pt.gamma).asDiagonal();
    return 0.5 * (R + R.transpose());
}

void project(SearchPoint& pt, const SearchTolerances& tol) {
    Eigen::SelfAdjointEigenSolver<Matrix> es(0.5 * (pt.P + pt.P.transpose()));
    Vector ev = es.eigenvalues().cwiseMax(tol.eps_P);
    pt.P = es.eigenvectors() * ev.asDiagonal() * es.eigenvectors().transpose();
    pt.lambda = pt.lambda.cwiseMax(0.0);
    pt.gamma = pt.gamma.cwiseMax(tol.eps_gamma);

    // fix the overall scale; R is linear in (P, lambda, Gamma) jointly, so the
    // margin is otherwise unbounded under scaling
    const double c = static_cast<double>(pt.P.rows()) / pt.P.trace();
    pt.P *= c;
    pt.lambda *= c;
    pt.gamma = (c * pt.gamma).cwiseMax(tol.eps_gamma);
}

/// d lambda_max(R)/d(params) through the top eigenvector u = [u1; u2];
/// R is affine in the parameters so the subgradient needs no current point.
void subgradient(const LureSystem& sys, const SectorBounds& sector,
                 const Vector& u, Matrix& gP, Vector& gLambda, Vector& gGamma) {
    const int ns = sys.state_dimension;
    const int m = sys.edge_count;
    const Vector u1 = u.head(ns);
    const Vector u2 = u.tail(m);

    const Vector Au1 = sys.A * u1;
    const Vector Bu2 = sys.B * u2;
    const Vector Cu1 = sys.C * u1;
    const Vector CAu1 = sys.C * Au1;

    gP = Au1 * u1.transpose() + u1 * Au1.transpose() - u1 * Bu2.transpose() -
         Bu2 * u1.transpose();

    gLambda.resize(m);
    gGamma.resize(m);
    for (int k = 0; k < m; ++k) {
        gLambda(k) = 2.0 * sector.upper(k) * CAu1(k) * Cu1(k) - 2.0 * CAu1(k) * u2(k);
        gGamma(k) = -2.0 * sector.lower(k) * sector.upper(k) * Cu1(k) * Cu1(k) +
                    2.0 * (sector.lower(k) + sector.upper(k)) * Cu1(k) * u2(k) -
                    2.0 * u2(k) * u2(k);
    }
}

} // namespace

CertificateSearchResult find_certificate(const LureSystem& sys,
                                         const SectorBounds& sector,
                                         const SearchOptions& opts) {
    CertificateSearchResult result;

    if (!is_hurwitz(sys.A)) {
        result.status = SearchStatus::non_hurwitz;
        return result;
    }

    SearchPoint pt;
    pt.P = solve_lyapunov(sys.A);
    pt.lambda = Vector::Zero(sys.edge_count);
    pt.gamma = Vector::Constant(sys.edge_count, opts.tol.eps_gamma);
    project(pt, opts.tol);

    SearchPoint best = pt;
    double best_eig = std::numeric_limits<double>::infinity();
    int best_iter = 0;

    for (int t = 0; t < opts.budget; ++t) {
        const Matrix R = assemble_R_only(pt, sys, sector);
        Eigen::SelfAdjointEigenSolver<Matrix> es(R);
        const int top = static_cast<int>(R.rows()) - 1;
        const double lmax = es.eigenvalues()(top);
        const Vector u = es.eigenvectors().col(top);

        if (lmax < best_eig) {
            best_eig = lmax;
            best = pt;
            best_iter = t;
        }
        if (result.first_feasible_iteration < 0 && lmax <= -opts.tol.eps_R)
            result.first_feasible_iteration = t;

        // once feasible, keep pushing the margin until progress stalls
        if (result.first_feasible_iteration >= 0 &&
            t - best_iter > opts.patience) {
            result.iterations = t + 1;
            break;
        }

        Matrix gP;
        Vector gLambda, gGamma;
        subgradient(sys, sector, u, gP, gLambda, gGamma);
        const double gnorm = std::sqrt(gP.squaredNorm() + gLambda.squaredNorm() +
                                       gGamma.squaredNorm());
        const double step =
            opts.step_a / (opts.step_b + t) / std::max(1.0, gnorm);

        pt.P -= step * gP;
        pt.lambda -= step * gLambda;
        pt.gamma -= step * gGamma;
        project(pt, opts.tol);
        result.iterations = t + 1;
    }

    result.params.lyapunov = {best.P, best.lambda};
    result.params.sector = sector;
    result.params.assembly = assemble_R(result.params.lyapunov, sys, sector, best.gamma);
    result.params.margin = -result.params.assembly.max_eig_R;
    result.verification =
        verify_certificate(result.params.assembly, result.params.lyapunov, opts.tol);
    result.status = result.verification.accepted ? SearchStatus::accepted
                                                 : SearchStatus::search_exhausted;
    return result;
}

} // namespace gridcert
