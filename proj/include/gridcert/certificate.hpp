#pragma once

#include "gridcert/lure.hpp"

namespace gridcert {

/// Parameters of the convex Lyapunov function
///   V(x) = x^T P x + 2 sum_k lambda_k int_0^{z_k} (dhi_k s - phi_k(s)) ds.
struct LyapunovParams {
    Matrix P;       // 2n x 2n symmetric, P >= eps_P I
    Vector lambda;  // per-edge weights, >= 0
};

/// The LMI matrix R of the decrease condition, assembled twice: once from
/// the printed block formulas and once as Q - Qtilde (derivative quadratic
/// form minus the S-procedure sector term). Both must agree entry-wise.
struct LmiAssembly {
    Vector gamma;   // positive diagonal multipliers
    Matrix R;       // (2n+|E|) square, symmetric
    Matrix Q;       // derivative form, Q22 = 0
    Matrix Qtilde;  // sector condition form
    double max_eig_R = 0.0;
    double asymmetry_defect = 0.0;
};

struct CertificateParams {
    LyapunovParams lyapunov;
    LmiAssembly assembly;
    SectorBounds sector;
    double margin = 0.0;  // -lambda_max(R), >= 0 when accepted
};

double evaluate_V(const LyapunovParams& params, const LureSystem& sys,
                  const SectorBounds& sector, const Vector& x);
Vector gradient_V(const LyapunovParams& params, const LureSystem& sys,
                  const SectorBounds& sector, const Vector& x);
Matrix hessian_V(const LyapunovParams& params, const LureSystem& sys,
                 const SectorBounds& sector, const Vector& x);

/// Closed-form edge integral int_0^z (dhi s - phi(s)) ds.
double sector_integral(double eq_angle, double delta_hi, double z);

LmiAssembly assemble_R(const LyapunovParams& params, const LureSystem& sys,
                       const SectorBounds& sector, const Vector& gamma);

struct SearchTolerances {
    double eps_P = 1e-6;
    double eps_gamma = 1e-6;
    double eps_R = 1e-8;
};

struct MarginReport {
    double lambda_max_R = 0.0;
    double lambda_min_P = 0.0;
    double gamma_min = 0.0;
    bool accepted = false;
};

/// Re-checks an assembled certificate with one symmetric eigendecomposition.
MarginReport verify_certificate(const LmiAssembly& assembly,
                                const LyapunovParams& params,
                                const SearchTolerances& tol = {});

struct SearchOptions {
    SearchTolerances tol;
    int budget = 50000;
    double step_a = 1.0;   // diminishing step a/(b+t)
    double step_b = 50.0;
    int patience = 5000;   // stop once feasible and stalled this long
};

enum class SearchStatus { accepted, search_exhausted, non_hurwitz };

struct CertificateSearchResult {
    SearchStatus status = SearchStatus::search_exhausted;
    CertificateParams params;
    MarginReport verification;
    int iterations = 0;
    int first_feasible_iteration = -1;
};

/// Minimizes lambda_max(R) over (P, lambda, Gamma) by projected subgradient
/// descent; R is affine in the parameters so the objective is convex.
/// P starts from the Lyapunov equation A^T P + P A = -I. Search failure does
/// not prove the LMI infeasible.
CertificateSearchResult find_certificate(const LureSystem& sys,
                                         const SectorBounds& sector,
                                         const SearchOptions& opts = {});

/// True iff every eigenvalue of A has negative real part.
bool is_hurwitz(const Matrix& A);

/// Dense solve of A^T P + P A = -I through the Kronecker form.
Matrix solve_lyapunov(const Matrix& A);

} // namespace gridcert
