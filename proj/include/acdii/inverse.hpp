#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "acdii/data.hpp"

namespace acdii {

/// int a |grad v|_sigma0, one-point quadrature per in-domain cell.
double weighted_tv(const ScalarField& v, const CellScalar& a, const TensorField2& sigma0);

/// max over cells of (|B|_{sigma0^-1} - a)_+.
double dual_feasibility(const VectorField2& b, const CellScalar& a, const TensorField2& sigma0);

/// <grad u, B> = -int u div B, with the cell-area weights of weighted_tv.
double dual_pairing(const ScalarField& u, const VectorField2& b);

struct FixedPointOptions {
    double eps0 = 0.0;  ///< <= 0: 0.1 * max |grad u_init|_sigma0
    double ratio = 0.5;
    int stages = 8;
    double tol = 1e-8;  ///< relative change of u ending a stage
    int max_inner = 50;
    double floor = 1e-6;  ///< c_eff >= floor * max c_eff
    int anderson = 5;     ///< Anderson mixing depth on the lagged-diffusivity map; 0 disables
    SolveOptions solve;
};

struct PrimalDualOptions {
    double tau = 0.0;    ///< <= 0: derived from sigma_step and the operator bound
    double sigma = 0.0;  ///< dual step; <= 0: balanced choice
    int max_iter = 50000;
    double tol = 1e-8;   ///< stop when both the relative gap and the divergence residual are below tol
    int check_every = 50;
};

struct TVProblem {
    ScalarField f;
    CellScalar a;
    TensorField2 sigma0;
    FixedPointOptions fixed_point;
    PrimalDualOptions primal_dual;

    static TVProblem from(const AdmissibleTriplet& t);
    void validate() const;
};

struct FixedPointDiagnostics {
    double eps0 = 0.0;
    std::vector<double> eps;
    std::vector<int> inner_iterations;
    std::vector<double> functional;  ///< F after every inner iteration
    std::vector<double> smoothed;    ///< int a (|grad u|^2 + eps^2)^(1/2) after every inner iteration
    std::vector<double> final_change;  ///< last relative change of u in each stage
    int increases = 0;                 ///< inner steps where the smoothed functional rose
    bool converged = true;             ///< the last stage reached tol
};

struct PrimalDualDiagnostics {
    double tau = 0.0, sigma = 0.0;
    int iterations = 0;
    std::vector<double> functional;  ///< F every check_every iterations
    double gap = 0.0;                ///< (F[u] - <grad u, B>) / F[u]
    double divergence_residual = 0.0;  ///< ||(grad^T B) on free nodes||_2 / ||grad^T B||_2
    double feasibility = 0.0;
};

ScalarField minimize_tv_fixedpoint(const TVProblem& p, FixedPointDiagnostics* diag = nullptr);

struct PrimalDualResult {
    ScalarField u;
    VectorField2 b;
    PrimalDualDiagnostics diag;
};

/// Throws InputError when tau * sigma * M * ||grad||^2 > 1.
PrimalDualResult minimize_tv_primal_dual(const TVProblem& p);

/// Bound used for the step condition: ||grad||^2 <= 4 (1/hx^2 + 1/hy^2).
double gradient_norm_bound_sq(const Grid2D& g);

struct MinimalityReport {
    double f_u = 0.0;
    std::vector<double> amplitudes;
    std::vector<double> margins;  ///< (F[u + w] - F[u]) / F[u]
    double min_margin = 0.0;
    int negatives = 0;  ///< margins below -tol
    double tol = 1e-8;
};

/// Random smooth zero-trace perturbation (seeded sine series).
ScalarField smooth_perturbation(const GridPtr& grid, double amplitude, std::uint64_t seed, int modes = 4);

MinimalityReport minimality_audit(const ScalarField& u, const CellScalar& a, const TensorField2& sigma0, int trials,
                                  std::uint64_t seed, double tol = 1e-8);

/// -a sigma0 grad u / |grad u|_sigma0 per cell; zero where grad u = 0 or a = 0.
VectorField2 data_current(const ScalarField& u, const CellScalar& a, const TensorField2& sigma0);

struct DualityGap {
    double functional = 0.0;  ///< F[u]
    double boundary = 0.0;    ///< oint f J.n dS
    double gap = 0.0;         ///< |F + boundary| / F
};

/// Boundary integral by the trapezoid rule in f on each boundary edge, with J.n taken
/// from the cell owning the edge.
DualityGap duality_gap(const ScalarField& u, const ScalarField& f, const VectorField2& j, const CellScalar& a,
                       const TensorField2& sigma0);

struct RecoveryOptions {
    double delta = 1e-3;    ///< gradient floor, relative to max |grad u|_sigma0
    double delta_a = 1e-3;  ///< data floor, relative to max a
};

struct Recovery {
    CellScalar c;    ///< NaN on mask_z
    CellMask mask_z;
    std::size_t z_cells = 0;
    std::size_t gamma_cells = 0;  ///< a below floor with |grad u| above it
    std::size_t flat_cells = 0;   ///< |grad u| below floor

    /// c sigma0 off the mask, fill * sigma0 on it.
    TensorField2 sigma(const TensorField2& sigma0, double fill = 1.0) const;
};

Recovery recover_c(const ScalarField& u, const CellScalar& a, const TensorField2& sigma0,
                   const RecoveryOptions& opts = {});

struct ClassifyOptions {
    double tol_grad = 1e-3;  ///< relative to max |grad u|
    double tol_a = 1e-3;     ///< relative to max a
    double tol_osc = 1e-3;   ///< relative to range(u)
    double alpha = 0.5;
    /// a is declared not C^alpha when max |a(x)-a(y)| / |x-y|^alpha across the
    /// component boundary exceeds holder_threshold * max a / diam^alpha.
    double holder_threshold = 4.0;
};

struct ComponentLabel {
    std::size_t cells = 0;
    std::size_t first_cell = 0;
    std::string label;  ///< perfect | insulating | perfect-or-insulating | undetermined
    double max_grad = 0.0, max_a = 0.0, oscillation = 0.0, holder = 0.0;
};

std::vector<ComponentLabel> classify_inclusions(const ScalarField& u, const CellScalar& a, const CellMask& mask_z,
                                                const ClassifyOptions& opts = {});

struct CoareaReport {
    int levels = 0;
    double functional = 0.0;
    double level_integral = 0.0;
    double discrepancy = 0.0;  ///< |level_integral - functional| / functional
};

/// Midpoint rule in lambda over `levels` equal sub-intervals of [min u, max u]; the
/// perimeter of each level uses the cell values of a and sigma0.
CoareaReport coarea_audit(const ScalarField& u, const CellScalar& a, const TensorField2& sigma0, int levels);

/// Relative L2 distance over in-domain nodes.
double relative_l2(const ScalarField& u, const ScalarField& ref);

} // namespace acdii
