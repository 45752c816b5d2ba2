#pragma once

#include <optional>
#include <vector>

#include "acdii/assembly.hpp"

namespace acdii {

/// Operator for the finite-contrast problem: coefficient sigma1/k on perfect cells,
/// sigma elsewhere, insulating cells removed.
LinearSystem assemble_penalized(double k, const TensorField2& sigma1, const TensorField2& sigma,
                                const InclusionSet& inclusions);

ScalarField solve_penalized(double k, const TensorField2& sigma1, const TensorField2& sigma, const ScalarField& f,
                            const InclusionSet& inclusions, const SolveOptions& opts = {});

/// Limit k -> 0: u constant on each perfect component (tie groups), Neumann on insulators.
ScalarField solve_inclusion_limit(const TensorField2& sigma, const ScalarField& f, const InclusionSet& inclusions,
                                  const SolveOptions& opts = {});

enum class Quadrature {
    midpoint,  ///< one point per cell, cell-centred gradient
    exact,     ///< 2x2 Gauss, exact for the bilinear interpolant
};

struct PenaltyTerm {
    double k;
    const TensorField2* sigma1;
};

/// (1/2) int |grad u|^2_sigma over in-domain cells outside the inclusions, plus
/// (1/2k) int_{O_inf} |grad u|^2_{sigma1} when a penalty term is given.
double energy(const ScalarField& u, const TensorField2& sigma, const InclusionSet* inclusions = nullptr,
              std::optional<PenaltyTerm> penalty = std::nullopt, Quadrature q = Quadrature::midpoint);

struct LadderStep {
    double k = 0.0;
    double error = 0.0;   ///< ||u_k - u_0||_2 / ||u_0||_2 over in-domain nodes
    double energy = 0.0;  ///< I_k[u_k]
};

struct LadderReport {
    std::vector<LadderStep> steps;
    double limit_energy = 0.0;  ///< I_0[u_0]
    bool monotone = true;       ///< errors nonincreasing along the ladder
};

/// Penalized solves with sigma1 = sigma for each k against the inclusion limit.
LadderReport inclusion_ladder(const TensorField2& sigma, const ScalarField& f, const InclusionSet& inclusions,
                              const std::vector<double>& ks, Quadrature q = Quadrature::exact,
                              const SolveOptions& opts = {});

} // namespace acdii
