#pragma once

#include <array>
#include <vector>

#include "acdii/fields.hpp"
#include "acdii/inclusions.hpp"
#include "acdii/sparse.hpp"

namespace acdii {

/// Bilinear-quad stiffness of the weak form  int (S grad u) . grad phi  over one
/// hx x hy cell, exact for cell-constant S. Local node order (0,0),(1,0),(1,1),(0,1).
std::array<std::array<double, 4>, 4> element_stiffness(const Sym2& s, double hx, double hy);

/// Assembled Dirichlet problem. Boundary nodes are eliminated, every tie group
/// collapses to a single unknown, and nodes touched by no active cell are inactive.
struct LinearSystem {
    static constexpr long kDirichlet = -1;
    static constexpr long kInactive = -2;

    GridPtr grid;
    CsrMatrix full;      ///< node x node operator over active cells, before any reduction
    CsrMatrix reduced;   ///< unknown x unknown operator
    CsrMatrix coupling;  ///< unknown x node, nonzero only in Dirichlet columns
    std::vector<long> dof_of_node;
    std::vector<std::vector<std::size_t>> tie_groups;
    CellMask active_cells;

    std::size_t unknowns() const { return reduced.rows; }
};

/// Generic assembly: one tensor per cell, contributions from `active` cells only.
LinearSystem assemble_cells(GridPtr grid, const std::vector<Sym2>& tensors, const CellMask& active,
                            const std::vector<std::vector<std::size_t>>& tie_groups);

/// Weak form of div(c sigma0 grad u) = 0. Insulating cells contribute nothing
/// (natural Neumann on their boundary) and each perfect component's closure
/// becomes one tie group. Throws AssemblyError if c <= 0 on a background cell.
LinearSystem assemble(const CellScalar& c, const TensorField2& sigma0, const InclusionSet* inclusions = nullptr);

struct SolveOptions {
    double tol = 1e-10;
    int max_iter = 0;  ///< 0: 10 x number of unknowns
    const ScalarField* initial_guess = nullptr;
};

struct SolveStats {
    int iterations = 0;
    double relative_residual = 0.0;
};

/// Dirichlet solve by Jacobi-PCG. Boundary values are copied from f exactly.
/// In-domain nodes that no active cell touches (inside insulators) get the
/// discrete harmonic extension of the surrounding values.
ScalarField solve_dirichlet(const LinearSystem& sys, const ScalarField& f, const SolveOptions& opts = {},
                            SolveStats* stats = nullptr);

} // namespace acdii
