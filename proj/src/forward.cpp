#include "acdii/forward.hpp"

#include <cmath>

#include "acdii/error.hpp"

namespace acdii {

LinearSystem assemble_penalized(double k, const TensorField2& sigma1, const TensorField2& sigma,
                                const InclusionSet& inclusions) {
    if (!(k > 0.0 && k <= 1.0)) throw InputError("solve_penalized: k must lie in (0, 1]");
    const GridPtr& gp = sigma.grid_ptr();
    const Grid2D& g = *gp;
    inclusions.validate(g);
    const CellMask perfect = inclusions.perfect_cells(g);
    const CellMask insulating = inclusions.insulating_cells(g);

    std::vector<Sym2> tensors(g.num_cells(), Sym2::identity());
    CellMask active(g.num_cells(), 0);
    for (std::size_t c = 0; c < g.num_cells(); ++c) {
        if (!g.cell_in_domain(c) || insulating[c]) continue;
        tensors[c] = perfect[c] ? sigma1[c].scaled(1.0 / k) : sigma[c];
        active[c] = 1;
    }
    return assemble_cells(gp, tensors, active, {});
}

ScalarField solve_penalized(double k, const TensorField2& sigma1, const TensorField2& sigma, const ScalarField& f,
                            const InclusionSet& inclusions, const SolveOptions& opts) {
    return solve_dirichlet(assemble_penalized(k, sigma1, sigma, inclusions), f, opts);
}

ScalarField solve_inclusion_limit(const TensorField2& sigma, const ScalarField& f, const InclusionSet& inclusions,
                                  const SolveOptions& opts) {
    const CellScalar one(sigma.grid_ptr(), 1.0);
    return solve_dirichlet(assemble(one, sigma, &inclusions), f, opts);
}

namespace {

double cell_energy(const ScalarField& u, const Sym2& s, std::size_t c, Quadrature q) {
    const Grid2D& g = u.grid();
    if (q == Quadrature::midpoint) return 0.5 * g.cell_area() * s.quad(cell_gradient(u, c));
    const auto ke = element_stiffness(s, g.hx(), g.hy());
    const auto n = g.cell_nodes(c);
    double e = 0.0;
    for (int a = 0; a < 4; ++a)
        for (int b = 0; b < 4; ++b) e += u[n[a]] * ke[a][b] * u[n[b]];
    return 0.5 * e;
}

} // namespace

double energy(const ScalarField& u, const TensorField2& sigma, const InclusionSet* inclusions,
              std::optional<PenaltyTerm> penalty, Quadrature q) {
    const Grid2D& g = u.grid();
    CellMask perfect(g.num_cells(), 0), insulating(g.num_cells(), 0);
    if (inclusions) {
        perfect = inclusions->perfect_cells(g);
        insulating = inclusions->insulating_cells(g);
    }
    if (penalty && (!(penalty->k > 0.0) || !penalty->sigma1))
        throw InputError("energy: penalty term needs k > 0 and sigma1");
    double outside = 0.0, inside = 0.0;
    for (std::size_t c = 0; c < g.num_cells(); ++c) {
        if (!g.cell_in_domain(c) || insulating[c]) continue;
        if (perfect[c]) {
            if (penalty) inside += cell_energy(u, (*penalty->sigma1)[c], c, q);
        } else {
            outside += cell_energy(u, sigma[c], c, q);
        }
    }
    return penalty ? outside + inside / penalty->k : outside;
}

LadderReport inclusion_ladder(const TensorField2& sigma, const ScalarField& f, const InclusionSet& inclusions,
                              const std::vector<double>& ks, Quadrature q, const SolveOptions& opts) {
    const auto u0 = solve_inclusion_limit(sigma, f, inclusions, opts);
    LadderReport r;
    r.limit_energy = energy(u0, sigma, &inclusions, std::nullopt, q);
    const Grid2D& g = f.grid();
    double den = 0.0;
    for (std::size_t n = 0; n < u0.size(); ++n)
        if (g.in_domain(n)) den += u0[n] * u0[n];
    for (double k : ks) {
        const auto uk = solve_penalized(k, sigma, sigma, f, inclusions, opts);
        double num = 0.0;
        for (std::size_t n = 0; n < uk.size(); ++n)
            if (g.in_domain(n)) num += (uk[n] - u0[n]) * (uk[n] - u0[n]);
        LadderStep s{k, std::sqrt(num / den), energy(uk, sigma, &inclusions, PenaltyTerm{k, &sigma}, q)};
        if (!r.steps.empty() && s.error > r.steps.back().error) r.monotone = false;
        r.steps.push_back(s);
    }
    return r;
}

} // namespace acdii
