#include "acdii/assembly.hpp"

#include <cmath>
#include <string>

#include "acdii/error.hpp"

namespace acdii {

std::array<std::array<double, 4>, 4> element_stiffness(const Sym2& s, double hx, double hy) {
    // 2x2 Gauss-Legendre on [0,1]^2; exact for the degree-2 integrand.
    const double q[2] = {0.5 - 0.5 / std::sqrt(3.0), 0.5 + 0.5 / std::sqrt(3.0)};
    std::array<std::array<double, 4>, 4> k{};
    const double w = 0.25 * hx * hy;
    for (double xi : q) {
        for (double eta : q) {
            const Vec2 grad[4] = {
                {-(1.0 - eta) / hx, -(1.0 - xi) / hy},
                {(1.0 - eta) / hx, -xi / hy},
                {eta / hx, xi / hy},
                {-eta / hx, (1.0 - xi) / hy},
            };
            for (int a = 0; a < 4; ++a) {
                const Vec2 sg = s.apply(grad[a]);
                for (int b = 0; b < 4; ++b) k[a][b] += w * dot(sg, grad[b]);
            }
        }
    }
    return k;
}

LinearSystem assemble_cells(GridPtr grid, const std::vector<Sym2>& tensors, const CellMask& active,
                            const std::vector<std::vector<std::size_t>>& tie_groups) {
    const Grid2D& g = *grid;
    if (tensors.size() != g.num_cells() || active.size() != g.num_cells())
        throw AssemblyError("assemble: per-cell arrays have wrong size");

    LinearSystem sys;
    sys.grid = grid;
    sys.active_cells = active;
    sys.tie_groups = tie_groups;

    std::vector<std::uint8_t> touched(g.num_nodes(), 0);
    for (std::size_t c = 0; c < g.num_cells(); ++c) {
        if (!active[c]) continue;
        if (!g.cell_in_domain(c)) throw AssemblyError("assemble: active cell outside the domain");
        if (!tensors[c].is_spd()) throw AssemblyError("assemble: coefficient not SPD at cell " + std::to_string(c));
        for (auto n : g.cell_nodes(c)) touched[n] = 1;
    }

    std::vector<long> group_of(g.num_nodes(), -1);
    for (std::size_t k = 0; k < tie_groups.size(); ++k) {
        for (auto n : tie_groups[k]) {
            if (g.is_boundary(n) || !g.in_domain(n)) throw AssemblyError("tie group touches the domain boundary");
            if (group_of[n] >= 0) throw AssemblyError("tie groups overlap");
            group_of[n] = static_cast<long>(k);
        }
    }

    sys.dof_of_node.assign(g.num_nodes(), LinearSystem::kInactive);
    std::vector<long> group_dof(tie_groups.size(), -1);
    long next = 0;
    for (std::size_t n = 0; n < g.num_nodes(); ++n) {
        if (!g.in_domain(n)) continue;
        if (g.is_boundary(n)) {
            sys.dof_of_node[n] = LinearSystem::kDirichlet;
        } else if (group_of[n] >= 0) {
            long& d = group_dof[group_of[n]];
            if (d < 0) d = next++;
            sys.dof_of_node[n] = d;
        } else if (touched[n]) {
            sys.dof_of_node[n] = next++;
        }
    }

    std::vector<CsrMatrix::Triplet> tf, tr, tc;
    tf.reserve(16 * g.num_cells());
    tr.reserve(16 * g.num_cells());
    for (std::size_t c = 0; c < g.num_cells(); ++c) {
        if (!active[c]) continue;
        const auto ke = element_stiffness(tensors[c], g.hx(), g.hy());
        const auto nodes = g.cell_nodes(c);
        for (int a = 0; a < 4; ++a) {
            const long da = sys.dof_of_node[nodes[a]];
            for (int b = 0; b < 4; ++b) {
                tf.push_back({nodes[a], nodes[b], ke[a][b]});
                if (da < 0) continue;
                const long db = sys.dof_of_node[nodes[b]];
                if (db >= 0)
                    tr.push_back({static_cast<std::size_t>(da), static_cast<std::size_t>(db), ke[a][b]});
                else if (db == LinearSystem::kDirichlet)
                    tc.push_back({static_cast<std::size_t>(da), nodes[b], ke[a][b]});
            }
        }
    }
    const auto nd = static_cast<std::size_t>(next);
    sys.full = CsrMatrix::from_triplets(g.num_nodes(), g.num_nodes(), std::move(tf));
    sys.reduced = CsrMatrix::from_triplets(nd, nd, std::move(tr));
    sys.coupling = CsrMatrix::from_triplets(nd, g.num_nodes(), std::move(tc));
    return sys;
}

LinearSystem assemble(const CellScalar& c, const TensorField2& sigma0, const InclusionSet* inclusions) {
    const GridPtr& gp = sigma0.grid_ptr();
    const Grid2D& g = *gp;
    if (!c.grid().same_shape(g)) throw AssemblyError("assemble: c and sigma0 live on different grids");

    CellMask perfect(g.num_cells(), 0), insulating(g.num_cells(), 0);
    std::vector<std::vector<std::size_t>> ties;
    if (inclusions) {
        inclusions->validate(g);
        perfect = inclusions->perfect_cells(g);
        insulating = inclusions->insulating_cells(g);
        for (const auto& m : inclusions->perfect) ties.push_back(closure_nodes(g, m));
    }

    std::vector<Sym2> tensors(g.num_cells(), Sym2::identity());
    CellMask active(g.num_cells(), 0);
    for (std::size_t k = 0; k < g.num_cells(); ++k) {
        if (!g.cell_in_domain(k) || perfect[k] || insulating[k]) continue;
        if (!(c[k] > 0.0)) throw AssemblyError("assemble: c <= 0 at cell " + std::to_string(k));
        tensors[k] = sigma0[k].scaled(c[k]);
        active[k] = 1;
    }
    return assemble_cells(gp, tensors, active, ties);
}

namespace {

// Harmonic extension into in-domain nodes that no active cell touches.
void fill_inactive(const LinearSystem& sys, std::vector<double>& u, const SolveOptions& opts) {
    const Grid2D& g = *sys.grid;
    bool any = false;
    for (std::size_t n = 0; n < g.num_nodes(); ++n)
        any = any || (g.in_domain(n) && sys.dof_of_node[n] == LinearSystem::kInactive);
    if (!any) return;

    std::vector<Sym2> eye(g.num_cells(), Sym2::identity());
    CellMask fill_cells(g.num_cells(), 0);
    for (std::size_t c = 0; c < g.num_cells(); ++c)
        fill_cells[c] = g.cell_in_domain(c) && !sys.active_cells[c];
    LinearSystem aux = assemble_cells(sys.grid, eye, fill_cells, {});

    // Fixed nodes are every node the main solve determined; only inactive ones are unknown.
    std::vector<long> dof(g.num_nodes(), LinearSystem::kInactive);
    long next = 0;
    for (std::size_t n = 0; n < g.num_nodes(); ++n) {
        if (!g.in_domain(n)) continue;
        dof[n] = sys.dof_of_node[n] == LinearSystem::kInactive ? next++ : LinearSystem::kDirichlet;
    }
    std::vector<CsrMatrix::Triplet> ta;
    std::vector<double> rhs(static_cast<std::size_t>(next), 0.0);
    for (std::size_t r = 0; r < aux.full.rows; ++r) {
        if (dof[r] < 0) continue;
        for (std::size_t k = aux.full.row_ptr[r]; k < aux.full.row_ptr[r + 1]; ++k) {
            const std::size_t col = aux.full.col[k];
            if (dof[col] >= 0)
                ta.push_back({static_cast<std::size_t>(dof[r]), static_cast<std::size_t>(dof[col]), aux.full.val[k]});
            else
                rhs[static_cast<std::size_t>(dof[r])] -= aux.full.val[k] * u[col];
        }
    }
    const auto nd = static_cast<std::size_t>(next);
    CsrMatrix a = CsrMatrix::from_triplets(nd, nd, std::move(ta));
    std::vector<double> x(nd, 0.0);
    const int max_iter = opts.max_iter > 0 ? opts.max_iter : static_cast<int>(10 * nd + 10);
    pcg(a, rhs, x, opts.tol, max_iter);
    for (std::size_t n = 0; n < g.num_nodes(); ++n)
        if (dof[n] >= 0 && sys.dof_of_node[n] == LinearSystem::kInactive) u[n] = x[static_cast<std::size_t>(dof[n])];
}

} // namespace

ScalarField solve_dirichlet(const LinearSystem& sys, const ScalarField& f, const SolveOptions& opts,
                            SolveStats* stats) {
    const Grid2D& g = *sys.grid;
    if (!f.grid().same_shape(g)) throw InputError("solve_dirichlet: boundary data on a different grid");
    if (!(opts.tol > 0.0)) throw InputError("solve_dirichlet: tol must be positive");

    const std::size_t nd = sys.unknowns();
    std::vector<double> fb(g.num_nodes(), 0.0);
    for (auto n : g.boundary_ids()) fb[n] = f[n];
    std::vector<double> rhs;
    sys.coupling.multiply(fb, rhs);
    for (auto& v : rhs) v = -v;

    std::vector<double> x(nd, 0.0);
    if (opts.initial_guess) {
        for (std::size_t n = 0; n < g.num_nodes(); ++n) {
            const long d = sys.dof_of_node[n];
            if (d >= 0) x[static_cast<std::size_t>(d)] = (*opts.initial_guess)[n];
        }
    }
    const int max_iter = opts.max_iter > 0 ? opts.max_iter : static_cast<int>(10 * nd + 10);
    const CgResult cg = pcg(sys.reduced, rhs, x, opts.tol, max_iter);
    if (stats) {
        stats->iterations = cg.iterations;
        stats->relative_residual = cg.relative_residual;
    }

    std::vector<double> u(g.num_nodes(), 0.0);
    for (std::size_t n = 0; n < g.num_nodes(); ++n) {
        const long d = sys.dof_of_node[n];
        if (d >= 0)
            u[n] = x[static_cast<std::size_t>(d)];
        else if (d == LinearSystem::kDirichlet)
            u[n] = f[n];
    }
    fill_inactive(sys, u, opts);
    return ScalarField(sys.grid, std::move(u));
}

} // namespace acdii
