#include "acdii/inverse.hpp"

#include <algorithm>
#include <cmath>
#include <deque>

#include <Eigen/Dense>
#include <numbers>
#include <random>

#include "acdii/error.hpp"
#include "acdii/geometry.hpp"

namespace acdii {

double weighted_tv(const ScalarField& v, const CellScalar& a, const TensorField2& sigma0) {
    const Grid2D& g = v.grid();
    double sum = 0.0;
    for (std::size_t c = 0; c < g.num_cells(); ++c) {
        if (!g.cell_in_domain(c) || a[c] == 0.0) continue;
        sum += a[c] * norm_in(sigma0[c], cell_gradient(v, c));
    }
    return sum * g.cell_area();
}

double dual_feasibility(const VectorField2& b, const CellScalar& a, const TensorField2& sigma0) {
    const Grid2D& g = b.grid();
    double worst = 0.0;
    for (std::size_t c = 0; c < g.num_cells(); ++c)
        if (g.cell_in_domain(c)) worst = std::max(worst, inv_norm_in(sigma0[c], b.at(c)) - a[c]);
    return worst;
}

double dual_pairing(const ScalarField& u, const VectorField2& b) {
    const Grid2D& g = u.grid();
    double sum = 0.0;
    for (std::size_t c = 0; c < g.num_cells(); ++c)
        if (g.cell_in_domain(c)) sum += dot(b.at(c), cell_gradient(u, c));
    return sum * g.cell_area();
}

double relative_l2(const ScalarField& u, const ScalarField& ref) {
    const Grid2D& g = u.grid();
    double num = 0.0, den = 0.0;
    for (std::size_t n = 0; n < g.num_nodes(); ++n) {
        if (!g.in_domain(n)) continue;
        num += (u[n] - ref[n]) * (u[n] - ref[n]);
        den += ref[n] * ref[n];
    }
    return den > 0.0 ? std::sqrt(num / den) : std::sqrt(num);
}

TVProblem TVProblem::from(const AdmissibleTriplet& t) { return TVProblem{t.f, t.a, t.sigma0, {}, {}}; }

void TVProblem::validate() const {
    const Grid2D& g = f.grid();
    if (!a.grid().same_shape(g) || !sigma0.grid().same_shape(g)) throw InputError("inverse: fields on different grids");
    double amax = 0.0;
    for (std::size_t c = 0; c < g.num_cells(); ++c) {
        if (!g.cell_in_domain(c)) continue;
        if (!(a[c] >= 0.0) || !std::isfinite(a[c])) throw InputError("inverse: a must be finite and >= 0");
        amax = std::max(amax, a[c]);
    }
    if (amax == 0.0) throw InputError("inverse: a vanishes identically");
    const auto& fp = fixed_point;
    if (!(fp.ratio > 0.0 && fp.ratio < 1.0)) throw InputError("inverse: eps ratio must lie in (0,1)");
    if (fp.stages < 1 || fp.max_inner < 1) throw InputError("inverse: stages and max_inner must be >= 1");
    if (!(fp.tol > 0.0) || !(fp.floor > 0.0)) throw InputError("inverse: tolerances must be positive");
    if (primal_dual.max_iter < 1 || primal_dual.check_every < 1) throw InputError("inverse: bad primal-dual iteration counts");
}

namespace {

double max_grad_norm(const ScalarField& u, const TensorField2& sigma0) {
    const Grid2D& g = u.grid();
    double m = 0.0;
    for (std::size_t c = 0; c < g.num_cells(); ++c)
        if (g.cell_in_domain(c)) m = std::max(m, norm_in(sigma0[c], cell_gradient(u, c)));
    return m;
}

double smoothed_tv(const ScalarField& u, const CellScalar& a, const TensorField2& sigma0, double eps) {
    const Grid2D& g = u.grid();
    double sum = 0.0;
    for (std::size_t c = 0; c < g.num_cells(); ++c) {
        if (!g.cell_in_domain(c)) continue;
        sum += a[c] * std::sqrt(sigma0[c].quad(cell_gradient(u, c)) + eps * eps);
    }
    return sum * g.cell_area();
}

double range_of(const ScalarField& u) {
    double lo = INFINITY, hi = -INFINITY;
    for (std::size_t n = 0; n < u.size(); ++n) {
        if (!u.grid().in_domain(n)) continue;
        lo = std::min(lo, u[n]);
        hi = std::max(hi, u[n]);
    }
    return hi - lo;
}

} // namespace

ScalarField minimize_tv_fixedpoint(const TVProblem& p, FixedPointDiagnostics* diag) {
    p.validate();
    const auto& o = p.fixed_point;
    const GridPtr& grid = p.f.grid_ptr();
    const Grid2D& g = *grid;
    FixedPointDiagnostics d;

    ScalarField u = solve_dirichlet(assemble(CellScalar(grid, 1.0), p.sigma0), p.f, o.solve);
    d.eps0 = o.eps0 > 0.0 ? o.eps0 : 0.1 * max_grad_norm(u, p.sigma0);
    if (!(d.eps0 > 0.0)) throw InputError("inverse: boundary data is constant");

    std::vector<std::size_t> nodes;
    for (std::size_t n = 0; n < g.num_nodes(); ++n)
        if (g.in_domain(n)) nodes.push_back(n);
    auto as_vec = [&](const ScalarField& v) {
        Eigen::VectorXd x(nodes.size());
        for (std::size_t k = 0; k < nodes.size(); ++k) x[k] = v[nodes[k]];
        return x;
    };

    CellScalar ceff(grid, std::nan(""));
    double eps = d.eps0;
    for (int s = 0; s < o.stages; ++s, eps *= o.ratio) {
        d.eps.push_back(eps);
        double prev_smoothed = smoothed_tv(u, p.a, p.sigma0, eps);
        std::deque<Eigen::VectorXd> dg, dr;
        Eigen::VectorXd g_prev, r_prev;
        int it = 0;
        bool done = false;
        while (it < o.max_inner && !done) {
            ++it;
            double cmax = 0.0;
            for (std::size_t c = 0; c < g.num_cells(); ++c) {
                if (!g.cell_in_domain(c)) continue;
                ceff[c] = p.a[c] / std::sqrt(p.sigma0[c].quad(cell_gradient(u, c)) + eps * eps);
                cmax = std::max(cmax, ceff[c]);
            }
            const double lo = o.floor * cmax;
            for (std::size_t c = 0; c < g.num_cells(); ++c)
                if (g.cell_in_domain(c)) ceff[c] = std::max(ceff[c], lo);
            SolveOptions so = o.solve;
            so.initial_guess = &u;
            ScalarField next = solve_dirichlet(assemble(ceff, p.sigma0), p.f, so);
            const double change = relative_l2(next, u);

            if (o.anderson > 0) {
                // Mix the last few map evaluations; boundary entries of the differences vanish,
                // so the Dirichlet values are kept.
                const Eigen::VectorXd gv = as_vec(next), r = gv - as_vec(u);
                if (it > 1) {
                    dg.push_back(gv - g_prev);
                    dr.push_back(r - r_prev);
                    if (static_cast<int>(dg.size()) > o.anderson) {
                        dg.pop_front();
                        dr.pop_front();
                    }
                }
                g_prev = gv;
                r_prev = r;
                if (!dr.empty()) {
                    Eigen::MatrixXd fm(r.size(), dr.size()), gm(r.size(), dg.size());
                    for (std::size_t k = 0; k < dr.size(); ++k) {
                        fm.col(k) = dr[k];
                        gm.col(k) = dg[k];
                    }
                    const Eigen::VectorXd gamma = fm.colPivHouseholderQr().solve(r);
                    const Eigen::VectorXd mixed = gv - gm * gamma;
                    for (std::size_t k = 0; k < nodes.size(); ++k) next[nodes[k]] = mixed[k];
                }
            }
            u = std::move(next);
            const double sm = smoothed_tv(u, p.a, p.sigma0, eps);
            if (sm > prev_smoothed * (1.0 + 1e-12)) ++d.increases;
            prev_smoothed = sm;
            d.smoothed.push_back(sm);
            d.functional.push_back(weighted_tv(u, p.a, p.sigma0));
            done = change <= o.tol;
            if (done || it == o.max_inner) d.final_change.push_back(change);
        }
        d.inner_iterations.push_back(it);
        d.converged = done;
    }
    if (diag) *diag = std::move(d);
    return u;
}

double gradient_norm_bound_sq(const Grid2D& g) { return 4.0 * (1.0 / (g.hx() * g.hx()) + 1.0 / (g.hy() * g.hy())); }

PrimalDualResult minimize_tv_primal_dual(const TVProblem& p) {
    p.validate();
    const auto& o = p.primal_dual;
    const GridPtr& grid = p.f.grid_ptr();
    const Grid2D& g = *grid;
    const double big_m = p.sigma0.M();
    const double l2 = gradient_norm_bound_sq(g);
    const double lip = std::sqrt(big_m * l2);

    PrimalDualDiagnostics d;
    d.sigma = o.sigma > 0.0 ? o.sigma : 1.0 / lip;
    d.tau = o.tau > 0.0 ? o.tau : 1.0 / (d.sigma * big_m * l2);
    if (d.tau * d.sigma * big_m * l2 > 1.0 + 1e-12)
        throw InputError("primal-dual: step condition tau*sigma*M*||grad||^2 <= 1 violated");

    // Start from the sigma0-harmonic extension of f.
    ScalarField u = solve_dirichlet(assemble(CellScalar(grid, 1.0), p.sigma0), p.f);
    ScalarField ubar = u;
    VectorField2 b(grid);
    for (std::size_t c = 0; c < g.num_cells(); ++c) b.set(c, {0.0, 0.0});

    std::vector<std::size_t> free_nodes;
    for (std::size_t n = 0; n < g.num_nodes(); ++n)
        if (g.in_domain(n) && !g.is_boundary(n)) free_nodes.push_back(n);
    std::vector<std::size_t> cells;
    for (std::size_t c = 0; c < g.num_cells(); ++c)
        if (g.cell_in_domain(c)) cells.push_back(c);

    const double area = g.cell_area();
    std::vector<double> adj(g.num_nodes(), 0.0);
    auto measure = [&]() {
        std::fill(adj.begin(), adj.end(), 0.0);
        for (std::size_t c : cells) add_cell_gradient_adjoint(g, c, b.at(c), adj);
        double rf = 0.0, rt = 0.0;
        for (std::size_t n = 0; n < g.num_nodes(); ++n) {
            if (!g.in_domain(n)) continue;
            rt += adj[n] * adj[n];
            if (!g.is_boundary(n)) rf += adj[n] * adj[n];
        }
        d.divergence_residual = rt > 0.0 ? std::sqrt(rf / rt) : 0.0;
        const double fu = weighted_tv(u, p.a, p.sigma0);
        d.gap = fu > 0.0 ? (fu - dual_pairing(u, b)) / fu : 0.0;
        return fu;
    };
    int it = 0;
    for (; it < o.max_iter; ++it) {
        for (std::size_t c : cells) {
            const Sym2& s = p.sigma0[c];
            Vec2 nb = b.at(c) + d.sigma * s.apply(cell_gradient(ubar, c));
            const double r = inv_norm_in(s, nb);
            if (r > p.a[c]) nb = (r > 0.0 ? p.a[c] / r : 0.0) * nb;
            b.set(c, nb);
        }
        std::fill(adj.begin(), adj.end(), 0.0);
        for (std::size_t c : cells) add_cell_gradient_adjoint(g, c, b.at(c), adj);
        for (std::size_t n : free_nodes) {
            const double next = u[n] - d.tau * adj[n] / area;
            ubar[n] = 2.0 * next - u[n];
            u[n] = next;
        }
        if ((it + 1) % o.check_every == 0) {
            d.functional.push_back(measure());
            if (d.divergence_residual <= o.tol && std::abs(d.gap) <= o.tol) {
                ++it;
                break;
            }
        }
    }
    d.iterations = it;
    measure();
    d.feasibility = dual_feasibility(b, p.a, p.sigma0);
    return {std::move(u), std::move(b), std::move(d)};
}

ScalarField smooth_perturbation(const GridPtr& grid, double amplitude, std::uint64_t seed, int modes) {
    const Grid2D& g = *grid;
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> normal(0.0, 1.0);
    std::vector<double> coef(static_cast<std::size_t>(modes * modes));
    for (int k = 0; k < modes; ++k)
        for (int l = 0; l < modes; ++l) coef[k * modes + l] = normal(rng) / ((k + 1.0) * (l + 1.0));
    const double lx = g.hx() * (g.nx() - 1), ly = g.hy() * (g.ny() - 1);
    ScalarField w(grid, 0.0);
    double peak = 0.0;
    for (std::size_t n = 0; n < g.num_nodes(); ++n) {
        if (!g.in_domain(n)) {
            w[n] = std::nan("");
            continue;
        }
        if (g.is_boundary(n)) continue;
        const Vec2 x = g.node_pos(n);
        const double xi = (x.x - g.x0()) / lx, eta = (x.y - g.y0()) / ly;
        double v = 0.0;
        for (int k = 0; k < modes; ++k)
            for (int l = 0; l < modes; ++l)
                v += coef[k * modes + l] * std::sin((k + 1) * std::numbers::pi * xi) * std::sin((l + 1) * std::numbers::pi * eta);
        w[n] = v;
        peak = std::max(peak, std::abs(v));
    }
    if (peak > 0.0)
        for (auto& v : w.values())
            if (!std::isnan(v)) v *= amplitude / peak;
    return w;
}

MinimalityReport minimality_audit(const ScalarField& u, const CellScalar& a, const TensorField2& sigma0, int trials,
                                  std::uint64_t seed, double tol) {
    MinimalityReport r;
    r.tol = tol;
    r.f_u = weighted_tv(u, a, sigma0);
    const double range = range_of(u);
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> expo(-2.0, -1.0);
    r.min_margin = INFINITY;
    for (int t = 0; t < trials; ++t) {
        const double amp = std::pow(10.0, expo(rng)) * range;
        const ScalarField w = smooth_perturbation(u.grid_ptr(), amp, rng());
        ScalarField v = u;
        for (std::size_t n = 0; n < v.size(); ++n)
            if (u.grid().in_domain(n)) v[n] += w[n];
        const double m = (weighted_tv(v, a, sigma0) - r.f_u) / r.f_u;
        r.amplitudes.push_back(amp);
        r.margins.push_back(m);
        r.min_margin = std::min(r.min_margin, m);
        if (m < -tol) ++r.negatives;
    }
    if (trials == 0) r.min_margin = 0.0;
    return r;
}

VectorField2 data_current(const ScalarField& u, const CellScalar& a, const TensorField2& sigma0) {
    const Grid2D& g = u.grid();
    VectorField2 j(u.grid_ptr());
    for (std::size_t c = 0; c < g.num_cells(); ++c) {
        if (!g.cell_in_domain(c)) continue;
        const Vec2 du = cell_gradient(u, c);
        const double n = norm_in(sigma0[c], du);
        if (n > 0.0 && a[c] > 0.0) j.set(c, (-a[c] / n) * sigma0[c].apply(du));
    }
    return j;
}

DualityGap duality_gap(const ScalarField& u, const ScalarField& f, const VectorField2& j, const CellScalar& a,
                       const TensorField2& sigma0) {
    const Grid2D& g = u.grid();
    DualityGap r;
    r.functional = weighted_tv(u, a, sigma0);
    auto inside = [&](int i, int k) { return i >= 0 && k >= 0 && i < g.cnx() && k < g.cny() && g.cell_in_domain(g.cell(i, k)); };
    double sum = 0.0;
    for (std::size_t c = 0; c < g.num_cells(); ++c) {
        if (!g.cell_in_domain(c)) continue;
        const int i = g.cell_i(c), k = g.cell_j(c);
        const auto nd = g.cell_nodes(c);
        // side: outward normal, neighbour across it, the two nodes on it, length
        struct Side { int di, dk; Vec2 n; std::size_t a, b; double len; };
        const Side sides[4] = {{0, -1, {0, -1}, nd[0], nd[1], g.hx()},
                               {1, 0, {1, 0}, nd[1], nd[2], g.hy()},
                               {0, 1, {0, 1}, nd[2], nd[3], g.hx()},
                               {-1, 0, {-1, 0}, nd[3], nd[0], g.hy()}};
        for (const Side& s : sides) {
            if (inside(i + s.di, k + s.dk)) continue;
            sum += s.len * 0.5 * (f[s.a] + f[s.b]) * dot(j.at(c), s.n);
        }
    }
    r.boundary = sum;
    r.gap = std::abs(r.functional + r.boundary) / std::max(r.functional, 1e-300);
    return r;
}

TensorField2 Recovery::sigma(const TensorField2& sigma0, double fill) const {
    CellScalar cc = c;
    for (std::size_t k = 0; k < cc.size(); ++k)
        if (c.grid().cell_in_domain(k) && mask_z[k]) cc[k] = fill;
    return sigma0.scaled(cc);
}

Recovery recover_c(const ScalarField& u, const CellScalar& a, const TensorField2& sigma0, const RecoveryOptions& opts) {
    if (!(opts.delta > 0.0) || !(opts.delta_a > 0.0)) throw InputError("recover_c: floors must be positive");
    const Grid2D& g = u.grid();
    const double gfloor = opts.delta * max_grad_norm(u, sigma0);
    const double afloor = opts.delta_a * a.max();
    Recovery r{CellScalar(u.grid_ptr(), std::nan("")), CellMask(g.num_cells(), 0), 0, 0, 0};
    for (std::size_t c = 0; c < g.num_cells(); ++c) {
        if (!g.cell_in_domain(c)) continue;
        const double gn = norm_in(sigma0[c], cell_gradient(u, c));
        const bool flat = gn <= gfloor, dark = a[c] <= afloor;
        if (flat || dark) {
            r.mask_z[c] = 1;
            ++r.z_cells;
            if (flat) ++r.flat_cells;
            else ++r.gamma_cells;
            continue;
        }
        r.c[c] = a[c] / gn;
    }
    return r;
}

std::vector<ComponentLabel> classify_inclusions(const ScalarField& u, const CellScalar& a, const CellMask& mask_z,
                                                const ClassifyOptions& opts) {
    const Grid2D& g = u.grid();
    double gmax = 0.0;
    for (std::size_t c = 0; c < g.num_cells(); ++c)
        if (g.cell_in_domain(c)) gmax = std::max(gmax, norm(cell_gradient(u, c)));
    const double amax = a.max();
    const double urange = range_of(u);
    const double diam = std::hypot(g.hx() * (g.nx() - 1), g.hy() * (g.ny() - 1));
    const double holder_scale = amax > 0.0 ? std::pow(diam, opts.alpha) / amax : 0.0;

    std::vector<ComponentLabel> out;
    for (const CellMask& comp : cell_components(g, mask_z)) {
        ComponentLabel l;
        l.first_cell = static_cast<std::size_t>(std::find(comp.begin(), comp.end(), 1) - comp.begin());
        std::vector<std::uint8_t> touches_outside(g.num_nodes(), 0);
        for (std::size_t c = 0; c < g.num_cells(); ++c) {
            if (!g.cell_in_domain(c)) continue;
            if (comp[c]) {
                ++l.cells;
                l.max_grad = std::max(l.max_grad, norm(cell_gradient(u, c)));
                l.max_a = std::max(l.max_a, a[c]);
                const int i = g.cell_i(c), k = g.cell_j(c);
                const int di[4] = {1, -1, 0, 0}, dk[4] = {0, 0, 1, -1};
                for (int s = 0; s < 4; ++s) {
                    const int ni = i + di[s], nk = k + dk[s];
                    if (ni < 0 || nk < 0 || ni >= g.cnx() || nk >= g.cny()) continue;
                    const std::size_t nc = g.cell(ni, nk);
                    if (!g.cell_in_domain(nc) || comp[nc]) continue;
                    const double dist = s < 2 ? g.hx() : g.hy();
                    l.holder = std::max(l.holder, std::abs(a[c] - a[nc]) / std::pow(dist, opts.alpha));
                }
            } else {
                for (auto n : g.cell_nodes(c)) touches_outside[n] = 1;
            }
        }
        double lo = INFINITY, hi = -INFINITY;
        for (auto n : closure_nodes(g, comp)) {
            if (!touches_outside[n] && !g.is_boundary(n)) continue;
            lo = std::min(lo, u[n]);
            hi = std::max(hi, u[n]);
        }
        l.oscillation = hi >= lo ? hi - lo : 0.0;
        l.holder *= holder_scale;

        const bool flat = l.max_grad <= opts.tol_grad * gmax;
        const bool dark = l.max_a <= opts.tol_a * amax;
        const bool constant_trace = l.oscillation <= opts.tol_osc * urange;
        if (flat && !dark) l.label = "perfect";
        else if (dark && !constant_trace) l.label = "insulating";
        else if (dark && l.holder > opts.holder_threshold) l.label = "perfect-or-insulating";
        else l.label = "undetermined";
        out.push_back(std::move(l));
    }
    return out;
}

CoareaReport coarea_audit(const ScalarField& u, const CellScalar& a, const TensorField2& sigma0, int levels) {
    if (levels < 1) throw InputError("coarea_audit: levels must be >= 1");
    const Grid2D& g = u.grid();
    double lo = INFINITY, hi = -INFINITY;
    for (std::size_t n = 0; n < g.num_nodes(); ++n) {
        if (!g.in_domain(n)) continue;
        lo = std::min(lo, u[n]);
        hi = std::max(hi, u[n]);
    }
    if (!(hi > lo)) throw InputError("coarea_audit: u is constant");
    CoareaReport r;
    r.levels = levels;
    r.functional = weighted_tv(u, a, sigma0);
    const double dl = (hi - lo) / levels;
    double sum = 0.0;
    for (int i = 0; i < levels; ++i) {
        const double lambda = lo + (i + 0.5) * dl;
        double per = 0.0;
        for (const auto& curve : extract_level_set(u, lambda))
            for (std::size_t s = 0; s < curve.lengths.size(); ++s) {
                const std::size_t c = curve.cells[s];
                per += curve.lengths[s] * a[c] * norm_in(sigma0[c], curve.normals[s]);
            }
        sum += per * dl;
    }
    r.level_integral = sum;
    r.discrepancy = std::abs(sum - r.functional) / r.functional;
    return r;
}

} // namespace acdii
