#include <doctest.h>

#include <Eigen/Dense>
#include <cmath>
#include <random>

#include "acdii/error.hpp"
#include "acdii/forward.hpp"

using namespace acdii;

namespace {

ScalarField affine(const GridPtr& g, double a, double b, double c0 = 0.0) {
    return ScalarField::sample(g, [=](double x, double y) { return a * x + b * y + c0; });
}

double max_abs_diff(const ScalarField& u, const ScalarField& v) {
    double m = 0.0;
    for (std::size_t n = 0; n < u.size(); ++n)
        if (u.grid().in_domain(n)) m = std::max(m, std::abs(u[n] - v[n]));
    return m;
}

double rel_l2(const ScalarField& u, const ScalarField& ref) {
    double num = 0.0, den = 0.0;
    for (std::size_t n = 0; n < u.size(); ++n) {
        if (!u.grid().in_domain(n)) continue;
        num += (u[n] - ref[n]) * (u[n] - ref[n]);
        den += ref[n] * ref[n];
    }
    return std::sqrt(num / den);
}

// Closed-form bilinear stiffness on an hx x hy rectangle (independent of the Gauss-point assembly).
Eigen::Matrix4d analytic_element(const Sym2& s, double hx, double hy) {
    Eigen::Matrix4d exx, eyy, exy;
    exx << 2, -2, -1, 1, -2, 2, 1, -1, -1, 1, 2, -2, 1, -1, -2, 2;
    exx /= 6.0;
    eyy << 2, 1, -1, -2, 1, 2, -2, -1, -1, -2, 2, 1, -2, -1, 1, 2;
    eyy /= 6.0;
    const Eigen::Vector4d p(-0.5, 0.5, 0.5, -0.5), q(-0.5, -0.5, 0.5, 0.5);
    exy = p * q.transpose();
    return s.s11 * (hy / hx) * exx + s.s12 * (exy + exy.transpose()) + s.s22 * (hx / hy) * eyy;
}

struct DiskCase {
    GridPtr grid;
    InclusionSet inc;
    TensorField2 sigma;
    ScalarField f;
};

DiskCase perfect_disk(int n) {
    auto g = make_grid(Grid2D::unit_square(n));
    InclusionSet inc;
    inc.perfect.push_back(disk_cells(*g, {0.5, 0.5}, 0.2));
    return {g, inc, TensorField2(g, Sym2::identity()), affine(g, 1, 0)};
}

} // namespace

TEST_CASE("element stiffness matches the closed form") {
    const Sym2 s{2.0, 0.7, 1.3};
    const auto k = element_stiffness(s, 0.3, 0.5);
    const Eigen::Matrix4d ref = analytic_element(s, 0.3, 0.5);
    for (int a = 0; a < 4; ++a)
        for (int b = 0; b < 4; ++b) CHECK(k[a][b] == doctest::Approx(ref(a, b)).epsilon(1e-13));
}

TEST_CASE("5x5 Laplacian assembly equals the dense oracle") {
    auto g = make_grid(Grid2D::unit_square(5));
    const auto sys = assemble(CellScalar(g, 1.0), TensorField2(g, Sym2::identity()));
    Eigen::MatrixXd dense = Eigen::MatrixXd::Zero(25, 25);
    const Eigen::Matrix4d ke = analytic_element(Sym2::identity(), g->hx(), g->hy());
    for (std::size_t c = 0; c < g->num_cells(); ++c) {
        const auto n = g->cell_nodes(c);
        for (int a = 0; a < 4; ++a)
            for (int b = 0; b < 4; ++b) dense(n[a], n[b]) += ke(a, b);
    }
    const auto full = sys.full.dense();
    for (int r = 0; r < 25; ++r)
        for (int c = 0; c < 25; ++c) CHECK(full[r][c] == doctest::Approx(dense(r, c)).epsilon(1e-13));
    // Interior stencil of the bilinear Laplacian on squares: 8/3 centre, -1/3 neighbours.
    CHECK(sys.full.at(12, 12) == doctest::Approx(8.0 / 3.0));
    CHECK(sys.full.at(12, 13) == doctest::Approx(-1.0 / 3.0));
    CHECK(sys.full.at(12, 18) == doctest::Approx(-1.0 / 3.0));
    CHECK(sys.unknowns() == 9);
    CHECK(sys.reduced.asymmetry() == 0.0);
}

TEST_CASE("a perfect component of 4 nodes removes 3 unknowns") {
    auto g = make_grid(Grid2D::unit_square(7));
    InclusionSet inc;
    CellMask m(g->num_cells(), 0);
    m[g->cell(2, 2)] = 1;
    inc.perfect.push_back(m);
    const TensorField2 s(g, Sym2::identity());
    const auto plain = assemble(CellScalar(g, 1.0), s);
    const auto tied = assemble(CellScalar(g, 1.0), s, &inc);
    CHECK(plain.unknowns() - tied.unknowns() == 3);
    CHECK(tied.reduced.asymmetry() < 1e-15);
}

TEST_CASE("insulating block drops its cell contributions and keeps symmetry") {
    auto g = make_grid(Grid2D::unit_square(9));
    InclusionSet inc;
    inc.insulating.push_back(rect_cells(*g, 0.3, 0.6, 0.3, 0.6));
    const TensorField2 s(g, Sym2{1.5, 0.3, 1.0});
    const auto plain = assemble(CellScalar(g, 1.0), s);
    const auto cut = assemble(CellScalar(g, 1.0), s, &inc);
    CHECK(cut.full.asymmetry() < 1e-15);
    CHECK(cut.reduced.asymmetry() < 1e-15);
    const auto ke = element_stiffness(s[0], g->hx(), g->hy());
    // Corner node (0,0) of the first insulating cell loses exactly that cell's diagonal entry.
    std::size_t first = 0;
    while (!inc.insulating[0][first]) ++first;
    const auto n0 = g->cell_nodes(first)[0];
    CHECK(plain.full.at(n0, n0) - cut.full.at(n0, n0) == doctest::Approx(ke[0][0]));
    // Interior nodes of the block become inactive.
    std::size_t inactive = 0;
    for (auto d : cut.dof_of_node) inactive += d == LinearSystem::kInactive;
    CHECK(inactive > 0);
}

TEST_CASE("assembly errors") {
    auto g = make_grid(Grid2D::unit_square(7));
    const TensorField2 s(g, Sym2::identity());
    CellScalar c(g, 1.0);
    c[5] = 0.0;
    CHECK_THROWS_AS(assemble(c, s), AssemblyError);
    InclusionSet touching;
    CellMask m(g->num_cells(), 0);
    m[g->cell(0, 3)] = 1;
    touching.perfect.push_back(m);
    CHECK_THROWS_AS(assemble(CellScalar(g, 1.0), s, &touching), InputError);
    CHECK_THROWS_AS(assemble_cells(g, std::vector<Sym2>(g->num_cells()), CellMask(g->num_cells(), 1),
                                   {{g->node(0, 2)}}),
                    AssemblyError);
}

TEST_CASE("affine data is reproduced exactly for constant coefficients") {
    auto g = make_grid(Grid2D::unit_square(17));
    const auto f = affine(g, 1, 0);
    for (const Sym2& s : {Sym2::identity(), Sym2::diag(2, 1), Sym2::rotated_diag(3, 1, 0.4)}) {
        const auto u = solve_dirichlet(assemble(CellScalar(g, 1.0), TensorField2(g, s)), f);
        CHECK(max_abs_diff(u, f) < 1e-9);
    }
    const auto f2 = affine(g, 0.3, -1.2, 0.5);
    const auto u2 = solve_dirichlet(assemble(CellScalar(g, 2.5), TensorField2(g, Sym2::rotated_diag(2, 1, 1.0))), f2);
    CHECK(max_abs_diff(u2, f2) < 1e-9);
}

TEST_CASE("CG agrees with a dense direct solve on 8x8") {
    auto g = make_grid(Grid2D::unit_square(8));
    std::mt19937_64 rng(21);
    std::uniform_real_distribution<double> u01(0.0, 1.0);
    const Sym2 s = Sym2::rotated_diag(0.5 + 2 * u01(rng), 0.5 + 2 * u01(rng), 3 * u01(rng));
    const auto c = CellScalar::sample(g, [](double x, double y) { return 1.0 + 0.5 * std::sin(3 * x) * std::cos(2 * y); });
    const auto f = ScalarField::sample(g, [](double x, double y) { return x * x - y + 0.3 * x * y; });
    const auto sys = assemble(c, TensorField2(g, s));
    const auto u = solve_dirichlet(sys, f);

    const auto nd = sys.unknowns();
    Eigen::MatrixXd a(nd, nd);
    const auto ad = sys.reduced.dense();
    for (std::size_t r = 0; r < nd; ++r)
        for (std::size_t k = 0; k < nd; ++k) a(r, k) = ad[r][k];
    std::vector<double> fb(g->num_nodes(), 0.0), cb;
    for (auto n : g->boundary_ids()) fb[n] = f[n];
    sys.coupling.multiply(fb, cb);
    Eigen::VectorXd b(nd);
    for (std::size_t r = 0; r < nd; ++r) b(r) = -cb[r];
    const Eigen::VectorXd x = a.ldlt().solve(b);
    ScalarField ref = f;
    for (std::size_t n = 0; n < g->num_nodes(); ++n)
        if (sys.dof_of_node[n] >= 0) ref[n] = x(sys.dof_of_node[n]);
    CHECK(rel_l2(u, ref) <= 1e-10);
}

TEST_CASE("Galerkin residual at the solution is within tolerance") {
    auto g = make_grid(Grid2D::unit_square(33));
    const auto c = CellScalar::sample(g, [](double x, double y) { return 1.0 + std::exp(-20 * ((x - .4) * (x - .4) + (y - .6) * (y - .6))); });
    const auto sys = assemble(c, TensorField2(g, Sym2::rotated_diag(2, 1, 0.5)));
    const auto f = affine(g, 1, 0.2);
    const double tol = 1e-10;
    const auto u = solve_dirichlet(sys, f, {.tol = tol});
    std::vector<double> x(sys.unknowns()), ax, fb(g->num_nodes(), 0.0), cb;
    for (std::size_t n = 0; n < g->num_nodes(); ++n)
        if (sys.dof_of_node[n] >= 0) x[sys.dof_of_node[n]] = u[n];
    for (auto n : g->boundary_ids()) fb[n] = f[n];
    sys.reduced.multiply(x, ax);
    sys.coupling.multiply(fb, cb);
    double r2 = 0.0, b2 = 0.0;
    for (std::size_t i = 0; i < ax.size(); ++i) {
        r2 += (ax[i] + cb[i]) * (ax[i] + cb[i]);
        b2 += cb[i] * cb[i];
    }
    CHECK(std::sqrt(r2) <= tol * std::sqrt(b2) * (1 + 1e-6));
}

TEST_CASE("solver reports non-convergence with the final residual") {
    auto g = make_grid(Grid2D::unit_square(17));
    const auto sys = assemble(CellScalar(g, 1.0), TensorField2(g, Sym2::identity()));
    try {
        solve_dirichlet(sys, ScalarField::sample(g, [](double x, double y) { return x * y * y; }), {.tol = 1e-12, .max_iter = 2});
        FAIL("expected ConvergenceError");
    } catch (const ConvergenceError& e) {
        CHECK(e.residual() > 1e-12);
        CHECK(e.iterations() == 2);
    }
}

TEST_CASE("discrete maximum principle for diagonal coefficients") {
    auto g = make_grid(Grid2D::unit_square(25));
    const auto f = ScalarField::sample(g, [](double x, double y) { return std::sin(6 * x) + std::cos(5 * y); });
    double fmin = 1e300, fmax = -1e300;
    for (auto n : g->boundary_ids()) {
        fmin = std::min(fmin, f[n]);
        fmax = std::max(fmax, f[n]);
    }
    const auto c = CellScalar::sample(g, [](double x, double) { return 1 + x; });
    for (const Sym2& s : {Sym2::identity(), Sym2::diag(2, 1)}) {
        const auto u = solve_dirichlet(assemble(c, TensorField2(g, s)), f);
        for (std::size_t n = 0; n < u.size(); ++n) {
            CHECK(u[n] >= fmin - 1e-12);
            CHECK(u[n] <= fmax + 1e-12);
        }
    }
}

TEST_CASE("the solution minimises the exact discrete energy among competitors with the same trace") {
    auto g = make_grid(Grid2D::unit_square(21));
    const TensorField2 s(g, Sym2::rotated_diag(4, 1, 0.7));
    const auto f = ScalarField::sample(g, [](double x, double y) { return x + 0.5 * y * y; });
    const auto u = solve_dirichlet(assemble(CellScalar(g, 1.0), s), f);
    const double e0 = energy(u, s, nullptr, std::nullopt, Quadrature::exact);
    std::mt19937_64 rng(4);
    std::normal_distribution<double> nd;
    for (int t = 0; t < 10; ++t) {
        ScalarField v = u;
        for (std::size_t n = 0; n < v.size(); ++n)
            if (!g->is_boundary(n)) v[n] += 0.01 * nd(rng);
        CHECK(energy(v, s, nullptr, std::nullopt, Quadrature::exact) >= e0);
    }
}

TEST_CASE("energy values") {
    auto g = make_grid(Grid2D::unit_square(11));
    const auto u = affine(g, 1, 0);
    CHECK(energy(u, TensorField2(g, Sym2::identity())) == doctest::Approx(0.5).epsilon(1e-14));
    const TensorField2 s(g, Sym2::rotated_diag(2, 1, 0.3));
    const auto v = ScalarField::sample(g, [](double x, double y) { return std::sin(2 * x) * y; });
    const TensorField2 s2(g, Sym2::rotated_diag(4, 2, 0.3));
    CHECK(energy(v, s2) == doctest::Approx(2 * energy(v, s)).epsilon(1e-13));
    CHECK(energy(v, s2, nullptr, std::nullopt, Quadrature::exact) ==
          doctest::Approx(2 * energy(v, s, nullptr, std::nullopt, Quadrature::exact)).epsilon(1e-13));
}

TEST_CASE("energy quadratures agree with an independent 5-point Gauss oracle") {
    auto g = make_grid(Grid2D::rectangle(9, 7, 0, 1.1, 0, 0.9));
    std::mt19937_64 rng(8);
    std::normal_distribution<double> nd;
    std::vector<double> vals(g->num_nodes());
    for (auto& x : vals) x = nd(rng);
    const ScalarField u(g, vals);
    const TensorField2 s(g, Sym2{1.7, -0.4, 0.9});

    const double xg[5] = {-0.9061798459386640, -0.5384693101056831, 0.0, 0.5384693101056831, 0.9061798459386640};
    const double wg[5] = {0.2369268850561891, 0.4786286704993665, 0.5688888888888889, 0.4786286704993665,
                          0.2369268850561891};
    double exact = 0.0, mid = 0.0;
    for (std::size_t c = 0; c < g->num_cells(); ++c) {
        const auto n = g->cell_nodes(c);
        const double u00 = u[n[0]], u10 = u[n[1]], u11 = u[n[2]], u01 = u[n[3]];
        for (int a = 0; a < 5; ++a) {
            for (int b = 0; b < 5; ++b) {
                const double xi = 0.5 * (xg[a] + 1), eta = 0.5 * (xg[b] + 1);
                const Vec2 grad{((u10 - u00) * (1 - eta) + (u11 - u01) * eta) / g->hx(),
                                ((u01 - u00) * (1 - xi) + (u11 - u10) * xi) / g->hy()};
                exact += 0.5 * 0.25 * wg[a] * wg[b] * g->cell_area() * s[c].quad(grad);
                // Cell-centred gradient field is constant on each cell.
                const Vec2 gm{0.5 * (u10 - u00 + u11 - u01) / g->hx(), 0.5 * (u01 - u00 + u11 - u10) / g->hy()};
                mid += 0.5 * 0.25 * wg[a] * wg[b] * g->cell_area() * s[c].quad(gm);
            }
        }
    }
    CHECK(energy(u, s, nullptr, std::nullopt, Quadrature::exact) == doctest::Approx(exact).epsilon(1e-12));
    CHECK(energy(u, s) == doctest::Approx(mid).epsilon(1e-12));
}

TEST_CASE("penalized solve with k = 1 and sigma1 = sigma is the plain forward solve") {
    auto d = perfect_disk(33);
    const auto u1 = solve_penalized(1.0, d.sigma, d.sigma, d.f, d.inc);
    const auto u = solve_dirichlet(assemble(CellScalar(d.grid, 1.0), d.sigma), d.f);
    CHECK(max_abs_diff(u1, u) < 1e-13);
}

TEST_CASE("empty inclusion set: limit solve equals the Dirichlet solve") {
    auto g = make_grid(Grid2D::unit_square(17));
    const TensorField2 s(g, Sym2::rotated_diag(2, 1, 0.2));
    const auto f = ScalarField::sample(g, [](double x, double y) { return x * y + y; });
    const auto a = solve_inclusion_limit(s, f, InclusionSet{});
    const auto b = solve_dirichlet(assemble(CellScalar(g, 1.0), s), f);
    CHECK(a.values() == b.values());
}

TEST_CASE("limit solution is constant on each perfect component") {
    auto g = make_grid(Grid2D::unit_square(41));
    InclusionSet inc;
    inc.perfect.push_back(disk_cells(*g, {0.3, 0.5}, 0.1));
    inc.perfect.push_back(disk_cells(*g, {0.7, 0.4}, 0.12));
    inc.insulating.push_back(rect_cells(*g, 0.4, 0.6, 0.75, 0.85));
    const auto u = solve_inclusion_limit(TensorField2(g, Sym2::rotated_diag(2, 1, 0.5)), affine(g, 1, 0.3), inc);
    for (const auto& m : inc.perfect) {
        const auto nodes = closure_nodes(*g, m);
        for (auto n : nodes) CHECK(u[n] == u[nodes.front()]);
    }
    for (auto v : u.values()) CHECK(std::isfinite(v));
}

TEST_CASE("penalized solutions approach the inclusion limit") {
    auto d = perfect_disk(64);
    const auto u0 = solve_inclusion_limit(d.sigma, d.f, d.inc);
    const double i0 = energy(u0, d.sigma, &d.inc, std::nullopt, Quadrature::exact);
    const CellMask perf = d.inc.perfect_cells(*d.grid);
    double prev_err = 1e300, prev_energy = 0.0;
    double lambda = std::min(d.sigma.m(), d.sigma.m()), Lambda = std::max(d.sigma.M(), d.sigma.M());
    for (double k : {1e-1, 1e-2, 1e-3, 1e-4, 1e-5}) {
        const auto uk = solve_penalized(k, d.sigma, d.sigma, d.f, d.inc);
        const double err = rel_l2(uk, u0);
        CHECK(err <= prev_err);
        prev_err = err;
        const double ik = energy(uk, d.sigma, &d.inc, PenaltyTerm{k, &d.sigma}, Quadrature::exact);
        // I_k[u_k] <= I_k[u_0] = I_0[u_0], increasing as k decreases.
        CHECK(ik <= i0 * (1 + 1e-9));
        CHECK(ik >= prev_energy * (1 - 1e-9));
        prev_energy = ik;

        // ||grad u_k||^2 <= (Lambda/lambda) ||grad u_0||^2
        double gk = 0.0, g0 = 0.0;
        for (std::size_t c = 0; c < d.grid->num_cells(); ++c) {
            gk += norm(cell_gradient(uk, c)) * norm(cell_gradient(uk, c));
            g0 += norm(cell_gradient(u0, c)) * norm(cell_gradient(u0, c));
        }
        CHECK(gk <= (Lambda / lambda) * g0 * (1 + 1e-9));

        if (k == 1e-4) {
            CHECK(err <= 1e-2);
            double in_max = 0.0, all_max = 0.0;
            for (std::size_t c = 0; c < d.grid->num_cells(); ++c) {
                const double gn = norm(cell_gradient(uk, c));
                all_max = std::max(all_max, gn);
                if (perf[c]) in_max = std::max(in_max, gn);
            }
            CHECK(in_max <= 1e-2 * all_max);
        }
    }
    CHECK(std::abs(prev_energy - i0) <= 1e-2 * i0);
}
