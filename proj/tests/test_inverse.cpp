#include <doctest.h>

#include <cmath>
#include <random>

#include "acdii/benchmark.hpp"
#include "acdii/error.hpp"
#include "acdii/inverse.hpp"

using namespace acdii;

namespace {

AdmissibleTriplet trivial_triplet(int n) {
    auto g = make_grid(Grid2D::unit_square(n));
    return synthesize_triplet(CellScalar(g, 1.0), TensorField2(g, Sym2::identity()),
                              ScalarField::sample(g, [](double x, double) { return x; }));
}

double max_abs_diff(const ScalarField& u, const ScalarField& v) {
    double m = 0.0;
    for (std::size_t n = 0; n < u.size(); ++n) m = std::max(m, std::abs(u[n] - v[n]));
    return m;
}

// Shared 64x64 bump benchmark, computed once.
struct Bump64 {
    BumpBenchmark b = bump_benchmark(64);
    AdmissibleTriplet t = synthesize_triplet(b.c, b.sigma0, b.f);
    TVProblem p = TVProblem::from(t);
    FixedPointDiagnostics fd;
    ScalarField u_fp = minimize_tv_fixedpoint(p, &fd);
    PrimalDualResult pd = minimize_tv_primal_dual(p);
};

const Bump64& bump64() {
    static const Bump64 instance;
    return instance;
}

} // namespace

TEST_CASE("weighted TV examples") {
    auto g = make_grid(Grid2D::unit_square(17));
    const auto x = ScalarField::sample(g, [](double x, double) { return x; });
    const TensorField2 id(g, Sym2::identity());
    CHECK(weighted_tv(x, CellScalar(g, 1.0), id) == doctest::Approx(1.0).epsilon(1e-14));
    CHECK(weighted_tv(x, CellScalar(g, 2.0), id) == doctest::Approx(2.0).epsilon(1e-14));

    const TensorField2 s(g, Sym2::rotated_diag(3, 1, 0.4));
    const auto a = CellScalar::sample(g, [](double x, double y) { return 1 + x * y; });
    std::mt19937_64 rng(3);
    std::normal_distribution<double> nd;
    ScalarField v(g);
    for (auto& e : v.values()) e = nd(rng);
    // Independent evaluation from the corner values.
    double ref = 0.0;
    const double h = g->hx();
    for (int j = 0; j < g->cny(); ++j)
        for (int i = 0; i < g->cnx(); ++i) {
            const double u00 = v[g->node(i, j)], u10 = v[g->node(i + 1, j)], u01 = v[g->node(i, j + 1)],
                         u11 = v[g->node(i + 1, j + 1)];
            const double gx = (u10 + u11 - u00 - u01) / (2 * h), gy = (u01 + u11 - u00 - u10) / (2 * h);
            const Sym2& t = s[g->cell(i, j)];
            ref += h * h * a[g->cell(i, j)] * std::sqrt(t.s11 * gx * gx + 2 * t.s12 * gx * gy + t.s22 * gy * gy);
        }
    CHECK(weighted_tv(v, a, s) == doctest::Approx(ref).epsilon(1e-12));

    ScalarField w = v;
    for (auto& e : w.values()) e *= -2.5;
    CHECK(weighted_tv(w, a, s) == doctest::Approx(2.5 * weighted_tv(v, a, s)).epsilon(1e-13));
}

TEST_CASE("dual feasibility and the dual bound") {
    auto g = make_grid(Grid2D::unit_square(9));
    const CellScalar one(g, 1.0);
    const TensorField2 id(g, Sym2::identity());
    VectorField2 b(g);
    for (std::size_t c = 0; c < g->num_cells(); ++c) b.set(c, {0.0, 0.0});
    CHECK(dual_feasibility(b, one, id) == 0.0);
    b.set(5, {2.0, 0.0});
    CHECK(dual_feasibility(b, one, id) == doctest::Approx(1.0));

    const TensorField2 s(g, Sym2::rotated_diag(2, 1, 0.3));
    const auto a = CellScalar::sample(g, [](double x, double) { return 0.5 + x; });
    std::mt19937_64 rng(5);
    std::normal_distribution<double> nd;
    ScalarField u(g);
    for (auto& e : u.values()) e = nd(rng);
    for (int t = 0; t < 20; ++t) {
        for (std::size_t c = 0; c < g->num_cells(); ++c) {
            Vec2 v{nd(rng), nd(rng)};
            const double r = inv_norm_in(s[c], v);
            b.set(c, (a[c] / r) * v);
        }
        CHECK(dual_feasibility(b, a, s) <= 1e-14);
        CHECK(dual_pairing(u, b) <= weighted_tv(u, a, s) * (1 + 1e-14));
    }
}

TEST_CASE("fixed point recovers the exact minimizer of the trivial triplet") {
    const auto t = trivial_triplet(33);
    const auto u = minimize_tv_fixedpoint(TVProblem::from(t));
    CHECK(max_abs_diff(u, t.f) <= 1e-6);
}

TEST_CASE("primal-dual recovers the exact minimizer of the trivial triplet") {
    const auto t = trivial_triplet(33);
    const auto r = minimize_tv_primal_dual(TVProblem::from(t));
    CHECK(max_abs_diff(r.u, t.f) <= 1e-4);
    CHECK(dual_feasibility(r.b, t.a, t.sigma0) <= 1e-15);
}

TEST_CASE("primal-dual step condition is enforced") {
    auto p = TVProblem::from(trivial_triplet(9));
    p.primal_dual.sigma = 1.0;
    p.primal_dual.tau = 1.0;
    CHECK_THROWS_AS(minimize_tv_primal_dual(p), InputError);
}

TEST_CASE("bump benchmark: both minimizers match the true potential") {
    const auto& s = bump64();
    const ScalarField& ut = *s.t.provenance.u_true;
    CHECK(s.fd.converged);
    CHECK(relative_l2(s.u_fp, ut) <= 1e-2);
    CHECK(relative_l2(s.pd.u, s.u_fp) <= 1e-2);
    CHECK(s.pd.diag.feasibility <= 1e-15);
    CHECK(std::abs(s.pd.diag.gap) <= 1e-3);
}

TEST_CASE("argmin is invariant under a -> 2a") {
    auto b = bump_benchmark(24);
    const auto t = synthesize_triplet(b.c, b.sigma0, b.f);
    auto p = TVProblem::from(t);
    const auto u1 = minimize_tv_fixedpoint(p);
    for (auto& v : p.a.values()) v *= 2.0;
    const auto u2 = minimize_tv_fixedpoint(p);
    CHECK(relative_l2(u2, u1) <= 1e-8);
    CHECK(weighted_tv(u2, p.a, p.sigma0) == doctest::Approx(2.0 * weighted_tv(u1, t.a, t.sigma0)).epsilon(1e-12));
}

TEST_CASE("minimality audit") {
    const auto& s = bump64();
    const ScalarField& ut = *s.t.provenance.u_true;
    const auto good = minimality_audit(ut, s.t.a, s.t.sigma0, 20, 11);
    CHECK(good.margins.size() == 20);
    CHECK(good.negatives == 0);
    CHECK(good.min_margin >= -1e-8);

    ScalarField bad = ut;
    const auto bump = smooth_perturbation(s.b.grid, 0.1, 99);
    for (std::size_t n = 0; n < bad.size(); ++n) bad[n] += bump[n];
    CHECK(minimality_audit(bad, s.t.a, s.t.sigma0, 20, 11).negatives > 0);

    const auto zero = smooth_perturbation(s.b.grid, 0.0, 1);
    ScalarField same = ut;
    for (std::size_t n = 0; n < same.size(); ++n) same[n] += zero[n];
    CHECK(weighted_tv(same, s.t.a, s.t.sigma0) - good.f_u == 0.0);
    for (auto n : s.b.grid->boundary_ids()) CHECK(bump[n] == 0.0);
}

TEST_CASE("duality gap") {
    auto g = make_grid(Grid2D::unit_square(17));
    const auto f = ScalarField::sample(g, [](double x, double) { return x; });
    const TensorField2 id(g, Sym2::identity());
    const CellScalar one(g, 1.0);
    const auto j = compute_current(f, one, id);
    const auto d = duality_gap(f, f, j, one, id);
    CHECK(d.functional == doctest::Approx(1.0));
    CHECK(d.boundary == doctest::Approx(-1.0));
    CHECK(d.gap <= 1e-12);

    const auto& s = bump64();
    const ScalarField& ut = *s.t.provenance.u_true;
    const auto jt = compute_current(ut, s.b.c, s.b.sigma0);
    CHECK(duality_gap(ut, s.b.f, jt, s.t.a, s.t.sigma0).gap <= 1e-3);

    ScalarField noise = ut;
    std::mt19937_64 rng(2);
    std::uniform_real_distribution<double> u01(0.0, 1.0);
    for (std::size_t n = 0; n < noise.size(); ++n)
        if (!s.b.grid->is_boundary(n)) noise[n] = u01(rng);
    CHECK(duality_gap(noise, s.b.f, jt, s.t.a, s.t.sigma0).gap > 0.5);
}

TEST_CASE("recovery") {
    auto g = make_grid(Grid2D::unit_square(17));
    const auto u = ScalarField::sample(g, [](double x, double y) { return x + 0.3 * y * y; });
    const TensorField2 s(g, Sym2::rotated_diag(2, 1, 0.7));
    CellScalar a(g);
    for (std::size_t c = 0; c < a.size(); ++c) a[c] = norm_in(s[c], cell_gradient(u, c));
    const auto r = recover_c(u, a, s);
    CHECK(r.z_cells == 0);
    for (double v : r.c.values()) CHECK(v == doctest::Approx(1.0).epsilon(1e-14));

    const auto& bm = bump64();
    const auto rb = recover_c(bm.u_fp, bm.t.a, bm.t.sigma0);
    double err = 0.0;
    for (std::size_t c = 0; c < rb.c.size(); ++c)
        if (!rb.mask_z[c]) err = std::max(err, std::abs(rb.c[c] - bm.b.c[c]) / bm.b.c[c]);
    CHECK(err <= 5e-2);
    const auto sr = rb.sigma(bm.t.sigma0);
    CHECK(sr[100].s12 == doctest::Approx(rb.c[100] * bm.t.sigma0[100].s12).epsilon(1e-15));

    auto gi = make_grid(Grid2D::unit_square(41));
    InclusionSet inc;
    inc.insulating.push_back(disk_cells(*gi, {0.5, 0.5}, 0.15));
    const auto ti = synthesize_triplet(CellScalar(gi, 1.0), TensorField2(gi, Sym2::identity()),
                                       ScalarField::sample(gi, [](double x, double) { return x; }), inc);
    const auto ri = recover_c(*ti.provenance.u_true, ti.a, ti.sigma0);
    for (std::size_t c = 0; c < gi->num_cells(); ++c)
        if (inc.insulating[0][c]) CHECK(ri.mask_z[c] == 1);
    CHECK(ri.gamma_cells == ri.z_cells);
}

TEST_CASE("recovered conductivity regenerates the data") {
    const auto& s = bump64();
    const ScalarField& ut = *s.t.provenance.u_true;
    const auto r = recover_c(s.u_fp, s.t.a, s.t.sigma0);
    CellScalar c = r.c;
    for (std::size_t k = 0; k < c.size(); ++k)
        if (r.mask_z[k]) c[k] = 1.0;
    const auto u = solve_dirichlet(assemble(c, s.t.sigma0), s.t.f);
    const auto a = compute_a(compute_current(u, c, s.t.sigma0), s.t.sigma0);
    double num = 0.0, den = 0.0;
    for (std::size_t k = 0; k < a.size(); ++k) {
        num += (a[k] - s.t.a[k]) * (a[k] - s.t.a[k]);
        den += s.t.a[k] * s.t.a[k];
    }
    const double u_err = relative_l2(s.u_fp, ut);
    CHECK(std::sqrt(num / den) <= 2.0 * std::max(u_err, 1e-8));
}

TEST_CASE("gradient of the minimizer aligns with sigma0^-1 J") {
    const auto& s = bump64();
    const auto j = compute_current(*s.t.provenance.u_true, s.b.c, s.b.sigma0);
    double jmax = 0.0;
    for (std::size_t c = 0; c < j.size(); ++c) jmax = std::max(jmax, norm(j.at(c)));
    double worst = 0.0;
    for (std::size_t c = 0; c < j.size(); ++c) {
        if (norm(j.at(c)) < 0.1 * jmax) continue;
        const Vec2 gu = cell_gradient(s.u_fp, c), w = -1.0 * s.b.sigma0[c].inverse().apply(j.at(c));
        const double cosang = std::clamp(dot(gu, w) / (norm(gu) * norm(w)), -1.0, 1.0);
        worst = std::max(worst, std::acos(cosang));
    }
    CHECK(worst <= 1e-2);
}

TEST_CASE("inclusion classification") {
    auto g = make_grid(Grid2D::unit_square(64));
    const auto f = ScalarField::sample(g, [](double x, double) { return x; });
    const TensorField2 id(g, Sym2::identity());
    const CellScalar one(g, 1.0);
    InclusionSet perfect, insulating;
    perfect.perfect.push_back(disk_cells(*g, {0.5, 0.5}, 0.15));
    insulating.insulating.push_back(disk_cells(*g, {0.5, 0.5}, 0.15));

    const auto tp = synthesize_triplet(one, id, f, perfect);
    auto lp = classify_inclusions(*tp.provenance.u_true, tp.a, recover_c(*tp.provenance.u_true, tp.a, id).mask_z);
    REQUIRE(lp.size() == 1);
    CHECK(lp[0].label == "perfect");
    CHECK(lp[0].cells == 285);

    const auto ti = synthesize_triplet(one, id, f, insulating);
    auto li = classify_inclusions(*ti.provenance.u_true, ti.a, recover_c(*ti.provenance.u_true, ti.a, id).mask_z);
    REQUIRE(li.size() == 1);
    CHECK(li[0].label == "insulating");

    // Perfect conductor carrying no current: a = 0 inside, constant trace.
    const auto u0 = solve_inclusion_limit(id, f, perfect);
    const auto a0 = compute_a(compute_current(u0, one, id), id);
    auto l0 = classify_inclusions(u0, a0, recover_c(u0, a0, id).mask_z);
    REQUIRE(l0.size() == 1);
    CHECK((l0[0].label == "perfect-or-insulating" || l0[0].label == "undetermined"));

    // Same component with a smooth (Holder) profile of a near its boundary.
    CellScalar smooth = a0;
    const auto d = perfect.perfect[0];
    for (std::size_t c = 0; c < smooth.size(); ++c) {
        const double r = norm(g->cell_center(c) - Vec2{0.5, 0.5});
        smooth[c] = d[c] ? 0.0 : std::min(1.0, (r - 0.15) * (r - 0.15) * 10.0);
    }
    auto ls = classify_inclusions(u0, smooth, d, {});
    REQUIRE(ls.size() == 1);
    CHECK(ls[0].label == "undetermined");
}

TEST_CASE("coarea audit") {
    auto g = make_grid(Grid2D::unit_square(33));
    const auto x = ScalarField::sample(g, [](double x, double) { return x; });
    const auto r = coarea_audit(x, CellScalar(g, 1.0), TensorField2(g, Sym2::identity()), 50);
    CHECK(r.functional == doctest::Approx(1.0));
    CHECK(r.discrepancy <= 1e-12);

    // u = r^2 on the unit disk: both sides equal 4 pi / 3 in the continuum.
    const int n = 129;
    const double h = 2.0 / (n - 1);
    std::vector<std::uint8_t> mask(n * n);
    for (int j = 0; j < n; ++j)
        for (int i = 0; i < n; ++i) {
            const double px = -1 + i * h, py = -1 + j * h;
            mask[j * n + i] = px * px + py * py <= 1.0 + 1e-12;
        }
    auto gd = make_grid(Grid2D(n, n, h, h, -1.0, -1.0, mask));
    const auto u = ScalarField::sample(gd, [](double x, double y) { return x * x + y * y; });
    const auto rd = coarea_audit(u, CellScalar(gd, 1.0), TensorField2(gd, Sym2::identity()), 200);
    CHECK(rd.discrepancy <= 2e-2);
    CHECK(rd.functional == doctest::Approx(4.0 * M_PI / 3.0).epsilon(3e-2));

    const auto& s = bump64();
    CHECK(coarea_audit(*s.t.provenance.u_true, s.t.a, s.t.sigma0, 200).discrepancy <= 2e-2);
}

TEST_CASE("input validation") {
    auto t = trivial_triplet(9);
    auto p = TVProblem::from(t);
    p.fixed_point.ratio = 1.5;
    CHECK_THROWS_AS(minimize_tv_fixedpoint(p), InputError);
    p = TVProblem::from(t);
    for (auto& v : p.a.values()) v = 0.0;
    CHECK_THROWS_AS(minimize_tv_fixedpoint(p), InputError);
    CHECK_THROWS_AS(recover_c(t.f, t.a, t.sigma0, {0.0, 1e-3}), InputError);
}
