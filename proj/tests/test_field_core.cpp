#include <doctest.h>

#include <Eigen/Dense>
#include <cmath>
#include <random>

#include "acdii/error.hpp"
#include "acdii/field_io.hpp"
#include "acdii/fields.hpp"

using namespace acdii;

namespace {

Sym2 random_spd(std::mt19937_64& rng) {
    std::uniform_real_distribution<double> ev(0.2, 5.0), ang(0.0, 3.14159);
    return Sym2::rotated_diag(ev(rng), ev(rng), ang(rng));
}

} // namespace

TEST_CASE("tensor norms") {
    CHECK(norm_in(Sym2::identity(), {3, 4}) == doctest::Approx(5.0));
    CHECK(inv_norm_in(Sym2::diag(4, 1), {0, 2}) == doctest::Approx(2.0));
    CHECK(Sym2::diag(4, 1).apply({1, 1}).x == 4.0);
}

TEST_CASE("tensor norms agree with dense 2x2 arithmetic") {
    std::mt19937_64 rng(7);
    std::normal_distribution<double> nd;
    for (int t = 0; t < 200; ++t) {
        const Sym2 s = random_spd(rng);
        const Vec2 xi{nd(rng), nd(rng)}, eta{nd(rng), nd(rng)};
        Eigen::Matrix2d m;
        m << s.s11, s.s12, s.s12, s.s22;
        const Eigen::Vector2d x(xi.x, xi.y), y(eta.x, eta.y);
        CHECK(norm_in(s, xi) == doctest::Approx(std::sqrt(x.dot(m * x))).epsilon(1e-13));
        CHECK(inv_norm_in(s, xi) == doctest::Approx(std::sqrt(x.dot(m.inverse() * x))).epsilon(1e-12));
        // Duality pairing: |xi . eta| <= |xi|_S |eta|_{S^-1}
        CHECK(std::abs(dot(xi, eta)) <= norm_in(s, xi) * inv_norm_in(s, eta) * (1 + 1e-12));
    }
}

TEST_CASE("tensor field ellipticity bounds hold cell-wise") {
    auto g = make_grid(Grid2D::unit_square(9));
    std::mt19937_64 rng(11);
    std::vector<Sym2> cells(g->num_cells());
    for (auto& s : cells) s = random_spd(rng);
    const TensorField2 t(g, cells);
    std::normal_distribution<double> nd;
    for (std::size_t c = 0; c < g->num_cells(); ++c) {
        const Vec2 xi{nd(rng), nd(rng)};
        const double n = norm_in(t[c], xi);
        CHECK(n >= std::sqrt(t.m()) * norm(xi) * (1 - 1e-12));
        CHECK(n <= std::sqrt(t.M()) * norm(xi) * (1 + 1e-12));
    }
}

TEST_CASE("non-SPD tensor is rejected at construction") {
    auto g = make_grid(Grid2D::unit_square(4));
    CHECK_THROWS_AS(TensorField2(g, Sym2{1.0, 2.0, 1.0}), InputError);
}

TEST_CASE("grid boundary ids and invariants") {
    const Grid2D g = Grid2D::unit_square(5);
    CHECK(g.boundary_ids().size() == 16);
    for (auto n : g.boundary_ids()) {
        const int i = g.node_i(n), j = g.node_j(n);
        CHECK((i == 0 || j == 0 || i == 4 || j == 4));
    }
    CHECK_THROWS_AS(Grid2D(2, 5, 1.0, 1.0), InputError);
    CHECK_THROWS_AS(Grid2D(5, 5, 0.0, 1.0), InputError);
    CHECK_THROWS_AS(Grid2D(5, 5, 1.0, 1.0, 0, 0, std::vector<std::uint8_t>(25, 0)), InputError);

    // Two blocks joined by a one-node bridge: interior splits into two components.
    std::vector<std::uint8_t> mask(9 * 5, 0);
    for (int j = 0; j < 5; ++j)
        for (int i = 0; i < 9; ++i)
            if (i != 4 || j == 2) mask[j * 9 + i] = 1;
    CHECK_THROWS_AS(Grid2D(9, 5, 1.0, 1.0, 0, 0, mask), InputError);
}

TEST_CASE("masked grid: boundary is exactly the masked nodes with an open neighbour") {
    const int n = 21;
    std::vector<std::uint8_t> mask(n * n);
    for (int j = 0; j < n; ++j)
        for (int i = 0; i < n; ++i) mask[j * n + i] = std::hypot(i - 10.0, j - 10.0) <= 9.0;
    const Grid2D g(n, n, 0.1, 0.1, 0, 0, mask);
    std::size_t expect = 0;
    for (int j = 0; j < n; ++j) {
        for (int i = 0; i < n; ++i) {
            if (!mask[j * n + i]) continue;
            bool open = false;
            for (auto [a, b] : {std::pair{i + 1, j}, {i - 1, j}, {i, j + 1}, {i, j - 1}})
                open = open || a < 0 || b < 0 || a >= n || b >= n || !mask[b * n + a];
            expect += open;
            CHECK(g.is_boundary(g.node(i, j)) == open);
        }
    }
    CHECK(g.boundary_ids().size() == expect);
}

TEST_CASE("gradient of affine and constant fields") {
    auto g = make_grid(Grid2D::rectangle(6, 5, -1.0, 2.0, 0.5, 1.5));
    const auto gx = gradient(ScalarField::sample(g, [](double x, double) { return x; }));
    const auto gc = gradient(ScalarField(g, 3.25));
    const auto ga = gradient(ScalarField::sample(g, [](double x, double y) { return 2 * x - 3 * y + 1; }));
    for (std::size_t c = 0; c < g->num_cells(); ++c) {
        CHECK(gx.at(c).x == doctest::Approx(1.0).epsilon(1e-14));
        CHECK(gx.at(c).y == doctest::Approx(0.0));
        CHECK(gc.at(c).x == 0.0);
        CHECK(gc.at(c).y == 0.0);
        CHECK(ga.at(c).x == doctest::Approx(2.0).epsilon(1e-13));
        CHECK(ga.at(c).y == doctest::Approx(-3.0).epsilon(1e-13));
    }
}

TEST_CASE("gradient of xy matches the analytic gradient at cell centres") {
    // xy is bilinear, so the cell-centred gradient equals (y_c, x_c) exactly.
    auto g = make_grid(Grid2D::unit_square(4));
    const auto d = gradient(ScalarField::sample(g, [](double x, double y) { return x * y; }));
    for (std::size_t c = 0; c < g->num_cells(); ++c) {
        const Vec2 p = g->cell_center(c);
        CHECK(d.at(c).x == doctest::Approx(p.y).epsilon(1e-14));
        CHECK(d.at(c).y == doctest::Approx(p.x).epsilon(1e-14));
    }
    // Spot value: cell (1, 2) centred at (1/2, 5/6).
    CHECK(d.at(g->cell(1, 2)).x == doctest::Approx(5.0 / 6.0));
}

TEST_CASE("gradient is linear and its adjoint is the transpose") {
    auto g = make_grid(Grid2D::rectangle(7, 9, 0, 1.2, 0, 2.0));
    std::mt19937_64 rng(3);
    std::normal_distribution<double> nd;
    std::vector<double> a(g->num_nodes()), b(g->num_nodes());
    for (auto& v : a) v = nd(rng);
    for (auto& v : b) v = nd(rng);
    const double alpha = 1.7, beta = -0.3;
    std::vector<double> comb(a.size());
    for (std::size_t i = 0; i < a.size(); ++i) comb[i] = alpha * a[i] + beta * b[i];
    const auto gu = gradient(ScalarField(g, a)), gv = gradient(ScalarField(g, b));
    const auto gc = gradient(ScalarField(g, comb));
    for (std::size_t c = 0; c < g->num_cells(); ++c) {
        CHECK(gc.at(c).x == doctest::Approx(alpha * gu.at(c).x + beta * gv.at(c).x).epsilon(1e-12));
        CHECK(gc.at(c).y == doctest::Approx(alpha * gu.at(c).y + beta * gv.at(c).y).epsilon(1e-12));
    }
    // <grad u, B>_cells = <u, grad^T B>_nodes
    std::vector<double> b1(g->num_cells()), b2(g->num_cells());
    for (auto& v : b1) v = nd(rng);
    for (auto& v : b2) v = nd(rng);
    const VectorField2 bf(g, b1, b2);
    double lhs = 0.0;
    for (std::size_t c = 0; c < g->num_cells(); ++c) lhs += g->cell_area() * dot(gu.at(c), bf.at(c));
    const auto adj = gradient_adjoint(bf);
    double rhs = 0.0;
    for (std::size_t n = 0; n < a.size(); ++n) rhs += a[n] * adj[n];
    CHECK(lhs == doctest::Approx(rhs).epsilon(1e-12));
}

TEST_CASE("field file: 3x3 zeros has a 72-byte payload") {
    auto g = make_grid(Grid2D::unit_square(3));
    const std::string bytes = write_field(to_field_file(ScalarField(g, 0.0)));
    const auto nl = bytes.find('\n');
    REQUIRE(nl != std::string::npos);
    CHECK(bytes.size() - nl - 1 == 72);
    CHECK(bytes.substr(0, nl) ==
          R"({"schema":"acdii-field/1","kind":"scalar","nx":3,"ny":3,"hx":0.5,"hy":0.5,"order":"row-major","payload":"f64le"})");
}

TEST_CASE("field file round trip is byte-identical") {
    std::mt19937_64 rng(5);
    auto g = make_grid(Grid2D::rectangle(8, 6, 0, 0.7, 0, 1.3));
    std::vector<Sym2> cells(g->num_cells());
    for (auto& s : cells) s = random_spd(rng);
    const TensorField2 t(g, cells);
    const std::string bytes = write_field(to_field_file(t));
    const FieldFile back = read_field(bytes);
    CHECK(write_field(back) == bytes);
    const TensorField2 t2 = tensor_from(back, g);
    for (std::size_t c = 0; c < t.size(); ++c) {
        CHECK(t2[c].s11 == t[c].s11);
        CHECK(t2[c].s12 == t[c].s12);
        CHECK(t2[c].s22 == t[c].s22);
    }
}

TEST_CASE("field file parse errors name the offending field") {
    auto g = make_grid(Grid2D::unit_square(3));
    std::string bytes = write_field(to_field_file(ScalarField(g, 1.0)));

    // Relabel a one-plane payload as a vector.
    std::string vec = bytes;
    vec.replace(vec.find("\"scalar\""), 8, "\"vector\"");
    try {
        read_field(vec);
        FAIL("expected error");
    } catch (const FieldParseError& e) {
        CHECK(e.field() == "payload");
        CHECK(std::string(e.what()).find("payload length") != std::string::npos);
    }
    try {
        read_field(bytes.substr(0, bytes.size() - 3));
        FAIL("expected error");
    } catch (const FieldParseError& e) {
        CHECK(e.field() == "payload");
    }
    std::string bad_kind = bytes;
    bad_kind.replace(bad_kind.find("\"scalar\""), 8, "\"matrix\"");
    try {
        read_field(bad_kind);
        FAIL("expected error");
    } catch (const FieldParseError& e) {
        CHECK(e.field() == "kind");
    }
    CHECK_THROWS_AS(read_field("{not json\n"), FieldParseError);
    CHECK_THROWS_AS(read_field("no newline"), FieldParseError);
    std::string bad_nx = bytes;
    bad_nx.replace(bad_nx.find("\"nx\":3"), 6, "\"nx\":0");
    try {
        read_field(bad_nx);
        FAIL("expected error");
    } catch (const FieldParseError& e) {
        CHECK(e.field() == "nx");
    }
}

TEST_CASE("cell fields use cell dimensions and reject a mismatched grid") {
    auto g = make_grid(Grid2D::unit_square(5));
    const FieldFile f = to_field_file(CellScalar(g, 2.0));
    CHECK(f.nx == 4);
    CHECK(f.ny == 4);
    CHECK_THROWS_AS(node_scalar_from(f, g), FieldParseError);
    CHECK(cell_scalar_from(f, g)[3] == 2.0);
}
