#include "acdii/fields.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "acdii/error.hpp"

namespace acdii {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

void require_grid(const GridPtr& g) {
    if (!g) throw InputError("field: null grid");
}

} // namespace

ScalarField::ScalarField(GridPtr grid, double fill) : grid_(std::move(grid)) {
    require_grid(grid_);
    values_.assign(grid_->num_nodes(), fill);
    for (std::size_t n = 0; n < values_.size(); ++n)
        if (!grid_->in_domain(n)) values_[n] = kNaN;
}

ScalarField::ScalarField(GridPtr grid, std::vector<double> values)
    : grid_(std::move(grid)), values_(std::move(values)) {
    require_grid(grid_);
    if (values_.size() != grid_->num_nodes()) throw InputError("scalar field: size mismatch");
    for (std::size_t n = 0; n < values_.size(); ++n) {
        if (!grid_->in_domain(n))
            values_[n] = kNaN;
        else if (!std::isfinite(values_[n]))
            throw InputError("scalar field: non-finite value at in-domain node " + std::to_string(n));
    }
}

ScalarField ScalarField::sample(GridPtr grid, const std::function<double(double, double)>& fn) {
    require_grid(grid);
    std::vector<double> v(grid->num_nodes());
    for (std::size_t n = 0; n < v.size(); ++n) {
        const Vec2 p = grid->node_pos(n);
        v[n] = grid->in_domain(n) ? fn(p.x, p.y) : kNaN;
    }
    return ScalarField(std::move(grid), std::move(v));
}

CellScalar::CellScalar(GridPtr grid, double fill) : grid_(std::move(grid)) {
    require_grid(grid_);
    values_.assign(grid_->num_cells(), fill);
    for (std::size_t c = 0; c < values_.size(); ++c)
        if (!grid_->cell_in_domain(c)) values_[c] = kNaN;
}

CellScalar::CellScalar(GridPtr grid, std::vector<double> values)
    : grid_(std::move(grid)), values_(std::move(values)) {
    require_grid(grid_);
    if (values_.size() != grid_->num_cells()) throw InputError("cell field: size mismatch");
    for (std::size_t c = 0; c < values_.size(); ++c) {
        if (!grid_->cell_in_domain(c))
            values_[c] = kNaN;
        else if (!std::isfinite(values_[c]))
            throw InputError("cell field: non-finite value at in-domain cell " + std::to_string(c));
    }
}

CellScalar CellScalar::sample(GridPtr grid, const std::function<double(double, double)>& fn) {
    require_grid(grid);
    std::vector<double> v(grid->num_cells());
    for (std::size_t c = 0; c < v.size(); ++c) {
        const Vec2 p = grid->cell_center(c);
        v[c] = grid->cell_in_domain(c) ? fn(p.x, p.y) : kNaN;
    }
    return CellScalar(std::move(grid), std::move(v));
}

double CellScalar::max() const {
    double m = -std::numeric_limits<double>::infinity();
    for (std::size_t c = 0; c < values_.size(); ++c)
        if (grid_->cell_in_domain(c)) m = std::max(m, values_[c]);
    return m;
}

VectorField2::VectorField2(GridPtr grid) : grid_(std::move(grid)) {
    require_grid(grid_);
    v1_.assign(grid_->num_cells(), 0.0);
    v2_.assign(grid_->num_cells(), 0.0);
    for (std::size_t c = 0; c < v1_.size(); ++c)
        if (!grid_->cell_in_domain(c)) v1_[c] = v2_[c] = kNaN;
}

VectorField2::VectorField2(GridPtr grid, std::vector<double> v1, std::vector<double> v2)
    : grid_(std::move(grid)), v1_(std::move(v1)), v2_(std::move(v2)) {
    require_grid(grid_);
    if (v1_.size() != grid_->num_cells() || v2_.size() != grid_->num_cells())
        throw InputError("vector field: size mismatch");
    for (std::size_t c = 0; c < v1_.size(); ++c) {
        if (!grid_->cell_in_domain(c)) {
            v1_[c] = v2_[c] = kNaN;
        } else if (!std::isfinite(v1_[c]) || !std::isfinite(v2_[c])) {
            throw InputError("vector field: non-finite value at in-domain cell " + std::to_string(c));
        }
    }
}

TensorField2::TensorField2(GridPtr grid, Sym2 uniform) : grid_(std::move(grid)) {
    require_grid(grid_);
    cells_.assign(grid_->num_cells(), uniform);
    validate();
}

TensorField2::TensorField2(GridPtr grid, std::vector<Sym2> cells)
    : grid_(std::move(grid)), cells_(std::move(cells)) {
    require_grid(grid_);
    if (cells_.size() != grid_->num_cells()) throw InputError("tensor field: size mismatch");
    validate();
}

TensorField2 TensorField2::sample(GridPtr grid, const std::function<Sym2(double, double)>& fn) {
    require_grid(grid);
    std::vector<Sym2> v(grid->num_cells(), Sym2::identity());
    for (std::size_t c = 0; c < v.size(); ++c) {
        const Vec2 p = grid->cell_center(c);
        if (grid->cell_in_domain(c)) v[c] = fn(p.x, p.y);
    }
    return TensorField2(std::move(grid), std::move(v));
}

void TensorField2::validate() {
    m_ = std::numeric_limits<double>::infinity();
    M_ = 0.0;
    for (std::size_t c = 0; c < cells_.size(); ++c) {
        if (!grid_->cell_in_domain(c)) {
            cells_[c] = {kNaN, kNaN, kNaN};
            continue;
        }
        const Sym2& s = cells_[c];
        if (!std::isfinite(s.s11) || !std::isfinite(s.s12) || !std::isfinite(s.s22) || !s.is_spd())
            throw InputError("tensor field: cell " + std::to_string(c) + " is not SPD");
        m_ = std::min(m_, s.min_eig());
        M_ = std::max(M_, s.max_eig());
    }
}

TensorField2 TensorField2::scaled(const CellScalar& c) const {
    std::vector<Sym2> out(cells_.size(), Sym2::identity());
    for (std::size_t k = 0; k < cells_.size(); ++k)
        if (grid_->cell_in_domain(k)) out[k] = cells_[k].scaled(c[k]);
    return TensorField2(grid_, std::move(out));
}

Vec2 cell_gradient(const ScalarField& u, std::size_t c) {
    const Grid2D& g = u.grid();
    const auto n = g.cell_nodes(c);
    const double u00 = u[n[0]], u10 = u[n[1]], u11 = u[n[2]], u01 = u[n[3]];
    return {0.5 * ((u10 - u00) + (u11 - u01)) / g.hx(), 0.5 * ((u01 - u00) + (u11 - u10)) / g.hy()};
}

VectorField2 gradient(const ScalarField& u) {
    const Grid2D& g = u.grid();
    std::vector<double> v1(g.num_cells(), kNaN), v2(g.num_cells(), kNaN);
    for (std::size_t c = 0; c < g.num_cells(); ++c) {
        if (!g.cell_in_domain(c)) continue;
        const Vec2 d = cell_gradient(u, c);
        v1[c] = d.x;
        v2[c] = d.y;
    }
    return VectorField2(u.grid_ptr(), std::move(v1), std::move(v2));
}

void add_cell_gradient_adjoint(const Grid2D& g, std::size_t c, Vec2 b, std::vector<double>& out) {
    const auto n = g.cell_nodes(c);
    const double ax = 0.5 * g.hy() * b.x;  // |cell| * b.x / (2 hx)
    const double ay = 0.5 * g.hx() * b.y;
    out[n[0]] += -ax - ay;
    out[n[1]] += ax - ay;
    out[n[2]] += ax + ay;
    out[n[3]] += -ax + ay;
}

std::vector<double> gradient_adjoint(const VectorField2& b) {
    const Grid2D& g = b.grid();
    std::vector<double> out(g.num_nodes(), 0.0);
    for (std::size_t c = 0; c < g.num_cells(); ++c)
        if (g.cell_in_domain(c)) add_cell_gradient_adjoint(g, c, b.at(c), out);
    return out;
}

} // namespace acdii
