#pragma once

#include <functional>
#include <vector>

#include "acdii/grid.hpp"
#include "acdii/tensor.hpp"

namespace acdii {

/// Node-valued scalar (potentials, boundary data extensions). Masked-out nodes hold NaN.
class ScalarField {
public:
    ScalarField() = default;
    explicit ScalarField(GridPtr grid, double fill = 0.0);
    ScalarField(GridPtr grid, std::vector<double> values);

    static ScalarField sample(GridPtr grid, const std::function<double(double, double)>& fn);

    const Grid2D& grid() const { return *grid_; }
    const GridPtr& grid_ptr() const { return grid_; }
    std::size_t size() const { return values_.size(); }
    double operator[](std::size_t n) const { return values_[n]; }
    double& operator[](std::size_t n) { return values_[n]; }
    const std::vector<double>& values() const { return values_; }
    std::vector<double>& values() { return values_; }

private:
    GridPtr grid_;
    std::vector<double> values_;
};

/// Cell-valued scalar (c, a, inclusion labels). Out-of-domain cells hold NaN.
class CellScalar {
public:
    CellScalar() = default;
    explicit CellScalar(GridPtr grid, double fill = 0.0);
    CellScalar(GridPtr grid, std::vector<double> values);

    /// Samples fn at cell centers.
    static CellScalar sample(GridPtr grid, const std::function<double(double, double)>& fn);

    const Grid2D& grid() const { return *grid_; }
    const GridPtr& grid_ptr() const { return grid_; }
    std::size_t size() const { return values_.size(); }
    double operator[](std::size_t c) const { return values_[c]; }
    double& operator[](std::size_t c) { return values_[c]; }
    const std::vector<double>& values() const { return values_; }
    std::vector<double>& values() { return values_; }

    /// Max over in-domain cells.
    double max() const;

private:
    GridPtr grid_;
    std::vector<double> values_;
};

/// Cell-valued 2-vector (currents, gradients, dual fields).
class VectorField2 {
public:
    VectorField2() = default;
    explicit VectorField2(GridPtr grid);
    VectorField2(GridPtr grid, std::vector<double> v1, std::vector<double> v2);

    const Grid2D& grid() const { return *grid_; }
    const GridPtr& grid_ptr() const { return grid_; }
    std::size_t size() const { return v1_.size(); }
    Vec2 at(std::size_t c) const { return {v1_[c], v2_[c]}; }
    void set(std::size_t c, Vec2 v) { v1_[c] = v.x; v2_[c] = v.y; }
    const std::vector<double>& v1() const { return v1_; }
    const std::vector<double>& v2() const { return v2_; }

private:
    GridPtr grid_;
    std::vector<double> v1_, v2_;
};

/// Cell-valued symmetric tensor, SPD on in-domain cells, with ellipticity bounds
/// m|xi|^2 <= xi.S xi <= M|xi|^2 recorded at construction.
class TensorField2 {
public:
    TensorField2() = default;
    TensorField2(GridPtr grid, Sym2 uniform);
    TensorField2(GridPtr grid, std::vector<Sym2> cells);

    static TensorField2 sample(GridPtr grid, const std::function<Sym2(double, double)>& fn);

    const Grid2D& grid() const { return *grid_; }
    const GridPtr& grid_ptr() const { return grid_; }
    std::size_t size() const { return cells_.size(); }
    const Sym2& operator[](std::size_t c) const { return cells_[c]; }
    const std::vector<Sym2>& cells() const { return cells_; }
    double m() const { return m_; }
    double M() const { return M_; }

    /// c * S cell-wise (c > 0 on in-domain cells).
    TensorField2 scaled(const CellScalar& c) const;

private:
    void validate();

    GridPtr grid_;
    std::vector<Sym2> cells_;
    double m_ = 0.0, M_ = 0.0;
};

/// Cell-centred gradient of the bilinear interpolant; exact for affine u.
Vec2 cell_gradient(const ScalarField& u, std::size_t c);
VectorField2 gradient(const ScalarField& u);

/// Transpose of `gradient` with cell-area weights: out_n = sum_c |cell| B_c . d(grad_c u)/du_n.
/// The discrete divergence is -gradient_adjoint(B) / |cell|.
std::vector<double> gradient_adjoint(const VectorField2& b);

/// Accumulates |cell| * B_c . d(grad_c u)/du_n for a single cell into out.
void add_cell_gradient_adjoint(const Grid2D& g, std::size_t c, Vec2 b, std::vector<double>& out);

} // namespace acdii
