#pragma once

#include <array>
#include <cstdint>
#include <memory>
#include <vector>

#include "acdii/tensor.hpp"

namespace acdii {

/// Rectangular node grid with a node-level domain mask.
///
/// Nodes are stored row-major (x fastest): node (i, j) has index j*nx + i and
/// sits at (x0 + i*hx, y0 + j*hy). Cell (i, j) is the square spanned by nodes
/// (i..i+1, j..j+1) and has index j*(nx-1) + i. A cell is in the domain when all
/// four of its nodes are masked in.
class Grid2D {
public:
    Grid2D(int nx, int ny, double hx, double hy, double x0 = 0.0, double y0 = 0.0,
           std::vector<std::uint8_t> mask = {});

    /// [x0, x1] x [y0, y1] sampled with nx x ny nodes, full mask.
    static Grid2D rectangle(int nx, int ny, double x0, double x1, double y0, double y1);
    static Grid2D unit_square(int n) { return rectangle(n, n, 0.0, 1.0, 0.0, 1.0); }

    int nx() const { return nx_; }
    int ny() const { return ny_; }
    int cnx() const { return nx_ - 1; }
    int cny() const { return ny_ - 1; }
    double hx() const { return hx_; }
    double hy() const { return hy_; }
    double x0() const { return x0_; }
    double y0() const { return y0_; }
    double cell_area() const { return hx_ * hy_; }

    std::size_t num_nodes() const { return static_cast<std::size_t>(nx_) * ny_; }
    std::size_t num_cells() const { return static_cast<std::size_t>(nx_ - 1) * (ny_ - 1); }

    std::size_t node(int i, int j) const { return static_cast<std::size_t>(j) * nx_ + i; }
    std::size_t cell(int i, int j) const { return static_cast<std::size_t>(j) * (nx_ - 1) + i; }
    int node_i(std::size_t n) const { return static_cast<int>(n % nx_); }
    int node_j(std::size_t n) const { return static_cast<int>(n / nx_); }
    int cell_i(std::size_t c) const { return static_cast<int>(c % (nx_ - 1)); }
    int cell_j(std::size_t c) const { return static_cast<int>(c / (nx_ - 1)); }

    double x(int i) const { return x0_ + i * hx_; }
    double y(int j) const { return y0_ + j * hy_; }
    Vec2 node_pos(std::size_t n) const { return {x(node_i(n)), y(node_j(n))}; }
    Vec2 cell_center(std::size_t c) const {
        return {x0_ + (cell_i(c) + 0.5) * hx_, y0_ + (cell_j(c) + 0.5) * hy_};
    }

    /// Corner nodes of cell c in the order (0,0), (1,0), (1,1), (0,1).
    std::array<std::size_t, 4> cell_nodes(std::size_t c) const {
        const int i = cell_i(c), j = cell_j(c);
        return {node(i, j), node(i + 1, j), node(i + 1, j + 1), node(i, j + 1)};
    }

    bool in_domain(std::size_t n) const { return mask_[n] != 0; }
    bool cell_in_domain(std::size_t c) const { return cell_mask_[c] != 0; }
    bool is_boundary(std::size_t n) const { return boundary_flag_[n] != 0; }

    const std::vector<std::uint8_t>& mask() const { return mask_; }
    const std::vector<std::uint8_t>& cell_mask() const { return cell_mask_; }
    const std::vector<std::size_t>& boundary_ids() const { return boundary_ids_; }
    bool full_mask() const { return full_; }

    bool same_shape(const Grid2D& o) const;

private:
    int nx_, ny_;
    double hx_, hy_, x0_, y0_;
    bool full_ = true;
    std::vector<std::uint8_t> mask_;
    std::vector<std::uint8_t> cell_mask_;
    std::vector<std::uint8_t> boundary_flag_;
    std::vector<std::size_t> boundary_ids_;
};

using GridPtr = std::shared_ptr<const Grid2D>;

inline GridPtr make_grid(Grid2D g) { return std::make_shared<const Grid2D>(std::move(g)); }

} // namespace acdii
