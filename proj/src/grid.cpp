#include "acdii/grid.hpp"

#include <cmath>
#include <string>

#include "acdii/error.hpp"

namespace acdii {

namespace {

// Number of 4-connected components among nodes with flag set.
int count_components(const std::vector<std::uint8_t>& flag, int nx, int ny) {
    std::vector<int> seen(flag.size(), 0);
    std::vector<std::size_t> stack;
    int comps = 0;
    for (std::size_t s = 0; s < flag.size(); ++s) {
        if (!flag[s] || seen[s]) continue;
        ++comps;
        seen[s] = 1;
        stack.push_back(s);
        while (!stack.empty()) {
            const std::size_t n = stack.back();
            stack.pop_back();
            const int i = static_cast<int>(n % nx), j = static_cast<int>(n / nx);
            const int di[4] = {1, -1, 0, 0}, dj[4] = {0, 0, 1, -1};
            for (int k = 0; k < 4; ++k) {
                const int a = i + di[k], b = j + dj[k];
                if (a < 0 || b < 0 || a >= nx || b >= ny) continue;
                const std::size_t m = static_cast<std::size_t>(b) * nx + a;
                if (flag[m] && !seen[m]) {
                    seen[m] = 1;
                    stack.push_back(m);
                }
            }
        }
    }
    return comps;
}

} // namespace

Grid2D::Grid2D(int nx, int ny, double hx, double hy, double x0, double y0,
               std::vector<std::uint8_t> mask)
    : nx_(nx), ny_(ny), hx_(hx), hy_(hy), x0_(x0), y0_(y0), mask_(std::move(mask)) {
    if (nx < 3 || ny < 3) throw InputError("grid: nx and ny must be >= 3");
    if (!(hx > 0.0) || !(hy > 0.0) || !std::isfinite(hx) || !std::isfinite(hy))
        throw InputError("grid: spacing must be positive");
    if (mask_.empty()) mask_.assign(num_nodes(), 1);
    if (mask_.size() != num_nodes()) throw InputError("grid: mask size mismatch");
    for (auto& m : mask_) m = m ? 1 : 0;

    cell_mask_.assign(num_cells(), 0);
    std::size_t active_cells = 0;
    for (std::size_t c = 0; c < num_cells(); ++c) {
        bool in = true;
        for (auto n : cell_nodes(c)) in = in && mask_[n];
        cell_mask_[c] = in ? 1 : 0;
        active_cells += in;
    }
    if (active_cells == 0) throw InputError("grid: empty domain");

    boundary_flag_.assign(num_nodes(), 0);
    std::vector<std::uint8_t> interior(num_nodes(), 0);
    for (int j = 0; j < ny_; ++j) {
        for (int i = 0; i < nx_; ++i) {
            const std::size_t n = node(i, j);
            if (!mask_[n]) {
                full_ = false;
                continue;
            }
            bool open = false;
            const int di[4] = {1, -1, 0, 0}, dj[4] = {0, 0, 1, -1};
            for (int k = 0; k < 4; ++k) {
                const int a = i + di[k], b = j + dj[k];
                if (a < 0 || b < 0 || a >= nx_ || b >= ny_ || !mask_[node(a, b)]) open = true;
            }
            if (open) {
                boundary_flag_[n] = 1;
                boundary_ids_.push_back(n);
            } else {
                interior[n] = 1;
            }
        }
    }
    if (count_components(interior, nx_, ny_) > 1)
        throw InputError("grid: interior nodes are not 4-connected");
}

Grid2D Grid2D::rectangle(int nx, int ny, double x0, double x1, double y0, double y1) {
    if (nx < 3 || ny < 3) throw InputError("grid: nx and ny must be >= 3");
    return Grid2D(nx, ny, (x1 - x0) / (nx - 1), (y1 - y0) / (ny - 1), x0, y0);
}

bool Grid2D::same_shape(const Grid2D& o) const {
    return nx_ == o.nx_ && ny_ == o.ny_ && hx_ == o.hx_ && hy_ == o.hy_ && x0_ == o.x0_ &&
           y0_ == o.y0_ && mask_ == o.mask_;
}

} // namespace acdii
