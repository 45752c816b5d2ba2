#pragma once

#include <cstdint>
#include <vector>

#include "acdii/fields.hpp"

namespace acdii {

using CellMask = std::vector<std::uint8_t>;

/// Perfectly conducting and insulating inclusions as cell masks, one mask per
/// connected component.
struct InclusionSet {
    std::vector<CellMask> perfect;
    std::vector<CellMask> insulating;

    static constexpr int kInsulatingBase = 255;

    bool empty() const { return perfect.empty() && insulating.empty(); }

    /// Throws InputError when a mask is malformed, masks overlap or their closures
    /// touch, a closure reaches the domain boundary, a component is not simply
    /// connected, or the background is disconnected.
    void validate(const Grid2D& g) const;

    /// 1 on cells of any perfect component.
    CellMask perfect_cells(const Grid2D& g) const;
    /// 1 on cells of any insulating component.
    CellMask insulating_cells(const Grid2D& g) const;

    /// Per-cell labels: 0 background, 1..N perfect components, 255+j insulating component j.
    CellScalar labels(GridPtr g) const;
    static InclusionSet from_labels(const CellScalar& labels);
};

/// Nodes belonging to the closure of the cells in mask.
std::vector<std::size_t> closure_nodes(const Grid2D& g, const CellMask& mask);

/// 4-connected components of the cells with mask set, as separate masks, ordered by first cell.
std::vector<CellMask> cell_components(const Grid2D& g, const CellMask& mask);

} // namespace acdii

namespace acdii {

/// Cells whose centre lies in the closed disk.
CellMask disk_cells(const Grid2D& g, Vec2 center, double radius);
/// Cells whose centre lies in [x0,x1] x [y0,y1].
CellMask rect_cells(const Grid2D& g, double x0, double x1, double y0, double y1);

} // namespace acdii
