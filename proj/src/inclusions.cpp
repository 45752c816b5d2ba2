#include "acdii/inclusions.hpp"

#include <algorithm>
#include <cmath>
#include <map>

#include "acdii/error.hpp"

namespace acdii {

namespace {

// Components of cells with mask[c] == want, 4-connected; cells outside [0,cnx)x[0,cny)
// are ignored. Returns per-cell component id or -1.
std::vector<int> label_cells(const Grid2D& g, const CellMask& mask, bool want, int& count) {
    const int cnx = g.cnx(), cny = g.cny();
    std::vector<int> id(g.num_cells(), -1);
    std::vector<std::size_t> stack;
    count = 0;
    for (std::size_t s = 0; s < g.num_cells(); ++s) {
        if ((mask[s] != 0) != want || id[s] >= 0) continue;
        id[s] = count;
        stack.push_back(s);
        while (!stack.empty()) {
            const std::size_t c = stack.back();
            stack.pop_back();
            const int i = g.cell_i(c), j = g.cell_j(c);
            const int di[4] = {1, -1, 0, 0}, dj[4] = {0, 0, 1, -1};
            for (int k = 0; k < 4; ++k) {
                const int a = i + di[k], b = j + dj[k];
                if (a < 0 || b < 0 || a >= cnx || b >= cny) continue;
                const std::size_t m = g.cell(a, b);
                if ((mask[m] != 0) == want && id[m] < 0) {
                    id[m] = count;
                    stack.push_back(m);
                }
            }
        }
        ++count;
    }
    return id;
}

} // namespace

std::vector<std::size_t> closure_nodes(const Grid2D& g, const CellMask& mask) {
    std::vector<std::uint8_t> hit(g.num_nodes(), 0);
    for (std::size_t c = 0; c < g.num_cells(); ++c)
        if (mask[c])
            for (auto n : g.cell_nodes(c)) hit[n] = 1;
    std::vector<std::size_t> out;
    for (std::size_t n = 0; n < hit.size(); ++n)
        if (hit[n]) out.push_back(n);
    return out;
}

std::vector<CellMask> cell_components(const Grid2D& g, const CellMask& mask) {
    int count = 0;
    const auto id = label_cells(g, mask, true, count);
    std::vector<CellMask> out(count, CellMask(g.num_cells(), 0));
    for (std::size_t c = 0; c < id.size(); ++c)
        if (id[c] >= 0) out[id[c]][c] = 1;
    return out;
}

void InclusionSet::validate(const Grid2D& g) const {
    std::vector<int> owner_cell(g.num_cells(), -1);
    std::vector<int> owner_node(g.num_nodes(), -1);
    int idx = 0;
    auto check = [&](const CellMask& m, const char* what) {
        if (m.size() != g.num_cells()) throw InputError(std::string(what) + " inclusion mask has wrong size");
        std::size_t count = 0;
        for (std::size_t c = 0; c < m.size(); ++c) {
            if (!m[c]) continue;
            ++count;
            if (!g.cell_in_domain(c)) throw InputError(std::string(what) + " inclusion outside the domain");
            if (owner_cell[c] >= 0) throw InputError("inclusion overlap");
            owner_cell[c] = idx;
        }
        if (count == 0) throw InputError(std::string(what) + " inclusion is empty");
        int comps = 0;
        label_cells(g, m, true, comps);
        if (comps != 1) throw InputError(std::string(what) + " inclusion is not connected");
        int holes = 0;
        label_cells(g, m, false, holes);
        if (holes > 1) throw InputError(std::string(what) + " inclusion is not simply connected");
        for (auto n : closure_nodes(g, m)) {
            if (g.is_boundary(n)) throw InputError(std::string(what) + " inclusion touches the domain boundary");
            if (owner_node[n] >= 0 && owner_node[n] != idx) throw InputError("inclusion overlap");
            owner_node[n] = idx;
        }
        ++idx;
    };
    for (const auto& m : perfect) check(m, "perfect");
    for (const auto& m : insulating) check(m, "insulating");

    CellMask background(g.num_cells(), 0);
    for (std::size_t c = 0; c < g.num_cells(); ++c) background[c] = g.cell_in_domain(c) && owner_cell[c] < 0;
    int comps = 0;
    label_cells(g, background, true, comps);
    if (comps != 1) throw InputError("complement of the inclusions is not connected");
}

CellMask InclusionSet::perfect_cells(const Grid2D& g) const {
    CellMask out(g.num_cells(), 0);
    for (const auto& m : perfect)
        for (std::size_t c = 0; c < out.size(); ++c) out[c] |= m[c];
    return out;
}

CellMask InclusionSet::insulating_cells(const Grid2D& g) const {
    CellMask out(g.num_cells(), 0);
    for (const auto& m : insulating)
        for (std::size_t c = 0; c < out.size(); ++c) out[c] |= m[c];
    return out;
}

CellScalar InclusionSet::labels(GridPtr g) const {
    CellScalar out(g, 0.0);
    for (std::size_t k = 0; k < perfect.size(); ++k)
        for (std::size_t c = 0; c < out.size(); ++c)
            if (perfect[k][c]) out[c] = static_cast<double>(k + 1);
    for (std::size_t k = 0; k < insulating.size(); ++k)
        for (std::size_t c = 0; c < out.size(); ++c)
            if (insulating[k][c]) out[c] = static_cast<double>(kInsulatingBase + k);
    return out;
}

InclusionSet InclusionSet::from_labels(const CellScalar& labels) {
    const Grid2D& g = labels.grid();
    std::map<int, CellMask> perf, ins;
    for (std::size_t c = 0; c < g.num_cells(); ++c) {
        if (!g.cell_in_domain(c)) continue;
        const double v = labels[c];
        if (v != std::round(v) || v < 0) throw InputError("inclusion labels must be non-negative integers");
        const int l = static_cast<int>(v);
        if (l == 0) continue;
        auto& dst = l >= kInsulatingBase ? ins : perf;
        auto& m = dst[l];
        if (m.empty()) m.assign(g.num_cells(), 0);
        m[c] = 1;
    }
    InclusionSet s;
    for (auto& [l, m] : perf) s.perfect.push_back(std::move(m));
    for (auto& [l, m] : ins) s.insulating.push_back(std::move(m));
    return s;
}

} // namespace acdii

namespace acdii {

CellMask disk_cells(const Grid2D& g, Vec2 center, double radius) {
    CellMask m(g.num_cells(), 0);
    for (std::size_t c = 0; c < m.size(); ++c)
        m[c] = g.cell_in_domain(c) && norm(g.cell_center(c) - center) <= radius;
    return m;
}

CellMask rect_cells(const Grid2D& g, double x0, double x1, double y0, double y1) {
    CellMask m(g.num_cells(), 0);
    for (std::size_t c = 0; c < m.size(); ++c) {
        const Vec2 p = g.cell_center(c);
        m[c] = g.cell_in_domain(c) && p.x >= x0 && p.x <= x1 && p.y >= y0 && p.y <= y1;
    }
    return m;
}

} // namespace acdii
