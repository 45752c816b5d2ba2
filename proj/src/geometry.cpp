#include "acdii/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <map>

#include "acdii/error.hpp"
#include "acdii/inverse.hpp"

namespace acdii {

Sym2 metric_cell(double a, const Sym2& sigma0, int n) {
    if (n < 2) throw InputError("metric: dimension must be >= 2");
    const double s = std::pow(sigma0.det() * a * a, 1.0 / (n - 1));
    return sigma0.inverse().scaled(s);
}

MetricField build_metric(const CellScalar& a, const TensorField2& sigma0, int n) {
    const Grid2D& g = a.grid();
    MetricField m{a.grid_ptr(), n, std::vector<Sym2>(g.num_cells(), Sym2{0, 0, 0}),
                  std::vector<double>(g.num_cells(), 0.0), CellMask(g.num_cells(), 0)};
    for (std::size_t c = 0; c < g.num_cells(); ++c) {
        if (!g.cell_in_domain(c)) continue;
        if (!(a[c] > 0.0)) {
            m.degenerate[c] = 1;
            continue;
        }
        m.g[c] = metric_cell(a[c], sigma0[c], n);
        m.det_g[c] = m.g[c].det();
    }
    return m;
}

CurvatureResidual curvature_residual(const ScalarField& u, const MetricField& metric, double delta, double margin) {
    const Grid2D& g = u.grid();
    CellMask ok(g.num_cells(), 0);
    VectorField2 v(u.grid_ptr());
    for (std::size_t c = 0; c < g.num_cells(); ++c) {
        v.set(c, {0.0, 0.0});
        if (!g.cell_in_domain(c) || metric.degenerate[c]) continue;
        const Vec2 du = cell_gradient(u, c);
        if (!(norm(du) > delta)) continue;
        const Sym2 ginv = metric.g[c].inverse();
        const Vec2 w = ginv.apply(du);
        const double len = std::sqrt(dot(w, du));
        if (!(len > 0.0)) continue;
        v.set(c, (std::sqrt(metric.det_g[c]) / len) * w);
        ok[c] = 1;
    }
    const std::vector<double> adj = gradient_adjoint(v);
    CurvatureResidual r{ScalarField(u.grid_ptr(), std::nan("")), 0.0, 0};
    double sum = 0.0;
    for (int j = 1; j < g.ny() - 1; ++j) {
        for (int i = 1; i < g.nx() - 1; ++i) {
            const std::size_t n = g.node(i, j);
            if (!g.in_domain(n) || g.is_boundary(n)) continue;
            if (!ok[g.cell(i - 1, j - 1)] || !ok[g.cell(i, j - 1)] || !ok[g.cell(i - 1, j)] || !ok[g.cell(i, j)]) continue;
            if (margin > 0.0) {
                const double di = std::min(i, g.nx() - 1 - i) * g.hx(), dj = std::min(j, g.ny() - 1 - j) * g.hy();
                if (std::min(di, dj) < margin) continue;
            }
            const double div = -adj[n] / g.cell_area();
            r.residual[n] = div;
            sum += div * div * g.cell_area();
            ++r.evaluated;
        }
    }
    r.l2 = std::sqrt(sum);
    return r;
}

double LevelSetCurve::length() const {
    double s = 0.0;
    for (double l : lengths) s += l;
    return s;
}

namespace {

struct Segment {
    std::size_t k0, k1, cell;
};

} // namespace

std::vector<LevelSetCurve> extract_level_set(const ScalarField& u, double lambda) {
    const Grid2D& g = u.grid();
    std::map<std::size_t, Vec2> points;
    std::vector<Segment> segs;

    auto hkey = [&](int i, int j) { return 2 * g.node(i, j); };
    auto vkey = [&](int i, int j) { return 2 * g.node(i, j) + 1; };
    auto crossing = [&](std::size_t key, std::size_t p, std::size_t q) {
        if (points.count(key)) return;
        const double t = (lambda - u[p]) / (u[q] - u[p]);
        const Vec2 a = g.node_pos(p), b = g.node_pos(q);
        points[key] = a + t * (b - a);
    };

    for (std::size_t c = 0; c < g.num_cells(); ++c) {
        if (!g.cell_in_domain(c)) continue;
        const auto nd = g.cell_nodes(c);
        const int i = g.cell_i(c), j = g.cell_j(c);
        bool up[4];
        for (int k = 0; k < 4; ++k) up[k] = u[nd[k]] > lambda;
        const int count = up[0] + up[1] + up[2] + up[3];
        if (count == 0 || count == 4) continue;
        // edges: 0 bottom (n0-n1), 1 right (n1-n2), 2 top (n3-n2), 3 left (n0-n3)
        const std::size_t key[4] = {hkey(i, j), vkey(i + 1, j), hkey(i, j + 1), vkey(i, j)};
        const int la[4] = {0, 1, 3, 0}, lb[4] = {1, 2, 2, 3};
        bool cut[4];
        for (int e = 0; e < 4; ++e) {
            const std::size_t ea[4] = {nd[0], nd[1], nd[3], nd[0]}, eb[4] = {nd[1], nd[2], nd[2], nd[3]};
            cut[e] = up[la[e]] != up[lb[e]];
            if (cut[e]) crossing(key[e], ea[e], eb[e]);
        }
        if (count == 2 && up[0] == up[2]) {
            const double centre = 0.25 * (u[nd[0]] + u[nd[1]] + u[nd[2]] + u[nd[3]]);
            const bool cup = centre > lambda;
            // corner k is bounded by edges (k-1 mod 4, k) with the edge numbering above: 0:{3,0} 1:{0,1} 2:{1,2} 3:{2,3}
            for (int k = 0; k < 4; ++k)
                if (up[k] != cup) segs.push_back({key[(k + 3) % 4], key[k], c});
        } else {
            int e0 = -1, e1 = -1;
            for (int e = 0; e < 4; ++e)
                if (cut[e]) (e0 < 0 ? e0 : e1) = e;
            segs.push_back({key[e0], key[e1], c});
        }
    }

    std::map<std::size_t, std::vector<std::size_t>> at;
    for (std::size_t s = 0; s < segs.size(); ++s) {
        at[segs[s].k0].push_back(s);
        at[segs[s].k1].push_back(s);
    }
    std::vector<std::uint8_t> used(segs.size(), 0);

    auto trace = [&](std::size_t start_key, bool closed) {
        LevelSetCurve cv;
        cv.level = lambda;
        cv.closed = closed;
        std::size_t key = start_key;
        cv.vertices.push_back(points.at(key));
        for (;;) {
            std::size_t next = segs.size();
            for (std::size_t s : at[key])
                if (!used[s]) {
                    next = s;
                    break;
                }
            if (next == segs.size()) break;
            used[next] = 1;
            const Segment& sg = segs[next];
            key = sg.k0 == key ? sg.k1 : sg.k0;
            const Vec2 p0 = cv.vertices.back(), p1 = points.at(key);
            cv.vertices.push_back(p1);
            cv.cells.push_back(sg.cell);
            const Vec2 d = p1 - p0;
            const double len = norm(d);
            Vec2 nrm = len > 0.0 ? Vec2{d.y / len, -d.x / len} : Vec2{0.0, 0.0};
            if (len == 0.0) {
                const Vec2 gu = cell_gradient(u, sg.cell);
                const double gn = norm(gu);
                if (gn > 0.0) nrm = (1.0 / gn) * gu;
            } else if (dot(nrm, cell_gradient(u, sg.cell)) < 0.0) {
                nrm = -1.0 * nrm;
            }
            cv.normals.push_back(nrm);
            cv.lengths.push_back(len);
            if (key == start_key) break;
        }
        return cv;
    };

    std::vector<LevelSetCurve> curves;
    for (const auto& [key, list] : at) {
        if (list.size() != 1 || used[list[0]]) continue;
        curves.push_back(trace(key, false));
    }
    for (const auto& [key, list] : at) {
        bool any = false;
        for (std::size_t s : list) any = any || !used[s];
        if (any) curves.push_back(trace(key, true));
    }
    return curves;
}

ScalarField node_average(const CellScalar& a) {
    const Grid2D& g = a.grid();
    std::vector<double> sum(g.num_nodes(), 0.0), cnt(g.num_nodes(), 0.0);
    for (std::size_t c = 0; c < g.num_cells(); ++c) {
        if (!g.cell_in_domain(c)) continue;
        for (auto n : g.cell_nodes(c)) {
            sum[n] += a[c];
            cnt[n] += 1.0;
        }
    }
    ScalarField out(a.grid_ptr(), std::nan(""));
    for (std::size_t n = 0; n < g.num_nodes(); ++n)
        if (cnt[n] > 0.0) out[n] = sum[n] / cnt[n];
    return out;
}

double interpolate(const ScalarField& v, Vec2 p) {
    const Grid2D& g = v.grid();
    const double fx = (p.x - g.x0()) / g.hx(), fy = (p.y - g.y0()) / g.hy();
    const int i = std::clamp(static_cast<int>(std::floor(fx)), 0, g.nx() - 2);
    const int j = std::clamp(static_cast<int>(std::floor(fy)), 0, g.ny() - 2);
    const double s = fx - i, t = fy - j;
    return (1 - s) * (1 - t) * v[g.node(i, j)] + s * (1 - t) * v[g.node(i + 1, j)] + s * t * v[g.node(i + 1, j + 1)] +
           (1 - s) * t * v[g.node(i, j + 1)];
}

namespace {

double weighted_length(const std::vector<LevelSetCurve>& curves, const ScalarField& an, const TensorField2* sigma0) {
    double sum = 0.0;
    for (const auto& cv : curves) {
        for (std::size_t s = 0; s < cv.lengths.size(); ++s) {
            const Vec2 mid = 0.5 * (cv.vertices[s] + cv.vertices[s + 1]);
            double w = interpolate(an, mid);
            if (sigma0) w *= norm_in((*sigma0)[cv.cells[s]], cv.normals[s]);
            sum += cv.lengths[s] * w;
        }
    }
    return sum;
}

} // namespace

double area_functional(const std::vector<LevelSetCurve>& curves, const CellScalar& a) {
    return weighted_length(curves, node_average(a), nullptr);
}

double weighted_perimeter(const std::vector<LevelSetCurve>& curves, const CellScalar& a, const TensorField2& sigma0) {
    return weighted_length(curves, node_average(a), &sigma0);
}

std::vector<double> regular_levels(const ScalarField& u, int count, double band) {
    const Grid2D& g = u.grid();
    std::vector<double> interior, critical;
    double lo = INFINITY, hi = -INFINITY;
    for (std::size_t n = 0; n < g.num_nodes(); ++n) {
        if (!g.in_domain(n)) continue;
        lo = std::min(lo, u[n]);
        hi = std::max(hi, u[n]);
        if (!g.is_boundary(n)) interior.push_back(u[n]);
    }
    critical.push_back(lo);
    critical.push_back(hi);
    const int ri[8] = {1, 1, 0, -1, -1, -1, 0, 1}, rj[8] = {0, 1, 1, 1, 0, -1, -1, -1};
    for (int j = 1; j < g.ny() - 1; ++j) {
        for (int i = 1; i < g.nx() - 1; ++i) {
            const std::size_t n = g.node(i, j);
            if (!g.in_domain(n) || g.is_boundary(n)) continue;
            int sgn[8];
            bool full = true;
            for (int k = 0; k < 8; ++k) {
                const std::size_t m = g.node(i + ri[k], j + rj[k]);
                full = full && g.in_domain(m);
                sgn[k] = u[m] > u[n] ? 1 : -1;
            }
            if (!full) continue;
            int changes = 0;
            for (int k = 0; k < 8; ++k) changes += sgn[k] != sgn[(k + 1) % 8];
            if (changes == 0 || changes >= 4) critical.push_back(u[n]);
        }
    }
    std::sort(interior.begin(), interior.end());
    std::vector<double> levels;
    if (interior.empty()) return levels;
    const double width = band * (hi - lo);
    for (int q = 0; q < count; ++q) {
        const double pos = (q + 0.5) / count * (interior.size() - 1);
        const std::size_t k = static_cast<std::size_t>(pos);
        const double frac = pos - k;
        const double lam = k + 1 < interior.size() ? (1 - frac) * interior[k] + frac * interior[k + 1] : interior[k];
        bool near = false;
        for (double cv : critical) near = near || std::abs(lam - cv) <= width;
        if (!near) levels.push_back(lam);
    }
    return levels;
}

AreaMinimalityReport area_minimality_audit(const ScalarField& u, const std::vector<ScalarField>& competitors,
                                           const CellScalar& a, const TensorField2& sigma0,
                                           const std::vector<double>& levels, double tolerance) {
    const Grid2D& g = u.grid();
    double scale = 1.0;
    for (auto n : g.boundary_ids()) scale = std::max(scale, std::abs(u[n]));
    for (const auto& v : competitors) {
        if (!v.grid().same_shape(g)) throw InputError("area_minimality_audit: competitor on a different grid");
        for (auto n : g.boundary_ids())
            if (std::abs(v[n] - u[n]) > 1e-12 * scale)
                throw InputError("area_minimality_audit: competitor boundary trace differs from u");
    }
    AreaMinimalityReport r;
    r.tolerance = tolerance;
    r.min_margin = r.min_weighted_margin = INFINITY;
    const ScalarField an = node_average(a);
    for (double lam : levels) {
        const auto cu = extract_level_set(u, lam);
        const double au = weighted_length(cu, an, nullptr), wu = weighted_length(cu, an, &sigma0);
        for (std::size_t k = 0; k < competitors.size(); ++k) {
            const auto cv = extract_level_set(competitors[k], lam);
            AreaComparison row{lam, k, au, weighted_length(cv, an, nullptr), wu, weighted_length(cv, an, &sigma0)};
            if (row.area_u > (1.0 + tolerance) * row.area_v) ++r.violations;
            if (row.weighted_u > (1.0 + tolerance) * row.weighted_v) ++r.weighted_violations;
            r.min_margin = std::min(r.min_margin, (row.area_v - row.area_u) / row.area_u);
            r.min_weighted_margin = std::min(r.min_weighted_margin, (row.weighted_v - row.weighted_u) / row.weighted_u);
            r.rows.push_back(row);
        }
    }
    if (r.rows.empty()) r.min_margin = r.min_weighted_margin = 0.0;
    return r;
}

ScalarField truncation(const ScalarField& u, double lambda, double eps) {
    if (!(eps > 0.0)) throw InputError("truncation: eps must be positive");
    ScalarField w = u;
    for (auto& v : w.values())
        if (!std::isnan(v)) v = std::min(eps, std::max(v - lambda, 0.0)) / eps;
    return w;
}

TruncationReport truncation_limit_audit(const ScalarField& u, const CellScalar& a, const TensorField2& sigma0,
                                        double lambda, const std::vector<double>& eps_ladder) {
    TruncationReport r;
    r.level = lambda;
    r.eps = eps_ladder;
    for (double e : eps_ladder) r.values.push_back(weighted_tv(truncation(u, lambda, e), a, sigma0));
    const auto curves = extract_level_set(u, lambda);
    r.euclidean = area_functional(curves, a);
    r.weighted = weighted_perimeter(curves, a, sigma0);
    if (!r.values.empty()) {
        const double last = r.values.back();
        r.rel_to_euclidean = std::abs(last - r.euclidean) / r.euclidean;
        r.rel_to_weighted = std::abs(last - r.weighted) / r.weighted;
        if (r.values.size() > 1) r.cauchy = std::abs(last - r.values[r.values.size() - 2]) / std::abs(last);
    }
    return r;
}

std::string curves_csv(const std::vector<LevelSetCurve>& curves) {
    std::string out = "level,curve,x,y\n";
    char buf[128];
    for (std::size_t k = 0; k < curves.size(); ++k)
        for (const Vec2& p : curves[k].vertices) {
            std::snprintf(buf, sizeof buf, "%.17g,%zu,%.17g,%.17g\n", curves[k].level, k, p.x, p.y);
            out += buf;
        }
    return out;
}

} // namespace acdii
