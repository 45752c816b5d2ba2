#pragma once

#include <string>
#include <vector>

#include "acdii/inclusions.hpp"

namespace acdii {

/// Data metric g = (det sigma0 * a^2)^(1/(n-1)) sigma0^-1, per cell.
struct MetricField {
    GridPtr grid;
    int n = 2;
    std::vector<Sym2> g;       ///< zero tensor on degenerate cells
    std::vector<double> det_g;
    CellMask degenerate;       ///< a = 0: the metric vanishes
};

/// Metric of a single cell for spatial dimension n (the 2x2 block of sigma0 is used as given).
Sym2 metric_cell(double a, const Sym2& sigma0, int n = 2);

MetricField build_metric(const CellScalar& a, const TensorField2& sigma0, int n = 2);

struct CurvatureResidual {
    ScalarField residual;  ///< NaN where not evaluated
    double l2 = 0.0;       ///< (sum over evaluated nodes of r^2 * cell area)^(1/2)
    std::size_t evaluated = 0;
};

/// Discrete divergence of sqrt|g| g^-1 grad u / ||g^-1 grad u||_g at interior nodes whose
/// neighbouring cells are all non-degenerate with |grad u| > delta. Nodes closer than
/// margin to the bounding box of the grid are skipped.
CurvatureResidual curvature_residual(const ScalarField& u, const MetricField& metric, double delta = 0.0,
                                     double margin = 0.0);

/// Polyline piece of u^-1(lambda). Segment k joins vertices k and k+1 and lies in cells[k].
struct LevelSetCurve {
    double level = 0.0;
    bool closed = false;
    std::vector<Vec2> vertices;
    std::vector<std::size_t> cells;
    std::vector<Vec2> normals;  ///< unit, pointing towards increasing u
    std::vector<double> lengths;

    double length() const;
};

/// Marching squares on in-domain cells with linear interpolation along edges. A node is
/// "above" when u > lambda. Saddle cells are split according to the cell-centre value of
/// the bilinear interpolant. Curves are ordered by their first edge key.
std::vector<LevelSetCurve> extract_level_set(const ScalarField& u, double lambda);

/// Node values as the mean of the adjacent in-domain cells.
ScalarField node_average(const CellScalar& a);
/// Bilinear interpolation of a node field at p (p inside the grid bounding box).
double interpolate(const ScalarField& v, Vec2 p);

/// sum over segments of length * a(midpoint), a interpolated bilinearly from node averages.
double area_functional(const std::vector<LevelSetCurve>& curves, const CellScalar& a);
/// As area_functional, with the extra factor (sigma0 nu . nu)^(1/2) of the segment's cell.
double weighted_perimeter(const std::vector<LevelSetCurve>& curves, const CellScalar& a, const TensorField2& sigma0);

/// Levels at quantiles (i + 1/2)/count of u over interior nodes, skipping levels within
/// band * range(u) of a critical value (extremes of u, interior local extrema and saddles).
std::vector<double> regular_levels(const ScalarField& u, int count, double band = 1e-3);

struct AreaComparison {
    double level = 0.0;
    std::size_t competitor = 0;
    double area_u = 0.0, area_v = 0.0;          ///< Euclidean weight
    double weighted_u = 0.0, weighted_v = 0.0;  ///< sigma0 weight
};

struct AreaMinimalityReport {
    std::vector<AreaComparison> rows;
    double tolerance = 0.01;
    int violations = 0;           ///< area_u > (1 + tolerance) area_v
    int weighted_violations = 0;  ///< same with the sigma0 weight
    double min_margin = 0.0;      ///< min of (area_v - area_u) / area_u
    double min_weighted_margin = 0.0;
};

/// Throws InputError when a competitor's boundary trace differs from u's.
AreaMinimalityReport area_minimality_audit(const ScalarField& u, const std::vector<ScalarField>& competitors,
                                           const CellScalar& a, const TensorField2& sigma0,
                                           const std::vector<double>& levels, double tolerance = 0.01);

/// w_{lambda,eps} = min(eps, max(u - lambda, 0)) / eps.
ScalarField truncation(const ScalarField& u, double lambda, double eps);

struct TruncationReport {
    double level = 0.0;
    std::vector<double> eps;
    std::vector<double> values;  ///< F[u_{lambda,eps}]
    double euclidean = 0.0;      ///< int_{u = lambda} a dH^1
    double weighted = 0.0;       ///< int_{u = lambda} a (sigma0 nu . nu)^(1/2) dH^1
    double rel_to_euclidean = 0.0;
    double rel_to_weighted = 0.0;
    double cauchy = 0.0;         ///< |F_last - F_prev| / F_last
};

TruncationReport truncation_limit_audit(const ScalarField& u, const CellScalar& a, const TensorField2& sigma0,
                                        double lambda, const std::vector<double>& eps_ladder);

/// One line per vertex: level,curve,x,y.
std::string curves_csv(const std::vector<LevelSetCurve>& curves);

} // namespace acdii
