#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "acdii/inverse.hpp"

namespace acdii {

/// Scalar coefficient: "constant" (value) or "bump" (1 + amplitude * gaussian of width at center).
struct ScalarSpec {
    std::string type = "constant";
    double value = 1.0;
    double amplitude = 0.5;
    double width = 0.15;
    Vec2 center{0.5, 0.5};
};

/// Tensor: "constant" (s11, s12, s22) or "rotated" (R(angle) diag(eigenvalues) R(angle)^T).
struct TensorSpec {
    std::string type = "constant";
    Sym2 tensor = Sym2::identity();
    double l1 = 1.0, l2 = 1.0, angle = 0.0;
};

/// Inclusion: label perfect | insulating, shape disk (center, radius) or rect (x, y intervals).
struct ShapeSpec {
    std::string label;
    std::string shape;
    Vec2 center{0.0, 0.0};
    double radius = 0.0;
    double x0 = 0.0, x1 = 0.0, y0 = 0.0, y1 = 0.0;
};

struct GeometrySettings {
    int levels = 20;
    int coarea_levels = 200;
    int competitors = 5;
    std::vector<double> truncation_eps{1e-1, 5e-2, 2e-2, 1e-2, 5e-3, 2e-3, 1e-3};  ///< relative to range(u)
};

struct VerifySettings {
    std::uint64_t seed = 1;
    int minimality_trials = 20;
    double minimality_tol = 1e-8;
    double duality_tol = 1e-3;
    double coarea_tol = 2e-2;
    double area_tol = 1e-2;
    double curvature_ratio = 5.0;  ///< required swapped / matched residual ratio
    double truncation_tol = 1e-2;
    double ladder_tol = 1e-2;
};

struct RunConfig {
    int nx = 33, ny = 33;
    double hx = 0.0, hy = 0.0;  ///< 0: unit square spacing
    double x0 = 0.0, y0 = 0.0;
    std::optional<std::pair<Vec2, double>> disk_domain;

    ScalarSpec c;
    TensorSpec sigma0;
    std::vector<double> f{1.0, 0.0, 0.0};  ///< f = f[0] x + f[1] y + f[2]

    std::vector<ShapeSpec> inclusions;
    NoiseSpec noise;

    SolveOptions solve;
    Quadrature quadrature = Quadrature::midpoint;
    std::vector<double> k_ladder{1e-1, 1e-2, 1e-3, 1e-4, 1e-5};
    double perfect_k = 1e-4;

    std::string algorithm = "fixedpoint";  ///< fixedpoint | primaldual | both
    FixedPointOptions fixed_point;
    PrimalDualOptions primal_dual;
    RecoveryOptions recovery;
    ClassifyOptions classify;

    GeometrySettings geometry;
    VerifySettings verify;
    std::string output = "out";

    /// Compact JSON of the document with defaults filled in.
    std::string canonical;

    /// Throws InputError on malformed JSON, unknown keys, wrong types or invalid values.
    static RunConfig parse(std::string_view text);
    static RunConfig load(const std::filesystem::path& path);

    /// Overrides noise.seed and verify.seed and refreshes canonical.
    void set_seed(std::uint64_t seed);
    /// FNV-1a 64 of canonical.
    std::uint64_t hash() const;

    GridPtr build_grid() const;
    CellScalar make_c(const GridPtr& g) const;
    TensorField2 make_sigma0(const GridPtr& g) const;
    ScalarField make_f(const GridPtr& g) const;
    InclusionSet make_inclusions(const GridPtr& g) const;
};

std::uint64_t fnv1a64(std::string_view bytes);
std::string hex64(std::uint64_t v);

} // namespace acdii
