#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>

#include "acdii/forward.hpp"

namespace acdii {

struct NoiseSpec {
    double level = 0.0;  ///< relative standard deviation of the multiplicative noise
    std::uint64_t seed = 0;
};

struct Provenance {
    std::optional<CellScalar> c_true;
    std::optional<ScalarField> u_true;
    NoiseSpec noise;
    bool inverse_crime = true;  ///< data produced by the same discretisation the inverse solver uses
};

/// Boundary voltage f (stored as a node field whose boundary values matter),
/// anisotropy sigma0 and internal data a = |J|_{sigma0^-1}.
struct AdmissibleTriplet {
    GridPtr grid;
    ScalarField f;
    TensorField2 sigma0;
    CellScalar a;
    InclusionSet inclusions;
    Provenance provenance;
};

/// J = -c sigma0 grad u per cell; zero on insulating cells.
VectorField2 compute_current(const ScalarField& u, const CellScalar& c, const TensorField2& sigma0,
                             const InclusionSet* inclusions = nullptr);

/// a = (sigma0^-1 J . J)^(1/2) per cell.
CellScalar compute_a(const VectorField2& j, const TensorField2& sigma0);

/// a (1 + level * zeta) with zeta iid standard normal drawn in cell order, clamped at 0.
CellScalar add_noise(const CellScalar& a, double level, std::uint64_t seed);

struct SynthOptions {
    SolveOptions solve;
    /// Contrast used to synthesise the (nonzero) current inside perfect conductors.
    double perfect_k = 1e-4;
};

/// Forward solve (inclusion limit when inclusions are present), current, a,
/// a := 0 on insulators, then noise.
AdmissibleTriplet synthesize_triplet(const CellScalar& c_true, const TensorField2& sigma0, const ScalarField& f,
                                     const InclusionSet& inclusions = {}, const NoiseSpec& noise = {},
                                     const SynthOptions& opts = {});

/// Directory layout: triplet.json manifest plus one field file per quantity.
void save_triplet(const std::filesystem::path& dir, const AdmissibleTriplet& t);
AdmissibleTriplet load_triplet(const std::filesystem::path& dir);

} // namespace acdii
