#pragma once

#include "acdii/data.hpp"

namespace acdii {

/// Gaussian-bump benchmark on the unit square:
/// c = 1 + 0.5 exp(-|x - (0.5,0.5)|^2 / (2 * 0.15^2)), sigma0 = R(pi/6) diag(2,1) R(pi/6)^T, f = x.
struct BumpBenchmark {
    GridPtr grid;
    CellScalar c;
    TensorField2 sigma0;
    ScalarField f;
};

BumpBenchmark bump_benchmark(int n);

double bump_c(double x, double y);
Sym2 bump_sigma0();

} // namespace acdii
