#include "acdii/benchmark.hpp"

#include <cmath>
#include <numbers>

namespace acdii {

double bump_c(double x, double y) {
    const double r2 = (x - 0.5) * (x - 0.5) + (y - 0.5) * (y - 0.5);
    return 1.0 + 0.5 * std::exp(-r2 / (2.0 * 0.15 * 0.15));
}

Sym2 bump_sigma0() { return Sym2::rotated_diag(2.0, 1.0, std::numbers::pi / 6.0); }

BumpBenchmark bump_benchmark(int n) {
    auto g = make_grid(Grid2D::unit_square(n));
    return {g, CellScalar::sample(g, bump_c), TensorField2(g, bump_sigma0()),
            ScalarField::sample(g, [](double x, double) { return x; })};
}

} // namespace acdii
