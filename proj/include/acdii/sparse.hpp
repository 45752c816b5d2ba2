#pragma once

#include <cstddef>
#include <vector>

namespace acdii {

/// Compressed sparse row matrix, rows x cols.
struct CsrMatrix {
    std::size_t rows = 0;
    std::size_t cols = 0;
    std::vector<std::size_t> row_ptr{0};
    std::vector<std::size_t> col;
    std::vector<double> val;

    struct Triplet {
        std::size_t r, c;
        double v;
    };

    /// Sums duplicates; entries are ordered by (row, col) so the result is independent of input order.
    static CsrMatrix from_triplets(std::size_t rows, std::size_t cols, std::vector<Triplet> t);

    void multiply(const std::vector<double>& x, std::vector<double>& y) const;
    std::vector<double> diagonal() const;
    double at(std::size_t r, std::size_t c) const;
    std::vector<std::vector<double>> dense() const;
    /// max |A_ij - A_ji| over stored entries.
    double asymmetry() const;
    std::size_t nnz() const { return val.size(); }
};

struct CgResult {
    int iterations = 0;
    double relative_residual = 0.0;
};

/// Jacobi-preconditioned conjugate gradients. x holds the initial guess on entry.
/// Throws ConvergenceError after max_iter iterations without reaching tol.
CgResult pcg(const CsrMatrix& a, const std::vector<double>& b, std::vector<double>& x, double tol, int max_iter);

double dot(const std::vector<double>& a, const std::vector<double>& b);
double norm2(const std::vector<double>& a);

} // namespace acdii
