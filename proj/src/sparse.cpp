#include "acdii/sparse.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "acdii/error.hpp"

namespace acdii {

CsrMatrix CsrMatrix::from_triplets(std::size_t rows, std::size_t cols, std::vector<Triplet> t) {
    std::sort(t.begin(), t.end(), [](const Triplet& a, const Triplet& b) {
        return a.r != b.r ? a.r < b.r : a.c < b.c;
    });
    CsrMatrix m;
    m.rows = rows;
    m.cols = cols;
    m.row_ptr.assign(rows + 1, 0);
    for (std::size_t k = 0; k < t.size();) {
        std::size_t e = k;
        double s = 0.0;
        while (e < t.size() && t[e].r == t[k].r && t[e].c == t[k].c) s += t[e++].v;
        m.col.push_back(t[k].c);
        m.val.push_back(s);
        ++m.row_ptr[t[k].r + 1];
        k = e;
    }
    for (std::size_t r = 0; r < rows; ++r) m.row_ptr[r + 1] += m.row_ptr[r];
    return m;
}

void CsrMatrix::multiply(const std::vector<double>& x, std::vector<double>& y) const {
    y.assign(rows, 0.0);
    for (std::size_t r = 0; r < rows; ++r) {
        double s = 0.0;
        for (std::size_t k = row_ptr[r]; k < row_ptr[r + 1]; ++k) s += val[k] * x[col[k]];
        y[r] = s;
    }
}

std::vector<double> CsrMatrix::diagonal() const {
    std::vector<double> d(rows, 0.0);
    for (std::size_t r = 0; r < rows; ++r)
        for (std::size_t k = row_ptr[r]; k < row_ptr[r + 1]; ++k)
            if (col[k] == r) d[r] = val[k];
    return d;
}

double CsrMatrix::at(std::size_t r, std::size_t c) const {
    const auto b = col.begin() + static_cast<std::ptrdiff_t>(row_ptr[r]);
    const auto e = col.begin() + static_cast<std::ptrdiff_t>(row_ptr[r + 1]);
    const auto it = std::lower_bound(b, e, c);
    return (it != e && *it == c) ? val[static_cast<std::size_t>(it - col.begin())] : 0.0;
}

std::vector<std::vector<double>> CsrMatrix::dense() const {
    std::vector<std::vector<double>> d(rows, std::vector<double>(cols, 0.0));
    for (std::size_t r = 0; r < rows; ++r)
        for (std::size_t k = row_ptr[r]; k < row_ptr[r + 1]; ++k) d[r][col[k]] = val[k];
    return d;
}

double CsrMatrix::asymmetry() const {
    double worst = 0.0;
    for (std::size_t r = 0; r < rows; ++r)
        for (std::size_t k = row_ptr[r]; k < row_ptr[r + 1]; ++k)
            worst = std::max(worst, std::abs(val[k] - at(col[k], r)));
    return worst;
}

double dot(const std::vector<double>& a, const std::vector<double>& b) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
    return s;
}

double norm2(const std::vector<double>& a) { return std::sqrt(dot(a, a)); }

CgResult pcg(const CsrMatrix& a, const std::vector<double>& b, std::vector<double>& x, double tol, int max_iter) {
    const std::size_t n = a.rows;
    CgResult res;
    if (x.size() != n) x.assign(n, 0.0);
    if (n == 0) return res;
    const double bnorm = norm2(b);
    if (bnorm == 0.0) {
        std::fill(x.begin(), x.end(), 0.0);
        return res;
    }
    std::vector<double> dinv = a.diagonal();
    for (auto& d : dinv) d = d > 0.0 ? 1.0 / d : 1.0;

    std::vector<double> r(n), z(n), p(n), ap(n);
    a.multiply(x, ap);
    for (std::size_t i = 0; i < n; ++i) r[i] = b[i] - ap[i];
    double rnorm = norm2(r);
    if (rnorm <= tol * bnorm) {
        res.relative_residual = rnorm / bnorm;
        return res;
    }
    for (std::size_t i = 0; i < n; ++i) p[i] = z[i] = dinv[i] * r[i];
    double rz = dot(r, z);
    for (int it = 1; it <= max_iter; ++it) {
        a.multiply(p, ap);
        const double pap = dot(p, ap);
        if (!(pap > 0.0)) throw ConvergenceError("pcg: operator is not positive definite", rnorm / bnorm, it);
        const double alpha = rz / pap;
        for (std::size_t i = 0; i < n; ++i) {
            x[i] += alpha * p[i];
            r[i] -= alpha * ap[i];
        }
        rnorm = norm2(r);
        if (rnorm <= tol * bnorm) {
            res.iterations = it;
            res.relative_residual = rnorm / bnorm;
            return res;
        }
        for (std::size_t i = 0; i < n; ++i) z[i] = dinv[i] * r[i];
        const double rz_new = dot(r, z);
        const double beta = rz_new / rz;
        rz = rz_new;
        for (std::size_t i = 0; i < n; ++i) p[i] = z[i] + beta * p[i];
    }
    throw ConvergenceError("pcg: no convergence after " + std::to_string(max_iter) +
                               " iterations (relative residual " + std::to_string(rnorm / bnorm) + ")",
                           rnorm / bnorm, max_iter);
}

} // namespace acdii
