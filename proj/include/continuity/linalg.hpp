#pragma once

#include <cmath>
#include <cstddef>
#include <vector>

#include "continuity/errors.hpp"

namespace continuity {

using Vec = std::vector<double>;

// Dense row-major matrix, just large enough for network layers and
// small least-squares systems.
struct Matrix {
    std::size_t rows = 0;
    std::size_t cols = 0;
    std::vector<double> data;  // row-major, rows*cols entries

    Matrix() = default;
    Matrix(std::size_t r, std::size_t c, double fill = 0.0)
        : rows(r), cols(c), data(r * c, fill) {}

    double& operator()(std::size_t i, std::size_t j) { return data[i * cols + j]; }
    double operator()(std::size_t i, std::size_t j) const { return data[i * cols + j]; }
};

inline bool all_finite(const Vec& v) {
    for (double x : v) {
        if (!std::isfinite(x)) return false;
    }
    return true;
}

// y = A x
inline Vec matvec(const Matrix& a, const Vec& x) {
    if (x.size() != a.cols) throw DimensionError("matvec: dimension mismatch");
    Vec y(a.rows, 0.0);
    for (std::size_t i = 0; i < a.rows; ++i) {
        double acc = 0.0;
        const double* row = a.data.data() + i * a.cols;
        for (std::size_t j = 0; j < a.cols; ++j) acc += row[j] * x[j];
        y[i] = acc;
    }
    return y;
}

// y += alpha * x
inline void axpy(double alpha, const Vec& x, Vec& y) {
    if (x.size() != y.size()) throw DimensionError("axpy: dimension mismatch");
    for (std::size_t i = 0; i < x.size(); ++i) y[i] += alpha * x[i];
}

inline Vec scaled_sum(const Vec& x, double alpha, const Vec& y) {
    if (x.size() != y.size()) throw DimensionError("scaled_sum: dimension mismatch");
    Vec out(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) out[i] = x[i] + alpha * y[i];
    return out;
}

inline double dot(const Vec& x, const Vec& y) {
    if (x.size() != y.size()) throw DimensionError("dot: dimension mismatch");
    double acc = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) acc += x[i] * y[i];
    return acc;
}

inline double norm2(const Vec& x) { return std::sqrt(dot(x, x)); }

inline double dist2(const Vec& x, const Vec& y) {
    if (x.size() != y.size()) throw DimensionError("dist2: dimension mismatch");
    double acc = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        const double d = x[i] - y[i];
        acc += d * d;
    }
    return std::sqrt(acc);
}

// Solve the symmetric positive definite system A x = b in place via
// unpivoted Cholesky.  Dimensions stay small (polynomial bases, layer
// widths), so O(n^3) with no blocking is fine.
inline Vec solve_spd(Matrix a, Vec b) {
    if (a.rows != a.cols || b.size() != a.rows)
        throw DimensionError("solve_spd: dimension mismatch");
    const std::size_t n = a.rows;
    // Cholesky factorization A = L L^T, stored in the lower triangle.
    for (std::size_t j = 0; j < n; ++j) {
        double d = a(j, j);
        for (std::size_t k = 0; k < j; ++k) d -= a(j, k) * a(j, k);
        if (!(d > 0.0) || !std::isfinite(d))
            throw NumericalError("solve_spd: matrix is not positive definite");
        const double ljj = std::sqrt(d);
        a(j, j) = ljj;
        for (std::size_t i = j + 1; i < n; ++i) {
            double s = a(i, j);
            for (std::size_t k = 0; k < j; ++k) s -= a(i, k) * a(j, k);
            a(i, j) = s / ljj;
        }
    }
    // Forward substitution L y = b.
    for (std::size_t i = 0; i < n; ++i) {
        double s = b[i];
        for (std::size_t k = 0; k < i; ++k) s -= a(i, k) * b[k];
        b[i] = s / a(i, i);
    }
    // Back substitution L^T x = y.
    for (std::size_t ii = n; ii-- > 0;) {
        double s = b[ii];
        for (std::size_t k = ii + 1; k < n; ++k) s -= a(k, ii) * b[k];
        b[ii] = s / a(ii, ii);
    }
    return b;
}

}  // namespace continuity
