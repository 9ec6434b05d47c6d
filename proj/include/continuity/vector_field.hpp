#pragma once

#include <functional>
#include <utility>

#include "continuity/errors.hpp"
#include "continuity/linalg.hpp"

namespace continuity {

// A time-independent right-hand side dx/dt = F(x).  Carried by value; the
// callable must be safe to invoke concurrently from several threads on
// distinct inputs (all fields in this library are pure functions of x).
struct VectorField {
    int dim = 0;
    std::function<Vec(const Vec&)> eval;

    Vec operator()(const Vec& x) const {
        if (static_cast<int>(x.size()) != dim)
            throw DimensionError("vector field: state dimension mismatch");
        return eval(x);
    }
};

inline VectorField make_field(int dim, std::function<Vec(const Vec&)> fn) {
    VectorField f;
    f.dim = dim;
    f.eval = std::move(fn);
    return f;
}

// Linear field F(x) = A x, handy for constructing models with known
// closed-form behaviour in tests.
inline VectorField linear_field(const Matrix& a) {
    if (a.rows != a.cols) throw DimensionError("linear_field: matrix must be square");
    return make_field(static_cast<int>(a.rows), [a](const Vec& x) { return matvec(a, x); });
}

}  // namespace continuity
