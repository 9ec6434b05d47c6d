#pragma once

#include <cmath>
#include <cstddef>
#include <string>
#include <vector>

#include "continuity/errors.hpp"
#include "continuity/linalg.hpp"
#include "continuity/trajectory.hpp"
#include "continuity/vector_field.hpp"

namespace continuity {

// Polynomial dictionary in graded ordering: the constant term first, then
// total degree 1, 2, ..., and within a degree the exponents in lexicographic
// order with the first state variable varying slowest (x², xy, y² for two
// variables at degree 2).
struct PolyBasis {
    int state_dim = 0;
    int degree = 0;
    std::vector<std::vector<int>> terms;  // one exponent vector per term

    std::size_t size() const { return terms.size(); }
};

inline PolyBasis poly_basis(int state_dim, int degree) {
    if (state_dim < 1) throw DataError("poly_basis: state_dim must be positive");
    if (degree < 0) throw DataError("poly_basis: degree must be non-negative");
    PolyBasis basis;
    basis.state_dim = state_dim;
    basis.degree = degree;
    std::vector<int> expo(state_dim, 0);
    auto emit = [&](auto&& self, int var, int remaining) -> void {
        if (var == state_dim - 1) {
            expo[var] = remaining;
            basis.terms.push_back(expo);
            return;
        }
        for (int e = remaining; e >= 0; --e) {
            expo[var] = e;
            self(self, var + 1, remaining - e);
        }
    };
    for (int d = 0; d <= degree; ++d) emit(emit, 0, d);
    return basis;
}

// Evaluate every dictionary term at one state.
inline Vec features(const PolyBasis& basis, const Vec& x) {
    if (static_cast<int>(x.size()) != basis.state_dim)
        throw DimensionError("features: state dimension mismatch");
    Vec phi(basis.size());
    for (std::size_t t = 0; t < basis.terms.size(); ++t) {
        double prod = 1.0;
        for (int v = 0; v < basis.state_dim; ++v) {
            for (int e = 0; e < basis.terms[t][v]; ++e) prod *= x[v];
        }
        phi[t] = prod;
    }
    return phi;
}

// Finite-difference derivative estimates on a regularly sampled trajectory.
//
//   order 1:  (x_{n+1} - x_n) / dt                          at n = 0..P-2
//   order 2:  (x_{n+1} - x_{n-1}) / (2 dt)                  at n = 1..P-2
//   order 4:  (-x_{n+2}/12 + 2x_{n+1}/3
//              - 2x_{n-1}/3 + x_{n-2}/12) / dt              at n = 2..P-3
//
// Returns the estimates along with the sample indices they live at.
struct FdDerivatives {
    std::vector<Vec> derivs;
    std::vector<std::size_t> indices;
};

inline FdDerivatives fd_derivatives(const Trajectory& traj, int fd_order) {
    const double dt = regular_dt(traj);  // rejects irregular spacing
    const std::size_t P = traj.size();
    const std::size_t d = traj.dim();
    FdDerivatives out;
    auto emit = [&](std::size_t n, const Vec& v) {
        out.derivs.push_back(v);
        out.indices.push_back(n);
    };
    switch (fd_order) {
        case 1: {
            if (P < 2) throw DataError("fd_derivatives: order 1 needs at least 2 samples");
            for (std::size_t n = 0; n + 1 < P; ++n) {
                Vec v(d);
                for (std::size_t j = 0; j < d; ++j)
                    v[j] = (traj.states[n + 1][j] - traj.states[n][j]) / dt;
                emit(n, v);
            }
            return out;
        }
        case 2: {
            if (P < 3) throw DataError("fd_derivatives: order 2 needs at least 3 samples");
            for (std::size_t n = 1; n + 1 < P; ++n) {
                Vec v(d);
                for (std::size_t j = 0; j < d; ++j)
                    v[j] = (traj.states[n + 1][j] - traj.states[n - 1][j]) / (2.0 * dt);
                emit(n, v);
            }
            return out;
        }
        case 4: {
            if (P < 5) throw DataError("fd_derivatives: order 4 needs at least 5 samples");
            for (std::size_t n = 2; n + 2 < P; ++n) {
                Vec v(d);
                for (std::size_t j = 0; j < d; ++j) {
                    v[j] = (-traj.states[n + 2][j] / 12.0 + 2.0 * traj.states[n + 1][j] / 3.0 -
                            2.0 * traj.states[n - 1][j] / 3.0 + traj.states[n - 2][j] / 12.0) /
                           dt;
                }
                emit(n, v);
            }
            return out;
        }
        default:
            throw DataError("fd_derivatives: order must be 1, 2, or 4");
    }
}

// Sequentially thresholded least squares, each output dimension independent:
// ridge-regularized solve, zero out coefficients below threshold, refit on
// the surviving columns, repeat until the active set is stable.  The active
// set only shrinks, so the loop terminates; rerunning on its own output
// changes nothing.
inline Matrix stlsq(const std::vector<Vec>& theta_rows, const std::vector<Vec>& targets,
                    double threshold, double ridge = 1e-10) {
    if (theta_rows.empty()) throw DataError("stlsq: no samples");
    if (theta_rows.size() != targets.size())
        throw DimensionError("stlsq: feature and target row counts differ");
    if (threshold < 0.0) throw DataError("stlsq: threshold must be non-negative");
    if (ridge < 0.0) throw DataError("stlsq: ridge must be non-negative");
    const std::size_t T = theta_rows.front().size();
    const std::size_t d = targets.front().size();
    const std::size_t N = theta_rows.size();
    for (const Vec& row : theta_rows)
        if (row.size() != T) throw DimensionError("stlsq: ragged feature rows");
    for (const Vec& row : targets)
        if (row.size() != d) throw DimensionError("stlsq: ragged target rows");

    // Gram matrix and per-output right-hand sides, assembled once.
    Matrix gram(T, T, 0.0);
    for (std::size_t n = 0; n < N; ++n) {
        const Vec& row = theta_rows[n];
        for (std::size_t i = 0; i < T; ++i) {
            for (std::size_t j = i; j < T; ++j) gram(i, j) += row[i] * row[j];
        }
    }
    for (std::size_t i = 0; i < T; ++i)
        for (std::size_t j = 0; j < i; ++j) gram(i, j) = gram(j, i);

    Matrix xi(d, T, 0.0);
    for (std::size_t out = 0; out < d; ++out) {
        Vec rhs_full(T, 0.0);
        for (std::size_t n = 0; n < N; ++n) {
            const double y = targets[n][out];
            for (std::size_t i = 0; i < T; ++i) rhs_full[i] += theta_rows[n][i] * y;
        }
        std::vector<std::size_t> active(T);
        for (std::size_t i = 0; i < T; ++i) active[i] = i;
        Vec coefs;
        for (std::size_t round = 0; round <= T; ++round) {
            const std::size_t a = active.size();
            if (a == 0) break;
            Matrix sub(a, a);
            Vec rhs(a);
            for (std::size_t i = 0; i < a; ++i) {
                rhs[i] = rhs_full[active[i]];
                for (std::size_t j = 0; j < a; ++j) sub(i, j) = gram(active[i], active[j]);
                sub(i, i) += ridge;
            }
            coefs = solve_spd(std::move(sub), std::move(rhs));
            std::vector<std::size_t> survivors;
            Vec surviving_coefs;
            for (std::size_t i = 0; i < a; ++i) {
                if (std::abs(coefs[i]) >= threshold) {
                    survivors.push_back(active[i]);
                    surviving_coefs.push_back(coefs[i]);
                }
            }
            if (survivors.size() == active.size()) break;  // stable: keep this solve
            active = std::move(survivors);
            coefs = std::move(surviving_coefs);  // reported if the set empties out
        }
        for (std::size_t i = 0; i < active.size(); ++i) xi(out, active[i]) = coefs[i];
    }
    return xi;
}

// A fitted sparse model dx/dt = Xi * phi(x).
struct SindyModel {
    PolyBasis basis;
    Matrix xi;           // state_dim x basis.size()
    double threshold = 0.05;
    int fd_order = 4;    // derivative stencil the fit used
};

// Fit a sparse polynomial model to one regularly sampled trajectory.
inline SindyModel fit(const Trajectory& traj, int degree, int fd_order, double threshold = 0.05,
                      double ridge = 1e-10) {
    const FdDerivatives fd = fd_derivatives(traj, fd_order);
    const PolyBasis basis = poly_basis(static_cast<int>(traj.dim()), degree);
    std::vector<Vec> theta_rows;
    theta_rows.reserve(fd.indices.size());
    for (std::size_t idx : fd.indices) theta_rows.push_back(features(basis, traj.states[idx]));
    SindyModel model;
    model.basis = basis;
    model.threshold = threshold;
    model.fd_order = fd_order;
    model.xi = stlsq(theta_rows, fd.derivs, threshold, ridge);
    return model;
}

// Wrap the fitted model as a vector field.
inline VectorField model_field(const SindyModel& model) {
    const PolyBasis basis = model.basis;
    const Matrix xi = model.xi;
    return make_field(basis.state_dim, [basis, xi](const Vec& x) {
        const Vec phi = features(basis, x);
        return matvec(xi, phi);
    });
}

}  // namespace continuity
