#pragma once

#include <cmath>
#include <string>
#include <utility>
#include <vector>

#include "continuity/errors.hpp"

namespace continuity {

// Scalar linear setting dx/dt = λx: a model trained through an order-p
// scheme at step dt learns the effective rate w solving T_p(w·dt) = e^{λ·dt},
// where T_p is the truncated exponential.  `epsilon` is an optional
// perturbation of the learned rate (optimization error stand-in) and `k` an
// overall scale for comparing against empirical error curves.
struct LinearSetting {
    double lambda = -1.0;
    double dt = 0.1;
    int p = 1;             // training scheme order
    int q = 1;             // inference scheme order
    double epsilon = 0.0;  // perturbation of the learned rate
    double k = 1.0;        // scale factor of the error curve
};

// Truncated exponential T_p(z) = Σ_{i=0}^{p} z^i / i!.
inline double taylor_poly(double z, int p) {
    if (p < 0) throw DataError("taylor_poly: order must be non-negative");
    double sum = 1.0, term = 1.0;
    for (int i = 1; i <= p; ++i) {
        term *= z / static_cast<double>(i);
        sum += term;
    }
    return sum;
}

namespace detail {

// Argmin of T_p on the negative axis (root of T_p' = T_{p-1}), defined for
// even p; the value T_p there bounds which e^{λdt} levels are reachable.
inline double taylor_min_point(int p) {
    if (p == 2) return -1.0;  // root of T_1
    // Root of T_{p-1} on (-p-1, 0); bisection is plenty.
    double lo = -2.0 * p, hi = 0.0;
    while (taylor_poly(lo, p - 1) > 0.0) lo *= 2.0;
    for (int iter = 0; iter < 200; ++iter) {
        const double mid = 0.5 * (lo + hi);
        if (taylor_poly(mid, p - 1) > 0.0)
            hi = mid;
        else
            lo = mid;
    }
    return 0.5 * (lo + hi);
}

}  // namespace detail

// Whether T_p(w·dt) = e^{λ·dt} has a real root of the branch consistent with
// w → λ as dt → 0.  Odd orders always do.  For even orders the constraint
// binds only for decaying systems (λ < 0): p = 2 requires dt ≤ ln2/|λ| and
// p = 4 requires dt < 1.307/|λ|.
inline bool existence_condition(double lambda, double dt, int p) {
    if (!(dt > 0.0)) throw DataError("existence_condition: dt must be positive");
    if (p < 1) throw DataError("existence_condition: order must be positive");
    if (p % 2 == 1 || lambda >= 0.0) return true;
    if (p == 2) return dt <= std::log(2.0) / std::abs(lambda);
    if (p == 4) return dt < 1.307 / std::abs(lambda);
    // Other even orders: compare against the reachable minimum directly.
    return std::exp(lambda * dt) >= taylor_poly(detail::taylor_min_point(p), p);
}

// Solve T_p(w·dt) = e^{λ·dt} for the real rate w with sign(w) = sign(λ) on
// the branch with w → λ as dt → 0.  λ = 0 gives w = 0.  Bracketed bisection
// plus a Newton polish; the final residual is below 1e-13.  Throws
// NumericalError when no real root exists (existence_condition false).
inline double solve_w(double lambda, double dt, int p) {
    if (!(dt > 0.0)) throw DataError("solve_w: dt must be positive");
    if (p < 1) throw DataError("solve_w: order must be positive");
    if (lambda == 0.0) return 0.0;
    if (!existence_condition(lambda, dt, p))
        throw NumericalError("solve_w: no real root at this step size (order " +
                             std::to_string(p) + ")");

    const double target = std::exp(lambda * dt);
    auto residual = [&](double w) { return taylor_poly(w * dt, p) - target; };

    // Bracket [lo, hi] with residual(lo) <= 0 <= residual(hi).
    double lo, hi;
    if (lambda > 0.0) {
        // residual(λ) = -(e^z - T_p(z)) < 0 for z > 0; expand upward.
        lo = lambda;
        hi = lambda;
        double span = std::max(1.0, std::abs(lambda));
        while (residual(hi) < 0.0) {
            hi += span;
            span *= 2.0;
        }
    } else if (p % 2 == 1) {
        // Odd p: T_p is increasing enough for a sign change on [λ, 0].
        lo = lambda;
        hi = 0.0;
    } else {
        // Even p, λ < 0: the consistent root lies between the minimum of
        // T_p and λ.
        lo = detail::taylor_min_point(p) / dt;
        hi = lambda;
        // residual(lo) can be marginally positive at the existence boundary;
        // then the minimum point itself is the (double) root.
        if (residual(lo) > 0.0) return lo;
    }

    for (int iter = 0; iter < 200; ++iter) {
        const double mid = 0.5 * (lo + hi);
        if (residual(mid) <= 0.0)
            lo = mid;
        else
            hi = mid;
    }
    double w = 0.5 * (lo + hi);

    // Newton polish: d/dw T_p(w dt) = dt T_{p-1}(w dt).
    for (int iter = 0; iter < 4; ++iter) {
        const double deriv = dt * taylor_poly(w * dt, p - 1);
        if (std::abs(deriv) < 1e-14) break;
        w -= residual(w) / deriv;
    }
    if (std::abs(residual(w)) > 1e-13)
        throw NumericalError("solve_w: root polish failed to reach residual tolerance");
    return w;
}

// Closed forms for the two lowest orders, cross-checks for solve_w:
// order 1 solves 1 + dt·w = e^{λ·dt}; order 2 takes the consistent branch of
// the quadratic.
inline double closed_form_w_euler(double lambda, double dt) {
    return (std::exp(lambda * dt) - 1.0) / dt;
}

inline double closed_form_w_rk2(double lambda, double dt) {
    const double disc = 2.0 * std::exp(lambda * dt) - 1.0;
    if (disc < 0.0) throw NumericalError("closed_form_w_rk2: no real root at this step size");
    return (std::sqrt(disc) - 1.0) / dt;
}

// Analytic error curve of the trained linear model evaluated with an
// order-q scheme at inference step h:
//
//   Error(h) = (k/h) | e^{λh} - T_q(h·(w + ε)) |,  w = solve_w(λ, dt, p).
//
// At h = dt with q = p and ε = 0 this vanishes (training step reproduced
// exactly); as h → 0 it approaches k|w + ε - λ|, the plateau.
inline double error_curve(const LinearSetting& s, double h) {
    if (!(h > 0.0)) throw DataError("error_curve: h must be positive");
    const double w = solve_w(s.lambda, s.dt, s.p) + s.epsilon;
    return (s.k / h) * std::abs(std::exp(s.lambda * h) - taylor_poly(h * w, s.q));
}

// Small-h plateau of the error curve: b = k |w + ε - λ|.
inline double plateau_b(const LinearSetting& s) {
    const double w = solve_w(s.lambda, s.dt, s.p) + s.epsilon;
    return s.k * std::abs(w - s.lambda);
}

// Leading-order bound on the plateau: k (|λ|^{p+1} dt^p / (p+1)! + |ε|).
inline double bound_w_minus_lambda(const LinearSetting& s) {
    double fact = 1.0;
    for (int i = 2; i <= s.p + 1; ++i) fact *= static_cast<double>(i);
    const double lead = std::pow(std::abs(s.lambda), s.p + 1) * std::pow(s.dt, s.p) / fact;
    return s.k * (lead + std::abs(s.epsilon));
}

// Fit the scale k by least squares on the log curve: the offset that best
// aligns the analytic curve (k = 1) with empirical (h, error) samples.
// Callers pass the plateau tail of an empirical report.
inline double fit_scale_k(const std::vector<std::pair<double, double>>& points,
                          const LinearSetting& setting) {
    if (points.empty()) throw DataError("fit_scale_k: no points");
    LinearSetting unit = setting;
    unit.k = 1.0;
    double acc = 0.0;
    std::size_t used = 0;
    for (const auto& [h, err] : points) {
        const double model = error_curve(unit, h);
        if (!(err > 0.0) || !(model > 0.0)) continue;
        acc += std::log(err) - std::log(model);
        ++used;
    }
    if (used == 0) throw NumericalError("fit_scale_k: no usable points");
    return std::exp(acc / static_cast<double>(used));
}

}  // namespace continuity
