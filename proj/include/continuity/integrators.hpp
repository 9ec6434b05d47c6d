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

// Explicit Runge-Kutta schemes used throughout: forward Euler (order 1),
// explicit midpoint (order 2), and the classical four-stage scheme (order 4).
enum class SchemeKind { Euler, Midpoint, RK4 };

inline int order(SchemeKind scheme) {
    switch (scheme) {
        case SchemeKind::Euler: return 1;
        case SchemeKind::Midpoint: return 2;
        case SchemeKind::RK4: return 4;
    }
    throw Error("order: unknown scheme");
}

inline int stage_count(SchemeKind scheme) {
    switch (scheme) {
        case SchemeKind::Euler: return 1;
        case SchemeKind::Midpoint: return 2;
        case SchemeKind::RK4: return 4;
    }
    throw Error("stage_count: unknown scheme");
}

inline std::string scheme_name(SchemeKind scheme) {
    switch (scheme) {
        case SchemeKind::Euler: return "euler";
        case SchemeKind::Midpoint: return "midpoint";
        case SchemeKind::RK4: return "rk4";
    }
    throw Error("scheme_name: unknown scheme");
}

inline SchemeKind parse_scheme(const std::string& name) {
    if (name == "euler") return SchemeKind::Euler;
    if (name == "midpoint") return SchemeKind::Midpoint;
    if (name == "rk4") return SchemeKind::RK4;
    throw DataError("unknown scheme '" + name + "' (expected euler, midpoint, or rk4)");
}

// Scheme of a given convergence order, the inverse of order().
inline SchemeKind scheme_of_order(int p) {
    switch (p) {
        case 1: return SchemeKind::Euler;
        case 2: return SchemeKind::Midpoint;
        case 4: return SchemeKind::RK4;
        default: throw DataError("no scheme of order " + std::to_string(p));
    }
}

namespace detail {

inline void check_stage(const Vec& v, int stage, long step_index) {
    if (!all_finite(v))
        throw DivergenceError("non-finite value in scheme stage " + std::to_string(stage),
                              stage, step_index);
}

}  // namespace detail

// One explicit step x -> x + h * increment(F, x, h).
//
//   Euler:     x + h F(x)
//   Midpoint:  x + h F(x + (h/2) F(x))
//   RK4:       x + (h/6)(i1 + 2 i2 + 2 i3 + i4),
//              i1 = F(x), i2 = F(x + (h/2) i1), i3 = F(x + (h/2) i2),
//              i4 = F(x + h i3)
//
// Throws DivergenceError (with the offending stage index) if any stage
// evaluates to a non-finite value.
inline Vec step(SchemeKind scheme, const VectorField& field, const Vec& x, double h,
                long step_index = -1) {
    switch (scheme) {
        case SchemeKind::Euler: {
            Vec k1 = field(x);
            detail::check_stage(k1, 1, step_index);
            Vec out = scaled_sum(x, h, k1);
            detail::check_stage(out, 1, step_index);
            return out;
        }
        case SchemeKind::Midpoint: {
            Vec k1 = field(x);
            detail::check_stage(k1, 1, step_index);
            Vec k2 = field(scaled_sum(x, 0.5 * h, k1));
            detail::check_stage(k2, 2, step_index);
            Vec out = scaled_sum(x, h, k2);
            detail::check_stage(out, 2, step_index);
            return out;
        }
        case SchemeKind::RK4: {
            Vec k1 = field(x);
            detail::check_stage(k1, 1, step_index);
            Vec k2 = field(scaled_sum(x, 0.5 * h, k1));
            detail::check_stage(k2, 2, step_index);
            Vec k3 = field(scaled_sum(x, 0.5 * h, k2));
            detail::check_stage(k3, 3, step_index);
            Vec k4 = field(scaled_sum(x, h, k3));
            detail::check_stage(k4, 4, step_index);
            Vec out = x;
            const double w = h / 6.0;
            for (std::size_t i = 0; i < out.size(); ++i)
                out[i] += w * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
            detail::check_stage(out, 4, step_index);
            return out;
        }
    }
    throw Error("step: unknown scheme");
}

// Integrate n_steps constant-size steps from x0 at time t0.  The result has
// n_steps + 1 samples with times t0 + k*h (computed by multiplication so the
// last time is exact to round-off, not drifted by accumulation).
inline Trajectory rollout(SchemeKind scheme, const VectorField& field, const Vec& x0,
                          double h, long n_steps, double t0 = 0.0) {
    if (n_steps < 0) throw DataError("rollout: negative step count");
    if (!(h > 0.0)) throw DataError("rollout: step size must be positive");
    Trajectory traj;
    traj.times.reserve(n_steps + 1);
    traj.states.reserve(n_steps + 1);
    traj.gaps.assign(n_steps, h);
    Vec x = x0;
    traj.times.push_back(t0);
    traj.states.push_back(x);
    for (long k = 0; k < n_steps; ++k) {
        x = step(scheme, field, x, h, k);
        traj.times.push_back(t0 + static_cast<double>(k + 1) * h);
        traj.states.push_back(x);
    }
    return traj;
}

// Integrate with constant step h, emitting the state at each target time.
// The first target is the initial time (state x0).  Every gap between
// consecutive targets must be an integer multiple of h to relative
// tolerance 1e-9, otherwise AlignmentError.
inline std::vector<Vec> rollout_to_times(SchemeKind scheme, const VectorField& field,
                                         const Vec& x0, double h,
                                         const std::vector<double>& targets) {
    if (targets.empty()) throw DataError("rollout_to_times: no target times");
    if (!(h > 0.0)) throw DataError("rollout_to_times: step size must be positive");
    std::vector<Vec> out;
    out.reserve(targets.size());
    out.push_back(x0);
    Vec x = x0;
    long global_step = 0;
    for (std::size_t k = 0; k + 1 < targets.size(); ++k) {
        const double gap = targets[k + 1] - targets[k];
        if (!(gap > 0.0))
            throw DataError("rollout_to_times: target times must be strictly increasing");
        const double ratio = gap / h;
        const long n = static_cast<long>(std::llround(ratio));
        if (n < 1 || std::abs(ratio - static_cast<double>(n)) > 1e-9 * std::max(1.0, ratio))
            throw AlignmentError("rollout_to_times: gap " + std::to_string(gap) +
                                 " is not an integer multiple of step " + std::to_string(h));
        for (long i = 0; i < n; ++i) x = step(scheme, field, x, h, global_step++);
        out.push_back(x);
    }
    return out;
}

// Empirical convergence order: slope of log(endpoint error) vs log(h), fit
// by least squares over the points whose error is above the round-off floor.
// `exact` is the closed-form solution t -> x(t); integration starts from
// exact(0) and errors are measured at t_end.  Requires at least three step
// sizes spanning at least one decade.  If fewer than two points survive the
// floor filter the fit is indeterminate and NumericalError is thrown.
inline double observed_order(SchemeKind scheme, const VectorField& field,
                             const std::function<Vec(double)>& exact, double t_end,
                             const std::vector<double>& h_list, double floor = 1e-12) {
    if (h_list.size() < 3)
        throw DataError("observed_order: need at least three step sizes");
    double h_min = h_list.front(), h_max = h_list.front();
    for (double h : h_list) {
        if (!(h > 0.0)) throw DataError("observed_order: step sizes must be positive");
        h_min = std::min(h_min, h);
        h_max = std::max(h_max, h);
    }
    if (h_max / h_min < 10.0)
        throw DataError("observed_order: step sizes must span at least one decade");

    const Vec x0 = exact(0.0);
    const Vec ref = exact(t_end);
    std::vector<double> log_h, log_e;
    for (double h : h_list) {
        // Round to an integer number of steps so the endpoint lands on t_end.
        const long n = std::max(1L, static_cast<long>(std::llround(t_end / h)));
        const double h_eff = t_end / static_cast<double>(n);
        Vec x = x0;
        for (long k = 0; k < n; ++k) x = step(scheme, field, x, h_eff, k);
        const double err = dist2(x, ref);
        if (err > floor) {
            log_h.push_back(std::log(h_eff));
            log_e.push_back(std::log(err));
        }
    }
    if (log_h.size() < 2)
        throw NumericalError("observed_order: all errors at round-off floor, order indeterminate");

    // Least-squares slope of log_e against log_h.
    const double n = static_cast<double>(log_h.size());
    double sx = 0.0, sy = 0.0, sxx = 0.0, sxy = 0.0;
    for (std::size_t i = 0; i < log_h.size(); ++i) {
        sx += log_h[i];
        sy += log_e[i];
        sxx += log_h[i] * log_h[i];
        sxy += log_h[i] * log_e[i];
    }
    const double denom = n * sxx - sx * sx;
    if (std::abs(denom) < 1e-30)
        throw NumericalError("observed_order: degenerate step-size spread");
    return (n * sxy - sx * sy) / denom;
}

}  // namespace continuity
