#pragma once

#include <cmath>
#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "continuity/errors.hpp"
#include "continuity/integrators.hpp"
#include "continuity/linalg.hpp"
#include "continuity/rng.hpp"
#include "continuity/trajectory.hpp"
#include "continuity/vector_field.hpp"

namespace continuity {

// Benchmark dynamical systems.
//
//   HarmonicOscillator:  dx/dt = y,            dy/dt = -x
//   NonlinearPendulum:   dθ/dt = v,            dv/dt = -ω0² sin θ
//   LotkaVolterra:       dx/dt = ax - bxy,     dy/dt = cxy - dy
//   CartesianPendulum:   pendulum in ambient coordinates (x, y, vx, vy) with
//                        y measured along gravity; the rod constraint
//                        x² + y² = L² is enforced through the auxiliary
//                        scalar f = -((vx² + vy²) + g·y)/L:
//                        dx = vx, dy = vy, dvx = f·x/L, dvy = f·y/L + g
enum class SystemKind { HarmonicOscillator, NonlinearPendulum, LotkaVolterra, CartesianPendulum };

struct SystemSpec {
    SystemKind kind = SystemKind::HarmonicOscillator;
    double omega0 = 1.0;                                      // pendulum frequency
    double lv_a = 1.5, lv_b = 1.0, lv_c = 1.0, lv_d = 3.0;    // Lotka-Volterra rates
    double length = 1.0, gravity = 1.0;                       // Cartesian pendulum rod/field
};

inline int state_dim(const SystemSpec& spec) {
    return spec.kind == SystemKind::CartesianPendulum ? 4 : 2;
}

inline std::string system_name(SystemKind kind) {
    switch (kind) {
        case SystemKind::HarmonicOscillator: return "harmonic";
        case SystemKind::NonlinearPendulum: return "pendulum";
        case SystemKind::LotkaVolterra: return "lotka_volterra";
        case SystemKind::CartesianPendulum: return "cartesian_pendulum";
    }
    throw Error("system_name: unknown system");
}

inline SystemKind parse_system(const std::string& name) {
    if (name == "harmonic") return SystemKind::HarmonicOscillator;
    if (name == "pendulum") return SystemKind::NonlinearPendulum;
    if (name == "lotka_volterra") return SystemKind::LotkaVolterra;
    if (name == "cartesian_pendulum") return SystemKind::CartesianPendulum;
    throw DataError("unknown system '" + name + "'");
}

// Parameters as a flat map for metadata sidecars.
inline std::map<std::string, double> system_params(const SystemSpec& spec) {
    switch (spec.kind) {
        case SystemKind::HarmonicOscillator: return {};
        case SystemKind::NonlinearPendulum: return {{"omega0", spec.omega0}};
        case SystemKind::LotkaVolterra:
            return {{"a", spec.lv_a}, {"b", spec.lv_b}, {"c", spec.lv_c}, {"d", spec.lv_d}};
        case SystemKind::CartesianPendulum:
            return {{"length", spec.length}, {"gravity", spec.gravity}};
    }
    throw Error("system_params: unknown system");
}

inline void apply_system_params(SystemSpec& spec, const std::map<std::string, double>& params) {
    for (const auto& [key, value] : params) {
        if (key == "omega0") spec.omega0 = value;
        else if (key == "a") spec.lv_a = value;
        else if (key == "b") spec.lv_b = value;
        else if (key == "c") spec.lv_c = value;
        else if (key == "d") spec.lv_d = value;
        else if (key == "length") spec.length = value;
        else if (key == "gravity") spec.gravity = value;
        else throw DataError("unknown system parameter '" + key + "'");
    }
}

// Analytic right-hand side of the system.
inline VectorField field(const SystemSpec& spec) {
    switch (spec.kind) {
        case SystemKind::HarmonicOscillator:
            return make_field(2, [](const Vec& s) { return Vec{s[1], -s[0]}; });
        case SystemKind::NonlinearPendulum: {
            const double w2 = spec.omega0 * spec.omega0;
            return make_field(2, [w2](const Vec& s) { return Vec{s[1], -w2 * std::sin(s[0])}; });
        }
        case SystemKind::LotkaVolterra: {
            const double a = spec.lv_a, b = spec.lv_b, c = spec.lv_c, d = spec.lv_d;
            return make_field(2, [a, b, c, d](const Vec& s) {
                return Vec{a * s[0] - b * s[0] * s[1], c * s[0] * s[1] - d * s[1]};
            });
        }
        case SystemKind::CartesianPendulum: {
            const double L = spec.length, g = spec.gravity;
            return make_field(4, [L, g](const Vec& s) {
                const double vx = s[2], vy = s[3];
                const double f = -((vx * vx + vy * vy) + g * s[1]) / L;
                return Vec{vx, vy, f * s[0] / L, f * s[1] / L + g};
            });
        }
    }
    throw Error("field: unknown system");
}

// ---- Cartesian pendulum coordinate maps -----------------------------------

// (θ, v) -> (x, y, vx, vy) on the rod circle, θ measured from the hanging
// position (y along gravity): x = L sinθ, y = L cosθ.
inline Vec cartesian_from_angle(double theta, double v, const SystemSpec& spec) {
    const double L = spec.length;
    return Vec{L * std::sin(theta), L * std::cos(theta),
               L * std::cos(theta) * v, -L * std::sin(theta) * v};
}

// Inverse of cartesian_from_angle.  The state must lie on the constraint
// circle with tangential velocity; tolerance 1e-9 relative to L.
inline void angle_from_cartesian(const Vec& s, const SystemSpec& spec,
                                 double& theta, double& v) {
    if (s.size() != 4) throw DimensionError("angle_from_cartesian: need a 4-d state");
    const double L = spec.length;
    const double radius_err = std::abs(s[0] * s[0] + s[1] * s[1] - L * L);
    const double radial_vel = std::abs(s[0] * s[2] + s[1] * s[3]);
    const double scale = std::max(1.0, L * L);
    if (radius_err > 1e-9 * scale || radial_vel > 1e-9 * scale)
        throw DataError("cartesian pendulum state is off the rod constraint");
    theta = std::atan2(s[0], s[1]);
    v = (s[2] * std::cos(theta) - s[3] * std::sin(theta)) / L;
}

// Signed constraint residual x² + y² - L².
inline double rod_constraint_residual(const Vec& s, const SystemSpec& spec) {
    return s[0] * s[0] + s[1] * s[1] - spec.length * spec.length;
}

// ---- Reference (oracle) integration ---------------------------------------

namespace detail {

// Advance the system's oracle solution by `gap`.  The harmonic oscillator
// uses its closed-form rotation; the pendulum and Lotka-Volterra systems are
// integrated with the order-4 scheme at gap/n_sub; the Cartesian pendulum is
// integrated in angle space and mapped back, so the rod constraint holds to
// round-off along the whole trajectory.
inline Vec advance_exact(const SystemSpec& spec, const Vec& x, double gap, int n_sub = 1000) {
    switch (spec.kind) {
        case SystemKind::HarmonicOscillator: {
            const double c = std::cos(gap), s = std::sin(gap);
            return Vec{c * x[0] + s * x[1], -s * x[0] + c * x[1]};
        }
        case SystemKind::NonlinearPendulum:
        case SystemKind::LotkaVolterra: {
            const VectorField f = field(spec);
            Vec state = x;
            const double h = gap / n_sub;
            for (int k = 0; k < n_sub; ++k) state = step(SchemeKind::RK4, f, state, h, k);
            return state;
        }
        case SystemKind::CartesianPendulum: {
            double theta = 0.0, v = 0.0;
            angle_from_cartesian(x, spec, theta, v);
            SystemSpec angle_spec;
            angle_spec.kind = SystemKind::NonlinearPendulum;
            angle_spec.omega0 = std::sqrt(spec.gravity / spec.length);
            const VectorField f = field(angle_spec);
            Vec state{theta, v};
            const double h = gap / n_sub;
            for (int k = 0; k < n_sub; ++k) state = step(SchemeKind::RK4, f, state, h, k);
            return cartesian_from_angle(state[0], state[1], spec);
        }
    }
    throw Error("advance_exact: unknown system");
}

}  // namespace detail

// Regularly sampled oracle trajectory: n_points samples at spacing dt
// starting from x0 at t = 0.  n_sub is the internal refinement used between
// samples for systems without a closed form.
inline Trajectory reference_trajectory(const SystemSpec& spec, const Vec& x0, double dt,
                                       int n_points, int n_sub = 1000) {
    if (n_points < 1) throw DataError("reference_trajectory: need at least one sample");
    if (!(dt > 0.0)) throw DataError("reference_trajectory: dt must be positive");
    if (static_cast<int>(x0.size()) != state_dim(spec))
        throw DimensionError("reference_trajectory: state dimension mismatch");
    Trajectory traj;
    traj.times.reserve(n_points);
    traj.states.reserve(n_points);
    traj.gaps.assign(n_points > 1 ? n_points - 1 : 0, dt);
    Vec x = x0;
    traj.times.push_back(0.0);
    traj.states.push_back(x);
    for (int k = 1; k < n_points; ++k) {
        x = detail::advance_exact(spec, x, dt, n_sub);
        traj.times.push_back(static_cast<double>(k) * dt);
        traj.states.push_back(x);
    }
    return traj;
}

// ---- Irregular sampling ----------------------------------------------------

struct SamplingSpec {
    double dt = 0.1;          // nominal spacing
    int n_points = 100;       // samples before any drops
    double jitter_frac = 0.2; // each gap is dt * (1 + U(-jitter_frac, +jitter_frac))
    double skip_prob = 0.1;   // probability of dropping each interior sample
};

// Jittered, gappy sampling of the oracle solution.  The nominal grid gets
// per-gap jitter first, then each interior sample is dropped independently
// with probability skip_prob (adjacent gaps merge).  First and last samples
// are always kept; states come from the oracle at the exact realized times,
// and the realized gap sequence is recorded verbatim in Trajectory::gaps.
// All draws come from a counter-based generator, so the result is a pure
// function of (spec, x0, sampling, seed).
inline Trajectory irregular_trajectory(const SystemSpec& spec, const Vec& x0,
                                       const SamplingSpec& sampling, std::uint64_t seed,
                                       int n_sub = 1000) {
    if (sampling.n_points < 2) throw DataError("irregular_trajectory: need at least two samples");
    if (!(sampling.dt > 0.0)) throw DataError("irregular_trajectory: dt must be positive");
    if (sampling.jitter_frac < 0.0 || sampling.jitter_frac >= 0.5)
        throw DataError("irregular_trajectory: jitter_frac must lie in [0, 0.5)");
    if (sampling.skip_prob < 0.0 || sampling.skip_prob > 1.0)
        throw DataError("irregular_trajectory: skip_prob must lie in [0, 1]");
    if (static_cast<int>(x0.size()) != state_dim(spec))
        throw DimensionError("irregular_trajectory: state dimension mismatch");

    CounterRng rng(seed);
    const int n = sampling.n_points;

    // Draw all raw gaps first, then all drop decisions, so the stream layout
    // is stable under changes to either half.
    std::vector<double> raw_gaps(n - 1);
    for (int k = 0; k < n - 1; ++k) {
        const double u = sampling.jitter_frac == 0.0
                             ? 0.0
                             : rng.uniform(-sampling.jitter_frac, sampling.jitter_frac);
        raw_gaps[k] = sampling.dt * (1.0 + u);
    }
    std::vector<bool> keep(n, true);
    for (int k = 1; k < n - 1; ++k) {
        if (rng.uniform() < sampling.skip_prob) keep[k] = false;
    }
    if (n >= 3) {
        bool any_interior = false;
        for (int k = 1; k < n - 1; ++k) any_interior = any_interior || keep[k];
        if (!any_interior)
            throw DataError("irregular_trajectory: all interior samples dropped, "
                            "trajectory degenerate");
    }

    Trajectory traj;
    Vec x = x0;
    traj.times.push_back(0.0);
    traj.states.push_back(x);
    double t = 0.0;
    double pending = 0.0;  // accumulated gap since the last kept sample
    for (int k = 1; k < n; ++k) {
        pending += raw_gaps[k - 1];
        if (!keep[k]) continue;
        x = detail::advance_exact(spec, x, pending, n_sub);
        t += pending;
        traj.times.push_back(t);
        traj.states.push_back(x);
        traj.gaps.push_back(pending);
        pending = 0.0;
    }
    return traj;
}

// Decorrelated per-trajectory seed stream for datasets: trajectory k of a
// dataset seeded with `seed` uses this value, and a sidecar recording it can
// regenerate that trajectory alone.
inline std::uint64_t trajectory_seed(std::uint64_t seed, std::size_t index) {
    return seed + index * 0x517CC1B727220A95ULL;
}

// One trajectory per initial condition.  Each trajectory gets its own
// decorrelated seed stream derived from `seed` and its index.
inline std::vector<Trajectory> multi_ic_dataset(const SystemSpec& spec,
                                                const std::vector<Vec>& ics,
                                                const SamplingSpec& sampling,
                                                std::uint64_t seed, int n_sub = 1000) {
    if (ics.empty()) throw DataError("multi_ic_dataset: no initial conditions");
    std::vector<Trajectory> out;
    out.reserve(ics.size());
    for (std::size_t k = 0; k < ics.size(); ++k)
        out.push_back(irregular_trajectory(spec, ics[k], sampling, trajectory_seed(seed, k), n_sub));
    return out;
}

// ---- Conserved quantities (test oracles) ----------------------------------

// A first integral of the system, constant along exact solutions:
// harmonic energy, pendulum energy, the Lotka-Volterra log-integral, and
// the Cartesian pendulum energy respectively.
inline double conserved_quantity(const SystemSpec& spec, const Vec& s) {
    switch (spec.kind) {
        case SystemKind::HarmonicOscillator:
            return 0.5 * (s[0] * s[0] + s[1] * s[1]);
        case SystemKind::NonlinearPendulum:
            return 0.5 * s[1] * s[1] - spec.omega0 * spec.omega0 * std::cos(s[0]);
        case SystemKind::LotkaVolterra:
            if (!(s[0] > 0.0) || !(s[1] > 0.0))
                throw DataError("Lotka-Volterra integral needs positive populations");
            return spec.lv_c * s[0] + spec.lv_b * s[1] - spec.lv_d * std::log(s[0]) -
                   spec.lv_a * std::log(s[1]);
        case SystemKind::CartesianPendulum:
            return 0.5 * (s[2] * s[2] + s[3] * s[3]) - spec.gravity * s[1];
    }
    throw Error("conserved_quantity: unknown system");
}

}  // namespace continuity
