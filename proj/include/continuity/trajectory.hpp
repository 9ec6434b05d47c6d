#pragma once

#include <cmath>
#include <cstddef>
#include <string>
#include <vector>

#include "continuity/errors.hpp"
#include "continuity/linalg.hpp"

namespace continuity {

// A time series of states.  `gaps[k]` is the authoritative spacing between
// samples k and k+1: generators record the gap they actually used, so
// downstream consumers (training pairs, spacing checks) see it exactly even
// when cumulative-sum round-off makes `times[k+1] - times[k]` differ in the
// last bit.
struct Trajectory {
    std::vector<double> times;
    std::vector<Vec> states;
    std::vector<double> gaps;  // size() == times.size() - 1

    std::size_t size() const { return times.size(); }
    std::size_t dim() const { return states.empty() ? 0 : states.front().size(); }

    double start_time() const { return times.front(); }
    double end_time() const { return times.back(); }
};

// Build a trajectory from times and states, deriving gaps from time
// differences.  Used by readers and tests that assemble trajectories by hand.
inline Trajectory make_trajectory(std::vector<double> times, std::vector<Vec> states) {
    Trajectory traj;
    traj.times = std::move(times);
    traj.states = std::move(states);
    if (traj.times.size() >= 2) {
        traj.gaps.resize(traj.times.size() - 1);
        for (std::size_t k = 0; k + 1 < traj.times.size(); ++k)
            traj.gaps[k] = traj.times[k + 1] - traj.times[k];
    }
    return traj;
}

// Check structural invariants: matching lengths, uniform state dimension,
// strictly increasing times, gaps consistent with time differences.
inline void validate(const Trajectory& traj) {
    if (traj.times.size() != traj.states.size())
        throw DataError("trajectory: times and states differ in length");
    if (traj.times.empty()) throw DataError("trajectory: empty");
    if (!traj.gaps.empty() && traj.gaps.size() != traj.times.size() - 1)
        throw DataError("trajectory: gaps length must be one less than times");
    const std::size_t d = traj.states.front().size();
    for (const Vec& s : traj.states) {
        if (s.size() != d) throw DimensionError("trajectory: inconsistent state dimension");
    }
    for (std::size_t k = 0; k + 1 < traj.times.size(); ++k) {
        if (!(traj.times[k + 1] > traj.times[k]))
            throw DataError("trajectory: times must be strictly increasing");
        if (!traj.gaps.empty()) {
            const double dt = traj.times[k + 1] - traj.times[k];
            const double tol = 1e-9 * std::max(1.0, std::abs(traj.times[k + 1]));
            if (std::abs(dt - traj.gaps[k]) > tol)
                throw DataError("trajectory: recorded gap disagrees with times at index " +
                                std::to_string(k));
        }
    }
}

// True when all gaps equal the first one to relative tolerance `rel_tol`.
inline bool is_regular(const Trajectory& traj, double rel_tol = 1e-9) {
    if (traj.size() < 2) return true;
    const double dt0 = traj.gaps.empty() ? traj.times[1] - traj.times[0] : traj.gaps[0];
    for (std::size_t k = 0; k + 1 < traj.size(); ++k) {
        const double g = traj.gaps.empty() ? traj.times[k + 1] - traj.times[k] : traj.gaps[k];
        if (std::abs(g - dt0) > rel_tol * std::max(1.0, std::abs(dt0))) return false;
    }
    return true;
}

// The uniform spacing of a regular trajectory.
inline double regular_dt(const Trajectory& traj) {
    if (traj.size() < 2) throw DataError("regular_dt: need at least two samples");
    if (!is_regular(traj)) throw DataError("regular_dt: trajectory is not regularly spaced");
    return traj.gaps.empty() ? traj.times[1] - traj.times[0] : traj.gaps[0];
}

}  // namespace continuity
