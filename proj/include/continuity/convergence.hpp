#pragma once

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstddef>
#include <limits>
#include <string>
#include <thread>
#include <vector>

#include "continuity/errors.hpp"
#include "continuity/integrators.hpp"
#include "continuity/linalg.hpp"
#include "continuity/trajectory.hpp"
#include "continuity/training.hpp"
#include "continuity/vector_field.hpp"

namespace continuity {

// How a model rollout is compared against a validation trajectory.
//
//   Endpoint:       distance at the final sample only
//   MaxOverPoints:  max distance over the stride-s subset of samples
//   MeanOverSubset: mean distance over the stride-s subset of samples
//
// The metric determines the span the inference step must divide: the whole
// duration for Endpoint, stride*dt for the subset metrics.
enum class ErrorMetric { Endpoint, MaxOverPoints, MeanOverSubset };

inline std::string metric_name(ErrorMetric metric) {
    switch (metric) {
        case ErrorMetric::Endpoint: return "endpoint";
        case ErrorMetric::MaxOverPoints: return "max_over_points";
        case ErrorMetric::MeanOverSubset: return "mean_over_subset";
    }
    throw Error("metric_name: unknown metric");
}

inline ErrorMetric parse_metric(const std::string& name) {
    if (name == "endpoint") return ErrorMetric::Endpoint;
    if (name == "max_over_points") return ErrorMetric::MaxOverPoints;
    if (name == "mean_over_subset") return ErrorMetric::MeanOverSubset;
    throw DataError("unknown error metric '" + name + "'");
}

struct TestConfig {
    int m = 10;                                     // grid spans 1.1^{-m}..1.1^{+m} around dt
    double epsilon = 0.5;                           // pass margin: Error(h) <= (1+eps) Error(dt)
    ErrorMetric metric = ErrorMetric::MeanOverSubset;
    int stride = 5;                                 // subset stride s for the subset metrics
};

// Inference step-size grid: dt * 1.1^i for i = -m..m, ascending.  The i = 0
// entry is exactly dt.
inline std::vector<double> h_grid(double dt, int m) {
    if (!(dt > 0.0)) throw DataError("h_grid: dt must be positive");
    if (m < 1) throw DataError("h_grid: m must be at least 1");
    std::vector<double> grid;
    grid.reserve(2 * m + 1);
    for (int i = -m; i <= m; ++i) grid.push_back(dt * std::pow(1.1, i));
    return grid;
}

// Snap h to the nearest exact divisor of span: span / round(span/h), with
// halves rounded away from zero and the divisor at least 1 (so h >= span
// clamps to span).
inline double nudge(double h, double span) {
    if (!(h > 0.0) || !(span > 0.0)) throw DataError("nudge: h and span must be positive");
    const long long divisor = std::max(1LL, std::llround(span / h));
    return span / static_cast<double>(divisor);
}

// Error of the chained model rollout against one regularly sampled
// validation trajectory at inference step h.  The rollout starts from the
// trajectory's first state and never restarts; it is compared wherever it
// lands on a subset sample (or only at the end, for Endpoint).  h must
// divide the metric's span (use nudge); misalignment raises AlignmentError,
// and a divergent rollout propagates DivergenceError.
inline double trajectory_error(const VectorField& field, SchemeKind scheme, double h,
                               const Trajectory& val, ErrorMetric metric, int stride = 5) {
    if (val.size() < 2) throw DataError("trajectory_error: validation needs at least two samples");
    (void)regular_dt(val);  // rejects irregular spacing

    if (metric == ErrorMetric::Endpoint) {
        const std::vector<double> targets{val.times.front(), val.times.back()};
        const std::vector<Vec> states =
            rollout_to_times(scheme, field, val.states.front(), h, targets);
        return dist2(states.back(), val.states.back());
    }

    if (stride < 1) throw DataError("trajectory_error: stride must be positive");
    const std::size_t last = ((val.size() - 1) / stride) * stride;
    if (last == 0)
        throw DataError("trajectory_error: stride leaves no comparison points");
    std::vector<double> targets;
    std::vector<std::size_t> subset;
    for (std::size_t idx = 0; idx <= last; idx += stride) {
        targets.push_back(val.times[idx]);
        subset.push_back(idx);
    }
    const std::vector<Vec> states = rollout_to_times(scheme, field, val.states.front(), h, targets);

    double acc = 0.0;
    std::size_t count = 0;
    for (std::size_t j = 1; j < subset.size(); ++j) {  // index 0 is trivially exact
        const double err = dist2(states[j], val.states[subset[j]]);
        if (metric == ErrorMetric::MaxOverPoints)
            acc = std::max(acc, err);
        else
            acc += err;
        ++count;
    }
    return metric == ErrorMetric::MaxOverPoints ? acc : acc / static_cast<double>(count);
}

// One evaluated point of the sweep.
struct CurvePoint {
    int grid_index = 0;        // i in h = dt * 1.1^i
    double h_target = 0.0;     // grid value before snapping
    double h = 0.0;            // snapped inference step actually used
    double error = 0.0;        // mean across trajectories (inf if any diverged)
    std::vector<double> per_traj;
    bool clamped = false;      // h_target exceeded the span and was clamped
};

// A grid value that could not be honored: no divisor of the span lies
// within 10% of it (only happens above dt for the subset metrics).
struct DroppedPoint {
    int grid_index = 0;
    double h_target = 0.0;
    double nearest = 0.0;
};

struct TrajectorySummary {
    bool passed = false;
    double error_at_dt = 0.0;
    double plateau_b = 0.0;
};

struct ConvergenceReport {
    double dt = 0.0;
    SchemeKind scheme = SchemeKind::Euler;
    TestConfig config;
    std::vector<CurvePoint> points;          // ascending h, deduplicated
    std::vector<DroppedPoint> dropped;
    double error_at_dt = std::numeric_limits<double>::infinity();
    double plateau_b = std::numeric_limits<double>::infinity();
    bool passed = false;
    std::vector<TrajectorySummary> per_trajectory;
};

namespace detail {

// Plateau estimate: mean error of the three smallest tested h (the points
// vector is ascending in h).  `extract` reads the error of one point.
template <class Extract>
inline double plateau_from_points(const std::vector<CurvePoint>& points, Extract extract) {
    const std::size_t n = std::min<std::size_t>(3, points.size());
    if (n == 0) return std::numeric_limits<double>::infinity();
    double acc = 0.0;
    for (std::size_t i = 0; i < n; ++i) acc += extract(points[i]);
    return acc / static_cast<double>(n);
}

}  // namespace detail

// Sweep the inference step over h_grid(dt, m), score each step with the
// configured metric, and decide convergence: a trajectory passes when
// Error(h) <= (1 + epsilon) * Error(dt) for every tested h < dt, and the
// whole test passes when every validation trajectory does.  Divergent
// rollouts score +inf instead of aborting.  `jobs` bounds the worker threads
// used for the sweep; the result does not depend on it.
inline ConvergenceReport run_convergence_test(const VectorField& field, SchemeKind scheme,
                                              const std::vector<Trajectory>& vals,
                                              const TestConfig& config, int jobs = 1) {
    if (vals.empty()) throw DataError("run_convergence_test: no validation trajectories");
    const double dt = regular_dt(vals.front());
    for (const Trajectory& val : vals) {
        const double other = regular_dt(val);
        if (std::abs(other - dt) > 1e-9 * dt)
            throw DataError("run_convergence_test: validation trajectories disagree on dt");
    }

    ConvergenceReport report;
    report.dt = dt;
    report.scheme = scheme;
    report.config = config;

    // Snap every grid value first; duplicates collapse onto one evaluation.
    const std::vector<double> grid = h_grid(dt, config.m);
    std::vector<CurvePoint> points;
    for (int i = -config.m; i <= config.m; ++i) {
        const double h_target = grid[i + config.m];
        double span;
        if (config.metric == ErrorMetric::Endpoint) {
            span = static_cast<double>(vals.front().size() - 1) * dt;
        } else {
            span = static_cast<double>(config.stride) * dt;
        }
        const double h = nudge(h_target, span);
        if (std::abs(h - h_target) > 0.10 * h_target) {
            report.dropped.push_back(DroppedPoint{i, h_target, h});
            continue;
        }
        bool duplicate = false;
        for (CurvePoint& existing : points) {
            if (existing.h == h) {
                if (i == 0) existing.grid_index = 0;  // keep the dt label on the dt point
                duplicate = true;
                break;
            }
        }
        if (duplicate) continue;
        CurvePoint pt;
        pt.grid_index = i;
        pt.h_target = h_target;
        pt.h = h;
        pt.clamped = h_target > span;
        points.push_back(pt);
    }

    // Evaluate every (point, trajectory) error, optionally across threads.
    const std::size_t n_traj = vals.size();
    for (CurvePoint& pt : points) pt.per_traj.assign(n_traj, 0.0);
    const std::size_t total = points.size() * n_traj;
    auto eval_one = [&](std::size_t flat) {
        CurvePoint& pt = points[flat / n_traj];
        const std::size_t t = flat % n_traj;
        double err;
        try {
            err = trajectory_error(field, scheme, pt.h, vals[t], config.metric, config.stride);
        } catch (const DivergenceError&) {
            err = std::numeric_limits<double>::infinity();
        }
        pt.per_traj[t] = err;
    };
    const int workers = std::max(1, jobs);
    if (workers == 1 || total <= 1) {
        for (std::size_t flat = 0; flat < total; ++flat) eval_one(flat);
    } else {
        std::atomic<std::size_t> cursor{0};
        auto drain = [&] {
            for (std::size_t flat = cursor.fetch_add(1); flat < total; flat = cursor.fetch_add(1))
                eval_one(flat);
        };
        std::vector<std::thread> pool;
        const int spawn = static_cast<int>(std::min<std::size_t>(workers, total));
        pool.reserve(spawn);
        for (int w = 0; w < spawn; ++w) pool.emplace_back(drain);
        for (std::thread& th : pool) th.join();
    }
    for (CurvePoint& pt : points) {
        double acc = 0.0;
        for (double e : pt.per_traj) acc += e;
        pt.error = acc / static_cast<double>(n_traj);
    }
    report.points = std::move(points);

    // Locate the dt point (grid index 0; always present, nudge(dt) == dt).
    const CurvePoint* at_dt = nullptr;
    for (const CurvePoint& pt : report.points)
        if (pt.grid_index == 0) at_dt = &pt;
    if (at_dt == nullptr)
        throw NumericalError("run_convergence_test: dt point missing from the sweep");
    report.error_at_dt = at_dt->error;
    report.plateau_b =
        detail::plateau_from_points(report.points, [](const CurvePoint& pt) { return pt.error; });

    // Per-trajectory verdicts; the aggregate passes only if all do.
    const double h_dt_cut = dt * (1.0 - 1e-12);
    report.per_trajectory.resize(n_traj);
    bool all_pass = true;
    for (std::size_t t = 0; t < n_traj; ++t) {
        TrajectorySummary& summary = report.per_trajectory[t];
        const double err_dt = at_dt->per_traj[t];
        summary.error_at_dt = err_dt;
        summary.plateau_b = detail::plateau_from_points(
            report.points, [t](const CurvePoint& pt) { return pt.per_traj[t]; });
        bool ok = std::isfinite(err_dt);
        const double allowance = (1.0 + config.epsilon) * err_dt;
        for (const CurvePoint& pt : report.points) {
            if (pt.h >= h_dt_cut) continue;
            if (!(pt.per_traj[t] <= allowance)) {
                ok = false;
                break;
            }
        }
        summary.passed = ok;
        all_pass = all_pass && ok;
    }
    report.passed = all_pass;
    return report;
}

// Result of the order-discovery loop.
struct DiscoverResult {
    TrainedModel model;
    ConvergenceReport report;
    int order_used = 0;
    bool converged = false;
    std::vector<std::string> notes;
};

// Train at increasing scheme order (1, 2, 4, capped at quit_order), testing
// each model for convergence, and return the first that passes.  A training
// run that diverges is noted and skipped.  If no order passes, the last
// trained model and its report are returned with converged = false.
inline DiscoverResult discover(const std::vector<TrainPair>& pairs,
                               const std::vector<Trajectory>& vals, const TrainConfig& base_train,
                               const TestConfig& test_config, int quit_order = 4, int jobs = 1) {
    if (quit_order < 1 || quit_order > 4)
        throw DataError("discover: quit_order must lie in [1, 4]");
    DiscoverResult result;
    bool have_any = false;
    for (int p : {1, 2, 4}) {
        if (p > quit_order) break;
        TrainConfig cfg = base_train;
        cfg.scheme = scheme_of_order(p);
        TrainedModel model = train(pairs, cfg);
        if (model.diverged) {
            result.notes.push_back("order " + std::to_string(p) +
                                   ": training diverged, skipping");
            continue;
        }
        ConvergenceReport report = run_convergence_test(as_field(model), cfg.scheme, vals,
                                                        test_config, jobs);
        result.model = std::move(model);
        result.report = std::move(report);
        result.order_used = p;
        have_any = true;
        if (result.report.passed) {
            result.converged = true;
            return result;
        }
        result.notes.push_back("order " + std::to_string(p) + ": convergence test failed");
    }
    if (!have_any)
        throw NumericalError("discover: every candidate order diverged in training");
    result.converged = false;
    return result;
}

}  // namespace continuity
