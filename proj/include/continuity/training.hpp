#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <memory>
#include <numeric>
#include <string>
#include <vector>

#include "continuity/errors.hpp"
#include "continuity/integrators.hpp"
#include "continuity/linalg.hpp"
#include "continuity/mlp.hpp"
#include "continuity/rng.hpp"
#include "continuity/trajectory.hpp"
#include "continuity/vector_field.hpp"

namespace continuity {

// One supervised step: reach x_next from x in time dt.
struct TrainPair {
    Vec x;
    Vec x_next;
    double dt = 0.0;
};

// Adjacent-sample pairs from one or more trajectories, each carrying its own
// recorded gap, so irregularly sampled data trains without resampling.
inline std::vector<TrainPair> make_pairs(const std::vector<Trajectory>& trajectories) {
    std::vector<TrainPair> pairs;
    for (const Trajectory& traj : trajectories) {
        if (traj.size() < 2) throw DataError("make_pairs: trajectory with fewer than two samples");
        if (traj.gaps.size() != traj.size() - 1)
            throw DataError("make_pairs: trajectory is missing its recorded gaps");
        for (std::size_t k = 0; k + 1 < traj.size(); ++k)
            pairs.push_back(TrainPair{traj.states[k], traj.states[k + 1], traj.gaps[k]});
    }
    if (pairs.empty()) throw DataError("make_pairs: no training pairs");
    return pairs;
}

enum class ModelKind { Linear, Shallow };

inline std::string model_kind_name(ModelKind kind) {
    return kind == ModelKind::Linear ? "linear" : "shallow";
}

inline ModelKind parse_model_kind(const std::string& name) {
    if (name == "linear") return ModelKind::Linear;
    if (name == "shallow") return ModelKind::Shallow;
    throw DataError("unknown model kind '" + name + "' (expected linear or shallow)");
}

struct TrainConfig {
    ModelKind model_kind = ModelKind::Shallow;
    int hidden_dim = 50;              // ignored for Linear
    SchemeKind scheme = SchemeKind::RK4;
    double learning_rate = 1e-3;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double adam_eps = 1e-8;
    double weight_decay = 1e-4;       // decoupled (applied to parameters, not gradients)
    long epochs = 5000;
    long batch_size = 0;              // 0 or >= pair count: full batch
    std::uint64_t seed = 0;
};

struct DtStats {
    double min = 0.0;
    double max = 0.0;
    double mean = 0.0;
};

struct TrainedModel {
    MlpParams params;
    ModelKind model_kind = ModelKind::Shallow;
    SchemeKind scheme = SchemeKind::RK4;
    double final_loss = 0.0;              // loss of the returned (best) snapshot
    std::vector<double> loss_history;     // per-epoch pre-update loss, plus a final evaluation
    DtStats train_dt_stats;
    std::uint64_t seed = 0;
    bool diverged = false;
};

namespace detail {

inline void zero_params(MlpParams& p) {
    for (Matrix& w : p.weights) std::fill(w.data.begin(), w.data.end(), 0.0);
    for (Vec& b : p.biases) std::fill(b.begin(), b.end(), 0.0);
}

inline DtStats dt_stats(const std::vector<TrainPair>& pairs) {
    DtStats s;
    s.min = pairs.front().dt;
    s.max = pairs.front().dt;
    double total = 0.0;
    for (const TrainPair& pr : pairs) {
        s.min = std::min(s.min, pr.dt);
        s.max = std::max(s.max, pr.dt);
        total += pr.dt;
    }
    s.mean = total / static_cast<double>(pairs.size());
    return s;
}

// One AdamW update over structured parameters.  m and v share the parameter
// shapes; t is the 1-based step count for bias correction.
struct AdamState {
    MlpParams m, v;
    long t = 0;
};

inline void adam_update(MlpParams& p, const MlpParams& grad, AdamState& state,
                        const TrainConfig& cfg) {
    ++state.t;
    const double bc1 = 1.0 - std::pow(cfg.beta1, static_cast<double>(state.t));
    const double bc2 = 1.0 - std::pow(cfg.beta2, static_cast<double>(state.t));
    auto update_span = [&](double* theta, double* m, double* v, const double* g, std::size_t n) {
        for (std::size_t i = 0; i < n; ++i) {
            m[i] = cfg.beta1 * m[i] + (1.0 - cfg.beta1) * g[i];
            v[i] = cfg.beta2 * v[i] + (1.0 - cfg.beta2) * g[i] * g[i];
            const double mhat = m[i] / bc1;
            const double vhat = v[i] / bc2;
            theta[i] -= cfg.learning_rate * (mhat / (std::sqrt(vhat) + cfg.adam_eps) +
                                             cfg.weight_decay * theta[i]);
        }
    };
    for (std::size_t l = 0; l < p.weights.size(); ++l) {
        update_span(p.weights[l].data.data(), state.m.weights[l].data.data(),
                    state.v.weights[l].data.data(), grad.weights[l].data.data(),
                    p.weights[l].data.size());
        update_span(p.biases[l].data(), state.m.biases[l].data(), state.v.biases[l].data(),
                    grad.biases[l].data(), p.biases[l].size());
    }
}

}  // namespace detail

// Mean one-step loss of `params` over all pairs.
inline double dataset_loss(SchemeKind scheme, const MlpParams& params,
                           const std::vector<TrainPair>& pairs) {
    double total = 0.0;
    for (const TrainPair& pr : pairs) total += one_step_loss(scheme, params, pr.x, pr.x_next, pr.dt);
    return total / static_cast<double>(pairs.size());
}

// Fit the network so one scheme step of size dt_n maps x_n to x_{n+1},
// minimizing the mean squared one-step error with AdamW.  Deterministic in
// (pairs, config): init, shuffling, and update order all derive from
// config.seed.  Returns the best snapshot seen (lowest recorded epoch loss,
// the final parameters included), so the result never regresses past init.
// If the loss turns non-finite, training stops and the last finite snapshot
// is returned with `diverged` set.
inline TrainedModel train(const std::vector<TrainPair>& pairs, const TrainConfig& cfg) {
    if (pairs.empty()) throw DataError("train: no training pairs");
    const std::size_t d = pairs.front().x.size();
    for (const TrainPair& pr : pairs) {
        if (pr.x.size() != d || pr.x_next.size() != d)
            throw DimensionError("train: inconsistent pair dimensions");
        if (!(pr.dt > 0.0)) throw DataError("train: pair gaps must be positive");
    }
    if (cfg.epochs < 1) throw DataError("train: need at least one epoch");
    if (cfg.model_kind == ModelKind::Shallow && cfg.hidden_dim < 1)
        throw DataError("train: hidden_dim must be positive");

    std::vector<std::size_t> dims;
    if (cfg.model_kind == ModelKind::Linear)
        dims = {d, d};
    else
        dims = {d, static_cast<std::size_t>(cfg.hidden_dim), d};

    TrainedModel model;
    model.model_kind = cfg.model_kind;
    model.scheme = cfg.scheme;
    model.seed = cfg.seed;
    model.train_dt_stats = detail::dt_stats(pairs);

    MlpParams params = init_mlp(dims, cfg.seed);
    detail::AdamState adam;
    adam.m = make_mlp(dims);
    adam.v = make_mlp(dims);
    MlpParams grad = make_mlp(dims);

    const std::size_t n = pairs.size();
    const std::size_t batch =
        (cfg.batch_size <= 0 || static_cast<std::size_t>(cfg.batch_size) >= n)
            ? n
            : static_cast<std::size_t>(cfg.batch_size);
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), std::size_t{0});
    // Shuffle draws come after the init draws in the same counter stream.
    CounterRng shuffle_rng(cfg.seed + 0x9E3779B97F4A7C15ULL);

    MlpParams best_params = params;
    double best_loss = std::numeric_limits<double>::infinity();
    MlpParams epoch_start = params;

    for (long epoch = 0; epoch < cfg.epochs; ++epoch) {
        epoch_start = params;
        if (batch < n) {
            // Fisher-Yates with counter-based draws.
            for (std::size_t i = n; i-- > 1;) {
                const std::size_t j = static_cast<std::size_t>(shuffle_rng.next_u64() % (i + 1));
                std::swap(order[i], order[j]);
            }
        }
        double epoch_loss = 0.0;
        bool finite = true;
        try {
            for (std::size_t start = 0; start < n; start += batch) {
                const std::size_t stop = std::min(start + batch, n);
                detail::zero_params(grad);
                double batch_loss = 0.0;
                for (std::size_t i = start; i < stop; ++i) {
                    const TrainPair& pr = pairs[order[i]];
                    batch_loss +=
                        detail::step_loss_grad_accum(cfg.scheme, params, pr.x, pr.x_next, pr.dt, grad);
                }
                const double inv = 1.0 / static_cast<double>(stop - start);
                batch_loss *= inv;
                for (Matrix& w : grad.weights)
                    for (double& g : w.data) g *= inv;
                for (Vec& b : grad.biases)
                    for (double& g : b) g *= inv;
                epoch_loss += batch_loss * static_cast<double>(stop - start);
                detail::adam_update(params, grad, adam, cfg);
            }
        } catch (const DivergenceError&) {
            finite = false;
        }
        if (!finite || !std::isfinite(epoch_loss)) {
            model.diverged = true;
            model.params = epoch_start;  // last snapshot with finite loss
            model.final_loss = model.loss_history.empty() ? std::numeric_limits<double>::infinity()
                                                          : model.loss_history.back();
            return model;
        }
        epoch_loss /= static_cast<double>(n);
        model.loss_history.push_back(epoch_loss);
        if (epoch_loss < best_loss) {
            best_loss = epoch_loss;
            best_params = epoch_start;
        }
    }

    // The final parameters never had their loss recorded in the loop; give
    // them the same chance as the per-epoch snapshots.
    const double final_loss = dataset_loss(cfg.scheme, params, pairs);
    model.loss_history.push_back(final_loss);
    if (final_loss < best_loss) {
        best_loss = final_loss;
        best_params = params;
    }
    model.params = best_params;
    model.final_loss = best_loss;
    return model;
}

// Wrap the learned network as a vector field for the integrators.  The
// parameters are copied into shared storage; the field is pure and safe for
// concurrent evaluation.
inline VectorField as_field(const TrainedModel& model) {
    if (model.params.weights.empty()) throw DimensionError("as_field: empty model");
    const auto params = std::make_shared<const MlpParams>(model.params);
    const int d = static_cast<int>(params->weights.front().cols);
    if (params->weights.back().rows != static_cast<std::size_t>(d))
        throw DimensionError("as_field: model input and output dimensions differ");
    return make_field(d, [params](const Vec& x) { return mlp_eval(*params, x); });
}

}  // namespace continuity
