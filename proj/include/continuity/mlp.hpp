#pragma once

#include <cmath>
#include <cstdint>
#include <cstddef>
#include <vector>

#include "continuity/errors.hpp"
#include "continuity/integrators.hpp"
#include "continuity/linalg.hpp"
#include "continuity/rng.hpp"

namespace continuity {

// Fully connected network N(x): affine layers with tanh on hidden layers and
// identity on the output layer.  A "linear" model is the degenerate case with
// no hidden layer (a single affine map).  All arithmetic is in doubles.
struct MlpParams {
    std::vector<Matrix> weights;  // weights[l] has shape dims[l+1] x dims[l]
    std::vector<Vec> biases;      // biases[l] has length dims[l+1]

    std::size_t layer_count() const { return weights.size(); }

    std::vector<std::size_t> layer_dims() const {
        std::vector<std::size_t> dims;
        if (weights.empty()) return dims;
        dims.push_back(weights.front().cols);
        for (const Matrix& w : weights) dims.push_back(w.rows);
        return dims;
    }

    std::size_t param_count() const {
        std::size_t n = 0;
        for (const Matrix& w : weights) n += w.data.size();
        for (const Vec& b : biases) n += b.size();
        return n;
    }
};

// Zero-initialized parameters with the given layer sizes, e.g. {2, 50, 2}
// for one hidden layer of width 50, or {2, 2} for a plain linear map.
inline MlpParams make_mlp(const std::vector<std::size_t>& dims) {
    if (dims.size() < 2) throw DimensionError("make_mlp: need at least input and output dims");
    MlpParams p;
    for (std::size_t l = 0; l + 1 < dims.size(); ++l) {
        p.weights.emplace_back(dims[l + 1], dims[l], 0.0);
        p.biases.emplace_back(dims[l + 1], 0.0);
    }
    return p;
}

// Uniform(-r, r) weight init with r = sqrt(6 / (fan_in + fan_out)), zero
// biases.  Deterministic in (dims, seed).
inline MlpParams init_mlp(const std::vector<std::size_t>& dims, std::uint64_t seed) {
    MlpParams p = make_mlp(dims);
    CounterRng rng(seed);
    for (Matrix& w : p.weights) {
        const double r = std::sqrt(6.0 / static_cast<double>(w.cols + w.rows));
        for (double& v : w.data) v = rng.uniform(-r, r);
    }
    return p;
}

namespace detail {

// Forward activations of one evaluation: act[0] is the input, act[l+1] the
// output of layer l (post-tanh for hidden layers).  tanh' is recovered from
// the stored post-activation as 1 - a², so pre-activations need not be kept.
struct MlpTape {
    std::vector<Vec> act;
};

inline Vec mlp_forward(const MlpParams& p, const Vec& x, MlpTape* tape) {
    if (p.weights.empty()) throw DimensionError("mlp_forward: empty network");
    if (x.size() != p.weights.front().cols)
        throw DimensionError("mlp_forward: input dimension mismatch");
    Vec a = x;
    if (tape) tape->act.assign(1, a);
    const std::size_t L = p.weights.size();
    for (std::size_t l = 0; l < L; ++l) {
        Vec z = matvec(p.weights[l], a);
        axpy(1.0, p.biases[l], z);
        if (l + 1 < L) {
            for (double& v : z) v = std::tanh(v);
        }
        a = std::move(z);
        if (tape) tape->act.push_back(a);
    }
    return a;
}

// Reverse pass: given d(loss)/d(output), accumulate parameter gradients into
// `grad` and return d(loss)/d(input).
inline Vec mlp_backward(const MlpParams& p, const MlpTape& tape, Vec cotangent,
                        MlpParams& grad) {
    const std::size_t L = p.weights.size();
    for (std::size_t l = L; l-- > 0;) {
        if (l + 1 < L) {
            const Vec& a = tape.act[l + 1];
            for (std::size_t i = 0; i < cotangent.size(); ++i)
                cotangent[i] *= 1.0 - a[i] * a[i];
        }
        const Vec& in = tape.act[l];
        Matrix& gw = grad.weights[l];
        for (std::size_t i = 0; i < gw.rows; ++i) {
            const double gi = cotangent[i];
            double* grow = gw.data.data() + i * gw.cols;
            for (std::size_t j = 0; j < gw.cols; ++j) grow[j] += gi * in[j];
        }
        axpy(1.0, cotangent, grad.biases[l]);
        // Propagate through the affine map: cot_in = W^T cot_out.
        const Matrix& w = p.weights[l];
        Vec next(w.cols, 0.0);
        for (std::size_t i = 0; i < w.rows; ++i) {
            const double gi = cotangent[i];
            const double* wrow = w.data.data() + i * w.cols;
            for (std::size_t j = 0; j < w.cols; ++j) next[j] += gi * wrow[j];
        }
        cotangent = std::move(next);
    }
    return cotangent;
}

}  // namespace detail

// Evaluate the network.
inline Vec mlp_eval(const MlpParams& p, const Vec& x) {
    return detail::mlp_forward(p, x, nullptr);
}

// One explicit scheme step of the field x -> N(x), forward only.
inline Vec mlp_step(SchemeKind scheme, const MlpParams& p, const Vec& x, double h) {
    switch (scheme) {
        case SchemeKind::Euler: {
            return scaled_sum(x, h, mlp_eval(p, x));
        }
        case SchemeKind::Midpoint: {
            Vec k1 = mlp_eval(p, x);
            Vec k2 = mlp_eval(p, scaled_sum(x, 0.5 * h, k1));
            return scaled_sum(x, h, k2);
        }
        case SchemeKind::RK4: {
            Vec k1 = mlp_eval(p, x);
            Vec k2 = mlp_eval(p, scaled_sum(x, 0.5 * h, k1));
            Vec k3 = mlp_eval(p, scaled_sum(x, 0.5 * h, k2));
            Vec k4 = mlp_eval(p, scaled_sum(x, h, k3));
            Vec out = x;
            const double w = h / 6.0;
            for (std::size_t i = 0; i < out.size(); ++i)
                out[i] += w * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
            return out;
        }
    }
    throw Error("mlp_step: unknown scheme");
}

// Squared-error one-step loss and its exact parameter gradient.
struct GradientRecord {
    double loss = 0.0;
    MlpParams grads;  // same shapes as the parameters
};

namespace detail {

// Core of the one-step gradient: accumulates into `grads` (same shapes as p)
// and returns the loss, so batch loops can reuse one accumulator.
inline double step_loss_grad_accum(SchemeKind scheme, const MlpParams& p, const Vec& x,
                                   const Vec& x_target, double h, MlpParams& grads) {
    if (x.size() != x_target.size())
        throw DimensionError("one_step_loss_grad: state/target dimension mismatch");
    const std::size_t d = x.size();
    double loss = 0.0;
    auto finish = [&](const Vec& y) {
        loss = 0.0;
        Vec gy(d);
        for (std::size_t i = 0; i < d; ++i) {
            const double r = y[i] - x_target[i];
            loss += r * r;
            gy[i] = 2.0 * r;
        }
        if (!std::isfinite(loss))
            throw DivergenceError("one_step_loss_grad: non-finite loss", stage_count(scheme), -1);
        return gy;
    };

    switch (scheme) {
        case SchemeKind::Euler: {
            MlpTape t1;
            Vec k1 = mlp_forward(p, x, &t1);
            Vec y = scaled_sum(x, h, k1);
            Vec gy = finish(y);
            Vec gk1(d);
            for (std::size_t i = 0; i < d; ++i) gk1[i] = h * gy[i];
            mlp_backward(p, t1, std::move(gk1), grads);
            return loss;
        }
        case SchemeKind::Midpoint: {
            MlpTape t1, t2;
            Vec k1 = mlp_forward(p, x, &t1);
            Vec u2 = scaled_sum(x, 0.5 * h, k1);
            Vec k2 = mlp_forward(p, u2, &t2);
            Vec y = scaled_sum(x, h, k2);
            Vec gy = finish(y);

            Vec gk2(d);
            for (std::size_t i = 0; i < d; ++i) gk2[i] = h * gy[i];
            Vec gu2 = mlp_backward(p, t2, std::move(gk2), grads);
            Vec gk1(d);
            for (std::size_t i = 0; i < d; ++i) gk1[i] = 0.5 * h * gu2[i];
            mlp_backward(p, t1, std::move(gk1), grads);
            return loss;
        }
        case SchemeKind::RK4: {
            MlpTape t1, t2, t3, t4;
            Vec k1 = mlp_forward(p, x, &t1);
            Vec u2 = scaled_sum(x, 0.5 * h, k1);
            Vec k2 = mlp_forward(p, u2, &t2);
            Vec u3 = scaled_sum(x, 0.5 * h, k2);
            Vec k3 = mlp_forward(p, u3, &t3);
            Vec u4 = scaled_sum(x, h, k3);
            Vec k4 = mlp_forward(p, u4, &t4);
            Vec y = x;
            const double w = h / 6.0;
            for (std::size_t i = 0; i < d; ++i)
                y[i] += w * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
            Vec gy = finish(y);

            Vec gk4(d);
            for (std::size_t i = 0; i < d; ++i) gk4[i] = (h / 6.0) * gy[i];
            Vec gu4 = mlp_backward(p, t4, std::move(gk4), grads);

            Vec gk3(d);
            for (std::size_t i = 0; i < d; ++i) gk3[i] = (h / 3.0) * gy[i] + h * gu4[i];
            Vec gu3 = mlp_backward(p, t3, std::move(gk3), grads);

            Vec gk2(d);
            for (std::size_t i = 0; i < d; ++i) gk2[i] = (h / 3.0) * gy[i] + 0.5 * h * gu3[i];
            Vec gu2 = mlp_backward(p, t2, std::move(gk2), grads);

            Vec gk1(d);
            for (std::size_t i = 0; i < d; ++i) gk1[i] = (h / 6.0) * gy[i] + 0.5 * h * gu2[i];
            mlp_backward(p, t1, std::move(gk1), grads);
            return loss;
        }
    }
    throw Error("one_step_loss_grad: unknown scheme");
}

}  // namespace detail

// loss = || step(scheme, N, x, h) - x_target ||², differentiated in reverse
// mode through the unrolled scheme stages.  Gradients are exact derivatives
// of the discrete computation (not of the underlying flow), bit-identical
// across repeated calls on the same inputs.
inline GradientRecord one_step_loss_grad(SchemeKind scheme, const MlpParams& p, const Vec& x,
                                         const Vec& x_target, double h) {
    GradientRecord rec;
    rec.grads = make_mlp(p.layer_dims());
    rec.loss = detail::step_loss_grad_accum(scheme, p, x, x_target, h, rec.grads);
    return rec;
}

// Loss only, used by the finite-difference oracle and by training-loss
// bookkeeping.
inline double one_step_loss(SchemeKind scheme, const MlpParams& p, const Vec& x,
                            const Vec& x_target, double h) {
    const Vec y = mlp_step(scheme, p, x, h);
    double loss = 0.0;
    for (std::size_t i = 0; i < y.size(); ++i) {
        const double r = y[i] - x_target[i];
        loss += r * r;
    }
    return loss;
}

// Central-difference gradient of the same loss, the independent check for
// one_step_loss_grad.  O(param_count) loss evaluations; test-scale only.
inline MlpParams finite_diff_grad(SchemeKind scheme, const MlpParams& p, const Vec& x,
                                  const Vec& x_target, double h, double probe = 1e-6) {
    MlpParams grad = make_mlp(p.layer_dims());
    MlpParams work = p;
    auto probe_entry = [&](double& slot, double& out) {
        const double saved = slot;
        slot = saved + probe;
        const double up = one_step_loss(scheme, work, x, x_target, h);
        slot = saved - probe;
        const double down = one_step_loss(scheme, work, x, x_target, h);
        slot = saved;
        out = (up - down) / (2.0 * probe);
    };
    for (std::size_t l = 0; l < p.weights.size(); ++l) {
        for (std::size_t i = 0; i < p.weights[l].data.size(); ++i)
            probe_entry(work.weights[l].data[i], grad.weights[l].data[i]);
        for (std::size_t i = 0; i < p.biases[l].size(); ++i)
            probe_entry(work.biases[l][i], grad.biases[l][i]);
    }
    return grad;
}

}  // namespace continuity
