// End-to-end acceptance checks, one per release gate.  Each check prints a
// single PASS/FAIL line (with its wall time, which must stay inside the
// stated budget) and the process exits with the number of failures.
//
// Unlike the unit suites these run whole experiments: they train models,
// sweep inference steps, and compare verdicts and error magnitudes against
// independently derived expectations.  Every experiment is deterministic --
// fixed seeds, full-batch training, counter-based RNG -- so the numbers
// asserted here are reproducible bit-for-bit on a given platform.
#include <continuity/continuity.hpp>

#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <string>
#include <vector>

using namespace continuity;

namespace {

struct Checker {
    std::vector<std::string> failures;

    void expect(bool ok, const std::string& what) {
        if (!ok) failures.push_back(what);
    }

    void expect_near(double got, double want, double tol, const std::string& what) {
        if (!(std::abs(got - want) <= tol)) {
            char buf[160];
            std::snprintf(buf, sizeof(buf), "%s: got %.10g, want %.10g +/- %.3g", what.c_str(),
                          got, want, tol);
            failures.push_back(buf);
        }
    }
};

int g_failed = 0;

void run_check(int index, int total, double budget_s, const std::string& label,
               const std::function<void(Checker&)>& body) {
    Checker ck;
    const auto t0 = std::chrono::steady_clock::now();
    try {
        body(ck);
    } catch (const std::exception& e) {
        ck.failures.push_back(std::string("unexpected exception: ") + e.what());
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    if (secs > budget_s) {
        char buf[96];
        std::snprintf(buf, sizeof(buf), "runtime %.1fs exceeded budget %.0fs", secs, budget_s);
        ck.failures.push_back(buf);
    }
    const bool ok = ck.failures.empty();
    std::printf("[%2d/%d] %s (%.2fs) %s\n", index, total, ok ? "PASS" : "FAIL", secs,
                label.c_str());
    for (const std::string& f : ck.failures) std::printf("        - %s\n", f.c_str());
    std::fflush(stdout);
    if (!ok) ++g_failed;
}

// --- shared fixtures ---------------------------------------------------------

Trajectory with_observation_noise(const Trajectory& clean, double amp, std::uint64_t seed) {
    Trajectory out = clean;
    CounterRng rng(seed);
    for (Vec& x : out.states)
        for (double& v : x) v += amp * rng.uniform(-1.0, 1.0);
    return out;
}

// Linear model fitted to noisy harmonic-oscillator samples.  The noise gives
// training a stable least-squares floor, so the convergence verdict reflects
// the ratio of scheme bias to that floor rather than optimizer minutiae.
ConvergenceReport harmonic_linear_report(double dt, SchemeKind scheme) {
    const SystemSpec sys{};  // harmonic oscillator, omega0 = 1
    Trajectory val = reference_trajectory(sys, {1.0, 0.0}, dt, 200);
    Trajectory noisy = with_observation_noise(val, 3e-4, 19);
    TrainConfig tc;
    tc.model_kind = ModelKind::Linear;
    tc.scheme = scheme;
    tc.learning_rate = 0.02;
    tc.weight_decay = 0.0;
    tc.epochs = 20000;
    tc.batch_size = 0;
    tc.seed = 0;
    TrainedModel model = train(make_pairs({noisy}), tc);
    TestConfig cfg;
    cfg.m = 5;
    return run_convergence_test(as_field(model), scheme, {val}, cfg);
}

double pendulum_period(double theta0) {
    const double t2 = theta0 * theta0;
    return 2.0 * M_PI * (1.0 + t2 / 16.0 + 11.0 * t2 * t2 / 3072.0);
}

TrainConfig pendulum_net_config(SchemeKind scheme) {
    TrainConfig tc;
    tc.model_kind = ModelKind::Shallow;
    tc.hidden_dim = 32;
    tc.scheme = scheme;
    tc.learning_rate = 2e-3;
    tc.weight_decay = 0.0;
    tc.epochs = 20000;
    tc.batch_size = 0;
    tc.seed = 0;
    return tc;
}

// --- the ten checks ----------------------------------------------------------

// 1. Measured convergence orders of the three schemes on dx/dt = -x.
void check_integrator_orders(Checker& ck) {
    VectorField decay = make_field(1, [](const Vec& x) { return Vec{-x[0]}; });
    std::function<Vec(double)> exact = [](double t) { return Vec{std::exp(-t)}; };
    std::vector<double> h_list;
    for (int k = 0; k <= 8; ++k) h_list.push_back(0.1 * std::pow(10.0, -k / 4.0));
    ck.expect_near(observed_order(SchemeKind::Euler, decay, exact, 1.0, h_list), 1.0, 0.1,
                   "Euler order");
    ck.expect_near(observed_order(SchemeKind::Midpoint, decay, exact, 1.0, h_list), 2.0, 0.1,
                   "midpoint order");
    ck.expect_near(observed_order(SchemeKind::RK4, decay, exact, 1.0, h_list), 4.0, 0.2,
                   "RK4 order");
}

// 2. Reverse-mode gradients against central finite differences on random
//    shallow networks, 200 instances per scheme.
void check_gradient_oracle(Checker& ck) {
    const std::vector<std::size_t> dims{2, 6, 2};
    for (SchemeKind scheme : {SchemeKind::Euler, SchemeKind::Midpoint, SchemeKind::RK4}) {
        double worst = 0.0;
        for (int k = 0; k < 200; ++k) {
            MlpParams p = init_mlp(dims, 1000 + static_cast<std::uint64_t>(k));
            CounterRng rng(5000 + static_cast<std::uint64_t>(k));
            Vec x{rng.uniform(-1.0, 1.0), rng.uniform(-1.0, 1.0)};
            Vec x_next{rng.uniform(-1.0, 1.0), rng.uniform(-1.0, 1.0)};
            const double dt = rng.uniform(0.05, 0.2);
            GradientRecord rec = one_step_loss_grad(scheme, p, x, x_next, dt);
            MlpParams fd = finite_diff_grad(scheme, p, x, x_next, dt);
            double scale = 1.0, diff = 0.0;
            for (std::size_t l = 0; l < fd.weights.size(); ++l) {
                for (std::size_t i = 0; i < fd.weights[l].data.size(); ++i) {
                    scale = std::max(scale, std::abs(fd.weights[l].data[i]));
                    diff = std::max(diff, std::abs(fd.weights[l].data[i] -
                                                   rec.grads.weights[l].data[i]));
                }
                for (std::size_t i = 0; i < fd.biases[l].size(); ++i) {
                    scale = std::max(scale, std::abs(fd.biases[l][i]));
                    diff = std::max(diff, std::abs(fd.biases[l][i] - rec.grads.biases[l][i]));
                }
            }
            worst = std::max(worst, diff / scale);
        }
        ck.expect(worst < 1e-5, scheme_name(scheme) + ": max relative gradient error " +
                                    std::to_string(worst) + " >= 1e-5");
    }
}

// 3. Harmonic oscillator at dt = 0.1: the Euler-trained linear model fails
//    with a sharp dip at the training step; the RK4-trained one passes.
void check_harmonic_dip(Checker& ck) {
    ConvergenceReport euler = harmonic_linear_report(0.1, SchemeKind::Euler);
    ck.expect(!euler.passed, "Euler-trained model should fail");
    ck.expect(euler.points.front().grid_index == -5, "smallest step should sit 5 grid rungs "
                                                     "below dt");
    const double ratio = euler.points.front().error / euler.error_at_dt;
    ck.expect(ratio >= 10.0, "dip too shallow: smallest-step error only " +
                                 std::to_string(ratio) + "x the error at dt");
    ConvergenceReport rk4 = harmonic_linear_report(0.1, SchemeKind::RK4);
    ck.expect(rk4.passed, "RK4-trained model should pass");
}

// 4. The failure frontier follows the training step: shrinking dt rescues
//    higher orders first, growing it breaks them all.
void check_failure_frontier(Checker& ck) {
    const struct {
        double dt;
        bool euler_pass, midpoint_pass, rk4_pass;
    } expected[] = {
        {0.01, false, true, true},
        {0.2, false, false, true},
        {0.5, false, false, false},
    };
    for (const auto& row : expected) {
        const struct {
            SchemeKind scheme;
            bool want;
            const char* name;
        } cases[] = {
            {SchemeKind::Euler, row.euler_pass, "Euler"},
            {SchemeKind::Midpoint, row.midpoint_pass, "midpoint"},
            {SchemeKind::RK4, row.rk4_pass, "RK4"},
        };
        for (const auto& c : cases) {
            ConvergenceReport rep = harmonic_linear_report(row.dt, c.scheme);
            char buf[96];
            std::snprintf(buf, sizeof(buf), "dt=%g %s: expected %s", row.dt, c.name,
                          c.want ? "pass" : "fail");
            ck.expect(rep.passed == c.want, buf);
        }
    }
}

// 5. Sparse regression on harmonic data: the finite-difference order decides
//    the verdict, and the high-order fit recovers the generator exactly.
void check_sparse_fit_verdicts(Checker& ck) {
    const SystemSpec sys{};
    Trajectory val = reference_trajectory(sys, {1.0, 0.0}, 0.1, 200);
    TestConfig cfg;
    cfg.m = 5;
    SindyModel low = fit(val, 2, 1, 0.01);
    ConvergenceReport low_rep =
        run_convergence_test(model_field(low), scheme_of_order(1), {val}, cfg);
    ck.expect(!low_rep.passed, "first-order-derivative fit should fail");
    SindyModel high = fit(val, 2, 4, 0.01);
    ConvergenceReport high_rep =
        run_convergence_test(model_field(high), scheme_of_order(4), {val}, cfg);
    ck.expect(high_rep.passed, "fourth-order-derivative fit should pass");

    Trajectory fine = reference_trajectory(sys, {1.0, 0.0}, 0.01, 200);
    SindyModel m = fit(fine, 2, 4, 0.01);
    double dev = 0.0;
    for (std::size_t i = 0; i < m.xi.rows; ++i)
        for (std::size_t j = 0; j < m.xi.cols; ++j) {
            double want = 0.0;
            if (i == 0 && j == 2) want = 1.0;   // d(x0)/dt = x1
            if (i == 1 && j == 1) want = -1.0;  // d(x1)/dt = -x0
            dev = std::max(dev, std::abs(m.xi(i, j) - want));
        }
    ck.expect(dev < 1e-3, "coefficient recovery off by " + std::to_string(dev));
}

// 6. Scalar step-map rates: solver residuals at machine precision, the
//    leading-order rate law, and the even-order existence boundary.
void check_scalar_rate_solver(Checker& ck) {
    for (double lambda : {-0.5, -1.0, -2.0}) {
        for (double v : {0.01, 0.02, 0.05, 0.2, 0.5}) {
            const double dt = v / std::abs(lambda);
            for (int p : {1, 2, 4}) {
                const double w = solve_w(lambda, dt, p);
                const double resid =
                    std::abs(taylor_poly(w * dt, p) - std::exp(lambda * dt));
                char buf[96];
                std::snprintf(buf, sizeof(buf), "residual %g at lambda=%g dt=%g p=%d", resid,
                              lambda, dt, p);
                ck.expect(resid < 1e-13, buf);
            }
        }
        // |w - lambda| / dt^p approaches |lambda|^{p+1}/(p+1)! as dt -> 0.
        double fact = 1.0;
        for (int p : {1, 2, 4}) {
            fact = 1.0;
            for (int i = 2; i <= p + 1; ++i) fact *= i;
            for (double v : {0.01, 0.02, 0.05}) {
                const double dt = v / std::abs(lambda);
                const double w = solve_w(lambda, dt, p);
                const double lead = std::pow(std::abs(lambda), p + 1) / fact;
                const double ratio = std::abs(w - lambda) / std::pow(dt, p) / lead;
                char buf[96];
                std::snprintf(buf, sizeof(buf), "rate law ratio %g at lambda=%g dt=%g p=%d",
                              ratio, lambda, dt, p);
                ck.expect(ratio > 0.9 && ratio < 1.1, buf);
            }
        }
    }
    ck.expect(existence_condition(-1.0, 0.69, 2), "p=2 rate should exist at dt=0.69");
    ck.expect(!existence_condition(-1.0, 0.70, 2), "p=2 rate should vanish at dt=0.70");
    ck.expect(existence_condition(-2.0, 0.345, 2), "p=2 rate should exist at dt=0.345, lambda=-2");
    ck.expect(!existence_condition(-2.0, 0.35, 2), "p=2 rate should vanish at dt=0.35, lambda=-2");
}

// 7. Analytic error curves: with a perfectly learned rate the curve has a
//    strict interior minimum at the training step; a perturbed rate sets a
//    plateau at the predicted leading-order height.
void check_analytic_curves(Checker& ck) {
    for (int p : {1, 2, 4}) {
        LinearSetting s;
        s.lambda = -1.0;
        s.dt = 0.1;
        s.p = p;
        s.q = p;
        ck.expect(error_curve(s, s.dt) <= 1e-12, "curve should vanish at the training step");
        ck.expect(error_curve(s, s.dt * 1.1) > 1e-8 && error_curve(s, s.dt / 1.1) > 1e-8,
                  "training step should be a strict interior minimum (p=" + std::to_string(p) +
                      ")");
    }
    for (int p : {1, 2}) {
        LinearSetting s;
        s.lambda = -1.0;
        s.dt = 0.1;
        s.p = p;
        s.q = p;
        s.epsilon = 1e-5;
        const double ratio = plateau_b(s) / bound_w_minus_lambda(s);
        ck.expect(ratio > 0.5 && ratio < 2.0,
                  "plateau/bound ratio " + std::to_string(ratio) + " outside [0.5, 2]");
    }
}

// 8. A 1-D Euler-trained linear model on exact exponential-decay samples
//    learns the analytically solvable step-matched rate.
void check_trained_rate_matches_theory(Checker& ck) {
    const double lambda = -1.0, dt = 0.1;
    std::vector<TrainPair> pairs;
    double x = 1.0;
    for (int k = 0; k < 20; ++k) {
        const double x_next = x * std::exp(lambda * dt);
        pairs.push_back({Vec{x}, Vec{x_next}, dt});
        x = x_next;
    }
    TrainConfig tc;
    tc.model_kind = ModelKind::Linear;
    tc.scheme = SchemeKind::Euler;
    tc.learning_rate = 0.02;
    tc.weight_decay = 0.0;
    tc.epochs = 10000;
    tc.batch_size = 0;
    tc.seed = 0;
    TrainedModel model = train(pairs, tc);
    const double w = model.params.weights[0](0, 0);
    // solve_w(-1, 0.1, 1) = (e^{-0.1} - 1)/0.1, derived in closed form.
    ck.expect_near(w, -0.9516258196404048, 1e-3, "trained rate");
}

// 9. Pendulum extrapolation: nets trained at dt = 0.1 on five amplitudes,
//    rolled out at h = 0.001 from three held-out amplitudes over one period.
void check_pendulum_extrapolation(Checker& ck) {
    SystemSpec sys;
    sys.kind = SystemKind::NonlinearPendulum;
    std::vector<Trajectory> trains;
    for (double th : {0.4, 0.8, 1.2, 1.6, 2.0})
        trains.push_back(reference_trajectory(sys, {th, 0.0}, 0.1, 100));
    auto pairs = make_pairs(trains);
    std::vector<Trajectory> vals;
    for (double th : {0.6, 1.0, 1.4}) {
        const int n = static_cast<int>(std::floor(pendulum_period(th) / 0.1)) + 1;
        vals.push_back(reference_trajectory(sys, {th, 0.0}, 0.1, n));
    }

    auto fine_step_deviation = [&](const TrainedModel& model) {
        VectorField field = as_field(model);
        double dev = 0.0;
        for (const Trajectory& val : vals) {
            std::vector<Vec> fine =
                rollout_to_times(model.scheme, field, val.states.front(), 0.001, val.times);
            for (std::size_t i = 0; i < val.times.size(); ++i)
                dev = std::max(dev, std::hypot(fine[i][0] - val.states[i][0],
                                               fine[i][1] - val.states[i][1]));
        }
        return dev;
    };

    TestConfig cfg;
    cfg.m = 5;
    TrainedModel rk4 = train(pairs, pendulum_net_config(SchemeKind::RK4));
    ConvergenceReport rk4_rep = run_convergence_test(as_field(rk4), SchemeKind::RK4, vals, cfg);
    const double rk4_dev = fine_step_deviation(rk4);
    ck.expect(rk4_dev < 10.0 * rk4_rep.plateau_b,
              "RK4-net deviation " + std::to_string(rk4_dev) + " not below 10x its plateau " +
                  std::to_string(rk4_rep.plateau_b));

    TrainedModel euler = train(pairs, pendulum_net_config(SchemeKind::Euler));
    const double euler_dev = fine_step_deviation(euler);
    ck.expect(euler_dev >= 10.0 * rk4_dev, "Euler/RK4 deviation ratio only " +
                                               std::to_string(euler_dev / rk4_dev));
}

// 10. Irregularly sampled training data: the RK4 net still passes against a
//     regular validation trajectory; the Euler net fails with its error
//     minimum at the mean training gap rather than the nominal step.
void check_jittered_training(Checker& ck) {
    SystemSpec sys;
    sys.kind = SystemKind::NonlinearPendulum;
    SamplingSpec sampling;
    sampling.dt = 0.05;
    sampling.n_points = 200;
    sampling.jitter_frac = 0.2;
    sampling.skip_prob = 0.1;
    Trajectory jittered = irregular_trajectory(sys, {1.0, 0.0}, sampling, 3);
    auto pairs = make_pairs({jittered});
    Trajectory val = reference_trajectory(sys, {1.0, 0.0}, 0.05, 135);
    TestConfig cfg;
    cfg.m = 5;

    TrainedModel rk4 = train(pairs, pendulum_net_config(SchemeKind::RK4));
    ConvergenceReport rk4_rep = run_convergence_test(as_field(rk4), SchemeKind::RK4, {val}, cfg);
    ck.expect(rk4_rep.passed, "RK4 net should pass against the regular validation");

    TrainedModel euler = train(pairs, pendulum_net_config(SchemeKind::Euler));
    ConvergenceReport euler_rep =
        run_convergence_test(as_field(euler), SchemeKind::Euler, {val}, cfg);
    ck.expect(!euler_rep.passed, "Euler net should fail against the regular validation");
    std::size_t arg = 0;
    for (std::size_t i = 1; i < euler_rep.points.size(); ++i)
        if (euler_rep.points[i].error < euler_rep.points[arg].error) arg = i;
    const double mean_gap = euler.train_dt_stats.mean;
    const double rel = std::abs(euler_rep.points[arg].h - mean_gap) / mean_gap;
    char buf[120];
    std::snprintf(buf, sizeof(buf), "error minimum at h=%.4f vs mean gap %.4f (off by %.0f%%)",
                  euler_rep.points[arg].h, mean_gap, 100.0 * rel);
    ck.expect(rel <= 0.2, buf);
}

}  // namespace

int main() {
    run_check(1, 10, 1.0, "integrator orders on exponential decay", check_integrator_orders);
    run_check(2, 10, 30.0, "backprop gradients vs central differences", check_gradient_oracle);
    run_check(3, 10, 300.0, "harmonic oscillator: Euler-trained dip, RK4-trained flat",
              check_harmonic_dip);
    run_check(4, 10, 1200.0, "failure frontier tracks the training step", check_failure_frontier);
    run_check(5, 10, 60.0, "sparse fit: derivative order decides the verdict",
              check_sparse_fit_verdicts);
    run_check(6, 10, 1.0, "scalar rate solver: residual, rate law, existence",
              check_scalar_rate_solver);
    run_check(7, 10, 1.0, "analytic error curves: minimum and plateau", check_analytic_curves);
    run_check(8, 10, 30.0, "trained 1-D rate matches the analytic rate",
              check_trained_rate_matches_theory);
    run_check(9, 10, 600.0, "pendulum extrapolation to fine steps", check_pendulum_extrapolation);
    run_check(10, 10, 600.0, "jittered training: error minimum sits at the mean gap",
              check_jittered_training);
    if (g_failed == 0)
        std::printf("all 10 acceptance checks passed\n");
    else
        std::printf("%d of 10 acceptance checks FAILED\n", g_failed);
    return g_failed;
}
