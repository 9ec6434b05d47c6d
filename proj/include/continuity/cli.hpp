#pragma once

// Command-line front end.  Six subcommands: generate (sample trajectories
// from a named system), train (fit a step model to trajectory pairs), test
// (run the step-size convergence test), discover (train/test ladder over
// integrator orders), sindy (sparse polynomial regression), theory (scalar
// linear error curves).  Every command writes its outputs plus a
// <command>.manifest.json provenance record into --out.
//
// Exit codes: 0 success, 1 usage error, 2 data/numerical error,
// 3 training divergence, 4 discovery exhausted without convergence.

#include <CLI11.hpp>

#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <charconv>
#include <filesystem>
#include <functional>
#include <iostream>
#include <map>
#include <memory>
#include <string>
#include <utility>
#include <vector>

#include "continuity/continuity.hpp"
#include "continuity/experiment.hpp"
#include "continuity/io.hpp"

namespace continuity {
namespace cli_detail {

constexpr int kOk = 0;
constexpr int kUsage = 1;
constexpr int kData = 2;
constexpr int kDivergence = 3;
constexpr int kExhausted = 4;

inline std::string fmt(double v) {
    std::string s;
    detail::append_double(s, v);
    return s;
}

// State shared by option registration and the command handlers.  Option
// pointers let handlers distinguish "flag given" from "default value".
struct CommandContext {
    std::string config_path;
    CLI::Option* config_opt = nullptr;
    std::string out_dir = ".";
    bool force = false;
    std::uint64_t seed_value = 0;
    CLI::Option* seed_opt = nullptr;
    int jobs = 1;

    std::vector<std::string> data_files;
    std::vector<std::string> val_files;
    std::string model_file;
    CLI::Option* model_file_opt = nullptr;
    std::string sparse_file;
    CLI::Option* sparse_file_opt = nullptr;
    bool exact_field = false;
    std::string scheme_text;
    CLI::Option* scheme_opt = nullptr;

    double lambda = -1.0;
    double theory_dt = 0.1;
    int theory_p = 1;
    int theory_q = -1;  // negative: default to p
    double theory_epsilon = 0.0;
    double theory_k = 1.0;
    int theory_m = 20;

    std::vector<std::pair<CLI::Option*, std::function<void(ExperimentConfig&)>>> overrides;

    ExperimentConfig cfg;      // resolved: config file, then flag overrides
    std::uint64_t seed = 0;    // resolved seed
};

template <class T, class Fn>
CLI::Option* add_override(CLI::App* sub, CommandContext& ctx, const std::string& flag,
                          const std::string& desc, Fn apply) {
    auto holder = std::make_shared<T>();
    CLI::Option* opt = sub->add_option(flag, *holder, desc);
    ctx.overrides.emplace_back(opt, [holder, apply](ExperimentConfig& c) { apply(c, *holder); });
    return opt;
}

inline std::uint64_t parse_seed_text(const std::string& text) {
    std::uint64_t value = 0;
    const char* first = text.data();
    const char* last = first + text.size();
    auto [ptr, ec] = std::from_chars(first, last, value);
    if (ec != std::errc{} || ptr != last)
        throw UsageError("invalid seed: \"" + text + "\"");
    return value;
}

inline Vec parse_state(const std::string& text) {
    Vec out;
    std::size_t start = 0;
    while (start <= text.size()) {
        std::size_t comma = text.find(',', start);
        if (comma == std::string::npos) comma = text.size();
        out.push_back(detail::parse_double(detail::strip(text.substr(start, comma - start)),
                                           "initial condition \"" + text + "\""));
        start = comma + 1;
    }
    return out;
}

inline std::map<std::string, double> parse_assignments(const std::vector<std::string>& items) {
    std::map<std::string, double> out;
    for (const std::string& item : items) {
        const std::size_t eq = item.find('=');
        if (eq == std::string::npos || eq == 0)
            throw UsageError("expected NAME=VALUE, got \"" + item + "\"");
        out[detail::strip(item.substr(0, eq))] =
            detail::parse_double(detail::strip(item.substr(eq + 1)), "parameter \"" + item + "\"");
    }
    return out;
}

inline void require_input(const std::string& path) {
    if (!std::filesystem::exists(path)) throw UsageError("missing input file: " + path);
}

inline std::string out_path(const CommandContext& ctx, const std::string& name) {
    return (std::filesystem::path(ctx.out_dir) / name).string();
}

// Create the output directory and refuse to clobber existing files unless
// --force.  Called before any computation so a refusal costs nothing.
inline void claim_outputs(const CommandContext& ctx, const std::vector<std::string>& paths) {
    std::error_code ec;
    std::filesystem::create_directories(ctx.out_dir, ec);
    if (ec) throw UsageError("cannot create output directory " + ctx.out_dir + ": " + ec.message());
    if (ctx.force) return;
    for (const std::string& p : paths)
        if (std::filesystem::exists(p))
            throw UsageError("output file exists: " + p + " (pass --force to overwrite)");
}

inline void write_manifest_json(const CommandContext& ctx, const std::string& command,
                                const json& manifest) {
    const std::string path = out_path(ctx, command + ".manifest.json");
    detail::write_text_file(path, manifest.dump(2) + "\n");
    std::cout << "wrote " << path << "\n";
}

inline void write_manifest(const CommandContext& ctx, const std::string& command,
                           const std::vector<std::string>& inputs,
                           const std::vector<std::string>& outputs) {
    write_manifest_json(ctx, command, make_manifest(command, inputs, outputs, ctx.seed, ctx.cfg));
}

inline std::string numbered_name(const std::string& stem, std::size_t index,
                                 const std::string& suffix) {
    char buf[16];
    std::snprintf(buf, sizeof(buf), "_%03zu", index);
    return stem + buf + suffix;
}

// Load the config file (if given), apply flag overrides in registration
// order, then settle the seed: --seed beats the config's "seed" beats the
// CONTINUITY_SEED environment variable beats zero.
inline void resolve_config(CommandContext& ctx) {
    bool cfg_has_seed = false;
    if (ctx.config_opt != nullptr && ctx.config_opt->count() > 0) {
        require_input(ctx.config_path);
        const json raw = detail::parse_json_file(ctx.config_path);
        cfg_has_seed = raw.is_object() && raw.contains("seed");
        ctx.cfg = experiment_from_json(raw);
    }
    for (auto& [opt, apply] : ctx.overrides)
        if (opt->count() > 0) apply(ctx.cfg);
    if (ctx.seed_opt != nullptr && ctx.seed_opt->count() > 0) {
        ctx.seed = ctx.seed_value;
    } else if (cfg_has_seed) {
        ctx.seed = ctx.cfg.seed;
    } else if (const char* env = std::getenv("CONTINUITY_SEED")) {
        ctx.seed = parse_seed_text(env);
    } else {
        ctx.seed = 0;
    }
    ctx.cfg.seed = ctx.seed;
    ctx.cfg.train.seed = ctx.seed;
}

inline std::vector<std::string> config_input(const CommandContext& ctx) {
    std::vector<std::string> inputs;
    if (ctx.config_opt != nullptr && ctx.config_opt->count() > 0) inputs.push_back(ctx.config_path);
    return inputs;
}

inline std::vector<Trajectory> read_trajectories(const std::vector<std::string>& files) {
    std::vector<Trajectory> out;
    out.reserve(files.size());
    for (const std::string& f : files) {
        require_input(f);
        out.push_back(read_trajectory_csv(f));
    }
    return out;
}

// --- subcommand handlers ---------------------------------------------------

inline int cmd_generate(CommandContext& ctx) {
    const ExperimentConfig& cfg = ctx.cfg;
    if (cfg.ics.empty())
        throw UsageError("generate: no initial conditions; set \"ics\" in the config or pass --ic");
    const int dim = state_dim(cfg.system);
    for (const Vec& ic : cfg.ics)
        if (static_cast<int>(ic.size()) != dim)
            throw UsageError("generate: " + system_name(cfg.system.kind) + " needs " +
                             std::to_string(dim) + "-dimensional initial conditions, got " +
                             std::to_string(ic.size()));

    const bool single = cfg.ics.size() == 1;
    std::vector<std::string> csv_paths, meta_paths;
    for (std::size_t k = 0; k < cfg.ics.size(); ++k) {
        const std::string stem = single ? std::string("trajectory")
                                        : numbered_name("trajectory", k, "");
        csv_paths.push_back(out_path(ctx, stem + ".csv"));
        meta_paths.push_back(out_path(ctx, stem + ".meta.json"));
    }
    std::vector<std::string> outputs = csv_paths;
    outputs.insert(outputs.end(), meta_paths.begin(), meta_paths.end());
    std::vector<std::string> claims = outputs;
    claims.push_back(out_path(ctx, "generate.manifest.json"));
    claim_outputs(ctx, claims);

    const std::vector<Trajectory> trajs =
        multi_ic_dataset(cfg.system, cfg.ics, cfg.sampling, ctx.seed);
    for (std::size_t k = 0; k < trajs.size(); ++k) {
        write_trajectory_csv(csv_paths[k], trajs[k]);
        std::cout << "wrote " << csv_paths[k] << " (" << trajs[k].states.size() << " rows)\n";
        const TrajectoryMeta meta{cfg.system, trajectory_seed(ctx.seed, k), cfg.sampling};
        write_trajectory_meta(meta_paths[k], meta);
        std::cout << "wrote " << meta_paths[k] << "\n";
    }
    write_manifest(ctx, "generate", config_input(ctx), outputs);
    return kOk;
}

inline int cmd_train(CommandContext& ctx) {
    if (ctx.data_files.empty()) throw UsageError("train: at least one --data file is required");
    const std::vector<Trajectory> trajs = read_trajectories(ctx.data_files);
    const std::vector<TrainPair> pairs = make_pairs(trajs);

    const std::string ckpt_path = out_path(ctx, "checkpoint.json");
    claim_outputs(ctx, {ckpt_path, out_path(ctx, "train.manifest.json")});

    const TrainedModel model = train(pairs, ctx.cfg.train);
    write_checkpoint(ckpt_path, model);
    std::cout << "wrote " << ckpt_path << "\n";

    std::vector<std::string> inputs = config_input(ctx);
    inputs.insert(inputs.end(), ctx.data_files.begin(), ctx.data_files.end());
    write_manifest(ctx, "train", inputs, {ckpt_path});

    std::cout << "trained " << model_kind_name(model.model_kind) << " model, scheme "
              << scheme_name(model.scheme) << ", " << pairs.size() << " pairs, final loss "
              << fmt(model.final_loss) << "\n";
    if (model.diverged) {
        std::cout << "training diverged; checkpoint holds the last finite parameters\n";
        return kDivergence;
    }
    return kOk;
}

inline int cmd_test(CommandContext& ctx) {
    const int sources = (ctx.model_file_opt->count() > 0 ? 1 : 0) +
                        (ctx.sparse_file_opt->count() > 0 ? 1 : 0) + (ctx.exact_field ? 1 : 0);
    if (sources != 1)
        throw UsageError("test: exactly one of --model, --sparse-model, --exact-field");
    if (ctx.val_files.empty()) throw UsageError("test: at least one --val file is required");
    const std::vector<Trajectory> vals = read_trajectories(ctx.val_files);

    VectorField vf;
    SchemeKind scheme = SchemeKind::RK4;
    std::vector<std::string> inputs = config_input(ctx);
    if (ctx.model_file_opt->count() > 0) {
        require_input(ctx.model_file);
        const TrainedModel model = read_checkpoint(ctx.model_file);
        vf = as_field(model);
        scheme = model.scheme;
        inputs.push_back(ctx.model_file);
    } else if (ctx.sparse_file_opt->count() > 0) {
        require_input(ctx.sparse_file);
        const SindyModel model = read_sindy_model(ctx.sparse_file);
        vf = model_field(model);
        scheme = scheme_of_order(model.fd_order);
        inputs.push_back(ctx.sparse_file);
    } else {
        vf = field(ctx.cfg.system);
    }
    if (ctx.scheme_opt->count() > 0) scheme = parse_scheme(ctx.scheme_text);
    inputs.insert(inputs.end(), ctx.val_files.begin(), ctx.val_files.end());

    const std::string json_path = out_path(ctx, "report.json");
    const std::string csv_path = out_path(ctx, "report.csv");
    std::vector<std::string> outputs = {json_path, csv_path};
    if (vals.size() > 1)
        for (std::size_t t = 0; t < vals.size(); ++t)
            outputs.push_back(out_path(ctx, numbered_name("report_traj", t, ".csv")));
    std::vector<std::string> claims = outputs;
    claims.push_back(out_path(ctx, "test.manifest.json"));
    claim_outputs(ctx, claims);

    const ConvergenceReport report =
        run_convergence_test(vf, scheme, vals, ctx.cfg.test, ctx.jobs);

    write_report_json(json_path, report);
    std::cout << "wrote " << json_path << "\n";
    write_report_csv(csv_path, report);
    std::cout << "wrote " << csv_path << "\n";
    if (vals.size() > 1)
        for (std::size_t t = 0; t < vals.size(); ++t) {
            const std::string p = out_path(ctx, numbered_name("report_traj", t, ".csv"));
            write_report_csv(p, report, static_cast<int>(t));
            std::cout << "wrote " << p << "\n";
        }
    write_manifest(ctx, "test", inputs, outputs);

    std::cout << "scheme " << scheme_name(scheme) << ", dt " << fmt(report.dt) << "\n";
    std::cout << "error at dt " << fmt(report.error_at_dt) << ", plateau "
              << fmt(report.plateau_b) << "\n";
    std::cout << "verdict: " << (report.passed ? "pass" : "fail") << "\n";
    return kOk;
}

inline int cmd_discover(CommandContext& ctx) {
    if (ctx.data_files.empty()) throw UsageError("discover: at least one --data file is required");
    if (ctx.val_files.empty()) throw UsageError("discover: at least one --val file is required");
    const std::vector<Trajectory> trajs = read_trajectories(ctx.data_files);
    const std::vector<Trajectory> vals = read_trajectories(ctx.val_files);
    const std::vector<TrainPair> pairs = make_pairs(trajs);

    const std::string ckpt_path = out_path(ctx, "checkpoint.json");
    const std::string json_path = out_path(ctx, "report.json");
    const std::string csv_path = out_path(ctx, "report.csv");
    const std::string disc_path = out_path(ctx, "discovery.json");
    claim_outputs(ctx, {ckpt_path, json_path, csv_path, disc_path,
                        out_path(ctx, "discover.manifest.json")});

    const DiscoverResult result =
        discover(pairs, vals, ctx.cfg.train, ctx.cfg.test, ctx.cfg.quit_order, ctx.jobs);

    write_checkpoint(ckpt_path, result.model);
    std::cout << "wrote " << ckpt_path << "\n";
    write_report_json(json_path, result.report);
    std::cout << "wrote " << json_path << "\n";
    write_report_csv(csv_path, result.report);
    std::cout << "wrote " << csv_path << "\n";
    const json disc{{"order_used", result.order_used},
                    {"converged", result.converged},
                    {"notes", result.notes}};
    detail::write_text_file(disc_path, disc.dump(2) + "\n");
    std::cout << "wrote " << disc_path << "\n";

    std::vector<std::string> inputs = config_input(ctx);
    inputs.insert(inputs.end(), ctx.data_files.begin(), ctx.data_files.end());
    inputs.insert(inputs.end(), ctx.val_files.begin(), ctx.val_files.end());
    write_manifest(ctx, "discover", inputs, {ckpt_path, json_path, csv_path, disc_path});

    for (const std::string& note : result.notes) std::cout << note << "\n";
    std::cout << "order used: " << result.order_used << ", converged: "
              << (result.converged ? "yes" : "no") << "\n";
    return result.converged ? kOk : kExhausted;
}

inline int cmd_sindy(CommandContext& ctx) {
    if (ctx.data_files.size() != 1) throw UsageError("sindy: exactly one --data file is required");
    require_input(ctx.data_files.front());
    const Trajectory traj = read_trajectory_csv(ctx.data_files.front());

    const std::string model_path = out_path(ctx, "sparse_model.json");
    claim_outputs(ctx, {model_path, out_path(ctx, "sindy.manifest.json")});

    const SindyConfig& sc = ctx.cfg.sindy;
    const SindyModel model = fit(traj, sc.degree, sc.fd_order, sc.threshold, sc.ridge);
    write_sindy_model(model_path, model);
    std::cout << "wrote " << model_path << "\n";

    std::vector<std::string> inputs = config_input(ctx);
    inputs.push_back(ctx.data_files.front());
    write_manifest(ctx, "sindy", inputs, {model_path});

    int nonzero = 0;
    for (double c : model.xi.data)
        if (c != 0.0) ++nonzero;
    std::cout << "library of " << model.basis.terms.size() << " terms, " << nonzero
              << " nonzero coefficients\n";
    return kOk;
}

inline int cmd_theory(CommandContext& ctx) {
    LinearSetting setting;
    setting.lambda = ctx.lambda;
    setting.dt = ctx.theory_dt;
    setting.p = ctx.theory_p;
    setting.q = ctx.theory_q < 0 ? ctx.theory_p : ctx.theory_q;
    setting.epsilon = ctx.theory_epsilon;
    setting.k = ctx.theory_k;
    if (setting.dt <= 0) throw UsageError("theory: --dt must be positive");

    const std::string csv_path = out_path(ctx, "theory_curve.csv");
    const std::string json_path = out_path(ctx, "theory.json");
    claim_outputs(ctx, {csv_path, json_path, out_path(ctx, "theory.manifest.json")});

    if (!existence_condition(setting.lambda, setting.dt, setting.p))
        throw NumericalError("no training optimum exists for lambda " + fmt(setting.lambda) +
                             ", dt " + fmt(setting.dt) + ", order " +
                             std::to_string(setting.p) + "; decrease dt");
    const double w = solve_w(setting.lambda, setting.dt, setting.p);

    std::vector<std::pair<double, double>> points;
    for (double h : h_grid(setting.dt, ctx.theory_m))
        points.emplace_back(h, error_curve(setting, h));
    detail::write_text_file(csv_path, curve_to_csv(points));
    std::cout << "wrote " << csv_path << "\n";

    const json payload{{"lambda", setting.lambda},
                       {"dt", setting.dt},
                       {"p", setting.p},
                       {"q", setting.q},
                       {"epsilon", setting.epsilon},
                       {"k", setting.k},
                       {"w", w},
                       {"plateau_b", plateau_b(setting)},
                       {"bound_w_minus_lambda", bound_w_minus_lambda(setting)}};
    detail::write_text_file(json_path, payload.dump(2) + "\n");
    std::cout << "wrote " << json_path << "\n";

    const json manifest{{"command", "theory"},
                        {"tool_version", "0.1.0"},
                        {"inputs", json::array()},
                        {"outputs", json::array({csv_path, json_path})},
                        {"seed", ctx.seed},
                        {"config", payload}};
    write_manifest_json(ctx, "theory", manifest);

    std::cout << "w " << fmt(w) << ", plateau " << fmt(plateau_b(setting)) << ", bound "
              << fmt(bound_w_minus_lambda(setting)) << "\n";
    return kOk;
}

// --- option registration ---------------------------------------------------

inline void add_common(CLI::App* sub, CommandContext& ctx, bool with_jobs) {
    ctx.config_opt = sub->add_option("--config", ctx.config_path, "JSON experiment config file");
    sub->add_option("--out", ctx.out_dir, "output directory (default: current directory)");
    sub->add_flag("--force", ctx.force, "overwrite existing output files");
    ctx.seed_opt =
        sub->add_option("--seed", ctx.seed_value, "RNG seed (beats config seed and CONTINUITY_SEED)");
    if (with_jobs)
        sub->add_option("--jobs", ctx.jobs, "worker threads for the step-size sweep")
            ->check(CLI::PositiveNumber);
}

inline void add_system_overrides(CLI::App* sub, CommandContext& ctx) {
    add_override<std::string>(sub, ctx, "--system", "dynamical system name",
                              [](ExperimentConfig& c, const std::string& v) {
                                  c.system.kind = parse_system(v);
                              });
    add_override<std::vector<std::string>>(
        sub, ctx, "--param", "system parameter NAME=VALUE (repeatable)",
        [](ExperimentConfig& c, const std::vector<std::string>& v) {
            apply_system_params(c.system, parse_assignments(v));
        });
}

inline void add_train_overrides(CLI::App* sub, CommandContext& ctx, bool with_scheme) {
    add_override<std::string>(sub, ctx, "--model-kind", "model kind: linear or shallow",
                              [](ExperimentConfig& c, const std::string& v) {
                                  c.train.model_kind = parse_model_kind(v);
                              });
    add_override<int>(sub, ctx, "--hidden", "hidden layer width",
                      [](ExperimentConfig& c, int v) { c.train.hidden_dim = v; });
    if (with_scheme)
        add_override<std::string>(sub, ctx, "--scheme", "integrator: euler, midpoint, or rk4",
                                  [](ExperimentConfig& c, const std::string& v) {
                                      c.train.scheme = parse_scheme(v);
                                  });
    add_override<double>(sub, ctx, "--lr", "learning rate",
                         [](ExperimentConfig& c, double v) { c.train.learning_rate = v; });
    add_override<double>(sub, ctx, "--weight-decay", "decoupled weight decay",
                         [](ExperimentConfig& c, double v) { c.train.weight_decay = v; });
    add_override<int>(sub, ctx, "--epochs", "training epochs",
                      [](ExperimentConfig& c, int v) { c.train.epochs = v; });
    add_override<int>(sub, ctx, "--batch", "minibatch size (0 = full batch)",
                      [](ExperimentConfig& c, int v) { c.train.batch_size = v; });
}

inline void add_test_overrides(CLI::App* sub, CommandContext& ctx) {
    add_override<int>(sub, ctx, "--m", "step-size grid half-width",
                      [](ExperimentConfig& c, int v) { c.test.m = v; });
    add_override<double>(sub, ctx, "--epsilon", "pass tolerance on the error ratio",
                         [](ExperimentConfig& c, double v) { c.test.epsilon = v; });
    add_override<std::string>(
        sub, ctx, "--metric", "error metric: endpoint, max_over_points, or mean_over_subset",
        [](ExperimentConfig& c, const std::string& v) { c.test.metric = parse_metric(v); });
    add_override<int>(sub, ctx, "--stride", "comparison stride for subset metrics",
                      [](ExperimentConfig& c, int v) { c.test.stride = v; });
}

// --- entry points ----------------------------------------------------------

inline int dispatch(const std::string& name, CommandContext& ctx) {
    resolve_config(ctx);
    if (name == "generate") return cmd_generate(ctx);
    if (name == "train") return cmd_train(ctx);
    if (name == "test") return cmd_test(ctx);
    if (name == "discover") return cmd_discover(ctx);
    if (name == "sindy") return cmd_sindy(ctx);
    return cmd_theory(ctx);
}

}  // namespace cli_detail

inline int run_cli(int argc, const char* const* argv) {
    namespace cd = cli_detail;
    CLI::App app{"model continuous dynamics from trajectory data and test "
                 "whether the fit survives changing the integration step",
                 "continuity"};
    app.require_subcommand(1);

    std::map<std::string, std::unique_ptr<cd::CommandContext>> contexts;
    auto ctx_for = [&contexts](const std::string& name) -> cd::CommandContext& {
        return *(contexts[name] = std::make_unique<cd::CommandContext>());
    };

    {
        CLI::App* sub = app.add_subcommand("generate", "sample trajectories from a named system");
        cd::CommandContext& ctx = ctx_for("generate");
        cd::add_common(sub, ctx, false);
        cd::add_system_overrides(sub, ctx);
        cd::add_override<std::vector<std::string>>(
            sub, ctx, "--ic", "initial condition as comma-separated values (repeatable)",
            [](ExperimentConfig& c, const std::vector<std::string>& v) {
                c.ics.clear();
                for (const std::string& item : v) c.ics.push_back(cd::parse_state(item));
            });
        cd::add_override<double>(sub, ctx, "--dt", "mean sampling interval",
                                 [](ExperimentConfig& c, double v) { c.sampling.dt = v; });
        cd::add_override<int>(sub, ctx, "--n-points", "samples per trajectory before drops",
                              [](ExperimentConfig& c, int v) { c.sampling.n_points = v; });
        cd::add_override<double>(sub, ctx, "--jitter", "relative spacing jitter half-width",
                                 [](ExperimentConfig& c, double v) { c.sampling.jitter_frac = v; });
        cd::add_override<double>(sub, ctx, "--skip-prob", "interior sample drop probability",
                                 [](ExperimentConfig& c, double v) { c.sampling.skip_prob = v; });
    }
    {
        CLI::App* sub = app.add_subcommand("train", "fit a step model to trajectory pairs");
        cd::CommandContext& ctx = ctx_for("train");
        cd::add_common(sub, ctx, false);
        sub->add_option("--data", ctx.data_files, "training trajectory CSV (repeatable)");
        cd::add_train_overrides(sub, ctx, true);
    }
    {
        CLI::App* sub = app.add_subcommand("test", "run the step-size convergence test");
        cd::CommandContext& ctx = ctx_for("test");
        cd::add_common(sub, ctx, true);
        ctx.model_file_opt = sub->add_option("--model", ctx.model_file, "trained checkpoint JSON");
        ctx.sparse_file_opt =
            sub->add_option("--sparse-model", ctx.sparse_file, "sparse regression model JSON");
        sub->add_flag("--exact-field", ctx.exact_field,
                      "test the named system's exact vector field instead of a model");
        cd::add_system_overrides(sub, ctx);
        sub->add_option("--val", ctx.val_files, "validation trajectory CSV (repeatable)");
        ctx.scheme_opt = sub->add_option("--scheme", ctx.scheme_text,
                                         "integrator override: euler, midpoint, or rk4");
        cd::add_test_overrides(sub, ctx);
    }
    {
        CLI::App* sub =
            app.add_subcommand("discover", "train/test ladder over integrator orders");
        cd::CommandContext& ctx = ctx_for("discover");
        cd::add_common(sub, ctx, true);
        sub->add_option("--data", ctx.data_files, "training trajectory CSV (repeatable)");
        sub->add_option("--val", ctx.val_files, "validation trajectory CSV (repeatable)");
        cd::add_train_overrides(sub, ctx, false);
        cd::add_test_overrides(sub, ctx);
        cd::add_override<int>(sub, ctx, "--quit-order", "highest integrator order to try",
                              [](ExperimentConfig& c, int v) { c.quit_order = v; });
    }
    {
        CLI::App* sub =
            app.add_subcommand("sindy", "sparse polynomial regression on one trajectory");
        cd::CommandContext& ctx = ctx_for("sindy");
        cd::add_common(sub, ctx, false);
        sub->add_option("--data", ctx.data_files, "trajectory CSV (uniform spacing required)");
        cd::add_override<int>(sub, ctx, "--degree", "polynomial library degree",
                              [](ExperimentConfig& c, int v) { c.sindy.degree = v; });
        cd::add_override<int>(sub, ctx, "--fd-order", "finite difference order: 1, 2, or 4",
                              [](ExperimentConfig& c, int v) { c.sindy.fd_order = v; });
        cd::add_override<double>(sub, ctx, "--threshold", "coefficient pruning threshold",
                                 [](ExperimentConfig& c, double v) { c.sindy.threshold = v; });
        cd::add_override<double>(sub, ctx, "--ridge", "ridge regularization strength",
                                 [](ExperimentConfig& c, double v) { c.sindy.ridge = v; });
    }
    {
        CLI::App* sub = app.add_subcommand(
            "theory", "exact error curves for a scalar linear system");
        cd::CommandContext& ctx = ctx_for("theory");
        cd::add_common(sub, ctx, false);
        sub->add_option("--lambda", ctx.lambda, "true decay/growth rate")->required();
        sub->add_option("--dt", ctx.theory_dt, "training step size")->required();
        sub->add_option("--p", ctx.theory_p, "integrator order used in training");
        sub->add_option("--q", ctx.theory_q, "integrator order used at inference (default: p)");
        sub->add_option("--w-epsilon", ctx.theory_epsilon, "offset of the learned rate from optimum");
        sub->add_option("--k-scale", ctx.theory_k, "error curve scale factor");
        sub->add_option("--m", ctx.theory_m, "step-size grid half-width");
    }

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? cd::kOk : cd::kUsage;
    }

    const std::string name = app.get_subcommands().front()->get_name();
    try {
        return cd::dispatch(name, *contexts.at(name));
    } catch (const UsageError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return cd::kUsage;
    } catch (const DivergenceError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return cd::kDivergence;
    } catch (const Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return cd::kData;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return cd::kData;
    }
}

// In-process entry point for tests: argument list without the program name.
inline int run_cli(const std::vector<std::string>& args) {
    std::vector<const char*> argv;
    argv.reserve(args.size() + 1);
    argv.push_back("continuity");
    for (const std::string& a : args) argv.push_back(a.c_str());
    return run_cli(static_cast<int>(argv.size()), argv.data());
}

}  // namespace continuity
