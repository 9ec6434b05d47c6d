#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include <json.hpp>

#include "continuity/convergence.hpp"
#include "continuity/errors.hpp"
#include "continuity/io.hpp"
#include "continuity/sindy.hpp"
#include "continuity/systems.hpp"
#include "continuity/training.hpp"

namespace continuity {

struct SindyConfig {
    int degree = 3;
    int fd_order = 4;
    double threshold = 0.05;
    double ridge = 1e-10;
};

// Everything an experiment needs, loadable from one JSON file with
// individual fields overridable from the command line.  Serialization is
// lossless: to_json always writes every field, from_json fills missing
// fields with defaults.
struct ExperimentConfig {
    SystemSpec system;
    SamplingSpec sampling;
    std::vector<Vec> ics;
    TrainConfig train;
    TestConfig test;
    SindyConfig sindy;
    int quit_order = 4;
    std::uint64_t seed = 0;
};

inline json experiment_to_json(const ExperimentConfig& cfg) {
    json params = json::object();
    for (const auto& [key, value] : system_params(cfg.system)) params[key] = value;
    json ics = json::array();
    for (const Vec& ic : cfg.ics) ics.push_back(ic);
    return json{
        {"system", {{"kind", system_name(cfg.system.kind)}, {"params", params}}},
        {"sampling",
         {{"dt", cfg.sampling.dt},
          {"n_points", cfg.sampling.n_points},
          {"jitter_frac", cfg.sampling.jitter_frac},
          {"skip_prob", cfg.sampling.skip_prob}}},
        {"ics", ics},
        {"train",
         {{"model", model_kind_name(cfg.train.model_kind)},
          {"hidden_dim", cfg.train.hidden_dim},
          {"scheme", scheme_name(cfg.train.scheme)},
          {"learning_rate", cfg.train.learning_rate},
          {"beta1", cfg.train.beta1},
          {"beta2", cfg.train.beta2},
          {"adam_eps", cfg.train.adam_eps},
          {"weight_decay", cfg.train.weight_decay},
          {"epochs", cfg.train.epochs},
          {"batch_size", cfg.train.batch_size}}},
        {"test",
         {{"m", cfg.test.m},
          {"epsilon", cfg.test.epsilon},
          {"metric", metric_name(cfg.test.metric)},
          {"stride", cfg.test.stride}}},
        {"sindy",
         {{"degree", cfg.sindy.degree},
          {"fd_order", cfg.sindy.fd_order},
          {"threshold", cfg.sindy.threshold},
          {"ridge", cfg.sindy.ridge}}},
        {"quit_order", cfg.quit_order},
        {"seed", cfg.seed}};
}

inline ExperimentConfig experiment_from_json(const json& j) {
    ExperimentConfig cfg;
    if (j.contains("system")) {
        const json& js = j.at("system");
        if (js.contains("kind")) cfg.system.kind = parse_system(js.at("kind").get<std::string>());
        if (js.contains("params")) {
            std::map<std::string, double> params;
            for (const auto& [key, value] : js.at("params").items())
                params[key] = value.get<double>();
            apply_system_params(cfg.system, params);
        }
    }
    if (j.contains("sampling")) {
        const json& js = j.at("sampling");
        cfg.sampling.dt = js.value("dt", cfg.sampling.dt);
        cfg.sampling.n_points = js.value("n_points", cfg.sampling.n_points);
        cfg.sampling.jitter_frac = js.value("jitter_frac", cfg.sampling.jitter_frac);
        cfg.sampling.skip_prob = js.value("skip_prob", cfg.sampling.skip_prob);
    }
    if (j.contains("ics")) {
        for (const json& ji : j.at("ics")) cfg.ics.push_back(ji.get<Vec>());
    }
    if (j.contains("train")) {
        const json& jt = j.at("train");
        if (jt.contains("model")) cfg.train.model_kind = parse_model_kind(jt.at("model"));
        cfg.train.hidden_dim = jt.value("hidden_dim", cfg.train.hidden_dim);
        if (jt.contains("scheme")) cfg.train.scheme = parse_scheme(jt.at("scheme"));
        cfg.train.learning_rate = jt.value("learning_rate", cfg.train.learning_rate);
        cfg.train.beta1 = jt.value("beta1", cfg.train.beta1);
        cfg.train.beta2 = jt.value("beta2", cfg.train.beta2);
        cfg.train.adam_eps = jt.value("adam_eps", cfg.train.adam_eps);
        cfg.train.weight_decay = jt.value("weight_decay", cfg.train.weight_decay);
        cfg.train.epochs = jt.value("epochs", cfg.train.epochs);
        cfg.train.batch_size = jt.value("batch_size", cfg.train.batch_size);
    }
    if (j.contains("test")) {
        const json& jt = j.at("test");
        cfg.test.m = jt.value("m", cfg.test.m);
        cfg.test.epsilon = jt.value("epsilon", cfg.test.epsilon);
        if (jt.contains("metric")) cfg.test.metric = parse_metric(jt.at("metric"));
        cfg.test.stride = jt.value("stride", cfg.test.stride);
    }
    if (j.contains("sindy")) {
        const json& js = j.at("sindy");
        cfg.sindy.degree = js.value("degree", cfg.sindy.degree);
        cfg.sindy.fd_order = js.value("fd_order", cfg.sindy.fd_order);
        cfg.sindy.threshold = js.value("threshold", cfg.sindy.threshold);
        cfg.sindy.ridge = js.value("ridge", cfg.sindy.ridge);
    }
    cfg.quit_order = j.value("quit_order", cfg.quit_order);
    cfg.seed = j.value("seed", cfg.seed);
    return cfg;
}

inline ExperimentConfig load_experiment_config(const std::filesystem::path& path) {
    return experiment_from_json(detail::parse_json_file(path));
}

// Provenance record written beside every command's outputs.  Deliberately
// timestamp-free so identical invocations produce identical bytes.
inline json make_manifest(const std::string& command, const std::vector<std::string>& inputs,
                          const std::vector<std::string>& outputs, std::uint64_t seed,
                          const ExperimentConfig& cfg) {
    return json{{"command", command},
                {"tool_version", "0.1.0"},
                {"inputs", inputs},
                {"outputs", outputs},
                {"seed", seed},
                {"config", experiment_to_json(cfg)}};
}

}  // namespace continuity
