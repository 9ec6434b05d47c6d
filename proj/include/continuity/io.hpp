#pragma once

#include <charconv>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <limits>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "continuity/convergence.hpp"
#include "continuity/errors.hpp"
#include "continuity/sindy.hpp"
#include "continuity/systems.hpp"
#include "continuity/training.hpp"
#include "continuity/trajectory.hpp"

namespace continuity {

using nlohmann::json;

namespace detail {

// Shortest exact decimal representation; round-trips through from_chars.
inline void append_double(std::string& out, double v) {
    char buf[40];
    const auto res = std::to_chars(buf, buf + sizeof buf, v);
    out.append(buf, res.ptr);
}

inline double parse_double(const std::string& field, const std::string& context) {
    double v = 0.0;
    const char* first = field.data();
    const char* last = field.data() + field.size();
    while (first < last && (*first == ' ' || *first == '\t')) ++first;
    const auto res = std::from_chars(first, last, v);
    if (res.ec != std::errc{} || res.ptr != last)
        throw DataError(context + ": malformed number '" + field + "'");
    return v;
}

inline std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> fields;
    std::string cur;
    for (char c : line) {
        if (c == ',') {
            fields.push_back(cur);
            cur.clear();
        } else if (c != '\r') {
            cur += c;
        }
    }
    fields.push_back(cur);
    return fields;
}

inline std::string strip(const std::string& s) {
    std::size_t a = 0, b = s.size();
    while (a < b && (s[a] == ' ' || s[a] == '\t')) ++a;
    while (b > a && (s[b - 1] == ' ' || s[b - 1] == '\t')) --b;
    return s.substr(a, b - a);
}

// Errors are data in the sweep (divergent rollouts score +inf), and JSON has
// no infinity literal, so non-finite values serialize as strings.
inline json number_or_inf(double v) {
    if (std::isfinite(v)) return v;
    if (std::isnan(v)) return "nan";
    return v > 0 ? "inf" : "-inf";
}

inline double read_number_or_inf(const json& j, const std::string& context) {
    if (j.is_number()) return j.get<double>();
    if (j.is_string()) {
        const std::string s = j.get<std::string>();
        if (s == "inf") return std::numeric_limits<double>::infinity();
        if (s == "-inf") return -std::numeric_limits<double>::infinity();
        if (s == "nan") return std::numeric_limits<double>::quiet_NaN();
    }
    throw DataError(context + ": expected a number or inf marker");
}

inline std::string read_text_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError("cannot open '" + path.string() + "' for reading");
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

inline void write_text_file(const std::filesystem::path& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw DataError("cannot open '" + path.string() + "' for writing");
    out << content;
    if (!out) throw DataError("write failed for '" + path.string() + "'");
}

inline json parse_json_file(const std::filesystem::path& path) {
    const std::string text = read_text_file(path);
    json j = json::parse(text, nullptr, false);
    if (j.is_discarded()) throw DataError("malformed JSON in '" + path.string() + "'");
    return j;
}

}  // namespace detail

// ---- Trajectory CSV --------------------------------------------------------
//
// Header: t,x0,...,x{d-1},dt_next.  One row per sample; dt_next is the
// recorded gap to the next sample and is empty on the last row.  Values are
// shortest-round-trip decimals, so write/read/write is byte-stable.

inline std::string trajectory_to_csv(const Trajectory& traj) {
    validate(traj);
    const std::size_t d = traj.dim();
    std::string out = "t";
    for (std::size_t j = 0; j < d; ++j) out += ",x" + std::to_string(j);
    out += ",dt_next\n";
    for (std::size_t k = 0; k < traj.size(); ++k) {
        detail::append_double(out, traj.times[k]);
        for (std::size_t j = 0; j < d; ++j) {
            out += ',';
            detail::append_double(out, traj.states[k][j]);
        }
        out += ',';
        if (k + 1 < traj.size()) detail::append_double(out, traj.gaps[k]);
        out += '\n';
    }
    return out;
}

inline Trajectory trajectory_from_csv(const std::string& text, const std::string& context) {
    std::istringstream in(text);
    std::string line;
    if (!std::getline(in, line)) throw DataError(context + ": empty trajectory file");
    const std::vector<std::string> header = detail::split_csv_line(line);
    if (header.size() < 3 || detail::strip(header.front()) != "t" ||
        detail::strip(header.back()) != "dt_next")
        throw DataError(context + ": expected header t,x0,...,dt_next");
    const std::size_t d = header.size() - 2;
    for (std::size_t j = 0; j < d; ++j) {
        if (detail::strip(header[j + 1]) != "x" + std::to_string(j))
            throw DataError(context + ": unexpected state column '" + header[j + 1] + "'");
    }

    Trajectory traj;
    std::vector<double> dt_next;
    while (std::getline(in, line)) {
        if (detail::strip(line).empty()) continue;
        const std::vector<std::string> fields = detail::split_csv_line(line);
        if (fields.size() != d + 2)
            throw DataError(context + ": row with " + std::to_string(fields.size()) +
                            " fields, expected " + std::to_string(d + 2));
        traj.times.push_back(detail::parse_double(fields[0], context));
        Vec state(d);
        for (std::size_t j = 0; j < d; ++j)
            state[j] = detail::parse_double(fields[j + 1], context);
        traj.states.push_back(std::move(state));
        const std::string tail = detail::strip(fields[d + 1]);
        dt_next.push_back(tail.empty() ? std::numeric_limits<double>::quiet_NaN()
                                       : detail::parse_double(tail, context));
    }
    if (traj.times.empty()) throw DataError(context + ": no samples");
    for (std::size_t k = 0; k + 1 < traj.times.size(); ++k) {
        if (std::isnan(dt_next[k]))
            throw DataError(context + ": missing dt_next on a non-final row");
        traj.gaps.push_back(dt_next[k]);
    }
    if (!std::isnan(dt_next.back()))
        throw DataError(context + ": final row must leave dt_next empty");
    validate(traj);
    return traj;
}

inline void write_trajectory_csv(const std::filesystem::path& path, const Trajectory& traj) {
    detail::write_text_file(path, trajectory_to_csv(traj));
}

inline Trajectory read_trajectory_csv(const std::filesystem::path& path) {
    return trajectory_from_csv(detail::read_text_file(path), path.string());
}

// ---- Trajectory metadata sidecar ------------------------------------------

struct TrajectoryMeta {
    SystemSpec system;
    std::uint64_t seed = 0;
    SamplingSpec sampling;
};

inline json meta_to_json(const TrajectoryMeta& meta) {
    json params = json::object();
    for (const auto& [key, value] : system_params(meta.system)) params[key] = value;
    return json{{"system", system_name(meta.system.kind)},
                {"params", params},
                {"seed", meta.seed},
                {"sampling",
                 {{"dt", meta.sampling.dt},
                  {"n_points", meta.sampling.n_points},
                  {"jitter_frac", meta.sampling.jitter_frac},
                  {"skip_prob", meta.sampling.skip_prob}}}};
}

inline TrajectoryMeta meta_from_json(const json& j) {
    TrajectoryMeta meta;
    meta.system.kind = parse_system(j.at("system").get<std::string>());
    std::map<std::string, double> params;
    for (const auto& [key, value] : j.at("params").items()) params[key] = value.get<double>();
    apply_system_params(meta.system, params);
    meta.seed = j.at("seed").get<std::uint64_t>();
    const json& s = j.at("sampling");
    meta.sampling.dt = s.at("dt").get<double>();
    meta.sampling.n_points = s.at("n_points").get<int>();
    meta.sampling.jitter_frac = s.at("jitter_frac").get<double>();
    meta.sampling.skip_prob = s.at("skip_prob").get<double>();
    return meta;
}

inline void write_trajectory_meta(const std::filesystem::path& path, const TrajectoryMeta& meta) {
    detail::write_text_file(path, meta_to_json(meta).dump(2) + "\n");
}

inline TrajectoryMeta read_trajectory_meta(const std::filesystem::path& path) {
    return meta_from_json(detail::parse_json_file(path));
}

// ---- Model checkpoint ------------------------------------------------------

inline json checkpoint_to_json(const TrainedModel& model) {
    const auto dims = model.params.layer_dims();
    json weights = json::array();
    json biases = json::array();
    for (const Matrix& w : model.params.weights) weights.push_back(w.data);
    for (const Vec& b : model.params.biases) biases.push_back(b);
    return json{{"model_kind", model_kind_name(model.model_kind)},
                {"layer_dims", dims},
                {"weights", weights},
                {"biases", biases},
                {"scheme", scheme_name(model.scheme)},
                {"train_dt_stats",
                 {{"min", model.train_dt_stats.min},
                  {"max", model.train_dt_stats.max},
                  {"mean", model.train_dt_stats.mean}}},
                {"seed", model.seed},
                {"final_loss", model.final_loss},
                {"diverged", model.diverged}};
}

inline TrainedModel checkpoint_from_json(const json& j) {
    TrainedModel model;
    model.model_kind = parse_model_kind(j.at("model_kind").get<std::string>());
    model.scheme = parse_scheme(j.at("scheme").get<std::string>());
    const std::vector<std::size_t> dims = j.at("layer_dims").get<std::vector<std::size_t>>();
    model.params = make_mlp(dims);
    const json& weights = j.at("weights");
    const json& biases = j.at("biases");
    if (weights.size() != model.params.weights.size() ||
        biases.size() != model.params.biases.size())
        throw DataError("checkpoint: layer count mismatch");
    for (std::size_t l = 0; l < model.params.weights.size(); ++l) {
        const std::vector<double> w = weights[l].get<std::vector<double>>();
        if (w.size() != model.params.weights[l].data.size())
            throw DataError("checkpoint: weight size mismatch at layer " + std::to_string(l));
        model.params.weights[l].data = w;
        const std::vector<double> b = biases[l].get<std::vector<double>>();
        if (b.size() != model.params.biases[l].size())
            throw DataError("checkpoint: bias size mismatch at layer " + std::to_string(l));
        model.params.biases[l] = b;
    }
    const json& stats = j.at("train_dt_stats");
    model.train_dt_stats.min = stats.at("min").get<double>();
    model.train_dt_stats.max = stats.at("max").get<double>();
    model.train_dt_stats.mean = stats.at("mean").get<double>();
    model.seed = j.at("seed").get<std::uint64_t>();
    model.final_loss = detail::read_number_or_inf(j.at("final_loss"), "checkpoint final_loss");
    model.diverged = j.value("diverged", false);
    return model;
}

inline void write_checkpoint(const std::filesystem::path& path, const TrainedModel& model) {
    detail::write_text_file(path, checkpoint_to_json(model).dump(2) + "\n");
}

inline TrainedModel read_checkpoint(const std::filesystem::path& path) {
    return checkpoint_from_json(detail::parse_json_file(path));
}

// ---- Convergence report ----------------------------------------------------

inline json report_to_json(const ConvergenceReport& report) {
    json points = json::array();
    for (const CurvePoint& pt : report.points) {
        json per_traj = json::array();
        for (double e : pt.per_traj) per_traj.push_back(detail::number_or_inf(e));
        points.push_back(json{{"grid_index", pt.grid_index},
                              {"h_target", pt.h_target},
                              {"h", pt.h},
                              {"error", detail::number_or_inf(pt.error)},
                              {"per_traj", per_traj},
                              {"clamped", pt.clamped}});
    }
    json dropped = json::array();
    for (const DroppedPoint& dp : report.dropped)
        dropped.push_back(
            json{{"grid_index", dp.grid_index}, {"h_target", dp.h_target}, {"nearest", dp.nearest}});
    json per_trajectory = json::array();
    for (const TrajectorySummary& s : report.per_trajectory)
        per_trajectory.push_back(json{{"passed", s.passed},
                                      {"error_at_dt", detail::number_or_inf(s.error_at_dt)},
                                      {"plateau_b", detail::number_or_inf(s.plateau_b)}});
    return json{{"config",
                 {{"dt", report.dt},
                  {"scheme", scheme_name(report.scheme)},
                  {"m", report.config.m},
                  {"epsilon", report.config.epsilon},
                  {"metric", metric_name(report.config.metric)},
                  {"stride", report.config.stride}}},
                {"points", points},
                {"dropped", dropped},
                {"error_at_dt", detail::number_or_inf(report.error_at_dt)},
                {"plateau_b", detail::number_or_inf(report.plateau_b)},
                {"verdict", report.passed ? "pass" : "fail"},
                {"per_trajectory", per_trajectory}};
}

inline ConvergenceReport report_from_json(const json& j) {
    ConvergenceReport report;
    const json& cfg = j.at("config");
    report.dt = cfg.at("dt").get<double>();
    report.scheme = parse_scheme(cfg.at("scheme").get<std::string>());
    report.config.m = cfg.at("m").get<int>();
    report.config.epsilon = cfg.at("epsilon").get<double>();
    report.config.metric = parse_metric(cfg.at("metric").get<std::string>());
    report.config.stride = cfg.at("stride").get<int>();
    for (const json& jp : j.at("points")) {
        CurvePoint pt;
        pt.grid_index = jp.at("grid_index").get<int>();
        pt.h_target = jp.at("h_target").get<double>();
        pt.h = jp.at("h").get<double>();
        pt.error = detail::read_number_or_inf(jp.at("error"), "report point error");
        for (const json& je : jp.at("per_traj"))
            pt.per_traj.push_back(detail::read_number_or_inf(je, "report per_traj error"));
        pt.clamped = jp.value("clamped", false);
        report.points.push_back(std::move(pt));
    }
    for (const json& jd : j.at("dropped")) {
        DroppedPoint dp;
        dp.grid_index = jd.at("grid_index").get<int>();
        dp.h_target = jd.at("h_target").get<double>();
        dp.nearest = jd.at("nearest").get<double>();
        report.dropped.push_back(dp);
    }
    report.error_at_dt = detail::read_number_or_inf(j.at("error_at_dt"), "report error_at_dt");
    report.plateau_b = detail::read_number_or_inf(j.at("plateau_b"), "report plateau_b");
    report.passed = j.at("verdict").get<std::string>() == "pass";
    for (const json& js : j.at("per_trajectory")) {
        TrajectorySummary s;
        s.passed = js.at("passed").get<bool>();
        s.error_at_dt = detail::read_number_or_inf(js.at("error_at_dt"), "per-traj error_at_dt");
        s.plateau_b = detail::read_number_or_inf(js.at("plateau_b"), "per-traj plateau_b");
        report.per_trajectory.push_back(s);
    }
    return report;
}

inline void write_report_json(const std::filesystem::path& path, const ConvergenceReport& report) {
    detail::write_text_file(path, report_to_json(report).dump(2) + "\n");
}

inline ConvergenceReport read_report_json(const std::filesystem::path& path) {
    return report_from_json(detail::parse_json_file(path));
}

// Companion plotting CSV: h,error.  traj < 0 writes the aggregate curve,
// otherwise the per-trajectory one.
inline std::string report_to_csv(const ConvergenceReport& report, int traj = -1) {
    std::string out = "h,error\n";
    for (const CurvePoint& pt : report.points) {
        const double err =
            traj < 0 ? pt.error : pt.per_traj.at(static_cast<std::size_t>(traj));
        detail::append_double(out, pt.h);
        out += ',';
        if (std::isfinite(err))
            detail::append_double(out, err);
        else
            out += err > 0 ? "inf" : "-inf";
        out += '\n';
    }
    return out;
}

inline void write_report_csv(const std::filesystem::path& path, const ConvergenceReport& report,
                             int traj = -1) {
    detail::write_text_file(path, report_to_csv(report, traj));
}

// ---- Sparse model ----------------------------------------------------------

inline json sindy_to_json(const SindyModel& model) {
    json terms = json::array();
    for (const std::vector<int>& t : model.basis.terms) terms.push_back(t);
    return json{{"state_dim", model.basis.state_dim},
                {"degree", model.basis.degree},
                {"terms", terms},
                {"xi", model.xi.data},
                {"threshold", model.threshold},
                {"fd_order", model.fd_order}};
}

inline SindyModel sindy_from_json(const json& j) {
    SindyModel model;
    const int state_dim = j.at("state_dim").get<int>();
    const int degree = j.at("degree").get<int>();
    model.basis = poly_basis(state_dim, degree);
    const json& terms = j.at("terms");
    if (terms.size() != model.basis.terms.size())
        throw DataError("sparse model: term count disagrees with state_dim/degree");
    for (std::size_t t = 0; t < terms.size(); ++t) {
        if (terms[t].get<std::vector<int>>() != model.basis.terms[t])
            throw DataError("sparse model: term ordering disagrees with the dictionary");
    }
    model.xi = Matrix(state_dim, model.basis.size());
    const std::vector<double> flat = j.at("xi").get<std::vector<double>>();
    if (flat.size() != model.xi.data.size()) throw DataError("sparse model: xi size mismatch");
    model.xi.data = flat;
    model.threshold = j.at("threshold").get<double>();
    model.fd_order = j.value("fd_order", 4);
    return model;
}

inline void write_sindy_model(const std::filesystem::path& path, const SindyModel& model) {
    detail::write_text_file(path, sindy_to_json(model).dump(2) + "\n");
}

inline SindyModel read_sindy_model(const std::filesystem::path& path) {
    return sindy_from_json(detail::parse_json_file(path));
}

// ---- Theory curve CSV (same schema as the report companion) ---------------

inline std::string curve_to_csv(const std::vector<std::pair<double, double>>& points) {
    std::string out = "h,error\n";
    for (const auto& [h, err] : points) {
        detail::append_double(out, h);
        out += ',';
        detail::append_double(out, err);
        out += '\n';
    }
    return out;
}

}  // namespace continuity
