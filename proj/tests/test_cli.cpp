#include <catch2/catch_amalgamated.hpp>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include "continuity/cli.hpp"
#include "continuity/continuity.hpp"

using namespace continuity;
namespace fs = std::filesystem;

namespace {

// A fresh scratch directory per test case, cleaned up at both ends.
struct Scratch {
    fs::path dir;
    explicit Scratch(const std::string& name) {
        dir = fs::temp_directory_path() / ("continuity_cli_" + name);
        fs::remove_all(dir);
    }
    ~Scratch() { fs::remove_all(dir); }
    std::string path(const std::string& file) const { return (dir / file).string(); }
    std::string str() const { return dir.string(); }
};

std::string slurp(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    REQUIRE(in.good());
    std::string content((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    return content;
}

void write_file(const std::string& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary);
    out << content;
}

}  // namespace

TEST_CASE("generate writes one file set per initial condition") {
    Scratch scratch("generate");
    const int rc = run_cli({"generate", "--system", "harmonic", "--ic", "1,0", "--dt", "0.1",
                            "--n-points", "20", "--jitter", "0", "--skip-prob", "0", "--seed", "11", "--out", scratch.str()});
    REQUIRE(rc == 0);
    REQUIRE(fs::exists(scratch.path("trajectory.csv")));
    REQUIRE(fs::exists(scratch.path("trajectory.meta.json")));
    REQUIRE(fs::exists(scratch.path("generate.manifest.json")));

    // no jitter and no drops: exactly n_points rows matching the reference
    // sampler bit for bit (the CSV round-trip is exact)
    const Trajectory traj = read_trajectory_csv(scratch.path("trajectory.csv"));
    REQUIRE(traj.size() == 20);
    SystemSpec spec;
    const Trajectory ref = reference_trajectory(spec, Vec{1.0, 0.0}, 0.1, 20);
    for (std::size_t n = 0; n < 20; ++n) {
        // times accumulate gap by gap, so allow round-off against n*dt
        CHECK(traj.times[n] == Catch::Approx(ref.times[n]).margin(1e-12));
        CHECK(traj.states[n][0] == ref.states[n][0]);
        CHECK(traj.states[n][1] == ref.states[n][1]);
    }

    const TrajectoryMeta meta = read_trajectory_meta(scratch.path("trajectory.meta.json"));
    CHECK(meta.system.kind == SystemKind::HarmonicOscillator);
    CHECK(meta.sampling.dt == 0.1);
    CHECK(meta.sampling.n_points == 20);
    CHECK(meta.seed == trajectory_seed(11, 0));
}

TEST_CASE("generate numbers files and derives one stream seed per trajectory") {
    Scratch scratch("generate_multi");
    const int rc = run_cli({"generate", "--system", "harmonic", "--ic", "1,0", "--ic",
                            "0.5,0.5", "--dt", "0.1", "--n-points", "12", "--jitter", "0", "--skip-prob", "0", "--seed", "3",
                            "--out", scratch.str()});
    REQUIRE(rc == 0);
    REQUIRE(fs::exists(scratch.path("trajectory_000.csv")));
    REQUIRE(fs::exists(scratch.path("trajectory_001.csv")));
    REQUIRE(fs::exists(scratch.path("trajectory_000.meta.json")));
    REQUIRE(fs::exists(scratch.path("trajectory_001.meta.json")));

    const TrajectoryMeta meta0 = read_trajectory_meta(scratch.path("trajectory_000.meta.json"));
    const TrajectoryMeta meta1 = read_trajectory_meta(scratch.path("trajectory_001.meta.json"));
    CHECK(meta0.seed == trajectory_seed(3, 0));
    CHECK(meta1.seed == trajectory_seed(3, 1));
    CHECK(meta0.seed != meta1.seed);
}

TEST_CASE("reruns are byte-identical and refuse to overwrite without --force") {
    Scratch scratch("rerun");
    const std::vector<std::string> args = {"generate", "--system",   "pendulum", "--ic",
                                           "0.9,0",    "--dt",       "0.05",     "--n-points",
                                           "15",       "--jitter",   "0.2",      "--skip-prob",
                                           "0.1",      "--seed",     "42",       "--out",
                                           scratch.str()};
    REQUIRE(run_cli(args) == 0);
    const std::string first_csv = slurp(scratch.path("trajectory.csv"));
    const std::string first_manifest = slurp(scratch.path("generate.manifest.json"));

    // a second identical run must refuse while the outputs exist
    REQUIRE(run_cli(args) == 1);

    std::vector<std::string> forced = args;
    forced.push_back("--force");
    REQUIRE(run_cli(forced) == 0);
    CHECK(slurp(scratch.path("trajectory.csv")) == first_csv);
    CHECK(slurp(scratch.path("generate.manifest.json")) == first_manifest);
}

TEST_CASE("missing inputs exit with the usage status") {
    Scratch scratch("missing");
    fs::create_directories(scratch.dir);
    CHECK(run_cli({"train", "--data", scratch.path("nope.csv"), "--out", scratch.str()}) == 1);
    CHECK(run_cli({"no-such-command"}) == 1);
    CHECK(run_cli({"generate", "--system", "harmonic", "--dt", "0.1", "--out",
                   scratch.str()}) == 1);  // no initial condition anywhere
}

TEST_CASE("train writes a checkpoint that reloads as the same model") {
    Scratch scratch("train");
    REQUIRE(run_cli({"generate", "--system", "harmonic", "--ic", "1,0", "--dt", "0.1",
                     "--n-points", "30", "--jitter", "0", "--skip-prob", "0", "--seed", "1", "--out", scratch.str()}) == 0);
    const int rc = run_cli({"train", "--data", scratch.path("trajectory.csv"), "--model-kind",
                            "linear", "--scheme", "euler", "--epochs", "300", "--seed", "1",
                            "--out", scratch.str()});
    REQUIRE(rc == 0);
    REQUIRE(fs::exists(scratch.path("checkpoint.json")));
    REQUIRE(fs::exists(scratch.path("train.manifest.json")));

    const TrainedModel model = read_checkpoint(scratch.path("checkpoint.json"));
    CHECK(model.model_kind == ModelKind::Linear);
    CHECK(model.scheme == SchemeKind::Euler);
    CHECK_FALSE(model.diverged);
    CHECK(as_field(model).dim == 2);
    CHECK(std::isfinite(model.final_loss));
}

TEST_CASE("a diverging fit exits with the divergence status but keeps the checkpoint") {
    Scratch scratch("diverge");
    REQUIRE(run_cli({"generate", "--system", "harmonic", "--ic", "1,0", "--dt", "0.1",
                     "--n-points", "20", "--jitter", "0", "--skip-prob", "0", "--seed", "1", "--out", scratch.str()}) == 0);
    const int rc = run_cli({"train", "--data", scratch.path("trajectory.csv"), "--model-kind",
                            "linear", "--scheme", "euler", "--lr", "1e30", "--epochs", "40",
                            "--seed", "1", "--out", scratch.str()});
    REQUIRE(rc == 3);
    const TrainedModel model = read_checkpoint(scratch.path("checkpoint.json"));
    CHECK(model.diverged);
    for (const Matrix& w : model.params.weights)
        for (double v : w.data) CHECK(std::isfinite(v));
}

TEST_CASE("test compares the exact field against validation data and reports a pass") {
    Scratch scratch("exact");
    REQUIRE(run_cli({"generate", "--system", "harmonic", "--ic", "1,0", "--dt", "0.1",
                     "--n-points", "51", "--jitter", "0", "--skip-prob", "0", "--seed", "2", "--out", scratch.str()}) == 0);
    const int rc = run_cli({"test", "--exact-field", "--system", "harmonic", "--val",
                            scratch.path("trajectory.csv"), "--m", "3", "--out", scratch.str()});
    REQUIRE(rc == 0);
    REQUIRE(fs::exists(scratch.path("report.json")));
    REQUIRE(fs::exists(scratch.path("report.csv")));
    REQUIRE(fs::exists(scratch.path("test.manifest.json")));

    const ConvergenceReport report = read_report_json(scratch.path("report.json"));
    CHECK(report.passed);
    CHECK(report.scheme == SchemeKind::RK4);  // default scheme for the exact field
    CHECK(report.dt == 0.1);
    CHECK(report.config.m == 3);

    // the CSV table lists one line per point plus the header
    const std::string csv = slurp(scratch.path("report.csv"));
    std::size_t lines = 0;
    for (char c : csv)
        if (c == '\n') ++lines;
    CHECK(lines == report.points.size() + 1);
}

TEST_CASE("test with several validation files writes per-trajectory tables") {
    Scratch scratch("multival");
    REQUIRE(run_cli({"generate", "--system", "harmonic", "--ic", "1,0", "--ic", "0.6,0.3",
                     "--dt", "0.1", "--n-points", "31", "--jitter", "0", "--skip-prob", "0", "--seed", "2", "--out",
                     scratch.str()}) == 0);
    const int rc = run_cli({"test", "--exact-field", "--system", "harmonic", "--val",
                            scratch.path("trajectory_000.csv"), "--val",
                            scratch.path("trajectory_001.csv"), "--m", "2", "--out",
                            scratch.str()});
    REQUIRE(rc == 0);
    REQUIRE(fs::exists(scratch.path("report_traj_000.csv")));
    REQUIRE(fs::exists(scratch.path("report_traj_001.csv")));
    const ConvergenceReport report = read_report_json(scratch.path("report.json"));
    REQUIRE(report.per_trajectory.size() == 2);
}

TEST_CASE("test requires exactly one model source") {
    Scratch scratch("sources");
    REQUIRE(run_cli({"generate", "--system", "harmonic", "--ic", "1,0", "--dt", "0.1",
                     "--n-points", "20", "--jitter", "0", "--skip-prob", "0", "--seed", "2", "--out", scratch.str()}) == 0);
    CHECK(run_cli({"test", "--val", scratch.path("trajectory.csv"), "--out",
                   scratch.str()}) == 1);
    CHECK(run_cli({"test", "--exact-field", "--model", scratch.path("whatever.json"), "--val",
                   scratch.path("trajectory.csv"), "--out", scratch.str()}) == 1);
}

TEST_CASE("testing a checkpoint defaults to the scheme it was trained with") {
    Scratch scratch("ckpt_scheme");
    REQUIRE(run_cli({"generate", "--system", "harmonic", "--ic", "1,0", "--dt", "0.1",
                     "--n-points", "26", "--jitter", "0", "--skip-prob", "0", "--seed", "4", "--out", scratch.str()}) == 0);
    REQUIRE(run_cli({"train", "--data", scratch.path("trajectory.csv"), "--model-kind",
                     "linear", "--scheme", "midpoint", "--epochs", "200", "--seed", "4",
                     "--out", scratch.str()}) == 0);
    const int rc = run_cli({"test", "--model", scratch.path("checkpoint.json"), "--val",
                            scratch.path("trajectory.csv"), "--m", "2", "--out", scratch.str()});
    REQUIRE((rc == 0));
    const ConvergenceReport report = read_report_json(scratch.path("report.json"));
    CHECK(report.scheme == SchemeKind::Midpoint);
}

TEST_CASE("sparse regression on clean rotation data recovers the linear terms") {
    Scratch scratch("sindy");
    REQUIRE(run_cli({"generate", "--system", "harmonic", "--ic", "1,0", "--dt", "0.01",
                     "--n-points", "400", "--jitter", "0", "--skip-prob", "0", "--seed", "6", "--out", scratch.str()}) == 0);
    const int rc = run_cli({"sindy", "--data", scratch.path("trajectory.csv"), "--degree", "2",
                            "--fd-order", "4", "--out", scratch.str()});
    REQUIRE(rc == 0);
    REQUIRE(fs::exists(scratch.path("sparse_model.json")));

    const SindyModel model = read_sindy_model(scratch.path("sparse_model.json"));
    CHECK(model.basis.degree == 2);
    CHECK(model.fd_order == 4);
    CHECK(model.xi(0, 2) == Catch::Approx(1.0).margin(1e-3));
    CHECK(model.xi(1, 1) == Catch::Approx(-1.0).margin(1e-3));
}

TEST_CASE("the scalar rate analysis writes its curve and solved rate") {
    Scratch scratch("theory");
    const int rc = run_cli({"theory", "--lambda", "-1", "--dt", "0.1", "--p", "1", "--out",
                            scratch.str()});
    REQUIRE(rc == 0);
    REQUIRE(fs::exists(scratch.path("theory_curve.csv")));
    REQUIRE(fs::exists(scratch.path("theory.json")));

    const json payload = detail::parse_json_file(scratch.path("theory.json"));
    CHECK(payload.at("w").get<double>() == Catch::Approx(-0.9516258196404048).margin(1e-12));
    CHECK(payload.at("plateau_b").get<double>() ==
          Catch::Approx(0.04837418035959518).margin(1e-10));

    // no matched rate exists for second order past the existence boundary
    Scratch far("theory_far");
    CHECK(run_cli({"theory", "--lambda", "-1", "--dt", "0.8", "--p", "2", "--out",
                   far.str()}) == 2);
}

TEST_CASE("the seed is taken from the flag, then the config, then the environment") {
    Scratch scratch("seed");
    const std::string config_with_seed = scratch.path("with_seed.json");
    const std::string config_without_seed = scratch.path("without_seed.json");
    fs::create_directories(scratch.dir);
    write_file(config_with_seed,
               "{\"seed\": 5, \"ics\": [[1.0, 0.0]], \"sampling\": {\"dt\": 0.1, "
               "\"n_points\": 8}}\n");
    write_file(config_without_seed,
               "{\"ics\": [[1.0, 0.0]], \"sampling\": {\"dt\": 0.1, \"n_points\": 8}}\n");

    auto manifest_seed = [&](const std::string& out) {
        return detail::parse_json_file(out + "/generate.manifest.json")
            .at("seed")
            .get<std::uint64_t>();
    };

    const std::string out1 = scratch.path("cfg_seed");
    REQUIRE(run_cli({"generate", "--config", config_with_seed, "--out", out1}) == 0);
    CHECK(manifest_seed(out1) == 5);

    const std::string out2 = scratch.path("flag_beats_cfg");
    REQUIRE(run_cli({"generate", "--config", config_with_seed, "--seed", "9", "--out",
                     out2}) == 0);
    CHECK(manifest_seed(out2) == 9);

    setenv("CONTINUITY_SEED", "77", 1);
    const std::string out3 = scratch.path("env_fallback");
    REQUIRE(run_cli({"generate", "--config", config_without_seed, "--out", out3}) == 0);
    CHECK(manifest_seed(out3) == 77);

    const std::string out4 = scratch.path("cfg_beats_env");
    REQUIRE(run_cli({"generate", "--config", config_with_seed, "--out", out4}) == 0);
    CHECK(manifest_seed(out4) == 5);
    unsetenv("CONTINUITY_SEED");

    const std::string out5 = scratch.path("default_zero");
    REQUIRE(run_cli({"generate", "--config", config_without_seed, "--out", out5}) == 0);
    CHECK(manifest_seed(out5) == 0);
}

TEST_CASE("experiment configs survive a serialization round trip") {
    ExperimentConfig cfg;
    cfg.system.kind = SystemKind::LotkaVolterra;
    cfg.system.lv_a = 2.5;
    cfg.sampling.dt = 0.02;
    cfg.sampling.n_points = 77;
    cfg.sampling.jitter_frac = 0.3;
    cfg.ics = {Vec{1.0, 2.0}, Vec{0.5, 0.25}};
    cfg.train.model_kind = ModelKind::Shallow;
    cfg.train.hidden_dim = 17;
    cfg.train.scheme = SchemeKind::Midpoint;
    cfg.train.learning_rate = 0.003;
    cfg.train.epochs = 123;
    cfg.test.m = 7;
    cfg.test.epsilon = 0.25;
    cfg.test.metric = ErrorMetric::MaxOverPoints;
    cfg.sindy.degree = 4;
    cfg.sindy.fd_order = 2;
    cfg.quit_order = 2;
    cfg.seed = 99;

    const json j = experiment_to_json(cfg);
    const ExperimentConfig back = experiment_from_json(j);
    CHECK(experiment_to_json(back) == j);
}

TEST_CASE("help exits cleanly") {
    CHECK(run_cli({"--help"}) == 0);
    CHECK(run_cli({"generate", "--help"}) == 0);
}
