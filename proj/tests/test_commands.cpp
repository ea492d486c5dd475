// Copyright 2026 srosync authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#include <catch2/catch_amalgamated.hpp>

#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "srosync/commands.hpp"

namespace srosync {
namespace {

namespace fs = std::filesystem;

fs::path work_dir() {
  const fs::path dir = fs::temp_directory_path() / "srosync_cmd_tests";
  fs::create_directories(dir);
  return dir;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  REQUIRE(in.good());
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

// One small two-channel scene (2 s, +62.5 ppm drift) shared by the command
// tests; simulated on first use.
const fs::path& scene_dir() {
  static const fs::path dir = [] {
    const fs::path d = work_dir() / "scene";
    const fs::path scenario = work_dir() / "scenario.json";
    nlohmann::json j{{"num_channels", 2}, {"num_sources", 1},
                     {"duration_s", 2.0}, {"true_sros", {0.0, 62.5}},
                     {"snr_db", 40.0},    {"seed", 5}};
    detail::write_text_file(scenario.string(), j.dump() + "\n");
    REQUIRE(run_simulate(scenario.string(), d.string()) == 0);
    return d;
  }();
  return dir;
}

std::vector<std::string> scene_wavs() {
  return {(scene_dir() / "ch0.wav").string(), (scene_dir() / "ch1.wav").string()};
}

EstimateConfig fast_config() {
  EstimateConfig cfg;  // defaults are already sized for small scenes
  return cfg;
}

std::vector<std::vector<std::string>> parse_csv(const std::string& text) {
  std::vector<std::vector<std::string>> rows;
  std::istringstream is(text);
  std::string line;
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    std::vector<std::string> cells;
    std::istringstream ls(line);
    std::string cell;
    while (std::getline(ls, cell, ',')) cells.push_back(cell);
    rows.push_back(std::move(cells));
  }
  return rows;
}

TEST_CASE("run_simulate writes channels and truth deterministically", "[commands]") {
  const fs::path dir = scene_dir();
  REQUIRE(fs::exists(dir / "ch0.wav"));
  REQUIRE(fs::exists(dir / "ch1.wav"));
  REQUIRE(!fs::exists(dir / "ch2.wav"));

  const WavData ch0 = read_wav((dir / "ch0.wav").string());
  REQUIRE(ch0.channels.size() == 1);
  REQUIRE(ch0.channels[0].size() == 32000);  // 2 s at 16 kHz
  REQUIRE(ch0.sample_rate == 16000.0);

  const nlohmann::json truth =
      nlohmann::json::parse(slurp(dir / "truth.json"));
  REQUIRE(truth.at("schema_version").get<int>() == kSchemaVersion);
  REQUIRE(truth.at("num_channels").get<int>() == 2);
  const auto sros = truth.at("true_sros").get<std::vector<double>>();
  REQUIRE(sros == std::vector<double>{0.0, 62.5});
  REQUIRE(truth.at("scenario").at("seed").get<int>() == 5);

  // Re-simulating the same scenario reproduces the bytes.
  const fs::path again = work_dir() / "scene_again";
  REQUIRE(run_simulate((work_dir() / "scenario.json").string(),
                       again.string()) == 0);
  REQUIRE(slurp(dir / "ch0.wav") == slurp(again / "ch0.wav"));
  REQUIRE(slurp(dir / "ch1.wav") == slurp(again / "ch1.wav"));
}

TEST_CASE("run_simulate validates its scenario", "[commands]") {
  const fs::path bad = work_dir() / "bad_scenario.json";
  detail::write_text_file(bad.string(),
                          R"({"num_channels":2,"num_sources":1,"duration_s":1.0})");
  REQUIRE_THROWS_MATCHES(run_simulate(bad.string(), (work_dir() / "x").string()),
                         InvalidInputError,
                         Catch::Matchers::MessageMatches(
                             Catch::Matchers::ContainsSubstring("true_sros")));

  detail::write_text_file(bad.string(), "{not json");
  REQUIRE_THROWS_AS(run_simulate(bad.string(), (work_dir() / "x").string()),
                    InvalidInputError);
  REQUIRE_THROWS_AS(run_simulate((work_dir() / "missing.json").string(),
                                 (work_dir() / "x").string()),
                    IoError);
}

TEST_CASE("run_estimate recovers the drift and scores against truth", "[commands]") {
  for (const std::string method : {"pair-gss", "joint"}) {
    const fs::path out = work_dir() / ("report_" + method + ".json");
    REQUIRE(run_estimate(scene_wavs(), method, fast_config(), out.string(),
                         (scene_dir() / "truth.json").string()) == 0);

    const SyncReport rep =
        SyncReport::from_json(nlohmann::json::parse(slurp(out)));
    REQUIRE(rep.method == method);
    REQUIRE(rep.sro_ppm.size() == 2);
    REQUIRE(rep.sro_ppm[0] == 0.0);
    REQUIRE(std::abs(rep.sro_ppm[1] - 62.5) < 1.0);
    REQUIRE(rep.rmse_vs_truth_ppm.has_value());
    REQUIRE(*rep.rmse_vs_truth_ppm < 1.0);
    REQUIRE(rep.likelihood_trace.size() ==
            static_cast<std::size_t>(rep.iterations) + 1);
    REQUIRE(rep.converged);
    REQUIRE(rep.config_echo.at("method").get<std::string>() == method);
    if (method == "joint") {
      // the alignment it found must beat the unaligned starting point
      REQUIRE(rep.likelihood_trace.back() > rep.likelihood_trace.front());
    }
  }
}

TEST_CASE("run_estimate near-zero offset on identical inputs", "[commands]") {
  const std::vector<std::string> twice{scene_wavs()[0], scene_wavs()[0]};
  const fs::path out = work_dir() / "report_same.json";
  REQUIRE(run_estimate(twice, "pair-gss", fast_config(), out.string(), "") == 0);
  const SyncReport rep =
      SyncReport::from_json(nlohmann::json::parse(slurp(out)));
  REQUIRE(std::abs(rep.sro_ppm[1]) < 0.5);
  REQUIRE(!rep.rmse_vs_truth_ppm.has_value());
}

TEST_CASE("run_estimate validates inputs", "[commands]") {
  REQUIRE_THROWS_AS(run_estimate(scene_wavs(), "nonsense", fast_config(), "", ""),
                    InvalidInputError);
  REQUIRE_THROWS_AS(run_estimate({scene_wavs()[0]}, "joint", fast_config(), "", ""),
                    InvalidInputError);

  // Sample-rate mismatch across files.
  const fs::path slow = work_dir() / "slow_rate.wav";
  WavData w = read_wav(scene_wavs()[0]);
  w.sample_rate = 8000.0;
  write_wav(slow.string(), w);
  REQUIRE_THROWS_AS(run_estimate({scene_wavs()[0], slow.string()}, "pair-gss",
                                 fast_config(), "", ""),
                    InvalidInputError);
}

TEST_CASE("run_compensate resample path round trip", "[commands]") {
  // Compensating with the true offsets must leave almost no residual drift.
  const fs::path report = work_dir() / "truth_report.json";
  SyncReport rep;
  rep.method = "joint";
  rep.sro_ppm = {0.0, 62.5};
  rep.likelihood_trace = {0.0};
  rep.iterations = 0;
  detail::write_text_file(report.string(), rep.to_json().dump() + "\n");

  const fs::path out = work_dir() / "sync_resample";
  REQUIRE(run_compensate(scene_wavs(), report.string(), out.string(),
                         "resample", fast_config()) == 0);
  REQUIRE(fs::exists(out / "sync_ch0.wav"));
  REQUIRE(fs::exists(out / "sync_ch1.wav"));

  const fs::path recheck = work_dir() / "recheck.json";
  REQUIRE(run_estimate({(out / "sync_ch0.wav").string(),
                        (out / "sync_ch1.wav").string()},
                       "pair-gss", fast_config(), recheck.string(), "") == 0);
  const SyncReport residual =
      SyncReport::from_json(nlohmann::json::parse(slurp(recheck)));
  REQUIRE(std::abs(residual.sro_ppm[1]) < 1.0);
}

TEST_CASE("run_compensate with zero offsets is a near identity", "[commands]") {
  const fs::path report = work_dir() / "zero_report.json";
  SyncReport rep;
  rep.method = "joint";
  rep.sro_ppm = {0.0, 0.0};
  rep.likelihood_trace = {0.0};
  rep.iterations = 0;
  detail::write_text_file(report.string(), rep.to_json().dump() + "\n");

  const fs::path out = work_dir() / "sync_identity";
  REQUIRE(run_compensate(scene_wavs(), report.string(), out.string(),
                         "resample", fast_config()) == 0);
  const WavData in0 = read_wav(scene_wavs()[0]);
  const WavData out0 = read_wav((out / "sync_ch0.wav").string());
  REQUIRE(out0.channels[0].size() == in0.channels[0].size());
  for (std::size_t n = 0; n < out0.channels[0].size(); ++n)
    REQUIRE(std::abs(out0.channels[0][n] - in0.channels[0][n]) < 1e-6);
}

TEST_CASE("run_compensate stft path round trip", "[commands]") {
  const fs::path report = work_dir() / "truth_report2.json";
  SyncReport rep;
  rep.method = "joint";
  rep.sro_ppm = {0.0, 62.5};
  rep.likelihood_trace = {0.0};
  rep.iterations = 0;
  detail::write_text_file(report.string(), rep.to_json().dump() + "\n");

  const fs::path out = work_dir() / "sync_stft";
  REQUIRE(run_compensate(scene_wavs(), report.string(), out.string(), "stft",
                         fast_config()) == 0);

  const fs::path recheck = work_dir() / "recheck_stft.json";
  REQUIRE(run_estimate({(out / "sync_ch0.wav").string(),
                        (out / "sync_ch1.wav").string()},
                       "pair-gss", fast_config(), recheck.string(), "") == 0);
  const SyncReport residual =
      SyncReport::from_json(nlohmann::json::parse(slurp(recheck)));
  REQUIRE(std::abs(residual.sro_ppm[1]) < 1.0);
}

TEST_CASE("run_compensate validates report shape and path mode", "[commands]") {
  const fs::path report = work_dir() / "bad_report.json";
  SyncReport rep;
  rep.method = "joint";
  rep.sro_ppm = {0.0, 1.0, 2.0};  // three channels, two inputs
  rep.likelihood_trace = {0.0};
  rep.iterations = 0;
  detail::write_text_file(report.string(), rep.to_json().dump() + "\n");
  REQUIRE_THROWS_AS(run_compensate(scene_wavs(), report.string(),
                                   (work_dir() / "x").string(), "resample",
                                   fast_config()),
                    InvalidInputError);
  REQUIRE_THROWS_AS(run_compensate(scene_wavs(), report.string(),
                                   (work_dir() / "x").string(), "nearest",
                                   fast_config()),
                    InvalidInputError);
}

TEST_CASE("run_bench writes reproducible rows and a summary", "[commands]") {
  BenchOptions opt;
  opt.speakers = 1;
  opt.durations = {2.0};
  opt.trials = 2;
  opt.num_channels = 2;
  opt.snr_db = 35.0;
  opt.seed = 9;
  opt.methods = {"pair-gss"};
  opt.out_csv = (work_dir() / "bench_a.csv").string();
  opt.out_json = (work_dir() / "bench_a.json").string();
  REQUIRE(run_bench(opt) == 0);

  auto rows = parse_csv(slurp(opt.out_csv));
  REQUIRE(rows.size() == 3);  // header + trials * durations * methods
  REQUIRE(rows[0] == std::vector<std::string>{"speakers", "duration_s", "trial",
                                              "method", "rmse_ppm", "seconds"});
  for (std::size_t r = 1; r < rows.size(); ++r) {
    REQUIRE(rows[r].size() == 6);
    REQUIRE(rows[r][0] == "1");
    REQUIRE(rows[r][3] == "pair-gss");
    REQUIRE(std::stod(rows[r][4]) < 5.0);  // ppm, generous for a 2 s scene
  }

  // Same options, second run: identical apart from wall-clock seconds.
  opt.out_csv = (work_dir() / "bench_b.csv").string();
  opt.out_json = (work_dir() / "bench_b.json").string();
  opt.jobs = 2;  // row order is fixed regardless of worker count
  REQUIRE(run_bench(opt) == 0);
  auto rows_b = parse_csv(slurp(opt.out_csv));
  REQUIRE(rows_b.size() == rows.size());
  for (std::size_t r = 0; r < rows.size(); ++r)
    for (std::size_t c = 0; c < 5; ++c)  // all but the seconds column
      REQUIRE(rows[r][c] == rows_b[r][c]);

  const nlohmann::json summary =
      nlohmann::json::parse(slurp(work_dir() / "bench_a.json"));
  REQUIRE(summary.at("results").size() == 1);
  const auto& cell = summary.at("results")[0];
  REQUIRE(cell.at("method").get<std::string>() == "pair-gss");
  REQUIRE(cell.at("trials").get<int>() == 2);
  REQUIRE(cell.at("mean_rmse_ppm").get<double>() < 5.0);
}

TEST_CASE("run_trace sweeps the pairwise objective", "[commands]") {
  const fs::path out = work_dir() / "trace.csv";
  REQUIRE(run_trace(scene_wavs(), 80.0, 161, fast_config(), out.string()) == 0);
  const auto rows = parse_csv(slurp(out));
  REQUIRE(rows.size() == 162);
  REQUIRE(rows[0] == std::vector<std::string>{"epsilon_ppm", "objective"});

  int best = 1;
  for (std::size_t r = 1; r < rows.size(); ++r)
    if (std::stod(rows[r][1]) > std::stod(rows[best][1]))
      best = static_cast<int>(r);
  const double step = 160.0 / 160.0;  // 1 ppm
  REQUIRE(std::abs(std::stod(rows[best][0]) - 62.5) <= step);

  // Degenerate single-point sweep evaluates only the origin.
  const fs::path single = work_dir() / "trace_single.csv";
  REQUIRE(run_trace(scene_wavs(), 80.0, 1, fast_config(), single.string()) == 0);
  const auto one = parse_csv(slurp(single));
  REQUIRE(one.size() == 2);
  REQUIRE(std::stod(one[1][0]) == 0.0);

  REQUIRE_THROWS_AS(run_trace({scene_wavs()[0]}, 80.0, 10, fast_config(), ""),
                    InvalidInputError);
  REQUIRE_THROWS_AS(run_trace(scene_wavs(), -1.0, 10, fast_config(), ""),
                    InvalidInputError);
}

TEST_CASE("estimate config json round trip", "[commands]") {
  EstimateConfig cfg;
  cfg.grid_range_ppm = 75.0;
  cfg.grid_points = 41;
  cfg.outer_iters = 7;
  cfg.stop_tol_ppm = 0.5;
  cfg.conjugate_reference = false;
  cfg.stft.window_length = 512;
  cfg.stft.shift = 256;
  cfg.stft.dft_size = 1024;
  cfg.stft.window = hann_window(512);

  const EstimateConfig back = EstimateConfig::from_json(cfg.to_json());
  REQUIRE(back.grid_range_ppm == 75.0);
  REQUIRE(back.grid_points == 41);
  REQUIRE(back.outer_iters == 7);
  REQUIRE(back.stop_tol_ppm == 0.5);
  REQUIRE(back.conjugate_reference == false);
  REQUIRE(back.stft.window_length == 512);
  REQUIRE(back.stft.shift == 256);
  REQUIRE(back.stft.dft_size == 1024);
  REQUIRE(back.stft.window == cfg.stft.window);

  nlohmann::json bad = cfg.to_json();
  bad["grid_points"] = 1;
  REQUIRE_THROWS_AS(EstimateConfig::from_json(bad), ConfigError);
  bad = cfg.to_json();
  bad["loading_delta"] = 0.5;
  REQUIRE_THROWS_AS(EstimateConfig::from_json(bad), ConfigError);
}

TEST_CASE("sync report json round trip and validation", "[commands]") {
  SyncReport rep;
  rep.method = "joint";
  rep.sro_ppm = {0.0, 12.25, -3.5};
  rep.likelihood_trace = {-10.0, -8.0, -7.9};
  rep.iterations = 2;
  rep.converged = true;
  rep.seconds = 1.25;
  rep.config_echo = {{"grid_points", 100}};
  rep.rmse_vs_truth_ppm = 0.75;

  const SyncReport back = SyncReport::from_json(rep.to_json());
  REQUIRE(back.method == "joint");
  REQUIRE(back.sro_ppm == rep.sro_ppm);
  REQUIRE(back.likelihood_trace == rep.likelihood_trace);
  REQUIRE(back.iterations == 2);
  REQUIRE(back.converged);
  REQUIRE(back.seconds == 1.25);
  REQUIRE(back.rmse_vs_truth_ppm.has_value());
  REQUIRE(*back.rmse_vs_truth_ppm == 0.75);
  REQUIRE(back.config_echo.at("grid_points").get<int>() == 100);

  nlohmann::json j = rep.to_json();
  j.erase("sro_ppm");
  REQUIRE_THROWS_MATCHES(SyncReport::from_json(j), InvalidInputError,
                         Catch::Matchers::MessageMatches(
                             Catch::Matchers::ContainsSubstring("sro_ppm")));

  rep.iterations = 5;  // trace no longer iterations + 1
  REQUIRE_THROWS_AS(rep.validate(), InvalidInputError);
}

TEST_CASE("scenario json names missing fields", "[commands]") {
  nlohmann::json j{{"num_channels", 2}, {"num_sources", 1},
                   {"duration_s", 1.0}, {"true_sros", {0.0, 5.0}}};
  REQUIRE_NOTHROW(scenario_from_json(j));

  nlohmann::json no_delays = j;
  no_delays["delay_model"] = {{"gains", {{1.0, 1.0}}}};
  REQUIRE_THROWS_MATCHES(scenario_from_json(no_delays), InvalidInputError,
                         Catch::Matchers::MessageMatches(
                             Catch::Matchers::ContainsSubstring("delays")));

  // Round trip through the serializer.
  Scenario sc = scenario_from_json(j);
  sc.seed = 42;
  const Scenario back = scenario_from_json(scenario_to_json(sc));
  REQUIRE(back.num_channels == 2);
  REQUIRE(back.seed == 42);
  REQUIRE(back.true_sros_ppm == sc.true_sros_ppm);
}

}  // namespace
}  // namespace srosync
