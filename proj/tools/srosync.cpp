// Copyright 2026 srosync authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)
//
// srosync: sampling-rate-offset estimation and compensation for
// distributed microphone recordings.
//
//   srosync simulate   scenario.json --out dir/
//   srosync estimate   ch*.wav --method joint [--truth truth.json]
//   srosync compensate ch*.wav --report report.json --out dir/
//   srosync bench      --speakers 2 --durations 10,30 --trials 10
//   srosync trace      ch0.wav ch1.wav --range-ppm 100 --points 201
//
// Exit codes: 0 success, 1 usage/input error, 2 numerical failure.

#include <cstdint>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "srosync/srosync.hpp"

namespace {

srosync::EstimateConfig load_config(const std::string& config_path) {
  if (config_path.empty()) return srosync::EstimateConfig{};
  return srosync::EstimateConfig::from_json(
      srosync::detail::load_json_file(config_path));
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Sampling-rate-offset estimation for distributed microphones"};
  app.require_subcommand(1);

  // simulate
  auto* sim = app.add_subcommand("simulate", "Render a drifted scenario to WAVs");
  std::string sim_scenario, sim_out = ".";
  sim->add_option("scenario", sim_scenario, "Scenario JSON file")->required();
  sim->add_option("--out", sim_out, "Output directory (default .)");

  // estimate
  auto* est = app.add_subcommand("estimate", "Estimate per-channel SROs");
  std::vector<std::string> est_wavs;
  std::string est_method = "joint", est_config, est_out, est_truth;
  est->add_option("wavs", est_wavs, "Input WAV files (>= 2 channels)")
      ->required()
      ->expected(-1);
  est->add_option("--method", est_method, "joint | pair-gss | pair-mm")
      ->check(CLI::IsMember({"joint", "pair-gss", "pair-mm"}));
  est->add_option("--config", est_config, "Config JSON file");
  est->add_option("--output", est_out, "Also write the report here");
  est->add_option("--truth", est_truth, "truth.json for RMSE scoring");

  // compensate
  auto* comp = app.add_subcommand("compensate", "Undo estimated SROs");
  std::vector<std::string> comp_wavs;
  std::string comp_report, comp_out = ".", comp_path = "resample", comp_config;
  comp->add_option("wavs", comp_wavs, "Input WAV files")->required()->expected(-1);
  comp->add_option("--report", comp_report, "SyncReport JSON with sro_ppm")
      ->required();
  comp->add_option("--out", comp_out, "Output directory (default .)");
  comp->add_option("--path", comp_path, "resample | stft")
      ->check(CLI::IsMember({"resample", "stft"}));
  comp->add_option("--config", comp_config, "Config JSON file (stft path)");

  // bench
  auto* bench = app.add_subcommand("bench", "RMSE benchmark over scenarios");
  srosync::BenchOptions bopt;
  std::string bench_config;
  bench->add_option("--speakers", bopt.speakers, "Sources per scenario (default 1)");
  bench->add_option("--durations", bopt.durations,
                    "Durations in seconds (default 30)")
      ->delimiter(',');
  bench->add_option("--trials", bopt.trials, "Trials per duration (default 10)");
  bench->add_option("--channels", bopt.num_channels, "Channels (default 4)");
  bench->add_option("--snr-db", bopt.snr_db, "SNR in dB (default 30)");
  bench->add_flag("--reflections", bopt.reflections,
                  "Add decaying reflection tails to each channel");
  bench->add_option("--seed", bopt.seed, "Base seed (default 0)");
  bench->add_option("--jobs", bopt.jobs, "Concurrent trials (default 1)");
  bench->add_option("--methods", bopt.methods,
                    "Methods to run (default joint,pair-gss,pair-mm)")
      ->delimiter(',');
  bench->add_option("--csv", bopt.out_csv, "Write rows to this CSV file");
  bench->add_option("--json", bopt.out_json, "Write summary JSON here");
  bench->add_option("--config", bench_config, "Config JSON file");

  // trace
  auto* trace = app.add_subcommand("trace", "Sweep the pairwise objective");
  std::vector<std::string> trace_wavs;
  double trace_range = 100.0;
  int trace_points = 201;
  std::string trace_out, trace_config;
  trace->add_option("wavs", trace_wavs, "Exactly two WAV channels")
      ->required()
      ->expected(2);
  trace->add_option("--range-ppm", trace_range, "Sweep half-range (default 100)");
  trace->add_option("--points", trace_points, "Grid points (default 201)");
  trace->add_option("--output", trace_out, "Write CSV here");
  trace->add_option("--config", trace_config, "Config JSON file");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);  // prints help, exit 0
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 1;
  }

  try {
    if (sim->parsed()) return srosync::run_simulate(sim_scenario, sim_out);
    if (est->parsed())
      return srosync::run_estimate(est_wavs, est_method, load_config(est_config),
                                   est_out, est_truth);
    if (comp->parsed())
      return srosync::run_compensate(comp_wavs, comp_report, comp_out, comp_path,
                                     load_config(comp_config));
    if (bench->parsed()) {
      if (!bench_config.empty()) bopt.cfg = load_config(bench_config);
      return srosync::run_bench(bopt);
    }
    if (trace->parsed())
      return srosync::run_trace(trace_wavs, trace_range, trace_points,
                                load_config(trace_config), trace_out);
  } catch (const srosync::NumericalError& e) {
    std::cerr << "numerical failure: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 1;  // unreachable: a subcommand is required
}
