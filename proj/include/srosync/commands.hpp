// Copyright 2026 srosync authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)
//
// The four workflows behind the CLI: simulate, estimate, compensate,
// bench, plus the objective-sweep trace. Commands return 0 on success
// and signal failures by exception; the CLI maps exception types to
// exit codes (1 usage/input, 2 numerical).

#ifndef SROSYNC_COMMANDS_HPP
#define SROSYNC_COMMANDS_HPP

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <mutex>
#include <optional>
#include <string>
#include <thread>
#include <utility>
#include <vector>

#include <json.hpp>

#include "srosync/common.hpp"
#include "srosync/io.hpp"
#include "srosync/joint.hpp"
#include "srosync/likelihood.hpp"
#include "srosync/pairwise.hpp"
#include "srosync/report.hpp"
#include "srosync/signal.hpp"
#include "srosync/simulate.hpp"

namespace srosync {

namespace detail {

inline double elapsed_s(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0)
      .count();
}

// Fixed-notation formatting so CSV output is locale-independent.
inline std::string fmt(double v, const char* spec = "%.9g") {
  char buf[64];
  std::snprintf(buf, sizeof buf, spec, v);
  return buf;
}

inline nlohmann::json load_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open '" + path + "'");
  try {
    return nlohmann::json::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    throw InvalidInputError("'" + path + "': " + e.what());
  }
}

inline void write_text_file(const std::string& path, const std::string& body) {
  std::ofstream os(path, std::ios::trunc);
  if (!os) throw IoError("cannot open '" + path + "' for writing");
  os << body;
  if (!os) throw IoError("failed writing '" + path + "'");
}

}  // namespace detail

// Loads WAV files and splits them into mono channels, preserving file
// order. All files must share one sample rate.
inline std::vector<TimeSignal> load_channels(
    const std::vector<std::string>& paths) {
  std::vector<TimeSignal> channels;
  double rate = 0.0;
  for (const std::string& p : paths) {
    const WavData wav = read_wav(p);
    if (rate == 0.0) rate = wav.sample_rate;
    if (wav.sample_rate != rate)
      throw InvalidInputError("'" + p + "': sample rate " +
                              detail::fmt(wav.sample_rate) +
                              " differs from first file's " + detail::fmt(rate));
    for (const auto& ch : wav.channels)
      channels.push_back(TimeSignal{ch, rate});
  }
  return channels;
}

// Coarse per-pair initialization for the joint optimizer: grid argmax of
// the two-channel objective for each non-reference channel.
inline SroVector grid_init_vector(const SpectrogramSet& spec,
                                  const EstimateConfig& cfg) {
  const SpectrogramSet ref = spec.select_channels(std::array<int, 1>{0});
  SroVector init = SroVector::zeros(spec.num_channels());
  for (int m = 1; m < spec.num_channels(); ++m) {
    const SpectrogramSet other = spec.select_channels(std::array<int, 1>{m});
    init.epsilons[m] = grid_search_init(ref, other, cfg.grid_range_ppm,
                                        cfg.grid_points,
                                        cfg.conjugate_reference)
                           .epsilon;
  }
  return init;
}

// Runs one estimation method on an analyzed spectrogram set.
inline SyncReport run_method(const SpectrogramSet& spec,
                             const std::string& method,
                             const EstimateConfig& cfg) {
  cfg.validate();
  if (spec.num_channels() < 2)
    throw InvalidInputError("estimate: need at least two channels");

  SyncReport rep;
  rep.method = method;
  rep.config_echo = cfg.to_json();
  rep.config_echo["method"] = method;
  rep.config_echo["num_channels"] = spec.num_channels();

  const auto t0 = std::chrono::steady_clock::now();
  if (method == "joint") {
    const SroVector init = grid_init_vector(spec, cfg);
    const JointResult res =
        estimate_joint(spec, init, cfg.outer_iters, cfg.inner_iters,
                       cfg.stop_tol_ppm * 1e-6, cfg.loading_delta);
    rep.sro_ppm = res.sro.to_ppm();
    rep.likelihood_trace = res.likelihood_trace;
    rep.iterations = res.iterations;
    rep.converged = res.converged;
  } else if (method == "pair-gss" || method == "pair-mm") {
    const PairMethod pm =
        method == "pair-gss" ? PairMethod::gss : PairMethod::mm;
    const SroVector est = estimate_pairwise(
        spec, pm, cfg.grid_range_ppm, cfg.grid_points, cfg.gss_tol_ppm,
        cfg.conjugate_reference);
    rep.sro_ppm = est.to_ppm();
    // bracket the run with the concentrated likelihood before/after
    rep.likelihood_trace = {
        concentrated_log_likelihood(spec, SroVector::zeros(spec.num_channels()),
                                    cfg.loading_delta),
        concentrated_log_likelihood(spec, est, cfg.loading_delta)};
    rep.iterations = 1;
    rep.converged = true;
  } else {
    throw InvalidInputError("estimate: unknown method '" + method +
                            "' (want joint, pair-gss, or pair-mm)");
  }
  rep.seconds = detail::elapsed_s(t0);
  rep.validate();
  return rep;
}

// simulate: scenario JSON in, one float32 WAV per channel + truth.json out.
inline int run_simulate(const std::string& scenario_path,
                        const std::string& out_dir) {
  const Scenario sc = scenario_from_json(detail::load_json_file(scenario_path));
  const double rate = 16000.0;
  const auto n_out = static_cast<std::size_t>(std::llround(sc.duration_s * rate));

  std::vector<TimeSignal> sources;
  sources.reserve(sc.num_sources);
  for (int s = 0; s < sc.num_sources; ++s) {
    GaussianRng rng(mix_seed(sc.seed, 0xD, s, 0));
    sources.push_back(make_speech_noise(n_out + 16384, rate, rng));
  }
  const std::vector<TimeSignal> channels = render_scenario(sc, sources);

  std::filesystem::create_directories(out_dir);
  const std::filesystem::path dir(out_dir);
  std::vector<std::string> written;
  for (std::size_t m = 0; m < channels.size(); ++m) {
    const std::string path = (dir / ("ch" + std::to_string(m) + ".wav")).string();
    write_wav(path, WavData{{channels[m].samples}, rate}, WavFormat::float32);
    written.push_back(path);
  }
  nlohmann::json truth{{"schema_version", kSchemaVersion},
                       {"true_sros", sc.true_sros_ppm},
                       {"sample_rate", rate},
                       {"num_channels", sc.num_channels},
                       {"scenario", scenario_to_json(sc)}};
  const std::string truth_path = (dir / "truth.json").string();
  detail::write_text_file(truth_path, truth.dump(2) + "\n");

  std::cout << "wrote " << channels.size() << " channels ("
            << channels[0].samples.size() << " samples each) and "
            << truth_path << "\n";
  return 0;
}

// estimate: WAVs in, SyncReport JSON out (stdout and optionally a file).
inline int run_estimate(const std::vector<std::string>& wav_paths,
                        const std::string& method, const EstimateConfig& cfg,
                        const std::string& out_path,
                        const std::string& truth_path) {
  const std::vector<TimeSignal> channels = load_channels(wav_paths);
  if (channels.size() < 2)
    throw InvalidInputError("estimate: need at least two channels");
  const SpectrogramSet spec = stft_multichannel(channels, cfg.stft);
  SyncReport rep = run_method(spec, method, cfg);

  if (!truth_path.empty()) {
    const nlohmann::json tj = detail::load_json_file(truth_path);
    if (!tj.contains("true_sros"))
      throw InvalidInputError("'" + truth_path + "': missing field 'true_sros'");
    const SroVector truth =
        SroVector::from_ppm(tj.at("true_sros").get<std::vector<double>>());
    rep.rmse_vs_truth_ppm =
        rmse_ppm(SroVector::from_ppm(rep.sro_ppm), truth);
  }

  const std::string body = rep.to_json().dump(2) + "\n";
  std::cout << body;
  if (!out_path.empty()) detail::write_text_file(out_path, body);
  return 0;
}

// compensate: undo estimated SROs, either by fractional resampling in the
// time domain or by the phase ramp in the STFT domain.
inline int run_compensate(const std::vector<std::string>& wav_paths,
                          const std::string& report_path,
                          const std::string& out_dir,
                          const std::string& path_mode,
                          const EstimateConfig& cfg) {
  if (path_mode != "resample" && path_mode != "stft")
    throw InvalidInputError("compensate: --path must be 'resample' or 'stft'");
  std::vector<TimeSignal> channels = load_channels(wav_paths);
  const SyncReport rep =
      SyncReport::from_json(detail::load_json_file(report_path));
  if (rep.sro_ppm.size() != channels.size())
    throw InvalidInputError(
        "compensate: report has " + std::to_string(rep.sro_ppm.size()) +
        " channels but inputs provide " + std::to_string(channels.size()));
  const SroVector sro = SroVector::from_ppm(rep.sro_ppm);
  sro.validate();

  // operate on the overlapping duration so outputs stay aligned
  std::size_t shortest = channels[0].samples.size();
  for (const auto& ch : channels)
    shortest = std::min(shortest, ch.samples.size());
  for (auto& ch : channels) ch.samples.resize(shortest);

  std::vector<TimeSignal> out;
  out.reserve(channels.size());
  if (path_mode == "resample") {
    for (std::size_t m = 0; m < channels.size(); ++m) {
      const double ratio = 1.0 / (1.0 + sro.epsilons[m]);
      const FractionalResampler rs(std::min(1.0, ratio));
      out.push_back(TimeSignal{
          rs.apply(channels[m].samples, ratio, shortest),
          channels[m].nominal_rate});
    }
  } else {
    for (std::size_t m = 0; m < channels.size(); ++m) {
      const SpectrogramSet spec = stft(channels[m], cfg.stft);
      out.push_back(istft(compensate_lpd(spec, sro.epsilons[m])));
    }
  }

  std::filesystem::create_directories(out_dir);
  const std::filesystem::path dir(out_dir);
  for (std::size_t m = 0; m < out.size(); ++m) {
    const std::string path =
        (dir / ("sync_ch" + std::to_string(m) + ".wav")).string();
    write_wav(path, WavData{{out[m].samples}, out[m].nominal_rate},
              WavFormat::float32);
  }
  std::cout << "wrote " << out.size() << " compensated channels to " << out_dir
            << " (" << path_mode << " path)\n";
  return 0;
}

struct BenchOptions {
  int speakers = 1;                    // sources per scenario
  std::vector<double> durations{30.0}; // seconds
  int trials = 10;
  int num_channels = 4;
  double snr_db = 30.0;
  bool reflections = false;  // add decaying reflection tails to each channel
  std::uint64_t seed = 0;
  int jobs = 1;
  std::vector<std::string> methods{"joint", "pair-gss", "pair-mm"};
  std::string out_csv;    // empty: stdout only
  std::string out_json;   // empty: skip summary file
  EstimateConfig cfg;
};

struct BenchRow {
  int speakers = 0;
  double duration_s = 0.0;
  int trial = 0;
  std::string method;
  double rmse_ppm = 0.0;
  double seconds = 0.0;
};

// One bench trial: render a fresh scenario (offsets uniform in +/-62.5
// ppm), run every method, score against the truth.
inline std::vector<BenchRow> bench_trial(const BenchOptions& opt,
                                         int duration_index, int trial) {
  const double duration = opt.durations[duration_index];
  Scenario sc;
  sc.num_channels = opt.num_channels;
  sc.num_sources = opt.speakers;
  sc.duration_s = duration;
  sc.snr_db = opt.snr_db;
  sc.reflections = opt.reflections;
  sc.seed = mix_seed(opt.seed, 0xF, duration_index, trial);
  sc.true_sros_ppm.assign(opt.num_channels, 0.0);
  GaussianRng sro_rng(mix_seed(opt.seed, 0xE, duration_index, trial));
  for (int m = 1; m < opt.num_channels; ++m)
    sc.true_sros_ppm[m] = sro_rng.uniform(-62.5, 62.5);

  const double rate = 16000.0;
  const auto n_out = static_cast<std::size_t>(std::llround(duration * rate));
  std::vector<TimeSignal> sources;
  for (int s = 0; s < sc.num_sources; ++s) {
    GaussianRng rng(mix_seed(sc.seed, 0xD, s, 0));
    sources.push_back(make_speech_noise(n_out + 16384, rate, rng));
  }
  const std::vector<TimeSignal> channels = render_scenario(sc, sources);
  const SpectrogramSet spec = stft_multichannel(channels, opt.cfg.stft);
  const SroVector truth = sc.true_sros();

  std::vector<BenchRow> rows;
  for (const std::string& method : opt.methods) {
    const SyncReport rep = run_method(spec, method, opt.cfg);
    BenchRow row;
    row.speakers = opt.speakers;
    row.duration_s = duration;
    row.trial = trial;
    row.method = method;
    row.rmse_ppm = rmse_ppm(SroVector::from_ppm(rep.sro_ppm), truth);
    row.seconds = rep.seconds;
    rows.push_back(std::move(row));
  }
  return rows;
}

inline int run_bench(const BenchOptions& opt) {
  if (opt.trials < 1) throw InvalidInputError("bench: trials must be >= 1");
  if (opt.speakers < 0) throw InvalidInputError("bench: speakers must be >= 0");
  if (opt.durations.empty())
    throw InvalidInputError("bench: need at least one duration");
  if (opt.jobs < 1) throw InvalidInputError("bench: jobs must be >= 1");
  opt.cfg.validate();

  const int cells = static_cast<int>(opt.durations.size()) * opt.trials;
  std::vector<std::vector<BenchRow>> results(cells);
  std::exception_ptr failure;
  std::mutex mu;
  int next = 0;

  auto worker = [&] {
    for (;;) {
      int cell;
      {
        std::lock_guard<std::mutex> lock(mu);
        if (failure || next >= cells) return;
        cell = next++;
      }
      try {
        const int di = cell / opt.trials;
        const int trial = cell % opt.trials;
        auto rows = bench_trial(opt, di, trial);
        std::lock_guard<std::mutex> lock(mu);
        results[cell] = std::move(rows);
      } catch (...) {
        std::lock_guard<std::mutex> lock(mu);
        if (!failure) failure = std::current_exception();
        return;
      }
    }
  };
  if (opt.jobs == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (int j = 0; j < opt.jobs; ++j) pool.emplace_back(worker);
    for (auto& th : pool) th.join();
  }
  if (failure) std::rethrow_exception(failure);

  std::string csv = "speakers,duration_s,trial,method,rmse_ppm,seconds\n";
  for (const auto& rows : results)
    for (const BenchRow& r : rows)
      csv += std::to_string(r.speakers) + "," + detail::fmt(r.duration_s) +
             "," + std::to_string(r.trial) + "," + r.method + "," +
             detail::fmt(r.rmse_ppm) + "," + detail::fmt(r.seconds, "%.3f") +
             "\n";
  std::cout << csv;
  if (!opt.out_csv.empty()) detail::write_text_file(opt.out_csv, csv);

  // per (duration, method) aggregates
  nlohmann::json summary{{"schema_version", kSchemaVersion},
                         {"speakers", opt.speakers},
                         {"trials", opt.trials},
                         {"num_channels", opt.num_channels},
                         {"snr_db", opt.snr_db},
                         {"seed", opt.seed},
                         {"config", opt.cfg.to_json()}};
  nlohmann::json agg = nlohmann::json::array();
  for (std::size_t di = 0; di < opt.durations.size(); ++di)
    for (const std::string& method : opt.methods) {
      double sum = 0.0, sum_sq = 0.0, sec = 0.0;
      int n = 0;
      for (int trial = 0; trial < opt.trials; ++trial)
        for (const BenchRow& r :
             results[di * opt.trials + trial])
          if (r.method == method) {
            sum += r.rmse_ppm;
            sum_sq += r.rmse_ppm * r.rmse_ppm;
            sec += r.seconds;
            ++n;
          }
      agg.push_back({{"duration_s", opt.durations[di]},
                     {"method", method},
                     {"mean_rmse_ppm", sum / n},
                     {"rms_rmse_ppm", std::sqrt(sum_sq / n)},
                     {"mean_seconds", sec / n},
                     {"trials", n}});
    }
  summary["results"] = agg;
  if (!opt.out_json.empty())
    detail::write_text_file(opt.out_json, summary.dump(2) + "\n");
  return 0;
}

// trace: dense sweep of the two-channel objective for external plotting.
inline int run_trace(const std::vector<std::string>& wav_paths,
                     double range_ppm, int points, const EstimateConfig& cfg,
                     const std::string& out_path) {
  const std::vector<TimeSignal> channels = load_channels(wav_paths);
  if (channels.size() != 2)
    throw InvalidInputError("trace: need exactly two channels");
  if (points < 1) throw InvalidInputError("trace: points must be >= 1");
  if (!(range_ppm > 0.0))
    throw InvalidInputError("trace: range must be positive");

  const SpectrogramSet spec = stft_multichannel(channels, cfg.stft);
  const PairwiseObjective obj(spec.select_channels(std::array<int, 1>{0}),
                              spec.select_channels(std::array<int, 1>{1}),
                              cfg.conjugate_reference);
  std::string csv = "epsilon_ppm,objective\n";
  for (int i = 0; i < points; ++i) {
    const double ppm =
        points == 1 ? 0.0
                    : -range_ppm + 2.0 * range_ppm * i / (points - 1);
    csv += detail::fmt(ppm, "%.6f") + "," +
           detail::fmt(obj(ppm * 1e-6), "%.9e") + "\n";
  }
  std::cout << csv;
  if (!out_path.empty()) detail::write_text_file(out_path, csv);
  return 0;
}

}  // namespace srosync

#endif  // SROSYNC_COMMANDS_HPP
