// Copyright 2026 srosync authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)
//
// Machine-readable artifacts: the SyncReport emitted by estimation runs,
// scenario files consumed by the simulator, and the estimation config.
// All JSON schemas carry a schema_version field.

#ifndef SROSYNC_REPORT_HPP
#define SROSYNC_REPORT_HPP

#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "srosync/common.hpp"
#include "srosync/signal.hpp"
#include "srosync/simulate.hpp"

namespace srosync {

inline constexpr int kSchemaVersion = 1;

// Result of one estimation run, sufficient to reproduce objective-trace
// and RMSE figures externally.
struct SyncReport {
  std::string method;                    // joint | pair-gss | pair-mm
  std::vector<double> sro_ppm;           // per channel, [0] == 0
  std::vector<double> likelihood_trace;  // length = iterations + 1
  int iterations = 0;
  bool converged = false;
  double seconds = 0.0;
  nlohmann::json config_echo;
  std::optional<double> rmse_vs_truth_ppm;

  void validate() const {
    if (likelihood_trace.size() != static_cast<std::size_t>(iterations) + 1)
      throw InvalidInputError(
          "SyncReport: trace length must be iterations + 1");
    for (double p : sro_ppm)
      if (!std::isfinite(p))
        throw InvalidInputError("SyncReport: non-finite sro_ppm entry");
  }

  nlohmann::json to_json() const {
    nlohmann::json j{{"schema_version", kSchemaVersion},
                     {"method", method},
                     {"sro_ppm", sro_ppm},
                     {"likelihood_trace", likelihood_trace},
                     {"iterations", iterations},
                     {"converged", converged},
                     {"seconds", seconds},
                     {"config", config_echo}};
    if (rmse_vs_truth_ppm) j["rmse_vs_truth_ppm"] = *rmse_vs_truth_ppm;
    return j;
  }

  static SyncReport from_json(const nlohmann::json& j) {
    SyncReport r;
    for (const char* key : {"method", "sro_ppm", "likelihood_trace", "iterations"})
      if (!j.contains(key))
        throw InvalidInputError(std::string("SyncReport: missing field '") +
                                key + "'");
    r.method = j.at("method").get<std::string>();
    r.sro_ppm = j.at("sro_ppm").get<std::vector<double>>();
    r.likelihood_trace = j.at("likelihood_trace").get<std::vector<double>>();
    r.iterations = j.at("iterations").get<int>();
    r.converged = j.value("converged", false);
    r.seconds = j.value("seconds", 0.0);
    if (j.contains("config")) r.config_echo = j.at("config");
    if (j.contains("rmse_vs_truth_ppm"))
      r.rmse_vs_truth_ppm = j.at("rmse_vs_truth_ppm").get<double>();
    r.validate();
    return r;
  }
};

// Scenario JSON: field names match the Scenario struct; true_sros holds
// ppm values with the reference entry first (must be 0).
inline Scenario scenario_from_json(const nlohmann::json& j) {
  Scenario sc;
  for (const char* key : {"num_channels", "num_sources", "duration_s", "true_sros"})
    if (!j.contains(key))
      throw InvalidInputError(std::string("scenario: missing field '") + key +
                              "'");
  sc.num_channels = j.at("num_channels").get<int>();
  sc.num_sources = j.at("num_sources").get<int>();
  sc.duration_s = j.at("duration_s").get<double>();
  sc.true_sros_ppm = j.at("true_sros").get<std::vector<double>>();
  sc.snr_db = j.value("snr_db", 30.0);
  sc.seed = j.value("seed", static_cast<std::uint64_t>(0));
  sc.reflections = j.value("reflections", false);
  if (j.contains("delay_model")) {
    const auto& dm = j.at("delay_model");
    for (const char* key : {"delays", "gains"})
      if (!dm.contains(key))
        throw InvalidInputError(
            std::string("scenario: delay_model missing field '") + key + "'");
    sc.delay_model.delays = dm.at("delays").get<std::vector<std::vector<int>>>();
    sc.delay_model.gains =
        dm.at("gains").get<std::vector<std::vector<double>>>();
  }
  sc.validate();
  return sc;
}

inline nlohmann::json scenario_to_json(const Scenario& sc) {
  nlohmann::json j{{"schema_version", kSchemaVersion},
                   {"num_channels", sc.num_channels},
                   {"num_sources", sc.num_sources},
                   {"duration_s", sc.duration_s},
                   {"true_sros", sc.true_sros_ppm},
                   {"snr_db", sc.snr_db},
                   {"seed", sc.seed},
                   {"reflections", sc.reflections}};
  if (!sc.delay_model.empty())
    j["delay_model"] = {{"delays", sc.delay_model.delays},
                        {"gains", sc.delay_model.gains}};
  return j;
}

// Knobs for the estimation workflows. File values are overridden by CLI
// flags; the effective config is echoed into every report.
struct EstimateConfig {
  StftConfig stft = default_stft_config();
  double grid_range_ppm = 100.0;
  int grid_points = 100;
  int outer_iters = 30;
  int inner_iters = 1;
  double stop_tol_ppm = 0.01;
  double loading_delta = 1e-6;
  double gss_tol_ppm = 0.001;
  bool conjugate_reference = true;

  void validate() const {
    stft.validate();
    if (grid_points < 2) throw ConfigError("config: grid_points must be >= 2");
    if (!(grid_range_ppm > 0.0))
      throw ConfigError("config: grid_range_ppm must be > 0");
    if (outer_iters < 1 || inner_iters < 1)
      throw ConfigError("config: iteration counts must be >= 1");
    if (!(stop_tol_ppm > 0.0) || !(gss_tol_ppm > 0.0))
      throw ConfigError("config: tolerances must be > 0");
    if (!(loading_delta > 0.0) || loading_delta > 1e-2)
      throw ConfigError("config: loading_delta must be in (0, 1e-2]");
  }

  nlohmann::json to_json() const {
    return nlohmann::json{
        {"schema_version", kSchemaVersion},
        {"stft",
         {{"window_length", stft.window_length},
          {"shift", stft.shift},
          {"dft_size", stft.dft_size}}},
        {"grid_range_ppm", grid_range_ppm},
        {"grid_points", grid_points},
        {"outer_iters", outer_iters},
        {"inner_iters", inner_iters},
        {"stop_tol_ppm", stop_tol_ppm},
        {"loading_delta", loading_delta},
        {"gss_tol_ppm", gss_tol_ppm},
        {"conjugate_reference", conjugate_reference}};
  }

  static EstimateConfig from_json(const nlohmann::json& j) {
    EstimateConfig c;
    if (j.contains("stft")) {
      const auto& s = j.at("stft");
      c.stft.window_length = s.value("window_length", c.stft.window_length);
      c.stft.shift = s.value("shift", c.stft.shift);
      c.stft.dft_size = s.value("dft_size", c.stft.dft_size);
      c.stft.window = hann_window(c.stft.window_length);
    }
    c.grid_range_ppm = j.value("grid_range_ppm", c.grid_range_ppm);
    c.grid_points = j.value("grid_points", c.grid_points);
    c.outer_iters = j.value("outer_iters", c.outer_iters);
    c.inner_iters = j.value("inner_iters", c.inner_iters);
    c.stop_tol_ppm = j.value("stop_tol_ppm", c.stop_tol_ppm);
    c.loading_delta = j.value("loading_delta", c.loading_delta);
    c.gss_tol_ppm = j.value("gss_tol_ppm", c.gss_tol_ppm);
    c.conjugate_reference = j.value("conjugate_reference", c.conjugate_reference);
    c.validate();
    return c;
  }
};

}  // namespace srosync

#endif  // SROSYNC_REPORT_HPP
