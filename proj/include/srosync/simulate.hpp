// Copyright 2026 srosync authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)
//
// Ground-truth scenario generation: inject known SROs by fractional
// resampling, mix sources with per-channel delays/gains and noise, and
// score estimates against the truth. Everything is deterministic under
// the scenario seed so runs are bit-reproducible.

#ifndef SROSYNC_SIMULATE_HPP
#define SROSYNC_SIMULATE_HPP

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "srosync/common.hpp"
#include "srosync/likelihood.hpp"
#include "srosync/signal.hpp"

namespace srosync {

// Windowed-sinc fractional resampler: 64 taps per side under a Kaiser
// window, evaluated through a 512-phase polyphase table with linear
// interpolation between phases. Each phase row is normalized to unit sum
// so DC gain is exactly one.
class FractionalResampler {
 public:
  static constexpr int kTapsPerSide = 64;
  static constexpr int kNumTaps = 2 * kTapsPerSide;
  static constexpr int kPhases = 512;
  static constexpr double kKaiserBeta = 10.0;

  // cutoff_scale <= 1 shrinks the passband for downsampling.
  explicit FractionalResampler(double cutoff_scale = 1.0) {
    if (!(cutoff_scale > 0.0) || cutoff_scale > 1.0)
      throw InvalidInputError("FractionalResampler: cutoff_scale must be in (0, 1]");
    table_.resize(static_cast<std::size_t>(kPhases + 1) * kNumTaps);
    const double i0_beta = std::cyl_bessel_i(0.0, kKaiserBeta);
    for (int p = 0; p <= kPhases; ++p) {
      double* row = &table_[static_cast<std::size_t>(p) * kNumTaps];
      const double frac = static_cast<double>(p) / kPhases;
      double sum = 0.0;
      for (int i = 0; i < kNumTaps; ++i) {
        // offset of input sample (base - 63 + i) from the read position
        const double x = frac + (kTapsPerSide - 1) - i;
        double h = 0.0;
        if (std::abs(x) < kTapsPerSide) {
          const double r = x / kTapsPerSide;
          const double kaiser =
              std::cyl_bessel_i(0.0, kKaiserBeta * std::sqrt(1.0 - r * r)) /
              i0_beta;
          h = cutoff_scale * sinc(kPi * cutoff_scale * x) * kaiser;
        }
        row[i] = h;
        sum += h;
      }
      for (int i = 0; i < kNumTaps; ++i) row[i] /= sum;
    }
  }

  // result[n] = input interpolated at position n / ratio (input indices);
  // positions outside the input read as zero (edge regions).
  std::vector<double> apply(std::span<const double> input, double ratio,
                            std::size_t output_length) const {
    if (!(ratio > 0.9) || !(ratio < 1.1))
      throw InvalidInputError("fractional_resample: ratio must be in (0.9, 1.1)");
    const auto len = static_cast<std::ptrdiff_t>(input.size());
    std::vector<double> out(output_length, 0.0);
    for (std::size_t n = 0; n < output_length; ++n) {
      const double pos = static_cast<double>(n) / ratio;
      const auto base = static_cast<std::ptrdiff_t>(std::floor(pos));
      const double frac = pos - static_cast<double>(base);
      const double u = frac * kPhases;
      const int p0 = std::min(static_cast<int>(u), kPhases - 1);
      const double a = u - p0;
      const double* r0 = &table_[static_cast<std::size_t>(p0) * kNumTaps];
      const double* r1 = r0 + kNumTaps;
      const std::ptrdiff_t first = base - (kTapsPerSide - 1);
      double acc = 0.0;
      if (first >= 0 && first + kNumTaps <= len) {
        const double* in = input.data() + first;
        for (int i = 0; i < kNumTaps; ++i)
          acc += in[i] * (r0[i] + a * (r1[i] - r0[i]));
      } else {
        for (int i = 0; i < kNumTaps; ++i) {
          const std::ptrdiff_t k = first + i;
          if (k < 0 || k >= len) continue;
          acc += input[k] * (r0[i] + a * (r1[i] - r0[i]));
        }
      }
      out[n] = acc;
    }
    return out;
  }

 private:
  std::vector<double> table_;
};

inline TimeSignal fractional_resample(const TimeSignal& signal, double ratio) {
  if (!(ratio > 0.9) || !(ratio < 1.1))
    throw InvalidInputError("fractional_resample: ratio must be in (0.9, 1.1)");
  const FractionalResampler rs(std::min(1.0, ratio));
  return TimeSignal{rs.apply(signal.samples, ratio, signal.samples.size()),
                    signal.nominal_rate};
}

// Per-(source, channel) integer-sample delays and linear gains.
struct DelayModel {
  std::vector<std::vector<int>> delays;     // [source][channel]
  std::vector<std::vector<double>> gains;   // [source][channel]

  bool empty() const { return delays.empty() && gains.empty(); }
};

struct Scenario {
  int num_channels = 2;
  int num_sources = 1;
  double duration_s = 10.0;
  std::vector<double> true_sros_ppm;  // [0] must be 0
  double snr_db = 30.0;               // default per repo convention
  std::uint64_t seed = 0;
  bool reflections = false;           // add decaying reflection tails
  DelayModel delay_model;             // generated from seed when empty

  void validate() const {
    if (num_channels < 1) throw InvalidInputError("Scenario: need >= 1 channel");
    if (num_sources < 0) throw InvalidInputError("Scenario: num_sources < 0");
    if (!(duration_s > 0.0)) throw InvalidInputError("Scenario: duration must be > 0");
    if (static_cast<int>(true_sros_ppm.size()) != num_channels)
      throw InvalidInputError("Scenario: true_sros length must equal num_channels");
    if (true_sros_ppm[0] != 0.0)
      throw InvalidInputError("Scenario: true_sros[0] must be 0 (reference)");
    for (double p : true_sros_ppm)
      if (!std::isfinite(p) || std::abs(p) * 1e-6 >= kMaxAbsSro)
        throw InvalidInputError("Scenario: |true_sro| must be < 10000 ppm");
    if (!delay_model.empty()) {
      if (static_cast<int>(delay_model.delays.size()) != num_sources ||
          static_cast<int>(delay_model.gains.size()) != num_sources)
        throw InvalidInputError("Scenario: delay_model source count mismatch");
      for (int s = 0; s < num_sources; ++s)
        if (static_cast<int>(delay_model.delays[s].size()) != num_channels ||
            static_cast<int>(delay_model.gains[s].size()) != num_channels)
          throw InvalidInputError("Scenario: delay_model channel count mismatch");
    }
  }

  SroVector true_sros() const {
    SroVector v;
    v.epsilons = true_sros_ppm;
    for (double& e : v.epsilons) e *= 1e-6;
    return v;
  }
};

// Fills in a delay model drawn deterministically from the scenario seed:
// integer delays in [0, 50] samples, gains in [0.5, 1.0].
inline DelayModel make_delay_model(const Scenario& sc) {
  if (!sc.delay_model.empty()) return sc.delay_model;
  DelayModel dm;
  dm.delays.assign(sc.num_sources, std::vector<int>(sc.num_channels, 0));
  dm.gains.assign(sc.num_sources, std::vector<double>(sc.num_channels, 1.0));
  for (int s = 0; s < sc.num_sources; ++s)
    for (int m = 0; m < sc.num_channels; ++m) {
      GaussianRng rng(mix_seed(sc.seed, 0xB, s, m));
      dm.delays[s][m] = static_cast<int>(rng.uniform_int(0, 50));
      dm.gains[s][m] = rng.uniform(0.5, 1.0);
    }
  return dm;
}

// Speech-shaped test noise: white Gaussian rolled off twice by one-pole
// lowpass sections at 500 Hz (about -12 dB/octave above the corner),
// normalized to unit RMS.
inline TimeSignal make_speech_noise(std::size_t num_samples, double sample_rate,
                                    GaussianRng& rng) {
  if (num_samples == 0)
    throw InvalidInputError("make_speech_noise: need num_samples > 0");
  std::vector<double> x(num_samples);
  for (double& v : x) v = rng.normal();
  const double a = std::exp(-kTwoPi * 500.0 / sample_rate);
  for (int pass = 0; pass < 2; ++pass) {
    double state = 0.0;
    for (double& v : x) {
      state = a * state + (1.0 - a) * v;
      v = state;
    }
  }
  double power = 0.0;
  for (double v : x) power += v * v;
  const double rms = std::sqrt(power / num_samples);
  if (rms > 0.0)
    for (double& v : x) v /= rms;
  return TimeSignal{std::move(x), sample_rate};
}

// Renders every channel: sum of delayed/attenuated sources plus white
// noise at snr_db, then fractional resampling by (1 + eps_m). With zero
// sources the channels are unit-variance noise. Deterministic per seed.
inline std::vector<TimeSignal> render_scenario(
    const Scenario& sc, std::span<const TimeSignal> sources) {
  sc.validate();
  if (static_cast<int>(sources.size()) < sc.num_sources)
    throw InvalidInputError("render_scenario: not enough source signals");
  const double rate = sc.num_sources > 0 ? sources[0].nominal_rate : 16000.0;
  const auto n_out = static_cast<std::size_t>(std::llround(sc.duration_s * rate));
  if (n_out == 0) throw InvalidInputError("render_scenario: empty output");
  for (int s = 0; s < sc.num_sources; ++s)
    if (sources[s].samples.size() < n_out)
      throw InvalidInputError("render_scenario: source " + std::to_string(s) +
                              " shorter than the scenario duration");

  const DelayModel dm = make_delay_model(sc);
  int max_delay = 0;
  for (const auto& row : dm.delays)
    for (int d : row) max_delay = std::max(max_delay, d);
  if (sc.reflections) max_delay += 8 * 400;
  const std::size_t n_mix = n_out + max_delay + 2 * FractionalResampler::kNumTaps;

  std::vector<TimeSignal> out;
  out.reserve(sc.num_channels);
  const FractionalResampler resampler(1.0);
  for (int m = 0; m < sc.num_channels; ++m) {
    std::vector<double> mix(n_mix, 0.0);
    for (int s = 0; s < sc.num_sources; ++s) {
      const std::vector<double>& src = sources[s].samples;
      // direct path plus optional decaying reflection taps
      std::vector<std::pair<int, double>> taps{
          {dm.delays[s][m], dm.gains[s][m]}};
      if (sc.reflections) {
        GaussianRng refl(mix_seed(sc.seed, 0xC, s, m));
        int d = dm.delays[s][m];
        double g = dm.gains[s][m];
        for (int k = 0; k < 8; ++k) {
          d += static_cast<int>(refl.uniform_int(20, 400));
          g *= 0.55;
          const double sign = refl.uniform() < 0.5 ? -1.0 : 1.0;
          taps.emplace_back(d, sign * g * refl.uniform(0.4, 1.0));
        }
      }
      for (const auto& [delay, gain] : taps)
        for (std::size_t i = delay; i < n_mix; ++i) {
          const std::size_t k = i - delay;
          if (k >= src.size()) break;
          mix[i] += gain * src[k];
        }
    }

    GaussianRng noise_rng(mix_seed(sc.seed, 0xA, m, 0));
    if (sc.num_sources == 0) {
      for (double& v : mix) v = noise_rng.normal();
    } else if (std::isfinite(sc.snr_db)) {
      double power = 0.0;
      for (double v : mix) power += v * v;
      power /= static_cast<double>(n_mix);
      const double noise_std =
          std::sqrt(power) * std::pow(10.0, -sc.snr_db / 20.0);
      for (double& v : mix) v += noise_std * noise_rng.normal();
    }

    const double ratio = 1.0 + sc.true_sros_ppm[m] * 1e-6;
    out.push_back(TimeSignal{resampler.apply(mix, ratio, n_out), rate});
  }
  return out;
}

// RMSE over the non-reference channels, in ppm.
inline double rmse_ppm(const SroVector& estimated, const SroVector& truth) {
  if (estimated.size() != truth.size())
    throw InvalidInputError("rmse_ppm: vector lengths differ");
  if (estimated.size() < 2)
    throw InvalidInputError("rmse_ppm: need at least two channels");
  double acc = 0.0;
  for (int m = 1; m < estimated.size(); ++m) {
    const double d = (estimated.epsilons[m] - truth.epsilons[m]) * 1e6;
    acc += d * d;
  }
  return std::sqrt(acc / (estimated.size() - 1));
}

}  // namespace srosync

#endif  // SROSYNC_SIMULATE_HPP
