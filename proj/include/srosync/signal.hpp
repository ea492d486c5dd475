// Copyright 2026 srosync authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)
//
// STFT analysis/synthesis and linear-phase-drift compensation.
//
// A sampling rate offset eps shifts the t-th analysis frame of a drifted
// recording by roughly eps*a*t samples against the reference clock. In the
// STFT domain that is, to first order, a phase ramp linear in both frame
// index and frequency bin. compensate_lpd() applies the inverse ramp
//   x_hat[t,f] = x[t,f] * exp(+2*pi*j * a*t*f*eps / F)
// so a correctly estimated eps yields coefficients of the synchronized
// signal. All estimation code operates on the one-sided spectrum
// f = 0..F/2; synthesis restores the negative bins by conjugate symmetry.

#ifndef SROSYNC_SIGNAL_HPP
#define SROSYNC_SIGNAL_HPP

#include <algorithm>
#include <cstddef>
#include <utility>

#include <unsupported/Eigen/FFT>

#include "srosync/common.hpp"

namespace srosync {

// Single-channel sampled waveform at a nominal rate r0. The device's true
// rate is (1 + eps)*r0; eps lives elsewhere (SroVector).
struct TimeSignal {
  std::vector<double> samples;
  double nominal_rate = 16000.0;

  void validate() const {
    if (nominal_rate <= 0.0)
      throw InvalidInputError("TimeSignal: nominal_rate must be > 0");
    if (!all_finite(samples))
      throw InvalidInputError("TimeSignal: samples must be finite");
  }
};

struct StftConfig {
  int window_length = 2048;  // L
  int shift = 1024;          // a
  int dft_size = 4096;       // F
  std::vector<double> window;  // analysis window g, length L

  void validate() const {
    if (shift <= 0 || shift > window_length || window_length > dft_size)
      throw InvalidInputError("StftConfig: need 0 < shift <= window_length <= dft_size");
    if (static_cast<int>(window.size()) != window_length)
      throw InvalidInputError("StftConfig: window length mismatch");
    for (std::size_t l = 0; l < window.size(); ++l) {
      const double w = window[l];
      if (!(w >= 0.0 && w <= 1.0))
        throw InvalidInputError("StftConfig: window values must lie in [0,1]");
      if (std::abs(w - window[window.size() - 1 - l]) > 1e-12)
        throw InvalidInputError("StftConfig: window must be symmetric");
    }
  }

  int num_bins() const { return dft_size / 2 + 1; }

  bool operator==(const StftConfig&) const = default;
};

inline std::vector<double> hann_window(int length) {
  std::vector<double> w(length);
  for (int l = 0; l < length; ++l)
    w[l] = 0.5 * (1.0 - std::cos(kTwoPi * l / (length - 1)));
  return w;
}

inline std::vector<double> rect_window(int length) {
  return std::vector<double>(length, 1.0);
}

inline StftConfig default_stft_config() {
  StftConfig cfg;
  cfg.window = hann_window(cfg.window_length);
  return cfg;
}

// Multichannel complex STFT coefficients, stored [channel][frame][bin]
// with the bin index fastest. Only the one-sided bins 0..F/2 are kept.
class SpectrogramSet {
 public:
  SpectrogramSet() = default;
  SpectrogramSet(int num_channels, int num_frames, StftConfig config,
                 double sample_rate)
      : config_(std::move(config)),
        num_channels_(num_channels),
        num_frames_(num_frames),
        num_bins_(config_.num_bins()),
        sample_rate_(sample_rate),
        coeffs_(static_cast<std::size_t>(num_channels) * num_frames * num_bins_) {}

  int num_channels() const { return num_channels_; }
  int num_frames() const { return num_frames_; }
  int num_bins() const { return num_bins_; }
  double sample_rate() const { return sample_rate_; }
  const StftConfig& config() const { return config_; }

  cplx& at(int m, int t, int f) {
    return coeffs_[(static_cast<std::size_t>(m) * num_frames_ + t) * num_bins_ + f];
  }
  const cplx& at(int m, int t, int f) const {
    return coeffs_[(static_cast<std::size_t>(m) * num_frames_ + t) * num_bins_ + f];
  }

  // Contiguous bin row of one (channel, frame).
  std::span<cplx> bins(int m, int t) {
    return {&at(m, t, 0), static_cast<std::size_t>(num_bins_)};
  }
  std::span<const cplx> bins(int m, int t) const {
    return {&at(m, t, 0), static_cast<std::size_t>(num_bins_)};
  }

  std::span<const cplx> raw() const { return coeffs_; }

  // Phase advance per unit eps at (t, f): omega[t,f] = 2*pi*a*t*f/F.
  double omega(int t, int f) const {
    return kTwoPi * config_.shift * static_cast<double>(t) * f / config_.dft_size;
  }

  SpectrogramSet select_channels(std::span<const int> channels) const {
    for (int m : channels)
      if (m < 0 || m >= num_channels_)
        throw InvalidInputError("select_channels: channel index out of range");
    SpectrogramSet out(static_cast<int>(channels.size()), num_frames_, config_,
                       sample_rate_);
    for (std::size_t i = 0; i < channels.size(); ++i)
      std::copy_n(&at(channels[i], 0, 0),
                  static_cast<std::size_t>(num_frames_) * num_bins_,
                  &out.at(static_cast<int>(i), 0, 0));
    return out;
  }

  void validate() const {
    if (!all_finite(coeffs_))
      throw InvalidInputError("SpectrogramSet: coefficients must be finite");
  }

 private:
  StftConfig config_;
  int num_channels_ = 0;
  int num_frames_ = 0;
  int num_bins_ = 0;
  double sample_rate_ = 0.0;
  std::vector<cplx> coeffs_;
};

inline int stft_num_frames(std::size_t num_samples, const StftConfig& cfg) {
  if (num_samples < static_cast<std::size_t>(cfg.window_length)) return 0;
  return static_cast<int>((num_samples - cfg.window_length) / cfg.shift) + 1;
}

// One-sided STFT of a single channel. Frames past the signal tail are
// dropped, never zero-padded.
inline SpectrogramSet stft(const TimeSignal& signal, const StftConfig& config) {
  config.validate();
  signal.validate();
  const int L = config.window_length;
  const int F = config.dft_size;
  const int T = stft_num_frames(signal.samples.size(), config);
  if (T < 1)
    throw InvalidInputError("stft: signal shorter than one analysis window");

  SpectrogramSet out(1, T, config, signal.nominal_rate);
  Eigen::FFT<double> fft;
  std::vector<cplx> frame(F), spec(F);
  for (int t = 0; t < T; ++t) {
    const double* seg = signal.samples.data() + static_cast<std::size_t>(t) * config.shift;
    for (int l = 0; l < L; ++l) frame[l] = seg[l] * config.window[l];
    std::fill(frame.begin() + L, frame.end(), cplx(0.0, 0.0));
    fft.fwd(spec, frame);
    std::copy_n(spec.begin(), out.num_bins(), out.bins(0, t).begin());
  }
  return out;
}

inline SpectrogramSet stft_multichannel(std::span<const TimeSignal> signals,
                                        const StftConfig& config) {
  if (signals.empty()) throw InvalidInputError("stft_multichannel: no channels");
  std::size_t shortest = signals[0].samples.size();
  for (const auto& s : signals) shortest = std::min(shortest, s.samples.size());

  const int T = stft_num_frames(shortest, config);
  if (T < 1)
    throw InvalidInputError("stft_multichannel: signal shorter than one analysis window");
  SpectrogramSet out(static_cast<int>(signals.size()), T, config,
                     signals[0].nominal_rate);
  for (std::size_t m = 0; m < signals.size(); ++m) {
    TimeSignal trimmed{{signals[m].samples.begin(),
                        signals[m].samples.begin() + shortest},
                       signals[m].nominal_rate};
    SpectrogramSet one = stft(trimmed, config);
    std::copy_n(&one.at(0, 0, 0), static_cast<std::size_t>(T) * out.num_bins(),
                &out.at(static_cast<int>(m), 0, 0));
  }
  return out;
}

// Per-sample synthesis weight sum(g^2(r + k*a)) over one shift period of the
// steady state. Perfect weighted-overlap-add reconstruction needs this to be
// bounded away from zero.
inline double min_steady_state_coverage(const StftConfig& cfg) {
  double lo = std::numeric_limits<double>::infinity();
  for (int r = 0; r < cfg.shift; ++r) {
    double acc = 0.0;
    for (int l = r; l < cfg.window_length; l += cfg.shift)
      acc += cfg.window[l] * cfg.window[l];
    lo = std::min(lo, acc);
  }
  return lo;
}

// Weighted overlap-add inverse STFT. Exact for unmodified coefficients
// wherever the window coverage is nonzero; the caller should treat the
// first/last window_length samples as edge region.
inline TimeSignal istft(const SpectrogramSet& spec) {
  const StftConfig& cfg = spec.config();
  cfg.validate();
  if (spec.num_channels() != 1)
    throw InvalidInputError("istft: expects a single-channel spectrogram");
  if (min_steady_state_coverage(cfg) < 1e-12)
    throw ConfigError("istft: window/shift pair cannot reconstruct (zero overlap-add coverage)");

  const int L = cfg.window_length;
  const int F = cfg.dft_size;
  const int T = spec.num_frames();
  const int B = spec.num_bins();
  const std::size_t out_len = static_cast<std::size_t>(T - 1) * cfg.shift + L;

  std::vector<double> acc(out_len, 0.0), weight(out_len, 0.0);
  Eigen::FFT<double> fft;
  std::vector<cplx> full(F), frame(F);
  for (int t = 0; t < T; ++t) {
    auto row = spec.bins(0, t);
    for (int f = 0; f < B; ++f) full[f] = row[f];
    for (int f = B; f < F; ++f) full[f] = std::conj(row[F - f]);
    fft.inv(frame, full);
    double* dst = acc.data() + static_cast<std::size_t>(t) * cfg.shift;
    double* wts = weight.data() + static_cast<std::size_t>(t) * cfg.shift;
    for (int l = 0; l < L; ++l) {
      dst[l] += cfg.window[l] * frame[l].real();
      wts[l] += cfg.window[l] * cfg.window[l];
    }
  }
  for (std::size_t n = 0; n < out_len; ++n)
    acc[n] = weight[n] > 1e-12 ? acc[n] / weight[n] : 0.0;
  return TimeSignal{std::move(acc), spec.sample_rate()};
}

// Applies the phase ramp exp(+2*pi*j*a*t*f*eps/F) to every channel.
// Pure rotation: magnitudes are preserved.
inline SpectrogramSet compensate_lpd(const SpectrogramSet& spec, double epsilon) {
  if (!std::isfinite(epsilon) || std::abs(epsilon) >= kMaxAbsSro)
    throw InvalidInputError("compensate_lpd: |epsilon| must be finite and < 0.01");
  SpectrogramSet out = spec;
  if (epsilon == 0.0) return out;
  const double a = spec.config().shift;
  const double F = spec.config().dft_size;
  for (int m = 0; m < out.num_channels(); ++m) {
    for (int t = 0; t < out.num_frames(); ++t) {
      auto row = out.bins(m, t);
      const double step = kTwoPi * a * t * epsilon / F;  // phase per bin
      for (int f = 0; f < out.num_bins(); ++f)
        row[f] *= std::polar(1.0, step * f);
    }
  }
  return out;
}

// Per-channel variant: channel m is rotated by its own offset epsilons[m].
inline SpectrogramSet compensate_lpd(const SpectrogramSet& spec,
                                     std::span<const double> epsilons) {
  if (static_cast<int>(epsilons.size()) != spec.num_channels())
    throw InvalidInputError("compensate_lpd: offset count must match channel count");
  for (double e : epsilons)
    if (!std::isfinite(e) || std::abs(e) >= kMaxAbsSro)
      throw InvalidInputError("compensate_lpd: |epsilon| must be finite and < 0.01");
  SpectrogramSet out = spec;
  const double a = spec.config().shift;
  const double F = spec.config().dft_size;
  for (int m = 0; m < out.num_channels(); ++m) {
    if (epsilons[m] == 0.0) continue;
    for (int t = 0; t < out.num_frames(); ++t) {
      auto row = out.bins(m, t);
      const double step = kTwoPi * a * t * epsilons[m] / F;
      for (int f = 0; f < out.num_bins(); ++f)
        row[f] *= std::polar(1.0, step * f);
    }
  }
  return out;
}

}  // namespace srosync

#endif  // SROSYNC_SIGNAL_HPP
