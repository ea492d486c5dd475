// Copyright 2026 srosync authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <vector>

#include "oracles.hpp"
#include "srosync/signal.hpp"

namespace srosync {
namespace {

StftConfig small_config(int L, int a, int F, bool hann = false) {
  StftConfig cfg;
  cfg.window_length = L;
  cfg.shift = a;
  cfg.dft_size = F;
  cfg.window = hann ? hann_window(L) : rect_window(L);
  return cfg;
}

TimeSignal random_signal(std::size_t n, std::uint64_t seed, double rate = 16000.0) {
  GaussianRng rng(seed);
  TimeSignal s;
  s.nominal_rate = rate;
  s.samples.resize(n);
  for (double& v : s.samples) v = rng.normal();
  return s;
}

double max_abs_diff(const SpectrogramSet& a, const SpectrogramSet& b) {
  REQUIRE(a.num_channels() == b.num_channels());
  REQUIRE(a.num_frames() == b.num_frames());
  REQUIRE(a.num_bins() == b.num_bins());
  double worst = 0.0;
  for (int m = 0; m < a.num_channels(); ++m)
    for (int t = 0; t < a.num_frames(); ++t)
      for (int f = 0; f < a.num_bins(); ++f)
        worst = std::max(worst, std::abs(a.at(m, t, f) - b.at(m, t, f)));
  return worst;
}

TEST_CASE("stft config validation", "[signal]") {
  REQUIRE_NOTHROW(default_stft_config().validate());

  StftConfig bad = small_config(8, 9, 16);  // shift > window_length
  REQUIRE_THROWS_AS(bad.validate(), InvalidInputError);

  bad = small_config(8, 4, 16);
  bad.window_length = 32;  // window_length > dft_size and length mismatch
  REQUIRE_THROWS_AS(bad.validate(), InvalidInputError);

  bad = small_config(8, 4, 16);
  bad.window.resize(7);
  REQUIRE_THROWS_AS(bad.validate(), InvalidInputError);

  bad = small_config(8, 4, 16);
  bad.window[3] = 1.5;  // out of [0, 1]
  REQUIRE_THROWS_AS(bad.validate(), InvalidInputError);

  bad = small_config(8, 4, 16);
  bad.window[2] = 0.25;  // breaks symmetry
  REQUIRE_THROWS_AS(bad.validate(), InvalidInputError);

  bad = small_config(8, 0, 16);
  REQUIRE_THROWS_AS(bad.validate(), InvalidInputError);
}

TEST_CASE("hann window shape", "[signal]") {
  const std::vector<double> w = hann_window(9);
  REQUIRE(w.size() == 9);
  REQUIRE(w[0] == 0.0);
  REQUIRE(std::abs(w[4] - 1.0) < 1e-15);  // odd length: exact center peak
  for (int l = 0; l < 9; ++l) {
    REQUIRE(w[l] >= 0.0);
    REQUIRE(w[l] <= 1.0);
    REQUIRE(std::abs(w[l] - w[8 - l]) < 1e-15);
  }
  StftConfig cfg = small_config(2048, 1024, 4096, true);
  REQUIRE_NOTHROW(cfg.validate());
}

TEST_CASE("stft of all-zero signal is all-zero", "[signal]") {
  TimeSignal sig{std::vector<double>(64, 0.0), 16000.0};
  const SpectrogramSet spec = stft(sig, small_config(16, 8, 16));
  for (int t = 0; t < spec.num_frames(); ++t)
    for (int f = 0; f < spec.num_bins(); ++f)
      REQUIRE(std::abs(spec.at(0, t, f)) == 0.0);
}

TEST_CASE("stft of unit impulse with rectangular window", "[signal]") {
  TimeSignal sig{std::vector<double>(16, 0.0), 16000.0};
  sig.samples[0] = 1.0;
  const SpectrogramSet spec = stft(sig, small_config(8, 4, 8));
  REQUIRE(spec.num_frames() == 3);
  REQUIRE(spec.num_bins() == 5);
  for (int f = 0; f < spec.num_bins(); ++f)
    REQUIRE(std::abs(spec.at(0, 0, f) - cplx(1.0, 0.0)) < 1e-12);
  for (int t = 1; t < spec.num_frames(); ++t)
    for (int f = 0; f < spec.num_bins(); ++f)
      REQUIRE(std::abs(spec.at(0, t, f)) < 1e-12);
}

TEST_CASE("stft of bin-centered sinusoid matches the direct DFT sum", "[signal]") {
  const int L = 64;
  const StftConfig cfg = small_config(L, 32, L, true);
  const int k = 4;
  TimeSignal sig;
  sig.samples.resize(128);
  for (std::size_t n = 0; n < sig.samples.size(); ++n)
    sig.samples[n] = std::cos(kTwoPi * k * static_cast<double>(n) / L);

  const SpectrogramSet spec = stft(sig, cfg);
  REQUIRE(spec.num_frames() == 3);

  // Exact agreement with the brute-force analysis sum at every cell.
  for (int t = 0; t < spec.num_frames(); ++t)
    for (int f = 0; f < spec.num_bins(); ++f) {
      const cplx want = oracle::naive_stft_bin(sig.samples, cfg, t, f);
      REQUIRE(std::abs(spec.at(0, t, f) - want) < 1e-10 * (1.0 + std::abs(want)));
    }

  // Energy concentrated at bin k. The mainlobe spans k-1..k+1; the symmetric
  // Hann window leaks O(1/L) of the peak into the remaining bins.
  for (int t = 0; t < spec.num_frames(); ++t) {
    const double peak = std::abs(spec.at(0, t, k));
    for (int f = 0; f < spec.num_bins(); ++f) {
      if (std::abs(f - k) <= 1) continue;
      REQUIRE(std::abs(spec.at(0, t, f)) < 1e-2 * peak);
    }
  }
}

TEST_CASE("stft frame count and short-signal error", "[signal]") {
  const StftConfig cfg = small_config(16, 4, 16);
  REQUIRE(stft_num_frames(16, cfg) == 1);
  REQUIRE(stft_num_frames(15, cfg) == 0);
  REQUIRE(stft_num_frames(16 + 5 * 4 + 3, cfg) == 6);

  TimeSignal tiny{std::vector<double>(15, 0.5), 16000.0};
  REQUIRE_THROWS_AS(stft(tiny, cfg), InvalidInputError);

  TimeSignal nan_sig{std::vector<double>(32, 0.0), 16000.0};
  nan_sig.samples[3] = std::nan("");
  REQUIRE_THROWS_AS(stft(nan_sig, cfg), InvalidInputError);
  REQUIRE_THROWS_AS(stft(TimeSignal{std::vector<double>(32, 0.0), -1.0}, cfg),
                    InvalidInputError);
}

TEST_CASE("stft is linear", "[signal]") {
  const StftConfig cfg = small_config(64, 32, 128, true);
  const TimeSignal x = random_signal(300, 11);
  const TimeSignal y = random_signal(300, 12);
  const double al = 0.7, be = -1.3;
  TimeSignal z = x;
  for (std::size_t n = 0; n < z.samples.size(); ++n)
    z.samples[n] = al * x.samples[n] + be * y.samples[n];

  const SpectrogramSet sx = stft(x, cfg), sy = stft(y, cfg), sz = stft(z, cfg);
  for (int t = 0; t < sz.num_frames(); ++t)
    for (int f = 0; f < sz.num_bins(); ++f) {
      const cplx want = al * sx.at(0, t, f) + be * sy.at(0, t, f);
      REQUIRE(std::abs(sz.at(0, t, f) - want) <= 1e-10 * (1.0 + std::abs(want)));
    }
}

TEST_CASE("stft_multichannel truncates to the shortest channel", "[signal]") {
  const StftConfig cfg = small_config(16, 8, 16);
  std::vector<TimeSignal> chans{random_signal(100, 21), random_signal(80, 22)};
  const SpectrogramSet spec = stft_multichannel(chans, cfg);
  REQUIRE(spec.num_channels() == 2);
  REQUIRE(spec.num_frames() == stft_num_frames(80, cfg));

  // Each channel matches its standalone transform over the shared frames.
  chans[0].samples.resize(80);
  const SpectrogramSet lone = stft(chans[0], cfg);
  for (int t = 0; t < spec.num_frames(); ++t)
    for (int f = 0; f < spec.num_bins(); ++f)
      REQUIRE(spec.at(0, t, f) == lone.at(0, t, f));

  REQUIRE_THROWS_AS(stft_multichannel(std::vector<TimeSignal>{}, cfg),
                    InvalidInputError);
}

TEST_CASE("istft round trip with the default Hann configuration", "[signal]") {
  const TimeSignal sig = random_signal(16000, 33);
  const StftConfig cfg = default_stft_config();
  const SpectrogramSet spec = stft(sig, cfg);
  const TimeSignal back = istft(spec);
  REQUIRE(back.samples.size() ==
          static_cast<std::size_t>(spec.num_frames() - 1) * cfg.shift +
              cfg.window_length);
  REQUIRE(back.nominal_rate == sig.nominal_rate);

  double worst = 0.0;
  for (std::size_t n = cfg.window_length;
       n + cfg.window_length < back.samples.size(); ++n)
    worst = std::max(worst, std::abs(back.samples[n] - sig.samples[n]));
  REQUIRE(worst < 1e-6);
}

TEST_CASE("istft exact round trip with non-overlapping rectangular window", "[signal]") {
  const StftConfig cfg = small_config(16, 16, 16);
  const TimeSignal sig = random_signal(64, 44);
  const TimeSignal back = istft(stft(sig, cfg));
  REQUIRE(back.samples.size() == 64);
  for (std::size_t n = 0; n < back.samples.size(); ++n)
    REQUIRE(std::abs(back.samples[n] - sig.samples[n]) < 1e-12);
}

TEST_CASE("istft of a zero spectrogram is zero", "[signal]") {
  SpectrogramSet spec(1, 4, small_config(8, 4, 8), 16000.0);
  const TimeSignal out = istft(spec);
  for (double v : out.samples) REQUIRE(v == 0.0);
}

TEST_CASE("istft rejects zero-coverage window/shift pairs", "[signal]") {
  // A Hann window stepped by its full length leaves the frame-boundary
  // samples with zero synthesis weight.
  SpectrogramSet hop_too_big(1, 3, small_config(16, 16, 16, true), 16000.0);
  REQUIRE_THROWS_AS(istft(hop_too_big), ConfigError);

  StftConfig zero_window = small_config(8, 4, 8);
  std::fill(zero_window.window.begin(), zero_window.window.end(), 0.0);
  SpectrogramSet dead(1, 3, zero_window, 16000.0);
  REQUIRE_THROWS_AS(istft(dead), ConfigError);

  SpectrogramSet multi(2, 3, small_config(8, 4, 8), 16000.0);
  REQUIRE_THROWS_AS(istft(multi), InvalidInputError);
}

TEST_CASE("compensate_lpd identity and frame-zero behaviour", "[signal]") {
  GaussianRng rng(55);
  SpectrogramSet spec = oracle::random_spectrogram(2, 5, rng);

  const SpectrogramSet same = compensate_lpd(spec, 0.0);
  REQUIRE(max_abs_diff(spec, same) == 0.0);

  const SpectrogramSet rot = compensate_lpd(spec, 1e-4);
  for (int m = 0; m < spec.num_channels(); ++m)
    for (int f = 0; f < spec.num_bins(); ++f)
      REQUIRE(rot.at(m, 0, f) == spec.at(m, 0, f));  // t = 0: phase factor 1
}

TEST_CASE("compensate_lpd half-turn example", "[signal]") {
  // a*t*f*eps/F = 4*50*4*0.005/8 = 1/2, so the phase factor is exp(j*pi) = -1.
  SpectrogramSet spec(1, 51, small_config(8, 4, 8), 16000.0);
  spec.at(0, 50, 4) = cplx(1.0, 0.0);
  const SpectrogramSet out = compensate_lpd(spec, 0.005);
  REQUIRE(std::abs(out.at(0, 50, 4) - cplx(-1.0, 0.0)) < 1e-12);
}

TEST_CASE("compensate_lpd preserves magnitudes and composes", "[signal]") {
  GaussianRng rng(66);
  const SpectrogramSet spec = oracle::random_spectrogram(2, 6, rng);
  const double e1 = 37.5e-6, e2 = -12.25e-6;

  const SpectrogramSet r1 = compensate_lpd(spec, e1);
  for (int m = 0; m < spec.num_channels(); ++m)
    for (int t = 0; t < spec.num_frames(); ++t)
      for (int f = 0; f < spec.num_bins(); ++f)
        REQUIRE(std::abs(std::abs(r1.at(m, t, f)) - std::abs(spec.at(m, t, f))) <
                1e-12);

  REQUIRE(max_abs_diff(compensate_lpd(r1, -e1), spec) < 1e-12);
  REQUIRE(max_abs_diff(compensate_lpd(r1, e2), compensate_lpd(spec, e1 + e2)) <
          1e-10);
}

TEST_CASE("compensate_lpd validates its offsets", "[signal]") {
  GaussianRng rng(77);
  const SpectrogramSet spec = oracle::random_spectrogram(2, 3, rng);
  REQUIRE_THROWS_AS(compensate_lpd(spec, 0.01), InvalidInputError);
  REQUIRE_THROWS_AS(compensate_lpd(spec, std::nan("")), InvalidInputError);

  const std::vector<double> wrong_len{0.0, 1e-5, 0.0};
  REQUIRE_THROWS_AS(compensate_lpd(spec, std::span<const double>(wrong_len)),
                    InvalidInputError);

  // Per-channel overload: channel 0 untouched, channel 1 equals the scalar path.
  const std::vector<double> eps{0.0, 25e-6};
  const SpectrogramSet per = compensate_lpd(spec, std::span<const double>(eps));
  const SpectrogramSet all = compensate_lpd(spec, 25e-6);
  for (int t = 0; t < spec.num_frames(); ++t)
    for (int f = 0; f < spec.num_bins(); ++f) {
      REQUIRE(per.at(0, t, f) == spec.at(0, t, f));
      REQUIRE(per.at(1, t, f) == all.at(1, t, f));
    }
}

TEST_CASE("omega gives the phase advance per unit offset", "[signal]") {
  SpectrogramSet spec(1, 5, small_config(8, 4, 8), 16000.0);
  REQUIRE(spec.omega(0, 3) == 0.0);
  REQUIRE(spec.omega(2, 0) == 0.0);
  REQUIRE(std::abs(spec.omega(3, 2) - kTwoPi * 4.0 * 3.0 * 2.0 / 8.0) < 1e-12);
}

TEST_CASE("select_channels copies and validates", "[signal]") {
  GaussianRng rng(88);
  const SpectrogramSet spec = oracle::random_spectrogram(3, 4, rng);
  const SpectrogramSet sub =
      spec.select_channels(std::array<int, 2>{2, 0});
  REQUIRE(sub.num_channels() == 2);
  for (int t = 0; t < spec.num_frames(); ++t)
    for (int f = 0; f < spec.num_bins(); ++f) {
      REQUIRE(sub.at(0, t, f) == spec.at(2, t, f));
      REQUIRE(sub.at(1, t, f) == spec.at(0, t, f));
    }
  REQUIRE_THROWS_AS(spec.select_channels(std::array<int, 1>{3}),
                    InvalidInputError);
}

}  // namespace
}  // namespace srosync
