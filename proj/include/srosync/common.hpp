// Copyright 2026 srosync authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#ifndef SROSYNC_COMMON_HPP
#define SROSYNC_COMMON_HPP

#include <cmath>
#include <complex>
#include <cstdint>
#include <limits>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace srosync {

using cplx = std::complex<double>;

inline constexpr double kPi = 3.14159265358979323846;
inline constexpr double kTwoPi = 2.0 * kPi;

// Largest sampling rate offset accepted anywhere: |eps| < 10000 ppm.
inline constexpr double kMaxAbsSro = 0.01;

// Input that violates an operation's preconditions (bad sizes, bad values).
class InvalidInputError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// A structurally inconsistent configuration (e.g. a window/shift pair
// that cannot reconstruct the signal).
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Numerical failure at runtime (singular matrices, non-finite iterates).
class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Filesystem / file-format failures (unreadable paths, malformed WAV).
class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

inline bool all_finite(std::span<const double> v) {
  for (double x : v)
    if (!std::isfinite(x)) return false;
  return true;
}

inline bool all_finite(std::span<const cplx> v) {
  for (const cplx& x : v)
    if (!std::isfinite(x.real()) || !std::isfinite(x.imag())) return false;
  return true;
}

// sin(x)/x with a series branch near zero so the limit value 1 is hit
// smoothly instead of through 0/0.
inline double sinc(double x) {
  if (std::abs(x) < 1e-4) return 1.0 - x * x / 6.0;
  return std::sin(x) / x;
}

// floor() with a deterministic tie rule: arguments within 1e-12 of an
// integer are nudged up before truncation, so downstream phase residuals
// land in [-pi, pi) instead of flapping between the interval ends.
inline double floor_nudged(double y) {
  const double r = std::round(y);
  if (std::abs(y - r) < 1e-12) return std::floor(y + 1e-12);
  return std::floor(y);
}

// Deterministic normal variates: splitmix64 + Box-Muller. The standard
// library distributions are implementation-defined, which would break
// bit-reproducible scenario rendering.
class GaussianRng {
 public:
  explicit GaussianRng(std::uint64_t seed) : state_(seed ? seed : 1) {}

  double uniform() {  // in (0, 1]
    return (static_cast<double>(next_u64() >> 11) + 1.0) * 0x1.0p-53;
  }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  // Uniform integer in [lo, hi].
  std::int64_t uniform_int(std::int64_t lo, std::int64_t hi) {
    const std::uint64_t range = static_cast<std::uint64_t>(hi - lo) + 1;
    return lo + static_cast<std::int64_t>(next_u64() % range);
  }

  double normal() {
    if (have_spare_) {
      have_spare_ = false;
      return spare_;
    }
    const double u1 = uniform();
    const double u2 = uniform();
    const double r = std::sqrt(-2.0 * std::log(u1));
    spare_ = r * std::sin(kTwoPi * u2);
    have_spare_ = true;
    return r * std::cos(kTwoPi * u2);
  }

  cplx complex_normal() {  // circular, unit variance per complex sample
    return cplx(normal(), normal()) / std::sqrt(2.0);
  }

 private:
  // splitmix64; fixed algorithm, fixed sequence for a given seed.
  std::uint64_t next_u64() {
    std::uint64_t z = (state_ += 0x9e3779b97f4a7c15ULL);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  }

  std::uint64_t state_;
  bool have_spare_ = false;
  double spare_ = 0.0;
};

// Stable mixing of a base seed with stream indices, for independent
// per-trial / per-channel substreams.
inline std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t a,
                              std::uint64_t b = 0, std::uint64_t c = 0) {
  auto mix = [](std::uint64_t z) {
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  };
  std::uint64_t h = seed;
  h = mix(h ^ (a + 0x9e3779b97f4a7c15ULL));
  h = mix(h ^ (b + 0x7f4a7c159e3779b9ULL));
  h = mix(h ^ (c + 0x2545f4914f6cdd1dULL));
  return h ? h : 1;
}

}  // namespace srosync

#endif  // SROSYNC_COMMON_HPP
