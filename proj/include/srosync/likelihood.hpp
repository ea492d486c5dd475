// Copyright 2026 srosync authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)
//
// Gaussian model of the synchronized multichannel signal. The compensated
// STFT vectors x_hat[t,f] are modeled as zero-mean complex Gaussian with a
// per-bin spatial covariance V[f]; everything here evaluates or maximizes
// that likelihood for fixed SROs.

#ifndef SROSYNC_LIKELIHOOD_HPP
#define SROSYNC_LIKELIHOOD_HPP

#include <string>
#include <utility>
#include <vector>

#include <Eigen/Cholesky>
#include <Eigen/Dense>

#include "srosync/common.hpp"
#include "srosync/signal.hpp"

namespace srosync {

// Per-channel offsets; channel 0 is the reference and is pinned to zero.
struct SroVector {
  std::vector<double> epsilons;

  static SroVector zeros(int num_channels) {
    return SroVector{std::vector<double>(num_channels, 0.0)};
  }
  static SroVector from_ppm(std::vector<double> ppm) {
    for (double& v : ppm) v *= 1e-6;
    return SroVector{std::move(ppm)};
  }
  std::vector<double> to_ppm() const {
    std::vector<double> out = epsilons;
    for (double& v : out) v *= 1e6;
    return out;
  }
  int size() const { return static_cast<int>(epsilons.size()); }

  void validate() const {
    if (epsilons.empty() || epsilons[0] != 0.0)
      throw InvalidInputError("SroVector: reference offset epsilon_0 must be exactly 0");
    for (double e : epsilons)
      if (!std::isfinite(e) || std::abs(e) >= kMaxAbsSro)
        throw InvalidInputError("SroVector: offsets must be finite and |eps| < 0.01");
  }
};

// Per-bin Hermitian PSD spatial covariance matrices.
struct ScmSet {
  std::vector<Eigen::MatrixXcd> matrices;

  int num_bins() const { return static_cast<int>(matrices.size()); }
  int num_channels() const {
    return matrices.empty() ? 0 : static_cast<int>(matrices[0].rows());
  }
};

inline SpectrogramSet compensate_lpd_multi(const SpectrogramSet& spec,
                                           const SroVector& sro) {
  sro.validate();
  return compensate_lpd(spec, std::span<const double>(sro.epsilons));
}

// Maximum-likelihood SCM update for fixed SROs:
//   V[f] = (1/T) sum_t x_hat[t,f] x_hat^H[t,f].
inline ScmSet update_scm(const SpectrogramSet& spec, const SroVector& sro) {
  if (sro.size() != spec.num_channels())
    throw InvalidInputError("update_scm: SRO length must match channel count");
  if (spec.num_frames() < 1) throw InvalidInputError("update_scm: need T >= 1");

  const int M = spec.num_channels();
  const int T = spec.num_frames();
  const int B = spec.num_bins();
  const SpectrogramSet comp = compensate_lpd_multi(spec, sro);

  ScmSet out;
  out.matrices.assign(B, Eigen::MatrixXcd::Zero(M, M));
  std::vector<const cplx*> rows(M);
  for (int t = 0; t < T; ++t) {
    for (int m = 0; m < M; ++m) rows[m] = comp.bins(m, t).data();
    for (int f = 0; f < B; ++f) {
      Eigen::MatrixXcd& V = out.matrices[f];
      for (int m = 0; m < M; ++m) {
        const cplx xm = rows[m][f];
        V(m, m) += cplx(std::norm(xm), 0.0);
        for (int n = m + 1; n < M; ++n) V(m, n) += xm * std::conj(rows[n][f]);
      }
    }
  }
  const double inv_t = 1.0 / T;
  for (Eigen::MatrixXcd& V : out.matrices) {
    for (int m = 0; m < V.rows(); ++m)
      for (int n = m + 1; n < V.cols(); ++n) V(n, m) = std::conj(V(m, n));
    V *= inv_t;
  }
  return out;
}

// Factorization of a diagonally loaded SCM: inverse and log-determinant of
// V + loading*I with loading = delta*trace(V)/M. On an indefinite or
// singular factorization the loading is escalated tenfold up to 1e-2.
struct ScmInverse {
  Eigen::MatrixXcd inverse;
  double log_det = 0.0;
  double loading = 0.0;
};

inline ScmInverse regularized_inverse(const Eigen::MatrixXcd& scm, double delta,
                                      int bin_index) {
  const int M = static_cast<int>(scm.rows());
  const double scale = scm.trace().real() / M;
  for (double d = delta; d <= 1e-2 * 1.0000001; d *= 10.0) {
    Eigen::MatrixXcd loaded = scm;
    const double c = d * scale;
    loaded.diagonal().array() += c;
    Eigen::LDLT<Eigen::MatrixXcd> ldlt(loaded);
    if (ldlt.info() != Eigen::Success) continue;
    const Eigen::VectorXd diag = ldlt.vectorD().real();
    if ((diag.array() <= 0.0).any()) continue;
    ScmInverse out;
    out.inverse = ldlt.solve(Eigen::MatrixXcd::Identity(M, M));
    out.inverse = 0.5 * (out.inverse + out.inverse.adjoint()).eval();
    out.log_det = diag.array().log().sum();
    out.loading = c;
    return out;
  }
  throw NumericalError("regularized_inverse: SCM singular after diagonal loading at bin " +
                       std::to_string(bin_index));
}

inline std::vector<ScmInverse> regularized_inverses(const ScmSet& scms,
                                                    double delta = 1e-6) {
  std::vector<ScmInverse> out;
  out.reserve(scms.matrices.size());
  for (std::size_t f = 0; f < scms.matrices.size(); ++f)
    out.push_back(regularized_inverse(scms.matrices[f], delta, static_cast<int>(f)));
  return out;
}

// J(eps) for fixed per-bin Hermitian weights B[f]:
//   -sum_{t,f} x_hat^H[t,f] B[f] x_hat[t,f].
// This is the SRO-dependent part of the log-likelihood when B[f] = V^-1[f].
inline double quadratic_objective(const SpectrogramSet& spec,
                                  std::span<const ScmInverse> inverses,
                                  const SroVector& sro) {
  sro.validate();
  const int M = spec.num_channels();
  const int T = spec.num_frames();
  const int B = spec.num_bins();
  if (static_cast<int>(inverses.size()) != B)
    throw InvalidInputError("quadratic_objective: inverse count must match bins");

  SpectrogramSet comp = compensate_lpd_multi(spec, sro);
  double acc = 0.0;
  std::vector<const cplx*> rows(M);
  for (int t = 0; t < T; ++t) {
    for (int m = 0; m < M; ++m) rows[m] = comp.bins(m, t).data();
    for (int f = 0; f < B; ++f) {
      const Eigen::MatrixXcd& W = inverses[f].inverse;
      // Hermitian quadratic form x^H W x, real by construction.
      double q = 0.0;
      for (int m = 0; m < M; ++m) {
        const cplx xm = rows[m][f];
        q += std::norm(xm) * W(m, m).real();
        for (int n = m + 1; n < M; ++n)
          q += 2.0 * std::real(std::conj(xm) * W(m, n) * rows[n][f]);
      }
      acc += q;
    }
  }
  return -acc;
}

// Joint log-likelihood (additive Gaussian constant omitted):
//   sum_f sum_t [ -log det V[f] - x_hat^H V^-1[f] x_hat ].
inline double log_likelihood(const SpectrogramSet& spec, const SroVector& sro,
                             const ScmSet& scms, double delta = 1e-6) {
  if (scms.num_bins() != spec.num_bins() ||
      scms.num_channels() != spec.num_channels())
    throw InvalidInputError("log_likelihood: SCM geometry must match spectrogram");
  const std::vector<ScmInverse> inv = regularized_inverses(scms, delta);
  double log_dets = 0.0;
  for (const ScmInverse& s : inv) log_dets += s.log_det;
  return -spec.num_frames() * log_dets + quadratic_objective(spec, inv, sro);
}

// Log-likelihood with the SCMs concentrated out (V = ML SCM at this sro).
// Uses sum_t x^H B x = T * tr(B * V_hat) to avoid a second data pass.
inline double concentrated_log_likelihood(const SpectrogramSet& spec,
                                          const SroVector& sro,
                                          double delta = 1e-6) {
  const ScmSet scms = update_scm(spec, sro);
  double acc = 0.0;
  for (int f = 0; f < scms.num_bins(); ++f) {
    const ScmInverse inv = regularized_inverse(scms.matrices[f], delta, f);
    acc += -inv.log_det - std::real((inv.inverse * scms.matrices[f]).trace());
  }
  return spec.num_frames() * acc;
}

// Upsilon[t,f] = diag(x[t,f])^H V^-1[f] diag(x[t,f]), built from the raw
// (uncompensated) coefficients. Materializes T*B dense matrices, so this
// is meant for small instances and diagnostics; the optimizer streams the
// same entries without storing them.
struct UpsilonSet {
  int num_channels = 0;
  int num_frames = 0;
  int num_bins = 0;
  int shift = 0;     // STFT hop a, for omega()
  int dft_size = 0;  // DFT length F, for omega()
  std::vector<Eigen::MatrixXcd> matrices;  // index t*num_bins + f

  const Eigen::MatrixXcd& at(int t, int f) const {
    return matrices[static_cast<std::size_t>(t) * num_bins + f];
  }
  // omega[t,f] = 2*pi*a*t*f/F: phase advance per unit SRO at this cell.
  double omega(int t, int f) const {
    return kTwoPi * shift * static_cast<double>(t) * f / dft_size;
  }
};

inline Eigen::MatrixXcd upsilon_entry_matrix(const Eigen::MatrixXcd& inv,
                                             const Eigen::VectorXcd& x) {
  const int M = static_cast<int>(x.size());
  Eigen::MatrixXcd U(M, M);
  for (int m = 0; m < M; ++m) {
    U(m, m) = cplx(std::norm(x(m)) * inv(m, m).real(), 0.0);
    for (int n = m + 1; n < M; ++n) {
      U(m, n) = std::conj(x(m)) * inv(m, n) * x(n);
      U(n, m) = std::conj(U(m, n));
    }
  }
  return U;
}

inline UpsilonSet compute_upsilon(const SpectrogramSet& spec, const ScmSet& scms,
                                  double delta = 1e-6) {
  if (scms.num_bins() != spec.num_bins() ||
      scms.num_channels() != spec.num_channels())
    throw InvalidInputError("compute_upsilon: SCM geometry must match spectrogram");
  const std::vector<ScmInverse> inv = regularized_inverses(scms, delta);
  const int M = spec.num_channels();
  const int T = spec.num_frames();
  const int B = spec.num_bins();

  UpsilonSet out;
  out.num_channels = M;
  out.num_frames = T;
  out.num_bins = B;
  out.shift = spec.config().shift;
  out.dft_size = spec.config().dft_size;
  out.matrices.reserve(static_cast<std::size_t>(T) * B);
  Eigen::VectorXcd x(M);
  for (int t = 0; t < T; ++t) {
    for (int f = 0; f < B; ++f) {
      for (int m = 0; m < M; ++m) x(m) = spec.at(m, t, f);
      out.matrices.push_back(upsilon_entry_matrix(inv[f].inverse, x));
    }
  }
  return out;
}

struct ClampStats {
  int clamped_bins = 0;
};

// Two-channel maximum-likelihood objective in the lone offset eps:
//   I(eps) = -sum_f log( sum_t|x0|^2 * sum_t|x1|^2 - |sum_t w(x0) x1_hat|^2 )
// where x1_hat is x1 compensated by eps. With w = conj (the default) the
// bilinear term is the coherence numerator, the Cauchy-Schwarz bound holds,
// and the objective equals the concentrated two-channel Gaussian likelihood
// up to scale. conjugate_reference=false keeps the plain product x0*x1_hat;
// both variants are kept because published formulations differ here.
class PairwiseObjective {
 public:
  PairwiseObjective(const SpectrogramSet& ref, const SpectrogramSet& other,
                    bool conjugate_reference = true)
      : conjugate_(conjugate_reference) {
    if (ref.num_channels() != 1 || other.num_channels() != 1)
      throw InvalidInputError("PairwiseObjective: expects single-channel spectrograms");
    if (ref.num_frames() != other.num_frames() ||
        ref.num_bins() != other.num_bins() || !(ref.config() == other.config()))
      throw InvalidInputError("PairwiseObjective: spectrogram geometry mismatch");
    num_frames_ = ref.num_frames();
    num_bins_ = ref.num_bins();
    shift_ = ref.config().shift;
    dft_size_ = ref.config().dft_size;
    x0_.assign(ref.raw().begin(), ref.raw().end());
    x1_.assign(other.raw().begin(), other.raw().end());
    e0_.assign(num_bins_, 0.0);
    e1_.assign(num_bins_, 0.0);
    for (int t = 0; t < num_frames_; ++t) {
      const cplx* r0 = &x0_[static_cast<std::size_t>(t) * num_bins_];
      const cplx* r1 = &x1_[static_cast<std::size_t>(t) * num_bins_];
      for (int f = 0; f < num_bins_; ++f) {
        e0_[f] += r0[f].real() * r0[f].real() + r0[f].imag() * r0[f].imag();
        e1_[f] += r1[f].real() * r1[f].real() + r1[f].imag() * r1[f].imag();
      }
    }
  }

  double operator()(double epsilon, ClampStats* stats = nullptr) const {
    if (!std::isfinite(epsilon) || std::abs(epsilon) >= kMaxAbsSro)
      throw InvalidInputError("PairwiseObjective: |epsilon| must be finite and < 0.01");
    std::vector<cplx> c(num_bins_, cplx(0.0, 0.0));
    for (int t = 0; t < num_frames_; ++t) {
      const cplx* r0 = &x0_[static_cast<std::size_t>(t) * num_bins_];
      const cplx* r1 = &x1_[static_cast<std::size_t>(t) * num_bins_];
      const double step = kTwoPi * shift_ * t * epsilon / dft_size_;
      // rotate x1 by the frame's phase ramp with a per-bin phasor recurrence
      cplx p(1.0, 0.0);
      const cplx inc = (epsilon == 0.0) ? cplx(1.0, 0.0) : std::polar(1.0, step);
      for (int f = 0; f < num_bins_; ++f) {
        const double x1r = r1[f].real() * p.real() - r1[f].imag() * p.imag();
        const double x1i = r1[f].real() * p.imag() + r1[f].imag() * p.real();
        const double w0r = r0[f].real();
        const double w0i = conjugate_ ? r0[f].imag() : -r0[f].imag();
        c[f] += cplx(w0r * x1r + w0i * x1i, w0r * x1i - w0i * x1r);
        p *= inc;
      }
    }
    double obj = 0.0;
    int clamped = 0;
    for (int f = 0; f < num_bins_; ++f) {
      double arg = e0_[f] * e1_[f] -
                   (c[f].real() * c[f].real() + c[f].imag() * c[f].imag());
      if (arg <= 0.0) {
        arg = 1e-300;
        ++clamped;
      }
      obj -= std::log(arg);
    }
    if (stats) stats->clamped_bins += clamped;
    return obj;
  }

  int num_bins() const { return num_bins_; }

 private:
  bool conjugate_;
  int num_frames_ = 0;
  int num_bins_ = 0;
  int shift_ = 0;
  int dft_size_ = 0;
  std::vector<cplx> x0_, x1_;
  std::vector<double> e0_, e1_;
};

inline double pairwise_objective(const SpectrogramSet& ref,
                                 const SpectrogramSet& other, double epsilon,
                                 bool conjugate_reference = true,
                                 ClampStats* stats = nullptr) {
  return PairwiseObjective(ref, other, conjugate_reference)(epsilon, stats);
}

}  // namespace srosync

#endif  // SROSYNC_LIKELIHOOD_HPP
