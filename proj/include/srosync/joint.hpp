// Copyright 2026 srosync authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)
//
// Joint MM estimation of all per-channel SROs. Each outer iteration fixes
// the spatial covariances at the current offsets, then minorizes every
// cosine term of the entry-wise objective by a concave quadratic (the
// sinc bound). Maximizing the resulting auxiliary function under the
// reference constraint eps_0 = 0 is one linear KKT solve per inner step.

#ifndef SROSYNC_JOINT_HPP
#define SROSYNC_JOINT_HPP

#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/SparseCore>

#include "srosync/common.hpp"
#include "srosync/likelihood.hpp"
#include "srosync/signal.hpp"

namespace srosync {

// Parameters of the quadratic minorizer of -alpha*cos(omega*theta + gamma)
// around theta_tilde:
//   -alpha*cos(omega*theta + gamma) >= -lambda*(omega*theta - mu)^2 + nu.
struct CosineBound {
  double lambda = 0.0;
  double mu = 0.0;
};

inline CosineBound cosine_bound_params(cplx upsilon_entry, double omega,
                                       double eps_diff_tilde) {
  const double alpha = std::abs(upsilon_entry);
  const double gamma = std::arg(upsilon_entry);
  const double xi = omega * eps_diff_tilde;
  const double mu =
      kTwoPi * floor_nudged((xi + gamma) / kTwoPi) + kPi - gamma;
  // xi - mu lies in [-pi, pi) up to the deterministic floor nudge, which can
  // push it below -pi by ~1e-11; sinc is then a negative sliver of the same
  // size, so clamp to keep the curvature weight nonnegative.
  const double lambda = std::max(0.0, 0.5 * alpha * sinc(xi - mu));
  return {lambda, mu};
}

// Bound parameters for every (t, f, m, n), materialized. Intended for small
// instances and tests; estimate_joint() recomputes the same quantities on
// the fly instead of storing them.
struct AuxState {
  int num_channels = 0;
  int num_frames = 0;
  int num_bins = 0;
  std::vector<double> omega;               // index t*num_bins + f
  std::vector<Eigen::MatrixXd> xi;         // ditto; diagonal entries zero
  std::vector<Eigen::MatrixXd> lambda;
  std::vector<Eigen::MatrixXd> mu;
};

inline AuxState compute_aux_state(const UpsilonSet& ups,
                                  const SroVector& eps_tilde) {
  eps_tilde.validate();
  if (eps_tilde.size() != ups.num_channels)
    throw InvalidInputError("compute_aux_state: SRO length must match channels");
  const int M = ups.num_channels;
  const std::size_t cells =
      static_cast<std::size_t>(ups.num_frames) * ups.num_bins;

  AuxState aux;
  aux.num_channels = M;
  aux.num_frames = ups.num_frames;
  aux.num_bins = ups.num_bins;
  aux.omega.resize(cells);
  aux.xi.assign(cells, Eigen::MatrixXd::Zero(M, M));
  aux.lambda.assign(cells, Eigen::MatrixXd::Zero(M, M));
  aux.mu.assign(cells, Eigen::MatrixXd::Zero(M, M));

  for (int t = 0; t < ups.num_frames; ++t) {
    for (int f = 0; f < ups.num_bins; ++f) {
      const std::size_t i = static_cast<std::size_t>(t) * ups.num_bins + f;
      const double w = ups.omega(t, f);
      aux.omega[i] = w;
      const Eigen::MatrixXcd& U = ups.at(t, f);
      for (int m = 0; m < M; ++m)
        for (int n = 0; n < M; ++n) {
          if (m == n) continue;  // self-pairs never enter the accumulation
          const double diff = eps_tilde.epsilons[n] - eps_tilde.epsilons[m];
          const CosineBound cb = cosine_bound_params(U(m, n), w, diff);
          aux.xi[i](m, n) = w * diff;
          aux.lambda[i](m, n) = cb.lambda;
          aux.mu[i](m, n) = cb.mu;
        }
    }
  }
  return aux;
}

// The equality-constrained quadratic maximization in matrix form:
//   [[D^T A D, u], [u^T, 0]] [eps; rho] = [D^T b; 0].
// A is diagonal (stored as its diagonal), D maps eps to all ordered pair
// differences eps_n - eps_m at flat index m*M + n, u pins eps_0.
struct KktSystem {
  int num_channels = 0;
  Eigen::VectorXd a_diag;           // M^2, entries >= 0
  Eigen::VectorXd b;                // M^2
  Eigen::SparseMatrix<double> d;    // M^2 x M, rows of self-pairs are zero
  Eigen::VectorXd u;                // M, selects eps_0
};

inline Eigen::SparseMatrix<double> make_difference_matrix(int M) {
  Eigen::SparseMatrix<double> d(M * M, M);
  std::vector<Eigen::Triplet<double>> trips;
  trips.reserve(static_cast<std::size_t>(2 * M * (M - 1)));
  for (int m = 0; m < M; ++m)
    for (int n = 0; n < M; ++n) {
      if (m == n) continue;
      trips.emplace_back(m * M + n, n, 1.0);
      trips.emplace_back(m * M + n, m, -1.0);
    }
  d.setFromTriplets(trips.begin(), trips.end());
  return d;
}

inline KktSystem build_kkt(const AuxState& aux, int num_channels) {
  const int M = num_channels;
  if (M < 2 || aux.num_channels != M)
    throw InvalidInputError("build_kkt: need M >= 2 matching the aux state");
  KktSystem sys;
  sys.num_channels = M;
  sys.a_diag = Eigen::VectorXd::Zero(M * M);
  sys.b = Eigen::VectorXd::Zero(M * M);
  sys.d = make_difference_matrix(M);
  sys.u = Eigen::VectorXd::Zero(M);
  sys.u(0) = 1.0;

  const std::size_t cells = aux.omega.size();
  for (std::size_t i = 0; i < cells; ++i) {
    const double w = aux.omega[i];
    const Eigen::MatrixXd& lam = aux.lambda[i];
    const Eigen::MatrixXd& mu = aux.mu[i];
    for (int m = 0; m < M; ++m)
      for (int n = 0; n < M; ++n) {
        if (m == n) continue;
        const int flat = m * M + n;
        sys.a_diag(flat) += w * w * lam(m, n);
        sys.b(flat) += w * lam(m, n) * mu(m, n);
      }
  }
  return sys;
}

namespace detail {

// Reduced quadratic: H = D^T A D (an M x M Laplacian-like matrix) and
// g = D^T b, assembled directly from the per-pair accumulators.
inline void reduce_kkt(const Eigen::VectorXd& a_diag, const Eigen::VectorXd& b,
                       int M, Eigen::MatrixXd& h, Eigen::VectorXd& g) {
  h = Eigen::MatrixXd::Zero(M, M);
  g = Eigen::VectorXd::Zero(M);
  for (int m = 0; m < M; ++m)
    for (int n = 0; n < M; ++n) {
      if (m == n) continue;
      const int flat = m * M + n;
      const double w = a_diag(flat);
      h(m, m) += w;
      h(n, n) += w;
      h(m, n) -= w;
      h(n, m) -= w;
      g(n) += b(flat);
      g(m) -= b(flat);
    }
}

inline void add_ridge(Eigen::MatrixXd& h) {
  const double ridge = 1e-12 * h.trace();
  h.diagonal().array() += ridge;
}

// Solves [[H, u], [u^T, 0]] [eps; rho] = [g; 0] with u = e_0. The H block
// is pre-scaled by trace(H)/M so the bordered matrix has O(1) entries;
// substituting rho -> rho/s leaves eps unchanged and rho is discarded.
inline Eigen::VectorXd solve_bordered(const Eigen::MatrixXd& h,
                                      const Eigen::VectorXd& g) {
  const int M = static_cast<int>(h.rows());
  double s = h.trace() / M;
  if (!(s > 0.0) || !std::isfinite(s)) s = 1.0;

  Eigen::MatrixXd bordered = Eigen::MatrixXd::Zero(M + 1, M + 1);
  bordered.topLeftCorner(M, M) = h / s;
  bordered(0, M) = 1.0;
  bordered(M, 0) = 1.0;
  Eigen::VectorXd rhs = Eigen::VectorXd::Zero(M + 1);
  rhs.head(M) = g / s;

  Eigen::FullPivLU<Eigen::MatrixXd> lu(bordered);
  if (!lu.isInvertible()) {
    const Eigen::VectorXd piv = lu.matrixLU().diagonal().cwiseAbs();
    std::ostringstream msg;
    msg << "solve_kkt: singular bordered system (rank " << lu.rank() << " of "
        << M + 1 << ", |pivot| range [" << piv.minCoeff() << ", "
        << piv.maxCoeff() << "])";
    throw NumericalError(msg.str());
  }
  Eigen::VectorXd sol = lu.solve(rhs);
  Eigen::VectorXd eps = sol.head(M);
  eps(0) = 0.0;  // constraint holds to fp noise; pin it exactly
  return eps;
}

}  // namespace detail

// Bordered-form solve, the exported path.
inline SroVector solve_kkt(const KktSystem& system) {
  const int M = system.num_channels;
  if (M < 2 || system.a_diag.size() != M * M || system.b.size() != M * M)
    throw InvalidInputError("solve_kkt: malformed system");
  Eigen::MatrixXd h;
  Eigen::VectorXd g;
  detail::reduce_kkt(system.a_diag, system.b, M, h, g);
  detail::add_ridge(h);
  const Eigen::VectorXd eps = detail::solve_bordered(h, g);
  SroVector out{std::vector<double>(eps.data(), eps.data() + M)};
  return out;
}

// Validation path: eliminate eps_0 = 0 and solve the (M-1)-dim system
// directly. Must agree with solve_kkt to ~1e-10.
inline SroVector solve_kkt_eliminated(const KktSystem& system) {
  const int M = system.num_channels;
  if (M < 2 || system.a_diag.size() != M * M || system.b.size() != M * M)
    throw InvalidInputError("solve_kkt_eliminated: malformed system");
  Eigen::MatrixXd h;
  Eigen::VectorXd g;
  detail::reduce_kkt(system.a_diag, system.b, M, h, g);
  detail::add_ridge(h);
  const Eigen::MatrixXd hr = h.bottomRightCorner(M - 1, M - 1);
  Eigen::LDLT<Eigen::MatrixXd> ldlt(hr);
  if (ldlt.info() != Eigen::Success)
    throw NumericalError("solve_kkt_eliminated: reduced system not factorizable");
  const Eigen::VectorXd er = ldlt.solve(g.tail(M - 1));
  std::vector<double> eps(M, 0.0);
  for (int m = 1; m < M; ++m) eps[m] = er(m - 1);
  return SroVector{std::move(eps)};
}

namespace detail {

// One pass over all (t, f) cells accumulating the per-pair KKT sums
//   s2(m,n) = sum omega^2 * lambda,   s1(m,n) = sum omega * lambda * mu
// for m < n, with Upsilon entries formed on the fly from the raw
// coefficients and the fixed loaded inverses. The (n, m) halves mirror
// these exactly (lambda symmetric, mu antisymmetric away from the folding
// boundary), so the caller doubles the contributions.
inline void accumulate_kkt_pairs(const SpectrogramSet& spec,
                                 std::span<const ScmInverse> inverses,
                                 const SroVector& eps_tilde,
                                 Eigen::MatrixXd& s2, Eigen::MatrixXd& s1) {
  const int M = spec.num_channels();
  const int T = spec.num_frames();
  const int B = spec.num_bins();
  s2.setZero(M, M);
  s1.setZero(M, M);

  Eigen::MatrixXd diff = Eigen::MatrixXd::Zero(M, M);
  for (int m = 0; m < M; ++m)
    for (int n = 0; n < M; ++n)
      diff(m, n) = eps_tilde.epsilons[n] - eps_tilde.epsilons[m];

  std::vector<const cplx*> rows(M);
  for (int t = 0; t < T; ++t) {
    for (int m = 0; m < M; ++m) rows[m] = spec.bins(m, t).data();
    const double wt = kTwoPi * spec.config().shift * static_cast<double>(t) /
                      spec.config().dft_size;
    for (int f = 1; f < B; ++f) {  // f = 0 has omega = 0: no contribution
      const double w = wt * f;
      const Eigen::MatrixXcd& inv = inverses[f].inverse;
      for (int m = 0; m < M; ++m) {
        const cplx xm_conj = std::conj(rows[m][f]);
        for (int n = m + 1; n < M; ++n) {
          const cplx ups = xm_conj * inv(m, n) * rows[n][f];
          const CosineBound cb = cosine_bound_params(ups, w, diff(m, n));
          s2(m, n) += w * w * cb.lambda;
          s1(m, n) += w * cb.lambda * cb.mu;
        }
      }
    }
  }
}

}  // namespace detail

struct JointResult {
  SroVector sro;
  std::vector<double> likelihood_trace;  // length iterations + 1
  int iterations = 0;
  bool converged = false;
};

// Concentrated log-likelihood at the current offsets given the freshly
// updated SCMs: sum_f T * (-log det V~[f] - tr(V~^-1[f] V[f])).
namespace detail {
inline double concentrated_value(const ScmSet& scms,
                                 std::span<const ScmInverse> inverses,
                                 int num_frames) {
  double acc = 0.0;
  for (int f = 0; f < scms.num_bins(); ++f)
    acc += -inverses[f].log_det -
           std::real((inverses[f].inverse * scms.matrices[f]).trace());
  return num_frames * acc;
}
}  // namespace detail

// Algorithm: K outer iterations of (SCM update at the current offsets,
// then K' minorize-maximize steps on the entry-wise objective with those
// covariances fixed). Stops early once no offset moves by stop_tol.
inline JointResult estimate_joint(const SpectrogramSet& spec,
                                  const SroVector& init, int outer_iters = 30,
                                  int inner_iters = 1, double stop_tol = 1e-8,
                                  double delta = 1e-6) {
  init.validate();
  if (init.size() != spec.num_channels())
    throw InvalidInputError("estimate_joint: init length must match channels");
  if (spec.num_channels() < 2)
    throw InvalidInputError("estimate_joint: need at least two channels");
  if (outer_iters < 1 || inner_iters < 1)
    throw InvalidInputError("estimate_joint: iteration counts must be >= 1");

  const int M = spec.num_channels();
  JointResult res;
  res.sro = init;

  Eigen::MatrixXd s2, s1, h;
  Eigen::VectorXd g;
  for (int k = 0; k < outer_iters; ++k) {
    const ScmSet scms = update_scm(spec, res.sro);
    const std::vector<ScmInverse> inv = regularized_inverses(scms, delta);
    res.likelihood_trace.push_back(
        detail::concentrated_value(scms, inv, spec.num_frames()));

    const SroVector prev = res.sro;
    for (int kp = 0; kp < inner_iters; ++kp) {
      detail::accumulate_kkt_pairs(spec, inv, res.sro, s2, s1);
      h.setZero(M, M);
      g.setZero(M);
      for (int m = 0; m < M; ++m)
        for (int n = m + 1; n < M; ++n) {
          const double w = 2.0 * s2(m, n);  // ordered pairs (m,n) and (n,m)
          h(m, m) += w;
          h(n, n) += w;
          h(m, n) -= w;
          h(n, m) -= w;
          const double v = 2.0 * s1(m, n);
          g(n) += v;
          g(m) -= v;
        }
      detail::add_ridge(h);
      const Eigen::VectorXd eps = detail::solve_bordered(h, g);

      bool ok = true;
      for (int m = 0; m < M; ++m)
        if (!std::isfinite(eps(m)) || std::abs(eps(m)) >= kMaxAbsSro) ok = false;
      if (!ok) {
        std::ostringstream msg;
        msg << "estimate_joint: update left the SRO domain at outer iteration "
            << k + 1 << ", inner step " << kp + 1 << "; eps =";
        for (int m = 0; m < M; ++m) msg << " " << eps(m);
        throw NumericalError(msg.str());
      }
      for (int m = 0; m < M; ++m) res.sro.epsilons[m] = eps(m);
    }

    res.iterations = k + 1;
    double max_delta = 0.0;
    for (int m = 0; m < M; ++m)
      max_delta = std::max(
          max_delta, std::abs(res.sro.epsilons[m] - prev.epsilons[m]));
    if (max_delta < stop_tol) {
      res.converged = true;
      break;
    }
  }

  const ScmSet scms = update_scm(spec, res.sro);
  const std::vector<ScmInverse> inv = regularized_inverses(scms, delta);
  res.likelihood_trace.push_back(
      detail::concentrated_value(scms, inv, spec.num_frames()));
  return res;
}

}  // namespace srosync

#endif  // SROSYNC_JOINT_HPP
