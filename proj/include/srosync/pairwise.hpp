// Copyright 2026 srosync authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)
//
// Pairwise SRO estimation against the reference channel: coarse grid
// search over the two-channel objective, golden-section refinement, and
// a driver that assembles a full SroVector one pair at a time. Also used
// to initialize the joint optimizer.

#ifndef SROSYNC_PAIRWISE_HPP
#define SROSYNC_PAIRWISE_HPP

#include <array>
#include <functional>
#include <string>
#include <utility>
#include <vector>

#include "srosync/common.hpp"
#include "srosync/joint.hpp"
#include "srosync/likelihood.hpp"
#include "srosync/signal.hpp"

namespace srosync {

struct GridSearchResult {
  double epsilon = 0.0;          // argmax (ties: lowest index)
  std::vector<double> grid;      // evaluated offsets, ascending
  std::vector<double> values;    // objective at each grid point
};

namespace detail {

template <class F>
GridSearchResult grid_search_over(F&& objective, double range_ppm,
                                  int num_grids) {
  if (num_grids < 2)
    throw InvalidInputError("grid_search_init: need at least two grid points");
  if (!(range_ppm > 0.0))
    throw InvalidInputError("grid_search_init: range must be positive");
  GridSearchResult res;
  res.grid.resize(num_grids);
  res.values.resize(num_grids);
  const double lo = -range_ppm * 1e-6;
  const double step = 2.0 * range_ppm * 1e-6 / (num_grids - 1);
  int best = 0;
  for (int i = 0; i < num_grids; ++i) {
    res.grid[i] = lo + step * i;
    res.values[i] = objective(res.grid[i]);
    if (res.values[i] > res.values[best]) best = i;  // strict: ties keep lowest
  }
  res.epsilon = res.grid[best];
  return res;
}

}  // namespace detail

// Inclusive uniform grid over [-range_ppm, +range_ppm] with num_grids
// points; returns the argmax and the full value trace.
inline GridSearchResult grid_search_init(const SpectrogramSet& spec_ref,
                                         const SpectrogramSet& spec_other,
                                         double range_ppm = 100.0,
                                         int num_grids = 100,
                                         bool conjugate_reference = true) {
  const PairwiseObjective obj(spec_ref, spec_other, conjugate_reference);
  return detail::grid_search_over([&](double e) { return obj(e); }, range_ppm,
                                  num_grids);
}

struct GoldenSectionResult {
  double x = 0.0;       // best evaluated point
  double value = 0.0;   // objective there
  int evaluations = 0;
  bool capped = false;  // iteration cap hit before the bracket shrank to tol
};

// Golden-section maximization on [lo, hi]. Assumes local unimodality; on a
// monotone objective it converges to the better endpoint. Hard cap of 200
// shrink steps; if hit, the best point seen so far is returned and flagged.
template <class F>
GoldenSectionResult golden_section(F&& f, double lo, double hi, double tol) {
  if (!(lo < hi)) throw InvalidInputError("golden_section: need lo < hi");
  if (!(tol > 0.0)) throw InvalidInputError("golden_section: need tol > 0");
  constexpr double kInvPhi = 0.6180339887498949;  // (sqrt(5)-1)/2

  GoldenSectionResult res;
  double a = lo, b = hi;
  double c = b - kInvPhi * (b - a);
  double d = a + kInvPhi * (b - a);
  double fc = f(c), fd = f(d);
  res.evaluations = 2;
  res.x = fc >= fd ? c : d;
  res.value = fc >= fd ? fc : fd;

  int iters = 0;
  while (b - a > tol) {
    if (++iters > 200) {
      res.capped = true;
      return res;
    }
    if (fc >= fd) {
      b = d;
      d = c;
      fd = fc;
      c = b - kInvPhi * (b - a);
      fc = f(c);
    } else {
      a = c;
      c = d;
      fc = fd;
      d = a + kInvPhi * (b - a);
      fd = f(d);
    }
    ++res.evaluations;
    const double x = fc >= fd ? c : d;
    const double v = fc >= fd ? fc : fd;
    if (v > res.value) {
      res.value = v;
      res.x = x;
    }
  }
  return res;
}

enum class PairMethod { gss, mm };

inline const char* to_string(PairMethod m) {
  return m == PairMethod::gss ? "pair-gss" : "pair-mm";
}

// Estimates every non-reference offset from channels (0, m) alone: coarse
// grid, then golden-section on the two-channel objective (gss) or the MM
// optimizer restricted to the pair (mm).
inline SroVector estimate_pairwise(const SpectrogramSet& spec,
                                   PairMethod method, double range_ppm = 100.0,
                                   int num_grids = 100,
                                   double gss_tol_ppm = 0.001,
                                   bool conjugate_reference = true) {
  if (spec.num_channels() < 2)
    throw InvalidInputError("estimate_pairwise: need at least two channels");
  const int M = spec.num_channels();
  const SpectrogramSet ref = spec.select_channels(std::array<int, 1>{0});

  SroVector out = SroVector::zeros(M);
  for (int m = 1; m < M; ++m) {
    try {
      const SpectrogramSet other = spec.select_channels(std::array<int, 1>{m});
      if (method == PairMethod::gss) {
        const PairwiseObjective obj(ref, other, conjugate_reference);
        const GridSearchResult grid = detail::grid_search_over(
            [&](double e) { return obj(e); }, range_ppm, num_grids);
        const double step = 2.0 * range_ppm * 1e-6 / (num_grids - 1);
        const double lo = std::max(grid.epsilon - step, -kMaxAbsSro + 1e-9);
        const double hi = std::min(grid.epsilon + step, kMaxAbsSro - 1e-9);
        out.epsilons[m] =
            golden_section([&](double e) { return obj(e); }, lo, hi,
                           gss_tol_ppm * 1e-6)
                .x;
      } else {
        const SpectrogramSet pair =
            spec.select_channels(std::array<int, 2>{0, m});
        const GridSearchResult grid =
            grid_search_init(ref, other, range_ppm, num_grids,
                             conjugate_reference);
        SroVector init = SroVector::zeros(2);
        init.epsilons[1] = grid.epsilon;
        out.epsilons[m] = estimate_joint(pair, init).sro.epsilons[1];
      }
    } catch (const NumericalError& e) {
      throw NumericalError("channel " + std::to_string(m) + ": " + e.what());
    }
  }
  return out;
}

}  // namespace srosync

#endif  // SROSYNC_PAIRWISE_HPP
