#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "asymdelay/timing_estimator.hpp"

namespace asymdelay {

struct TdevPoint {
  int m = 1;
  double tau_s = 0.0;
  double tdev_ps = 0.0;
  std::size_t n_terms = 0;  // N - 3m + 1
};

struct TdevCurve {
  double tau0_s = 1.0;
  std::vector<TdevPoint> points;

  /// Point whose tau is closest to `tau_s` (ties resolve to the smaller tau).
  const TdevPoint& nearest(double tau_s) const;
};

/**
 * Time deviation of evenly spaced phase samples x_1..x_N (ps) taken every tau0_s:
 *
 *   TDEV^2(m tau0) = 1 / (6 m^2 (N - 3m + 1))
 *                    * sum_{i=1}^{N-3m+1} [ sum_{j=i}^{i+m-1} (x_{j+2m} - 2 x_{j+m} + x_j) ]^2
 *
 * Requires N >= 4 and 1 <= m <= floor((N - 1) / 3) for every requested m.
 * NaN samples are treated as gaps and rejected with GapError.
 */
TdevCurve tdev(std::span<const double> phase_ps, double tau0_s, std::span<const int> m_values);

/// TDEV over the delta values of a gap-free series.
TdevCurve tdev(const ClockDifferenceSeries& series, std::span<const int> m_values);

/// Octave grid 1, 2, 4, ... up to floor((N - 1) / 3).
std::vector<int> default_m_grid(std::size_t n);

/// mean(delta after split) - mean(delta before split); gap epochs are skipped.
double estimate_step_shift(const ClockDifferenceSeries& series, double split_time_s);

}  // namespace asymdelay
