#include "asymdelay/stability.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "asymdelay/errors.hpp"

namespace asymdelay {

namespace {

// Sliding-window evaluation: with d_j = x_{j+2m} - 2 x_{j+m} + x_j the inner
// sum S_i = d_i + ... + d_{i+m-1} updates in O(1) per i. Extended precision
// keeps the running sum from drifting over long series.
double tdev_at(std::span<const double> x, int m) {
  const std::size_t n = x.size();
  const auto mm = static_cast<std::size_t>(m);
  const std::size_t terms = n - 3 * mm + 1;
  const double origin = x[0];
  auto d = [&](std::size_t j) {
    return static_cast<long double>(x[j + 2 * mm] - origin) -
           2.0L * static_cast<long double>(x[j + mm] - origin) +
           static_cast<long double>(x[j] - origin);
  };

  long double window = 0.0L;
  for (std::size_t j = 0; j < mm; ++j) window += d(j);
  long double total = window * window;
  for (std::size_t i = 1; i < terms; ++i) {
    window += d(i + mm - 1) - d(i - 1);
    total += window * window;
  }
  const long double denom =
      6.0L * static_cast<long double>(m) * static_cast<long double>(m) * static_cast<long double>(terms);
  return static_cast<double>(std::sqrt(total / denom));
}

}  // namespace

const TdevPoint& TdevCurve::nearest(double tau_s) const {
  if (points.empty()) throw DomainError("empty TDEV curve");
  return *std::min_element(points.begin(), points.end(), [tau_s](const auto& a, const auto& b) {
    return std::abs(a.tau_s - tau_s) < std::abs(b.tau_s - tau_s);
  });
}

TdevCurve tdev(std::span<const double> phase_ps, double tau0_s, std::span<const int> m_values) {
  const std::size_t n = phase_ps.size();
  if (n < 4) throw DomainError("tdev: need at least 4 samples, got " + std::to_string(n));
  if (!(tau0_s > 0.0)) throw DomainError("tdev: tau0_s must be > 0");
  if (std::any_of(phase_ps.begin(), phase_ps.end(), [](double v) { return std::isnan(v); })) {
    throw GapError("tdev: series contains gaps");
  }
  const int max_m = static_cast<int>((n - 1) / 3);
  TdevCurve curve;
  curve.tau0_s = tau0_s;
  int previous = 0;
  for (const int m : m_values) {
    if (m < 1 || m > max_m) {
      throw DomainError("tdev: m=" + std::to_string(m) + " outside [1, " + std::to_string(max_m) + "]");
    }
    if (m <= previous) throw DomainError("tdev: m values must be strictly ascending");
    previous = m;
    curve.points.push_back({m, m * tau0_s, tdev_at(phase_ps, m), n - 3 * static_cast<std::size_t>(m) + 1});
  }
  return curve;
}

TdevCurve tdev(const ClockDifferenceSeries& series, std::span<const int> m_values) {
  if (series.gap_count() > 0) throw GapError("tdev: series contains gaps");
  const auto x = series.deltas();
  return tdev(x, series.epoch_length_s, m_values);
}

std::vector<int> default_m_grid(std::size_t n) {
  if (n < 4) throw DomainError("default_m_grid: need N >= 4");
  const auto max_m = static_cast<int>((n - 1) / 3);
  std::vector<int> grid;
  for (int m = 1; m <= max_m; m *= 2) grid.push_back(m);
  return grid;
}

double estimate_step_shift(const ClockDifferenceSeries& series, double split_time_s) {
  double before = 0.0;
  double after = 0.0;
  std::size_t n_before = 0;
  std::size_t n_after = 0;
  for (const auto& p : series.points) {
    if (p.is_gap()) continue;
    if (p.epoch_start_s < split_time_s) {
      before += p.delta_ps;
      ++n_before;
    } else {
      after += p.delta_ps;
      ++n_after;
    }
  }
  if (n_before < 10 || n_after < 10) {
    throw DomainError("estimate_step_shift: need >= 10 points on each side of the split");
  }
  return after / static_cast<double>(n_after) - before / static_cast<double>(n_before);
}

}  // namespace asymdelay
