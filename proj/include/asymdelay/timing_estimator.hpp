#pragma once

#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <span>
#include <vector>

#include "asymdelay/photon_sim.hpp"

namespace asymdelay {

/// Coincidence counts of (t_b - t_a - window_center) over
/// [-halfwidth, -halfwidth + bins * bin_width).
struct CorrelationHistogram {
  double bin_width_ps = 4.0;
  std::int64_t window_center_ps = 0;
  std::int64_t window_halfwidth_ps = 2000;
  std::vector<std::uint64_t> counts;

  double lower_edge_ps(std::size_t k) const;
  /// Mean of the integer lags bin k can hold (the bin midpoint if it holds none).
  double bin_value_ps(std::size_t k) const;
  std::uint64_t total() const;
};

struct HistogramParams {
  double bin_width_ps = 4.0;
  std::int64_t window_halfwidth_ps = 2000;
};

struct PeakEstimate {
  double tau_ps = 0.0;
  double uncertainty_ps = 0.0;
  std::uint64_t peak_counts = 0;
  double background_per_bin = 0.0;
};

CorrelationHistogram build_histogram(std::span<const std::int64_t> a,
                                     std::span<const std::int64_t> b, double bin_width_ps,
                                     std::int64_t window_center_ps,
                                     std::int64_t window_halfwidth_ps);

/// Background-subtracted centroid of the contiguous region around the
/// maximum bin. Throws NoPeakError when nothing clears background + 3 sqrt(background).
PeakEstimate estimate_peak(const CorrelationHistogram& h);

double clock_difference(double tau_ab_ps, double tau_aba_ps);

struct ClockDifferencePoint {
  static constexpr double kGap = std::numeric_limits<double>::quiet_NaN();

  double epoch_start_s = 0.0;
  double tau_ab_ps = kGap;
  double tau_aba_ps = kGap;
  double delta_ps = kGap;
  double delta_uncertainty_ps = kGap;

  bool is_gap() const { return std::isnan(delta_ps); }
  static ClockDifferencePoint gap(double epoch_start_s) { return {epoch_start_s}; }
};

struct ClockDifferenceSeries {
  double epoch_length_s = 1.0;
  std::vector<ClockDifferencePoint> points;

  std::size_t gap_count() const;
  double gap_fraction() const;
  /// delta values of the non-gap points, in order.
  std::vector<double> deltas() const;
  std::vector<double> loopback_taus() const;
  std::vector<double> epoch_starts() const;
};

/// Correlation window centres for the forward (IdlerA x SignalB) and
/// loopback (IdlerA x ReturnA) histograms.
struct AcquiredCenters {
  std::int64_t forward_ps = 0;
  std::int64_t loopback_ps = 0;
};

/// Sorted timestamp views per detector.
struct DetectorTimes {
  std::span<const std::int64_t> idler_a;
  std::span<const std::int64_t> signal_b;
  std::span<const std::int64_t> return_a;

  static DetectorTimes of(const DetectorTracks& tracks);
};

struct AcquisitionParams {
  double nominal_one_way_ps = 4.9e7;
  double span_s = 1.0;  // idler records used for the search: [0, span)
  double coarse_bin_ps = 1000.0;
};

/// Two-stage search: 1 ns bins over +-2x the nominal delay, then a fine
/// histogram around the coarse maximum. Throws AcquisitionError.
AcquiredCenters coarse_acquire(const DetectorTimes& times, const AcquisitionParams& params,
                               const HistogramParams& fine = {});
AcquiredCenters coarse_acquire(const TimestampStream& stream, const AcquisitionParams& params,
                               const HistogramParams& fine = {});

/// One clock-difference sample from the idlers detected in
/// [epoch_start, epoch_start + epoch_length). Failed peaks yield a gap.
ClockDifferencePoint estimate_epoch(const DetectorTimes& times, double epoch_start_s,
                                    double epoch_length_s, const AcquiredCenters& centers,
                                    const HistogramParams& params);

/// Throws EmptySeriesError when no epoch yields a sample.
ClockDifferenceSeries per_epoch_series(const TimestampStream& stream, double epoch_length_s,
                                       const HistogramParams& params,
                                       const AcquisitionParams& acquisition,
                                       std::optional<AcquiredCenters> centers = std::nullopt);

/// Number of whole epochs in a run.
std::size_t epoch_count(double duration_s, double epoch_length_s);

}  // namespace asymdelay
