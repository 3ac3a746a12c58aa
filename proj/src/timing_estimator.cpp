#include "asymdelay/timing_estimator.hpp"

#include <algorithm>
#include <numeric>
#include <string>

#include "asymdelay/errors.hpp"

namespace asymdelay {

namespace {

constexpr double kPsPerS = 1e12;

std::span<const std::int64_t> slice(std::span<const std::int64_t> sorted, std::int64_t from,
                                    std::int64_t to) {
  const auto first = std::lower_bound(sorted.begin(), sorted.end(), from);
  const auto last = std::lower_bound(first, sorted.end(), to);
  return {first, last};
}

PeakEstimate peak_in_window(std::span<const std::int64_t> idlers,
                            std::span<const std::int64_t> partners, std::int64_t center,
                            const HistogramParams& p, std::int64_t epoch_lo, std::int64_t epoch_hi) {
  const auto b = slice(partners, epoch_lo + center - p.window_halfwidth_ps,
                       epoch_hi + center + p.window_halfwidth_ps + 1);
  return estimate_peak(build_histogram(idlers, b, p.bin_width_ps, center, p.window_halfwidth_ps));
}

std::int64_t acquire_one(std::span<const std::int64_t> idlers,
                         std::span<const std::int64_t> partners, double nominal_ps,
                         const AcquisitionParams& acq, const HistogramParams& fine,
                         const char* which) {
  try {
    const auto halfwidth = static_cast<std::int64_t>(std::llround(2.0 * nominal_ps));
    const auto coarse =
        estimate_peak(build_histogram(idlers, partners, acq.coarse_bin_ps, 0, halfwidth));
    const auto coarse_center = static_cast<std::int64_t>(std::llround(coarse.tau_ps));
    const auto refined = estimate_peak(build_histogram(idlers, partners, fine.bin_width_ps,
                                                       coarse_center, fine.window_halfwidth_ps));
    return static_cast<std::int64_t>(std::llround(refined.tau_ps));
  } catch (const NoPeakError& e) {
    throw AcquisitionError(std::string(which) + " correlation acquisition failed: " + e.what());
  }
}

}  // namespace

double CorrelationHistogram::lower_edge_ps(std::size_t k) const {
  return static_cast<double>(window_center_ps - window_halfwidth_ps) +
         static_cast<double>(k) * bin_width_ps;
}

double CorrelationHistogram::bin_value_ps(std::size_t k) const {
  const double lo = lower_edge_ps(k);
  const double hi = lo + bin_width_ps;
  const double first = std::ceil(lo);
  const double last = std::ceil(hi) - 1.0;
  if (last < first) return 0.5 * (lo + hi);
  return 0.5 * (first + last);
}

std::uint64_t CorrelationHistogram::total() const {
  return std::accumulate(counts.begin(), counts.end(), std::uint64_t{0});
}

CorrelationHistogram build_histogram(std::span<const std::int64_t> a,
                                     std::span<const std::int64_t> b, double bin_width_ps,
                                     std::int64_t window_center_ps,
                                     std::int64_t window_halfwidth_ps) {
  if (!(bin_width_ps > 0.0)) throw DomainError("bin_width_ps: must be > 0");
  if (window_halfwidth_ps <= 0) throw DomainError("window_halfwidth_ps: must be > 0");
  if (!std::is_sorted(a.begin(), a.end()) || !std::is_sorted(b.begin(), b.end())) {
    throw ContractError("build_histogram: timestamps must be sorted ascending");
  }

  CorrelationHistogram h;
  h.bin_width_ps = bin_width_ps;
  h.window_center_ps = window_center_ps;
  h.window_halfwidth_ps = window_halfwidth_ps;
  const auto bins = std::max<std::int64_t>(
      1, std::llround(2.0 * static_cast<double>(window_halfwidth_ps) / bin_width_ps));
  h.counts.assign(static_cast<std::size_t>(bins), 0);
  const double span = static_cast<double>(bins) * bin_width_ps;
  const std::int64_t offset = window_center_ps - window_halfwidth_ps;

  std::size_t start = 0;
  for (const std::int64_t ta : a) {
    const std::int64_t lo = ta + offset;
    while (start < b.size() && b[start] < lo) ++start;
    for (std::size_t j = start; j < b.size(); ++j) {
      const double lag = static_cast<double>(b[j] - lo);
      if (lag >= span) break;
      const auto k = static_cast<std::size_t>(std::floor(lag / bin_width_ps));
      if (k < h.counts.size()) ++h.counts[k];
    }
  }
  return h;
}

PeakEstimate estimate_peak(const CorrelationHistogram& h) {
  const std::size_t n = h.counts.size();
  if (n == 0) throw NoPeakError("empty histogram");

  const std::size_t edge = std::max<std::size_t>(1, static_cast<std::size_t>(std::llround(0.05 * n)));
  double edge_sum = 0.0;
  for (std::size_t i = 0; i < edge; ++i) {
    edge_sum += static_cast<double>(h.counts[i]) + static_cast<double>(h.counts[n - 1 - i]);
  }
  const double background = edge_sum / static_cast<double>(2 * edge);
  const double threshold = background + 3.0 * std::sqrt(background);

  const auto max_it = std::max_element(h.counts.begin(), h.counts.end());
  if (static_cast<double>(*max_it) <= threshold) {
    throw NoPeakError("no bin exceeds background threshold");
  }
  std::size_t lo = static_cast<std::size_t>(max_it - h.counts.begin());
  std::size_t hi = lo;
  while (lo > 0 && static_cast<double>(h.counts[lo - 1]) > threshold) --lo;
  while (hi + 1 < n && static_cast<double>(h.counts[hi + 1]) > threshold) ++hi;

  double net = 0.0;
  double first_moment = 0.0;
  for (std::size_t k = lo; k <= hi; ++k) {
    const double w = static_cast<double>(h.counts[k]) - background;
    net += w;
    first_moment += w * h.bin_value_ps(k);
  }
  if (!(net > 0.0)) throw NoPeakError("no net counts above background");
  const double mean = first_moment / net;
  double second_moment = 0.0;
  for (std::size_t k = lo; k <= hi; ++k) {
    const double w = static_cast<double>(h.counts[k]) - background;
    const double dx = h.bin_value_ps(k) - mean;
    second_moment += w * dx * dx;
  }
  const double variance = std::max(0.0, second_moment / net) + h.bin_width_ps * h.bin_width_ps / 12.0;

  PeakEstimate p;
  p.tau_ps = mean;
  p.uncertainty_ps = std::sqrt(variance / net);
  p.peak_counts = *max_it;
  p.background_per_bin = background;
  return p;
}

double clock_difference(double tau_ab_ps, double tau_aba_ps) { return tau_ab_ps - tau_aba_ps / 2.0; }

std::size_t ClockDifferenceSeries::gap_count() const {
  return static_cast<std::size_t>(std::count_if(points.begin(), points.end(),
                                                [](const auto& p) { return p.is_gap(); }));
}

double ClockDifferenceSeries::gap_fraction() const {
  return points.empty() ? 0.0 : static_cast<double>(gap_count()) / static_cast<double>(points.size());
}

std::vector<double> ClockDifferenceSeries::deltas() const {
  std::vector<double> out;
  out.reserve(points.size());
  for (const auto& p : points) {
    if (!p.is_gap()) out.push_back(p.delta_ps);
  }
  return out;
}

std::vector<double> ClockDifferenceSeries::loopback_taus() const {
  std::vector<double> out;
  out.reserve(points.size());
  for (const auto& p : points) {
    if (!p.is_gap()) out.push_back(p.tau_aba_ps);
  }
  return out;
}

std::vector<double> ClockDifferenceSeries::epoch_starts() const {
  std::vector<double> out;
  out.reserve(points.size());
  for (const auto& p : points) {
    if (!p.is_gap()) out.push_back(p.epoch_start_s);
  }
  return out;
}

DetectorTimes DetectorTimes::of(const DetectorTracks& tracks) {
  return {tracks[0].time_ps, tracks[1].time_ps, tracks[2].time_ps};
}

AcquiredCenters coarse_acquire(const DetectorTimes& times, const AcquisitionParams& params,
                               const HistogramParams& fine) {
  const auto idlers =
      slice(times.idler_a, std::numeric_limits<std::int64_t>::min(),
            static_cast<std::int64_t>(std::llround(params.span_s * kPsPerS)));
  if (idlers.empty() || times.signal_b.empty() || times.return_a.empty()) {
    throw AcquisitionError("acquisition failed: stream has no usable detections");
  }
  AcquiredCenters c;
  c.forward_ps =
      acquire_one(idlers, times.signal_b, params.nominal_one_way_ps, params, fine, "forward");
  c.loopback_ps = acquire_one(idlers, times.return_a, 2.0 * params.nominal_one_way_ps, params,
                              fine, "loopback");
  return c;
}

AcquiredCenters coarse_acquire(const TimestampStream& stream, const AcquisitionParams& params,
                               const HistogramParams& fine) {
  const auto tracks = stream.tracks();
  return coarse_acquire(DetectorTimes::of(tracks), params, fine);
}

ClockDifferencePoint estimate_epoch(const DetectorTimes& times, double epoch_start_s,
                                    double epoch_length_s, const AcquiredCenters& centers,
                                    const HistogramParams& params) {
  const auto lo = static_cast<std::int64_t>(std::llround(epoch_start_s * kPsPerS));
  const auto hi = static_cast<std::int64_t>(std::llround((epoch_start_s + epoch_length_s) * kPsPerS));
  const auto idlers = slice(times.idler_a, lo, hi);
  if (idlers.empty()) return ClockDifferencePoint::gap(epoch_start_s);
  try {
    const auto fwd = peak_in_window(idlers, times.signal_b, centers.forward_ps, params, lo, hi);
    const auto back = peak_in_window(idlers, times.return_a, centers.loopback_ps, params, lo, hi);
    ClockDifferencePoint p;
    p.epoch_start_s = epoch_start_s;
    p.tau_ab_ps = fwd.tau_ps;
    p.tau_aba_ps = back.tau_ps;
    p.delta_ps = clock_difference(fwd.tau_ps, back.tau_ps);
    p.delta_uncertainty_ps = std::sqrt(fwd.uncertainty_ps * fwd.uncertainty_ps +
                                       0.25 * back.uncertainty_ps * back.uncertainty_ps);
    return p;
  } catch (const NoPeakError&) {
    return ClockDifferencePoint::gap(epoch_start_s);
  }
}

std::size_t epoch_count(double duration_s, double epoch_length_s) {
  if (!(epoch_length_s > 0.0)) throw DomainError("epoch_length_s: must be > 0");
  if (!(duration_s > 0.0)) return 0;
  return static_cast<std::size_t>(std::floor(duration_s / epoch_length_s + 1e-9));
}

ClockDifferenceSeries per_epoch_series(const TimestampStream& stream, double epoch_length_s,
                                       const HistogramParams& params,
                                       const AcquisitionParams& acquisition,
                                       std::optional<AcquiredCenters> centers) {
  const std::size_t epochs = epoch_count(stream.duration_s, epoch_length_s);
  if (epochs == 0) throw DomainError("stream is shorter than one epoch");
  const auto tracks = stream.tracks();
  const auto times = DetectorTimes::of(tracks);
  if (times.idler_a.empty() || times.signal_b.empty() || times.return_a.empty()) {
    throw EmptySeriesError("no usable epochs: a detector recorded nothing");
  }
  if (!centers) centers = coarse_acquire(times, acquisition, params);

  ClockDifferenceSeries series;
  series.epoch_length_s = epoch_length_s;
  series.points.reserve(epochs);
  for (std::size_t k = 0; k < epochs; ++k) {
    series.points.push_back(estimate_epoch(times, static_cast<double>(k) * epoch_length_s,
                                           epoch_length_s, *centers, params));
  }
  if (series.gap_count() == series.points.size()) {
    throw EmptySeriesError("no usable epochs: every epoch failed peak estimation");
  }
  return series;
}

}  // namespace asymdelay
