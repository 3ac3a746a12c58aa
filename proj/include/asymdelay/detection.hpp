#pragma once

#include <optional>
#include <utility>
#include <vector>

#include "asymdelay/timing_estimator.hpp"

namespace asymdelay {

// Detector figures of merit below are this tool's own; there is no
// standardised detection criterion for delay attacks to compare against.

struct ThresholdConfig {
  int baseline_window_epochs = 60;
  double threshold_ps = 200.0;  // absolute deviation from the baseline mean

  void validate() const;
};

struct CusumConfig {
  double reference_drift_ps = 0.01;  // allowed per-epoch drift k
  double decision_limit_ps = 10.0;   // h

  void validate() const;
};

enum class AlarmKind { Threshold, Drift };

const char* alarm_kind_name(AlarmKind kind);

struct Alarm {
  double epoch_start_s = 0.0;
  AlarmKind kind = AlarmKind::Threshold;
  double magnitude_ps = 0.0;
};

struct DetectionScore {
  bool detected = false;
  std::optional<double> latency_s;
  int false_alarms = 0;
};

/// Baseline is the mean of the first window; every later-or-equal epoch
/// (gaps skipped) deviating by more than the threshold raises an alarm.
std::vector<Alarm> threshold_monitor(const ClockDifferenceSeries& series, const ThresholdConfig& cfg);

/// Mean and sample standard deviation of the baseline window.
std::pair<double, double> baseline_stats(const ClockDifferenceSeries& series, int window_epochs);

/// Two-sided CUSUM on epoch-to-epoch increments of delta. Both statistics
/// reset after an alarm. magnitude is +S+ or -S-.
std::vector<Alarm> cusum_drift(const ClockDifferenceSeries& series, const CusumConfig& cfg);

DetectionScore score(const std::vector<Alarm>& alarms, double attack_onset_s, double span_start_s,
                     double span_end_s);

}  // namespace asymdelay
