#include "asymdelay/detection.hpp"

#include <cmath>
#include <string>

#include "asymdelay/errors.hpp"

namespace asymdelay {

void ThresholdConfig::validate() const {
  if (baseline_window_epochs < 10) throw ConfigError("threshold.baseline_window_epochs: must be >= 10");
  if (!(threshold_ps > 0.0)) throw ConfigError("threshold.threshold_ps: must be > 0");
}

void CusumConfig::validate() const {
  if (!(reference_drift_ps >= 0.0)) throw ConfigError("cusum.reference_drift_ps: must be >= 0");
  if (!(decision_limit_ps > 0.0)) throw ConfigError("cusum.decision_limit_ps: must be > 0");
}

const char* alarm_kind_name(AlarmKind kind) {
  return kind == AlarmKind::Threshold ? "threshold" : "drift";
}

std::pair<double, double> baseline_stats(const ClockDifferenceSeries& series, int window_epochs) {
  double sum = 0.0;
  double sum_sq = 0.0;
  int n = 0;
  for (const auto& p : series.points) {
    if (n == window_epochs) break;
    if (p.is_gap()) continue;
    sum += p.delta_ps;
    ++n;
  }
  if (n < window_epochs) {
    throw DomainError("series shorter than the baseline window of " +
                      std::to_string(window_epochs) + " epochs");
  }
  const double mean = sum / n;
  n = 0;
  for (const auto& p : series.points) {
    if (n == window_epochs) break;
    if (p.is_gap()) continue;
    sum_sq += (p.delta_ps - mean) * (p.delta_ps - mean);
    ++n;
  }
  return {mean, std::sqrt(sum_sq / (n - 1))};
}

std::vector<Alarm> threshold_monitor(const ClockDifferenceSeries& series, const ThresholdConfig& cfg) {
  cfg.validate();
  if (series.points.size() - series.gap_count() <= static_cast<std::size_t>(cfg.baseline_window_epochs)) {
    throw DomainError("threshold_monitor: series must be longer than the baseline window");
  }
  const double baseline = baseline_stats(series, cfg.baseline_window_epochs).first;
  std::vector<Alarm> alarms;
  for (const auto& p : series.points) {
    if (p.is_gap()) continue;
    const double deviation = p.delta_ps - baseline;
    if (std::abs(deviation) > cfg.threshold_ps) {
      alarms.push_back({p.epoch_start_s, AlarmKind::Threshold, deviation});
    }
  }
  return alarms;
}

std::vector<Alarm> cusum_drift(const ClockDifferenceSeries& series, const CusumConfig& cfg) {
  cfg.validate();
  std::vector<Alarm> alarms;
  double up = 0.0;
  double down = 0.0;
  const ClockDifferencePoint* previous = nullptr;
  for (const auto& p : series.points) {
    if (p.is_gap()) continue;
    if (previous != nullptr) {
      const double step = p.delta_ps - previous->delta_ps;
      up = std::max(0.0, up + (step - cfg.reference_drift_ps));
      down = std::max(0.0, down - (step + cfg.reference_drift_ps));
      if (up > cfg.decision_limit_ps || down > cfg.decision_limit_ps) {
        alarms.push_back({p.epoch_start_s, AlarmKind::Drift, up >= down ? up : -down});
        up = 0.0;
        down = 0.0;
      }
    }
    previous = &p;
  }
  return alarms;
}

DetectionScore score(const std::vector<Alarm>& alarms, double attack_onset_s, double span_start_s,
                     double span_end_s) {
  if (attack_onset_s < span_start_s || attack_onset_s > span_end_s) {
    throw DomainError("score: attack onset outside the series span");
  }
  DetectionScore s;
  for (const auto& a : alarms) {
    if (a.epoch_start_s < attack_onset_s) {
      ++s.false_alarms;
    } else if (!s.detected || a.epoch_start_s - attack_onset_s < *s.latency_s) {
      s.detected = true;
      s.latency_s = a.epoch_start_s - attack_onset_s;
    }
  }
  return s;
}

}  // namespace asymdelay
