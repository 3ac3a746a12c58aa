#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "asymdelay/detection.hpp"
#include "asymdelay/scenario.hpp"
#include "asymdelay/stability.hpp"
#include "asymdelay/timing_estimator.hpp"

namespace asymdelay {

inline constexpr const char* kToolName = "asymdelay";
inline constexpr const char* kToolVersion = "0.1.0";

/// Largest tolerated fraction of gap epochs; above it a run fails with GapError.
inline constexpr double kMaxGapFraction = 0.01;

struct RunMetadata {
  std::uint64_t seed = 0;
  std::uint64_t config_hash = 0;
  double wall_time_s = 0.0;
  std::size_t epochs = 0;
  std::size_t gaps = 0;
  std::optional<AcquiredCenters> centers;  // full_sim only
  std::optional<double> threshold_ps;      // unset when the run is too short to monitor
};

struct CampaignResult {
  AttackScenario scenario;
  ClockDifferenceSeries series;
  TdevCurve tdev;
  std::vector<Alarm> threshold_alarms;
  std::vector<Alarm> drift_alarms;
  std::optional<DetectionScore> threshold_score;
  std::optional<DetectionScore> drift_score;
  RunMetadata meta;

  /// Both alarm lists merged in time order.
  std::vector<Alarm> alarms() const;
};

/// Whole-run detector output, chunks concatenated in order. Memory grows with
/// duration; campaigns use simulate_series instead.
TimestampStream run_round_trip_sim(const AttackScenario& scenario);

struct SimulatedSeries {
  ClockDifferenceSeries series;
  AcquiredCenters centers;
};

/// Full-simulation pipeline, streamed epoch by epoch. Gives the same series
/// as per_epoch_series over run_round_trip_sim, holding three chunks at a time.
SimulatedSeries simulate_series(const AttackScenario& scenario);

/// Per-epoch Gaussian stand-in: delta = tampered(baseline + noise, M, N, scheme)
/// with M and N taken at the epoch midpoint.
ClockDifferenceSeries analytic_series(const AttackScenario& scenario);

/// Clock difference the full simulation should report at time t under the
/// scenario's clocks and attack, without estimator noise.
double analytic_prediction(const AttackScenario& scenario, double t_s);

/// Executes a scenario: series, TDEV on the octave grid, detectors and scores.
/// Throws GapError when more than kMaxGapFraction of the epochs are gaps.
CampaignResult run_scenario(const AttackScenario& scenario);

/// series.csv, tdev.csv, alarms.csv, meta.json and (with an onset) score.json.
void write_run_outputs(const CampaignResult& result, const std::filesystem::path& dir);

nlohmann::json metadata_json(const CampaignResult& result);

struct LinearFit {
  double slope = 0.0;
  double intercept = 0.0;
  double slope_stderr = 0.0;
};

/// Ordinary least squares; needs at least three points.
LinearFit linear_fit(std::span<const double> x, std::span<const double> y);

/// Slope of tau_aba against epoch start over the non-gap epochs.
LinearFit loopback_trend(const ClockDifferenceSeries& series);

/// Non-gap deltas whose epochs avoid the given instants (+- one epoch).
std::vector<double> quiet_deltas(const ClockDifferenceSeries& series,
                                 std::span<const double> exclude_s);

struct Excursion {
  double epoch_start_s = 0.0;
  double magnitude_ps = 0.0;  // delta minus the median of the series
};

/// Epochs deviating from the series median by more than `threshold_ps`.
std::vector<Excursion> find_excursions(const ClockDifferenceSeries& series, double threshold_ps);

double median(std::vector<double> values);
double sample_std(std::span<const double> values);

struct ReproduceOptions {
  std::optional<std::uint64_t> seed;
  std::optional<RunMode> mode;
  std::optional<double> epoch_s;
  unsigned threads = 0;  // 0: hardware concurrency
};

std::vector<std::string> figure_ids();
/// Builtin scenario names making up a figure bundle.
std::vector<std::string> figure_scenarios(const std::string& figure);

/// Runs a figure bundle in parallel, one directory per scenario under out_dir,
/// plus a figure-level summary CSV. Throws ConfigError for an unknown figure.
std::vector<CampaignResult> reproduce(const std::string& figure, const std::filesystem::path& out_dir,
                                      const ReproduceOptions& options = {});

/// Applies seed, mode and epoch overrides in place.
void apply_overrides(AttackScenario& scenario, const ReproduceOptions& options);

}  // namespace asymdelay
