#pragma once

#include <filesystem>
#include <iosfwd>
#include <vector>

#include <json.hpp>

#include "asymdelay/detection.hpp"
#include "asymdelay/photon_sim.hpp"
#include "asymdelay/stability.hpp"
#include "asymdelay/timing_estimator.hpp"

namespace asymdelay::io {

// Timestamp stream binary layout, all little-endian:
//   char[8]  magic "ADTSTRM1"
//   u64      seed
//   u64      config hash
//   f64      duration_s
//   u64      record count n
//   u8[n]    detector ids
//   i64[n]   time_ps
//   u64[n]   true pair ids
void write_stream_binary(const TimestampStream& stream, const std::filesystem::path& path);
TimestampStream read_stream_binary(const std::filesystem::path& path);

/// "# seed=<n> config_hash=<hex> duration_s=<x>" then "detector,time_ps".
void write_stream_csv(const TimestampStream& stream, const std::filesystem::path& path);
/// Pair ids are not part of the CSV form and read back as kNoPair.
TimestampStream read_stream_csv(const std::filesystem::path& path);

/// Columns epoch_start_s,tau_ab_ps,tau_aba_ps,delta_ps,delta_rezeroed_ps; gaps
/// leave the value fields empty.
void write_series_csv(const ClockDifferenceSeries& series, std::ostream& out, double reference_ps);
void write_series_csv(const ClockDifferenceSeries& series, const std::filesystem::path& path,
                      double reference_ps);
/// Reads any CSV with the four core columns. When epoch_length_s <= 0 it is
/// inferred from the first two epoch starts.
ClockDifferenceSeries read_series_csv(const std::filesystem::path& path, double epoch_length_s = 0.0);

void write_tdev_csv(const TdevCurve& curve, std::ostream& out);
void write_tdev_csv(const TdevCurve& curve, const std::filesystem::path& path);

void write_alarms_csv(const std::vector<Alarm>& alarms, std::ostream& out);
void write_alarms_csv(const std::vector<Alarm>& alarms, const std::filesystem::path& path);

nlohmann::json to_json(const DetectionScore& score);

void write_text(const std::filesystem::path& path, const std::string& text);

}  // namespace asymdelay::io
