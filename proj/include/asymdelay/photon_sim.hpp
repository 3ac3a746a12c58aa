#pragma once

#include <array>
#include <cstdint>
#include <limits>
#include <span>
#include <string_view>
#include <vector>

#include "asymdelay/attack_model.hpp"

namespace asymdelay {

// Detector jitter figures are quoted as FWHM; a Gaussian has FWHM = 2.3548 sigma.
inline constexpr double kFwhmToSigma = 1.0 / 2.354820045;

struct SourceConfig {
  double pair_rate_hz = 5.0e4;
  double intrinsic_correlation_jitter_ps = 1.0;

  void validate() const;
};

struct DetectorConfig {
  double efficiency = 0.8;
  double jitter_sigma_ps = 110.0 * kFwhmToSigma;
  double dead_time_ps = 20000.0;
  double dark_count_rate_hz = 0.0;

  void validate() const;
};

struct TdcConfig {
  double resolution_ps = 1.0;
  double jitter_sigma_ps = 8.0 * kFwhmToSigma;

  void validate() const;
};

struct ChannelConfig {
  double one_way_delay_ps = 4.9e7;     // 10 km of fibre
  double loss_survival_prob = 0.631;   // 2 dB per pass
  double splitter_loopback_prob = 0.5;

  void validate() const;
};

/// Local clock reading = true time + offset + drift * t + white phase noise.
struct ClockConfig {
  double offset_ps = 0.0;
  double drift_ps_per_s = 0.0;
  double white_phase_noise_sigma_ps = 0.0;

  double deterministic_reading(double true_ps) const {
    return true_ps + offset_ps + drift_ps_per_s * (true_ps * 1e-12);
  }
  void validate() const;
};

enum class DetectorId : std::uint8_t { IdlerA = 0, SignalB = 1, ReturnA = 2 };
inline constexpr std::size_t kDetectorCount = 3;

const char* detector_name(DetectorId id);
DetectorId detector_from_name(std::string_view name);

struct DetectorSet {
  DetectorConfig idler_a;
  DetectorConfig signal_b;
  DetectorConfig return_a;

  const DetectorConfig& operator[](DetectorId id) const;
  static DetectorSet uniform(const DetectorConfig& cfg) { return {cfg, cfg, cfg}; }
};

inline constexpr double kDefaultBobOffsetPs = -9912.8;

struct ClockPair {
  ClockConfig alice;
  ClockConfig bob{kDefaultBobOffsetPs, 0.0, 0.0};
};

struct PhotonSimConfig {
  SourceConfig source;
  ChannelConfig channel;
  DetectorSet detectors;
  TdcConfig tdc;
  ClockPair clocks;

  void validate() const;
};

inline constexpr std::uint64_t kNoPair = std::numeric_limits<std::uint64_t>::max();

struct TimestampRecord {
  DetectorId detector = DetectorId::IdlerA;
  std::int64_t time_ps = 0;
  std::uint64_t true_pair_id = kNoPair;  // ground truth, never used by estimators

  friend bool operator==(const TimestampRecord&, const TimestampRecord&) = default;
};

/// Columnar per-detector timestamps, ascending in time.
struct DetectorTrack {
  std::vector<std::int64_t> time_ps;
  std::vector<std::uint64_t> pair_id;

  std::size_t size() const noexcept { return time_ps.size(); }
};

using DetectorTracks = std::array<DetectorTrack, kDetectorCount>;

/// Full detector output of one run. Records are ordered by (time, detector,
/// pair id), which keeps every detector's subsequence sorted.
struct TimestampStream {
  std::vector<TimestampRecord> records;
  double duration_s = 0.0;
  std::uint64_t seed = 0;
  std::uint64_t config_hash = 0;

  std::vector<std::int64_t> times(DetectorId id) const;
  std::size_t count(DetectorId id) const;
  DetectorTracks tracks() const;
};

TimestampStream stream_from_tracks(const DetectorTracks& tracks, double duration_s,
                                   std::uint64_t seed, std::uint64_t config_hash = 0);

/// One SPDC pair: emission times in Alice's timebase.
struct PairEmission {
  double idler_ps = 0.0;
  double signal_ps = 0.0;
  std::uint64_t pair_id = 0;
};

/// Homogeneous Poisson emission over [0, duration).
std::vector<PairEmission> generate_pairs(const SourceConfig& source, double duration_s,
                                         std::uint64_t seed);
/// Poisson emission over [start, start + duration), ids counted from first_pair_id.
std::vector<PairEmission> generate_pairs(const SourceConfig& source, double start_s,
                                         double duration_s, std::uint64_t seed,
                                         std::uint64_t first_pair_id);

/// Dark counts are drawn uniformly over [dark_start_s, dark_start_s + dark_span_s).
struct DarkCountWindow {
  double start_s = 0.0;
  double span_s = 0.0;
};

/// Per-detector tracks of the round-trip topology, sorted but not yet
/// dead-time filtered.
DetectorTracks detect_pairs(std::span<const PairEmission> pairs, const PhotonSimConfig& cfg,
                            const DelayTrajectory& m, const DelayTrajectory& n,
                            std::uint64_t seed, DarkCountWindow dark = {});

/// Non-paralyzable dead time with state carried across consecutive chunks.
/// A record earlier than the last accepted one is dropped, so the filtered
/// output of each detector is always ascending.
class DeadTimeFilter {
 public:
  explicit DeadTimeFilter(const DetectorSet& detectors);
  void apply(DetectorTracks& tracks);

 private:
  std::array<double, kDetectorCount> dead_time_ps_{};
  std::array<std::int64_t, kDetectorCount> last_accepted_{};
  std::array<bool, kDetectorCount> seen_{};
};

TimestampStream propagate_and_detect(std::span<const PairEmission> pairs,
                                     const PhotonSimConfig& cfg, const DelayTrajectory& m,
                                     const DelayTrajectory& n, std::uint64_t seed,
                                     DarkCountWindow dark = {});

/// Produces a run epoch by epoch. Chunk k holds every detection caused by
/// emissions in [k*epoch, (k+1)*epoch), generated from sub-seeds of the
/// master seed, so the concatenated chunks do not depend on how the run is
/// consumed.
class StreamGenerator {
 public:
  StreamGenerator(PhotonSimConfig cfg, DelayTrajectory m, DelayTrajectory n, double duration_s,
                  double epoch_s, std::uint64_t seed);

  std::size_t chunk_count() const noexcept { return chunk_count_; }
  std::size_t next_index() const noexcept { return next_; }
  bool done() const noexcept { return next_ >= chunk_count_; }
  double chunk_start_s(std::size_t k) const;
  double epoch_s() const noexcept { return epoch_s_; }
  double duration_s() const noexcept { return duration_s_; }
  const PhotonSimConfig& config() const noexcept { return cfg_; }

  DetectorTracks next_chunk();

 private:
  PhotonSimConfig cfg_;
  DelayTrajectory m_;
  DelayTrajectory n_;
  double duration_s_;
  double epoch_s_;
  std::uint64_t seed_;
  std::size_t chunk_count_;
  std::size_t next_ = 0;
  DeadTimeFilter dead_time_;
};

/// Deterministic 64-bit sub-seed derivation (splitmix64 finaliser).
std::uint64_t derive_seed(std::uint64_t master, std::uint64_t stream);

}  // namespace asymdelay
