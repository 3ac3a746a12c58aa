#include "asymdelay/photon_sim.hpp"

#include <algorithm>
#include <cmath>
#include <string>
#include <utility>

#include "asymdelay/errors.hpp"

namespace asymdelay {

namespace {

constexpr double kPsPerS = 1e12;

void require(bool ok, const char* what) {
  if (!ok) throw ConfigError(what);
}

bool is_probability(double p) { return p >= 0.0 && p <= 1.0; }

// xoshiro256++ seeded through splitmix64. Uniforms take the top 53 bits,
// exponentials use the inverse CDF and normals the Marsaglia polar method, so
// streams are identical across standard libraries.
class Draws {
 public:
  explicit Draws(std::uint64_t seed) {
    for (auto& word : s_) {
      seed += 0x9e3779b97f4a7c15ULL;
      std::uint64_t z = seed;
      z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
      z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
      word = z ^ (z >> 31);
    }
  }

  std::uint64_t next() {
    const std::uint64_t result = rotl(s_[0] + s_[3], 23) + s_[0];
    const std::uint64_t t = s_[1] << 17;
    s_[2] ^= s_[0];
    s_[3] ^= s_[1];
    s_[1] ^= s_[2];
    s_[0] ^= s_[3];
    s_[2] ^= t;
    s_[3] = rotl(s_[3], 45);
    return result;
  }

  double uniform() { return static_cast<double>(next() >> 11) * 0x1p-53; }
  double exponential(double mean) { return -mean * std::log1p(-uniform()); }

  double normal() {
    if (has_spare_) {
      has_spare_ = false;
      return spare_;
    }
    double u;
    double v;
    double r2;
    do {
      u = 2.0 * uniform() - 1.0;
      v = 2.0 * uniform() - 1.0;
      r2 = u * u + v * v;
    } while (r2 >= 1.0 || r2 == 0.0);
    const double scale = std::sqrt(-2.0 * std::log(r2) / r2);
    spare_ = v * scale;
    has_spare_ = true;
    return u * scale;
  }

 private:
  static std::uint64_t rotl(std::uint64_t x, int k) { return (x << k) | (x >> (64 - k)); }

  std::array<std::uint64_t, 4> s_{};
  double spare_ = 0.0;
  bool has_spare_ = false;
};

using Hit = std::pair<std::int64_t, std::uint64_t>;
using HitBuffers = std::array<std::vector<Hit>, kDetectorCount>;

std::size_t index_of(DetectorId id) { return static_cast<std::size_t>(id); }

struct Readout {
  const ClockConfig* clock;
  double sigma_ps;  // detector, TDC and clock white noise combined
  double resolution_ps;

  std::optional<std::int64_t> read(double true_ps, double unit_normal) const {
    const double reading = clock->deterministic_reading(true_ps + sigma_ps * unit_normal);
    const double q = resolution_ps * std::nearbyint(reading / resolution_ps);
    if (!(q >= 0.0)) return std::nullopt;
    return std::llround(q);
  }
};

Readout make_readout(const DetectorConfig& det, const TdcConfig& tdc, const ClockConfig& clock) {
  const double sigma = std::sqrt(det.jitter_sigma_ps * det.jitter_sigma_ps +
                                 tdc.jitter_sigma_ps * tdc.jitter_sigma_ps +
                                 clock.white_phase_noise_sigma_ps * clock.white_phase_noise_sigma_ps);
  return {&clock, sigma, tdc.resolution_ps};
}

// hits[d][0, photon_end[d]) are photon detections in emission order; the rest
// are dark counts in ascending order.
DetectorTracks finish_tracks(HitBuffers& buffers, const std::array<std::size_t, kDetectorCount>& photon_end) {
  DetectorTracks tracks;
  for (std::size_t d = 0; d < kDetectorCount; ++d) {
    auto& hits = buffers[d];
    // Jitter only reorders neighbours, so insertion sort runs in near-linear time.
    for (std::size_t i = 1; i < photon_end[d]; ++i) {
      const Hit h = hits[i];
      std::size_t j = i;
      for (; j > 0 && h < hits[j - 1]; --j) hits[j] = hits[j - 1];
      hits[j] = h;
    }
    const auto mid = hits.begin() + static_cast<std::ptrdiff_t>(photon_end[d]);
    std::sort(mid, hits.end());
    std::inplace_merge(hits.begin(), mid, hits.end());
    tracks[d].time_ps.reserve(hits.size());
    tracks[d].pair_id.reserve(hits.size());
    for (const auto& [t, id] : hits) {
      tracks[d].time_ps.push_back(t);
      tracks[d].pair_id.push_back(id);
    }
  }
  return tracks;
}

}  // namespace

void SourceConfig::validate() const {
  require(pair_rate_hz > 0.0 && std::isfinite(pair_rate_hz), "source.pair_rate_hz: must be > 0");
  require(intrinsic_correlation_jitter_ps >= 0.0,
          "source.intrinsic_correlation_jitter_ps: must be >= 0");
}

void DetectorConfig::validate() const {
  require(is_probability(efficiency), "detector.efficiency: must be in [0, 1]");
  require(jitter_sigma_ps >= 0.0, "detector.jitter_sigma_ps: must be >= 0");
  require(dead_time_ps >= 0.0, "detector.dead_time_ps: must be >= 0");
  require(dark_count_rate_hz >= 0.0, "detector.dark_count_rate_hz: must be >= 0");
}

void TdcConfig::validate() const {
  require(resolution_ps > 0.0, "tdc.resolution_ps: must be > 0");
  require(jitter_sigma_ps >= 0.0, "tdc.jitter_sigma_ps: must be >= 0");
}

void ChannelConfig::validate() const {
  require(one_way_delay_ps > 0.0 && std::isfinite(one_way_delay_ps),
          "channel.one_way_delay_ps: must be > 0");
  require(is_probability(loss_survival_prob), "channel.loss_survival_prob: must be in [0, 1]");
  require(is_probability(splitter_loopback_prob),
          "channel.splitter_loopback_prob: must be in [0, 1]");
}

void ClockConfig::validate() const {
  require(std::isfinite(offset_ps), "clock.offset_ps: must be finite");
  require(std::isfinite(drift_ps_per_s), "clock.drift_ps_per_s: must be finite");
  require(white_phase_noise_sigma_ps >= 0.0, "clock.white_phase_noise_sigma_ps: must be >= 0");
}

void PhotonSimConfig::validate() const {
  source.validate();
  channel.validate();
  detectors.idler_a.validate();
  detectors.signal_b.validate();
  detectors.return_a.validate();
  tdc.validate();
  clocks.alice.validate();
  clocks.bob.validate();
}

const char* detector_name(DetectorId id) {
  switch (id) {
    case DetectorId::IdlerA:
      return "IdlerA";
    case DetectorId::SignalB:
      return "SignalB";
    case DetectorId::ReturnA:
      return "ReturnA";
  }
  return "?";
}

DetectorId detector_from_name(std::string_view name) {
  if (name == "IdlerA" || name == "0") return DetectorId::IdlerA;
  if (name == "SignalB" || name == "1") return DetectorId::SignalB;
  if (name == "ReturnA" || name == "2") return DetectorId::ReturnA;
  throw ConfigError("unknown detector '" + std::string(name) + "'");
}

const DetectorConfig& DetectorSet::operator[](DetectorId id) const {
  switch (id) {
    case DetectorId::IdlerA:
      return idler_a;
    case DetectorId::SignalB:
      return signal_b;
    case DetectorId::ReturnA:
      return return_a;
  }
  return idler_a;
}

std::vector<std::int64_t> TimestampStream::times(DetectorId id) const {
  std::vector<std::int64_t> out;
  for (const auto& r : records) {
    if (r.detector == id) out.push_back(r.time_ps);
  }
  return out;
}

std::size_t TimestampStream::count(DetectorId id) const {
  return static_cast<std::size_t>(std::count_if(
      records.begin(), records.end(), [id](const TimestampRecord& r) { return r.detector == id; }));
}

DetectorTracks TimestampStream::tracks() const {
  DetectorTracks out;
  for (const auto& r : records) {
    auto& track = out[index_of(r.detector)];
    track.time_ps.push_back(r.time_ps);
    track.pair_id.push_back(r.true_pair_id);
  }
  return out;
}

TimestampStream stream_from_tracks(const DetectorTracks& tracks, double duration_s,
                                   std::uint64_t seed, std::uint64_t config_hash) {
  TimestampStream stream;
  stream.duration_s = duration_s;
  stream.seed = seed;
  stream.config_hash = config_hash;
  std::size_t total = 0;
  for (const auto& t : tracks) total += t.size();
  stream.records.reserve(total);

  std::array<std::size_t, kDetectorCount> pos{};
  while (stream.records.size() < total) {
    std::size_t best = kDetectorCount;
    for (std::size_t d = 0; d < kDetectorCount; ++d) {
      if (pos[d] >= tracks[d].size()) continue;
      if (best == kDetectorCount || tracks[d].time_ps[pos[d]] < tracks[best].time_ps[pos[best]]) {
        best = d;
      }
    }
    const std::size_t i = pos[best]++;
    stream.records.push_back(
        {static_cast<DetectorId>(best), tracks[best].time_ps[i], tracks[best].pair_id[i]});
  }
  return stream;
}

std::uint64_t derive_seed(std::uint64_t master, std::uint64_t stream) {
  auto mix = [](std::uint64_t z) {
    z += 0x9e3779b97f4a7c15ULL;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  };
  return mix(master ^ mix(stream));
}

std::vector<PairEmission> generate_pairs(const SourceConfig& source, double duration_s,
                                         std::uint64_t seed) {
  return generate_pairs(source, 0.0, duration_s, seed, 0);
}

std::vector<PairEmission> generate_pairs(const SourceConfig& source, double start_s,
                                         double duration_s, std::uint64_t seed,
                                         std::uint64_t first_pair_id) {
  if (!(duration_s > 0.0)) throw ConfigError("duration_s: must be > 0");
  source.validate();

  Draws rng(seed);
  const double mean_gap_ps = kPsPerS / source.pair_rate_hz;

  std::vector<PairEmission> pairs;
  pairs.reserve(static_cast<std::size_t>(source.pair_rate_hz * duration_s * 1.05) + 16);
  const double end_ps = (start_s + duration_s) * kPsPerS;
  const double jitter = source.intrinsic_correlation_jitter_ps;
  std::uint64_t id = first_pair_id;
  for (double t = start_s * kPsPerS + rng.exponential(mean_gap_ps); t < end_ps;
       t += rng.exponential(mean_gap_ps)) {
    const double signal = jitter > 0.0 ? t + jitter * rng.normal() : t;
    pairs.push_back({t, signal, id++});
  }
  return pairs;
}

DetectorTracks detect_pairs(std::span<const PairEmission> pairs, const PhotonSimConfig& cfg,
                            const DelayTrajectory& m, const DelayTrajectory& n,
                            std::uint64_t seed, DarkCountWindow dark) {
  cfg.validate();
  Draws rng(seed);

  const auto& det = cfg.detectors;
  const auto& ch = cfg.channel;
  const Readout idler = make_readout(det.idler_a, cfg.tdc, cfg.clocks.alice);
  const Readout bob = make_readout(det.signal_b, cfg.tdc, cfg.clocks.bob);
  const Readout back = make_readout(det.return_a, cfg.tdc, cfg.clocks.alice);

  // One draw decides the signal photon's fate: detected at Bob, detected after
  // the loopback, or lost (channel loss, splitter, detector inefficiency).
  const double s = ch.loss_survival_prob;
  const double p_forward = s * (1.0 - ch.splitter_loopback_prob) * det.signal_b.efficiency;
  const double p_return = p_forward + s * ch.splitter_loopback_prob * s * det.return_a.efficiency;

  HitBuffers hits;
  hits[0].reserve(pairs.size());
  hits[1].reserve(static_cast<std::size_t>(static_cast<double>(pairs.size()) * p_forward * 1.1) + 16);
  hits[2].reserve(static_cast<std::size_t>(static_cast<double>(pairs.size()) * (p_return - p_forward) * 1.1) + 16);
  auto push = [&](DetectorId id, std::optional<std::int64_t> t, std::uint64_t pair) {
    if (t) hits[index_of(id)].emplace_back(*t, pair);
  };

  for (const auto& p : pairs) {
    if (rng.uniform() < det.idler_a.efficiency) {
      push(DetectorId::IdlerA, idler.read(p.idler_ps, rng.normal()), p.pair_id);
    }
    const double fate = rng.uniform();
    if (fate >= p_return) continue;
    const double at_bob = p.signal_ps + ch.one_way_delay_ps + m.at(p.signal_ps / kPsPerS);
    if (fate < p_forward) {
      push(DetectorId::SignalB, bob.read(at_bob, rng.normal()), p.pair_id);
    } else {
      const double at_alice = at_bob + ch.one_way_delay_ps + n.at(at_bob / kPsPerS);
      push(DetectorId::ReturnA, back.read(at_alice, rng.normal()), p.pair_id);
    }
  }

  std::array<std::size_t, kDetectorCount> photon_end{};
  for (std::size_t d = 0; d < kDetectorCount; ++d) photon_end[d] = hits[d].size();
  if (dark.span_s > 0.0) {
    const std::array<std::pair<DetectorId, const Readout*>, kDetectorCount> readouts{
        {{DetectorId::IdlerA, &idler}, {DetectorId::SignalB, &bob}, {DetectorId::ReturnA, &back}}};
    for (const auto& [id, readout] : readouts) {
      const double rate = det[id].dark_count_rate_hz;
      if (rate <= 0.0) continue;
      // Uniform background: exponential gaps at the dark rate over the window.
      const double mean_gap_ps = kPsPerS / rate;
      const double end_ps = (dark.start_s + dark.span_s) * kPsPerS;
      for (double t = dark.start_s * kPsPerS + rng.exponential(mean_gap_ps); t < end_ps;
           t += rng.exponential(mean_gap_ps)) {
        push(id, readout->read(t, 0.0), kNoPair);
      }
    }
  }
  return finish_tracks(hits, photon_end);
}

DeadTimeFilter::DeadTimeFilter(const DetectorSet& detectors) {
  for (std::size_t d = 0; d < kDetectorCount; ++d) {
    dead_time_ps_[d] = detectors[static_cast<DetectorId>(d)].dead_time_ps;
  }
}

void DeadTimeFilter::apply(DetectorTracks& tracks) {
  for (std::size_t d = 0; d < kDetectorCount; ++d) {
    auto& track = tracks[d];
    std::size_t out = 0;
    for (std::size_t i = 0; i < track.size(); ++i) {
      const std::int64_t t = track.time_ps[i];
      if (seen_[d] && static_cast<double>(t - last_accepted_[d]) < dead_time_ps_[d]) continue;
      if (seen_[d] && t < last_accepted_[d]) continue;
      seen_[d] = true;
      last_accepted_[d] = t;
      track.time_ps[out] = t;
      track.pair_id[out] = track.pair_id[i];
      ++out;
    }
    track.time_ps.resize(out);
    track.pair_id.resize(out);
  }
}

TimestampStream propagate_and_detect(std::span<const PairEmission> pairs,
                                     const PhotonSimConfig& cfg, const DelayTrajectory& m,
                                     const DelayTrajectory& n, std::uint64_t seed,
                                     DarkCountWindow dark) {
  auto tracks = detect_pairs(pairs, cfg, m, n, seed, dark);
  DeadTimeFilter filter(cfg.detectors);
  filter.apply(tracks);
  double duration = dark.span_s;
  if (duration <= 0.0 && !pairs.empty()) duration = pairs.back().idler_ps / kPsPerS;
  return stream_from_tracks(tracks, duration, seed);
}

StreamGenerator::StreamGenerator(PhotonSimConfig cfg, DelayTrajectory m, DelayTrajectory n,
                                 double duration_s, double epoch_s, std::uint64_t seed)
    : cfg_(std::move(cfg)),
      m_(std::move(m)),
      n_(std::move(n)),
      duration_s_(duration_s),
      epoch_s_(epoch_s),
      seed_(seed),
      chunk_count_(0),
      dead_time_(cfg_.detectors) {
  if (!(duration_s > 0.0)) throw ConfigError("run.duration_s: must be > 0");
  if (!(epoch_s > 0.0)) throw ConfigError("run.epoch_s: must be > 0");
  cfg_.validate();
  chunk_count_ = static_cast<std::size_t>(std::ceil(duration_s / epoch_s - 1e-9));
}

double StreamGenerator::chunk_start_s(std::size_t k) const {
  return static_cast<double>(k) * epoch_s_;
}

DetectorTracks StreamGenerator::next_chunk() {
  if (done()) return {};
  const std::size_t k = next_++;
  const double start = chunk_start_s(k);
  const double span = std::min(epoch_s_, duration_s_ - start);
  const auto pairs =
      generate_pairs(cfg_.source, start, span, derive_seed(seed_, 2 * k), std::uint64_t{k} << 32);
  auto tracks = detect_pairs(pairs, cfg_, m_, n_, derive_seed(seed_, 2 * k + 1), {start, span});
  dead_time_.apply(tracks);
  return tracks;
}

}  // namespace asymdelay
