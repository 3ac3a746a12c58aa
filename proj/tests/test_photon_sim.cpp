#include <doctest.h>

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <map>

#include "asymdelay/campaign.hpp"
#include "asymdelay/errors.hpp"
#include "asymdelay/io.hpp"
#include "asymdelay/photon_sim.hpp"
#include "oracles.hpp"

using namespace asymdelay;

namespace {

constexpr double L = 4.9e7;

PhotonSimConfig noiseless(double theta_ps) {
  PhotonSimConfig c;
  c.source = {1e4, 0.0};
  c.detectors = DetectorSet::uniform({1.0, 0.0, 0.0, 0.0});
  c.tdc = {1.0, 0.0};
  c.channel = {L, 1.0, 0.5};
  c.clocks.alice = {};
  c.clocks.bob = {theta_ps, 0.0, 0.0};
  return c;
}

std::map<std::uint64_t, std::int64_t> by_pair(const DetectorTrack& t) {
  std::map<std::uint64_t, std::int64_t> out;
  for (std::size_t i = 0; i < t.size(); ++i) out[t.pair_id[i]] = t.time_ps[i];
  return out;
}

std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), {}};
}

}  // namespace

TEST_CASE("generate_pairs: Poisson count and spacing") {
  const auto pairs = generate_pairs({1e4, 1.0}, 10.0, 7);
  CHECK(oracle::poisson_band(1e5, 4).contains(static_cast<double>(pairs.size())));
  // Mean gap of a 10 kHz Poisson process is 1e8 ps; relative error ~ 1/sqrt(n).
  const double mean_gap = (pairs.back().idler_ps - pairs.front().idler_ps) / (pairs.size() - 1);
  CHECK(mean_gap == doctest::Approx(1e8).epsilon(4.0 / std::sqrt(1e5)));
  for (std::size_t i = 1; i < pairs.size(); ++i) REQUIRE(pairs[i].idler_ps > pairs[i - 1].idler_ps);
  // Signal jitter is zero-mean with the configured spread.
  std::vector<double> d;
  for (const auto& p : pairs) d.push_back(p.signal_ps - p.idler_ps);
  CHECK(std::abs(oracle::mean(d)) < 4.0 / std::sqrt(d.size()));
  CHECK(oracle::stddev(d) == doctest::Approx(1.0).epsilon(0.02));
}

TEST_CASE("generate_pairs: limits and determinism") {
  CHECK(generate_pairs({1e4, 1.0}, 1e-12, 1).empty());
  CHECK_THROWS_AS(generate_pairs({1e4, 1.0}, 0.0, 1), ConfigError);
  CHECK_THROWS_AS(generate_pairs({-1, 1.0}, 1.0, 1), ConfigError);
  const auto a = generate_pairs({5e4, 1.0}, 1.0, 99);
  const auto b = generate_pairs({5e4, 1.0}, 1.0, 99);
  REQUIRE(a.size() == b.size());
  for (std::size_t i = 0; i < a.size(); ++i) {
    REQUIRE(a[i].idler_ps == b[i].idler_ps);
    REQUIRE(a[i].signal_ps == b[i].signal_ps);
  }
  CHECK(generate_pairs({5e4, 1.0}, 1.0, 100).front().idler_ps != a.front().idler_ps);
}

TEST_CASE("noiseless forward and loopback lags") {
  const double theta = -9913.0;
  const auto cfg = noiseless(theta);
  const auto pairs = generate_pairs(cfg.source, 2.0, 3);

  SUBCASE("no attack") {
    const auto s = propagate_and_detect(pairs, cfg, {}, {}, 4);
    const auto tr = s.tracks();
    const auto idler = by_pair(tr[0]);
    std::size_t checked = 0;
    for (std::size_t i = 0; i < tr[1].size(); ++i) {
      const double d = tr[1].time_ps[i] - idler.at(tr[1].pair_id[i]);
      CHECK(std::abs(d - (L + theta)) <= 1.0);
      ++checked;
    }
    for (std::size_t i = 0; i < tr[2].size(); ++i) {
      const double d = tr[2].time_ps[i] - idler.at(tr[2].pair_id[i]);
      CHECK(std::abs(d - 2 * L) <= 1.0);
      ++checked;
    }
    CHECK(checked == pairs.size());
  }

  SUBCASE("jump with N = -M shifts only the forward lag") {
    const DelayTrajectory m{{AttackEvent::jump(-100, 0)}};
    const auto n = derive_n_from_m(m, CoordinationRule::proportional(-1));
    const auto tr = propagate_and_detect(pairs, cfg, m, n, 4).tracks();
    const auto idler = by_pair(tr[0]);
    for (std::size_t i = 0; i < tr[1].size(); ++i) {
      CHECK(std::abs(tr[1].time_ps[i] - idler.at(tr[1].pair_id[i]) - (L + theta - 100)) <= 1.0);
    }
    for (std::size_t i = 0; i < tr[2].size(); ++i) {
      CHECK(std::abs(tr[2].time_ps[i] - idler.at(tr[2].pair_id[i]) - 2 * L) <= 1.0);
    }
  }
}

TEST_CASE("ground truth: asymmetry equals M and round trip stays constant") {
  auto cfg = noiseless(0.0);
  AttackScenario s;
  s.photon = cfg;
  auto ramp = AttackEvent::gradual(-3, 0.5, LinearBehavior{2.0}, 0.0);
  s.m_events = {ramp, AttackEvent::spike(40, 1.2, 0.3)};
  s.run = {2.0, 0.5, 5};
  const auto tr = run_round_trip_sim(s).tracks();
  const auto idler = by_pair(tr[0]);
  const auto m = s.m();
  std::size_t n_fwd = 0;
  for (std::size_t i = 0; i < tr[1].size(); ++i) {
    const auto t_emit = static_cast<double>(idler.at(tr[1].pair_id[i]));
    const double asym = tr[1].time_ps[i] - t_emit - L;
    CHECK(std::abs(asym - m.at(t_emit * 1e-12)) <= 1.0);
    ++n_fwd;
  }
  CHECK(n_fwd > 1000);
  // N acts at Bob arrival, one transit after M, so emissions within a transit
  // of a spike edge see only one of the two legs shifted.
  for (std::size_t i = 0; i < tr[2].size(); ++i) {
    const double t_emit = static_cast<double>(idler.at(tr[2].pair_id[i])) * 1e-12;
    if (std::abs(t_emit - 1.2) < 2 * L * 1e-12 || std::abs(t_emit - 1.5) < 2 * L * 1e-12) continue;
    CHECK(std::abs(tr[2].time_ps[i] - idler.at(tr[2].pair_id[i]) - 2 * L) <= 1.0);
  }
}

TEST_CASE("detected idler count follows binomial thinning") {
  AttackScenario s;
  s.photon.source.pair_rate_hz = 1e4;
  s.run = {60.0, 1.0, 17};
  const auto stream = run_round_trip_sim(s);
  // Thinned Poisson at rate r*eta, reduced by non-paralyzable dead time.
  const double r = 1e4 * 0.8;
  const double mean = r * 60.0 / (1.0 + r * s.photon.detectors.idler_a.dead_time_ps * 1e-12);
  CHECK(oracle::poisson_band(mean, 4).contains(static_cast<double>(stream.count(DetectorId::IdlerA))));
}

TEST_CASE("zero efficiency gives empty streams") {
  AttackScenario s;
  s.photon.detectors = DetectorSet::uniform({0.0, 10.0, 0.0, 0.0});
  s.run = {5.0, 1.0, 1};
  const auto stream = run_round_trip_sim(s);
  CHECK(stream.records.empty());
}

TEST_CASE("dark counts arrive at the configured rate") {
  AttackScenario s;
  s.photon.detectors = DetectorSet::uniform({0.0, 10.0, 0.0, 2000.0});
  s.run = {10.0, 1.0, 8};
  const auto stream = run_round_trip_sim(s);
  for (auto id : {DetectorId::IdlerA, DetectorId::SignalB, DetectorId::ReturnA}) {
    CHECK(oracle::poisson_band(2e4, 4).contains(static_cast<double>(stream.count(id))));
  }
}

TEST_CASE("dead time and ordering per detector") {
  AttackScenario s;
  s.photon.detectors = DetectorSet::uniform({0.8, 46.7, 2e6, 0.0});  // 2 us to make it bite
  s.run = {5.0, 1.0, 21};
  const auto tr = run_round_trip_sim(s).tracks();
  for (const auto& t : tr) {
    REQUIRE(t.size() > 100);
    for (std::size_t i = 1; i < t.size(); ++i) {
      REQUIRE(t.time_ps[i] >= t.time_ps[i - 1]);
      REQUIRE(static_cast<double>(t.time_ps[i] - t.time_ps[i - 1]) >= 2e6);
    }
  }
}

TEST_CASE("Bob clock drift shows up as a linear trend") {
  auto cfg = noiseless(0.0);
  cfg.clocks.bob.drift_ps_per_s = 50.0;
  AttackScenario s;
  s.photon = cfg;
  s.run = {4.0, 1.0, 2};
  const auto tr = run_round_trip_sim(s).tracks();
  const auto idler = by_pair(tr[0]);
  std::vector<double> x;
  std::vector<double> y;
  for (std::size_t i = 0; i < tr[1].size(); ++i) {
    const auto ta = idler.at(tr[1].pair_id[i]);
    x.push_back(ta * 1e-12);
    y.push_back(static_cast<double>(tr[1].time_ps[i] - ta));
  }
  CHECK(oracle::slope(x, y) == doctest::Approx(50.0).epsilon(0.01));
}

TEST_CASE("streamed chunks reproduce the materialized stream") {
  AttackScenario s;
  s.run = {6.0, 1.0, 31};
  s.m_events = {AttackEvent::jump(-50, 3)};
  StreamGenerator gen(s.photon, s.m(), s.n(), 6.0, 1.0, 31);
  CHECK(gen.chunk_count() == 6);
  DetectorTracks joined;
  while (!gen.done()) {
    const auto c = gen.next_chunk();
    for (std::size_t d = 0; d < kDetectorCount; ++d) {
      joined[d].time_ps.insert(joined[d].time_ps.end(), c[d].time_ps.begin(), c[d].time_ps.end());
    }
  }
  const auto tr = run_round_trip_sim(s).tracks();
  for (std::size_t d = 0; d < kDetectorCount; ++d) CHECK(joined[d].time_ps == tr[d].time_ps);
  // A different epoch split changes which sub-seeds drive which emissions.
  s.run.epoch_s = 1.5;
  CHECK(run_round_trip_sim(s).tracks()[0].time_ps != tr[0].time_ps);
}

TEST_CASE("fixed seed gives a byte-identical serialized stream") {
  AttackScenario s;
  s.run = {4.0, 1.0, 77};
  const auto dir = std::filesystem::temp_directory_path() / "asymdelay_sim_test";
  std::filesystem::create_directories(dir);
  io::write_stream_binary(run_round_trip_sim(s), dir / "a.bin");
  io::write_stream_binary(run_round_trip_sim(s), dir / "b.bin");
  CHECK(slurp(dir / "a.bin") == slurp(dir / "b.bin"));
  CHECK(!slurp(dir / "a.bin").empty());
  std::filesystem::remove_all(dir);
}

TEST_CASE("derive_seed separates streams") {
  CHECK(derive_seed(1, 0) != derive_seed(1, 1));
  CHECK(derive_seed(1, 0) != derive_seed(2, 0));
  CHECK(derive_seed(5, 9) == derive_seed(5, 9));
}

TEST_CASE("config validation") {
  PhotonSimConfig c;
  c.channel.loss_survival_prob = 1.5;
  CHECK_THROWS_WITH_AS(c.validate(), doctest::Contains("loss_survival_prob"), ConfigError);
  c = {};
  c.detectors.signal_b.efficiency = -0.1;
  CHECK_THROWS_AS(c.validate(), ConfigError);
  c = {};
  c.tdc.resolution_ps = 0;
  CHECK_THROWS_AS(c.validate(), ConfigError);
  CHECK(detector_from_name("ReturnA") == DetectorId::ReturnA);
  CHECK(detector_from_name("1") == DetectorId::SignalB);
  CHECK_THROWS_AS(detector_from_name("D7"), ConfigError);
}
