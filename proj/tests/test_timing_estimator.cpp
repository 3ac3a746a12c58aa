#include <doctest.h>

#include <cmath>
#include <random>

#include "asymdelay/campaign.hpp"
#include "asymdelay/errors.hpp"
#include "asymdelay/timing_estimator.hpp"
#include "oracles.hpp"

using namespace asymdelay;

namespace {

CorrelationHistogram gaussian_histogram(double center, double sigma, std::size_t n, double bin,
                                        std::int64_t halfwidth, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> g(0.0, sigma);
  std::vector<std::int64_t> a(n);
  std::vector<std::int64_t> b(n);
  for (std::size_t i = 0; i < n; ++i) {
    a[i] = static_cast<std::int64_t>(i) * 1'000'000;
    b[i] = a[i] + std::llround(center + g(rng));
  }
  std::sort(b.begin(), b.end());
  return build_histogram(a, b, bin, std::llround(center), halfwidth);
}

// Expected per-epoch spread of delta from counting statistics: each peak's
// centroid has variance (lag variance)/(coincidences), and delta takes the
// loopback peak with weight 1/2.
double predicted_delta_sigma(const AttackScenario& s) {
  const auto& p = s.photon;
  const double det = p.detectors.idler_a.jitter_sigma_ps;
  const double tdc = p.tdc.jitter_sigma_ps;
  const double per_timestamp = det * det + tdc * tdc + 1.0 / 12.0;
  const double jit = p.source.intrinsic_correlation_jitter_ps;
  const double var_f = 2 * per_timestamp + jit * jit;
  const double var_r = var_f;
  const double r = p.source.pair_rate_hz * s.run.epoch_s;
  const double eta = p.detectors.idler_a.efficiency;
  const double surv = p.channel.loss_survival_prob;
  const double loop = p.channel.splitter_loopback_prob;
  const double n_f = r * eta * surv * (1 - loop) * eta;
  const double n_r = r * eta * surv * loop * surv * eta;
  return std::sqrt(var_f / n_f + 0.25 * var_r / n_r);
}

AttackScenario short_run(double duration, std::uint64_t seed) {
  AttackScenario s;
  s.run = {duration, 1.0, seed};
  return s;
}

}  // namespace

TEST_CASE("build_histogram examples") {
  const std::vector<std::int64_t> a{0};
  const std::vector<std::int64_t> b{1000};
  const auto h = build_histogram(a, b, 1.0, 1000, 500);
  REQUIRE(h.counts.size() == 1000);
  CHECK(h.total() == 1);
  CHECK(h.counts[500] == 1);
  CHECK(h.bin_value_ps(500) == 1000.0);

  const std::vector<std::int64_t> far{5'000'000};
  CHECK(build_histogram(a, far, 1.0, 1000, 500).total() == 0);

  const std::vector<std::int64_t> unsorted{5, 3};
  CHECK_THROWS_AS(build_histogram(unsorted, b, 1.0, 0, 10), ContractError);
  CHECK_THROWS_AS(build_histogram(a, b, 0.0, 0, 10), DomainError);
  CHECK_THROWS_AS(build_histogram(a, b, 1.0, 0, 0), DomainError);
}

TEST_CASE("build_histogram counts every pair in the window") {
  // Brute-force pair count over all (a, b) combinations.
  std::mt19937_64 rng(3);
  std::uniform_int_distribution<std::int64_t> u(0, 200000);
  std::vector<std::int64_t> a(400);
  std::vector<std::int64_t> b(400);
  for (auto& v : a) v = u(rng);
  for (auto& v : b) v = u(rng);
  std::sort(a.begin(), a.end());
  std::sort(b.begin(), b.end());
  const auto h = build_histogram(a, b, 7.0, 3000, 2000);
  std::vector<std::uint64_t> expect(h.counts.size(), 0);
  for (auto ta : a) {
    for (auto tb : b) {
      const double lag = static_cast<double>(tb - ta - 3000 + 2000);
      if (lag < 0) continue;
      const auto k = static_cast<std::size_t>(std::floor(lag / 7.0));
      if (k < expect.size()) ++expect[k];
    }
  }
  CHECK(h.counts == expect);
}

TEST_CASE("histogram is invariant under a global time shift") {
  std::mt19937_64 rng(4);
  std::uniform_int_distribution<std::int64_t> u(0, 1'000'000);
  std::vector<std::int64_t> a(2000);
  std::vector<std::int64_t> b(2000);
  for (auto& v : a) v = u(rng);
  for (auto& v : b) v = u(rng);
  std::sort(a.begin(), a.end());
  std::sort(b.begin(), b.end());
  const auto h1 = build_histogram(a, b, 4.0, 100, 2000);
  for (auto& v : a) v += 123'456'789;
  for (auto& v : b) v += 123'456'789;
  CHECK(build_histogram(a, b, 4.0, 100, 2000).counts == h1.counts);
}

TEST_CASE("Monte-Carlo histogram mean recovers the delay") {
  const double D = 5000.0;
  const double sigma = 50.0;
  const auto h = gaussian_histogram(D, sigma, 100000, 1.0, 500, 9);
  double sum = 0;
  double total = 0;
  for (std::size_t k = 0; k < h.counts.size(); ++k) {
    sum += h.counts[k] * h.bin_value_ps(k);
    total += h.counts[k];
  }
  CHECK(total == 100000);
  CHECK(std::abs(sum / total - D) <= 3 * sigma / std::sqrt(1e5));
}

TEST_CASE("estimate_peak") {
  SUBCASE("delta-like") {
    CorrelationHistogram h{4.0, 1000, 200, std::vector<std::uint64_t>(100, 0)};
    h.counts[37] = 400;
    const auto p = estimate_peak(h);
    CHECK(p.tau_ps == h.bin_value_ps(37));
    CHECK(p.uncertainty_ps <= 4.0 / std::sqrt(400.0));
    CHECK(p.peak_counts == 400);
  }
  SUBCASE("all zero") {
    CorrelationHistogram h{4.0, 0, 200, std::vector<std::uint64_t>(100, 0)};
    CHECK_THROWS_AS(estimate_peak(h), NoPeakError);
  }
  SUBCASE("flat background only") {
    CorrelationHistogram h{4.0, 0, 200, std::vector<std::uint64_t>(100, 50)};
    CHECK_THROWS_AS(estimate_peak(h), NoPeakError);
  }
  SUBCASE("gaussian 110 ps, 1e4 counts") {
    for (std::uint64_t seed = 1; seed <= 5; ++seed) {
      const double truth = 48990087.3;
      const auto h = gaussian_histogram(truth, 110.0, 10000, 4.0, 2000, seed);
      const auto p = estimate_peak(h);
      CHECK(std::abs(p.tau_ps - truth) <= 3 * 110.0 / std::sqrt(1e4));
      CHECK(p.uncertainty_ps == doctest::Approx(110.0 / 100.0).epsilon(0.15));
    }
  }
  SUBCASE("gaussian on a flat background") {
    auto h = gaussian_histogram(1000.0, 60.0, 20000, 4.0, 2000, 12);
    for (auto& c : h.counts) c += 30;
    const auto p = estimate_peak(h);
    CHECK(std::abs(p.tau_ps - 1000.0) <= 3.0);
    CHECK(p.background_per_bin == doctest::Approx(30.0).epsilon(0.05));
  }
}

TEST_CASE("clock_difference") {
  CHECK(clock_difference(1000, 2000) == 0);
  CHECK(clock_difference(1100, 2000) == 100);
}

TEST_CASE("noiseless stream: acquisition and estimates hit ground truth") {
  const double theta = -9913.0;
  AttackScenario s = short_run(6.0, 5);
  s.photon.source = {2e4, 0.0};
  s.photon.detectors = DetectorSet::uniform({1.0, 0.0, 0.0, 0.0});
  s.photon.tdc = {1.0, 0.0};
  s.photon.clocks.bob = {theta, 0, 0};
  const double L = s.photon.channel.one_way_delay_ps;
  const auto stream = run_round_trip_sim(s);

  AcquisitionParams acq;
  acq.nominal_one_way_ps = L;
  const auto c = coarse_acquire(stream, acq);
  CHECK(std::abs(c.forward_ps - (L + theta)) <= 1000);
  CHECK(std::abs(c.loopback_ps - 2 * L) <= 1000);

  const auto series = per_epoch_series(stream, 1.0, {}, acq);
  CHECK(series.points.size() == 6);
  for (const auto& p : series.points) {
    REQUIRE(!p.is_gap());
    CHECK(std::abs(p.tau_ab_ps - (L + theta)) <= 1.0);
    CHECK(std::abs(p.tau_aba_ps - 2 * L) <= 1.0);
    CHECK(std::abs(p.delta_ps - theta) <= 1.0);
  }
}

TEST_CASE("acquisition failure on an empty stream") {
  TimestampStream empty;
  empty.duration_s = 5;
  CHECK_THROWS_AS(coarse_acquire(empty, AcquisitionParams{}), AcquisitionError);
}

TEST_CASE("per_epoch_series: baseline spread matches counting statistics") {
  const auto s = short_run(100.0, 41);
  const auto stream = run_round_trip_sim(s);
  AcquisitionParams acq;
  const auto series = per_epoch_series(stream, 1.0, s.estimator.histogram, acq);
  REQUIRE(series.points.size() == 100);
  CHECK(series.gap_count() == 0);
  const auto d = series.deltas();
  const double predicted = predicted_delta_sigma(s);
  CHECK(predicted == doctest::Approx(0.78).epsilon(0.05));
  // Sample std of 100 values has ~7% relative error.
  CHECK(oracle::stddev(d) == doctest::Approx(predicted).epsilon(0.25));
  CHECK(std::abs(oracle::mean(d) - kDefaultBobOffsetPs) <= 3 * predicted / std::sqrt(100.0) + 0.1);
  for (const auto& p : series.points) CHECK(p.delta_ps == clock_difference(p.tau_ab_ps, p.tau_aba_ps));

  // The streamed pipeline gives the same numbers while holding three chunks.
  const auto streamed = simulate_series(s).series;
  REQUIRE(streamed.points.size() == series.points.size());
  for (std::size_t i = 0; i < series.points.size(); ++i) {
    CHECK(streamed.points[i].delta_ps == series.points[i].delta_ps);
    CHECK(streamed.points[i].tau_aba_ps == series.points[i].tau_aba_ps);
  }
}

TEST_CASE("per_epoch_series: jump shift, flat round trip, analytic bridge") {
  AttackScenario s = short_run(100.0, 42);
  s.m_events = {AttackEvent::jump(-100, 50)};
  const auto series = simulate_series(s).series;
  CHECK(std::abs(estimate_step_shift(series, 50) + 100) <= 3.0);

  const auto fit = loopback_trend(series);
  CHECK(std::abs(fit.slope) <= 3 * fit.slope_stderr);

  const double sigma = predicted_delta_sigma(s);
  std::size_t within = 0;
  for (const auto& p : series.points) {
    const double expect = analytic_prediction(s, p.epoch_start_s + 0.5);
    if (std::abs(p.delta_ps - expect) <= 3 * sigma) ++within;
  }
  CHECK(within >= 99);
}

TEST_CASE("per_epoch_series: failure modes") {
  AttackScenario s = short_run(5.0, 1);
  s.photon.detectors = DetectorSet::uniform({0.0, 10.0, 0.0, 0.0});
  CHECK_THROWS_AS(per_epoch_series(run_round_trip_sim(s), 1.0, {}, {}), EmptySeriesError);
  CHECK_THROWS_AS(simulate_series(s), EmptySeriesError);

  TimestampStream st;
  st.duration_s = 0.5;
  CHECK_THROWS_AS(per_epoch_series(st, 1.0, {}, {}), DomainError);
  CHECK(epoch_count(500, 1) == 500);
  CHECK(epoch_count(10, 3) == 3);
}

TEST_CASE("starved epochs become gaps instead of values") {
  AttackScenario s = short_run(40.0, 3);
  s.photon.source.pair_rate_hz = 30;  // a handful of coincidences per epoch
  const auto series = simulate_series(s).series;
  CHECK(series.gap_count() > 0);
  CHECK(series.gap_count() < series.points.size());
  for (const auto& p : series.points) {
    if (p.is_gap()) {
      CHECK(std::isnan(p.tau_ab_ps));
      CHECK(std::isnan(p.tau_aba_ps));
    }
  }
}
