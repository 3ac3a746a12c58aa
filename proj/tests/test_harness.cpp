#include <doctest.h>

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <sstream>

#include "asymdelay/campaign.hpp"
#include "asymdelay/errors.hpp"
#include "asymdelay/io.hpp"
#include "asymdelay/scenario.hpp"
#include "oracles.hpp"

using namespace asymdelay;
namespace fs = std::filesystem;
using nlohmann::json;

namespace {

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), {}};
}

bool any_contains(const std::vector<std::string>& issues, const std::string& needle) {
  return std::any_of(issues.begin(), issues.end(),
                     [&](const std::string& s) { return s.find(needle) != std::string::npos; });
}

json minimal() {
  return json{{"schema_version", 1}, {"name", "t"}, {"mode", "analytic"}, {"run", {{"duration_s", 100.0}}}};
}

struct TempDir {
  fs::path path;
  explicit TempDir(const std::string& name) : path(fs::temp_directory_path() / name) {
    fs::remove_all(path);
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
};

}  // namespace

TEST_CASE("every builtin validates and round-trips through JSON") {
  const auto names = builtin_names();
  CHECK(names.size() == 12);
  for (const auto& name : names) {
    CAPTURE(name);
    const auto s = builtin_scenario(name);
    CHECK_NOTHROW(s.validate());
    const auto doc = to_json(s);
    CHECK(validate_scenario(doc).empty());
    const auto back = parse_scenario(doc);
    CHECK(to_json(back) == doc);
    CHECK(config_hash(back) == config_hash(s));
  }
  CHECK_THROWS_AS(builtin_scenario("nope"), ConfigError);
}

TEST_CASE("config hash tracks content") {
  auto a = builtin_scenario("jump_-100ps");
  auto b = a;
  b.run.seed += 1;
  CHECK(config_hash(a) != config_hash(b));
  CHECK(config_hash(a) == config_hash(builtin_scenario("jump_-100ps")));
}

TEST_CASE("schema errors name the field path") {
  auto doc = minimal();
  CHECK(validate_scenario(doc).empty());

  doc["m_events"] = json::array({{{"pattern", "spike"}, {"amplitude_ps", -100.0}, {"start_s", 10.0},
                                  {"width_s", 0.0}}});
  const auto issues = validate_scenario(doc);
  REQUIRE(!issues.empty());
  CHECK(any_contains(issues, "m_events[0].width_s"));

  doc = minimal();
  doc["m_events"] = json::array({{{"pattern", "jump"}, {"amplitude_ps", -10.0}, {"start_s", 1.0}}});
  doc["n_events"] = json::array({{{"pattern", "jump"}, {"amplitude_ps", 10.0}, {"start_s", 1.0}}});
  CHECK(any_contains(validate_scenario(doc), "n_events: conflicts"));
  doc["coordination"] = {{"mode", "independent"}};
  CHECK(validate_scenario(doc).empty());

  doc = minimal();
  doc["run"]["bogus_s"] = 1;
  CHECK(any_contains(validate_scenario(doc), "run.bogus_s: unknown field"));

  doc = minimal();
  doc.erase("schema_version");
  CHECK(any_contains(validate_scenario(doc), "schema_version: required"));

  doc = minimal();
  doc["run"]["duration_s"] = "long";
  CHECK(any_contains(validate_scenario(doc), "run.duration_s: expected a number"));

  doc = minimal();
  doc["m_events"] = json::array({{{"pattern", "gradual"}, {"amplitude_ps", -2.0}, {"start_s", 1.0},
                                  {"behavior", {{"kind", "linear"}, {"rate_per_s", 0.1}}}, {"width_s", 1.0}}});
  CHECK(any_contains(validate_scenario(doc), "m_events[0].width_s"));

  CHECK_THROWS_AS(parse_scenario(json::array()), ScenarioError);
}

TEST_CASE("scenario files") {
  TempDir dir("asymdelay_harness_files");
  io::write_text(dir.path / "bad.json", "{ not json");
  const auto syntax = validate_scenario_file(dir.path / "bad.json");
  REQUIRE(syntax.size() == 1);
  CHECK(syntax.front().find("malformed JSON") != std::string::npos);
  CHECK_THROWS_AS(load_scenario(dir.path / "bad.json"), ScenarioError);
  CHECK_THROWS_AS(validate_scenario_file(dir.path / "missing.json"), ConfigError);

  const auto s = builtin_scenario("spikes");
  io::write_text(dir.path / "spikes.json", to_json(s).dump(2));
  CHECK(validate_scenario_file(dir.path / "spikes.json").empty());
  CHECK(config_hash(load_scenario(dir.path / "spikes.json")) == config_hash(s));
  CHECK(config_hash(resolve_scenario((dir.path / "spikes.json").string())) == config_hash(s));
}

TEST_CASE("analytic jump recovers the injected step") {
  auto s = builtin_scenario("jump_-100ps");
  s.mode = RunMode::Analytic;
  const auto r = run_scenario(s);
  CHECK(r.series.points.size() == 500);
  CHECK(r.meta.gaps == 0);
  CHECK(std::abs(estimate_step_shift(r.series, *s.attack_onset()) + 100.0) <= 3.0);
  // Round trip is untouched under N = -M.
  CHECK(loopback_trend(r.series).slope == doctest::Approx(0.0));
  for (const auto& p : r.series.points) {
    CHECK(std::abs(p.tau_ab_ps - (p.delta_ps + p.tau_aba_ps / 2)) < 1e-6);
  }
}

TEST_CASE("baseline TDEV decreases over the octave grid") {
  const auto r = run_scenario(builtin_scenario("baseline"));
  REQUIRE(r.tdev.points.size() >= 5);
  for (std::size_t i = 1; i < r.tdev.points.size(); ++i) {
    CHECK(r.tdev.points[i].tdev_ps < r.tdev.points[i - 1].tdev_ps);
  }
  REQUIRE(r.meta.centers);
  CHECK(r.meta.gaps == 0);
  CHECK(!r.threshold_score);  // no attack, no onset
}

TEST_CASE("analytic prediction matches the tampering algebra") {
  auto s = builtin_scenario("gradual_attack2");
  const double base = analytic_prediction(s, 0.0);
  for (double t : {0.0, 100.0, 900.0, 2100.0, 3599.0}) {
    const double m = s.m().at(t);
    const double n = s.n().at(t);
    CHECK(analytic_prediction(s, t) == doctest::Approx(base - (-m + n) / 2).epsilon(1e-15));
  }
}

TEST_CASE("same scenario and seed give byte-identical outputs") {
  TempDir dir("asymdelay_harness_det");
  auto s = builtin_scenario("jump_-50ps");
  s.run.duration_s = 120.0;
  s.detection.attack_onset_s = 50.0;
  write_run_outputs(run_scenario(s), dir.path / "a");
  write_run_outputs(run_scenario(s), dir.path / "b");
  for (const char* f : {"series.csv", "tdev.csv", "alarms.csv", "score.json"}) {
    CAPTURE(f);
    CHECK(!slurp(dir.path / "a" / f).empty());
    CHECK(slurp(dir.path / "a" / f) == slurp(dir.path / "b" / f));
  }
  const auto meta = json::parse(slurp(dir.path / "a" / "meta.json"));
  CHECK(meta["seed"] == s.run.seed);
  CHECK(meta["tool_version"] == kToolVersion);
  CHECK(meta["reference_ps"] == s.reference_ps);

  s.run.seed += 1;
  write_run_outputs(run_scenario(s), dir.path / "c");
  CHECK(slurp(dir.path / "a" / "series.csv") != slurp(dir.path / "c" / "series.csv"));
}

TEST_CASE("series and stream IO round trips") {
  TempDir dir("asymdelay_harness_io");
  auto s = builtin_scenario("spikes");
  s.mode = RunMode::Analytic;
  s.run.duration_s = 400.0;
  auto r = run_scenario(s);
  r.series.points[7] = ClockDifferencePoint::gap(r.series.points[7].epoch_start_s);
  io::write_series_csv(r.series, dir.path / "series.csv", s.reference_ps);
  const auto back = io::read_series_csv(dir.path / "series.csv");
  REQUIRE(back.points.size() == r.series.points.size());
  CHECK(back.epoch_length_s == 1.0);
  CHECK(back.gap_count() == 1);
  for (std::size_t i = 0; i < back.points.size(); ++i) {
    if (i == 7) continue;
    CHECK(std::abs(back.points[i].delta_ps - r.series.points[i].delta_ps) <= 5e-5);
  }
  const auto text = slurp(dir.path / "series.csv");
  CHECK(text.rfind("epoch_start_s,tau_ab_ps,tau_aba_ps,delta_ps,delta_rezeroed_ps\n", 0) == 0);

  AttackScenario small;
  small.run = {4.0, 1.0, 3};
  const auto stream = run_round_trip_sim(small);
  io::write_stream_binary(stream, dir.path / "s.bin");
  const auto b = io::read_stream_binary(dir.path / "s.bin");
  REQUIRE(b.records.size() == stream.records.size());
  CHECK(b.seed == stream.seed);
  for (std::size_t i = 0; i < b.records.size(); ++i) {
    REQUIRE(b.records[i].time_ps == stream.records[i].time_ps);
    REQUIRE(b.records[i].detector == stream.records[i].detector);
  }
  io::write_stream_csv(stream, dir.path / "s.csv");
  const auto c = io::read_stream_csv(dir.path / "s.csv");
  REQUIRE(c.records.size() == stream.records.size());
  CHECK(c.records.back().time_ps == stream.records.back().time_ps);
  CHECK(c.records.front().true_pair_id == kNoPair);

  io::write_text(dir.path / "junk.bin", "nope");
  CHECK_THROWS_AS(io::read_stream_binary(dir.path / "junk.bin"), ConfigError);
}

TEST_CASE("starved sources fail with distinct errors") {
  auto s = builtin_scenario("baseline");
  s.run.duration_s = 60.0;
  s.photon.source.pair_rate_hz = 20.0;  // a few epochs lose their peak
  CHECK_THROWS_AS(run_scenario(s), GapError);
  s.photon.source.pair_rate_hz = 10.0;  // too few loopback pairs to acquire at all
  CHECK_THROWS_AS(run_scenario(s), AcquisitionError);
}

TEST_CASE("statistics helpers") {
  const std::vector<double> x{0, 1, 2, 3, 4};
  const std::vector<double> y{1, 3, 5, 7, 9};
  const auto fit = linear_fit(x, y);
  CHECK(fit.slope == doctest::Approx(2.0));
  CHECK(fit.intercept == doctest::Approx(1.0));
  CHECK(fit.slope_stderr == doctest::Approx(0.0));
  CHECK_THROWS_AS(linear_fit(std::span(x).first(2), std::span(y).first(2)), DomainError);
  CHECK(median({3, 1, 2}) == 2.0);
  CHECK(median({4, 1, 2, 3}) == 2.5);
  CHECK(sample_std(x) == doctest::Approx(oracle::stddev(x)));
}

TEST_CASE("figure bundles") {
  CHECK(figure_ids() == std::vector<std::string>{"fig2", "fig3", "fig4", "fig5"});
  CHECK(figure_scenarios("fig3").size() == 6);
  CHECK_THROWS_AS(figure_scenarios("fig9"), ConfigError);

  TempDir dir("asymdelay_harness_fig");
  ReproduceOptions o;
  o.mode = RunMode::Analytic;
  const auto results = reproduce("fig3", dir.path, o);
  REQUIRE(results.size() == 6);
  CHECK(fs::exists(dir.path / "fig3" / "fig3_step_shifts.csv"));
  for (const auto& r : results) CHECK(fs::exists(dir.path / "fig3" / r.scenario.name / "series.csv"));
}
