#include "asymdelay/campaign.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cinttypes>
#include <cmath>
#include <cstdio>
#include <deque>
#include <exception>
#include <fstream>
#include <map>
#include <mutex>
#include <random>
#include <thread>

#include "asymdelay/errors.hpp"
#include "asymdelay/io.hpp"

namespace asymdelay {

namespace {

constexpr double kPsPerS = 1e12;

// Sub-stream reserved for analytic-mode noise, far from the per-chunk ids.
constexpr std::uint64_t kAnalyticStream = 0xA11A'7100'0000'0000ULL;

DetectorTracks concat(const std::deque<DetectorTracks>& chunks) {
  DetectorTracks out;
  for (std::size_t d = 0; d < kDetectorCount; ++d) {
    std::size_t total = 0;
    for (const auto& c : chunks) total += c[d].size();
    out[d].time_ps.reserve(total);
    out[d].pair_id.reserve(total);
    for (const auto& c : chunks) {
      out[d].time_ps.insert(out[d].time_ps.end(), c[d].time_ps.begin(), c[d].time_ps.end());
      out[d].pair_id.insert(out[d].pair_id.end(), c[d].pair_id.begin(), c[d].pair_id.end());
    }
  }
  return out;
}

AcquisitionParams acquisition_for(const AttackScenario& s) {
  AcquisitionParams p;
  p.nominal_one_way_ps = s.photon.channel.one_way_delay_ps;
  p.span_s = s.run.epoch_s;
  return p;
}

std::string fmt(const char* f, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, v);
  return buf;
}

std::string hex64(std::uint64_t v) {
  char buf[24];
  std::snprintf(buf, sizeof buf, "%016" PRIx64, v);
  return buf;
}

template <class F>
void parallel_for(std::size_t n, unsigned threads, F&& body) {
  if (threads == 0) threads = std::max(1u, std::thread::hardware_concurrency());
  threads = static_cast<unsigned>(std::min<std::size_t>(threads, n));
  std::atomic<std::size_t> next{0};
  std::exception_ptr first_error;
  std::mutex error_mutex;
  auto worker = [&] {
    for (std::size_t i = next++; i < n; i = next++) {
      try {
        body(i);
      } catch (...) {
        std::lock_guard lock(error_mutex);
        if (!first_error) first_error = std::current_exception();
      }
    }
  };
  if (threads <= 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (unsigned t = 0; t < threads; ++t) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
  }
  if (first_error) std::rethrow_exception(first_error);
}

}  // namespace

std::vector<Alarm> CampaignResult::alarms() const {
  std::vector<Alarm> all = threshold_alarms;
  all.insert(all.end(), drift_alarms.begin(), drift_alarms.end());
  std::stable_sort(all.begin(), all.end(),
                   [](const Alarm& a, const Alarm& b) { return a.epoch_start_s < b.epoch_start_s; });
  return all;
}

TimestampStream run_round_trip_sim(const AttackScenario& scenario) {
  scenario.validate();
  StreamGenerator gen(scenario.photon, scenario.m(), scenario.n(), scenario.run.duration_s,
                      scenario.run.epoch_s, scenario.run.seed);
  std::deque<DetectorTracks> chunks;
  while (!gen.done()) chunks.push_back(gen.next_chunk());
  return stream_from_tracks(concat(chunks), scenario.run.duration_s, scenario.run.seed,
                            config_hash(scenario));
}

SimulatedSeries simulate_series(const AttackScenario& scenario) {
  scenario.validate();
  if (scenario.mode != RunMode::FullSim) throw ConfigError("mode: simulate_series needs full_sim");
  const double epoch = scenario.run.epoch_s;
  const std::size_t epochs = epoch_count(scenario.run.duration_s, epoch);
  if (epochs == 0) throw DomainError("run is shorter than one epoch");
  StreamGenerator gen(scenario.photon, scenario.m(), scenario.n(), scenario.run.duration_s, epoch,
                      scenario.run.seed);
  const auto& hist = scenario.estimator.histogram;

  // Window of chunks [first, first + size) around the epoch being estimated.
  std::deque<DetectorTracks> window;
  std::size_t first = 0;
  auto load_through = [&](std::size_t k) {
    while (!gen.done() && first + window.size() <= k) window.push_back(gen.next_chunk());
  };

  load_through(1);
  SimulatedSeries out;
  {
    const auto tracks = concat(window);
    const auto times = DetectorTimes::of(tracks);
    if (times.idler_a.empty() || times.signal_b.empty() || times.return_a.empty()) {
      throw EmptySeriesError("no usable epochs: a detector recorded nothing");
    }
    out.centers = coarse_acquire(times, acquisition_for(scenario), hist);
  }

  out.series.epoch_length_s = epoch;
  out.series.points.reserve(epochs);
  for (std::size_t k = 0; k < epochs; ++k) {
    load_through(k + 1);
    while (first + 1 < k) {
      window.pop_front();
      ++first;
    }
    const auto tracks = concat(window);
    out.series.points.push_back(estimate_epoch(DetectorTimes::of(tracks), static_cast<double>(k) * epoch,
                                               epoch, out.centers, hist));
  }
  if (out.series.gap_count() == out.series.points.size()) {
    throw EmptySeriesError("no usable epochs: every epoch failed peak estimation");
  }
  return out;
}

double analytic_prediction(const AttackScenario& scenario, double t_s) {
  // Offset and drift terms only; subtracting two absolute readings would
  // cancel ~1e15 ps and lose sub-ps precision late in a run.
  const auto& a = scenario.photon.clocks.alice;
  const auto& b = scenario.photon.clocks.bob;
  const double base = (b.offset_ps - a.offset_ps) + (b.drift_ps_per_s - a.drift_ps_per_s) * t_s;
  return tampered_clock_difference(base, eval_trajectory(scenario.m(), t_s),
                                   eval_trajectory(scenario.n(), t_s), QcsScheme::of(scenario.scheme));
}

ClockDifferenceSeries analytic_series(const AttackScenario& scenario) {
  scenario.validate();
  const double epoch = scenario.run.epoch_s;
  const std::size_t epochs = epoch_count(scenario.run.duration_s, epoch);
  if (epochs == 0) throw DomainError("run is shorter than one epoch");
  std::mt19937_64 rng(derive_seed(scenario.run.seed, kAnalyticStream));
  std::normal_distribution<double> noise(0.0, 1.0);
  const auto m = scenario.m();
  const auto n = scenario.n();
  const auto scheme = QcsScheme::of(scenario.scheme);
  const double L = scenario.photon.channel.one_way_delay_ps;
  const double sigma = scenario.analytic.noise_sigma_ps;

  ClockDifferenceSeries series;
  series.epoch_length_s = epoch;
  series.points.reserve(epochs);
  for (std::size_t k = 0; k < epochs; ++k) {
    const double start = static_cast<double>(k) * epoch;
    const double mid = start + 0.5 * epoch;
    const double m_ps = eval_trajectory(m, mid);
    const double n_ps = eval_trajectory(n, mid);
    ClockDifferencePoint p;
    p.epoch_start_s = start;
    p.delta_ps = tampered_clock_difference(scenario.analytic.baseline_delta_ps + sigma * noise(rng), m_ps,
                                           n_ps, scheme);
    p.tau_aba_ps = 2.0 * L + m_ps + n_ps;
    p.tau_ab_ps = p.delta_ps + 0.5 * p.tau_aba_ps;
    p.delta_uncertainty_ps = sigma;
    series.points.push_back(p);
  }
  return series;
}

CampaignResult run_scenario(const AttackScenario& scenario) {
  const auto t0 = std::chrono::steady_clock::now();
  CampaignResult r;
  r.scenario = scenario;
  if (scenario.mode == RunMode::FullSim) {
    auto sim = simulate_series(scenario);
    r.series = std::move(sim.series);
    r.meta.centers = sim.centers;
  } else {
    r.series = analytic_series(scenario);
  }
  r.meta.seed = scenario.run.seed;
  r.meta.config_hash = config_hash(scenario);
  r.meta.epochs = r.series.points.size();
  r.meta.gaps = r.series.gap_count();
  if (r.series.gap_fraction() > kMaxGapFraction) {
    throw GapError(std::to_string(r.meta.gaps) + " of " + std::to_string(r.meta.epochs) +
                   " epochs are gaps, above the tolerated " + fmt("%.0f", kMaxGapFraction * 100) + "%");
  }

  const auto deltas = r.series.deltas();
  if (deltas.size() >= 4) {
    const auto grid = default_m_grid(deltas.size());
    r.tdev = tdev(deltas, r.series.epoch_length_s, grid);
  } else {
    r.tdev.tau0_s = r.series.epoch_length_s;
  }

  const int window = scenario.detection.baseline_window_epochs;
  if (deltas.size() > static_cast<std::size_t>(window)) {
    ThresholdConfig tc;
    tc.baseline_window_epochs = window;
    tc.threshold_ps = scenario.detection.threshold_ps.value_or(4.0 * baseline_stats(r.series, window).second);
    if (tc.threshold_ps > 0.0) {
      r.meta.threshold_ps = tc.threshold_ps;
      r.threshold_alarms = threshold_monitor(r.series, tc);
    }
  }
  r.drift_alarms = cusum_drift(r.series, scenario.detection.cusum);

  const auto onset = scenario.attack_onset();
  const double span_start = r.series.points.front().epoch_start_s;
  const double span_end = r.series.points.back().epoch_start_s + r.series.epoch_length_s;
  if (onset && *onset >= span_start && *onset <= span_end) {
    if (r.meta.threshold_ps) r.threshold_score = score(r.threshold_alarms, *onset, span_start, span_end);
    r.drift_score = score(r.drift_alarms, *onset, span_start, span_end);
  }
  r.meta.wall_time_s = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return r;
}

nlohmann::json metadata_json(const CampaignResult& r) {
  nlohmann::json j;
  j["tool"] = kToolName;
  j["tool_version"] = kToolVersion;
  j["scenario"] = r.scenario.name;
  j["seed"] = r.meta.seed;
  j["config_hash"] = hex64(r.meta.config_hash);
  j["mode"] = run_mode_name(r.scenario.mode);
  j["reference_ps"] = r.scenario.reference_ps;
  j["epochs"] = r.meta.epochs;
  j["gap_epochs"] = r.meta.gaps;
  j["wall_time_s"] = r.meta.wall_time_s;
  if (r.meta.centers) {
    j["acquired_centers_ps"] = {{"forward", r.meta.centers->forward_ps},
                                {"loopback", r.meta.centers->loopback_ps}};
  }
  j["threshold_ps"] = r.meta.threshold_ps ? nlohmann::json(*r.meta.threshold_ps) : nlohmann::json(nullptr);
  j["detector_note"] = "detection figures of merit are this tool's own, not taken from the source experiment";
  j["resolved_scenario"] = to_json(r.scenario);
  return j;
}

void write_run_outputs(const CampaignResult& r, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  io::write_series_csv(r.series, dir / "series.csv", r.scenario.reference_ps);
  io::write_tdev_csv(r.tdev, dir / "tdev.csv");
  io::write_alarms_csv(r.alarms(), dir / "alarms.csv");
  io::write_text(dir / "meta.json", metadata_json(r).dump(2) + "\n");
  if (r.drift_score) {
    nlohmann::json s;
    s["attack_onset_s"] = *r.scenario.attack_onset();
    s["threshold"] = r.threshold_score ? io::to_json(*r.threshold_score) : nlohmann::json(nullptr);
    s["drift"] = io::to_json(*r.drift_score);
    io::write_text(dir / "score.json", s.dump(2) + "\n");
  }
}

LinearFit linear_fit(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size()) throw DomainError("linear_fit: x and y differ in length");
  const std::size_t n = x.size();
  if (n < 3) throw DomainError("linear_fit: needs at least 3 points");
  double mx = 0.0;
  double my = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    mx += x[i];
    my += y[i];
  }
  mx /= static_cast<double>(n);
  my /= static_cast<double>(n);
  double sxx = 0.0;
  double sxy = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    sxx += (x[i] - mx) * (x[i] - mx);
    sxy += (x[i] - mx) * (y[i] - my);
  }
  if (!(sxx > 0.0)) throw DomainError("linear_fit: x has no spread");
  LinearFit f;
  f.slope = sxy / sxx;
  f.intercept = my - f.slope * mx;
  double rss = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double e = y[i] - (f.intercept + f.slope * x[i]);
    rss += e * e;
  }
  f.slope_stderr = std::sqrt(rss / static_cast<double>(n - 2) / sxx);
  return f;
}

LinearFit loopback_trend(const ClockDifferenceSeries& series) {
  const auto x = series.epoch_starts();
  const auto y = series.loopback_taus();
  return linear_fit(x, y);
}

std::vector<double> quiet_deltas(const ClockDifferenceSeries& series, std::span<const double> exclude_s) {
  std::vector<double> out;
  for (const auto& p : series.points) {
    if (p.is_gap()) continue;
    const bool near = std::any_of(exclude_s.begin(), exclude_s.end(), [&](double t) {
      return std::abs(p.epoch_start_s - t) <= series.epoch_length_s;
    });
    if (!near) out.push_back(p.delta_ps);
  }
  return out;
}

double median(std::vector<double> v) {
  if (v.empty()) throw DomainError("median of an empty sample");
  const auto mid = v.begin() + static_cast<std::ptrdiff_t>(v.size() / 2);
  std::nth_element(v.begin(), mid, v.end());
  if (v.size() % 2 == 1) return *mid;
  const double upper = *mid;
  const double lower = *std::max_element(v.begin(), mid);
  return 0.5 * (lower + upper);
}

double sample_std(std::span<const double> v) {
  if (v.size() < 2) throw DomainError("sample_std needs at least 2 values");
  double mean = 0.0;
  for (double x : v) mean += x;
  mean /= static_cast<double>(v.size());
  double ss = 0.0;
  for (double x : v) ss += (x - mean) * (x - mean);
  return std::sqrt(ss / static_cast<double>(v.size() - 1));
}

std::vector<Excursion> find_excursions(const ClockDifferenceSeries& series, double threshold_ps) {
  const double mid = median(series.deltas());
  std::vector<Excursion> out;
  for (const auto& p : series.points) {
    if (!p.is_gap() && std::abs(p.delta_ps - mid) > threshold_ps) {
      out.push_back({p.epoch_start_s, p.delta_ps - mid});
    }
  }
  return out;
}

std::vector<std::string> figure_ids() { return {"fig2", "fig3", "fig4", "fig5"}; }

std::vector<std::string> figure_scenarios(const std::string& figure) {
  if (figure == "fig2") return {"baseline_long", "jump_-100ps_long", "spikes", "gradual_attack2"};
  if (figure == "fig3") {
    return {"jump_0ps", "jump_-10ps", "jump_-50ps", "jump_-100ps", "jump_-200ps", "jump_-500ps"};
  }
  if (figure == "fig4") return {"spikes", "baseline_long"};
  if (figure == "fig5") return {"baseline_long", "gradual_attack1", "gradual_attack2"};
  throw ConfigError("unknown figure '" + figure + "' (expected fig2, fig3, fig4 or fig5)");
}

void apply_overrides(AttackScenario& s, const ReproduceOptions& o) {
  if (o.seed) s.run.seed = *o.seed;
  if (o.mode) s.mode = *o.mode;
  if (o.epoch_s) s.run.epoch_s = *o.epoch_s;
}

namespace {

void write_tdev_overlay(const std::vector<CampaignResult>& results, const std::filesystem::path& path) {
  std::map<double, std::map<std::size_t, double>> rows;
  for (std::size_t i = 0; i < results.size(); ++i) {
    for (const auto& p : results[i].tdev.points) rows[p.tau_s][i] = p.tdev_ps;
  }
  std::string text = "tau_s";
  for (const auto& r : results) text += "," + r.scenario.name + "_tdev_ps";
  text += "\n";
  for (const auto& [tau, cols] : rows) {
    text += fmt("%.6f", tau);
    for (std::size_t i = 0; i < results.size(); ++i) {
      text += ",";
      if (auto it = cols.find(i); it != cols.end()) text += fmt("%.9g", it->second);
    }
    text += "\n";
  }
  io::write_text(path, text);
}

void write_step_shifts(const std::vector<CampaignResult>& results, const std::filesystem::path& path) {
  std::string text =
      "scenario,injected_ps,onset_s,step_shift_ps,loopback_slope_ps_per_s,loopback_slope_stderr_ps_per_s\n";
  for (const auto& r : results) {
    const double injected = r.scenario.m_events.empty() ? 0.0 : r.scenario.m_events.front().amplitude_ps;
    const double onset = r.scenario.attack_onset().value_or(0.5 * r.scenario.run.duration_s);
    const auto fit = loopback_trend(r.series);
    text += r.scenario.name + "," + fmt("%.4f", injected) + "," + fmt("%.6f", onset) + "," +
            fmt("%.4f", estimate_step_shift(r.series, onset)) + "," + fmt("%.9g", fit.slope) + "," +
            fmt("%.9g", fit.slope_stderr) + "\n";
  }
  io::write_text(path, text);
}

void write_spike_table(const CampaignResult& r, const std::filesystem::path& path) {
  const double mid = median(r.series.deltas());
  std::string text = "onset_s,injected_ps,excursion_ps\n";
  for (const auto& e : r.scenario.m_events) {
    const auto k = static_cast<std::size_t>(std::floor(e.start_s / r.series.epoch_length_s + 1e-9));
    std::string excursion;
    if (k < r.series.points.size() && !r.series.points[k].is_gap()) {
      excursion = fmt("%.4f", r.series.points[k].delta_ps - mid);
    }
    text += fmt("%.6f", e.start_s) + "," + fmt("%.4f", e.amplitude_ps) + "," + excursion + "\n";
  }
  io::write_text(path, text);
}

}  // namespace

std::vector<CampaignResult> reproduce(const std::string& figure, const std::filesystem::path& out_dir,
                                      const ReproduceOptions& options) {
  const auto names = figure_scenarios(figure);
  std::vector<AttackScenario> scenarios;
  for (const auto& name : names) {
    auto s = builtin_scenario(name);
    apply_overrides(s, options);
    s.validate();
    scenarios.push_back(std::move(s));
  }
  std::vector<CampaignResult> results(scenarios.size());
  parallel_for(scenarios.size(), options.threads, [&](std::size_t i) {
    results[i] = run_scenario(scenarios[i]);
    write_run_outputs(results[i], out_dir / figure / scenarios[i].name);
  });

  const auto dir = out_dir / figure;
  if (figure == "fig2") write_tdev_overlay(results, dir / "fig2_tdev_overlay.csv");
  if (figure == "fig3") write_step_shifts(results, dir / "fig3_step_shifts.csv");
  if (figure == "fig4") {
    write_spike_table(results.front(), dir / "fig4_spikes.csv");
    write_tdev_overlay(results, dir / "fig4_tdev.csv");
  }
  if (figure == "fig5") write_tdev_overlay(results, dir / "fig5_tdev.csv");
  return results;
}

}  // namespace asymdelay
