// asymdelay command-line tool: run scenarios, reproduce figure bundles,
// validate scenario files and post-process series CSVs.

#include <cstdio>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "asymdelay/campaign.hpp"
#include "asymdelay/errors.hpp"
#include "asymdelay/io.hpp"
#include "asymdelay/scenario.hpp"
#include "asymdelay/stability.hpp"

namespace fs = std::filesystem;
using namespace asymdelay;

namespace {

struct Overrides {
  std::optional<std::uint64_t> seed;
  std::optional<std::string> mode;
  std::optional<double> epoch_s;

  ReproduceOptions options() const {
    ReproduceOptions o;
    o.seed = seed;
    if (mode) o.mode = run_mode_from_name(*mode);
    o.epoch_s = epoch_s;
    return o;
  }
};

void add_overrides(CLI::App* cmd, Overrides& o) {
  cmd->add_option("--seed", o.seed, "Master RNG seed");
  cmd->add_option("--mode", o.mode, "full_sim or analytic")->check(CLI::IsMember({"full_sim", "analytic"}));
  cmd->add_option("--epoch-s", o.epoch_s, "Epoch length in seconds");
}

void print_summary(const CampaignResult& r, const fs::path& dir) {
  std::printf("%s: %zu epochs (%zu gaps), mode %s, seed %llu -> %s\n", r.scenario.name.c_str(),
              r.meta.epochs, r.meta.gaps, run_mode_name(r.scenario.mode),
              static_cast<unsigned long long>(r.meta.seed), dir.string().c_str());
  if (r.threshold_score) {
    std::printf("  threshold: detected=%s false_alarms=%d\n", r.threshold_score->detected ? "yes" : "no",
                r.threshold_score->false_alarms);
  }
  if (r.drift_score) {
    std::printf("  drift:     detected=%s false_alarms=%d\n", r.drift_score->detected ? "yes" : "no",
                r.drift_score->false_alarms);
  }
}

int cmd_run(const std::string& target, const Overrides& o, const fs::path& out_dir,
            const std::optional<fs::path>& stream_out) {
  auto s = resolve_scenario(target);
  apply_overrides(s, o.options());
  s.validate();
  if (stream_out) {
    if (s.mode != RunMode::FullSim) throw ConfigError("--stream-out: requires full_sim mode");
    const auto stream = run_round_trip_sim(s);
    if (stream_out->extension() == ".csv") {
      io::write_stream_csv(stream, *stream_out);
    } else {
      io::write_stream_binary(stream, *stream_out);
    }
  }
  const auto r = run_scenario(s);
  const auto dir = out_dir / s.name;
  write_run_outputs(r, dir);
  print_summary(r, dir);
  return 0;
}

int cmd_reproduce(const std::string& figure, const Overrides& o, const fs::path& out_dir, unsigned threads) {
  auto opts = o.options();
  opts.threads = threads;
  const auto results = reproduce(figure, out_dir, opts);
  for (const auto& r : results) print_summary(r, out_dir / figure / r.scenario.name);
  return 0;
}

int cmd_validate(const std::string& target) {
  if (is_builtin(target) && !fs::exists(target)) {
    builtin_scenario(target).validate();
    std::printf("%s: ok (builtin)\n", target.c_str());
    return 0;
  }
  const auto issues = validate_scenario_file(target);
  if (issues.empty()) {
    std::printf("%s: ok\n", target.c_str());
    return 0;
  }
  for (const auto& issue : issues) std::fprintf(stderr, "%s: %s\n", target.c_str(), issue.c_str());
  return static_cast<int>(ExitCode::Config);
}

int cmd_tdev(const fs::path& series_path, double epoch_s, const std::optional<fs::path>& out) {
  const auto series = io::read_series_csv(series_path, epoch_s);
  if (series.gap_count() > 0) {
    throw GapError(std::to_string(series.gap_count()) + " gap epochs in '" + series_path.string() +
                   "'; TDEV needs an evenly spaced gap-free series");
  }
  const auto grid = default_m_grid(series.points.size());
  const auto curve = tdev(series, grid);
  if (out) {
    io::write_tdev_csv(curve, *out);
  } else {
    io::write_tdev_csv(curve, std::cout);
  }
  return 0;
}

struct DetectArgs {
  int window = 60;
  std::optional<double> threshold_ps;
  double cusum_k = CusumConfig{}.reference_drift_ps;
  double cusum_h = CusumConfig{}.decision_limit_ps;
  std::optional<double> onset_s;
  double epoch_s = 0.0;
  std::optional<fs::path> out_dir;
};

int cmd_detect(const fs::path& series_path, const DetectArgs& a) {
  const auto series = io::read_series_csv(series_path, a.epoch_s);
  ThresholdConfig tc;
  tc.baseline_window_epochs = a.window;
  tc.threshold_ps = a.threshold_ps.value_or(4.0 * baseline_stats(series, a.window).second);
  const auto thr = threshold_monitor(series, tc);
  const auto drift = cusum_drift(series, {a.cusum_k, a.cusum_h});

  std::vector<Alarm> all = thr;
  all.insert(all.end(), drift.begin(), drift.end());
  std::stable_sort(all.begin(), all.end(),
                   [](const Alarm& x, const Alarm& y) { return x.epoch_start_s < y.epoch_start_s; });

  nlohmann::json report;
  report["threshold_ps"] = tc.threshold_ps;
  report["threshold_alarms"] = thr.size();
  report["drift_alarms"] = drift.size();
  if (a.onset_s) {
    const double start = series.points.front().epoch_start_s;
    const double end = series.points.back().epoch_start_s + series.epoch_length_s;
    report["attack_onset_s"] = *a.onset_s;
    report["threshold"] = io::to_json(score(thr, *a.onset_s, start, end));
    report["drift"] = io::to_json(score(drift, *a.onset_s, start, end));
  }
  if (a.out_dir) {
    io::write_alarms_csv(all, *a.out_dir / "alarms.csv");
    io::write_text(*a.out_dir / "score.json", report.dump(2) + "\n");
  } else {
    io::write_alarms_csv(all, std::cout);
  }
  std::fprintf(stderr, "%s\n", report.dump().c_str());
  return 0;
}

int cmd_scenarios(const std::optional<fs::path>& dump_dir) {
  for (const auto& name : builtin_names()) {
    const auto s = builtin_scenario(name);
    std::printf("%-18s %6.0f s  %s\n", name.c_str(), s.run.duration_s, s.comment.c_str());
    if (dump_dir) io::write_text(*dump_dir / (name + ".json"), to_json(s).dump(2) + "\n");
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Asymmetric delay attack simulator and analysis toolkit for quantum clock synchronization"};
  app.set_version_flag("--version", kToolVersion);
  app.require_subcommand(1);

  Overrides overrides;
  fs::path out_dir = "runs";

  auto* run = app.add_subcommand("run", "Run one scenario (builtin name or JSON file)");
  std::string run_target;
  std::optional<fs::path> stream_out;
  run->add_option("scenario", run_target, "Builtin name or scenario file")->required();
  add_overrides(run, overrides);
  run->add_option("--out-dir", out_dir, "Output root; the run goes to <out-dir>/<name>");
  run->add_option("--stream-out", stream_out, "Also write the raw timestamp stream (.bin or .csv)");

  auto* rep = app.add_subcommand("reproduce", "Run a figure bundle: fig2, fig3, fig4 or fig5");
  std::string figure;
  unsigned threads = 0;
  rep->add_option("figure", figure, "Figure id")->required();
  add_overrides(rep, overrides);
  rep->add_option("--out-dir", out_dir, "Output root; the bundle goes to <out-dir>/<figure>");
  rep->add_option("--threads", threads, "Worker threads (0 = all cores)");

  auto* val = app.add_subcommand("validate", "Validate a scenario file without running it");
  std::string val_target;
  val->add_option("scenario", val_target, "Scenario file or builtin name")->required();

  auto* td = app.add_subcommand("tdev", "Recompute TDEV from a series CSV");
  fs::path td_series;
  double td_epoch = 0.0;
  std::optional<fs::path> td_out;
  td->add_option("series", td_series, "series.csv")->required()->check(CLI::ExistingFile);
  td->add_option("--epoch-s", td_epoch, "Epoch length (default: inferred from the CSV)");
  td->add_option("-o,--out", td_out, "Output CSV (default: stdout)");

  auto* det = app.add_subcommand("detect", "Apply the threshold and CUSUM detectors to a series CSV");
  fs::path det_series;
  DetectArgs det_args;
  det->add_option("series", det_series, "series.csv")->required()->check(CLI::ExistingFile);
  det->add_option("--window", det_args.window, "Baseline window in epochs");
  det->add_option("--threshold-ps", det_args.threshold_ps, "Threshold (default: 4x baseline std)");
  det->add_option("--cusum-k", det_args.cusum_k, "CUSUM reference drift per epoch (ps)");
  det->add_option("--cusum-h", det_args.cusum_h, "CUSUM decision limit (ps)");
  det->add_option("--onset-s", det_args.onset_s, "Attack onset for scoring");
  det->add_option("--epoch-s", det_args.epoch_s, "Epoch length (default: inferred)");
  det->add_option("--out-dir", det_args.out_dir, "Write alarms.csv and score.json here");

  auto* sc = app.add_subcommand("scenarios", "List builtin scenarios");
  std::optional<fs::path> dump_dir;
  sc->add_option("--dump", dump_dir, "Write each builtin as resolved JSON into this directory");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : static_cast<int>(ExitCode::Config);
  }

  try {
    if (*run) return cmd_run(run_target, overrides, out_dir, stream_out);
    if (*rep) return cmd_reproduce(figure, overrides, out_dir, threads);
    if (*val) return cmd_validate(val_target);
    if (*td) return cmd_tdev(td_series, td_epoch, td_out);
    if (*det) return cmd_detect(det_series, det_args);
    if (*sc) return cmd_scenarios(dump_dir);
  } catch (const ScenarioError& e) {
    for (const auto& issue : e.issues()) std::fprintf(stderr, "error: %s\n", issue.c_str());
    return static_cast<int>(e.exit_code());
  } catch (const Error& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return static_cast<int>(e.exit_code());
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return static_cast<int>(ExitCode::Config);
  }
  return 0;
}
