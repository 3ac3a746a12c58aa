#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "asymdelay/attack_model.hpp"
#include "asymdelay/detection.hpp"
#include "asymdelay/photon_sim.hpp"
#include "asymdelay/timing_estimator.hpp"

namespace asymdelay {

inline constexpr int kSchemaVersion = 1;

enum class RunMode { FullSim, Analytic };

const char* run_mode_name(RunMode mode);
RunMode run_mode_from_name(std::string_view name);
const char* scheme_name(QcsSchemeKind kind);

/// Per-epoch Gaussian stand-in for the photon pipeline in analytic mode.
struct AnalyticNoise {
  double baseline_delta_ps = kDefaultBobOffsetPs;
  double noise_sigma_ps = 0.8;
};

struct RunConfig {
  double duration_s = 500.0;
  double epoch_s = 1.0;
  std::uint64_t seed = 1;
};

struct EstimatorConfig {
  HistogramParams histogram;
};

struct DetectionSettings {
  int baseline_window_epochs = 60;
  std::optional<double> threshold_ps;  // unset: 4x baseline-window std
  CusumConfig cusum;
  std::optional<double> attack_onset_s;  // unset: earliest attack event
};

struct AttackScenario {
  std::string name = "scenario";
  std::string comment;
  RunMode mode = RunMode::FullSim;
  QcsSchemeKind scheme = QcsSchemeKind::RoundTrip;
  CoordinationRule coordination;
  std::vector<AttackEvent> m_events;
  std::optional<std::vector<AttackEvent>> n_events;
  RunConfig run;
  PhotonSimConfig photon;
  AnalyticNoise analytic;
  EstimatorConfig estimator;
  DetectionSettings detection;
  double reference_ps = -9900.0;

  DelayTrajectory m() const;
  /// N(t) after applying the coordination rule.
  DelayTrajectory n() const;
  std::optional<double> attack_onset() const;

  /// Throws ScenarioError listing every violation.
  void validate() const;
};

/// Parse and fully validate. Unknown fields are rejected; every issue carries
/// its field path.
AttackScenario parse_scenario(const nlohmann::json& doc);
AttackScenario load_scenario(const std::filesystem::path& path);

/// Empty when the document is a valid scenario.
std::vector<std::string> validate_scenario(const nlohmann::json& doc);
/// Malformed JSON is reported as an issue; throws ConfigError when the file
/// cannot be read.
std::vector<std::string> validate_scenario_file(const std::filesystem::path& path);

/// Canonical, fully resolved form (every default written out).
nlohmann::json to_json(const AttackScenario& scenario);
nlohmann::json to_json(const AttackEvent& event);

/// FNV-1a over the canonical JSON text.
std::uint64_t config_hash(const AttackScenario& scenario);

std::vector<std::string> builtin_names();
bool is_builtin(std::string_view name);
AttackScenario builtin_scenario(std::string_view name);

/// A builtin name or a path to a scenario file.
AttackScenario resolve_scenario(const std::string& name_or_path);

}  // namespace asymdelay
