#include "asymdelay/scenario.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include "asymdelay/errors.hpp"

namespace asymdelay {

using nlohmann::json;

namespace {

std::string join_path(const std::string& base, std::string_view key) {
  return base.empty() ? std::string(key) : base + "." + std::string(key);
}

std::string type_name(const json& v) { return v.type_name(); }

/// Reads the members of one JSON object, recording every issue under its
/// field path and remembering which keys were consumed.
class Fields {
 public:
  Fields(const json* obj, std::string path, std::vector<std::string>& issues)
      : obj_(obj), path_(std::move(path)), issues_(issues) {
    if (obj_ != nullptr && !obj_->is_object()) {
      issue("", "expected an object, got " + type_name(*obj_));
      obj_ = nullptr;
    }
  }

  bool present() const { return obj_ != nullptr; }
  const std::string& path() const { return path_; }
  std::string at(std::string_view key) const { return join_path(path_, key); }

  const json* child(std::string_view key) {
    known_.insert(std::string(key));
    if (obj_ == nullptr) return nullptr;
    auto it = obj_->find(key);
    return it == obj_->end() ? nullptr : &*it;
  }

  bool has(std::string_view key) const { return obj_ != nullptr && obj_->contains(key); }

  std::optional<double> number(std::string_view key) {
    const json* v = child(key);
    if (v == nullptr) return std::nullopt;
    if (!v->is_number()) {
      issue(key, "expected a number, got " + type_name(*v));
      return std::nullopt;
    }
    return v->get<double>();
  }

  double number(std::string_view key, double fallback) { return number(key).value_or(fallback); }

  std::optional<std::int64_t> integer(std::string_view key) {
    const json* v = child(key);
    if (v == nullptr) return std::nullopt;
    if (!v->is_number_integer()) {
      issue(key, "expected an integer, got " + type_name(*v));
      return std::nullopt;
    }
    return v->get<std::int64_t>();
  }

  std::optional<std::uint64_t> unsigned_integer(std::string_view key) {
    const json* v = child(key);
    if (v == nullptr) return std::nullopt;
    if (!v->is_number_unsigned()) {
      issue(key, "expected a non-negative integer, got " + type_name(*v));
      return std::nullopt;
    }
    return v->get<std::uint64_t>();
  }

  std::optional<bool> boolean(std::string_view key) {
    const json* v = child(key);
    if (v == nullptr) return std::nullopt;
    if (!v->is_boolean()) {
      issue(key, "expected a boolean, got " + type_name(*v));
      return std::nullopt;
    }
    return v->get<bool>();
  }

  std::optional<std::string> string(std::string_view key) {
    const json* v = child(key);
    if (v == nullptr) return std::nullopt;
    if (!v->is_string()) {
      issue(key, "expected a string, got " + type_name(*v));
      return std::nullopt;
    }
    return v->get<std::string>();
  }

  void issue(std::string_view key, const std::string& message) {
    const std::string where = key.empty() ? path_ : at(key);
    issues_.push_back((where.empty() ? std::string("<root>") : where) + ": " + message);
  }

  void reject_unknown() {
    if (obj_ == nullptr) return;
    for (const auto& [key, value] : obj_->items()) {
      if (!known_.count(key)) issue(key, "unknown field");
    }
  }

 private:
  const json* obj_;
  std::string path_;
  std::vector<std::string>& issues_;
  std::set<std::string> known_;
};

template <class Enum>
std::optional<Enum> enum_field(Fields& f, std::string_view key,
                               std::initializer_list<std::pair<const char*, Enum>> options) {
  const auto text = f.string(key);
  if (!text) return std::nullopt;
  for (const auto& [name, value] : options) {
    if (*text == name) return value;
  }
  std::string allowed;
  for (const auto& [name, value] : options) {
    allowed += allowed.empty() ? "" : ", ";
    allowed += name;
  }
  f.issue(key, "unsupported value '" + *text + "' (expected one of: " + allowed + ")");
  return std::nullopt;
}

std::optional<GradualBehavior> parse_behavior(const json* v, const std::string& path,
                                              std::vector<std::string>& issues) {
  Fields f(v, path, issues);
  if (!f.present()) return std::nullopt;
  const auto kind = f.string("kind");
  std::optional<GradualBehavior> out;
  if (!kind) {
    f.issue("kind", "required");
  } else if (*kind == "linear") {
    out = LinearBehavior{f.number("rate_per_s", 1.0)};
  } else if (*kind == "logarithmic") {
    out = LogarithmicBehavior{f.number("scale_s", 1.0)};
  } else if (*kind == "exponential") {
    out = ExponentialBehavior{f.number("rate_per_s", 0.0)};
  } else if (*kind == "polynomial") {
    PolynomialBehavior p;
    const json* coeffs = f.child("coefficients");
    if (coeffs == nullptr || !coeffs->is_array()) {
      f.issue("coefficients", "required array of numbers");
    } else {
      for (const auto& c : *coeffs) {
        if (!c.is_number()) {
          f.issue("coefficients", "expected numbers");
          break;
        }
        p.coefficients.push_back(c.get<double>());
      }
    }
    out = p;
  } else {
    f.issue("kind", "unsupported behavior '" + *kind +
                        "' (expected linear, logarithmic, exponential or polynomial)");
  }
  f.reject_unknown();
  return out;
}

std::optional<AttackEvent> parse_event(const json& v, const std::string& path,
                                       std::vector<std::string>& issues) {
  Fields f(&v, path, issues);
  if (!f.present()) return std::nullopt;
  const std::size_t before = issues.size();
  AttackEvent e;
  const auto pattern = enum_field<AttackPattern>(
      f, "pattern",
      {{"jump", AttackPattern::Jump}, {"spike", AttackPattern::Spike}, {"gradual", AttackPattern::Gradual}});
  if (!pattern) {
    if (!f.has("pattern")) f.issue("pattern", "required");
    return std::nullopt;
  }
  e.pattern = *pattern;
  if (auto a = f.number("amplitude_ps")) {
    e.amplitude_ps = *a;
  } else if (!f.has("amplitude_ps")) {
    f.issue("amplitude_ps", "required");
  }
  e.start_s = f.number("start_s", 0.0);

  auto only_for = [&](std::string_view key, AttackPattern p, const char* label) {
    if (f.has(key) && e.pattern != p) f.issue(key, std::string("only valid for ") + label + " events");
  };
  only_for("width_s", AttackPattern::Spike, "spike");
  for (const char* key : {"behavior", "step_interval_s", "end_s", "reverse_after_end"}) {
    only_for(key, AttackPattern::Gradual, "gradual");
  }
  if (e.pattern == AttackPattern::Spike) e.width_s = f.number("width_s", kDefaultSpikeWidthS);
  if (e.pattern == AttackPattern::Gradual) {
    if (auto b = parse_behavior(f.child("behavior"), f.at("behavior"), issues)) {
      e.behavior = *b;
    } else if (!f.has("behavior")) {
      f.issue("behavior", "required for gradual events");
    }
    e.step_interval_s = f.number("step_interval_s", kDefaultGradualStepS);
    e.end_s = f.number("end_s");
    e.reverse_after_end = f.boolean("reverse_after_end").value_or(false);
    if (e.reverse_after_end && !e.end_s) f.issue("reverse_after_end", "requires end_s");
  }
  // Inapplicable keys were reported by only_for; keep reject_unknown quiet about them.
  for (const char* key : {"width_s", "behavior", "step_interval_s", "end_s", "reverse_after_end"}) {
    f.child(key);
  }
  f.reject_unknown();
  if (issues.size() != before) return std::nullopt;
  return e;
}

std::vector<AttackEvent> parse_events(Fields& parent, std::string_view key,
                                      std::vector<std::string>& issues) {
  std::vector<AttackEvent> out;
  const json* arr = parent.child(key);
  if (arr == nullptr) return out;
  if (!arr->is_array()) {
    parent.issue(key, "expected an array of events");
    return out;
  }
  for (std::size_t i = 0; i < arr->size(); ++i) {
    const std::string path = parent.at(key) + "[" + std::to_string(i) + "]";
    if (auto e = parse_event((*arr)[i], path, issues)) out.push_back(*e);
  }
  return out;
}

void parse_detector(Fields& f, DetectorConfig& d) {
  d.efficiency = f.number("efficiency", d.efficiency);
  d.jitter_sigma_ps = f.number("jitter_sigma_ps", d.jitter_sigma_ps);
  d.dead_time_ps = f.number("dead_time_ps", d.dead_time_ps);
  d.dark_count_rate_hz = f.number("dark_count_rate_hz", d.dark_count_rate_hz);
  f.reject_unknown();
}

void parse_clock(Fields& f, ClockConfig& c) {
  c.offset_ps = f.number("offset_ps", c.offset_ps);
  c.drift_ps_per_s = f.number("drift_ps_per_s", c.drift_ps_per_s);
  c.white_phase_noise_sigma_ps = f.number("white_phase_noise_sigma_ps", c.white_phase_noise_sigma_ps);
  f.reject_unknown();
}

AttackScenario parse_unvalidated(const json& doc, std::vector<std::string>& issues) {
  AttackScenario s;
  Fields root(&doc, "", issues);
  if (!root.present()) return s;

  if (auto v = root.integer("schema_version")) {
    if (*v != kSchemaVersion) {
      root.issue("schema_version", "unsupported version " + std::to_string(*v) + " (expected " +
                                       std::to_string(kSchemaVersion) + ")");
    }
  } else if (!root.has("schema_version")) {
    root.issue("schema_version", "required");
  }
  s.name = root.string("name").value_or(s.name);
  s.comment = root.string("comment").value_or("");
  s.mode = enum_field<RunMode>(root, "mode", {{"full_sim", RunMode::FullSim}, {"analytic", RunMode::Analytic}})
               .value_or(s.mode);
  s.scheme = enum_field<QcsSchemeKind>(root, "scheme",
                                       {{"round_trip", QcsSchemeKind::RoundTrip},
                                        {"two_way", QcsSchemeKind::TwoWay},
                                        {"hom_interference", QcsSchemeKind::HomInterference}})
                 .value_or(s.scheme);
  s.reference_ps = root.number("reference_ps", s.reference_ps);

  {
    Fields f(root.child("coordination"), "coordination", issues);
    using Mode = CoordinationRule::Mode;
    s.coordination.mode =
        enum_field<Mode>(f, "mode", {{"proportional", Mode::Proportional}, {"independent", Mode::Independent}})
            .value_or(s.coordination.mode);
    if (s.coordination.mode == Mode::Independent && f.has("n")) {
      f.issue("n", "only valid for proportional coordination");
    }
    s.coordination.n = f.number("n", s.coordination.mode == Mode::Independent ? 0.0 : -1.0);
    f.reject_unknown();
  }

  s.m_events = parse_events(root, "m_events", issues);
  if (root.has("n_events")) s.n_events = parse_events(root, "n_events", issues);

  {
    Fields f(root.child("run"), "run", issues);
    s.run.duration_s = f.number("duration_s", s.run.duration_s);
    s.run.epoch_s = f.number("epoch_s", s.run.epoch_s);
    s.run.seed = f.unsigned_integer("seed").value_or(s.run.seed);
    f.reject_unknown();
  }
  {
    Fields f(root.child("source"), "source", issues);
    auto& src = s.photon.source;
    src.pair_rate_hz = f.number("pair_rate_hz", src.pair_rate_hz);
    src.intrinsic_correlation_jitter_ps =
        f.number("intrinsic_correlation_jitter_ps", src.intrinsic_correlation_jitter_ps);
    f.reject_unknown();
  }
  {
    Fields f(root.child("detector"), "detector", issues);
    DetectorConfig d;
    parse_detector(f, d);
    s.photon.detectors = DetectorSet::uniform(d);
  }
  {
    Fields f(root.child("tdc"), "tdc", issues);
    s.photon.tdc.resolution_ps = f.number("resolution_ps", s.photon.tdc.resolution_ps);
    s.photon.tdc.jitter_sigma_ps = f.number("jitter_sigma_ps", s.photon.tdc.jitter_sigma_ps);
    f.reject_unknown();
  }
  {
    Fields f(root.child("channel"), "channel", issues);
    auto& ch = s.photon.channel;
    ch.one_way_delay_ps = f.number("one_way_delay_ps", ch.one_way_delay_ps);
    ch.loss_survival_prob = f.number("loss_survival_prob", ch.loss_survival_prob);
    ch.splitter_loopback_prob = f.number("splitter_loopback_prob", ch.splitter_loopback_prob);
    f.reject_unknown();
  }
  {
    Fields f(root.child("alice_clock"), "alice_clock", issues);
    parse_clock(f, s.photon.clocks.alice);
  }
  {
    Fields f(root.child("bob_clock"), "bob_clock", issues);
    parse_clock(f, s.photon.clocks.bob);
  }
  {
    Fields f(root.child("analytic"), "analytic", issues);
    s.analytic.baseline_delta_ps = f.number("baseline_delta_ps", s.analytic.baseline_delta_ps);
    s.analytic.noise_sigma_ps = f.number("noise_sigma_ps", s.analytic.noise_sigma_ps);
    f.reject_unknown();
  }
  {
    Fields f(root.child("estimator"), "estimator", issues);
    auto& h = s.estimator.histogram;
    h.bin_width_ps = f.number("bin_width_ps", h.bin_width_ps);
    h.window_halfwidth_ps = f.integer("window_halfwidth_ps").value_or(h.window_halfwidth_ps);
    f.reject_unknown();
  }
  {
    Fields f(root.child("detection"), "detection", issues);
    auto& d = s.detection;
    d.baseline_window_epochs =
        static_cast<int>(f.integer("baseline_window_epochs").value_or(d.baseline_window_epochs));
    d.threshold_ps = f.number("threshold_ps");
    d.cusum.reference_drift_ps = f.number("cusum_reference_drift_ps", d.cusum.reference_drift_ps);
    d.cusum.decision_limit_ps = f.number("cusum_decision_limit_ps", d.cusum.decision_limit_ps);
    d.attack_onset_s = f.number("attack_onset_s");
    f.reject_unknown();
  }
  root.reject_unknown();
  return s;
}

std::vector<std::string> invariant_issues(const AttackScenario& s) {
  std::vector<std::string> issues;
  auto check = [&](bool ok, const std::string& message) {
    if (!ok) issues.push_back(message);
  };
  auto capture = [&](const std::string& prefix, auto&& fn) {
    try {
      fn();
    } catch (const ConfigError& e) {
      issues.push_back(prefix + e.what());
    }
  };

  check(!s.name.empty(), "name: must not be empty");
  check(s.run.duration_s > 0.0 && std::isfinite(s.run.duration_s), "run.duration_s: must be > 0");
  check(s.run.epoch_s >= 1e-3 && std::isfinite(s.run.epoch_s), "run.epoch_s: must be >= 0.001");
  if (s.run.duration_s > 0.0 && s.run.epoch_s > 0.0) {
    check(s.run.duration_s / s.run.epoch_s >= 4.0 - 1e-9, "run.duration_s: must cover at least 4 epochs");
  }
  if (s.mode == RunMode::FullSim) {
    check(s.scheme == QcsSchemeKind::RoundTrip,
          "scheme: full_sim mode models the round-trip topology only; use analytic mode for " +
              std::string(scheme_name(s.scheme)));
    const double flight_ps = 2.0 * s.photon.channel.one_way_delay_ps;
    check(s.run.epoch_s * 1e12 > 10.0 * flight_ps,
          "run.epoch_s: must exceed ten round-trip flight times");
  }
  capture("", [&] { s.coordination.validate(); });
  if (s.coordination.mode == CoordinationRule::Mode::Proportional && s.n_events) {
    issues.push_back("n_events: conflicts with proportional coordination (N is derived from M)");
  }
  for (std::size_t i = 0; i < s.m_events.size(); ++i) {
    capture("m_events[" + std::to_string(i) + "].", [&] { s.m_events[i].validate(); });
  }
  if (s.n_events) {
    for (std::size_t i = 0; i < s.n_events->size(); ++i) {
      capture("n_events[" + std::to_string(i) + "].", [&] { (*s.n_events)[i].validate(); });
    }
  }

  capture("", [&] { s.photon.source.validate(); });
  capture("", [&] { s.photon.channel.validate(); });
  capture("", [&] { s.photon.tdc.validate(); });
  for (auto id : {DetectorId::IdlerA, DetectorId::SignalB, DetectorId::ReturnA}) {
    capture("", [&] { s.photon.detectors[id].validate(); });
  }
  auto clock_issue = [&](const ClockConfig& c, const std::string& section) {
    try {
      c.validate();
    } catch (const ConfigError& e) {
      std::string msg = e.what();
      issues.push_back(section + msg.substr(msg.find('.')));
    }
  };
  clock_issue(s.photon.clocks.alice, "alice_clock");
  clock_issue(s.photon.clocks.bob, "bob_clock");

  check(std::isfinite(s.analytic.baseline_delta_ps), "analytic.baseline_delta_ps: must be finite");
  check(s.analytic.noise_sigma_ps >= 0.0, "analytic.noise_sigma_ps: must be >= 0");

  const auto& h = s.estimator.histogram;
  check(h.bin_width_ps > 0.0, "estimator.bin_width_ps: must be > 0");
  check(h.window_halfwidth_ps > 0, "estimator.window_halfwidth_ps: must be > 0");
  if (h.bin_width_ps > 0.0 && h.window_halfwidth_ps > 0) {
    check(2.0 * static_cast<double>(h.window_halfwidth_ps) / h.bin_width_ps <= 1e6,
          "estimator.bin_width_ps: window holds more than 1e6 bins");
  }

  const auto& d = s.detection;
  check(d.baseline_window_epochs >= 10, "detection.baseline_window_epochs: must be >= 10");
  check(!d.threshold_ps || *d.threshold_ps > 0.0, "detection.threshold_ps: must be > 0");
  check(d.cusum.reference_drift_ps >= 0.0, "detection.cusum_reference_drift_ps: must be >= 0");
  check(d.cusum.decision_limit_ps > 0.0, "detection.cusum_decision_limit_ps: must be > 0");
  check(!d.attack_onset_s || *d.attack_onset_s >= 0.0, "detection.attack_onset_s: must be >= 0");
  check(std::isfinite(s.reference_ps), "reference_ps: must be finite");
  return issues;
}

json behavior_json(const GradualBehavior& b) {
  if (const auto* lin = std::get_if<LinearBehavior>(&b)) return {{"kind", "linear"}, {"rate_per_s", lin->rate_per_s}};
  if (const auto* lg = std::get_if<LogarithmicBehavior>(&b)) return {{"kind", "logarithmic"}, {"scale_s", lg->scale_s}};
  if (const auto* ex = std::get_if<ExponentialBehavior>(&b)) {
    return {{"kind", "exponential"}, {"rate_per_s", ex->rate_per_s}};
  }
  return {{"kind", "polynomial"}, {"coefficients", std::get<PolynomialBehavior>(b).coefficients}};
}

json detector_json(const DetectorConfig& d) {
  return {{"efficiency", d.efficiency},
          {"jitter_sigma_ps", d.jitter_sigma_ps},
          {"dead_time_ps", d.dead_time_ps},
          {"dark_count_rate_hz", d.dark_count_rate_hz}};
}

json clock_json(const ClockConfig& c) {
  return {{"offset_ps", c.offset_ps},
          {"drift_ps_per_s", c.drift_ps_per_s},
          {"white_phase_noise_sigma_ps", c.white_phase_noise_sigma_ps}};
}

}  // namespace

const char* run_mode_name(RunMode mode) { return mode == RunMode::FullSim ? "full_sim" : "analytic"; }

RunMode run_mode_from_name(std::string_view name) {
  if (name == "full_sim") return RunMode::FullSim;
  if (name == "analytic") return RunMode::Analytic;
  throw ConfigError("mode: unsupported value '" + std::string(name) + "' (expected full_sim or analytic)");
}

const char* scheme_name(QcsSchemeKind kind) {
  switch (kind) {
    case QcsSchemeKind::TwoWay:
      return "two_way";
    case QcsSchemeKind::HomInterference:
      return "hom_interference";
    case QcsSchemeKind::RoundTrip:
      return "round_trip";
  }
  return "?";
}

DelayTrajectory AttackScenario::m() const { return {m_events}; }

DelayTrajectory AttackScenario::n() const {
  return derive_n_from_m(m(), coordination, DelayTrajectory{n_events.value_or(std::vector<AttackEvent>{})});
}

std::optional<double> AttackScenario::attack_onset() const {
  if (detection.attack_onset_s) return detection.attack_onset_s;
  std::optional<double> onset;
  auto visit = [&](const std::vector<AttackEvent>& events) {
    for (const auto& e : events) {
      if (e.amplitude_ps != 0.0) onset = onset ? std::min(*onset, e.start_s) : e.start_s;
    }
  };
  visit(m_events);
  if (n_events) visit(*n_events);
  return onset;
}

void AttackScenario::validate() const {
  auto issues = invariant_issues(*this);
  if (!issues.empty()) throw ScenarioError(std::move(issues));
}

std::vector<std::string> validate_scenario(const json& doc) {
  std::vector<std::string> issues;
  const auto s = parse_unvalidated(doc, issues);
  if (!issues.empty()) return issues;
  return invariant_issues(s);
}

AttackScenario parse_scenario(const json& doc) {
  std::vector<std::string> issues;
  auto s = parse_unvalidated(doc, issues);
  if (!issues.empty()) throw ScenarioError(std::move(issues));
  s.validate();
  return s;
}

namespace {

json read_json_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open scenario file '" + path.string() + "'");
  try {
    return json::parse(in);
  } catch (const json::parse_error& e) {
    throw ScenarioError({path.string() + ": malformed JSON: " + e.what()});
  }
}

}  // namespace

AttackScenario load_scenario(const std::filesystem::path& path) {
  return parse_scenario(read_json_file(path));
}

std::vector<std::string> validate_scenario_file(const std::filesystem::path& path) {
  json doc;
  try {
    doc = read_json_file(path);
  } catch (const ScenarioError& e) {
    return e.issues();
  }
  return validate_scenario(doc);
}

json to_json(const AttackEvent& e) {
  json j;
  switch (e.pattern) {
    case AttackPattern::Jump:
      j["pattern"] = "jump";
      break;
    case AttackPattern::Spike:
      j["pattern"] = "spike";
      j["width_s"] = e.width_s;
      break;
    case AttackPattern::Gradual:
      j["pattern"] = "gradual";
      j["behavior"] = behavior_json(e.behavior);
      j["step_interval_s"] = e.step_interval_s;
      if (e.end_s) j["end_s"] = *e.end_s;
      j["reverse_after_end"] = e.reverse_after_end;
      break;
  }
  j["amplitude_ps"] = e.amplitude_ps;
  j["start_s"] = e.start_s;
  return j;
}

json to_json(const AttackScenario& s) {
  json j;
  j["schema_version"] = kSchemaVersion;
  j["name"] = s.name;
  if (!s.comment.empty()) j["comment"] = s.comment;
  j["mode"] = run_mode_name(s.mode);
  j["scheme"] = scheme_name(s.scheme);
  if (s.coordination.mode == CoordinationRule::Mode::Proportional) {
    j["coordination"] = {{"mode", "proportional"}, {"n", s.coordination.n}};
  } else {
    j["coordination"] = {{"mode", "independent"}};
  }
  j["m_events"] = json::array();
  for (const auto& e : s.m_events) j["m_events"].push_back(to_json(e));
  if (s.n_events) {
    j["n_events"] = json::array();
    for (const auto& e : *s.n_events) j["n_events"].push_back(to_json(e));
  }
  j["run"] = {{"duration_s", s.run.duration_s}, {"epoch_s", s.run.epoch_s}, {"seed", s.run.seed}};
  const auto& p = s.photon;
  j["source"] = {{"pair_rate_hz", p.source.pair_rate_hz},
                 {"intrinsic_correlation_jitter_ps", p.source.intrinsic_correlation_jitter_ps}};
  j["detector"] = detector_json(p.detectors.idler_a);
  j["tdc"] = {{"resolution_ps", p.tdc.resolution_ps}, {"jitter_sigma_ps", p.tdc.jitter_sigma_ps}};
  j["channel"] = {{"one_way_delay_ps", p.channel.one_way_delay_ps},
                  {"loss_survival_prob", p.channel.loss_survival_prob},
                  {"splitter_loopback_prob", p.channel.splitter_loopback_prob}};
  j["alice_clock"] = clock_json(p.clocks.alice);
  j["bob_clock"] = clock_json(p.clocks.bob);
  j["analytic"] = {{"baseline_delta_ps", s.analytic.baseline_delta_ps},
                   {"noise_sigma_ps", s.analytic.noise_sigma_ps}};
  j["estimator"] = {{"bin_width_ps", s.estimator.histogram.bin_width_ps},
                    {"window_halfwidth_ps", s.estimator.histogram.window_halfwidth_ps}};
  json d = {{"baseline_window_epochs", s.detection.baseline_window_epochs},
            {"cusum_reference_drift_ps", s.detection.cusum.reference_drift_ps},
            {"cusum_decision_limit_ps", s.detection.cusum.decision_limit_ps}};
  if (s.detection.threshold_ps) d["threshold_ps"] = *s.detection.threshold_ps;
  if (s.detection.attack_onset_s) d["attack_onset_s"] = *s.detection.attack_onset_s;
  j["detection"] = d;
  j["reference_ps"] = s.reference_ps;
  return j;
}

std::uint64_t config_hash(const AttackScenario& s) {
  const std::string text = to_json(s).dump();
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : text) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

// ---------------------------------------------------------------------------
// Builtin scenarios. Stated experimental parameters are encoded directly;
// rates, bins and spike width keep module defaults.

namespace {

constexpr double kJumpOnsetS = 250.0;
constexpr double kGradualOnsetS = 100.0;
constexpr double kGradualStepS = 35.0;

AttackScenario base(std::string name, double duration_s) {
  AttackScenario s;
  s.name = std::move(name);
  s.run.duration_s = duration_s;
  return s;
}

AttackScenario jump(double amplitude_ps, double onset_s, double duration_s, std::string name) {
  auto s = base(std::move(name), duration_s);
  s.comment = "Step-and-hold delay on Alice->Bob with the return leg set to -A.";
  s.m_events = {AttackEvent::jump(amplitude_ps, onset_s)};
  if (amplitude_ps == 0.0) s.detection.attack_onset_s = onset_s;
  return s;
}

std::string jump_name(int amplitude_ps) { return "jump_" + std::to_string(amplitude_ps) + "ps"; }

AttackScenario spikes() {
  auto s = base("spikes", 2000.0);
  s.comment = "Five single-epoch pulses, N = -M.";
  const std::pair<double, double> events[] = {
      {330.0, -500.0}, {662.0, -400.0}, {1022.0, -300.0}, {1376.0, -200.0}, {1709.0, -100.0}};
  for (const auto& [t0, a] : events) s.m_events.push_back(AttackEvent::spike(a, t0));
  return s;
}

AttackScenario gradual_attack1() {
  auto s = base("gradual_attack1", 3600.0);
  s.comment =
      "-2 ps per 35 s on Alice->Bob only, held after 2100 s of attack. With N = 0 the clock "
      "difference drifts at half the injected rate.";
  s.coordination = CoordinationRule::independent();
  auto e = AttackEvent::gradual(-2.0, kGradualOnsetS, LinearBehavior{1.0 / kGradualStepS}, kGradualStepS);
  e.end_s = kGradualOnsetS + 2100.0;
  s.m_events = {e};
  return s;
}

AttackScenario gradual_attack2() {
  auto s = base("gradual_attack2", 3600.0);
  s.comment =
      "-4 ps per 35 s with N = -M, reversing after 1750 s of attack and ramping back toward "
      "zero until 3500 s. Alternative reading: a continued positive ramp past zero.";
  auto e = AttackEvent::gradual(-4.0, kGradualOnsetS, LinearBehavior{1.0 / kGradualStepS}, kGradualStepS);
  e.end_s = kGradualOnsetS + 1750.0;
  e.reverse_after_end = true;
  s.m_events = {e};
  return s;
}

const std::vector<int>& jump_grid() {
  static const std::vector<int> grid{0, -10, -50, -100, -200, -500};
  return grid;
}

}  // namespace

std::vector<std::string> builtin_names() {
  std::vector<std::string> names{"baseline", "baseline_long"};
  for (int a : jump_grid()) names.push_back(jump_name(a));
  names.push_back("jump_-100ps_long");
  names.push_back("spikes");
  names.push_back("gradual_attack1");
  names.push_back("gradual_attack2");
  return names;
}

bool is_builtin(std::string_view name) {
  const auto names = builtin_names();
  return std::find(names.begin(), names.end(), name) != names.end();
}

AttackScenario builtin_scenario(std::string_view name) {
  if (name == "baseline") {
    auto s = base("baseline", 500.0);
    s.comment = "No attack.";
    return s;
  }
  if (name == "baseline_long") {
    auto s = base("baseline_long", 3600.0);
    s.comment = "No attack, gradual-campaign length.";
    return s;
  }
  for (int a : jump_grid()) {
    if (name == jump_name(a)) return jump(a, kJumpOnsetS, 500.0, jump_name(a));
  }
  if (name == "jump_-100ps_long") return jump(-100.0, 1000.0, 2000.0, "jump_-100ps_long");
  if (name == "spikes") return spikes();
  if (name == "gradual_attack1") return gradual_attack1();
  if (name == "gradual_attack2") return gradual_attack2();
  throw ConfigError("unknown builtin scenario '" + std::string(name) + "'");
}

AttackScenario resolve_scenario(const std::string& name_or_path) {
  if (is_builtin(name_or_path)) return builtin_scenario(name_or_path);
  return load_scenario(name_or_path);
}

}  // namespace asymdelay
