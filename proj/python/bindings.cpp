#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "asymdelay/attack_model.hpp"
#include "asymdelay/campaign.hpp"
#include "asymdelay/errors.hpp"
#include "asymdelay/scenario.hpp"
#include "asymdelay/stability.hpp"

namespace py = pybind11;
using namespace asymdelay;

namespace {

QcsSchemeKind scheme_from_name(const std::string& name) {
  if (name == "round_trip") return QcsSchemeKind::RoundTrip;
  if (name == "two_way") return QcsSchemeKind::TwoWay;
  if (name == "hom_interference") return QcsSchemeKind::HomInterference;
  throw ConfigError("scheme: unknown '" + name + "'");
}

py::dict series_dict(const ClockDifferenceSeries& s) {
  py::list start;
  py::list tau_ab;
  py::list tau_aba;
  py::list delta;
  for (const auto& p : s.points) {
    start.append(p.epoch_start_s);
    tau_ab.append(p.tau_ab_ps);
    tau_aba.append(p.tau_aba_ps);
    delta.append(p.delta_ps);
  }
  py::dict d;
  d["epoch_start_s"] = start;
  d["tau_ab_ps"] = tau_ab;
  d["tau_aba_ps"] = tau_aba;
  d["delta_ps"] = delta;
  return d;
}

py::dict tdev_dict(const TdevCurve& c) {
  py::list tau;
  py::list dev;
  py::list m;
  for (const auto& p : c.points) {
    tau.append(p.tau_s);
    dev.append(p.tdev_ps);
    m.append(p.m);
  }
  py::dict d;
  d["tau_s"] = tau;
  d["tdev_ps"] = dev;
  d["m"] = m;
  return d;
}

py::object score_obj(const std::optional<DetectionScore>& s) {
  if (!s) return py::none();
  py::dict d;
  d["detected"] = s->detected;
  d["latency_s"] = s->latency_s ? py::cast(*s->latency_s) : py::none();
  d["false_alarms"] = s->false_alarms;
  return d;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Asymmetric delay attack simulator and analysis toolkit";
  m.attr("__version__") = kToolVersion;

  // Translators run newest first, so the base class goes in first.
  py::register_exception<Error>(m, "Error", PyExc_RuntimeError);
  py::register_exception<ConfigError>(m, "ConfigError", PyExc_ValueError);
  py::register_exception<DomainError>(m, "DomainError", PyExc_ValueError);
  py::register_exception<GapError>(m, "GapError", PyExc_RuntimeError);

  m.def(
      "tampered_clock_difference",
      [](double delta_t, double m_ps, double n_ps, const std::string& scheme) {
        return tampered_clock_difference(delta_t, m_ps, n_ps, QcsScheme::of(scheme_from_name(scheme)));
      },
      py::arg("delta_t_ps"), py::arg("m_ps"), py::arg("n_ps"), py::arg("scheme") = "round_trip");
  m.def(
      "scheme_coefficients", [](const std::string& scheme) { return scheme_coefficients(scheme_from_name(scheme)); },
      py::arg("scheme"));

  m.def(
      "jump", [](double a, double t0, double t) { return eval_event(AttackEvent::jump(a, t0), t); },
      py::arg("amplitude_ps"), py::arg("start_s"), py::arg("t_s"));
  m.def(
      "spike",
      [](double a, double t0, double t, double w) { return eval_event(AttackEvent::spike(a, t0, w), t); },
      py::arg("amplitude_ps"), py::arg("start_s"), py::arg("t_s"), py::arg("width_s") = kDefaultSpikeWidthS);
  m.def(
      "gradual_linear",
      [](double a, double t0, double rate, double step, double t) {
        return eval_event(AttackEvent::gradual(a, t0, LinearBehavior{rate}, step), t);
      },
      py::arg("amplitude_ps"), py::arg("start_s"), py::arg("rate_per_s"), py::arg("step_interval_s"),
      py::arg("t_s"));

  m.def(
      "tdev",
      [](const std::vector<double>& x, double tau0, std::optional<std::vector<int>> ms) {
        const auto grid = ms ? *ms : default_m_grid(x.size());
        return tdev_dict(tdev(x, tau0, grid));
      },
      py::arg("phase_ps"), py::arg("tau0_s") = 1.0, py::arg("m_values") = py::none());
  m.def("default_m_grid", &default_m_grid, py::arg("n"));

  m.def("builtin_names", &builtin_names);
  m.def(
      "validate_scenario",
      [](const std::string& text) { return validate_scenario(nlohmann::json::parse(text)); },
      py::arg("json_text"));
  m.def(
      "builtin_scenario_json", [](const std::string& name) { return to_json(builtin_scenario(name)).dump(2); },
      py::arg("name"));

  m.def(
      "run_scenario",
      [](const std::string& name_or_json, std::optional<std::uint64_t> seed, std::optional<std::string> mode,
         std::optional<double> epoch_s) {
        AttackScenario s = is_builtin(name_or_json) ? builtin_scenario(name_or_json)
                                                    : parse_scenario(nlohmann::json::parse(name_or_json));
        ReproduceOptions o;
        o.seed = seed;
        if (mode) o.mode = run_mode_from_name(*mode);
        o.epoch_s = epoch_s;
        apply_overrides(s, o);
        CampaignResult r;
        {
          py::gil_scoped_release release;
          r = run_scenario(s);
        }
        py::dict d;
        d["name"] = r.scenario.name;
        d["seed"] = r.meta.seed;
        d["config_hash"] = r.meta.config_hash;
        d["epochs"] = r.meta.epochs;
        d["gaps"] = r.meta.gaps;
        d["series"] = series_dict(r.series);
        d["tdev"] = tdev_dict(r.tdev);
        d["threshold_score"] = score_obj(r.threshold_score);
        d["drift_score"] = score_obj(r.drift_score);
        return d;
      },
      py::arg("scenario"), py::arg("seed") = py::none(), py::arg("mode") = py::none(),
      py::arg("epoch_s") = py::none());
}
