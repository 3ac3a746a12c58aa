#include "asymdelay/attack_model.hpp"

#include <cmath>
#include <string>

#include "asymdelay/errors.hpp"

namespace asymdelay {

namespace {

template <class... Ts>
struct Overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
Overloaded(Ts...) -> Overloaded<Ts...>;

double quantize_elapsed(double elapsed_s, double step_s) {
  if (step_s <= 0.0) return elapsed_s;
  return step_s * std::floor(elapsed_s / step_s);
}

double gradual_value(const AttackEvent& e, double t_s) {
  const auto shape_at = [&](double t) {
    return gradual_shape(e.behavior, quantize_elapsed(t - e.start_s, e.step_interval_s));
  };
  if (e.end_s && t_s > *e.end_s) {
    const double held = shape_at(*e.end_s);
    if (!e.reverse_after_end) return e.amplitude_ps * held;
    // Mirror the increments accumulated since the hold point.
    return e.amplitude_ps * (2.0 * held - shape_at(t_s));
  }
  return e.amplitude_ps * shape_at(t_s);
}

}  // namespace

double gradual_shape(const GradualBehavior& behavior, double u) {
  return std::visit(
      Overloaded{
          [u](const LinearBehavior& b) { return b.rate_per_s * u; },
          [u](const LogarithmicBehavior& b) { return std::log1p(u / b.scale_s); },
          [u](const ExponentialBehavior& b) { return std::expm1(b.rate_per_s * u); },
          [u](const PolynomialBehavior& b) {
            double acc = 0.0;
            for (auto it = b.coefficients.rbegin(); it != b.coefficients.rend(); ++it) {
              acc = (acc + *it) * u;
            }
            return acc;
          },
      },
      behavior);
}

AttackEvent AttackEvent::jump(double amplitude_ps, double start_s) {
  AttackEvent e;
  e.pattern = AttackPattern::Jump;
  e.amplitude_ps = amplitude_ps;
  e.start_s = start_s;
  return e;
}

AttackEvent AttackEvent::spike(double amplitude_ps, double start_s, double width_s) {
  AttackEvent e;
  e.pattern = AttackPattern::Spike;
  e.amplitude_ps = amplitude_ps;
  e.start_s = start_s;
  e.width_s = width_s;
  return e;
}

AttackEvent AttackEvent::gradual(double amplitude_ps, double start_s, GradualBehavior behavior,
                                 double step_interval_s) {
  AttackEvent e;
  e.pattern = AttackPattern::Gradual;
  e.amplitude_ps = amplitude_ps;
  e.start_s = start_s;
  e.behavior = std::move(behavior);
  e.step_interval_s = step_interval_s;
  return e;
}

void AttackEvent::validate() const {
  if (!std::isfinite(amplitude_ps)) throw ConfigError("amplitude_ps: must be finite");
  if (!std::isfinite(start_s) || start_s < 0.0) throw ConfigError("start_s: must be >= 0");
  if (pattern == AttackPattern::Spike && !(width_s > 0.0 && std::isfinite(width_s))) {
    throw ConfigError("width_s: spike width must be > 0");
  }
  if (pattern != AttackPattern::Gradual) return;
  if (!(step_interval_s >= 0.0) || !std::isfinite(step_interval_s)) {
    throw ConfigError("step_interval_s: must be >= 0");
  }
  if (end_s && !(*end_s >= start_s)) throw ConfigError("end_s: must be >= start_s");
  std::visit(Overloaded{
                 [](const LinearBehavior& b) {
                   if (!std::isfinite(b.rate_per_s)) {
                     throw ConfigError("behavior.rate_per_s: must be finite");
                   }
                 },
                 [](const LogarithmicBehavior& b) {
                   if (!(b.scale_s > 0.0)) throw ConfigError("behavior.scale_s: must be > 0");
                 },
                 [](const ExponentialBehavior& b) {
                   if (!std::isfinite(b.rate_per_s)) {
                     throw ConfigError("behavior.rate_per_s: must be finite");
                   }
                 },
                 [](const PolynomialBehavior& b) {
                   if (b.coefficients.empty()) {
                     throw ConfigError("behavior.coefficients: must not be empty");
                   }
                   for (double c : b.coefficients) {
                     if (!std::isfinite(c)) {
                       throw ConfigError("behavior.coefficients: must be finite");
                     }
                   }
                 },
             },
             behavior);
}

double DelayTrajectory::at(double t_s) const { return eval_trajectory(*this, t_s); }

void CoordinationRule::validate() const {
  if (mode == Mode::Proportional && !std::isfinite(n)) {
    throw ConfigError("coordination.n: proportional coefficient must be finite");
  }
}

QcsScheme QcsScheme::of(QcsSchemeKind kind) {
  const auto [a, b] = scheme_coefficients(kind);
  return {kind, a, b};
}

int heaviside(double t_s, double t0_s) { return t_s >= t0_s ? 1 : 0; }

double eval_event(const AttackEvent& e, double t_s) {
  switch (e.pattern) {
    case AttackPattern::Jump:
      return e.amplitude_ps * heaviside(t_s, e.start_s);
    case AttackPattern::Spike:
      return e.amplitude_ps * (heaviside(t_s, e.start_s) - heaviside(t_s, e.start_s + e.width_s));
    case AttackPattern::Gradual:
      return heaviside(t_s, e.start_s) ? gradual_value(e, t_s) : 0.0;
  }
  throw ConfigError("pattern: unsupported attack pattern");
}

double eval_trajectory(const DelayTrajectory& trajectory, double t_s) {
  double sum = 0.0;
  for (const auto& e : trajectory.events) sum += eval_event(e, t_s);
  return sum;
}

DelayTrajectory derive_n_from_m(const DelayTrajectory& m, const CoordinationRule& rule,
                                const DelayTrajectory& supplied_n) {
  rule.validate();
  if (rule.mode == CoordinationRule::Mode::Independent) return supplied_n;
  DelayTrajectory n = m;
  for (auto& e : n.events) e.amplitude_ps *= rule.n;
  return n;
}

std::pair<int, int> scheme_coefficients(QcsSchemeKind kind) {
  switch (kind) {
    case QcsSchemeKind::TwoWay:
      return {1, -1};
    case QcsSchemeKind::HomInterference:
    case QcsSchemeKind::RoundTrip:
      return {-1, 1};
  }
  throw ConfigError("scheme: unknown QCS scheme");
}

double tampered_clock_difference(double delta_t_ps, double m_ps, double n_ps,
                                 const QcsScheme& scheme) {
  return delta_t_ps - (scheme.alpha * m_ps + scheme.beta * n_ps) / 2.0;
}

}  // namespace asymdelay
