#pragma once

#include <optional>
#include <utility>
#include <variant>
#include <vector>

namespace asymdelay {

// Delays are real-valued picoseconds, times are seconds. Nothing here is
// quantized; integer picoseconds only appear at the TDC model.

enum class AttackPattern { Jump, Spike, Gradual };

inline constexpr double kDefaultSpikeWidthS = 1.0;
inline constexpr double kDefaultGradualStepS = 35.0;

/// f(u) = rate * u
struct LinearBehavior {
  double rate_per_s = 1.0;
};

/// f(u) = ln(1 + u / scale)
struct LogarithmicBehavior {
  double scale_s = 1.0;
};

/// f(u) = exp(rate * u) - 1
struct ExponentialBehavior {
  double rate_per_s = 0.0;
};

/// f(u) = c[0] u + c[1] u^2 + ... (no constant term, so f(0) = 0)
struct PolynomialBehavior {
  std::vector<double> coefficients;
};

using GradualBehavior =
    std::variant<LinearBehavior, LogarithmicBehavior, ExponentialBehavior, PolynomialBehavior>;

/// Shape function f(u) of a gradual attack, u in seconds since onset.
double gradual_shape(const GradualBehavior& behavior, double elapsed_s);

struct AttackEvent {
  AttackPattern pattern = AttackPattern::Jump;
  double amplitude_ps = 0.0;
  double start_s = 0.0;
  // Spike only.
  double width_s = kDefaultSpikeWidthS;
  // Gradual only.
  GradualBehavior behavior = LinearBehavior{};
  double step_interval_s = kDefaultGradualStepS;  // 0 = continuous
  std::optional<double> end_s;                     // absolute time
  bool reverse_after_end = false;

  static AttackEvent jump(double amplitude_ps, double start_s);
  static AttackEvent spike(double amplitude_ps, double start_s,
                           double width_s = kDefaultSpikeWidthS);
  static AttackEvent gradual(double amplitude_ps, double start_s, GradualBehavior behavior,
                             double step_interval_s = kDefaultGradualStepS);

  /// Throws ConfigError naming the first violated field.
  void validate() const;
};

/// Sum of attack events acting on one direction of the channel.
struct DelayTrajectory {
  std::vector<AttackEvent> events;

  double at(double t_s) const;
  bool empty() const noexcept { return events.empty(); }
};

struct CoordinationRule {
  enum class Mode { Independent, Proportional };

  Mode mode = Mode::Proportional;
  double n = -1.0;

  static CoordinationRule independent() { return {Mode::Independent, 0.0}; }
  static CoordinationRule proportional(double n) { return {Mode::Proportional, n}; }

  void validate() const;
};

enum class QcsSchemeKind { TwoWay, HomInterference, RoundTrip };

struct QcsScheme {
  QcsSchemeKind kind = QcsSchemeKind::RoundTrip;
  int alpha = -1;
  int beta = 1;

  static QcsScheme of(QcsSchemeKind kind);
};

/// Unit step with H(t0) = 1.
int heaviside(double t_s, double t0_s);

double eval_event(const AttackEvent& event, double t_s);
double eval_trajectory(const DelayTrajectory& trajectory, double t_s);

/// N(t) under a coordination rule. Proportional scales every event of `m` by n;
/// Independent returns `supplied_n` unchanged.
DelayTrajectory derive_n_from_m(const DelayTrajectory& m, const CoordinationRule& rule,
                                const DelayTrajectory& supplied_n = {});

std::pair<int, int> scheme_coefficients(QcsSchemeKind kind);

/// Clock difference seen by the victim: delta_t - (alpha M + beta N) / 2.
double tampered_clock_difference(double delta_t_ps, double m_ps, double n_ps,
                                 const QcsScheme& scheme);

}  // namespace asymdelay
