#pragma once

#include <cmath>
#include <optional>
#include <stdexcept>
#include <string>
#include <utility>

#include "osmd/linalg.hpp"

namespace osmd {

/// Oblivious step sizes of polynomial degree n:
///
///   alpha_t = c (t+2)^n,   gamma_t = c (t+1)^{n+1} / (n+1),   t >= 1.
///
/// alpha is nondecreasing, and gamma_{t+1} - gamma_t = c * integral of s^n
/// over [t+1, t+2] <= c (t+2)^n = alpha_t, which is the pair of conditions
/// the oblivious analysis needs. No problem constant enters.
struct StepSchedule {
  int degree = 1;
  double scale = 1.0;

  void validate() const {
    if (degree < 0) throw std::invalid_argument("StepSchedule: degree must be >= 0");
    if (!(scale > 0.0) || !std::isfinite(scale))
      throw std::invalid_argument("StepSchedule: scale must be finite and > 0");
  }

  double alpha(long t) const {
    check_t(t);
    return scale * std::pow(static_cast<double>(t + 2), degree);
  }
  double gamma(long t) const {
    check_t(t);
    return scale * std::pow(static_cast<double>(t + 1), degree + 1) / (degree + 1);
  }

 private:
  static void check_t(long t) {
    if (t < 1) throw std::invalid_argument("StepSchedule: t must be >= 1, got " + std::to_string(t));
  }
};

inline std::pair<double, double> schedule_at(const StepSchedule& s, long t) {
  return {s.alpha(t), s.gamma(t)};
}

/// Relative slack for the floating-point check of the schedule law, taken
/// against the magnitude of the compared operands.
inline constexpr double kScheduleSlack = 1e-12;

/// Returns the first t in [1, horizon) violating the schedule law, if any.
inline std::optional<long> first_schedule_violation(const StepSchedule& s, long horizon) {
  s.validate();
  double cumulative = 0.0;
  for (long t = 1; t <= horizon; ++t) {
    const double a = s.alpha(t), a_next = s.alpha(t + 1);
    const double g = s.gamma(t), g_next = s.gamma(t + 1);
    const double prev = cumulative;
    cumulative += a;
    if (!std::isfinite(cumulative) || !(cumulative > prev)) return t;
    if (a > a_next * (1.0 + kScheduleSlack)) return t;
    if ((g_next - g) - a > kScheduleSlack * std::max(a, g_next)) return t;
  }
  return std::nullopt;
}

/// Throws unless the schedule law holds for every t <= horizon.
inline void verify_schedule(const StepSchedule& s, long horizon) {
  if (auto bad = first_schedule_violation(s, horizon))
    throw std::logic_error("StepSchedule(degree=" + std::to_string(s.degree) +
                           ", scale=" + format_real(s.scale) +
                           ") violates the oblivious step-size law at t=" +
                           std::to_string(*bad));
}

/// Last t <= horizon with gamma_t / alpha_t <= 2 Lstar / mu: the point after
/// which the schedule dominates the relative-scale constant. Empty if the
/// threshold is already exceeded at t = 1.
inline std::optional<long> transition_time_relative(const StepSchedule& s, double lstar, double mu,
                                                    long horizon) {
  const double threshold = 2.0 * lstar / mu;
  std::optional<long> last;
  for (long t = 1; t <= horizon; ++t) {
    if (s.gamma(t) / s.alpha(t) <= threshold)
      last = t;
    else
      break;
  }
  return last;
}

/// Last t <= horizon with gamma_t A_t / alpha_t^2 < 2 L / mu (smooth case).
inline std::optional<long> transition_time_smooth(const StepSchedule& s, double L, double mu,
                                                  long horizon) {
  const double threshold = 2.0 * L / mu;
  std::optional<long> last;
  double cumulative = 0.0;
  for (long t = 1; t <= horizon; ++t) {
    const double a = s.alpha(t);
    cumulative += a;
    if (s.gamma(t) * cumulative / (a * a) < threshold) last = t;
  }
  return last;
}

}  // namespace osmd
