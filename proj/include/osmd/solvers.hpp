#pragma once

// Oblivious stochastic mirror descent in the complementary composite
// setting (plain and accelerated) plus three parameter-dependent baselines:
// Levy's adaptive step, Lan's accelerated stochastic approximation and a
// constant-step relative-scale method.
//
// Every solver is a template over the oracle, a callable
// `GradSample(const SymMatrix&, Rng&)`, with an overload that draws from the
// problem's configured oracle.

#include <chrono>
#include <cmath>
#include <concepts>
#include <cstdint>
#include <exception>
#include <functional>
#include <string>
#include <utility>
#include <vector>

#include "osmd/linalg.hpp"
#include "osmd/oracles.hpp"
#include "osmd/problem.hpp"
#include "osmd/rng.hpp"
#include "osmd/schedule.hpp"

namespace osmd {

template <class O>
concept GradOracle = requires(O o, const SymMatrix& x, Rng& rng) {
  { o(x, rng) } -> std::convertible_to<GradSample>;
};

struct TracePoint {
  long t = 0;
  double F_ag = 0.0;
  double Psi_ag = 0.0;
  double grad_norm = 0.0;
  double elapsed_s = 0.0;

  bool operator==(const TracePoint&) const = default;
};

using ConfigEcho = std::vector<std::pair<std::string, std::string>>;

struct RunTrace {
  std::vector<TracePoint> iterations;
  SymMatrix final_point;
  ConfigEcho config_echo;
  std::uint64_t seed = 0;
  double oracle_seconds = 0.0;
};

/// One step of a solver as seen by an observer. `query` is where the oracle
/// was called, `next` the new prox/projection iterate, `aggregate` the point
/// whose objective the trace records at this t.
struct IterateView {
  long t;
  double alpha;
  double gamma;
  double step;  // effective multiplier on the gradient
  const SymMatrix& query;
  const SymMatrix& next;
  const SymMatrix& aggregate;
  const GradSample& sample;
};

struct RunOptions {
  /// Record every `stride` iterations (plus t = 1 and t = T); 0 selects 1 for
  /// d <= 150 and 10 beyond.
  long stride = 0;
  /// Replaces eval_F of the problem objective in the trace.
  std::function<double(const SymMatrix&)> evaluator;
  std::function<void(const IterateView&)> observer;
};

class solver_error : public std::runtime_error {
 public:
  solver_error(const std::string& what, long iteration)
      : std::runtime_error(what), iteration_(iteration) {}
  long iteration() const { return iteration_; }

 private:
  long iteration_;
};

namespace detail {

using Clock = std::chrono::steady_clock;

/// Trace bookkeeping. Elapsed time counts oracle calls and updates only;
/// the exact objective evaluations done for the trace are excluded.
class Recorder {
 public:
  Recorder(const CompositeProblem& prob, const RunOptions& opts, long horizon)
      : prob_(prob), opts_(opts), horizon_(horizon), start_(Clock::now()) {
    stride_ = opts.stride > 0 ? opts.stride : (prob.dim() <= 150 ? 1 : 10);
  }

  template <class F>
  GradSample timed_oracle(F&& call, long t) {
    const auto t0 = Clock::now();
    try {
      GradSample g = call();
      oracle_s_ += seconds(Clock::now() - t0);
      return g;
    } catch (const std::exception& e) {
      std::throw_with_nested(
          solver_error("oracle failed at iteration " + std::to_string(t) + ": " + e.what(), t));
    }
  }

  void record(long t, const SymMatrix& aggregate, double grad_norm) {
    if (!(t == 1 || t == horizon_ || t % stride_ == 0)) return;
    const auto t0 = Clock::now();
    const double elapsed = seconds(t0 - start_) - excluded_s_;
    const double f = opts_.evaluator ? opts_.evaluator(aggregate)
                                     : eval_F(aggregate, prob_.objective());
    const double psi = f + prob_.mu * (aggregate.dense() - prob_.x1.dense()).squaredNorm();
    points_.push_back({t, f, psi, grad_norm, elapsed});
    excluded_s_ += seconds(Clock::now() - t0);
  }

  void observe(const IterateView& view) const {
    if (opts_.observer) opts_.observer(view);
  }

  RunTrace finish(SymMatrix final_point, ConfigEcho echo, std::uint64_t seed) && {
    return RunTrace{std::move(points_), std::move(final_point), std::move(echo), seed, oracle_s_};
  }

 private:
  static double seconds(Clock::duration d) { return std::chrono::duration<double>(d).count(); }

  const CompositeProblem& prob_;
  const RunOptions& opts_;
  long horizon_;
  long stride_ = 1;
  Clock::time_point start_;
  double excluded_s_ = 0.0;
  double oracle_s_ = 0.0;
  std::vector<TracePoint> points_;
};

inline void require_horizon(long T) {
  if (T < 1) throw std::invalid_argument("solver: T must be >= 1");
}

inline ConfigEcho base_echo(const char* solver, const CompositeProblem& prob, long T,
                            std::uint64_t seed) {
  return {{"solver", solver},
          {"T", std::to_string(T)},
          {"seed", std::to_string(seed)},
          {"dim", std::to_string(prob.dim())},
          {"rho", format_real(prob.feasible.radius())},
          {"mu", format_real(prob.mu)},
          {"oracle", describe(prob.oracle)},
          {"objective", to_string(prob.objective())},
          {"x1", "box_center"}};
}

inline auto problem_oracle(const CompositeProblem& prob) {
  return [&prob](const SymMatrix& x, Rng& rng) { return draw(prob.oracle, x, rng); };
}

}  // namespace detail

/// Non-accelerated oblivious mirror descent. Each step solves
///   X_{t+1} = argmin_x alpha_t [<g_t, x> + H(x)] + gamma_t D^H(x, X_t)
/// with g_t drawn at X_t; the trace follows X^ag_t = sum alpha_s X_s / A_t.
template <GradOracle Oracle>
RunTrace oblivious_smd(const CompositeProblem& prob, Oracle&& oracle, const StepSchedule& sched,
                       long T, Rng& rng, std::uint64_t seed = 0, const RunOptions& opts = {}) {
  detail::require_horizon(T);
  prob.validate();
  verify_schedule(sched, T);
  detail::Recorder rec(prob, opts, T);

  SymMatrix x = prob.x1;
  SymMatrix agg = prob.x1;
  double cumulative = 0.0;
  for (long t = 1; t <= T; ++t) {
    const auto [alpha, gamma] = schedule_at(sched, t);
    const double prev = cumulative;
    cumulative += alpha;
    agg = SymMatrix::combine(prev / cumulative, agg, alpha / cumulative, x);

    const GradSample g = rec.timed_oracle([&] { return oracle(x, rng); }, t);
    SymMatrix next = prox_step(x, g.grad, alpha, gamma, prob);
    rec.observe({t, alpha, gamma, alpha / (2.0 * prob.mu * (alpha + gamma)), x, next, agg, g});
    rec.record(t, agg, g.grad.frob_norm());
    x = std::move(next);
  }

  auto echo = detail::base_echo("oblivious_smd", prob, T, seed);
  echo.emplace_back("degree", std::to_string(sched.degree));
  echo.emplace_back("scale", format_real(sched.scale));
  return std::move(rec).finish(std::move(agg), std::move(echo), seed);
}

inline RunTrace oblivious_smd(const CompositeProblem& prob, const StepSchedule& sched, long T,
                              Rng& rng, std::uint64_t seed = 0, const RunOptions& opts = {}) {
  return oblivious_smd(prob, detail::problem_oracle(prob), sched, T, rng, seed, opts);
}

/// Accelerated oblivious mirror descent: the oracle is queried at
///   X^md_t = (A_{t-1}/A_t) X^ag_t + (alpha_t/A_t) X_t,
/// the prox step is taken from X_t, and
///   X^ag_{t+1} = (A_{t-1}/A_t) X^ag_t + (alpha_t/A_t) X_{t+1}.
/// The trace at t records X^ag_{t+1}.
template <GradOracle Oracle>
RunTrace oblivious_acsmd(const CompositeProblem& prob, Oracle&& oracle, const StepSchedule& sched,
                         long T, Rng& rng, std::uint64_t seed = 0, const RunOptions& opts = {}) {
  detail::require_horizon(T);
  prob.validate();
  verify_schedule(sched, T);
  detail::Recorder rec(prob, opts, T);

  SymMatrix x = prob.x1;
  SymMatrix agg = prob.x1;
  double cumulative = 0.0;
  for (long t = 1; t <= T; ++t) {
    const auto [alpha, gamma] = schedule_at(sched, t);
    const double prev = cumulative;
    cumulative += alpha;
    const double keep = prev / cumulative, mix = alpha / cumulative;
    const SymMatrix md = SymMatrix::combine(keep, agg, mix, x);

    const GradSample g = rec.timed_oracle([&] { return oracle(md, rng); }, t);
    SymMatrix next = prox_step(x, g.grad, alpha, gamma, prob);
    agg = SymMatrix::combine(keep, agg, mix, next);
    rec.observe({t, alpha, gamma, alpha / (2.0 * prob.mu * (alpha + gamma)), md, next, agg, g});
    rec.record(t, agg, g.grad.frob_norm());
    x = std::move(next);
  }

  auto echo = detail::base_echo("oblivious_acsmd", prob, T, seed);
  echo.emplace_back("degree", std::to_string(sched.degree));
  echo.emplace_back("scale", format_real(sched.scale));
  return std::move(rec).finish(std::move(agg), std::move(echo), seed);
}

inline RunTrace oblivious_acsmd(const CompositeProblem& prob, const StepSchedule& sched, long T,
                                Rng& rng, std::uint64_t seed = 0, const RunOptions& opts = {}) {
  return oblivious_acsmd(prob, detail::problem_oracle(prob), sched, T, rng, seed, opts);
}

/// eta_t = 2D / sqrt(M^2 + sum_{tau<=t} ||g_tau||^2); zero when the
/// denominator vanishes.
inline double levy_step(double D, double M, double sum_sq_grad) {
  const double den = std::sqrt(M * M + sum_sq_grad);
  return den > 0.0 ? 2.0 * D / den : 0.0;
}

/// Projected stochastic gradient with Levy's adaptive step (unit inner
/// weights); the trace follows the uniform average of X_1..X_t.
template <GradOracle Oracle>
RunTrace levy_adaptive(const CompositeProblem& prob, Oracle&& oracle, double D, double M, long T,
                       Rng& rng, std::uint64_t seed = 0, const RunOptions& opts = {}) {
  detail::require_horizon(T);
  prob.validate();
  if (!(D > 0.0)) throw std::invalid_argument("levy_adaptive: D must be > 0");
  if (!(M >= 0.0)) throw std::invalid_argument("levy_adaptive: M must be >= 0");
  detail::Recorder rec(prob, opts, T);

  SymMatrix x = prob.x1;
  SymMatrix avg = prob.x1;
  double sum_sq = 0.0;
  for (long t = 1; t <= T; ++t) {
    const double td = static_cast<double>(t);
    avg = SymMatrix::combine((td - 1.0) / td, avg, 1.0 / td, x);
    const GradSample g = rec.timed_oracle([&] { return oracle(x, rng); }, t);
    const double gnorm = g.grad.frob_norm();
    sum_sq += gnorm * gnorm;
    const double eta = levy_step(D, M, sum_sq);
    SymMatrix next = project_box(SymMatrix::combine(1.0, x, -eta, g.grad), prob.feasible);
    rec.observe({t, 1.0, 0.0, eta, x, next, avg, g});
    rec.record(t, avg, gnorm);
    x = std::move(next);
  }

  auto echo = detail::base_echo("levy_adaptive", prob, T, seed);
  echo.emplace_back("D", format_real(D));
  echo.emplace_back("M", format_real(M));
  return std::move(rec).finish(std::move(avg), std::move(echo), seed);
}

inline RunTrace levy_adaptive(const CompositeProblem& prob, double D, double M, long T, Rng& rng,
                              std::uint64_t seed = 0, const RunOptions& opts = {}) {
  return levy_adaptive(prob, detail::problem_oracle(prob), D, M, T, rng, seed, opts);
}

/// Base step of accelerated stochastic approximation:
///   min{ 1/(2L), sqrt(6) D / (sigma (T+2)^{3/2}) },
/// the second term only when sigma > 0. Step t uses (t+1)/2 times this.
inline double lan_base_step(double L, double sigma, double D, long T) {
  double step = 1.0 / (2.0 * L);
  if (sigma > 0.0)
    step = std::min(step, std::sqrt(6.0) * D / (sigma * std::pow(static_cast<double>(T) + 2.0, 1.5)));
  return step;
}

/// Accelerated stochastic approximation with beta_t = (t+1)/2:
///   X^md_t = (1 - 1/beta_t) X^ag_t + X_t / beta_t
///   X_{t+1} = Proj(X_t - gamma_t g(X^md_t)),  gamma_t = (t+1)/2 * base
///   X^ag_{t+1} = (1 - 1/beta_t) X^ag_t + X_{t+1} / beta_t
template <GradOracle Oracle>
RunTrace lan_acsa(const CompositeProblem& prob, Oracle&& oracle, double L, double sigma, long T,
                  Rng& rng, std::uint64_t seed = 0, const RunOptions& opts = {}) {
  detail::require_horizon(T);
  prob.validate();
  if (!(L > 0.0)) throw std::invalid_argument("lan_acsa: L must be > 0");
  if (!(sigma >= 0.0)) throw std::invalid_argument("lan_acsa: sigma must be >= 0");
  detail::Recorder rec(prob, opts, T);
  const double base = lan_base_step(L, sigma, prob.feasible.diameter_frobenius(), T);

  SymMatrix x = prob.x1;
  SymMatrix agg = prob.x1;
  for (long t = 1; t <= T; ++t) {
    const double inv_beta = 2.0 / (static_cast<double>(t) + 1.0);
    const SymMatrix md = SymMatrix::combine(1.0 - inv_beta, agg, inv_beta, x);
    const GradSample g = rec.timed_oracle([&] { return oracle(md, rng); }, t);
    const double step = 0.5 * (static_cast<double>(t) + 1.0) * base;
    SymMatrix next = project_box(SymMatrix::combine(1.0, x, -step, g.grad), prob.feasible);
    agg = SymMatrix::combine(1.0 - inv_beta, agg, inv_beta, next);
    rec.observe({t, inv_beta, 0.0, step, md, next, agg, g});
    rec.record(t, agg, g.grad.frob_norm());
    x = std::move(next);
  }

  auto echo = detail::base_echo("lan_acsa", prob, T, seed);
  echo.emplace_back("L", format_real(L));
  echo.emplace_back("sigma", format_real(sigma));
  return std::move(rec).finish(std::move(agg), std::move(echo), seed);
}

inline RunTrace lan_acsa(const CompositeProblem& prob, double L, double sigma, long T, Rng& rng,
                         std::uint64_t seed = 0, const RunOptions& opts = {}) {
  return lan_acsa(prob, detail::problem_oracle(prob), L, sigma, T, rng, seed, opts);
}

inline double relative_md_step(double lstar, double gamma_lb, long T) {
  return 1.0 / std::sqrt(gamma_lb * lstar * static_cast<double>(T));
}

/// Projected stochastic gradient with constant step 1/sqrt(Gamma Lstar T)
/// and uniform averaging of X_1..X_t.
template <GradOracle Oracle>
RunTrace relative_md(const CompositeProblem& prob, Oracle&& oracle, double lstar, double gamma_lb,
                     long T, Rng& rng, std::uint64_t seed = 0, const RunOptions& opts = {}) {
  detail::require_horizon(T);
  prob.validate();
  if (!(lstar > 0.0) || !(gamma_lb > 0.0))
    throw std::invalid_argument("relative_md: Lstar and Gamma must be > 0");
  detail::Recorder rec(prob, opts, T);
  const double eta = relative_md_step(lstar, gamma_lb, T);

  SymMatrix x = prob.x1;
  SymMatrix avg = prob.x1;
  for (long t = 1; t <= T; ++t) {
    const double td = static_cast<double>(t);
    avg = SymMatrix::combine((td - 1.0) / td, avg, 1.0 / td, x);
    const GradSample g = rec.timed_oracle([&] { return oracle(x, rng); }, t);
    SymMatrix next = project_box(SymMatrix::combine(1.0, x, -eta, g.grad), prob.feasible);
    rec.observe({t, 1.0, 0.0, eta, x, next, avg, g});
    rec.record(t, avg, g.grad.frob_norm());
    x = std::move(next);
  }

  auto echo = detail::base_echo("relative_md", prob, T, seed);
  echo.emplace_back("Lstar", format_real(lstar));
  echo.emplace_back("Gamma", format_real(gamma_lb));
  return std::move(rec).finish(std::move(avg), std::move(echo), seed);
}

inline RunTrace relative_md(const CompositeProblem& prob, double lstar, double gamma_lb, long T,
                            Rng& rng, std::uint64_t seed = 0, const RunOptions& opts = {}) {
  return relative_md(prob, detail::problem_oracle(prob), lstar, gamma_lb, T, rng, seed, opts);
}

}  // namespace osmd
