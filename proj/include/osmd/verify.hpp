#pragma once

// Quick self-check of the library invariants on small random inputs, used by
// `osmd_cli verify`. Each check is independent and reports a one-line detail.

#include <cmath>
#include <functional>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include "osmd/harness.hpp"

namespace osmd {

struct CheckResult {
  std::string name;
  bool pass = false;
  std::string detail;
};

namespace detail {

inline SymMatrix random_sym(long d, Rng& rng, double scale = 1.0) {
  DenseMatrix m(d, d);
  for (long i = 0; i < d; ++i)
    for (long j = 0; j < d; ++j) m(i, j) = scale * rng.normal();
  return SymMatrix::from(m);
}

inline SymMatrix random_psd(long d, Rng& rng) {
  DenseMatrix b(d, d);
  for (long i = 0; i < d; ++i)
    for (long j = 0; j < d; ++j) b(i, j) = rng.normal();
  return SymMatrix::from(b * b.transpose() / static_cast<double>(d));
}

inline bool exactly_symmetric(const SymMatrix& m) {
  return (m.dense().array() == m.dense().transpose().array()).all();
}

inline std::string num(double v) {
  std::ostringstream os;
  os << v;
  return os.str();
}

}  // namespace detail

inline std::vector<CheckResult> run_invariant_suite(std::uint64_t seed = 7) {
  std::vector<CheckResult> out;
  auto check = [&out](std::string name, const std::function<std::string(bool&)>& body) {
    CheckResult r{std::move(name), true, {}};
    try {
      r.detail = body(r.pass);
    } catch (const std::exception& e) {
      r.pass = false;
      r.detail = std::string("exception: ") + e.what();
    }
    out.push_back(std::move(r));
  };
  Rng rng(seed);

  check("symmetry closure", [&](bool& ok) {
    for (int trial = 0; trial < 20; ++trial) {
      const auto a = detail::random_sym(7, rng), b = detail::random_sym(7, rng);
      Vector v(7);
      for (long i = 0; i < 7; ++i) v(i) = rng.normal();
      for (const SymMatrix& m : {a + b, a - b, a * 0.3, SymMatrix::combine(0.2, a, 0.8, b),
                                 SymMatrix::outer(v), a.shifted(1.5)})
        ok = ok && detail::exactly_symmetric(m);
    }
    return std::string("20 trials, 6 operations");
  });

  check("full_spectrum trace and norm identities", [&](bool& ok) {
    double worst = 0.0;
    for (long d : {1L, 5L, 16L, 64L}) {
      const auto m = detail::random_sym(d, rng);
      const auto ev = full_spectrum(m);
      double sum = 0.0, sq = 0.0;
      for (double l : ev) sum += l, sq += l * l;
      worst = std::max(worst, std::abs(sum - m.trace()) / std::max(1.0, std::abs(m.trace())));
      worst = std::max(worst, std::abs(sq - m.frob_norm() * m.frob_norm()) / std::max(1.0, sq));
      ok = ok && std::is_sorted(ev.rbegin(), ev.rend());
    }
    ok = ok && worst <= 1e-9;
    return "max relative error " + detail::num(worst);
  });

  check("leading_eigpair residual", [&](bool& ok) {
    double worst = 0.0;
    for (int trial = 0; trial < 10; ++trial) {
      const auto m = detail::random_sym(10, rng);
      const EigPair ep = leading_eigpair(m, rng);
      const double res = (m.apply(ep.vector) - ep.value * ep.vector).norm();
      worst = std::max(worst, res / std::max(1.0, std::abs(ep.value)));
      ok = ok && std::abs(ep.vector.norm() - 1.0) <= 1e-12 &&
           std::abs(ep.value - max_eigenvalue(m)) <= 1e-8 * std::max(1.0, std::abs(ep.value));
    }
    ok = ok && worst <= 1e-8;
    return "max scaled residual " + detail::num(worst);
  });

  check("mat_power_apply associativity", [&](bool& ok) {
    const auto m = detail::random_sym(6, rng, 0.5);
    Vector u(6);
    for (long i = 0; i < 6; ++i) u(i) = rng.uniform();
    const auto all = mat_power_apply(m, 7, u);
    const auto head = mat_power_apply(m, 3, u);
    const auto tail = mat_power_apply(m, 4, head.back());
    const double err = (tail.back() - all.back()).norm() / all.back().norm();
    ok = err <= 1e-12;
    return "relative error " + detail::num(err);
  });

  check("project_box idempotent and nonexpansive", [&](bool& ok) {
    const BoxSet box(detail::random_sym(5, rng), 0.3);
    for (int trial = 0; trial < 50; ++trial) {
      const auto x = detail::random_sym(5, rng, 2.0), y = detail::random_sym(5, rng, 2.0);
      const auto px = project_box(x, box), py = project_box(y, box);
      ok = ok && project_box(px, box) == px && box.contains(px) &&
           (px.dense() - py.dense()).norm() <= (x.dense() - y.dense()).norm() + 1e-12;
    }
    return std::string("50 pairs");
  });

  check("prox_step beats random feasible points", [&](bool& ok) {
    const BoxSet box(detail::random_sym(3, rng), 0.4);
    auto prob = make_problem(box, 0.5, ExactOracleConfig{});
    const auto xt = project_box(detail::random_sym(3, rng), box);
    const auto g = detail::random_sym(3, rng);
    const double alpha = 1.3, gamma = 2.1;
    auto objective = [&](const SymMatrix& x) {
      return alpha * (frob_inner(g, x) + prob.mu * (x.dense() - prob.x1.dense()).squaredNorm()) +
             gamma * prob.mu * (x.dense() - xt.dense()).squaredNorm();
    };
    const auto best = prox_step(xt, g, alpha, gamma, prob);
    const double fb = objective(best);
    for (int trial = 0; trial < 1000; ++trial) {
      DenseMatrix r(3, 3);
      for (long i = 0; i < 3; ++i)
        for (long j = 0; j < 3; ++j) r(i, j) = 2.0 * rng.uniform() - 1.0;
      const auto x = SymMatrix::combine(1.0, box.center(), box.radius(), SymMatrix::from(r));
      ok = ok && fb <= objective(x) + 1e-9;
    }
    return "prox objective " + detail::num(fb);
  });

  check("schedule law, n = 0..3, horizon 1e4", [&](bool& ok) {
    for (int n = 0; n <= 3; ++n)
      for (double c : {0.1, 1.0, 10.0}) ok = ok && !first_schedule_violation({n, c}, 10000);
    return std::string("12 schedules");
  });

  check("unit-norm gradients (smoothing, exact)", [&](bool& ok) {
    double worst = 0.0;
    const auto x = detail::random_sym(8, rng);
    for (int trial = 0; trial < 50; ++trial) {
      worst = std::max(worst, std::abs(smoothing_grad(x, {}, rng).grad.frob_norm() - 1.0));
      worst = std::max(worst, std::abs(exact_subgrad(x).grad.frob_norm() - 1.0));
    }
    ok = worst <= 1e-8;
    return "max | ||G||_F - 1 | = " + detail::num(worst);
  });

  check("power oracle upper bound", [&](bool& ok) {
    const PowerOracleConfig cfg{7, false};
    for (int trial = 0; trial < 200; ++trial) {
      const auto x = detail::random_psd(5, rng);
      Rng probe = rng;  // replay the u the oracle draws
      Vector u(5);
      for (long i = 0; i < 5; ++i) u(i) = probe.uniform();
      const GradSample g = power_grad(x, cfg, rng);
      ok = ok && g.value <= max_eigenvalue(x) * std::pow(u.squaredNorm(), 1.0 / 7.0) * (1 + 1e-12);
    }
    return std::string("200 draws");
  });

  check("solver feasibility, averaging and determinism", [&](bool& ok) {
    const BoxSet box = gen_instance(6, 0.2, seed);
    const auto prob = make_problem(box, default_mu(200), SmoothingOracleConfig{});
    std::vector<SymMatrix> iterates;
    double weight_sum = 0.0;
    DenseMatrix weighted = DenseMatrix::Zero(6, 6);
    RunOptions opts;
    opts.observer = [&](const IterateView& v) {
      ok = ok && box.contains(v.query, 1e-9) && box.contains(v.next, 1e-9) &&
           box.contains(v.aggregate, 1e-9);
      weighted += v.alpha * v.query.dense();
      weight_sum += v.alpha;
    };
    Rng r1(3), r2(3);
    const RunTrace a = oblivious_smd(prob, StepSchedule{2, 1.0}, 200, r1, 3, opts);
    const double avg_err = (weighted / weight_sum - a.final_point.dense()).norm() /
                           a.final_point.dense().norm();
    const RunTrace b = oblivious_smd(prob, StepSchedule{2, 1.0}, 200, r2, 3);
    bool same = a.iterations.size() == b.iterations.size() && a.final_point == b.final_point;
    for (std::size_t i = 0; same && i < a.iterations.size(); ++i)
      same = a.iterations[i].F_ag == b.iterations[i].F_ag && a.iterations[i].Psi_ag == b.iterations[i].Psi_ag;
    ok = ok && same && avg_err <= 1e-10;
    return "averaging relative error " + detail::num(avg_err);
  });

  check("trace round trip", [&](bool& ok) {
    const BoxSet box = gen_instance(4, 0.2, seed);
    const auto prob = make_problem(box, default_mu(30), SmoothingOracleConfig{});
    Rng r(5);
    const RunTrace a = oblivious_acsmd(prob, StepSchedule{}, 30, r, 5);
    std::stringstream csv, mat;
    write_trace(csv, a);
    write_matrix(mat, a.final_point);
    const RunTrace b = read_trace(csv, read_matrix(mat));
    ok = a.iterations == b.iterations && a.config_echo == b.config_echo && a.seed == b.seed &&
         a.final_point == b.final_point;
    return std::to_string(a.iterations.size()) + " rows";
  });

  check("gen_instance determinism", [&](bool& ok) {
    ok = gen_instance(12, 0.2, 42) == gen_instance(12, 0.2, 42) &&
         !(gen_instance(12, 0.2, 42) == gen_instance(12, 0.2, 43));
    return std::string("seed 42 twice, seed 43");
  });

  return out;
}

}  // namespace osmd
