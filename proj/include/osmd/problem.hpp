#pragma once

// Box-constrained maximum-eigenvalue problem
//
//   min lambda_max(X)  s.t.  |X_ij - A_ij| <= rho,
//
// in the complementary composite form Psi(X) = F(X) + mu ||X - X1||_F^2,
// together with the closed-form prox step shared by the oblivious solvers
// and the synthetic instance generator.

#include <cmath>
#include <cstdint>
#include <istream>
#include <optional>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <string>

#include "osmd/linalg.hpp"
#include "osmd/oracles.hpp"
#include "osmd/rng.hpp"

namespace osmd {

class BoxSet {
 public:
  BoxSet(SymMatrix center, double radius) : center_(std::move(center)), radius_(radius) {
    if (!(radius_ > 0.0) || !std::isfinite(radius_))
      throw std::invalid_argument("BoxSet: radius must be finite and > 0, got " +
                                  format_real(radius_));
  }

  const SymMatrix& center() const { return center_; }
  double radius() const { return radius_; }
  long dim() const { return center_.dim(); }

  /// Frobenius diameter of the entrywise box: 2 rho d.
  double diameter_frobenius() const { return 2.0 * radius_ * static_cast<double>(dim()); }

  /// max_ij |X_ij - A_ij| - rho; feasible iff <= 0 (up to tolerance).
  double violation(const SymMatrix& x) const {
    require_same_dim(dim(), x.dim(), "BoxSet::violation");
    return (x.dense() - center_.dense()).cwiseAbs().maxCoeff() - radius_;
  }
  bool contains(const SymMatrix& x, double tol = 1e-12) const { return violation(x) <= tol; }

  bool operator==(const BoxSet& o) const {
    return radius_ == o.radius_ && center_ == o.center_;
  }

 private:
  SymMatrix center_;
  double radius_;
};

/// Entrywise clamp to [A - rho, A + rho]: the Frobenius projection onto the box.
inline SymMatrix project_box(const SymMatrix& x, const BoxSet& box) {
  require_same_dim(x.dim(), box.dim(), "project_box");
  const auto& a = box.center().dense().array();
  const double r = box.radius();
  return SymMatrix::assume_symmetric(x.dense().array().max(a - r).min(a + r).matrix());
}

/// Problem constants the oblivious solvers never read; they parametrize the
/// baselines and the reports.
struct Diagnostics {
  std::optional<double> M;       // E||G||^2 <= M^2
  std::optional<double> L;       // smoothness of F
  std::optional<double> sigma2;  // oracle variance
  std::optional<double> Lstar;   // E||G||^2 <= 2 Lstar F
  std::optional<double> Gamma;   // F(X) >= Gamma ||X - X1||^2
  std::optional<double> D0;      // ||X1 - X_F||
  std::optional<long> T0;        // transition time of the oblivious schedule

  void validate() const {
    auto positive = [](const std::optional<double>& v, const char* name) {
      if (v && !(*v > 0.0))
        throw std::invalid_argument(std::string("Diagnostics: ") + name + " must be > 0");
    };
    positive(M, "M");
    positive(L, "L");
    positive(sigma2, "sigma2");
    positive(Lstar, "Lstar");
    positive(Gamma, "Gamma");
    positive(D0, "D0");
    if (T0 && *T0 < 1) throw std::invalid_argument("Diagnostics: T0 must be >= 1");
  }
};

struct CompositeProblem {
  BoxSet feasible;
  double mu;
  SymMatrix x1;
  OracleSpec oracle;

  Objective objective() const { return objective_of(oracle); }
  long dim() const { return feasible.dim(); }

  void validate() const {
    if (!(mu > 0.0) || !std::isfinite(mu))
      throw std::invalid_argument("CompositeProblem: mu must be finite and > 0");
    require_same_dim(feasible.dim(), x1.dim(), "CompositeProblem");
    if (!feasible.contains(x1, 1e-12))
      throw std::invalid_argument("CompositeProblem: start point is outside the box");
  }
};

/// Builds a validated problem starting from the box center.
inline CompositeProblem make_problem(const BoxSet& box, double mu, OracleSpec oracle) {
  CompositeProblem prob{box, mu, box.center(), std::move(oracle)};
  prob.validate();
  return prob;
}

inline double default_mu(long horizon) { return 1.0 / std::sqrt(static_cast<double>(horizon)); }

/// argmin_{x in box} alpha [<g, x> + mu ||x - X1||^2] + gamma mu ||x - Xt||^2.
///
/// The objective separates over entries into strictly convex scalar
/// quadratics, so clamping the unconstrained stationary point
/// (2mu(alpha X1 + gamma Xt) - alpha g) / (2mu(alpha + gamma)) is exact.
inline SymMatrix prox_step(const SymMatrix& xt, const SymMatrix& g, double alpha, double gamma,
                           const CompositeProblem& prob) {
  if (!(alpha > 0.0) || !(gamma > 0.0))
    throw std::invalid_argument("prox_step: alpha and gamma must be > 0 (alpha=" +
                                format_real(alpha) + ", gamma=" + format_real(gamma) + ")");
  require_same_dim(xt.dim(), g.dim(), "prox_step");
  require_same_dim(xt.dim(), prob.dim(), "prox_step");
  const double mu = prob.mu;
  const double den = 2.0 * mu * (alpha + gamma);
  const DenseMatrix stationary =
      ((2.0 * mu) * (alpha * prob.x1.dense() + gamma * xt.dense()) - alpha * g.dense()) / den;
  SymMatrix next = project_box(SymMatrix::assume_symmetric(stationary), prob.feasible);

#ifndef NDEBUG
  // First-order optimality per entry: derivative vanishes in the interior,
  // points inward at an active bound.
  const auto& a = prob.feasible.center().dense();
  const double r = prob.feasible.radius();
  for (long j = 0; j < next.dim(); ++j)
    for (long i = 0; i < next.dim(); ++i) {
      const double x = next(i, j);
      const double deriv = alpha * g(i, j) + 2.0 * mu * alpha * (x - prob.x1(i, j)) +
                           2.0 * mu * gamma * (x - xt(i, j));
      const double scale = 1e-9 * (1.0 + std::abs(alpha * g(i, j)) + den * (std::abs(x) + 1.0));
      const bool at_lo = x <= a(i, j) - r, at_hi = x >= a(i, j) + r;
      assert(at_lo ? deriv >= -scale : at_hi ? deriv <= scale : std::abs(deriv) <= scale);
    }
#endif
  return next;
}

inline double eval_F(const SymMatrix& x, Objective objective = Objective::max_eig) {
  if (objective == Objective::max_eig) return max_eigenvalue(x);
  const auto ev = full_spectrum(x);
  return std::max(ev.front() * ev.front(), ev.back() * ev.back());
}

inline double eval_Psi(const SymMatrix& x, const CompositeProblem& prob) {
  const double dist = (x.dense() - prob.x1.dense()).squaredNorm();
  return eval_F(x, prob.objective()) + prob.mu * dist;
}

/// Synthetic instance: C = diag(exp(-1), ..., exp(-d)) plus i.i.d.
/// N(0, sigma^2) noise on every entry, symmetrized, rescaled so the largest
/// |entry| is 1, with rho = max(diag(A)) / 2.
inline BoxSet gen_instance(long d, double noise_sigma, std::uint64_t seed) {
  if (d < 1) throw std::invalid_argument("gen_instance: d must be >= 1");
  if (!(noise_sigma >= 0.0)) throw std::invalid_argument("gen_instance: noise_sigma must be >= 0");
  Rng rng(seed);
  DenseMatrix raw = DenseMatrix::Zero(d, d);
  for (long i = 0; i < d; ++i) raw(i, i) = std::exp(-static_cast<double>(i + 1));
  for (long i = 0; i < d; ++i)
    for (long j = 0; j < d; ++j) raw(i, j) += noise_sigma * rng.normal();
  SymMatrix a = SymMatrix::from(raw);
  a = SymMatrix::assume_symmetric(a.dense() / a.max_abs());
  const double rho = a.dense().diagonal().maxCoeff() / 2.0;
  if (!(rho > 0.0))
    throw std::runtime_error("gen_instance: max diagonal entry is not positive (seed " +
                             std::to_string(seed) + "); no valid radius");
  return BoxSet(std::move(a), rho);
}

/// A generated instance together with what produced it.
struct InstanceFile {
  BoxSet box;
  std::uint64_t seed = 0;
  double noise_sigma = 0.0;
};

inline constexpr const char* kInstanceMagic = "osmd-instance";

/// Text format: magic/version line, `dim`, `rho`, `seed`, `noise_sigma`
/// lines, then the d rows of A, entries in shortest round-trip decimal.
inline void write_instance(std::ostream& os, const InstanceFile& inst) {
  const auto& a = inst.box.center();
  os << kInstanceMagic << " 1\n";
  os << "dim " << a.dim() << "\n";
  os << "rho " << format_real(inst.box.radius()) << "\n";
  os << "seed " << inst.seed << "\n";
  os << "noise_sigma " << format_real(inst.noise_sigma) << "\n";
  for (long i = 0; i < a.dim(); ++i) {
    for (long j = 0; j < a.dim(); ++j) os << (j ? " " : "") << format_real(a(i, j));
    os << "\n";
  }
}

inline InstanceFile read_instance(std::istream& is) {
  auto fail = [](const std::string& why) -> std::runtime_error {
    return std::runtime_error("read_instance: " + why);
  };
  std::string key;
  int version = 0;
  if (!(is >> key >> version) || key != kInstanceMagic || version != 1)
    throw fail("missing '" + std::string(kInstanceMagic) + " 1' header");
  auto expect = [&](const char* name) {
    if (!(is >> key) || key != name) throw fail(std::string("expected field '") + name + "'");
  };
  long d = 0;
  double rho = 0.0, sigma = 0.0;
  std::uint64_t seed = 0;
  expect("dim");
  if (!(is >> d) || d < 1) throw fail("bad dim");
  expect("rho");
  if (!(is >> rho)) throw fail("bad rho");
  expect("seed");
  if (!(is >> seed)) throw fail("bad seed");
  expect("noise_sigma");
  if (!(is >> sigma)) throw fail("bad noise_sigma");
  DenseMatrix a(d, d);
  for (long i = 0; i < d; ++i)
    for (long j = 0; j < d; ++j)
      if (!(is >> a(i, j))) throw fail("truncated matrix body");
  if (!(a.array() == a.transpose().array()).all()) throw fail("matrix is not symmetric");
  return {BoxSet(SymMatrix::from(a), rho), seed, sigma};
}

}  // namespace osmd
