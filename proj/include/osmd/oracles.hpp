#pragma once

// Stochastic first-order oracles for the maximum-eigenvalue objective.
//
//   smoothing_grad  Gaussian rank-one smoothing:
//                   F_{k,eps}(X) = E max_i lambda_max(X + (eps/d) z_i z_i^T)
//   power_grad      matrix-power smoothing:
//                   F_p(X) = E_u <X^p u, u>^{1/p},  u ~ U([0,1]^d)
//   exact_subgrad   deterministic v v^T for a unit top eigenvector
//
// Each draw returns the gradient sample together with a value estimate of the
// function it differentiates.

#include <cmath>
#include <stdexcept>
#include <string>
#include <variant>

#include "osmd/linalg.hpp"
#include "osmd/rng.hpp"

namespace osmd {

class oracle_domain_error : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

/// What an oracle smooths. The power oracle with `square_input` targets
/// lambda_max(X^2) = ||X||_2^2 instead of lambda_max(X).
enum class Objective { max_eig, max_eig_of_square };

inline const char* to_string(Objective o) {
  return o == Objective::max_eig ? "max_eig" : "max_eig_of_square";
}

enum class EigSolver { dense, power };

struct SmoothingOracleConfig {
  int k = 1;
  double epsilon = 1e-2;
  EigSolver solver = EigSolver::dense;

  void validate() const {
    if (k < 1) throw std::invalid_argument("smoothing oracle: k must be >= 1");
    if (!(epsilon > 0.0)) throw std::invalid_argument("smoothing oracle: epsilon must be > 0");
  }
};

struct PowerOracleConfig {
  int p = 21;
  bool square_input = false;

  void validate() const {
    if (p < 1) throw std::invalid_argument("power oracle: p must be >= 1");
  }
};

struct ExactOracleConfig {
  Objective objective = Objective::max_eig;
};

using OracleSpec = std::variant<SmoothingOracleConfig, PowerOracleConfig, ExactOracleConfig>;

struct GradSample {
  SymMatrix grad;
  double value;
};

inline Objective objective_of(const OracleSpec& spec) {
  if (const auto* p = std::get_if<PowerOracleConfig>(&spec))
    return p->square_input ? Objective::max_eig_of_square : Objective::max_eig;
  if (const auto* e = std::get_if<ExactOracleConfig>(&spec)) return e->objective;
  return Objective::max_eig;
}

inline GradSample smoothing_grad(const SymMatrix& x, const SmoothingOracleConfig& cfg, Rng& rng) {
  cfg.validate();
  const long d = x.dim();
  const double beta = cfg.epsilon / static_cast<double>(d);

  EigPair top;
  bool first = true;
  Vector z(d);
  for (int i = 0; i < cfg.k; ++i) {
    for (long j = 0; j < d; ++j) z(j) = rng.normal();
    const auto m = x + beta * SymMatrix::outer(z);
    EigPair ep = cfg.solver == EigSolver::dense ? dense_top_eigpair(m) : leading_eigpair(m, rng);
    if (first || ep.value > top.value) top = std::move(ep);
    first = false;
  }
  top.vector.normalize();
  return {SymMatrix::outer(top.vector), top.value};
}

/// Exact gradient of phi_u(X) = <X^p u, u>^{1/p} for one uniform draw u.
/// With `square_input` the function is phi_u(X^2) = ||X^p u||^{2/p}.
inline GradSample power_grad(const SymMatrix& x, const PowerOracleConfig& cfg, Rng& rng) {
  cfg.validate();
  const long d = x.dim();
  Vector u(d);
  for (long j = 0; j < d; ++j) u(j) = rng.uniform();

  const int q = cfg.square_input ? 2 * cfg.p : cfg.p;
  const std::vector<Vector> w = mat_power_apply(x, q, u);
  const double s = cfg.square_input ? w[cfg.p].squaredNorm() : w[cfg.p].dot(u);
  if (!(s > 0.0))
    throw oracle_domain_error("power oracle: <X^p u, u> = " + std::to_string(s) +
                              " is not positive for the sampled u");

  // sum_{j<q} w_j w_{q-1-j}^T as one rank-q product.
  DenseMatrix left(d, q), right(d, q);
  for (int j = 0; j < q; ++j) {
    left.col(j) = w[static_cast<std::size_t>(j)];
    right.col(j) = w[static_cast<std::size_t>(q - 1 - j)];
  }
  const double p = static_cast<double>(cfg.p);
  const double coeff = std::pow(s, 1.0 / p - 1.0) / p;
  const DenseMatrix sum = left * right.transpose();
  return {SymMatrix::from(coeff * sum), std::pow(s, 1.0 / p)};
}

inline GradSample exact_subgrad(const SymMatrix& x, Objective objective = Objective::max_eig) {
  const long d = x.dim();
  if (objective == Objective::max_eig) {
    EigPair top = dense_top_eigpair(x);
    top.vector.normalize();
    return {SymMatrix::outer(top.vector), top.value};
  }
  // lambda_max(X^2) is attained by the eigenvalue of largest magnitude.
  if (d == 1) return {SymMatrix::identity(1) * (2.0 * x(0, 0)), x(0, 0) * x(0, 0)};
  Eigen::SelfAdjointEigenSolver<DenseMatrix> es(x.dense(), Eigen::ComputeEigenvectors);
  const double lo = es.eigenvalues()(0), hi = es.eigenvalues()(d - 1);
  const long idx = std::abs(lo) > std::abs(hi) ? 0 : d - 1;
  const double lambda = es.eigenvalues()(idx);
  Vector v = es.eigenvectors().col(idx);
  v.normalize();
  return {SymMatrix::outer(v) * (2.0 * lambda), lambda * lambda};
}

inline GradSample draw(const OracleSpec& spec, const SymMatrix& x, Rng& rng) {
  return std::visit(
      [&](const auto& cfg) -> GradSample {
        using C = std::decay_t<decltype(cfg)>;
        if constexpr (std::is_same_v<C, SmoothingOracleConfig>)
          return smoothing_grad(x, cfg, rng);
        else if constexpr (std::is_same_v<C, PowerOracleConfig>)
          return power_grad(x, cfg, rng);
        else
          return exact_subgrad(x, cfg.objective);
      },
      spec);
}

inline std::string describe(const OracleSpec& spec) {
  return std::visit(
      [](const auto& cfg) -> std::string {
        using C = std::decay_t<decltype(cfg)>;
        if constexpr (std::is_same_v<C, SmoothingOracleConfig>)
          return "smoothing(k=" + std::to_string(cfg.k) + ",epsilon=" +
                 format_real(cfg.epsilon) + ")";
        else if constexpr (std::is_same_v<C, PowerOracleConfig>)
          return "power(p=" + std::to_string(cfg.p) +
                 ",square_input=" + (cfg.square_input ? "true" : "false") + ")";
        else
          return std::string("exact(") + to_string(cfg.objective) + ")";
      },
      spec);
}

}  // namespace osmd
