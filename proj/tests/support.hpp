#pragma once

// Independent test oracles: cyclic Jacobi eigensolver, golden-section
// search, central finite differences, random inputs.

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <functional>
#include <vector>

#include "osmd/linalg.hpp"
#include "osmd/rng.hpp"

namespace testing_oracles {

using osmd::DenseMatrix;
using osmd::SymMatrix;
using osmd::Vector;

/// Eigenvalues (descending) and eigenvectors (columns, same order) by cyclic
/// Jacobi rotations. Plain loops only, no Eigen decompositions.
struct JacobiResult {
  std::vector<double> values;
  DenseMatrix vectors;
};

inline JacobiResult jacobi_eigen(const DenseMatrix& input, double tol = 1e-14, int max_sweeps = 100) {
  const long n = input.rows();
  DenseMatrix a = input;
  DenseMatrix v = DenseMatrix::Identity(n, n);
  for (int sweep = 0; sweep < max_sweeps; ++sweep) {
    double off = 0.0, scale = 0.0;
    for (long i = 0; i < n; ++i)
      for (long j = 0; j < n; ++j) (i == j ? scale : off) += a(i, j) * a(i, j);
    if (off <= tol * tol * std::max(scale, 1e-300)) break;
    for (long p = 0; p < n; ++p)
      for (long q = p + 1; q < n; ++q) {
        if (a(p, q) == 0.0) continue;
        const double theta = (a(q, q) - a(p, p)) / (2.0 * a(p, q));
        const double t = (theta >= 0 ? 1.0 : -1.0) / (std::abs(theta) + std::sqrt(theta * theta + 1.0));
        const double c = 1.0 / std::sqrt(t * t + 1.0), s = t * c;
        for (long k = 0; k < n; ++k) {
          const double akp = a(k, p), akq = a(k, q);
          a(k, p) = c * akp - s * akq;
          a(k, q) = s * akp + c * akq;
        }
        for (long k = 0; k < n; ++k) {
          const double apk = a(p, k), aqk = a(q, k);
          a(p, k) = c * apk - s * aqk;
          a(q, k) = s * apk + c * aqk;
        }
        for (long k = 0; k < n; ++k) {
          const double vkp = v(k, p), vkq = v(k, q);
          v(k, p) = c * vkp - s * vkq;
          v(k, q) = s * vkp + c * vkq;
        }
      }
  }
  std::vector<long> order(static_cast<std::size_t>(n));
  for (long i = 0; i < n; ++i) order[static_cast<std::size_t>(i)] = i;
  std::sort(order.begin(), order.end(), [&](long x, long y) { return a(x, x) > a(y, y); });
  JacobiResult r{{}, DenseMatrix(n, n)};
  for (long k = 0; k < n; ++k) {
    const long i = order[static_cast<std::size_t>(k)];
    r.values.push_back(a(i, i));
    r.vectors.col(k) = v.col(i);
  }
  return r;
}

inline double jacobi_max_eig(const DenseMatrix& m) { return jacobi_eigen(m).values.front(); }

/// Minimizer of a unimodal f on [lo, hi].
inline double golden_section(const std::function<double(double)>& f, double lo, double hi,
                             double tol = 1e-12) {
  const double r = (std::sqrt(5.0) - 1.0) / 2.0;
  double a = lo, b = hi;
  double c = b - r * (b - a), d = a + r * (b - a);
  double fc = f(c), fd = f(d);
  while (b - a > tol) {
    if (fc < fd) {
      b = d;
      d = c;
      fd = fc;
      c = b - r * (b - a);
      fc = f(c);
    } else {
      a = c;
      c = d;
      fc = fd;
      d = a + r * (b - a);
      fd = f(d);
    }
  }
  const double x = 0.5 * (a + b);
  // Endpoints can be the minimizer of a monotone piece.
  double best = x, fb = f(x);
  for (double e : {lo, hi})
    if (f(e) < fb) best = e, fb = f(e);
  return best;
}

/// Central-difference gradient of f over symmetric perturbations
/// E_ij + E_ji (off-diagonal entries split in half, so the result is the
/// Frobenius gradient).
inline DenseMatrix fd_gradient(const std::function<double(const SymMatrix&)>& f, const SymMatrix& x,
                               double h) {
  const long d = x.dim();
  DenseMatrix g(d, d);
  for (long i = 0; i < d; ++i)
    for (long j = i; j < d; ++j) {
      DenseMatrix e = DenseMatrix::Zero(d, d);
      e(i, j) = e(j, i) = 1.0;
      const auto plus = SymMatrix::from(x.dense() + h * e), minus = SymMatrix::from(x.dense() - h * e);
      const double deriv = (f(plus) - f(minus)) / (2.0 * h);
      if (i == j)
        g(i, i) = deriv;
      else
        g(i, j) = g(j, i) = deriv / 2.0;
    }
  return g;
}

inline SymMatrix random_sym(long d, osmd::Rng& rng, double scale = 1.0) {
  DenseMatrix m(d, d);
  for (long i = 0; i < d; ++i)
    for (long j = 0; j < d; ++j) m(i, j) = scale * rng.normal();
  return SymMatrix::from(m);
}

inline SymMatrix random_psd(long d, osmd::Rng& rng) {
  DenseMatrix b(d, d);
  for (long i = 0; i < d; ++i)
    for (long j = 0; j < d; ++j) b(i, j) = rng.normal();
  return SymMatrix::from(b * b.transpose() / static_cast<double>(d) +
                         0.1 * DenseMatrix::Identity(d, d));
}

inline Vector random_vector(long d, osmd::Rng& rng) {
  Vector v(d);
  for (long i = 0; i < d; ++i) v(i) = rng.normal();
  return v;
}

}  // namespace testing_oracles
