#pragma once

// Dense symmetric-matrix kernel. Storage is a full d x d Eigen matrix; the
// symmetric invariant is established once at construction and preserved by
// every operation below that returns a SymMatrix.

#include <Eigen/Dense>

#include <algorithm>
#include <charconv>
#include <cassert>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "osmd/rng.hpp"

namespace osmd {

using Vector = Eigen::VectorXd;
using DenseMatrix = Eigen::MatrixXd;

/// Shortest decimal that parses back to exactly `x`.
inline std::string format_real(double x) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, x);
  return std::string(buf, res.ptr);
}

class dimension_error : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

inline void require_same_dim(long a, long b, const char* what) {
  if (a != b)
    throw dimension_error(std::string(what) + ": dimension mismatch (" +
                          std::to_string(a) + " vs " + std::to_string(b) + ")");
}

class SymMatrix {
 public:
  /// Symmetrizes `raw` as (raw + raw^T)/2. An already-symmetric input is
  /// returned unchanged bit for bit.
  static SymMatrix from(const DenseMatrix& raw) {
    if (raw.rows() != raw.cols())
      throw dimension_error("sym_from: matrix is " + std::to_string(raw.rows()) +
                            "x" + std::to_string(raw.cols()) + ", not square");
    if (raw.rows() < 1) throw dimension_error("sym_from: empty matrix");
    DenseMatrix m = raw;
    const long d = m.rows();
    for (long j = 0; j < d; ++j)
      for (long i = j + 1; i < d; ++i) {
        const double s = 0.5 * (raw(i, j) + raw(j, i));
        m(i, j) = s;
        m(j, i) = s;
      }
    return SymMatrix(std::move(m));
  }

  /// Adopts `m` without symmetrizing. The caller guarantees exact symmetry
  /// (entrywise-identical operations on mirrored entries); debug builds check.
  static SymMatrix assume_symmetric(DenseMatrix m) {
    assert(m.rows() == m.cols() && m.rows() >= 1);
    assert((m.array() == m.transpose().array()).all());
    return SymMatrix(std::move(m));
  }

  static SymMatrix zeros(long d) {
    checked_dim(d);
    return SymMatrix(DenseMatrix::Zero(d, d));
  }
  static SymMatrix identity(long d) {
    checked_dim(d);
    return SymMatrix(DenseMatrix::Identity(d, d));
  }
  static SymMatrix diagonal(const Vector& diag) {
    checked_dim(diag.size());
    return SymMatrix(DenseMatrix(diag.asDiagonal()));
  }
  /// v v^T; exactly symmetric because v_i v_j == v_j v_i in IEEE arithmetic.
  static SymMatrix outer(const Vector& v) {
    checked_dim(v.size());
    return SymMatrix(v * v.transpose());
  }

  long dim() const { return m_.rows(); }
  double operator()(long i, long j) const { return m_(i, j); }
  const DenseMatrix& dense() const { return m_; }

  double trace() const { return m_.trace(); }
  double frob_norm() const { return m_.norm(); }
  double max_abs() const { return m_.cwiseAbs().maxCoeff(); }

  Vector apply(const Vector& u) const {
    require_same_dim(dim(), u.size(), "apply");
    return m_ * u;
  }

  SymMatrix operator+(const SymMatrix& o) const {
    require_same_dim(dim(), o.dim(), "operator+");
    return SymMatrix(m_ + o.m_);
  }
  SymMatrix operator-(const SymMatrix& o) const {
    require_same_dim(dim(), o.dim(), "operator-");
    return SymMatrix(m_ - o.m_);
  }
  SymMatrix operator*(double s) const { return SymMatrix(m_ * s); }
  friend SymMatrix operator*(double s, const SymMatrix& x) { return x * s; }

  /// a*x + b*y, evaluated entrywise in one pass.
  static SymMatrix combine(double a, const SymMatrix& x, double b, const SymMatrix& y) {
    require_same_dim(x.dim(), y.dim(), "combine");
    return SymMatrix(a * x.m_ + b * y.m_);
  }

  SymMatrix shifted(double c) const {
    DenseMatrix m = m_;
    m.diagonal().array() += c;
    return SymMatrix(std::move(m));
  }

  bool operator==(const SymMatrix& o) const {
    return dim() == o.dim() && (m_.array() == o.m_.array()).all();
  }

 private:
  explicit SymMatrix(DenseMatrix m) : m_(std::move(m)) {}
  static void checked_dim(long d) {
    if (d < 1) throw dimension_error("SymMatrix: dimension must be >= 1");
  }

  DenseMatrix m_;
};

inline SymMatrix sym_from(const DenseMatrix& raw) { return SymMatrix::from(raw); }

inline double frob_inner(const SymMatrix& a, const SymMatrix& b) {
  require_same_dim(a.dim(), b.dim(), "frob_inner");
  return (a.dense().array() * b.dense().array()).sum();
}

struct EigPair {
  double value = 0.0;
  Vector vector;
  int iterations = 0;
  double residual = 0.0;
};

class convergence_error : public std::runtime_error {
 public:
  convergence_error(const std::string& msg, EigPair best)
      : std::runtime_error(msg), best_(std::move(best)) {}
  const EigPair& best() const { return best_; }

 private:
  EigPair best_;
};

/// Eigenvalues in nonincreasing order.
inline std::vector<double> full_spectrum(const SymMatrix& m) {
  Eigen::SelfAdjointEigenSolver<DenseMatrix> es(m.dense(), Eigen::EigenvaluesOnly);
  const Vector& ev = es.eigenvalues();
  std::vector<double> out(ev.data(), ev.data() + ev.size());
  std::reverse(out.begin(), out.end());
  return out;
}

inline double max_eigenvalue(const SymMatrix& m) {
  if (m.dim() == 1) return m(0, 0);
  return full_spectrum(m).front();
}

/// Top eigenpair from a dense symmetric eigensolver (tridiagonal QR).
inline EigPair dense_top_eigpair(const SymMatrix& m) {
  const long d = m.dim();
  if (d == 1) return {m(0, 0), Vector::Ones(1), 0, 0.0};
  Eigen::SelfAdjointEigenSolver<DenseMatrix> es(m.dense(), Eigen::ComputeEigenvectors);
  EigPair out;
  out.value = es.eigenvalues()(d - 1);
  out.vector = es.eigenvectors().col(d - 1);
  out.residual = (m.dense() * out.vector - out.value * out.vector).norm();
  return out;
}

/// Shift c making lambda_max the strictly dominant eigenvalue of m + cI.
/// With lo the Gershgorin lower bound on lambda_min and hi = max_i m_ii <=
/// lambda_max, c = -(lo + hi)/2 + delta centers [lo, hi] on zero, so
/// |lambda_min + c| <= (hi - lo)/2 - delta < lambda_max + c.
inline double dominance_shift(const SymMatrix& m) {
  const DenseMatrix& a = m.dense();
  double lo = std::numeric_limits<double>::infinity();
  double hi = -std::numeric_limits<double>::infinity();
  for (long i = 0; i < a.rows(); ++i) {
    const double radius = a.row(i).cwiseAbs().sum() - std::abs(a(i, i));
    lo = std::min(lo, a(i, i) - radius);
    hi = std::max(hi, a(i, i));
  }
  const double half = 0.5 * (hi - lo);
  return -(lo + hi) / 2.0 + 0.1 * half;
}

/// Leading eigenpair by power iteration on m + cI, c = dominance_shift(m). The eigenvalue
/// is the Rayleigh quotient of m; convergence means
/// ||m v - lambda v|| <= tol * max(1, |lambda|). `max_iter` <= 0 selects 50*d.
inline EigPair leading_eigpair(const SymMatrix& m, Rng& rng, double tol = 1e-8,
                               int max_iter = 0) {
  if (!(tol > 0.0)) throw std::invalid_argument("leading_eigpair: tol must be > 0");
  const long d = m.dim();
  if (max_iter <= 0) max_iter = static_cast<int>(50 * d);
  const double shift = dominance_shift(m);
  const DenseMatrix& a = m.dense();

  Vector v(d);
  for (long i = 0; i < d; ++i) v(i) = rng.normal();
  v.normalize();

  EigPair best;
  best.residual = std::numeric_limits<double>::infinity();
  for (int it = 1; it <= max_iter; ++it) {
    Vector mv = a * v;
    const double lambda = v.dot(mv);
    const double res = (mv - lambda * v).norm();
    if (res < best.residual) best = {lambda, v, it, res};
    if (res <= tol * std::max(1.0, std::abs(lambda))) return best;
    mv += shift * v;
    const double nrm = mv.norm();
    if (nrm == 0.0) {
      // v fell into the null space of m + cI; restart from a fresh direction.
      for (long i = 0; i < d; ++i) v(i) = rng.normal();
      v.normalize();
      continue;
    }
    v = mv / nrm;
  }
  throw convergence_error("leading_eigpair: no convergence in " +
                              std::to_string(max_iter) + " iterations",
                          std::move(best));
}

/// [u, Xu, X^2 u, ..., X^p u].
inline std::vector<Vector> mat_power_apply(const SymMatrix& x, int p, const Vector& u) {
  require_same_dim(x.dim(), u.size(), "mat_power_apply");
  if (p < 1) throw std::invalid_argument("mat_power_apply: p must be >= 1");
  std::vector<Vector> w;
  w.reserve(static_cast<std::size_t>(p) + 1);
  w.push_back(u);
  for (int j = 0; j < p; ++j) w.push_back(x.dense() * w.back());
  return w;
}

}  // namespace osmd
