#include <gtest/gtest.h>

#include "osmd/linalg.hpp"
#include "support.hpp"

using namespace osmd;
using testing_oracles::jacobi_eigen;
using testing_oracles::random_sym;

namespace {

bool exactly_symmetric(const SymMatrix& m) {
  return (m.dense().array() == m.dense().transpose().array()).all();
}

DenseMatrix mat2(double a, double b, double c, double d) {
  DenseMatrix m(2, 2);
  m << a, b, c, d;
  return m;
}

}  // namespace

TEST(SymFrom, IdentityUnchanged) {
  EXPECT_EQ(sym_from(DenseMatrix::Identity(3, 3)), SymMatrix::identity(3));
}

TEST(SymFrom, AveragesTranspose) {
  const auto s = sym_from(mat2(0, 2, 0, 0));
  EXPECT_EQ(s.dense(), mat2(0, 1, 1, 0));
}

TEST(SymFrom, RandomMatchesRecomputation) {
  Rng rng(1);
  DenseMatrix m(5, 5);
  for (long i = 0; i < 5; ++i)
    for (long j = 0; j < 5; ++j) m(i, j) = rng.normal();
  const auto s = sym_from(m);
  for (long i = 0; i < 5; ++i)
    for (long j = 0; j < 5; ++j) EXPECT_EQ(s(i, j), (m(i, j) + m(j, i)) / 2.0);
  EXPECT_TRUE(exactly_symmetric(s));
}

TEST(SymFrom, SymmetricInputBitIdentical) {
  Rng rng(2);
  const auto a = random_sym(6, rng);
  EXPECT_EQ(sym_from(a.dense()), a);
}

TEST(SymFrom, NonSquareThrows) {
  EXPECT_THROW(sym_from(DenseMatrix::Zero(2, 3)), dimension_error);
  EXPECT_THROW(sym_from(DenseMatrix(0, 0)), dimension_error);
}

TEST(SymMatrix, OperationsStaySymmetric) {
  Rng rng(3);
  for (int trial = 0; trial < 10; ++trial) {
    const auto a = random_sym(9, rng), b = random_sym(9, rng);
    const Vector v = testing_oracles::random_vector(9, rng);
    EXPECT_TRUE(exactly_symmetric(a + b));
    EXPECT_TRUE(exactly_symmetric(a - b));
    EXPECT_TRUE(exactly_symmetric(a * 0.37));
    EXPECT_TRUE(exactly_symmetric(SymMatrix::combine(0.3, a, -1.7, b)));
    EXPECT_TRUE(exactly_symmetric(SymMatrix::outer(v)));
    EXPECT_TRUE(exactly_symmetric(a.shifted(2.5)));
  }
}

TEST(SymMatrix, FactoriesAndAccessors) {
  Vector diag(3);
  diag << 1, 2, 3;
  const auto d = SymMatrix::diagonal(diag);
  EXPECT_EQ(d.trace(), 6.0);
  EXPECT_EQ(d.max_abs(), 3.0);
  EXPECT_DOUBLE_EQ(d.frob_norm(), std::sqrt(14.0));
  EXPECT_EQ(SymMatrix::zeros(2).frob_norm(), 0.0);
  EXPECT_EQ(SymMatrix::identity(4).trace(), 4.0);
  EXPECT_EQ(d.shifted(1.0)(2, 2), 4.0);
  EXPECT_THROW(SymMatrix::zeros(0), dimension_error);
  EXPECT_THROW(SymMatrix::identity(2) + SymMatrix::identity(3), dimension_error);
}

TEST(FrobInner, Examples) {
  EXPECT_EQ(frob_inner(SymMatrix::identity(2), SymMatrix::identity(2)), 2.0);
  Rng rng(4);
  const auto a = random_sym(4, rng);
  EXPECT_EQ(frob_inner(a, SymMatrix::zeros(4)), 0.0);
  EXPECT_THROW(frob_inner(a, SymMatrix::zeros(3)), dimension_error);
}

TEST(FrobInner, MatchesNaiveLoopAndIsBilinear) {
  Rng rng(5);
  for (int trial = 0; trial < 20; ++trial) {
    const auto a = random_sym(7, rng), b = random_sym(7, rng), c = random_sym(7, rng);
    double naive = 0.0;
    for (long i = 0; i < 7; ++i)
      for (long j = 0; j < 7; ++j) naive += a(i, j) * b(i, j);
    EXPECT_NEAR(frob_inner(a, b), naive, 1e-12 * std::max(1.0, std::abs(naive)));
    EXPECT_DOUBLE_EQ(frob_inner(a, b), frob_inner(b, a));
    EXPECT_NEAR(frob_inner(a * 2.0 + c, b), 2.0 * frob_inner(a, b) + frob_inner(c, b), 1e-10);
  }
}

TEST(LeadingEigpair, Diagonal) {
  Vector diag(3);
  diag << 3, 1, 0;
  Rng rng(6);
  const EigPair ep = leading_eigpair(SymMatrix::diagonal(diag), rng);
  EXPECT_NEAR(ep.value, 3.0, 1e-8);
  EXPECT_NEAR(std::abs(ep.vector(0)), 1.0, 1e-8);
  EXPECT_NEAR(ep.vector.norm(), 1.0, 1e-12);
}

TEST(LeadingEigpair, IdentityAnyUnitVector) {
  Rng rng(7);
  const EigPair ep = leading_eigpair(SymMatrix::identity(5), rng);
  EXPECT_NEAR(ep.value, 1.0, 1e-12);
  EXPECT_NEAR(ep.vector.norm(), 1.0, 1e-12);
  EXPECT_LE(ep.residual, 1e-8);
}

TEST(LeadingEigpair, RandomMatchesJacobi) {
  Rng rng(8);
  for (int trial = 0; trial < 20; ++trial) {
    const auto m = random_sym(10, rng);
    // small random gaps can need more than the default 50*d steps
    const EigPair ep = leading_eigpair(m, rng, 1e-8, 20000);
    EXPECT_NEAR(ep.value, jacobi_eigen(m.dense()).values.front(), 1e-8);
    const double res = (m.apply(ep.vector) - ep.value * ep.vector).norm();
    EXPECT_LE(res, 1e-8 * std::max(1.0, std::abs(ep.value)));
    EXPECT_NEAR(ep.vector.norm(), 1.0, 1e-12);
  }
}

TEST(LeadingEigpair, NegativeDefiniteStillFindsMaximum) {
  Vector diag(3);
  diag << -1, -5, -9;  // dominant |lambda| is -9, maximum is -1
  Rng rng(9);
  EXPECT_NEAR(leading_eigpair(SymMatrix::diagonal(diag), rng).value, -1.0, 1e-8);
}

TEST(LeadingEigpair, NonConvergenceCarriesBestIterate) {
  // Nearly degenerate top pair: power iteration needs far more than 3 steps.
  Vector diag(4);
  diag << 1.0, 0.999999, 0.5, -0.2;
  Rng rng(10);
  try {
    leading_eigpair(SymMatrix::diagonal(diag), rng, 1e-12, 3);
    FAIL() << "expected convergence_error";
  } catch (const convergence_error& e) {
    EXPECT_EQ(e.best().vector.size(), 4);
    EXPECT_GT(e.best().iterations, 0);
    EXPECT_TRUE(std::isfinite(e.best().residual));
  }
  EXPECT_THROW(leading_eigpair(SymMatrix::identity(2), rng, 0.0), std::invalid_argument);
}

TEST(FullSpectrum, Examples) {
  Vector diag(3);
  diag << 1, 2, 3;
  EXPECT_EQ(full_spectrum(SymMatrix::diagonal(diag)), (std::vector<double>{3, 2, 1}));
  EXPECT_EQ(full_spectrum(SymMatrix::zeros(4)), std::vector<double>(4, 0.0));
}

TEST(FullSpectrum, InvariantsAndJacobiAgreement) {
  Rng rng(11);
  for (long d : {1L, 2L, 8L, 20L, 64L}) {
    const auto m = random_sym(d, rng);
    const auto ev = full_spectrum(m);
    ASSERT_EQ(static_cast<long>(ev.size()), d);
    EXPECT_TRUE(std::is_sorted(ev.rbegin(), ev.rend()));
    double sum = 0.0, sq = 0.0;
    for (double l : ev) sum += l, sq += l * l;
    EXPECT_NEAR(sum, m.trace(), 1e-9 * std::max(1.0, std::abs(m.trace())));
    const double f2 = m.frob_norm() * m.frob_norm();
    EXPECT_NEAR(sq, f2, 1e-9 * f2);
    if (d <= 20) {
      const auto ref = jacobi_eigen(m.dense()).values;
      for (long i = 0; i < d; ++i) EXPECT_NEAR(ev[static_cast<std::size_t>(i)], ref[static_cast<std::size_t>(i)], 1e-9);
    }
  }
}

TEST(MatPowerApply, IdentityKeepsVector) {
  Vector u(3);
  u << 0.3, -1, 2;
  for (const auto& w : mat_power_apply(SymMatrix::identity(3), 4, u)) EXPECT_EQ(w, u);
}

TEST(MatPowerApply, ScalarPowers) {
  const auto w = mat_power_apply(SymMatrix::identity(1) * 2.0, 3, Vector::Ones(1));
  ASSERT_EQ(w.size(), 4u);
  EXPECT_EQ(w[0](0), 1.0);
  EXPECT_EQ(w[1](0), 2.0);
  EXPECT_EQ(w[2](0), 4.0);
  EXPECT_EQ(w[3](0), 8.0);
}

TEST(MatPowerApply, MatchesExplicitPower) {
  Rng rng(12);
  const auto x = random_sym(6, rng, 0.5);
  const Vector u = testing_oracles::random_vector(6, rng);
  DenseMatrix p = DenseMatrix::Identity(6, 6);
  for (int k = 0; k < 5; ++k) p = p * x.dense();
  const Vector expect = p * u;
  EXPECT_LE((mat_power_apply(x, 5, u).back() - expect).norm(), 1e-10 * expect.norm());
}

TEST(MatPowerApply, Associativity) {
  Rng rng(13);
  const auto x = random_sym(7, rng, 0.4);
  const Vector u = testing_oracles::random_vector(7, rng);
  const auto all = mat_power_apply(x, 9, u);
  const auto head = mat_power_apply(x, 4, u);
  const auto tail = mat_power_apply(x, 5, head.back());
  for (long i = 0; i < 7; ++i)
    EXPECT_NEAR(tail.back()(i), all.back()(i), 1e-12 * std::max(1e-300, all.back().cwiseAbs().maxCoeff()));
}

TEST(MatPowerApply, Errors) {
  EXPECT_THROW(mat_power_apply(SymMatrix::identity(3), 2, Vector::Ones(2)), dimension_error);
  EXPECT_THROW(mat_power_apply(SymMatrix::identity(2), 0, Vector::Ones(2)), std::invalid_argument);
}

TEST(FormatReal, RoundTrips) {
  Rng rng(14);
  for (int i = 0; i < 1000; ++i) {
    const double x = rng.normal() * std::pow(10.0, static_cast<int>(rng.next_u64() % 40) - 20);
    EXPECT_EQ(std::stod(format_real(x)), x);
  }
}

TEST(Rng, ReproducibleAndStreamsDiffer) {
  Rng a(5), b(5), c(5, 1);
  for (int i = 0; i < 100; ++i) {
    const double x = a.normal();
    EXPECT_EQ(x, b.normal());
    (void)c;
  }
  Rng d(5), e(5, 1);
  EXPECT_NE(d.next_u64(), e.next_u64());
  Rng f(9);
  for (int i = 0; i < 10000; ++i) {
    const double u = f.uniform();
    ASSERT_GE(u, 0.0);
    ASSERT_LT(u, 1.0);
  }
}
