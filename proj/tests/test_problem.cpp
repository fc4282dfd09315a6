#include <gtest/gtest.h>

#include <sstream>

#include "osmd/problem.hpp"
#include "support.hpp"

using namespace osmd;
using testing_oracles::golden_section;
using testing_oracles::random_sym;

namespace {

BoxSet random_box(long d, Rng& rng, double radius) { return BoxSet(random_sym(d, rng), radius); }

SymMatrix random_feasible(const BoxSet& box, Rng& rng) {
  DenseMatrix r(box.dim(), box.dim());
  for (long i = 0; i < box.dim(); ++i)
    for (long j = 0; j < box.dim(); ++j) r(i, j) = 2.0 * rng.uniform() - 1.0;
  return SymMatrix::combine(1.0, box.center(), box.radius(), SymMatrix::from(r));
}

}  // namespace

TEST(BoxSet, Validation) {
  EXPECT_THROW(BoxSet(SymMatrix::identity(2), 0.0), std::invalid_argument);
  EXPECT_THROW(BoxSet(SymMatrix::identity(2), -1.0), std::invalid_argument);
  const BoxSet box(SymMatrix::identity(3), 0.25);
  EXPECT_DOUBLE_EQ(box.diameter_frobenius(), 1.5);
  EXPECT_TRUE(box.contains(box.center()));
  EXPECT_FALSE(box.contains(SymMatrix::zeros(3)));
}

TEST(ProjectBox, FeasibleUnchanged) {
  Rng rng(1);
  const auto box = random_box(4, rng, 0.3);
  const auto x = random_feasible(box, rng);
  EXPECT_EQ(project_box(x, box), x);
}

TEST(ProjectBox, ClampsToUnitBox) {
  const BoxSet box(SymMatrix::zeros(3), 1.0);
  EXPECT_EQ(project_box(SymMatrix::identity(3) * 3.0, box), SymMatrix::identity(3));
}

TEST(ProjectBox, MatchesScalarClampAndIsNonexpansive) {
  Rng rng(2);
  const auto box = random_box(3, rng, 0.4);
  for (int trial = 0; trial < 100; ++trial) {
    const auto x = random_sym(3, rng, 2.0), y = random_sym(3, rng, 2.0);
    const auto px = project_box(x, box), py = project_box(y, box);
    for (long i = 0; i < 3; ++i)
      for (long j = 0; j < 3; ++j) {
        const double lo = box.center()(i, j) - 0.4, hi = box.center()(i, j) + 0.4;
        EXPECT_EQ(px(i, j), std::min(std::max(x(i, j), lo), hi));
      }
    EXPECT_EQ(project_box(px, box), px);
    EXPECT_LE((px.dense() - py.dense()).norm(), (x.dense() - y.dense()).norm() + 1e-14);
  }
  EXPECT_THROW(project_box(SymMatrix::zeros(2), box), dimension_error);
}

TEST(CompositeProblem, Validation) {
  const BoxSet box(SymMatrix::identity(2), 0.5);
  EXPECT_THROW(make_problem(box, 0.0, ExactOracleConfig{}), std::invalid_argument);
  CompositeProblem bad{box, 1.0, SymMatrix::zeros(2), ExactOracleConfig{}};
  EXPECT_THROW(bad.validate(), std::invalid_argument);
  const auto prob = make_problem(box, 0.1, ExactOracleConfig{});
  EXPECT_EQ(prob.x1, box.center());
  EXPECT_DOUBLE_EQ(default_mu(100), 0.1);
}

TEST(ProxStep, ZeroGradientIsConvexCombination) {
  Rng rng(3);
  const auto box = random_box(3, rng, 0.5);
  const auto prob = make_problem(box, 0.7, ExactOracleConfig{});
  const auto xt = random_feasible(box, rng);
  const double a = 2.0, g = 3.0;
  const auto next = prox_step(xt, SymMatrix::zeros(3), a, g, prob);
  const DenseMatrix expect = (a * prob.x1.dense() + g * xt.dense()) / (a + g);
  EXPECT_LE((next.dense() - expect).norm(), 1e-14);
}

TEST(ProxStep, SmallAlphaReturnsCurrentPoint) {
  Rng rng(4);
  const auto box = random_box(3, rng, 0.5);
  const auto prob = make_problem(box, 0.7, ExactOracleConfig{});
  const auto xt = random_feasible(box, rng);
  const auto g = random_sym(3, rng);
  EXPECT_LE((prox_step(xt, g, 1e-12, 1.0, prob).dense() - xt.dense()).norm(), 1e-10);
}

TEST(ProxStep, MatchesPerEntryGoldenSection) {
  Rng rng(5);
  for (int trial = 0; trial < 100; ++trial) {
    const auto box = random_box(2, rng, 0.1 + rng.uniform());
    const double mu = 0.05 + 2.0 * rng.uniform();
    const auto prob = make_problem(box, mu, ExactOracleConfig{});
    const auto xt = random_feasible(box, rng);
    const auto g = random_sym(2, rng, 3.0);
    const double alpha = 0.1 + 5.0 * rng.uniform(), gamma = 0.1 + 5.0 * rng.uniform();
    const auto next = prox_step(xt, g, alpha, gamma, prob);
    for (long i = 0; i < 2; ++i)
      for (long j = 0; j < 2; ++j) {
        const double c = box.center()(i, j), r = box.radius();
        auto f = [&](double x) {
          return alpha * (g(i, j) * x + mu * (x - prob.x1(i, j)) * (x - prob.x1(i, j))) +
                 gamma * mu * (x - xt(i, j)) * (x - xt(i, j));
        };
        EXPECT_NEAR(next(i, j), golden_section(f, c - r, c + r), 1e-6);
      }
  }
}

TEST(ProxStep, BeatsRandomFeasiblePoints) {
  Rng rng(6);
  const auto box = random_box(3, rng, 0.3);
  const auto prob = make_problem(box, 0.4, ExactOracleConfig{});
  const auto xt = random_feasible(box, rng);
  const auto g = random_sym(3, rng);
  const double alpha = 1.5, gamma = 0.8;
  auto objective = [&](const SymMatrix& x) {
    return alpha * (frob_inner(g, x) + prob.mu * (x.dense() - prob.x1.dense()).squaredNorm()) +
           gamma * prob.mu * (x.dense() - xt.dense()).squaredNorm();
  };
  const double best = objective(prox_step(xt, g, alpha, gamma, prob));
  for (int i = 0; i < 1000; ++i) EXPECT_LE(best, objective(random_feasible(box, rng)) + 1e-9);
}

TEST(ProxStep, RejectsNonpositiveWeights) {
  const BoxSet box(SymMatrix::identity(2), 0.5);
  const auto prob = make_problem(box, 1.0, ExactOracleConfig{});
  EXPECT_THROW(prox_step(prob.x1, prob.x1, 0.0, 1.0, prob), std::invalid_argument);
  EXPECT_THROW(prox_step(prob.x1, prob.x1, 1.0, -1.0, prob), std::invalid_argument);
}

TEST(EvalF, Examples) {
  Vector d(2);
  d << 5, 1;
  EXPECT_DOUBLE_EQ(eval_F(SymMatrix::diagonal(d)), 5.0);
  d << 1, -4;
  EXPECT_DOUBLE_EQ(eval_F(SymMatrix::diagonal(d), Objective::max_eig_of_square), 16.0);
  Rng rng(7);
  const auto box = random_box(4, rng, 0.2);
  const auto prob = make_problem(box, 0.3, ExactOracleConfig{});
  EXPECT_DOUBLE_EQ(eval_Psi(prob.x1, prob), eval_F(prob.x1));
  const auto x = random_feasible(box, rng);
  EXPECT_NEAR(eval_Psi(x, prob), eval_F(x) + 0.3 * (x.dense() - prob.x1.dense()).squaredNorm(), 1e-14);
}

// d = 1: F(x) = x on [a - rho, a + rho], X1 = c is any feasible point.
// Grid search stands in for the minimizers of F and Psi.
TEST(Lemma2, DistanceAndValueBoundsOnScalarInstances) {
  Rng rng(8);
  for (int trial = 0; trial < 50; ++trial) {
    const double rho = 0.1 + rng.uniform();
    const double a = rho + 0.05 + rng.uniform();  // F > 0 on the box
    const double lo = a - rho, hi = a + rho;
    const double x1 = lo + (hi - lo) * rng.uniform();
    const double mu = 0.01 + rng.uniform();
    auto psi = [&](double x) { return x + mu * (x - x1) * (x - x1); };
    const int n = 200001;
    double xstar = lo, psistar = psi(lo);
    for (int k = 1; k < n; ++k) {
      const double x = lo + (hi - lo) * k / (n - 1);
      if (psi(x) < psistar) psistar = psi(x), xstar = x;
    }
    const double xf = lo, fstar = lo;
    EXPECT_LE(std::abs(x1 - xstar), std::abs(x1 - xf) + 1e-6);
    // Largest Gamma with x >= Gamma (x - x1)^2 on the box.
    double gamma = 1e300;
    for (int k = 0; k < n; ++k) {
      const double x = lo + (hi - lo) * k / (n - 1);
      if (std::abs(x - x1) > 1e-9) gamma = std::min(gamma, x / ((x - x1) * (x - x1)));
    }
    EXPECT_LE(psistar, fstar * (1.0 + mu / gamma) + 1e-6);
  }
}

TEST(GenInstance, NoiselessIsNormalizedDiagonal) {
  for (long d : {1L, 3L, 10L}) {
    const BoxSet box = gen_instance(d, 0.0, 5);
    EXPECT_DOUBLE_EQ(box.radius(), 0.5);
    for (long i = 0; i < d; ++i)
      for (long j = 0; j < d; ++j) {
        const double expect = i == j ? std::exp(-static_cast<double>(i + 1)) / std::exp(-1.0) : 0.0;
        EXPECT_NEAR(box.center()(i, j), expect, 1e-15);
      }
    EXPECT_EQ(box.center()(0, 0), 1.0);
  }
}

TEST(GenInstance, NormalizationAndRadius) {
  for (const double sigma : {0.05, 0.2}) {
    const BoxSet box = gen_instance(30, sigma, 3);
    EXPECT_EQ(box.center().max_abs(), 1.0);
    EXPECT_EQ(box.radius(), box.center().dense().diagonal().maxCoeff() / 2.0);
  }
}

TEST(GenInstance, DeterministicPerSeed) {
  EXPECT_EQ(gen_instance(20, 0.2, 9), gen_instance(20, 0.2, 9));
  EXPECT_FALSE(gen_instance(20, 0.2, 9) == gen_instance(20, 0.2, 10));
  EXPECT_THROW(gen_instance(0, 0.2, 1), std::invalid_argument);
  EXPECT_THROW(gen_instance(3, -0.1, 1), std::invalid_argument);
}

TEST(InstanceFile, RoundTripExact) {
  const InstanceFile inst{gen_instance(7, 0.2, 4), 4, 0.2};
  std::stringstream ss;
  write_instance(ss, inst);
  const InstanceFile back = read_instance(ss);
  EXPECT_EQ(back.box, inst.box);
  EXPECT_EQ(back.seed, 4u);
  EXPECT_EQ(back.noise_sigma, 0.2);
}

TEST(InstanceFile, RejectsMalformedInput) {
  std::stringstream bad_header("not-an-instance 1\n");
  EXPECT_THROW(read_instance(bad_header), std::runtime_error);
  std::stringstream truncated("osmd-instance 1\ndim 2\nrho 0.5\nseed 1\nnoise_sigma 0\n1 0\n0\n");
  EXPECT_THROW(read_instance(truncated), std::runtime_error);
  std::stringstream asym("osmd-instance 1\ndim 2\nrho 0.5\nseed 1\nnoise_sigma 0\n1 0.1\n0 1\n");
  EXPECT_THROW(read_instance(asym), std::runtime_error);
}

TEST(Diagnostics, RejectsNonpositive) {
  Diagnostics d;
  d.M = 1.0;
  EXPECT_NO_THROW(d.validate());
  d.L = 0.0;
  EXPECT_THROW(d.validate(), std::invalid_argument);
}
