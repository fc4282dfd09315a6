// Minimal library usage: generate an instance, run the accelerated oblivious
// solver with the smoothing oracle, print the objective along the way.

#include <iostream>

#include "osmd/problem.hpp"
#include "osmd/solvers.hpp"

int main() {
  const osmd::BoxSet box = osmd::gen_instance(20, 0.2, 1);
  const long T = 300;
  const auto prob = osmd::make_problem(box, osmd::default_mu(T), osmd::SmoothingOracleConfig{});

  osmd::Rng rng(42);
  osmd::RunOptions opts;
  opts.stride = 50;
  const osmd::RunTrace trace = osmd::oblivious_acsmd(prob, osmd::StepSchedule{1, 1.0}, T, rng, 42, opts);

  std::cout << "F(A) = " << osmd::eval_F(box.center()) << "\n";
  for (const auto& p : trace.iterations)
    std::cout << "t=" << p.t << "  F_ag=" << p.F_ag << "  Psi_ag=" << p.Psi_ag << "\n";
}
