// osmd_cli: instance generation, single runs, benchmarks and a self-check.
//
//   osmd_cli generate --dim 50 --noise-sigma 0.2 --seed 1 --out inst.txt
//   osmd_cli run --instance inst.txt --solver oblivious_acsmd:degree=1
//                --oracle smoothing:k=1,epsilon=0.01 --T 1000 --seed 3 --out trace.csv
//   osmd_cli bench --config bench.json
//   osmd_cli verify

#include <CLI11.hpp>

#include <cstdint>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include "osmd/harness.hpp"
#include "osmd/verify.hpp"

namespace {

int cmd_generate(long dim, double sigma, std::uint64_t seed, const std::string& out) {
  const osmd::InstanceFile inst{osmd::gen_instance(dim, sigma, seed), seed, sigma};
  std::ofstream os(out);
  if (!os) throw std::runtime_error("cannot write '" + out + "'");
  osmd::write_instance(os, inst);
  std::cout << "wrote d=" << dim << " rho=" << osmd::format_real(inst.box.radius()) << " to " << out
            << "\n";
  return 0;
}

struct RunArgs {
  std::string instance, solver, oracle = "smoothing", out, final_point;
  long T = 1000;
  std::uint64_t seed = 0;
  std::optional<double> mu;
  long stride = 0;
  double target = 1e-2;
  long reference_budget = 0;
};

int cmd_run(const RunArgs& a) {
  std::ifstream is(a.instance);
  if (!is) throw std::runtime_error("cannot read '" + a.instance + "'");
  const osmd::InstanceFile inst = osmd::read_instance(is);
  const osmd::OracleSpec oracle = osmd::oracle_from_json(osmd::parse_spec_string(a.oracle));
  const osmd::SolverSpec solver = osmd::solver_from_json(osmd::parse_spec_string(a.solver), false);
  const double mu = a.mu.value_or(osmd::default_mu(a.T));
  const auto prob = osmd::make_problem(inst.box, mu, oracle);
  const auto tc = osmd::theory_constants(inst.box, oracle);

  osmd::RunOptions opts;
  opts.stride = a.stride;
  osmd::RunTrace trace = osmd::run_solver(solver, prob, tc, a.T, a.seed, opts);
  trace.config_echo.emplace_back("instance", a.instance);

  std::optional<osmd::ReferenceResult> ref;
  if (a.reference_budget > 0) {
    ref = osmd::reference_value(inst.box, a.reference_budget, inst.seed, prob.objective());
    trace.config_echo.emplace_back("f_ref", osmd::format_real(ref->value));
  }

  std::ofstream os(a.out);
  if (!os) throw std::runtime_error("cannot write '" + a.out + "'");
  osmd::write_trace(os, trace);
  if (!a.final_point.empty()) {
    std::ofstream fp(a.final_point);
    osmd::write_matrix(fp, trace.final_point);
  }

  const auto& last = trace.iterations.back();
  std::cout << solver.display() << " on d=" << prob.dim() << ": F_ag(" << last.t
            << ") = " << osmd::format_real(last.F_ag) << ", oracle time "
            << trace.oracle_seconds << " s\n";
  if (ref) {
    const auto it = osmd::iterations_to_precision(trace, ref->value, a.target);
    std::cout << "F_ref = " << osmd::format_real(ref->value) << ", iterations to "
              << a.target << ": " << osmd::iterations_text(it, a.T) << "\n";
  }
  return 0;
}

int cmd_bench(const std::string& config_path) {
  std::ifstream is(config_path);
  if (!is) throw std::runtime_error("cannot read '" + config_path + "'");
  const osmd::ExperimentConfig cfg = osmd::config_from_json(nlohmann::json::parse(is));
  const osmd::BenchReport report = osmd::run_bench(cfg, &std::cerr);
  osmd::write_bench_outputs(cfg, report);
  osmd::write_summary(std::cout, report, cfg.T, cfg.target_precision);
  std::size_t failed = 0;
  for (const auto& r : report.rows) failed += r.error.empty() ? 0 : 1;
  return failed ? 3 : 0;
}

int cmd_verify(std::uint64_t seed) {
  int failures = 0;
  for (const auto& r : osmd::run_invariant_suite(seed)) {
    std::cout << (r.pass ? "PASS " : "FAIL ") << r.name << " (" << r.detail << ")\n";
    failures += r.pass ? 0 : 1;
  }
  std::cout << (failures ? std::to_string(failures) + " check(s) failed\n" : "all checks passed\n");
  return failures ? 1 : 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Oblivious stochastic mirror descent for box-constrained max-eigenvalue problems"};
  app.require_subcommand(1);

  auto* gen = app.add_subcommand("generate", "Write a synthetic instance");
  long dim = 50;
  double sigma = 0.2;
  std::uint64_t gen_seed = 1;
  std::string gen_out;
  gen->add_option("--dim", dim, "Matrix dimension")->required()->check(CLI::PositiveNumber);
  gen->add_option("--noise-sigma", sigma, "Noise standard deviation")->check(CLI::NonNegativeNumber);
  gen->add_option("--seed", gen_seed, "Instance seed");
  gen->add_option("--out", gen_out, "Output file")->required();

  auto* run = app.add_subcommand("run", "Run one solver and write its trace");
  RunArgs ra;
  run->add_option("--instance", ra.instance, "Instance file")->required()->check(CLI::ExistingFile);
  run->add_option("--solver", ra.solver,
                  "Solver spec, e.g. oblivious_acsmd:degree=1, levy:tuned=true, lan:L=500")
      ->required();
  run->add_option("--oracle", ra.oracle, "Oracle spec, e.g. smoothing:k=1,epsilon=0.01, power:p=21")
      ->capture_default_str();
  run->add_option("--T", ra.T, "Horizon")->capture_default_str()->check(CLI::PositiveNumber);
  run->add_option("--seed", ra.seed, "Solver seed")->capture_default_str();
  run->add_option("--out", ra.out, "Trace CSV")->required();
  run->add_option("--mu", ra.mu, "Regularization weight (default 1/sqrt(T))");
  run->add_option("--stride", ra.stride, "Trace stride (0: automatic)");
  run->add_option("--final-point", ra.final_point, "Write the final point to this file");
  run->add_option("--reference-budget", ra.reference_budget,
                  "Also compute F_ref with this budget (>= 10000) and report iterations to --target");
  run->add_option("--target", ra.target, "Target precision")->capture_default_str();

  auto* bench = app.add_subcommand("bench", "Run a benchmark described by a JSON config");
  std::string config;
  bench->add_option("--config", config, "Config file")->required()->check(CLI::ExistingFile);

  auto* verify = app.add_subcommand("verify", "Run the invariant self-check");
  std::uint64_t verify_seed = 7;
  verify->add_option("--seed", verify_seed, "Seed for the random inputs")->capture_default_str();

  CLI11_PARSE(app, argc, argv);

  try {
    if (*gen) return cmd_generate(dim, sigma, gen_seed, gen_out);
    if (*run) return cmd_run(ra);
    if (*bench) return cmd_bench(config);
    if (*verify) return cmd_verify(verify_seed);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 0;
}
