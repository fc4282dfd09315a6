#pragma once

// Experiment runner: theory constants for the baselines, a reference value
// per instance, iterations-to-precision, trace files and the bench report.

#include <nlohmann/json.hpp>

#include <algorithm>
#include <charconv>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <istream>
#include <map>
#include <optional>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "osmd/linalg.hpp"
#include "osmd/oracles.hpp"
#include "osmd/problem.hpp"
#include "osmd/schedule.hpp"
#include "osmd/solvers.hpp"

namespace osmd {

// Factors applied to the baselines' constants in hyper-tuned runs.
inline constexpr double kTunedLDivisor = 50.0;
inline constexpr double kTunedDDivisor = 10.0;
inline constexpr double kTunedLstarDivisor = 50.0;

/// Constants the baselines need, derived from the instance and the oracle.
/// `diagnostics` holds what is known in closed form; `diameter` is the
/// Frobenius diameter of the box.
struct TheoryConstants {
  Diagnostics diagnostics;
  double diameter = 0.0;
  double sigma = 0.0;
};

/// Lower bound on ||X||_2^2 over the box, from |X_ii| <= ||X||_2 and
/// ||X||_F^2 <= d ||X||_2^2.
inline double square_objective_lower_bound(const BoxSet& box) {
  const auto& a = box.center().dense();
  const double r = box.radius();
  auto gap = [r](double v) { return std::max(0.0, std::abs(v) - r); };
  double diag_best = 0.0, frob = 0.0;
  for (long j = 0; j < a.cols(); ++j)
    for (long i = 0; i < a.rows(); ++i) {
      const double g = gap(a(i, j));
      frob += g * g;
      if (i == j) diag_best = std::max(diag_best, g * g);
    }
  return std::max(diag_best, frob / static_cast<double>(box.dim()));
}

/// Closed-form constants per oracle:
///   smoothing   M = 1 (||v v^T||_F = 1), sigma = 1, L = d / epsilon
///   power, X^2  Lstar = p, Fmax = (||A||_2 + rho d)^2, M^2 = 2 Lstar Fmax,
///               Gamma = (lower bound of F) / (rho d)^2
///   exact       M = 1 for lambda_max, 2 sqrt(Fmax) for lambda_max(X^2)
inline TheoryConstants theory_constants(const BoxSet& box, const OracleSpec& oracle) {
  TheoryConstants tc;
  tc.diameter = box.diameter_frobenius();
  const double d = static_cast<double>(box.dim());
  const double half_diam = box.radius() * d;  // max ||X - A||_F over the box
  const auto spec = full_spectrum(box.center());
  const double center_norm = std::max(std::abs(spec.front()), std::abs(spec.back()));
  const double f_max_square = (center_norm + half_diam) * (center_norm + half_diam);

  if (const auto* s = std::get_if<SmoothingOracleConfig>(&oracle)) {
    tc.diagnostics.M = 1.0;
    tc.diagnostics.L = d / s->epsilon;
    tc.diagnostics.sigma2 = 1.0;
    tc.sigma = 1.0;
  } else if (const auto* p = std::get_if<PowerOracleConfig>(&oracle)) {
    if (p->square_input) {
      const double lstar = static_cast<double>(p->p);
      tc.diagnostics.Lstar = lstar;
      tc.diagnostics.M = std::sqrt(2.0 * lstar * f_max_square);
      tc.diagnostics.sigma2 = 2.0 * lstar * f_max_square;
      tc.sigma = std::sqrt(*tc.diagnostics.sigma2);
      const double lower = square_objective_lower_bound(box);
      if (lower > 0.0) tc.diagnostics.Gamma = lower / (half_diam * half_diam);
    }
  } else if (const auto* e = std::get_if<ExactOracleConfig>(&oracle)) {
    tc.diagnostics.M = e->objective == Objective::max_eig ? 1.0 : 2.0 * std::sqrt(f_max_square);
  }
  return tc;
}

// ---------------------------------------------------------------------------
// Reference value

struct ReferenceResult {
  double value = 0.0;
  SymMatrix point;
  RunTrace stage1;
  std::vector<TracePoint> polish;  // best value so far, sampled
};

inline constexpr long kMinReferenceBudget = 10000;

/// Best objective value found by (1) an accelerated oblivious run with the
/// exact subgradient oracle, mu = 1/sqrt(budget), followed by (2) projected
/// subgradient descent from the best point with normalized steps
/// rho sqrt(d) / (2 sqrt(k)). Both stages take `budget` iterations.
inline ReferenceResult reference_value(const BoxSet& box, long budget, std::uint64_t seed,
                                       Objective objective = Objective::max_eig) {
  if (budget < kMinReferenceBudget)
    throw std::invalid_argument("reference_value: budget must be >= " +
                                std::to_string(kMinReferenceBudget));
  const CompositeProblem prob = make_problem(box, default_mu(budget), ExactOracleConfig{objective});

  double best = eval_F(box.center(), objective);
  SymMatrix best_point = box.center();
  RunOptions opts;
  opts.stride = 100;
  opts.observer = [&](const IterateView& v) {
    if (v.sample.value < best) {
      best = v.sample.value;
      best_point = v.query;
    }
  };
  Rng rng(seed);
  RunTrace stage1 = oblivious_acsmd(prob, StepSchedule{1, 1.0}, budget, rng, seed, opts);
  if (const double f = eval_F(stage1.final_point, objective); f < best) {
    best = f;
    best_point = stage1.final_point;
  }

  const double eta0 = box.radius() * std::sqrt(static_cast<double>(box.dim())) / 2.0;
  std::vector<TracePoint> polish;
  SymMatrix x = best_point;
  for (long k = 1; k <= budget; ++k) {
    const GradSample g = exact_subgrad(x, objective);
    if (g.value < best) {
      best = g.value;
      best_point = x;
    }
    if (k == 1 || k % 100 == 0 || k == budget) polish.push_back({k, best, best, g.grad.frob_norm(), 0.0});
    const double gnorm = g.grad.frob_norm();
    if (gnorm == 0.0) break;
    const double step = eta0 / (std::sqrt(static_cast<double>(k)) * gnorm);
    x = project_box(SymMatrix::combine(1.0, x, -step, g.grad), box);
  }
  return {best, std::move(best_point), std::move(stage1), std::move(polish)};
}

// ---------------------------------------------------------------------------
// Iterations to precision

/// Smallest recorded t with F_ag(t) - f_ref <= target; empty means the
/// target was never met ("exceeded").
inline std::optional<long> iterations_to_precision(const RunTrace& trace, double f_ref,
                                                   double target) {
  if (!(target > 0.0)) throw std::invalid_argument("iterations_to_precision: target must be > 0");
  if (trace.iterations.empty()) throw std::invalid_argument("iterations_to_precision: empty trace");
  for (const auto& p : trace.iterations)
    if (p.F_ag - f_ref <= target) return p.t;
  return std::nullopt;
}

// ---------------------------------------------------------------------------
// Trace files

inline constexpr const char* kTraceHeader = "t,F_ag,Psi_ag,grad_norm,elapsed_s";

/// CSV with `# key: value` comment lines carrying the seed and the run
/// configuration ahead of the header.
inline void write_trace(std::ostream& os, const RunTrace& trace) {
  os << "# trace_seed: " << trace.seed << "\n";
  for (const auto& [k, v] : trace.config_echo) os << "# " << k << ": " << v << "\n";
  os << kTraceHeader << "\n";
  for (const auto& p : trace.iterations)
    os << p.t << "," << format_real(p.F_ag) << "," << format_real(p.Psi_ag) << ","
       << format_real(p.grad_norm) << "," << format_real(p.elapsed_s) << "\n";
}

inline void write_matrix(std::ostream& os, const SymMatrix& m) {
  os << m.dim() << "\n";
  for (long i = 0; i < m.dim(); ++i) {
    for (long j = 0; j < m.dim(); ++j) os << (j ? " " : "") << format_real(m(i, j));
    os << "\n";
  }
}

inline SymMatrix read_matrix(std::istream& is) {
  long d = 0;
  if (!(is >> d) || d < 1) throw std::runtime_error("read_matrix: bad dimension");
  DenseMatrix m(d, d);
  for (long i = 0; i < d; ++i)
    for (long j = 0; j < d; ++j)
      if (!(is >> m(i, j))) throw std::runtime_error("read_matrix: truncated body");
  return SymMatrix::from(m);
}

namespace detail {

inline double parse_real(const std::string& s) {
  double v = 0.0;
  const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
  if (res.ec != std::errc() || res.ptr != s.data() + s.size())
    throw std::runtime_error("cannot parse number '" + s + "'");
  return v;
}

inline std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::string cur;
  std::istringstream ss(s);
  while (std::getline(ss, cur, sep)) out.push_back(cur);
  if (!s.empty() && s.back() == sep) out.emplace_back();
  return out;
}

}  // namespace detail

/// Parses a trace CSV. The final point is stored separately (write_matrix),
/// so it is passed in.
inline RunTrace read_trace(std::istream& is, SymMatrix final_point) {
  RunTrace trace{{}, std::move(final_point), {}, 0, 0.0};
  std::string line;
  bool header = false;
  while (std::getline(is, line)) {
    if (line.rfind("# ", 0) == 0) {
      const auto colon = line.find(": ", 2);
      if (colon == std::string::npos) throw std::runtime_error("read_trace: bad comment line");
      const std::string key = line.substr(2, colon - 2), value = line.substr(colon + 2);
      if (key == "trace_seed")
        trace.seed = std::stoull(value);
      else
        trace.config_echo.emplace_back(key, value);
      continue;
    }
    if (!header) {
      if (line != kTraceHeader) throw std::runtime_error("read_trace: unexpected header '" + line + "'");
      header = true;
      continue;
    }
    if (line.empty()) continue;
    const auto f = detail::split(line, ',');
    if (f.size() != 5) throw std::runtime_error("read_trace: expected 5 fields in '" + line + "'");
    trace.iterations.push_back({std::stol(f[0]), detail::parse_real(f[1]), detail::parse_real(f[2]),
                                detail::parse_real(f[3]), detail::parse_real(f[4])});
  }
  if (!header) throw std::runtime_error("read_trace: missing header");
  return trace;
}

// ---------------------------------------------------------------------------
// Experiment configuration

enum class SolverKind { oblivious_smd, oblivious_acsmd, levy, lan, relative };

struct SolverSpec {
  SolverKind kind = SolverKind::oblivious_acsmd;
  int degree = 1;
  double scale = 1.0;
  bool tuned = false;
  // Explicit constants override the theory values (before tuning).
  std::optional<double> L, D, M, sigma, Lstar, Gamma;
  std::string label;

  std::string display() const {
    if (!label.empty()) return label;
    switch (kind) {
      case SolverKind::oblivious_smd: return "Oblivious" + std::to_string(degree) + "-smd";
      case SolverKind::oblivious_acsmd: return "Oblivious" + std::to_string(degree) + "-acsmd";
      case SolverKind::levy: return tuned ? "Levy-tuned" : "Levy";
      case SolverKind::lan: return tuned ? "Lan-tuned" : "Lan";
      case SolverKind::relative: return tuned ? "Relative-tuned" : "Relative";
    }
    return "?";
  }
};

struct ExperimentConfig {
  std::vector<long> dims;
  OracleSpec oracle = SmoothingOracleConfig{};
  std::vector<SolverSpec> solvers;
  long T = 1000;
  std::vector<std::uint64_t> seeds;
  double target_precision = 1e-2;
  double noise_sigma = 0.2;
  std::uint64_t instance_seed = 1;
  long reference_budget = kMinReferenceBudget;
  std::optional<double> mu;  // default 1/sqrt(T)
  bool hyper_tuned = false;  // default `tuned` for the baselines
  bool write_traces = true;
  std::string output_dir = "bench_out";

  void validate() const {
    if (dims.empty()) throw std::invalid_argument("config: dims must be nonempty");
    for (long d : dims)
      if (d < 1) throw std::invalid_argument("config: every dim must be >= 1");
    if (T < 1) throw std::invalid_argument("config: T must be >= 1");
    if (!(target_precision > 0.0)) throw std::invalid_argument("config: target_precision must be > 0");
    if (seeds.empty()) throw std::invalid_argument("config: seeds must be nonempty");
    if (solvers.empty()) throw std::invalid_argument("config: solvers must be nonempty");
    if (mu && !(*mu > 0.0)) throw std::invalid_argument("config: mu must be > 0");
    if (reference_budget < kMinReferenceBudget)
      throw std::invalid_argument("config: reference_budget must be >= " +
                                  std::to_string(kMinReferenceBudget));
  }
};

inline SolverKind parse_solver_kind(const std::string& s) {
  if (s == "oblivious_smd" || s == "smd") return SolverKind::oblivious_smd;
  if (s == "oblivious_acsmd" || s == "acsmd") return SolverKind::oblivious_acsmd;
  if (s == "levy" || s == "levy_adaptive") return SolverKind::levy;
  if (s == "lan" || s == "lan_acsa") return SolverKind::lan;
  if (s == "relative" || s == "relative_md") return SolverKind::relative;
  throw std::invalid_argument("unknown solver '" + s + "'");
}

inline const char* to_string(SolverKind k) {
  switch (k) {
    case SolverKind::oblivious_smd: return "oblivious_smd";
    case SolverKind::oblivious_acsmd: return "oblivious_acsmd";
    case SolverKind::levy: return "levy";
    case SolverKind::lan: return "lan";
    case SolverKind::relative: return "relative";
  }
  return "?";
}

inline OracleSpec oracle_from_json(const nlohmann::json& j) {
  const std::string type = j.at("type").get<std::string>();
  if (type == "smoothing") {
    SmoothingOracleConfig c;
    c.k = j.value("k", c.k);
    c.epsilon = j.value("epsilon", c.epsilon);
    if (j.value("eigensolver", std::string("dense")) == "power") c.solver = EigSolver::power;
    c.validate();
    return c;
  }
  if (type == "power") {
    PowerOracleConfig c;
    c.p = j.value("p", c.p);
    c.square_input = j.value("square_input", true);
    c.validate();
    return c;
  }
  if (type == "exact") {
    ExactOracleConfig c;
    if (j.value("objective", std::string("max_eig")) == "max_eig_of_square")
      c.objective = Objective::max_eig_of_square;
    return c;
  }
  throw std::invalid_argument("unknown oracle type '" + type + "'");
}

inline nlohmann::json oracle_to_json(const OracleSpec& spec) {
  return std::visit(
      [](const auto& c) -> nlohmann::json {
        using C = std::decay_t<decltype(c)>;
        if constexpr (std::is_same_v<C, SmoothingOracleConfig>)
          return {{"type", "smoothing"}, {"k", c.k}, {"epsilon", c.epsilon},
                  {"eigensolver", c.solver == EigSolver::dense ? "dense" : "power"}};
        else if constexpr (std::is_same_v<C, PowerOracleConfig>)
          return {{"type", "power"}, {"p", c.p}, {"square_input", c.square_input}};
        else
          return {{"type", "exact"}, {"objective", to_string(c.objective)}};
      },
      spec);
}

inline SolverSpec solver_from_json(const nlohmann::json& j, bool default_tuned) {
  SolverSpec s;
  s.kind = parse_solver_kind(j.at("type").get<std::string>());
  s.degree = j.value("degree", s.degree);
  s.scale = j.value("scale", s.scale);
  const bool baseline = s.kind == SolverKind::levy || s.kind == SolverKind::lan ||
                        s.kind == SolverKind::relative;
  s.tuned = j.value("tuned", baseline && default_tuned);
  s.label = j.value("label", std::string());
  auto opt = [&j](const char* key) -> std::optional<double> {
    if (j.contains(key) && !j.at(key).is_null()) return j.at(key).get<double>();
    return std::nullopt;
  };
  s.L = opt("L");
  s.D = opt("D");
  s.M = opt("M");
  s.sigma = opt("sigma");
  s.Lstar = opt("Lstar");
  s.Gamma = opt("Gamma");
  return s;
}

inline nlohmann::json solver_to_json(const SolverSpec& s) {
  nlohmann::json j{{"type", to_string(s.kind)}, {"label", s.display()}};
  if (s.kind == SolverKind::oblivious_smd || s.kind == SolverKind::oblivious_acsmd) {
    j["degree"] = s.degree;
    j["scale"] = s.scale;
  } else {
    j["tuned"] = s.tuned;
  }
  auto put = [&j](const char* key, const std::optional<double>& v) {
    if (v) j[key] = *v;
  };
  put("L", s.L);
  put("D", s.D);
  put("M", s.M);
  put("sigma", s.sigma);
  put("Lstar", s.Lstar);
  put("Gamma", s.Gamma);
  return j;
}

/// "name:key=value,key=value" as {"type": name, key: value, ...}. Values
/// that parse as numbers or true/false are typed accordingly.
inline nlohmann::json parse_spec_string(const std::string& text) {
  const auto colon = text.find(':');
  nlohmann::json j{{"type", text.substr(0, colon)}};
  if (j["type"].get<std::string>().empty()) throw std::invalid_argument("empty spec '" + text + "'");
  if (colon == std::string::npos) return j;
  for (const auto& item : detail::split(text.substr(colon + 1), ',')) {
    if (item.empty()) continue;
    const auto eq = item.find('=');
    if (eq == std::string::npos || eq == 0)
      throw std::invalid_argument("expected key=value in '" + item + "'");
    const std::string key = item.substr(0, eq), value = item.substr(eq + 1);
    if (value == "true" || value == "false") {
      j[key] = value == "true";
      continue;
    }
    long iv = 0;
    if (auto r = std::from_chars(value.data(), value.data() + value.size(), iv);
        r.ec == std::errc() && r.ptr == value.data() + value.size()) {
      j[key] = iv;
      continue;
    }
    double dv = 0.0;
    if (auto r = std::from_chars(value.data(), value.data() + value.size(), dv);
        r.ec == std::errc() && r.ptr == value.data() + value.size()) {
      j[key] = dv;
      continue;
    }
    j[key] = value;
  }
  return j;
}

inline ExperimentConfig config_from_json(const nlohmann::json& j) {
  ExperimentConfig c;
  c.dims = j.at("dims").get<std::vector<long>>();
  if (j.contains("oracle")) c.oracle = oracle_from_json(j.at("oracle"));
  c.T = j.value("T", c.T);
  c.seeds = j.at("seeds").get<std::vector<std::uint64_t>>();
  c.target_precision = j.value("target_precision", c.target_precision);
  c.noise_sigma = j.value("noise_sigma", c.noise_sigma);
  c.instance_seed = j.value("instance_seed", c.instance_seed);
  c.reference_budget = j.value("reference_budget", c.reference_budget);
  if (j.contains("mu") && !j.at("mu").is_null()) c.mu = j.at("mu").get<double>();
  c.hyper_tuned = j.value("hyper_tuned", c.hyper_tuned);
  c.write_traces = j.value("write_traces", c.write_traces);
  c.output_dir = j.value("output_dir", c.output_dir);
  for (const auto& s : j.at("solvers")) c.solvers.push_back(solver_from_json(s, c.hyper_tuned));
  c.validate();
  return c;
}

/// Normalized echo of the effective configuration (defaults filled in).
inline nlohmann::json config_to_json(const ExperimentConfig& c) {
  nlohmann::json solvers = nlohmann::json::array();
  for (const auto& s : c.solvers) solvers.push_back(solver_to_json(s));
  return {{"dims", c.dims},
          {"oracle", oracle_to_json(c.oracle)},
          {"solvers", solvers},
          {"T", c.T},
          {"seeds", c.seeds},
          {"target_precision", c.target_precision},
          {"noise_sigma", c.noise_sigma},
          {"instance_seed", c.instance_seed},
          {"reference_budget", c.reference_budget},
          {"mu", c.mu ? nlohmann::json(*c.mu) : nlohmann::json(nullptr)},
          {"hyper_tuned", c.hyper_tuned},
          {"write_traces", c.write_traces},
          {"output_dir", c.output_dir}};
}

/// Constants actually handed to a baseline: explicit values, else theory,
/// then divided by the tuning factors when `tuned`.
struct BaselineConstants {
  double L = 0, D = 0, M = 0, sigma = 0, Lstar = 0, Gamma = 0;
};

inline BaselineConstants resolve_constants(const SolverSpec& s, const TheoryConstants& tc) {
  auto need = [&](const std::optional<double>& explicit_v, const std::optional<double>& theory,
                  const char* name) {
    if (explicit_v) return *explicit_v;
    if (theory) return *theory;
    throw std::invalid_argument(s.display() + ": no theory value for " + name +
                                " with this oracle; set it explicitly");
  };
  BaselineConstants b;
  switch (s.kind) {
    case SolverKind::levy:
      b.D = s.D.value_or(tc.diameter);
      b.M = need(s.M, tc.diagnostics.M, "M");
      if (s.tuned) b.D /= kTunedDDivisor;
      break;
    case SolverKind::lan:
      b.L = need(s.L, tc.diagnostics.L, "L");
      b.sigma = s.sigma.value_or(tc.sigma);
      if (s.tuned) b.L /= kTunedLDivisor;
      break;
    case SolverKind::relative:
      b.Lstar = need(s.Lstar, tc.diagnostics.Lstar, "Lstar");
      b.Gamma = need(s.Gamma, tc.diagnostics.Gamma, "Gamma");
      if (s.tuned) b.Lstar /= kTunedLstarDivisor;
      break;
    default:
      break;
  }
  return b;
}

/// Runs one solver on one problem. All solvers draw from Rng(seed), so equal
/// seeds give equal noise streams across solvers.
inline RunTrace run_solver(const SolverSpec& s, const CompositeProblem& prob,
                           const TheoryConstants& tc, long T, std::uint64_t seed,
                           const RunOptions& opts = {}) {
  Rng rng(seed);
  const BaselineConstants b = resolve_constants(s, tc);
  RunTrace trace = [&] {
    switch (s.kind) {
      case SolverKind::oblivious_smd:
        return oblivious_smd(prob, StepSchedule{s.degree, s.scale}, T, rng, seed, opts);
      case SolverKind::oblivious_acsmd:
        return oblivious_acsmd(prob, StepSchedule{s.degree, s.scale}, T, rng, seed, opts);
      case SolverKind::levy: return levy_adaptive(prob, b.D, b.M, T, rng, seed, opts);
      case SolverKind::lan: return lan_acsa(prob, b.L, b.sigma, T, rng, seed, opts);
      case SolverKind::relative: return relative_md(prob, b.Lstar, b.Gamma, T, rng, seed, opts);
    }
    throw std::logic_error("run_solver: unhandled kind");
  }();
  trace.config_echo.emplace_back("label", s.display());
  trace.config_echo.emplace_back("tuned", s.tuned ? "true" : "false");
  return trace;
}

// ---------------------------------------------------------------------------
// Bench report

struct CellResult {
  long dim = 0;
  std::string solver;
  std::uint64_t seed = 0;
  std::optional<long> iterations;  // empty: exceeded (or failed)
  double final_gap = 0.0;
  double wall_seconds = 0.0;
  double oracle_seconds = 0.0;
  std::string error;  // nonempty when the cell failed
};

/// Per (dim, solver) summary over seeds. Exceeded runs count as +inf; the
/// median of an even count averages the two middle values and is exceeded
/// if either is. The interval is the empirical 10th-90th percentile
/// (nearest rank).
struct CellSummary {
  long dim = 0;
  std::string solver;
  std::optional<double> median;
  std::optional<long> p10, p90;
  double median_final_gap = 0.0;
  std::size_t failures = 0;
};

struct InstanceInfo {
  long dim = 0;
  double rho = 0.0;
  double f_ref = 0.0;
  double d0 = 0.0;  // ||X1 - X_ref||_F
  std::optional<long> t0;
  TheoryConstants theory;
};

struct BenchReport {
  nlohmann::json config;
  std::vector<InstanceInfo> instances;
  std::vector<CellResult> rows;
  std::vector<CellSummary> summary;
  std::vector<std::string> warnings;
};

inline std::optional<double> median_of(std::vector<std::optional<long>> v) {
  if (v.empty()) return std::nullopt;
  auto key = [](const std::optional<long>& x) {
    return x ? static_cast<double>(*x) : std::numeric_limits<double>::infinity();
  };
  std::sort(v.begin(), v.end(), [&](const auto& a, const auto& b) { return key(a) < key(b); });
  const std::size_t n = v.size();
  if (n % 2 == 1) {
    const auto& m = v[n / 2];
    return m ? std::optional<double>(static_cast<double>(*m)) : std::nullopt;
  }
  const auto &lo = v[n / 2 - 1], &hi = v[n / 2];
  if (!lo || !hi) return std::nullopt;
  return 0.5 * (static_cast<double>(*lo) + static_cast<double>(*hi));
}

inline std::optional<long> percentile_of(std::vector<std::optional<long>> v, double q) {
  if (v.empty()) return std::nullopt;
  auto key = [](const std::optional<long>& x) {
    return x ? static_cast<double>(*x) : std::numeric_limits<double>::infinity();
  };
  std::sort(v.begin(), v.end(), [&](const auto& a, const auto& b) { return key(a) < key(b); });
  const auto rank = static_cast<std::size_t>(std::ceil(q * static_cast<double>(v.size())));
  return v[std::max<std::size_t>(rank, 1) - 1];
}

inline double median_real(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  const std::size_t n = v.size();
  return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

inline std::string iterations_text(const std::optional<long>& it, long T) {
  return it ? std::to_string(*it) : ">" + std::to_string(T);
}

inline std::string median_text(const std::optional<double>& m, long T) {
  if (!m) return ">" + std::to_string(T);
  std::ostringstream os;
  os << *m;
  return os.str();
}

namespace detail {
inline std::string file_safe(std::string s) {
  for (char& c : s)
    if (!std::isalnum(static_cast<unsigned char>(c)) && c != '-' && c != '_') c = '_';
  return s;
}
}  // namespace detail

/// Executes every (dim, solver, seed) cell. Writes report.csv and
/// summary.txt (deterministic), timings.csv (wall clock) and, when enabled,
/// one trace CSV per cell under output_dir. Pass an empty output_dir to skip
/// all file output.
inline BenchReport run_bench(const ExperimentConfig& cfg, std::ostream* log = nullptr) {
  cfg.validate();
  namespace fs = std::filesystem;
  const bool to_disk = !cfg.output_dir.empty();
  if (to_disk) fs::create_directories(fs::path(cfg.output_dir) / "traces");

  BenchReport report;
  report.config = config_to_json(cfg);
  const std::string echo = report.config.dump();
  const Objective objective = objective_of(cfg.oracle);

  for (long dim : cfg.dims) {
    const BoxSet box = gen_instance(dim, cfg.noise_sigma, cfg.instance_seed);
    const double mu = cfg.mu.value_or(default_mu(cfg.T));
    const CompositeProblem prob = make_problem(box, mu, cfg.oracle);
    const ReferenceResult ref = reference_value(box, cfg.reference_budget, cfg.instance_seed, objective);

    InstanceInfo info;
    info.dim = dim;
    info.rho = box.radius();
    info.f_ref = ref.value;
    info.d0 = (ref.point.dense() - box.center().dense()).norm();
    info.theory = theory_constants(box, cfg.oracle);
    info.theory.diagnostics.D0 = info.d0 > 0.0 ? std::optional<double>(info.d0) : std::nullopt;
    if (info.theory.diagnostics.Lstar)
      info.t0 = transition_time_relative(StepSchedule{}, *info.theory.diagnostics.Lstar, mu, cfg.T);
    else if (info.theory.diagnostics.L)
      info.t0 = transition_time_smooth(StepSchedule{}, *info.theory.diagnostics.L, mu, cfg.T);
    info.theory.diagnostics.T0 = info.t0;
    report.instances.push_back(info);
    if (log) *log << "dim " << dim << ": F_ref = " << format_real(ref.value) << "\n";

    for (const auto& spec : cfg.solvers) {
      for (std::uint64_t seed : cfg.seeds) {
        CellResult cell;
        cell.dim = dim;
        cell.solver = spec.display();
        cell.seed = seed;
        const auto start = std::chrono::steady_clock::now();
        try {
          RunTrace trace = run_solver(spec, prob, info.theory, cfg.T, seed);
          cell.wall_seconds =
              std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
          cell.oracle_seconds = trace.oracle_seconds;
          cell.iterations = iterations_to_precision(trace, ref.value, cfg.target_precision);
          cell.final_gap = trace.iterations.back().F_ag - ref.value;
          if (to_disk && cfg.write_traces) {
            trace.config_echo.emplace_back("config", echo);
            trace.config_echo.emplace_back("f_ref", format_real(ref.value));
            const std::string stem = "d" + std::to_string(dim) + "_" +
                                     detail::file_safe(cell.solver) + "_s" + std::to_string(seed);
            std::ofstream tf(fs::path(cfg.output_dir) / "traces" / (stem + ".csv"));
            write_trace(tf, trace);
          }
        } catch (const std::exception& e) {
          cell.error = e.what();
        }
        if (log)
          *log << "  " << cell.solver << " seed " << seed << ": "
               << (cell.error.empty() ? iterations_text(cell.iterations, cfg.T) : "error: " + cell.error)
               << "\n";
        report.rows.push_back(std::move(cell));
      }
    }
  }

  // Summaries, in configuration order.
  for (long dim : cfg.dims)
    for (const auto& spec : cfg.solvers) {
      CellSummary s;
      s.dim = dim;
      s.solver = spec.display();
      std::vector<std::optional<long>> its;
      std::vector<double> gaps;
      for (const auto& r : report.rows) {
        if (r.dim != dim || r.solver != s.solver) continue;
        if (!r.error.empty()) {
          ++s.failures;
          its.push_back(std::nullopt);
          continue;
        }
        its.push_back(r.iterations);
        gaps.push_back(r.final_gap);
      }
      s.median = median_of(its);
      s.p10 = percentile_of(its, 0.1);
      s.p90 = percentile_of(its, 0.9);
      s.median_final_gap = gaps.empty() ? std::numeric_limits<double>::quiet_NaN() : median_real(gaps);
      report.summary.push_back(s);
    }

  // Soft check: median iterations should not decrease with dimension.
  for (const auto& spec : cfg.solvers) {
    std::optional<double> prev;
    long prev_dim = 0;
    bool have_prev = false;
    for (const auto& s : report.summary) {
      if (s.solver != spec.display()) continue;
      const double cur = s.median.value_or(std::numeric_limits<double>::infinity());
      if (have_prev && cur < prev.value_or(std::numeric_limits<double>::infinity()))
        report.warnings.push_back(s.solver + ": median iterations decrease from d=" +
                                  std::to_string(prev_dim) + " to d=" + std::to_string(s.dim));
      prev = s.median ? s.median : std::optional<double>(std::numeric_limits<double>::infinity());
      prev_dim = s.dim;
      have_prev = true;
    }
  }
  return report;
}

inline void write_report_csv(std::ostream& os, const BenchReport& r, long T) {
  os << "# config: " << r.config.dump() << "\n";
  os << "dim,solver,seed,iterations_to_precision,final_gap,status\n";
  for (const auto& c : r.rows)
    os << c.dim << "," << c.solver << "," << c.seed << ","
       << (c.error.empty() ? iterations_text(c.iterations, T) : "") << ","
       << (c.error.empty() ? format_real(c.final_gap) : "") << ","
       << (c.error.empty() ? "ok" : "error") << "\n";
}

inline void write_timings_csv(std::ostream& os, const BenchReport& r) {
  os << "dim,solver,seed,wall_seconds,oracle_seconds\n";
  for (const auto& c : r.rows)
    os << c.dim << "," << c.solver << "," << c.seed << "," << c.wall_seconds << ","
       << c.oracle_seconds << "\n";
}

/// Table layout: one row per dimension, one column per solver, each cell
/// "median [p10, p90]" of iterations to precision.
inline void write_summary(std::ostream& os, const BenchReport& r, long T, double target) {
  os << "Iterations to reach precision " << format_real(target) << " (median [p10, p90] over seeds)\n\n";
  std::vector<std::string> solvers;
  for (const auto& s : r.summary)
    if (std::find(solvers.begin(), solvers.end(), s.solver) == solvers.end())
      solvers.push_back(s.solver);
  std::vector<long> dims;
  for (const auto& s : r.summary)
    if (std::find(dims.begin(), dims.end(), s.dim) == dims.end()) dims.push_back(s.dim);

  constexpr int w = 24;
  os << std::left << std::setw(10) << "Dimension";
  for (const auto& s : solvers) os << std::setw(w) << s;
  os << "\n";
  for (long d : dims) {
    os << std::setw(10) << ("d=" + std::to_string(d));
    for (const auto& name : solvers)
      for (const auto& s : r.summary)
        if (s.dim == d && s.solver == name) {
          std::string cell = median_text(s.median, T) + " [" + iterations_text(s.p10, T) + ", " +
                             iterations_text(s.p90, T) + "]";
          if (s.failures) cell += " (" + std::to_string(s.failures) + " failed)";
          os << std::setw(w) << cell;
        }
    os << "\n";
  }
  os << "\nMedian final gap F(X_T) - F_ref\n";
  for (long d : dims) {
    os << std::setw(10) << ("d=" + std::to_string(d));
    for (const auto& name : solvers)
      for (const auto& s : r.summary)
        if (s.dim == d && s.solver == name) os << std::setw(w) << format_real(s.median_final_gap);
    os << "\n";
  }
  os << "\nInstances\n";
  for (const auto& i : r.instances) {
    os << "  d=" << i.dim << " rho=" << format_real(i.rho) << " F_ref=" << format_real(i.f_ref)
       << " D0=" << format_real(i.d0) << " diameter=" << format_real(i.theory.diameter);
    const auto& g = i.theory.diagnostics;
    if (g.M) os << " M=" << format_real(*g.M);
    if (g.L) os << " L=" << format_real(*g.L);
    if (g.Lstar) os << " Lstar=" << format_real(*g.Lstar);
    if (g.Gamma) os << " Gamma=" << format_real(*g.Gamma);
    if (i.t0) os << " T0=" << *i.t0;
    os << "\n";
  }
  for (const auto& w : r.warnings) os << "warning: " << w << "\n";
  os << "\nconfig: " << r.config.dump(2) << "\n";
}

/// Writes report.csv, summary.txt and timings.csv into cfg.output_dir.
inline void write_bench_outputs(const ExperimentConfig& cfg, const BenchReport& r) {
  namespace fs = std::filesystem;
  fs::create_directories(cfg.output_dir);
  std::ofstream rep(fs::path(cfg.output_dir) / "report.csv");
  write_report_csv(rep, r, cfg.T);
  std::ofstream sum(fs::path(cfg.output_dir) / "summary.txt");
  write_summary(sum, r, cfg.T, cfg.target_precision);
  std::ofstream tim(fs::path(cfg.output_dir) / "timings.csv");
  write_timings_csv(tim, r);
}

}  // namespace osmd
