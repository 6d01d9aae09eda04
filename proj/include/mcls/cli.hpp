#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstdint>
#include <cstdio>
#include <functional>
#include <istream>
#include <map>
#include <numbers>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "mcls/basis.hpp"
#include "mcls/error.hpp"
#include "mcls/estimator.hpp"
#include "mcls/models.hpp"
#include "mcls/pricing.hpp"
#include "mcls/sampling.hpp"
#include "mcls/solvers.hpp"

namespace mcls::cli {

enum class Experiment { integrate, price, sin_benchmark, cost_curve };

inline std::string to_string(Experiment e) {
  switch (e) {
    case Experiment::integrate: return "integrate";
    case Experiment::price: return "price";
    case Experiment::sin_benchmark: return "sin-benchmark";
    case Experiment::cost_curve: return "cost-curve";
  }
  return "?";
}

inline std::uint64_t fnv1a64(std::string_view s) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

inline std::string hex64(std::uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

/// Shortest decimal that reads back to the same double.
inline std::string fmt(double v) {
  char buf[32];
  for (int p = 6; p <= 17; ++p) {
    std::snprintf(buf, sizeof buf, "%.*g", p, v);
    if (std::strtod(buf, nullptr) == v) break;
  }
  return buf;
}

inline std::vector<std::size_t> default_n_grid() { return {100, 215, 464, 1000, 2154, 4642, 10000}; }

/// Fully resolved run description; every field has a value once defaults
/// are applied, so the canonical text determines the run.
struct ExperimentConfig {
  Experiment kind = Experiment::integrate;
  std::uint64_t seed = 0;
  std::string out;
  SolverChoice solver = SolverChoice::automatic;
  double storable_limit = kDefaultStorableLimit;
  double cg_tol = 1e-10;
  double rek_eps = 1e-6;
  std::size_t rek_max_iterations = 0;  // 0: solver default
  std::vector<std::size_t> n_grid = default_n_grid();
  std::vector<int> degrees = {5};

  // integrate / sin-benchmark / cost-curve
  std::size_t d = 1;
  std::string function = "sin-sum";
  std::string sampling = "optimal";
  std::vector<std::string> schedules = {"fixed", "sqrt", "nlogn"};
  std::size_t fixed_n = 50;

  // price
  std::string model = "heston";
  std::string payoff = "call";
  std::string method = "cube";
  double log_strike = 0.0;
  double strike = 1.0;
  double maturity = 1.0 / 12.0;
  std::size_t steps = 100;
  std::size_t reference_paths = 1'000'000;
  std::uint64_t reference_seed = 0;
  double kappa = 0.5, theta = 0.01, sigma = 0.15, rho = -0.5, r = 0.01, v0 = 0.04, x0 = 0.0;
  double vmin = 1e-4, vmax = 0.08;
  double s0 = 1.0;
  double asset_vol = 0.2;
  std::string correlation = "identity";
  std::uint64_t param_seed = 2024;

  SolverConfig solver_config() const {
    SolverConfig s;
    s.choice = solver;
    s.storable_limit = storable_limit;
    s.cg.tolerance = cg_tol;
    s.rek.eps = rek_eps;
    s.rek.seed = seed;
    if (rek_max_iterations > 0) s.rek.max_iterations = rek_max_iterations;
    return s;
  }
};

/// Defaults per experiment; the seed is derived from the experiment name.
inline ExperimentConfig default_config(Experiment kind) {
  ExperimentConfig c;
  c.kind = kind;
  c.seed = fnv1a64(to_string(kind)) & 0xFFFFFFFFULL;
  c.reference_seed = c.seed ^ 0x5EEDULL;
  switch (kind) {
    case Experiment::integrate:
      c.d = 2;
      c.degrees = {0, 1, 3, 5};
      break;
    case Experiment::price:
      c.degrees = {0, 1, 3, 5};
      break;
    case Experiment::sin_benchmark:
      c.d = 2;
      c.degrees = {5};
      c.n_grid = {100, 1000, 10000, 100000};
      break;
    case Experiment::cost_curve:
      c.d = 1;
      c.function = "sin30";
      c.degrees = {0};
      break;
  }
  return c;
}

inline std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r\n");
  return std::string(s.substr(b, e - b + 1));
}

/// `key = value` lines; `#` starts a comment. Later keys override earlier ones.
inline std::map<std::string, std::string> parse_key_values(std::istream& in) {
  std::map<std::string, std::string> kv;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (const auto h = line.find('#'); h != std::string::npos) line.erase(h);
    const std::string t = trim(line);
    if (t.empty()) continue;
    const auto eq = t.find('=');
    if (eq == std::string::npos) throw ConfigError("line " + std::to_string(lineno) + ": expected key = value");
    const std::string key = trim(std::string_view(t).substr(0, eq));
    if (key.empty()) throw ConfigError("line " + std::to_string(lineno) + ": empty key");
    kv[key] = trim(std::string_view(t).substr(eq + 1));
  }
  return kv;
}

namespace detail {

inline double parse_double(const std::string& key, const std::string& v) {
  std::size_t pos = 0;
  double x = 0.0;
  try {
    x = std::stod(v, &pos);
  } catch (const std::exception&) {
    throw ConfigError(key + ": '" + v + "' is not a number");
  }
  if (pos != v.size() || !std::isfinite(x)) throw ConfigError(key + ": '" + v + "' is not a number");
  return x;
}

/// Accepts "10000" as well as "1e4".
inline std::uint64_t parse_count(const std::string& key, const std::string& v) {
  if (!v.empty() && std::all_of(v.begin(), v.end(), [](char ch) { return ch >= '0' && ch <= '9'; })) {
    try {
      return std::stoull(v);
    } catch (const std::exception&) {
      throw ConfigError(key + ": '" + v + "' is out of range");
    }
  }
  const double x = parse_double(key, v);
  if (x < 0.0 || x != std::floor(x) || x > 1.8e19) throw ConfigError(key + ": '" + v + "' is not a count");
  return static_cast<std::uint64_t>(x);
}

inline std::vector<std::string> split_list(const std::string& v) {
  std::vector<std::string> out;
  std::string cur;
  for (char ch : v) {
    if (ch == ',' || ch == ' ' || ch == ';') {
      if (!cur.empty()) out.push_back(cur);
      cur.clear();
    } else {
      cur += ch;
    }
  }
  if (!cur.empty()) out.push_back(cur);
  return out;
}

inline std::string join(const std::vector<std::string>& v) {
  std::string s;
  for (std::size_t i = 0; i < v.size(); ++i) s += (i ? "," : "") + v[i];
  return s;
}

template <class T>
std::string join_numbers(const std::vector<T>& v) {
  std::vector<std::string> s;
  for (const T& x : v) s.push_back(std::to_string(x));
  return join(s);
}

inline void require_one_of(const std::string& key, const std::string& v, std::initializer_list<const char*> allowed) {
  for (const char* a : allowed)
    if (v == a) return;
  std::string msg = key + ": '" + v + "' is not one of";
  for (const char* a : allowed) msg += std::string(" ") + a;
  throw ConfigError(msg);
}

}  // namespace detail

inline std::vector<std::size_t> parse_n_grid(const std::string& v) {
  std::vector<std::size_t> g;
  for (const std::string& t : detail::split_list(v)) g.push_back(detail::parse_count("n_grid", t));
  if (g.empty()) throw ConfigError("n_grid: empty list");
  for (std::size_t i = 1; i < g.size(); ++i)
    if (g[i] <= g[i - 1]) throw ConfigError("n_grid must be strictly increasing");
  return g;
}

/// Applies key/value overrides. Keys use underscores; dashes are accepted.
inline void apply_overrides(ExperimentConfig& c, const std::map<std::string, std::string>& kv) {
  using detail::parse_count;
  using detail::parse_double;
  for (const auto& [raw_key, v] : kv) {
    std::string key = raw_key;
    std::replace(key.begin(), key.end(), '-', '_');
    if (key == "seed") c.seed = parse_count(key, v);
    else if (key == "out") c.out = v;
    else if (key == "solver") {
      try {
        c.solver = parse_solver_choice(v);
      } catch (const ConfigError& e) {
        throw ConfigError(std::string("solver: ") + e.what());
      }
    }
    else if (key == "storable_limit") {
      c.storable_limit = parse_double(key, v);
      if (!(c.storable_limit >= 0.0)) throw ConfigError("storable_limit must be non-negative");
    }
    else if (key == "cg_tol") c.cg_tol = parse_double(key, v);
    else if (key == "rek_eps") c.rek_eps = parse_double(key, v);
    else if (key == "rek_max_iterations") c.rek_max_iterations = parse_count(key, v);
    else if (key == "n_grid") c.n_grid = parse_n_grid(v);
    else if (key == "degree" || key == "degrees") {
      c.degrees.clear();
      for (const std::string& t : detail::split_list(v)) {
        const auto k = parse_count(key, t);
        if (k > 64) throw ConfigError("degree too large");
        c.degrees.push_back(static_cast<int>(k));
      }
      if (c.degrees.empty()) throw ConfigError("degree: empty list");
    }
    else if (key == "d" || key == "dimension") {
      c.d = parse_count(key, v);
      if (c.d < 1) throw ConfigError("dimension must be >= 1");
    }
    else if (key == "function") {
      detail::require_one_of(key, v, {"sin-sum", "exp-abs", "sin30", "abs", "poly"});
      c.function = v;
    }
    else if (key == "sampling") {
      detail::require_one_of(key, v, {"optimal", "plain"});
      c.sampling = v;
    }
    else if (key == "schedules" || key == "schedule") {
      c.schedules = detail::split_list(v);
      for (const std::string& s : c.schedules) detail::require_one_of(key, s, {"fixed", "sqrt", "nlogn"});
    }
    else if (key == "fixed_n") c.fixed_n = parse_count(key, v);
    else if (key == "model") {
      detail::require_one_of(key, v, {"heston", "jacobi", "bs"});
      c.model = v;
    }
    else if (key == "payoff") {
      detail::require_one_of(key, v, {"call", "basket", "rainbow"});
      c.payoff = v;
    }
    else if (key == "method") {
      detail::require_one_of(key, v, {"cube", "direct"});
      c.method = v;
    }
    else if (key == "log_strike" || key == "k") c.log_strike = parse_double(key, v);
    else if (key == "strike") c.strike = parse_double(key, v);
    else if (key == "maturity" || key == "T") c.maturity = parse_double(key, v);
    else if (key == "steps" || key == "Ns") c.steps = parse_count(key, v);
    else if (key == "reference_paths") c.reference_paths = parse_count(key, v);
    else if (key == "reference_seed") c.reference_seed = parse_count(key, v);
    else if (key == "kappa") c.kappa = parse_double(key, v);
    else if (key == "theta") c.theta = parse_double(key, v);
    else if (key == "sigma") c.sigma = parse_double(key, v);
    else if (key == "rho") c.rho = parse_double(key, v);
    else if (key == "r") c.r = parse_double(key, v);
    else if (key == "v0") c.v0 = parse_double(key, v);
    else if (key == "x0") c.x0 = parse_double(key, v);
    else if (key == "vmin") c.vmin = parse_double(key, v);
    else if (key == "vmax") c.vmax = parse_double(key, v);
    else if (key == "s0") c.s0 = parse_double(key, v);
    else if (key == "asset_vol") c.asset_vol = parse_double(key, v);
    else if (key == "correlation") {
      detail::require_one_of(key, v, {"identity", "random"});
      c.correlation = v;
    }
    else if (key == "param_seed") c.param_seed = parse_count(key, v);
    else throw ConfigError("unknown key '" + raw_key + "'");
  }
  if (!(c.maturity > 0.0)) throw ConfigError("maturity must be positive");
  if (c.steps < 1) throw ConfigError("steps must be >= 1");
  if (!(c.cg_tol > 0.0) || !(c.rek_eps > 0.0)) throw ConfigError("solver tolerances must be positive");
}

/// Sorted `key=value` lines describing every input of the run (not `out`).
inline std::string canonical(const ExperimentConfig& c) {
  std::map<std::string, std::string> kv{
      {"experiment", to_string(c.kind)},
      {"seed", std::to_string(c.seed)},
      {"solver", to_string(c.solver)},
      {"storable_limit", fmt(c.storable_limit)},
      {"cg_tol", fmt(c.cg_tol)},
      {"rek_eps", fmt(c.rek_eps)},
      {"rek_max_iterations", std::to_string(c.rek_max_iterations)},
      {"n_grid", detail::join_numbers(c.n_grid)},
      {"degrees", detail::join_numbers(c.degrees)},
  };
  switch (c.kind) {
    case Experiment::integrate:
      kv["d"] = std::to_string(c.d);
      kv["function"] = c.function;
      kv["sampling"] = c.sampling;
      break;
    case Experiment::sin_benchmark:
      kv["d"] = std::to_string(c.d);
      break;
    case Experiment::cost_curve:
      kv["d"] = std::to_string(c.d);
      kv["function"] = c.function;
      kv["schedules"] = detail::join(c.schedules);
      kv["fixed_n"] = std::to_string(c.fixed_n);
      break;
    case Experiment::price:
      kv["model"] = c.model;
      kv["payoff"] = c.payoff;
      kv["maturity"] = fmt(c.maturity);
      kv["reference_paths"] = std::to_string(c.reference_paths);
      kv["reference_seed"] = std::to_string(c.reference_seed);
      kv["r"] = fmt(c.r);
      if (c.model == "bs") {
        kv["d"] = std::to_string(c.d);
        kv["method"] = c.method;
        kv["strike"] = fmt(c.strike);
        kv["s0"] = fmt(c.s0);
        kv["asset_vol"] = fmt(c.asset_vol);
        kv["correlation"] = c.correlation;
        kv["param_seed"] = std::to_string(c.param_seed);
      } else {
        kv["log_strike"] = fmt(c.log_strike);
        kv["steps"] = std::to_string(c.steps);
        for (const auto& [k, val] : std::initializer_list<std::pair<const char*, double>>{
                 {"kappa", c.kappa}, {"theta", c.theta}, {"sigma", c.sigma}, {"rho", c.rho}, {"v0", c.v0}, {"x0", c.x0}}) {
          kv[k] = fmt(val);
        }
        if (c.model == "jacobi") {
          kv["vmin"] = fmt(c.vmin);
          kv["vmax"] = fmt(c.vmax);
        }
      }
      break;
  }
  std::string s;
  for (const auto& [k, v] : kv) s += k + "=" + v + "\n";
  return s;
}

inline std::uint64_t config_hash(const ExperimentConfig& c) { return fnv1a64(canonical(c)); }

/// Headered table; provenance columns are appended by add_row.
struct ResultTable {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;
  bool all_converged = true;
  std::string hash;
  std::uint64_t seed = 0;
  bool flops_column = true;  // false when the body already reports flops

  void add_row(std::vector<std::string> cells, const std::string& solver, std::uint64_t flops, bool converged) {
    cells.push_back(hash);
    cells.push_back(std::to_string(seed));
    cells.push_back(solver);
    if (flops_column) cells.push_back(std::to_string(flops));
    cells.push_back(converged ? "1" : "0");
    all_converged = all_converged && converged;
    rows.push_back(std::move(cells));
  }
};

inline ResultTable make_table(const ExperimentConfig& c, std::vector<std::string> columns) {
  ResultTable t;
  t.flops_column = std::find(columns.begin(), columns.end(), "flops") == columns.end();
  t.header = std::move(columns);
  for (const char* p : {"config_hash", "seed", "solver", "flops", "converged"})
    if (t.flops_column || std::string_view(p) != "flops") t.header.emplace_back(p);
  t.hash = hex64(config_hash(c));
  t.seed = c.seed;
  return t;
}

inline void write_csv(std::ostream& os, const ResultTable& t) {
  auto line = [&](const std::vector<std::string>& cells) {
    for (std::size_t i = 0; i < cells.size(); ++i) os << (i ? "," : "") << cells[i];
    os << '\n';
  };
  line(t.header);
  for (const auto& r : t.rows) line(r);
}

// ---------------------------------------------------------------------------
// Integrands with closed-form integrals over (0,1)^d

/// int_{[0,1]^d} sin(x_1 + ... + x_d) dx = Im(((e^i - 1) / i)^d).
inline double sin_sum_integral(std::size_t d) {
  const std::complex<double> one_d = (std::exp(std::complex<double>(0.0, 1.0)) - 1.0) / std::complex<double>(0.0, 1.0);
  return std::pow(one_d, static_cast<int>(d)).imag();
}

struct CubeIntegrand {
  std::function<double(std::span<const double>)> f;
  double exact = 0.0;
};

inline CubeIntegrand cube_integrand(const std::string& name, std::size_t d) {
  if (name == "sin-sum") {
    return {[](std::span<const double> x) {
              double s = 0.0;
              for (double v : x) s += v;
              return std::sin(s);
            },
            sin_sum_integral(d)};
  }
  if (name == "exp-abs") {
    return {[](std::span<const double> x) {
              double s = 0.0;
              for (double v : x) s += std::exp(-std::abs(v - 0.5));
              return s;
            },
            static_cast<double>(d) * 2.0 * (1.0 - std::exp(-0.5))};
  }
  if (name == "abs") {
    return {[](std::span<const double> x) {
              double s = 0.0;
              for (double v : x) s += std::abs(v - 0.5);
              return s;
            },
            0.25 * static_cast<double>(d)};
  }
  if (name == "sin30") {
    return {[](std::span<const double> x) {
              double s = 0.0;
              for (double v : x) s += std::sin(30.0 * v);
              return s;
            },
            static_cast<double>(d) * (1.0 - std::cos(30.0)) / 30.0};
  }
  if (name == "poly") {
    // prod (1 + x_k^2): integral (4/3)^d
    return {[](std::span<const double> x) {
              double s = 1.0;
              for (double v : x) s *= 1.0 + v * v;
              return s;
            },
            std::pow(4.0 / 3.0, static_cast<double>(d))};
  }
  throw ConfigError("unknown function '" + name + "'");
}

namespace detail {

inline WeightedSampleBatch plain_cube_batch(std::size_t d, std::size_t n, std::uint64_t seed) {
  return sample_plain(UniformCube{d}, n, seed);
}

inline std::vector<double> evaluate(const CubeIntegrand& g, const WeightedSampleBatch& b) {
  std::vector<double> f(b.size());
  for (std::size_t i = 0; i < b.size(); ++i) f[i] = g.f(b.point(i));
  return f;
}

/// MCLS on (0,1)^d with a tensor-Legendre basis.
inline MclsEstimate cube_mcls(const CubeIntegrand& g, const BasisSet& basis, bool optimal, std::size_t n,
                              std::uint64_t seed, const EstimatorConfig& cfg) {
  const auto table = IntegralTable::orthonormal(basis.size());
  if (!optimal) {
    const WeightedSampleBatch b = plain_cube_batch(basis.dimension(), n, seed);
    return mcls_estimate_values(evaluate(g, b), basis, b, table, cfg);
  }
  if (is_storable(n, basis.size(), cfg.solver.storable_limit)) {
    const WeightedSampleBatch b = sample_optimal(basis, n, seed);
    return mcls_estimate_values(evaluate(g, b), basis, b, table, cfg);
  }
  const RegeneratedOptimalBatch b(basis, n, seed);
  std::vector<double> f(n);
  std::vector<double> x(basis.dimension());
  for (std::size_t i = 0; i < n; ++i) {
    b.point(i, x);
    f[i] = g.f(x);
  }
  return mcls_estimate_values(f, basis, b, table, cfg);
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Experiments

/// Cube integration for each (N, degree): value, error, CI.
inline ResultTable run_integrate(const ExperimentConfig& c) {
  ResultTable t = make_table(c, {"N", "degree", "n", "value", "reference", "abs_error", "ci_low", "ci_high"});
  const CubeIntegrand g = cube_integrand(c.function, c.d);
  EstimatorConfig cfg{c.solver_config(), 0.95};
  for (std::size_t n : c.n_grid)
    for (int deg : c.degrees) {
      const BasisSet basis = BasisSet::tensor_legendre(c.d, deg);
      if (n <= basis.size()) continue;
      const MclsEstimate e = detail::cube_mcls(g, basis, c.sampling == "optimal", n, c.seed, cfg);
      t.add_row({std::to_string(n), std::to_string(deg), std::to_string(e.n), fmt(e.value), fmt(g.exact),
                 fmt(std::abs(e.value - g.exact)), fmt(e.ci_low), fmt(e.ci_high)},
                to_string(e.solution.solver), e.flop_count, e.solution.converged);
    }
  return t;
}

/// sin(x_1 + ... + x_d): MCLS with optimal weighted sampling against plain MC
/// on the same number of samples, one row per N.
inline ResultTable run_sin_benchmark(const ExperimentConfig& c) {
  ResultTable t = make_table(c, {"N", "degree", "n", "reference", "mcls_value", "mc_value", "mcls_error", "mc_error",
                                 "mcls_ci_width", "mc_ci_width"});
  const CubeIntegrand g = cube_integrand("sin-sum", c.d);
  EstimatorConfig cfg{c.solver_config(), 0.95};
  const int deg = c.degrees.front();
  const BasisSet basis = BasisSet::tensor_legendre(c.d, deg);
  for (std::size_t n : c.n_grid) {
    if (n <= basis.size()) continue;
    const MclsEstimate e = detail::cube_mcls(g, basis, true, n, c.seed, cfg);
    const WeightedSampleBatch pb = detail::plain_cube_batch(c.d, n, c.seed);
    const MclsEstimate m = mc_estimate(detail::evaluate(g, pb));
    t.add_row({std::to_string(n), std::to_string(deg), std::to_string(e.n), fmt(g.exact), fmt(e.value), fmt(m.value),
               fmt(std::abs(e.value - g.exact)), fmt(std::abs(m.value - g.exact)), fmt(e.ci_width()),
               fmt(m.ci_width())},
              to_string(e.solution.solver), e.flop_count, e.solution.converged);
  }
  return t;
}

/// Number of fitted functions minus one under a schedule.
inline std::size_t schedule_n(const std::string& schedule, std::size_t n_samples, std::size_t fixed_n) {
  const double nn = static_cast<double>(n_samples);
  if (schedule == "fixed") return fixed_n;
  if (schedule == "sqrt") return static_cast<std::size_t>(std::floor(std::sqrt(nn)));
  if (schedule == "nlogn") return static_cast<std::size_t>(std::floor(nn / std::log(nn)));
  throw ConfigError("unknown schedule '" + schedule + "'");
}

/// Error against flops for plain MC (flops = N) and MCLS with n chosen by
/// each schedule; the basis is the first n+1 tensor-Legendre functions in
/// graded order.
inline ResultTable run_cost_curve(const ExperimentConfig& c) {
  ResultTable t = make_table(c, {"N", "schedule", "n", "flops", "error", "value", "reference"});
  const CubeIntegrand g = cube_integrand(c.function, c.d);
  EstimatorConfig cfg{c.solver_config(), 0.95};
  for (std::size_t n_samples : c.n_grid) {
    const WeightedSampleBatch pb = detail::plain_cube_batch(c.d, n_samples, c.seed);
    const MclsEstimate m = mc_estimate(detail::evaluate(g, pb));
    t.add_row({std::to_string(n_samples), "mc", "0", std::to_string(n_samples), fmt(std::abs(m.value - g.exact)),
               fmt(m.value), fmt(g.exact)},
              "none", n_samples, true);
    for (const std::string& sched : c.schedules) {
      const std::size_t n = schedule_n(sched, n_samples, c.fixed_n);
      if (n + 2 > n_samples) continue;
      int deg = 0;
      while (multi_index_count(c.d, deg) < n + 1) ++deg;
      const BasisSet basis = BasisSet::tensor_legendre(c.d, deg).prefix(n + 1);
      const MclsEstimate e = detail::cube_mcls(g, basis, true, n_samples, c.seed, cfg);
      t.add_row({std::to_string(n_samples), sched, std::to_string(n), std::to_string(e.flop_count),
                 fmt(std::abs(e.value - g.exact)), fmt(e.value), fmt(g.exact)},
                to_string(e.solution.solver), e.flop_count, e.solution.converged);
    }
  }
  return t;
}

inline BlackScholesSpec bs_spec_from(const ExperimentConfig& c) {
  const auto d = static_cast<Eigen::Index>(c.d);
  Eigen::VectorXd vols = Eigen::VectorXd::Constant(d, c.asset_vol);
  Eigen::MatrixXd corr = Eigen::MatrixXd::Identity(d, d);
  if (c.correlation == "random") {
    vols = random_volatilities(c.d, c.param_seed);
    corr = random_correlation(c.d, c.param_seed);
  }
  return BlackScholesSpec::make(Eigen::VectorXd::Constant(d, c.s0), vols, corr, c.r);
}

inline Payoff payoff_from(const ExperimentConfig& c) {
  if (c.payoff == "call") {
    if (c.model == "bs") return Payoff::basket(std::vector<double>{1.0}, c.strike);
    return Payoff::call_logprice(c.log_strike);
  }
  if (c.model != "bs") throw ConfigError("payoff '" + c.payoff + "' needs model = bs");
  if (c.payoff == "basket") return Payoff::basket(c.d, c.strike);
  return Payoff::rainbow_min_put(c.strike);
}

/// Option prices for each (N, degree) with errors against a reference.
inline ResultTable run_price(const ExperimentConfig& c) {
  ResultTable t = make_table(c, {"N", "degree", "price", "reference", "abs_error", "ci_width", "implied_vol",
                                 "implied_vol_error"});
  const Payoff payoff = payoff_from(c);
  PricingConfig pc;
  pc.maturity = c.maturity;
  pc.steps = c.steps;
  pc.seed = c.seed;
  pc.estimator = EstimatorConfig{c.solver_config(), 0.95};

  std::optional<double> reference;
  double spot = 1.0;
  double strike = 1.0;
  std::function<PriceReport(const PricingConfig&)> price;
  if (c.model == "bs") {
    if (c.payoff == "call" && c.d != 1) throw ConfigError("payoff call with model bs needs d = 1");
    const BlackScholesSpec spec = bs_spec_from(c);
    const BsMethod method = c.method == "cube" ? BsMethod::cube_weighted : BsMethod::direct_monomial;
    spot = c.s0;
    strike = c.strike;
    if (c.payoff == "call") {
      reference = bs_call_price(c.s0, c.strike, c.r, spec.sigma[0], c.maturity);
    } else if (c.reference_paths > 0) {
      reference = reference_price_mc(spec, payoff, c.maturity, c.reference_paths, c.reference_seed).price;
    }
    price = [spec, payoff, method](const PricingConfig& p) { return price_european(spec, payoff, p, method); };
  } else if (c.model == "heston") {
    HestonSpec h{c.kappa, c.theta, c.sigma, c.rho, c.r, c.v0, c.x0};
    h.validate();
    spot = std::exp(c.x0);
    strike = std::exp(c.log_strike);
    if (c.reference_paths > 0) {
      reference = reference_price_mc(h, payoff, c.maturity, c.reference_paths, c.steps, c.reference_seed).price;
    }
    price = [h, payoff](const PricingConfig& p) { return price_european(h, payoff, p); };
  } else {
    JacobiSpec j{c.kappa, c.theta, c.sigma, c.rho, c.r, c.v0, c.x0, c.vmin, c.vmax};
    j.validate();
    spot = std::exp(c.x0);
    strike = std::exp(c.log_strike);
    if (c.reference_paths > 0) {
      reference = reference_price_mc(j, payoff, c.maturity, c.reference_paths, c.steps, c.reference_seed).price;
    }
    price = [j, payoff](const PricingConfig& p) { return price_european(j, payoff, p); };
  }

  std::optional<double> reference_vol;
  const bool single_call = c.payoff == "call";
  if (reference && single_call) {
    try {
      reference_vol = implied_vol(*reference, spot, strike, c.r, c.maturity);
    } catch (const NoSolutionError&) {
    }
  }

  for (std::size_t n : c.n_grid)
    for (int deg : c.degrees) {
      pc.degree = deg;
      pc.n_samples = n;
      PriceReport rep;
      try {
        rep = price(pc);
      } catch (const DegreesOfFreedomError&) {
        continue;
      }
      std::optional<double> iv;
      if (single_call) {
        try {
          iv = implied_vol(rep.price, spot, strike, c.r, c.maturity);
        } catch (const NoSolutionError&) {
        }
      }
      const std::string na = "--";
      t.add_row({std::to_string(n), std::to_string(deg), fmt(rep.price), reference ? fmt(*reference) : na,
                 reference ? fmt(std::abs(rep.price - *reference)) : na, fmt(std::exp(-c.r * c.maturity) * rep.estimate.ci_width()),
                 iv ? fmt(*iv) : na, (iv && reference_vol) ? fmt(std::abs(*iv - *reference_vol)) : na},
                to_string(rep.estimate.solution.solver), rep.estimate.flop_count, rep.estimate.solution.converged);
    }
  return t;
}

inline ResultTable run_experiment(const ExperimentConfig& c) {
  switch (c.kind) {
    case Experiment::integrate: return run_integrate(c);
    case Experiment::price: return run_price(c);
    case Experiment::sin_benchmark: return run_sin_benchmark(c);
    case Experiment::cost_curve: return run_cost_curve(c);
  }
  throw ConfigError("unknown experiment");
}

/// Manifest: canonical configuration, its hash and the build's git description.
inline std::string manifest(const ExperimentConfig& c, std::string_view git_describe, std::string_view command) {
  std::ostringstream os;
  os << "# mcls run manifest\n";
  os << "git_describe=" << git_describe << '\n';
  os << "command=" << command << '\n';
  os << "config_hash=" << hex64(config_hash(c)) << '\n';
  os << canonical(c);
  return os.str();
}

}  // namespace mcls::cli
