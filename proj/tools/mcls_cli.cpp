// mcls: command-line driver for cube integration, option pricing and the
// benchmark experiments. Results go to a headered CSV plus a manifest.
#include <CLI11.hpp>

#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "mcls/cli.hpp"

#ifndef MCLS_GIT_DESCRIBE
#define MCLS_GIT_DESCRIBE "unknown"
#endif

namespace {

constexpr int kExitOk = 0;
constexpr int kExitConfig = 2;
constexpr int kExitNoConvergence = 3;

struct Flags {
  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::string out;
  std::string solver;
  std::optional<double> storable_limit;
  std::string degree;
  std::string n_grid;
  std::vector<std::string> sets;
};

void add_common(CLI::App* sub, Flags& f) {
  sub->add_option("--config", f.config_path, "key = value configuration file");
  sub->add_option("--seed", f.seed, "master seed (u64)");
  sub->add_option("--out", f.out, "CSV output path (stdout when omitted)");
  sub->add_option("--solver", f.solver, "least-squares backend")->check(CLI::IsMember({"auto", "qr", "cg", "rek"}));
  sub->add_option("--storable-limit", f.storable_limit, "largest N(n+1) stored densely (default 1e8)");
  sub->add_option("--degree", f.degree, "total degree, or a comma list");
  sub->add_option("--n-grid", f.n_grid, "strictly increasing comma list of sample sizes");
  sub->add_option("--set", f.sets, "extra KEY=VALUE override (repeatable)");
}

mcls::cli::ExperimentConfig resolve(mcls::cli::Experiment kind, const Flags& f) {
  using namespace mcls::cli;
  ExperimentConfig c = default_config(kind);
  if (!f.config_path.empty()) {
    std::ifstream in(f.config_path);
    if (!in) throw mcls::ConfigError("cannot open config file '" + f.config_path + "'");
    apply_overrides(c, parse_key_values(in));
  }
  std::map<std::string, std::string> kv;
  for (const std::string& s : f.sets) {
    const auto eq = s.find('=');
    if (eq == std::string::npos) throw mcls::ConfigError("--set expects KEY=VALUE, got '" + s + "'");
    kv[trim(s.substr(0, eq))] = trim(s.substr(eq + 1));
  }
  if (f.seed) kv["seed"] = std::to_string(*f.seed);
  if (!f.out.empty()) kv["out"] = f.out;
  if (!f.solver.empty()) kv["solver"] = f.solver;
  if (f.storable_limit) kv["storable_limit"] = fmt(*f.storable_limit);
  if (!f.degree.empty()) kv["degree"] = f.degree;
  if (!f.n_grid.empty()) kv["n_grid"] = f.n_grid;
  apply_overrides(c, kv);
  return c;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Monte Carlo with least squares: integration and option pricing"};
  app.require_subcommand(1);
  Flags flags;
  const std::vector<std::pair<mcls::cli::Experiment, std::string>> subs = {
      {mcls::cli::Experiment::integrate, "integrate MCLS integration of a test function over the unit cube"},
      {mcls::cli::Experiment::price, "price European options (heston, jacobi, bs)"},
      {mcls::cli::Experiment::sin_benchmark, "sin-benchmark sin(sum x) against plain MC"},
      {mcls::cli::Experiment::cost_curve, "cost-curve error against flops for n schedules"},
  };
  std::map<CLI::App*, mcls::cli::Experiment> kinds;
  for (const auto& [kind, text] : subs) {
    const auto sp = text.find(' ');
    CLI::App* sub = app.add_subcommand(text.substr(0, sp), text.substr(sp + 1));
    add_common(sub, flags);
    kinds[sub] = kind;
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? kExitOk : kExitConfig;
  }

  std::string command;
  for (int i = 0; i < argc; ++i) command += (i ? " " : "") + std::string(argv[i]);

  try {
    mcls::cli::Experiment kind{};
    for (const auto& [sub, k] : kinds)
      if (sub->parsed()) kind = k;
    const mcls::cli::ExperimentConfig cfg = resolve(kind, flags);
    const mcls::cli::ResultTable table = mcls::cli::run_experiment(cfg);
    if (cfg.out.empty()) {
      mcls::cli::write_csv(std::cout, table);
    } else {
      std::ofstream os(cfg.out);
      if (!os) throw mcls::ConfigError("cannot write '" + cfg.out + "'");
      mcls::cli::write_csv(os, table);
      std::ofstream ms(cfg.out + ".manifest");
      ms << mcls::cli::manifest(cfg, MCLS_GIT_DESCRIBE, command);
    }
    if (!table.all_converged) {
      std::cerr << "mcls: at least one least-squares solve did not converge\n";
      return kExitNoConvergence;
    }
  } catch (const mcls::ConfigError& e) {
    std::cerr << "mcls: config error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const mcls::DomainError& e) {
    std::cerr << "mcls: invalid input: " << e.what() << '\n';
    return kExitConfig;
  } catch (const mcls::DegreesOfFreedomError& e) {
    std::cerr << "mcls: invalid input: " << e.what() << '\n';
    return kExitConfig;
  } catch (const mcls::CapacityError& e) {
    std::cerr << "mcls: invalid input: " << e.what() << '\n';
    return kExitConfig;
  } catch (const std::exception& e) {
    std::cerr << "mcls: error: " << e.what() << '\n';
    return 1;
  }
  return kExitOk;
}
