// lru: leakage-removal-unit simulations from the command line.

#include <cmath>
#include <cstdio>
#include <iostream>
#include <limits>
#include <string>

#include "CLI11.hpp"
#include "lru/analytics.hpp"
#include "lru/config.hpp"
#include "lru/error.hpp"
#include "lru/experiments.hpp"
#include "lru/master_equation.hpp"
#include "lru/verification.hpp"

namespace {

constexpr int kExitFit = 2;
constexpr int kExitConfig = 3;
constexpr int kExitNumeric = 4;
constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

struct Common {
  std::string config_path;
  std::uint64_t seed = 0;
  int trajectories = 0;
  int threads = 0;
  std::string output;
  std::string format = "csv";
  bool seed_set = false;
};

void add_common(CLI::App* cmd, Common& c) {
  cmd->add_option("--config", c.config_path, "JSON configuration file")->required()->check(CLI::ExistingFile);
  cmd->add_option_function<std::uint64_t>("--seed", [&c](const std::uint64_t& s) {
    c.seed = s;
    c.seed_set = true;
  }, "master seed (overrides the config)");
  cmd->add_option("--trajectories", c.trajectories, "trajectory count (overrides the config)")->check(CLI::PositiveNumber);
  cmd->add_option("--threads", c.threads, "worker threads (overrides the config)")->check(CLI::PositiveNumber);
  cmd->add_option("--output", c.output, "results file; stdout when omitted");
  cmd->add_option("--format", c.format, "csv or json")->check(CLI::IsMember({"csv", "json"}));
}

lru::LoadedConfig load(const Common& c) {
  lru::LoadedConfig cfg = lru::load_config(c.config_path);
  auto apply = [&](lru::SimulationConfig& s) {
    if (c.seed_set) s.master_seed = c.seed;
    if (c.trajectories > 0) s.n_trajectories = c.trajectories;
    if (c.threads > 0) s.threads = c.threads;
    s.validate();
  };
  apply(cfg.simulation);
  if (cfg.sweep) apply(cfg.sweep->base);
  return cfg;
}

nlohmann::json metadata(const lru::LoadedConfig& cfg, const std::string& command) {
  nlohmann::json m;
  m["command"] = command;
  m["config"] = cfg.source;
  m["resolved"] = lru::describe(cfg.sweep ? cfg.sweep->base : cfg.simulation);
  m["seed"] = (cfg.sweep ? cfg.sweep->base : cfg.simulation).master_seed;
  m["trajectories"] = (cfg.sweep ? cfg.sweep->base : cfg.simulation).n_trajectories;
  m["units"] = {{"frequency", cfg.units.frequency_unit()}, {"time", cfg.units.time_unit()}};
  return m;
}

void write(const lru::ResultTable& table, const Common& c, const nlohmann::json& meta) {
  const auto format = lru::output_format_from_string(c.format);
  if (c.output.empty()) {
    if (table.rows.empty()) throw lru::ConfigError("refusing to write an empty result table");
    std::cout << lru::render_results(table, format);
  } else {
    lru::emit_results(table, format, c.output, meta);
  }
}

int simulate(const Common& c, bool master) {
  const lru::LoadedConfig cfg = load(c);
  const lru::SimulationConfig& s = cfg.simulation;
  lru::ResultTable t;
  nlohmann::json meta = metadata(cfg, "simulate");
  if (master) {
    const std::vector<double> grid = s.time_grid();
    const lru::MasterSolution sol = lru::solve_master_dense(s, grid);
    t.columns = {"t", "leakage_total", "leakage_site1", "occupation_site1", "coherence_re", "coherence_im"};
    for (std::size_t i = 0; i < grid.size(); ++i) {
      const auto& x = sol.samples[i];
      t.rows.push_back({grid[i], x.leakage_total, x.leakage_site1, x.occupation_site1, x.coherence_site1.real(),
                        x.coherence_site1.imag()});
    }
    meta["solver"] = "master";
    meta["max_trace_error"] = sol.max_trace_error;
    meta["min_eigenvalue"] = sol.min_eigenvalue;
  } else {
    const lru::EnsembleObservables e = lru::run_ensemble(s);
    t.columns = {"t", "leakage_total", "leakage_total_se", "leakage_site1", "leakage_site1_se",
                 "occupation_site1", "occupation_site1_se", "coherence_re", "coherence_im",
                 "coherence_modulus", "coherence_modulus_se"};
    for (std::size_t i = 0; i < e.time_grid.size(); ++i)
      t.rows.push_back({e.time_grid[i], e.leakage_total[i], e.se_leakage_total[i], e.leakage_site1[i],
                        e.se_leakage_site1[i], e.occupation_site1[i], e.se_occupation_site1[i],
                        e.coherence_site1[i].real(), e.coherence_site1[i].imag(), e.coherence_modulus[i],
                        e.se_coherence_modulus[i]});
    meta["solver"] = "trajectories";
    meta["total_jumps"] = e.total_jumps;
    meta["total_measurements"] = e.total_measurements;
  }
  write(t, c, meta);
  return 0;
}

int rate_sweep(const Common& c) {
  const lru::LoadedConfig cfg = load(c);
  if (!cfg.sweep) throw lru::ConfigError("rate-sweep needs a 'sweep' section");
  const lru::RateSweepResult r = lru::run_rate_sweep(*cfg.sweep);
  nlohmann::json meta = metadata(cfg, "rate-sweep");
  nlohmann::json minima = nlohmann::json::array();
  const double j = cfg.sweep->base.lattice.hopping;
  for (int i : r.minima) minima.push_back(r.rates[i] / j);
  meta["minima_rate_over_J"] = minima;
  write(r.table, c, meta);
  std::cerr << "local minima (rate/J):";
  for (int i : r.minima) std::cerr << ' ' << r.rates[i] / j;
  std::cerr << '\n';
  if (r.minima.size() < 2) std::cerr << "note: fewer than two local minima\n";
  return 0;
}

int param_sweep(const Common& c) {
  const lru::LoadedConfig cfg = load(c);
  if (!cfg.sweep) throw lru::ConfigError("param-sweep needs a 'sweep' section");
  lru::ParameterSweepResult r = lru::run_parameter_sweep(*cfg.sweep);
  if (cfg.sweep->parameter == lru::SweptParameter::disorder_W ||
      cfg.sweep->parameter == lru::SweptParameter::hopping_J)
    for (auto& row : r.table.rows) row[0] = cfg.units.from_internal(row[0]);
  write(r.table, c, metadata(cfg, "param-sweep"));
  bool failed = false;
  for (std::size_t k = 0; k < r.table.columns.size(); ++k) {
    const std::string& name = r.table.columns[k];
    if (name.size() > 10 && name.substr(name.size() - 10) == "_converged")
      for (const auto& row : r.table.rows) failed = failed || row[k] == 0.0;
  }
  if (failed) {
    std::cerr << "error: at least one decay fit did not converge (see *_converged columns)\n";
    return kExitFit;
  }
  return 0;
}

int analytics_cmd(const Common& c) {
  namespace an = lru::analytics;
  const lru::LoadedConfig cfg = load(c);
  const lru::SimulationConfig& s = cfg.simulation;
  const double j = s.lattice.hopping, u = s.lattice.mean_anharmonicity, g = s.channel.rate;
  const double jp = lru::effective_hopping(j, u);
  lru::ResultTable t;
  t.columns = {"J_prop", "T_prop", "omega_dis", "threshold_U_over_J", "fb_rate_low", "fb_rate_high",
               "diss_rate_low", "diss_rate_high", "qubit_T1", "qubit_T2"};
  double t1 = kNaN, t2 = kNaN;
  if (!s.site_detunings.empty() && s.channel.active()) {
    const int l = s.lattice.length;
    const double dw = s.site_detunings.front() - s.site_detunings.back();
    lru::analytics::QubitTimes q;
    if (s.channel.is_feedback() && l == 2) {
      q = an::fb_qubit_times(g, j, dw);
    } else if (s.channel.kind == lru::ChannelKind::dissipation) {
      std::vector<double> mid(s.site_detunings.begin() + 1, s.site_detunings.end() - 1);
      for (double& m : mid) m = s.site_detunings.front() - m;
      q = an::diss_qubit_times(g, j, dw, l, mid);
    }
    t1 = q.t1;
    t2 = q.t2;
  }
  t.rows.push_back({jp, lru::propagation_time(j, u), an::disintegration_frequency({u, j, 0.0, 0.0}),
                    an::disintegration_threshold().ratio, an::fb_leakage_rate_low(g, jp),
                    an::fb_leakage_rate_high(g, j, u), an::diss_rate_low(g, jp), an::diss_rate_high(g, j, u),
                    t1, t2});
  write(t, c, metadata(cfg, "analytics"));
  return 0;
}

int verify(std::uint64_t seed) {
  bool ok = true;
  for (const lru::OracleCheck& check : lru::run_oracle_suite(seed)) {
    std::printf("%s %s: %.3e (tolerance %.1e)%s%s\n", check.pass ? "PASS" : "FAIL", check.name.c_str(),
                check.value, check.tolerance, check.detail.empty() ? "" : ", ", check.detail.c_str());
    ok = ok && check.pass;
  }
  return ok ? 0 : kExitNumeric;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Leakage removal unit simulator"};
  app.require_subcommand(1);
  Common sim_opts, rate_opts, param_opts, an_opts;
  bool master = false;
  std::uint64_t verify_seed = 1;

  auto* sim = app.add_subcommand("simulate", "trajectory ensemble (or dense master equation) time series");
  add_common(sim, sim_opts);
  sim->add_flag("--master", master, "dense Lindblad integration instead of trajectories");
  auto* rate = app.add_subcommand("rate-sweep", "final leakage versus reset rate");
  add_common(rate, rate_opts);
  auto* param = app.add_subcommand("param-sweep", "fitted T_star, T1, T2 versus W, J or L");
  add_common(param, param_opts);
  auto* ana = app.add_subcommand("analytics", "closed-form rates and times for a configuration");
  add_common(ana, an_opts);
  auto* ver = app.add_subcommand("verify", "closed forms and Krylov against independent numerics");
  ver->add_option("--seed", verify_seed, "seed for the random samples");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitConfig;
  }

  try {
    if (*sim) return simulate(sim_opts, master);
    if (*rate) return rate_sweep(rate_opts);
    if (*param) return param_sweep(param_opts);
    if (*ana) return analytics_cmd(an_opts);
    if (*ver) return verify(verify_seed);
  } catch (const lru::FitError& e) {
    std::cerr << "fit error: " << e.what() << '\n';
    return kExitFit;
  } catch (const lru::ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const lru::NumericError& e) {
    std::cerr << "numeric error: " << e.what() << '\n';
    return kExitNumeric;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
