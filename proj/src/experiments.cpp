#include "lru/experiments.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <limits>
#include <sstream>

#include "lru/analytics.hpp"
#include "lru/error.hpp"

#ifndef LRU_VERSION
#define LRU_VERSION "unknown"
#endif

namespace lru {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

bool requested(const SweepSpec& spec, DerivedOutput o) {
  return spec.outputs.empty() || std::find(spec.outputs.begin(), spec.outputs.end(), o) != spec.outputs.end();
}

double j_prop_of(const LatticeSpec& l) { return effective_hopping(l.hopping, l.mean_anharmonicity); }

std::string format_number(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.12g", v);
  return buf;
}

double rounded(double v) { return std::isfinite(v) ? std::strtod(format_number(v).c_str(), nullptr) : v; }

}  // namespace

const char* to_string(SweptParameter p) {
  switch (p) {
    case SweptParameter::channel_rate: return "channel_rate";
    case SweptParameter::disorder_W: return "disorder_W";
    case SweptParameter::hopping_J: return "hopping_J";
    case SweptParameter::length_L: return "length_L";
  }
  return "?";
}

SweptParameter swept_parameter_from_string(const std::string& name) {
  for (auto p : {SweptParameter::channel_rate, SweptParameter::disorder_W, SweptParameter::hopping_J,
                 SweptParameter::length_L})
    if (name == to_string(p)) return p;
  throw ConfigError("unknown swept parameter '" + name + "'");
}

const char* to_string(DerivedOutput o) {
  switch (o) {
    case DerivedOutput::final_leakage: return "final_leakage";
    case DerivedOutput::fitted_T_star: return "fitted_T_star";
    case DerivedOutput::fitted_T1: return "fitted_T1";
    case DerivedOutput::fitted_T2: return "fitted_T2";
    case DerivedOutput::T_prop: return "T_prop";
  }
  return "?";
}

DerivedOutput derived_output_from_string(const std::string& name) {
  for (auto o : {DerivedOutput::final_leakage, DerivedOutput::fitted_T_star, DerivedOutput::fitted_T1,
                 DerivedOutput::fitted_T2, DerivedOutput::T_prop})
    if (name == to_string(o)) return o;
  throw ConfigError("unknown derived output '" + name + "'");
}

void SweepSpec::validate() const {
  base.validate();
  if (values.empty()) throw ConfigError("sweep needs at least one value");
  const bool up = values.size() < 2 || values[1] > values[0];
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (!std::isfinite(values[i])) throw ConfigError("sweep values must be finite");
    if (i > 0 && (up ? !(values[i] > values[i - 1]) : !(values[i] < values[i - 1])))
      throw ConfigError("sweep values must be strictly monotone");
  }
  switch (parameter) {
    case SweptParameter::channel_rate:
      if (!base.channel.is_feedback() && base.channel.kind != ChannelKind::dissipation)
        throw ConfigError("rate sweeps need a reset channel");
      for (double v : values)
        if (!(v > 0.0)) throw ConfigError("swept rates must be > 0");
      break;
    case SweptParameter::disorder_W:
      for (double v : values)
        if (v < 0.0) throw ConfigError("swept disorder must be >= 0");
      break;
    case SweptParameter::hopping_J:
      for (double v : values)
        if (!(v > 0.0)) throw ConfigError("swept hopping must be > 0");
      break;
    case SweptParameter::length_L:
      for (double v : values)
        if (v != std::round(v) || v < 1.0) throw ConfigError("swept lengths must be positive integers");
      break;
  }
  if (!(fit_floor > 0.0 && fit_floor < 1.0)) throw ConfigError("fit_floor must lie in (0, 1)");
  if (t_max.leakage < 0.0 || t_max.relaxation < 0.0 || t_max.coherence < 0.0)
    throw ConfigError("protocol final times must be >= 0");
}

std::vector<double> median3(std::span<const double> y) {
  std::vector<double> out(y.begin(), y.end());
  for (std::size_t i = 1; i + 1 < y.size(); ++i) {
    double a = y[i - 1], b = y[i], c = y[i + 1];
    out[i] = std::max(std::min(a, b), std::min(std::max(a, b), c));
  }
  return out;
}

std::vector<int> find_local_minima(std::span<const double> y) {
  const std::vector<double> s = median3(y);
  std::vector<int> minima;
  std::size_t i = 1;
  while (i + 1 < s.size()) {
    if (s[i] < s[i - 1]) {
      std::size_t j = i;
      while (j + 1 < s.size() && s[j + 1] == s[i]) ++j;
      if (j + 1 < s.size() && s[j + 1] > s[i]) minima.push_back(static_cast<int>(i));
      i = j + 1;
    } else {
      ++i;
    }
  }
  return minima;
}

SimulationConfig sweep_point_config(const SweepSpec& spec, double value) {
  SimulationConfig c = spec.base;
  const double grid_step = spec.base.dt * spec.base.observable_stride;
  switch (spec.parameter) {
    case SweptParameter::channel_rate:
      c.channel.rate = value;
      break;
    case SweptParameter::disorder_W:
      c.lattice.disorder_strength = value;
      break;
    case SweptParameter::hopping_J: {
      const double old_jp = j_prop_of(spec.base.lattice);
      c.lattice.hopping = value;
      if (spec.scale_rate_with_j_prop && c.channel.active() && old_jp > 0.0)
        c.channel.rate = spec.base.channel.rate * j_prop_of(c.lattice) / old_jp;
      break;
    }
    case SweptParameter::length_L:
      c.lattice.length = static_cast<int>(std::lround(value));
      if (!c.site_detunings.empty()) throw ConfigError("length sweeps cannot use fixed site_detunings");
      break;
  }
  c.dt = std::min(spec.base.dt, default_time_step(c.lattice, c.channel));
  c.observable_stride = std::max(1, static_cast<int>(std::lround(grid_step / c.dt)));
  c.validate();
  return c;
}

RateSweepResult run_rate_sweep(const SweepSpec& spec) {
  if (spec.parameter != SweptParameter::channel_rate) throw ConfigError("rate sweep needs parameter channel_rate");
  spec.validate();
  RateSweepResult out;
  const double j = spec.base.lattice.hopping;
  for (double rate : spec.values) {
    SimulationConfig c = sweep_point_config(spec, rate);
    const EnsembleObservables e = run_ensemble(c);
    out.rates.push_back(rate);
    out.final_leakage.push_back(e.leakage_total.back());
    out.final_leakage_se.push_back(e.se_leakage_total.back());
  }
  out.minima = find_local_minima(out.final_leakage);
  const std::vector<double> smooth = median3(out.final_leakage);
  out.table.columns = {"rate_over_J", "rate", "final_leakage", "final_leakage_se", "smoothed"};
  for (std::size_t i = 0; i < out.rates.size(); ++i)
    out.table.rows.push_back(
        {out.rates[i] / j, out.rates[i], out.final_leakage[i], out.final_leakage_se[i], smooth[i]});
  return out;
}

double fit_window_end(std::span<const double> t, std::span<const double> y, std::span<const double> se,
                      double t_start, double floor) {
  if (t.size() != y.size() || t.size() != se.size()) throw ConfigError("fit window needs equally long series");
  std::size_t i0 = 0;
  while (i0 < t.size() && t[i0] < t_start) ++i0;
  if (i0 >= t.size()) return t.empty() ? t_start : t.back();
  const double y0 = y[i0];
  for (std::size_t i = i0 + 1; i < t.size(); ++i)
    if (y[i] < floor * y0 || y[i] < 3.0 * se[i]) return t[i - 1];
  return t.back();
}

ProtocolFit run_leakage_protocol(SimulationConfig cfg, double floor) {
  cfg.initial_coding_state = CodingState::ket2;
  ProtocolFit out;
  out.ensemble = run_ensemble(cfg);
  const auto& e = out.ensemble;
  const double start =
      (cfg.lattice.length - 1) * propagation_time(cfg.lattice.hopping, cfg.lattice.mean_anharmonicity);
  const double end = fit_window_end(e.time_grid, e.leakage_total, e.se_leakage_total, start, floor);
  out.fit = fit_exponential(e.time_grid, e.leakage_total, start, end);
  return out;
}

ProtocolFit run_relaxation_protocol(SimulationConfig cfg, double floor) {
  cfg.initial_coding_state = CodingState::ket1;
  ProtocolFit out;
  out.ensemble = run_ensemble(cfg);
  const auto& e = out.ensemble;
  const double end = fit_window_end(e.time_grid, e.occupation_site1, e.se_occupation_site1, 0.0, floor);
  out.fit = fit_exponential(e.time_grid, e.occupation_site1, 0.0, end);
  return out;
}

ProtocolFit run_coherence_protocol(SimulationConfig cfg, double floor) {
  cfg.initial_coding_state = CodingState::plus;
  ProtocolFit out;
  out.ensemble = run_ensemble(cfg);
  const auto& e = out.ensemble;
  std::vector<double> env(e.coherence_modulus.size()), se(env.size());
  for (std::size_t i = 0; i < env.size(); ++i) {
    env[i] = 2.0 * e.coherence_modulus[i];
    se[i] = 2.0 * e.se_coherence_modulus[i];
  }
  const double end = fit_window_end(e.time_grid, env, se, 0.0, floor);
  out.fit = fit_exponential(e.time_grid, env, 0.0, end);
  return out;
}

namespace {

double default_leakage_time(const SimulationConfig& c) {
  const double jp = j_prop_of(c.lattice);
  const double t_prop = propagation_time(c.lattice.hopping, c.lattice.mean_anharmonicity);
  double rate = 0.0;
  if (c.channel.is_feedback())
    rate = analytics::fb_leakage_rate_low(c.channel.rate, jp);
  else if (c.channel.kind == ChannelKind::dissipation)
    rate = analytics::diss_rate_low(c.channel.rate, jp);
  if (!(rate > 0.0)) return c.t_max;
  return std::max(10.0 / rate, 5.0 * (c.lattice.length - 1) * t_prop);
}

double default_qubit_time(const SimulationConfig& c, bool coherence) {
  const NoiseModel& n = c.noise;
  if (n.relaxation_rate <= 0.0 && n.dephasing_rate <= 0.0) return c.t_max;
  const double g2 = 0.5 * n.relaxation_rate + n.dephasing_rate;
  const double t = coherence ? 1.0 / g2 : (n.relaxation_rate > 0.0 ? 1.0 / n.relaxation_rate : c.t_max / 2.0);
  return 2.0 * t;
}

void add_fit_columns(std::vector<double>& row, const FitResult& f) {
  row.push_back(f.converged ? f.decay_time : kNaN);
  row.push_back(f.converged ? f.decay_time_se : kNaN);
  row.push_back(f.converged ? 1.0 : 0.0);
}

}  // namespace

ParameterSweepResult run_parameter_sweep(const SweepSpec& spec) {
  if (spec.parameter == SweptParameter::channel_rate)
    throw ConfigError("parameter sweep needs disorder_W, hopping_J or length_L");
  spec.validate();
  ParameterSweepResult out;
  auto& cols = out.table.columns;
  cols.push_back(to_string(spec.parameter));
  const bool want_prop = requested(spec, DerivedOutput::T_prop);
  const bool want_final = requested(spec, DerivedOutput::final_leakage);
  const bool want_star = requested(spec, DerivedOutput::fitted_T_star);
  const bool want_t1 = requested(spec, DerivedOutput::fitted_T1);
  const bool want_t2 = requested(spec, DerivedOutput::fitted_T2);
  if (want_prop) cols.push_back("T_prop");
  if (want_final) cols.insert(cols.end(), {"final_leakage", "final_leakage_se"});
  if (want_star) cols.insert(cols.end(), {"T_star", "T_star_se", "T_star_converged"});
  if (want_t1) cols.insert(cols.end(), {"T1", "T1_se", "T1_converged"});
  if (want_t2) cols.insert(cols.end(), {"T2", "T2_se", "T2_converged"});

  for (double value : spec.values) {
    const SimulationConfig c = sweep_point_config(spec, value);
    ParameterPoint p;
    p.value = value;
    p.t_prop = propagation_time(c.lattice.hopping, c.lattice.mean_anharmonicity);
    std::vector<double> row{value};
    if (want_prop) row.push_back(p.t_prop);
    if (want_final || want_star) {
      SimulationConfig lc = c;
      lc.t_max = spec.t_max.leakage > 0.0 ? spec.t_max.leakage : default_leakage_time(c);
      const ProtocolFit f = run_leakage_protocol(lc, spec.fit_floor);
      p.t_star = f.fit;
      if (want_final)
        row.insert(row.end(), {f.ensemble.leakage_total.back(), f.ensemble.se_leakage_total.back()});
      if (want_star) add_fit_columns(row, f.fit);
    }
    if (want_t1) {
      SimulationConfig rc = c;
      rc.t_max = spec.t_max.relaxation > 0.0 ? spec.t_max.relaxation : default_qubit_time(c, false);
      p.t1 = run_relaxation_protocol(rc, spec.fit_floor).fit;
      add_fit_columns(row, p.t1);
    }
    if (want_t2) {
      SimulationConfig cc = c;
      cc.t_max = spec.t_max.coherence > 0.0 ? spec.t_max.coherence : default_qubit_time(c, true);
      p.t2 = run_coherence_protocol(cc, spec.fit_floor).fit;
      add_fit_columns(row, p.t2);
    }
    out.points.push_back(p);
    out.table.rows.push_back(std::move(row));
  }
  return out;
}

OutputFormat output_format_from_string(const std::string& name) {
  if (name == "csv") return OutputFormat::csv;
  if (name == "json") return OutputFormat::json;
  throw ConfigError("unknown output format '" + name + "' (csv or json)");
}

std::string metadata_path(const std::string& path) { return path + ".meta.json"; }

namespace {

void write_file(const std::string& path, const std::string& content) {
  const std::string tmp = path + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw Error("cannot open '" + tmp + "' for writing");
    out << content;
    out.flush();
    if (!out) {
      std::error_code ec;
      std::filesystem::remove(tmp, ec);
      throw Error("write to '" + tmp + "' failed");
    }
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) {
    std::filesystem::remove(tmp, ec);
    throw Error("cannot move results into '" + path + "'");
  }
}

std::string timestamp() {
  const std::time_t now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

}  // namespace

std::string render_results(const ResultTable& table, OutputFormat format) {
  std::string body;
  if (format == OutputFormat::csv) {
    std::ostringstream os;
    for (std::size_t i = 0; i < table.columns.size(); ++i) os << (i ? "," : "") << table.columns[i];
    os << '\n';
    for (const auto& row : table.rows) {
      for (std::size_t i = 0; i < row.size(); ++i) os << (i ? "," : "") << format_number(row[i]);
      os << '\n';
    }
    body = os.str();
  } else {
    nlohmann::json j;
    j["columns"] = table.columns;
    j["rows"] = nlohmann::json::array();
    for (const auto& row : table.rows) {
      nlohmann::json r = nlohmann::json::array();
      for (double v : row) r.push_back(rounded(v));
      j["rows"].push_back(r);
    }
    body = j.dump(1) + "\n";
  }

  return body;
}

void emit_results(const ResultTable& table, OutputFormat format, const std::string& path,
                  const nlohmann::json& metadata) {
  if (table.columns.empty() || table.rows.empty()) throw ConfigError("refusing to write an empty result table");
  for (const auto& row : table.rows)
    if (row.size() != table.columns.size()) throw ConfigError("result row width does not match the header");

  const std::string body = render_results(table, format);
  nlohmann::json meta = metadata.is_object() ? metadata : nlohmann::json::object();
  meta["code_version"] = LRU_VERSION;
  meta["written_at"] = timestamp();
  meta["format"] = format == OutputFormat::csv ? "csv" : "json";
  write_file(path, body);
  write_file(metadata_path(path), meta.dump(2) + "\n");
}

ResultTable read_results(const std::string& path, OutputFormat format) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open '" + path + "'");
  ResultTable t;
  if (format == OutputFormat::csv) {
    std::string line;
    if (!std::getline(in, line)) throw Error("'" + path + "' is empty");
    std::stringstream hs(line);
    for (std::string cell; std::getline(hs, cell, ',');) t.columns.push_back(cell);
    while (std::getline(in, line)) {
      if (line.empty()) continue;
      std::vector<double> row;
      std::stringstream rs(line);
      for (std::string cell; std::getline(rs, cell, ',');) row.push_back(std::strtod(cell.c_str(), nullptr));
      t.rows.push_back(std::move(row));
    }
  } else {
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(in);
      t.columns = j.at("columns").get<std::vector<std::string>>();
      for (const auto& r : j.at("rows")) {
        std::vector<double> row;
        for (const auto& v : r) row.push_back(v.is_null() ? kNaN : v.get<double>());
        t.rows.push_back(std::move(row));
      }
    } catch (const nlohmann::json::exception& e) {
      throw Error("cannot parse '" + path + "': " + e.what());
    }
  }
  return t;
}

}  // namespace lru
