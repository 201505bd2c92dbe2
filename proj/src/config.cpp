#include "lru/config.hpp"

#include <cmath>
#include <fstream>

#include "lru/error.hpp"

namespace lru {

namespace {

using nlohmann::json;

double number(const json& obj, const char* key, double fallback) {
  if (!obj.contains(key)) return fallback;
  const json& v = obj.at(key);
  if (!v.is_number()) throw ConfigError(std::string("config key '") + key + "' must be a number");
  return v.get<double>();
}

bool has(const json& obj, const char* key) { return obj.is_object() && obj.contains(key); }

const json& section(const json& doc, const char* key) {
  static const json empty = json::object();
  if (!doc.contains(key)) return empty;
  const json& s = doc.at(key);
  if (!s.is_object()) throw ConfigError(std::string("config section '") + key + "' must be an object");
  return s;
}

void reject_unknown(const json& obj, std::initializer_list<const char*> allowed, const char* where) {
  for (auto it = obj.begin(); it != obj.end(); ++it) {
    bool ok = false;
    for (const char* k : allowed) ok = ok || it.key() == k;
    if (!ok) throw ConfigError(std::string("unknown key '") + it.key() + "' in " + where);
  }
}

std::vector<double> value_list(const json& sweep) {
  if (sweep.contains("values")) {
    if (!sweep.at("values").is_array()) throw ConfigError("sweep.values must be an array");
    std::vector<double> v;
    for (const auto& x : sweep.at("values")) {
      if (!x.is_number()) throw ConfigError("sweep.values must contain numbers");
      v.push_back(x.get<double>());
    }
    return v;
  }
  const char* kind = sweep.contains("log_range") ? "log_range" : (sweep.contains("linear_range") ? "linear_range" : nullptr);
  if (!kind) throw ConfigError("sweep needs 'values', 'log_range' or 'linear_range'");
  const json& r = sweep.at(kind);
  if (!r.is_array() || r.size() != 3) throw ConfigError(std::string("sweep.") + kind + " must be [from, to, points]");
  const double from = r[0].get<double>(), to = r[1].get<double>();
  const int points = r[2].get<int>();
  if (points < 1) throw ConfigError("sweep range needs at least one point");
  if (std::string(kind) == "log_range" && !(from > 0.0 && to > 0.0)) throw ConfigError("log_range bounds must be > 0");
  std::vector<double> v(points);
  for (int i = 0; i < points; ++i) {
    const double s = points == 1 ? 0.0 : static_cast<double>(i) / (points - 1);
    v[i] = std::string(kind) == "log_range" ? std::exp(std::log(from) + s * (std::log(to) - std::log(from)))
                                            : from + s * (to - from);
  }
  return v;
}

}  // namespace

LoadedConfig parse_config(const json& doc) {
  if (!doc.is_object()) throw ConfigError("config root must be an object");
  reject_unknown(doc, {"units", "lattice", "channel", "noise", "initial", "time", "trajectories", "seed", "threads",
                       "disorder_per_trajectory", "site_detunings", "jump_method", "sweep"},
                 "config root");
  LoadedConfig out;
  out.source = doc;
  const std::string units = doc.value("units", std::string("MHz"));
  if (units == "MHz") {
    out.units = UnitSystem{true, kTwoPi};
  } else if (units == "dimensionless") {
    out.units = UnitSystem{false, 1.0};
  } else {
    throw ConfigError("units must be 'MHz' or 'dimensionless'");
  }
  const UnitSystem& u = out.units;
  SimulationConfig& c = out.simulation;

  try {
    const json& lat = section(doc, "lattice");
    reject_unknown(lat, {"length", "local_dim", "mean_frequency", "mean_anharmonicity", "hopping", "disorder"}, "lattice");
    c.lattice.length = lat.value("length", 2);
    c.lattice.local_dim = lat.value("local_dim", 3);
    c.lattice.mean_frequency = u.to_internal(number(lat, "mean_frequency", u.physical ? 7500.0 : 0.0));
    c.lattice.mean_anharmonicity = u.to_internal(number(lat, "mean_anharmonicity", u.physical ? 250.0 : 50.0));
    c.lattice.hopping = u.physical ? u.to_internal(number(lat, "hopping", 5.0)) : 1.0;
    if (!u.physical && has(lat, "hopping") && number(lat, "hopping", 1.0) != 1.0)
      throw ConfigError("dimensionless mode fixes lattice.hopping = 1");
    c.lattice.disorder_strength = u.to_internal(number(lat, "disorder", 0.0));
    const double j = c.lattice.hopping;

    const json& ch = section(doc, "channel");
    reject_unknown(ch, {"kind", "rate", "rate_over_J", "site"}, "channel");
    c.channel.kind = channel_kind_from_string(ch.value("kind", std::string("none")));
    if (has(ch, "rate") && has(ch, "rate_over_J")) throw ConfigError("give channel.rate or channel.rate_over_J, not both");
    c.channel.rate = has(ch, "rate_over_J") ? number(ch, "rate_over_J", 0.0) * j : number(ch, "rate", 0.0);
    c.channel.site = ch.value("site", 0);

    const json& nz = section(doc, "noise");
    reject_unknown(nz, {"T1", "Tphi", "temperature", "reference_hopping_MHz"}, "noise");
    const double t1 = number(nz, "T1", 0.0);
    const double tphi = number(nz, "Tphi", 0.0);
    if (t1 < 0.0 || tphi < 0.0) throw ConfigError("noise times must be >= 0 (0 disables)");
    c.noise.relaxation_rate = t1 > 0.0 ? 1.0 / t1 : 0.0;
    c.noise.dephasing_rate = tphi > 0.0 ? 1.0 / tphi : 0.0;
    c.noise.temperature = number(nz, "temperature", 0.0);
    if (!u.physical) {
      if (c.noise.temperature > 0.0 && !has(nz, "reference_hopping_MHz"))
        throw ConfigError("dimensionless mode with temperature needs noise.reference_hopping_MHz");
      // internal unit is J = 2 pi * reference MHz rad/us
      c.noise.kelvin_per_frequency_unit = 7.6382e-6 * kTwoPi * number(nz, "reference_hopping_MHz", 1.0);
    }

    c.initial_coding_state = coding_state_from_string(doc.value("initial", std::string("ket2")));

    const json& tm = section(doc, "time");
    reject_unknown(tm, {"t_max", "t_max_J", "dt", "observable_stride", "samples"}, "time");
    if (has(tm, "t_max") && has(tm, "t_max_J")) throw ConfigError("give time.t_max or time.t_max_J, not both");
    c.t_max = has(tm, "t_max_J") ? number(tm, "t_max_J", 0.0) / j : number(tm, "t_max", 1.0);
    c.dt = has(tm, "dt") ? number(tm, "dt", 0.0) : default_time_step(c.lattice, c.channel);
    if (has(tm, "samples") && has(tm, "observable_stride"))
      throw ConfigError("give time.samples or time.observable_stride, not both");
    if (has(tm, "samples")) {
      const int samples = tm.at("samples").get<int>();
      if (samples < 1) throw ConfigError("time.samples must be >= 1");
      c.observable_stride = std::max(1, static_cast<int>(std::round(c.t_max / (samples * c.dt))));
    } else {
      c.observable_stride = tm.value("observable_stride", 1);
    }

    c.n_trajectories = doc.value("trajectories", 1);
    c.master_seed = doc.value("seed", static_cast<std::uint64_t>(0));
    c.threads = doc.value("threads", 1);
    c.disorder_per_trajectory = doc.value("disorder_per_trajectory", true);
    if (has(doc, "site_detunings")) {
      for (const auto& x : doc.at("site_detunings")) c.site_detunings.push_back(u.to_internal(x.get<double>()));
    }
    const std::string jm = doc.value("jump_method", std::string("waiting_time"));
    if (jm == "waiting_time") c.jump_method = JumpMethod::waiting_time;
    else if (jm == "first_order") c.jump_method = JumpMethod::first_order;
    else throw ConfigError("jump_method must be 'waiting_time' or 'first_order'");
    c.validate();

    if (has(doc, "sweep")) {
      const json& sw = section(doc, "sweep");
      reject_unknown(sw, {"parameter", "values", "log_range", "linear_range", "values_over_J", "outputs",
                          "scale_rate_with_j_prop", "t_max", "fit_floor"},
                     "sweep");
      SweepSpec s;
      s.base = c;
      s.parameter = swept_parameter_from_string(sw.value("parameter", std::string("channel_rate")));
      std::vector<double> raw = value_list(sw);
      const bool over_j = sw.value("values_over_J", false);
      for (double v : raw) {
        switch (s.parameter) {
          case SweptParameter::channel_rate: s.values.push_back(over_j ? v * j : v); break;
          case SweptParameter::disorder_W:
          case SweptParameter::hopping_J: s.values.push_back(u.to_internal(v)); break;
          case SweptParameter::length_L: s.values.push_back(v); break;
        }
      }
      if (!u.physical && s.parameter == SweptParameter::hopping_J)
        throw ConfigError("hopping sweeps need physical units");
      if (sw.contains("outputs")) {
        for (const auto& o : sw.at("outputs")) s.outputs.push_back(derived_output_from_string(o.get<std::string>()));
      }
      s.scale_rate_with_j_prop = sw.value("scale_rate_with_j_prop", true);
      if (sw.contains("t_max")) {
        const json& tt = sw.at("t_max");
        reject_unknown(tt, {"leakage", "relaxation", "coherence"}, "sweep.t_max");
        s.t_max.leakage = number(tt, "leakage", 0.0);
        s.t_max.relaxation = number(tt, "relaxation", 0.0);
        s.t_max.coherence = number(tt, "coherence", 0.0);
      }
      s.fit_floor = number(sw, "fit_floor", 0.02);
      s.validate();
      out.sweep = std::move(s);
    }
  } catch (const json::exception& e) {
    throw ConfigError(std::string("malformed config: ") + e.what());
  }
  return out;
}

LoadedConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file '" + path + "'");
  json doc;
  try {
    doc = json::parse(in, nullptr, true, true);
  } catch (const json::exception& e) {
    throw ConfigError("cannot parse config file '" + path + "': " + e.what());
  }
  return parse_config(doc);
}

json describe(const SimulationConfig& c) {
  json j;
  j["lattice"] = {{"length", c.lattice.length},
                  {"local_dim", c.lattice.local_dim},
                  {"mean_frequency", c.lattice.mean_frequency},
                  {"mean_anharmonicity", c.lattice.mean_anharmonicity},
                  {"hopping", c.lattice.hopping},
                  {"disorder_strength", c.lattice.disorder_strength}};
  j["channel"] = {{"kind", to_string(c.channel.kind)}, {"rate", c.channel.rate}, {"site", c.channel.resolved_site(c.lattice.length)}};
  j["noise"] = {{"relaxation_rate", c.noise.relaxation_rate},
                {"dephasing_rate", c.noise.dephasing_rate},
                {"temperature", c.noise.temperature},
                {"kelvin_per_frequency_unit", c.noise.kelvin_per_frequency_unit}};
  j["initial"] = to_string(c.initial_coding_state);
  j["t_max"] = c.t_max;
  j["dt"] = c.dt;
  j["observable_stride"] = c.observable_stride;
  j["trajectories"] = c.n_trajectories;
  j["seed"] = c.master_seed;
  j["disorder_per_trajectory"] = c.disorder_per_trajectory;
  j["site_detunings"] = c.site_detunings;
  j["jump_method"] = c.jump_method == JumpMethod::waiting_time ? "waiting_time" : "first_order";
  return j;
}

}  // namespace lru
