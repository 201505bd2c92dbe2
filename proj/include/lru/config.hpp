#pragma once

#include <optional>
#include <string>

#include "json.hpp"
#include "lru/experiments.hpp"
#include "lru/trajectory.hpp"

namespace lru {

/// Physical mode: frequencies in MHz (converted with 2 pi to rad/us), times in us.
/// Dimensionless mode: angular frequencies in units of J (J = 1), times in 1/J.
struct UnitSystem {
  bool physical = true;
  double frequency_scale = kTwoPi;  // internal angular frequency per configured unit

  const char* frequency_unit() const { return physical ? "MHz" : "J"; }
  const char* time_unit() const { return physical ? "us" : "1/J"; }
  double to_internal(double f) const { return f * frequency_scale; }
  double from_internal(double w) const { return w / frequency_scale; }
};

struct LoadedConfig {
  UnitSystem units;
  SimulationConfig simulation;
  std::optional<SweepSpec> sweep;
  nlohmann::json source;
};

/// Builds configurations from the JSON schema documented in README.md.
/// Throws ConfigError with the offending key on any malformed input.
LoadedConfig parse_config(const nlohmann::json& doc);
LoadedConfig load_config(const std::string& path);

/// Resolved configuration (internal units) for metadata sidecars.
nlohmann::json describe(const SimulationConfig& config);

}  // namespace lru
