#pragma once

#include <span>
#include <string>
#include <vector>

#include "json.hpp"
#include "lru/observables.hpp"
#include "lru/trajectory.hpp"

namespace lru {

enum class SweptParameter { channel_rate, disorder_W, hopping_J, length_L };
enum class DerivedOutput { final_leakage, fitted_T_star, fitted_T1, fitted_T2, T_prop };

const char* to_string(SweptParameter p);
SweptParameter swept_parameter_from_string(const std::string& name);
const char* to_string(DerivedOutput o);
DerivedOutput derived_output_from_string(const std::string& name);

/// Per-protocol final times; zero selects the default rule (see run_parameter_sweep).
struct ProtocolTimes {
  double leakage = 0.0;
  double relaxation = 0.0;
  double coherence = 0.0;
};

struct SweepSpec {
  SimulationConfig base;
  SweptParameter parameter = SweptParameter::channel_rate;
  std::vector<double> values;  // internal units
  std::vector<DerivedOutput> outputs;
  /// Hopping sweeps keep Gamma / J_prop at its value in the base configuration.
  bool scale_rate_with_j_prop = true;
  ProtocolTimes t_max;
  /// Fits stop where the series falls below this fraction of its value at the window start.
  double fit_floor = 0.02;

  void validate() const;
};

struct ResultTable {
  std::vector<std::string> columns;
  std::vector<std::vector<double>> rows;
};

/// Strict interior minima of the 3-point running median of y (ends keep their values).
/// On a plateau the smallest index is reported.
std::vector<int> find_local_minima(std::span<const double> y);
std::vector<double> median3(std::span<const double> y);

struct RateSweepResult {
  ResultTable table;  // rate_over_J, rate, final_leakage, final_leakage_se, smoothed
  std::vector<double> rates;
  std::vector<double> final_leakage;
  std::vector<double> final_leakage_se;
  std::vector<int> minima;
};

/// One ensemble per channel rate, recording leakage_total at t_max.
RateSweepResult run_rate_sweep(const SweepSpec& spec);

/// Configuration of one sweep point (parameter applied, rate scaling, time step limits).
SimulationConfig sweep_point_config(const SweepSpec& spec, double value);

/// Window end for decay fits: first time after t_start where the series drops below
/// floor * series(t_start) or below 3 standard errors; t_max otherwise.
double fit_window_end(std::span<const double> t, std::span<const double> y, std::span<const double> se,
                      double t_start, double floor);

struct ProtocolFit {
  EnsembleObservables ensemble;
  FitResult fit;
};

/// Initial |2>, fit leakage_total from (L-1) T_prop.
ProtocolFit run_leakage_protocol(SimulationConfig cfg, double floor = 0.02);
/// Initial |1>, fit <n_1> from 0.
ProtocolFit run_relaxation_protocol(SimulationConfig cfg, double floor = 0.02);
/// Initial |+>, fit the trajectory-averaged envelope 2 |<0|rho_1|1>| from 0.
ProtocolFit run_coherence_protocol(SimulationConfig cfg, double floor = 0.02);

struct ParameterPoint {
  double value = 0.0;
  double t_prop = 0.0;
  FitResult t_star;
  FitResult t1;
  FitResult t2;
};

struct ParameterSweepResult {
  ResultTable table;
  std::vector<ParameterPoint> points;
};

/// Per value: the |2>, |1>, |+> protocols (as requested by spec.outputs) and their fits.
/// Default final times: leakage max(10 T_est, 5 (L-1) T_prop) with T_est from the analytic
/// low-rate law of the channel; relaxation/coherence 2 T1^q / 2 T2^q when noise is on,
/// otherwise the base t_max.
ParameterSweepResult run_parameter_sweep(const SweepSpec& spec);

enum class OutputFormat { csv, json };
OutputFormat output_format_from_string(const std::string& name);

/// CSV or JSON text of the table.
std::string render_results(const ResultTable& table, OutputFormat format);

/// Writes the table (12 significant digits, header first, rows in order) and a sidecar
/// `<path>.meta.json` with the metadata. Throws ConfigError for an empty table and
/// Error for I/O failures; nothing is written in either case.
void emit_results(const ResultTable& table, OutputFormat format, const std::string& path,
                  const nlohmann::json& metadata);
ResultTable read_results(const std::string& path, OutputFormat format);

/// Sidecar name for a results path.
std::string metadata_path(const std::string& path);

}  // namespace lru
