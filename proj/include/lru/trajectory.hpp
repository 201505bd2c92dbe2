#pragma once

#include <cstdint>
#include <vector>

#include "lru/channels.hpp"
#include "lru/lattice.hpp"
#include "lru/observables.hpp"

namespace lru {

/// How jumps of the continuous channels (dissipation, noise) are sampled.
///  waiting_time: draw r ~ U(0,1) and jump when the no-jump norm reaches r; the
///    no-jump evolution is exact between events.
///  first_order: per-step Bernoulli with p_k = dt ||L_k psi||^2.
enum class JumpMethod { waiting_time, first_order };

struct SimulationConfig {
  LatticeSpec lattice;
  ResetChannel channel;
  NoiseModel noise;
  CodingState initial_coding_state = CodingState::ket2;
  double t_max = 1.0;
  double dt = 0.01;
  int n_trajectories = 1;
  std::uint64_t master_seed = 0;
  int observable_stride = 1;

  /// Fresh disorder per trajectory; when false every trajectory uses realize_disorder(master_seed).
  bool disorder_per_trajectory = true;
  /// Fixed detunings omega_l - mean_frequency; overrides random disorder when non-empty.
  std::vector<double> site_detunings;
  JumpMethod jump_method = JumpMethod::waiting_time;
  int threads = 1;

  void validate() const;
  /// {0, stride dt, 2 stride dt, ...} capped at t_max, which is always the last point.
  std::vector<double> time_grid() const;
  /// Realization used by trajectory `index` (per the rules above).
  DisorderRealization realization(std::uint64_t index) const;
};

/// dt with dt * max(J, Gamma, W, U) <= 0.05 and dt <= 0.01 / Gamma.
double default_time_step(const LatticeSpec& spec, const ResetChannel& channel);

struct TrajectoryRecord {
  std::vector<ObservableSample> samples;  // one per time-grid point
  long long jumps = 0;
  long long measurements = 0;
};

struct EnsembleObservables {
  std::vector<double> time_grid;
  std::vector<double> leakage_total;
  std::vector<double> leakage_site1;
  std::vector<double> occupation_site1;
  std::vector<Complex> coherence_site1;      // mean of <0|rho_1|1>
  std::vector<double> coherence_modulus;     // mean of |<0|rho_1|1>| per trajectory
  std::vector<double> se_leakage_total;
  std::vector<double> se_leakage_site1;
  std::vector<double> se_occupation_site1;
  std::vector<double> se_coherence_modulus;
  int n_trajectories_used = 0;
  long long total_jumps = 0;
  long long total_measurements = 0;
};

/// One stochastic trajectory; deterministic in (master_seed, index).
TrajectoryRecord run_trajectory(const SimulationConfig& config, std::uint64_t index);

/// Mean and standard error over config.n_trajectories trajectories. Trajectories are
/// reduced in fixed blocks of consecutive indices, so the result does not depend on
/// config.threads.
EnsembleObservables run_ensemble(const SimulationConfig& config);

}  // namespace lru
