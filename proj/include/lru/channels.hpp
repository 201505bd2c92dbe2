#pragma once

#include <array>
#include <functional>
#include <string>
#include <vector>

#include "lru/lattice.hpp"
#include "lru/propagator.hpp"
#include "lru/random.hpp"

namespace lru {

enum class ChannelKind { none, periodic_feedback, random_feedback, dissipation };

const char* to_string(ChannelKind kind);
ChannelKind channel_kind_from_string(const std::string& name);

/// Reset element attached to one site of the array (default: the last site).
struct ResetChannel {
  ChannelKind kind = ChannelKind::none;
  double rate = 0.0;
  int site = 0;  // 0 means "last site"

  int resolved_site(int length) const { return site == 0 ? length : site; }
  void validate(int length) const;
  bool is_feedback() const {
    return kind == ChannelKind::periodic_feedback || kind == ChannelKind::random_feedback;
  }
  bool active() const { return kind != ChannelKind::none && rate > 0.0; }
};

/// Background decoherence. Rates are 1/T1 and 1/T_phi of a single transmon.
struct NoiseModel {
  double relaxation_rate = 0.0;
  double dephasing_rate = 0.0;
  double temperature = 0.0;  // kelvin
  // hbar/k_B expressed in kelvin per internal frequency unit; the default is for rad/us.
  double kelvin_per_frequency_unit = 7.6382e-6;

  void validate() const;
  bool has_jumps() const { return relaxation_rate > 0.0 || dephasing_rate > 0.0; }
};

/// Lazy generator of feedback event times; next() returns +inf once exhausted.
class FeedbackSchedule {
 public:
  FeedbackSchedule(const ResetChannel& channel, double t_max, double dt, Rng& rng);
  double next();
  /// Spacing of the periodic schedule (0 for random schedules).
  double period() const { return periodic_ ? period_ : 0.0; }

 private:
  Rng* rng_;
  bool periodic_ = false;
  bool continuous_ = false;
  double t_max_;
  double rate_;
  double dt_;
  double period_ = 0.0;
  double t0_ = 0.0;
  double log_q_ = 0.0;
  long long k_ = 0;
  long long steps_ = 0;
  double t_last_ = 0.0;
  bool done_ = false;
};

/// Feedback event times in [0, t_max].
/// periodic: t0 + k / rate with t0 ~ U[0, 1/rate).
/// random: per-step Bernoulli trials with p = rate * dt on the grid k * dt, sampled
/// by geometric skips; dt = 0 gives the continuous-time Poisson process.
std::vector<double> measurement_times(const ResetChannel& channel, double t_max, double dt, Rng& rng);

/// Projective number measurement of one site followed by reset to |0>.
/// Precomputes the occupation table so repeated application is cheap.
class FeedbackMeasurement {
 public:
  FeedbackMeasurement(int length, int local_dim, int site);

  /// Samples a Born outcome, projects, maps |n> -> |0> on the site, normalizes.
  /// Outcomes with probability below 1e-15 are never selected.
  int apply(StateVector& psi, Rng& rng) const;
  /// Born probabilities of the site occupation (psi need not be normalized).
  std::vector<double> probabilities(const StateVector& psi) const;

 private:
  int local_dim_;
  std::size_t stride_;
  std::vector<unsigned char> occupation_;
};

struct MeasurementOutcome {
  StateVector state;
  int outcome;
};

MeasurementOutcome apply_feedback_measurement(const StateVector& psi, const LatticeSpec& spec,
                                              int site, Rng& rng);

/// sqrt(gamma) a_l and sqrt(2 kappa) n_l for every site; zero-rate families are omitted.
std::vector<OperatorMatrix> noise_jump_operators(const NoiseModel& model, const LatticeSpec& spec);

/// sqrt(rate) a_site.
OperatorMatrix dissipation_jump_operator(const LatticeSpec& spec, int site, double rate);

/// H - (i/2) sum_k L_k^dag L_k.
OperatorMatrix add_jump_damping(const OperatorMatrix& h, const std::vector<OperatorMatrix>& jumps);

/// One first-order trajectory step: jump k with probability dt ||L_k psi||^2,
/// otherwise `no_jump` (evolution under the effective Hamiltonian over dt) and
/// renormalization. Returns the jump index or -1. Throws NumericError when the
/// total jump probability reaches 1.
int dissipation_jump_step(StateVector& psi, const std::vector<OperatorMatrix>& jumps, double dt,
                          const std::function<void(StateVector&)>& no_jump, Rng& rng);

/// Boltzmann weights of |0>,|1>,|2> for a site with the given frequency and
/// anharmonicity at J = 0, renormalized over the three levels.
std::array<double, 3> thermal_weights(double omega, double anharmonicity, const NoiseModel& model);

enum class CodingState { ket0, ket1, ket2, plus };

const char* to_string(CodingState s);
CodingState coding_state_from_string(const std::string& name);
Vector coding_vector(CodingState s, int local_dim);

/// coding_state (site 1) tensored with Fock states of sites 2..L drawn from thermal_weights.
StateVector sample_thermal_initial(const DisorderRealization& real, const NoiseModel& model,
                                   const Vector& coding_state, Rng& rng);

}  // namespace lru
