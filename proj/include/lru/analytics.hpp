#pragma once

#include <complex>
#include <span>
#include <vector>

namespace lru::analytics {

// Every function is homogeneous in its rate arguments: pass angular frequencies in
// any consistent unit (units of J are the natural choice) and times in the inverse unit.

struct TwoSiteParams {
  double anharmonicity = 1.0;  // U
  double hopping = 0.0;        // J
  double detuning = 0.0;       // omega_1 - omega_2
  double rate = 0.0;           // Gamma
  void validate() const;
};

/// sqrt(U^2 + 16 J^2).
double disintegration_frequency(const TwoSiteParams& p);

enum class PairState { symmetric, localized };

struct PairPopulations {
  double p20 = 0.0;
  double p02 = 0.0;
  double p11 = 0.0;
};

/// Unitary two-site, two-excitation populations starting from |20> (localized) or
/// (|20> + |02>)/sqrt(2) (symmetric).
PairPopulations two_site_populations(const TwoSiteParams& p, double t, PairState initial);

struct ThresholdRoot {
  double ratio = 0.0;     // U / J
  double residual = 0.0;  // |f(ratio)|
  int iterations = 0;
};

/// f(x) = sin(x pi / (2 w)) - (8 - x^2) / (x w), w = sqrt(x^2 + 16), with x = U/J.
double disintegration_threshold_residual(double ratio);
ThresholdRoot disintegration_threshold_bisection(double lo = 1.0, double hi = 2.5);
ThresholdRoot disintegration_threshold_newton(double guess = 1.8);
/// Bisection refined by Newton; throws NumericError if the two disagree or fail.
ThresholdRoot disintegration_threshold();

/// 2 J_prop^2 Gamma / (4 J_prop^2 + Gamma^2); maximal at Gamma = 2 J_prop.
double fb_leakage_rate_low(double rate, double j_prop);
/// 4 J^2 Gamma / (Gamma^2 + U^2); maximal at Gamma = U.
double fb_leakage_rate_high(double rate, double hopping, double anharmonicity);

struct QubitTimes {
  double t1 = 0.0;
  double t2 = 0.0;
  bool bounded = true;  // false when the rate vanishes and both times are infinite
};

/// T1 = (Gamma^2 + dw^2) / (2 J^2 Gamma), T2 = 2 T1.
QubitTimes fb_qubit_times(double rate, double hopping, double detuning);

/// Norm of the two-site effective model with dissipation on site 2, starting on site 1.
/// Oscillating branch below the exceptional point Gamma = 2 J_prop, hyperbolic above,
/// and the confluent limit inside a relative guard band of 1e-6 around it.
double diss_norm_exact_L2(double rate, double j_prop, double t);

/// 2 J_prop^2 Gamma / (2 J_prop^2 + Gamma^2); maximal at sqrt(2) J_prop.
double diss_rate_low(double rate, double j_prop);
/// 8 J^2 Gamma / (4 U^2 + Gamma^2); maximal at 2 U.
double diss_rate_high(double rate, double hopping, double anharmonicity);

enum class RateRegime { low, high };

/// Multi-exponential norm decay for L sites. borders = false: the translation-invariant
/// sums valid for any L >= 2. borders = true: edge-localized forms, L in {2, 3} only.
double diss_norm_general_L(int length, double rate, double j_prop, double t, RateRegime regime,
                           bool borders);

/// Weights and rates (in units of Gamma or 2 J_prop^2 / Gamma) of the no-border sums.
struct ExponentialTerm {
  double weight;
  double rate;
};
std::vector<ExponentialTerm> diss_general_L_terms(int length, double rate, double j_prop,
                                                  RateRegime regime, bool borders);

/// tau1 = (4 dw^2 + Gamma^2) / (4 F J^2 Gamma), tau2 = 2 tau1,
/// F = prod_{n=2}^{L-1} J^2 / (omega_1 - omega_n)^2 over the intermediate detunings.
QubitTimes diss_qubit_times(double rate, double hopping, double detuning_first_last, int length,
                            std::span<const double> intermediate_detunings);

struct LiouvillianGap {
  std::complex<double> value;
  bool exact = false;           // Delta == 0 closed form
  bool outside_validity = false;  // perturbative branch with beta / Delta > 0.35
};

/// Slowest nonzero eigenvalue of the qubit Liouvillian with H = Delta sigma_z + beta sigma_x
/// and projective dephasing Gamma (sum_n P_n rho P_n - rho).
LiouvillianGap liouvillian_qubit_gap(double delta, double beta, double rate);

}  // namespace lru::analytics
