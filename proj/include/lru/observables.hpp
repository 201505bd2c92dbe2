#pragma once

#include <limits>
#include <span>
#include <vector>

#include "lru/lattice.hpp"
#include "lru/propagator.hpp"

namespace lru {

enum class SiteSelection { all, first };

/// <sum_l n_l (n_l - 1) / 2> over the selected sites, divided by ||psi||^2.
double leakage_population(const StateVector& psi, const LatticeSpec& spec, SiteSelection sites);
double leakage_population(const DenseMatrix& rho, const LatticeSpec& spec, SiteSelection sites);

/// <n_site> (1-based site), divided by the norm.
double occupation(const StateVector& psi, const LatticeSpec& spec, int site);
double occupation(const DenseMatrix& rho, const LatticeSpec& spec, int site);

/// <0|rho_1|1> of the reduced state of site 1, divided by the norm.
Complex site1_coherence(const StateVector& psi, const LatticeSpec& spec);
Complex site1_coherence(const DenseMatrix& rho, const LatticeSpec& spec);

/// Everything the ensembles record at one time.
struct ObservableSample {
  double leakage_total = 0.0;
  double leakage_site1 = 0.0;
  double occupation_site1 = 0.0;
  Complex coherence_site1 = 0.0;
};

/// Precomputed per-index weights so sampling a state is a single pass.
class ObservableEvaluator {
 public:
  explicit ObservableEvaluator(const LatticeSpec& spec);
  ObservableSample evaluate(const StateVector& psi) const;
  ObservableSample evaluate(const DenseMatrix& rho) const;

 private:
  std::size_t dim_;
  std::size_t block_;  // d^(L-1): stride of site 1
  std::vector<double> leak_total_;
  std::vector<double> leak_site1_;
  std::vector<double> n_site1_;
};

/// 2 |c(t)|: the oscillation envelope of <sigma_x> = 2 Re <0|rho|1>.
std::vector<double> coherence_envelope(std::span<const Complex> coherence);

struct FitResult {
  double decay_time = 0.0;
  double amplitude = 0.0;
  double t_start = 0.0;
  double t_end = 0.0;
  double rms_residual = 0.0;
  double decay_time_se = 0.0;  // from the residual variance, ignoring correlations in time
  int points = 0;
  bool converged = false;
};

/// Least-squares fit of A exp(-t / tau) on samples with t_start <= t <= t_end.
/// Linear regression on ln y when every sample exceeds 1e-6, otherwise a damped
/// Gauss-Newton fit. Fewer than 10 points, non-finite data, or a non-decaying
/// result leave converged = false. rms_residual is always in the units of y.
FitResult fit_exponential(std::span<const double> t, std::span<const double> y, double t_start,
                          double t_end = std::numeric_limits<double>::infinity());

/// pi / (2 J_prop) = pi U / (4 J^2).
double propagation_time(double hopping, double anharmonicity);

/// Index of the first strict interior local minimum of y, or -1.
int first_local_minimum(std::span<const double> y);

/// Index of the first local minimum whose topographic prominence is at least
/// `prominence`, or -1. Walking outwards from the minimum until a lower value (or the
/// end) is met, the smaller of the two highest points reached sets the prominence.
int first_prominent_minimum(std::span<const double> y, double prominence);

}  // namespace lru
