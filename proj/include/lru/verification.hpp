#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace lru {

struct OracleCheck {
  std::string name;
  double value = 0.0;      // measured error (or deviation)
  double tolerance = 0.0;
  bool pass = false;
  std::string detail;
};

/// Closed-form two-site populations against direct 3x3 exponentials of the
/// {|20>, |11>, |02>} block, over `samples` random (U/J, t); both initial states.
OracleCheck check_two_site_populations(int samples, std::uint64_t seed, double tolerance = 1e-10);

/// diss_norm_exact_L2 against the 2x2 non-Hermitian exponential, on a rate grid
/// spanning both sides of the exceptional point.
OracleCheck check_dissipation_norm(double tolerance = 1e-8);

/// Krylov against eigendecomposition propagation, L = 4 qutrits (dim 81), random
/// states, `steps` consecutive steps.
OracleCheck check_krylov(int steps, std::uint64_t seed, double tolerance = 1e-8);

/// Bisection and Newton roots of the disintegration threshold agree.
OracleCheck check_threshold_root(double tolerance = 1e-8);

/// Grid maxima of the four analytic rate laws sit at 2 J_prop, U, sqrt(2) J_prop, 2 U.
OracleCheck check_rate_optima(int grid_points = 4001);

std::vector<OracleCheck> run_oracle_suite(std::uint64_t seed);

}  // namespace lru
