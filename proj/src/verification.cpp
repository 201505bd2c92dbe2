#include "lru/verification.hpp"

#include <cmath>
#include <sstream>

#include <unsupported/Eigen/MatrixFunctions>

#include "lru/analytics.hpp"
#include "lru/lattice.hpp"
#include "lru/propagator.hpp"
#include "lru/random.hpp"

namespace lru {

namespace {

OracleCheck finish(std::string name, double value, double tol, std::string detail = {}) {
  OracleCheck c;
  c.name = std::move(name);
  c.value = value;
  c.tolerance = tol;
  c.pass = std::isfinite(value) && value < tol;
  c.detail = std::move(detail);
  return c;
}

}  // namespace

OracleCheck check_two_site_populations(int samples, std::uint64_t seed, double tolerance) {
  Rng rng(seed);
  double worst = 0.0;
  for (int s = 0; s < samples; ++s) {
    const double j = 1.0;
    const double u = 100.0 * uniform01(rng);
    const double t = 20.0 * uniform01(rng);
    // basis |20>, |11>, |02> in the frame where |11> has zero energy
    Eigen::Matrix3cd h = Eigen::Matrix3cd::Zero();
    h(0, 0) = h(2, 2) = -u;
    h(0, 1) = h(1, 0) = h(1, 2) = h(2, 1) = std::sqrt(2.0) * j;
    const Eigen::Matrix3cd prop = (Complex(0.0, -t) * h).exp();
    const double r = 1.0 / std::sqrt(2.0);
    const Eigen::Vector3cd loc = prop.col(0);
    const Eigen::Vector3cd sym = r * (prop.col(0) + prop.col(2));
    const analytics::TwoSiteParams p{u, j, 0.0, 0.0};
    const auto a = analytics::two_site_populations(p, t, analytics::PairState::localized);
    const auto b = analytics::two_site_populations(p, t, analytics::PairState::symmetric);
    worst = std::max({worst, std::abs(a.p20 - std::norm(loc(0))), std::abs(a.p11 - std::norm(loc(1))),
                      std::abs(a.p02 - std::norm(loc(2))), std::abs(b.p20 - std::norm(sym(0))),
                      std::abs(b.p11 - std::norm(sym(1))), std::abs(b.p02 - std::norm(sym(2)))});
  }
  return finish("two_site_populations vs 3x3 exponential", worst, tolerance,
                std::to_string(samples) + " samples");
}

OracleCheck check_dissipation_norm(double tolerance) {
  const double jp = 1.0;
  double worst = 0.0;
  const double rates[] = {0.01, 0.1, 0.5, 1.0, std::sqrt(2.0), 1.9, 1.999, 2.0, 2.001, 2.1, 3.0, 10.0, 100.0};
  for (double g : rates) {
    Eigen::Matrix2cd h;
    h << jp, -jp, -jp, Complex(jp, -g);
    for (int k = 0; k <= 40; ++k) {
      const double t = 0.25 * k;
      const Eigen::Vector2cd psi = (Complex(0.0, -t) * h).exp().col(0);
      worst = std::max(worst, std::abs(psi.squaredNorm() - analytics::diss_norm_exact_L2(g, jp, t)));
    }
  }
  return finish("diss_norm_exact_L2 vs 2x2 non-Hermitian exponential", worst, tolerance);
}

OracleCheck check_krylov(int steps, std::uint64_t seed, double tolerance) {
  LatticeSpec spec;
  spec.length = 4;
  spec.mean_frequency = 150.0;
  spec.mean_anharmonicity = 50.0;
  spec.hopping = 1.0;
  spec.disorder_strength = 20.0;
  const DisorderRealization real = realize_disorder(spec, seed);
  const OperatorMatrix h = build_bose_hubbard(real, spec.mean_frequency);
  const Propagator exact(h, PropagationMethod::exact);
  Rng rng(mix64(seed));
  double worst = 0.0;
  const std::size_t dim = h.dimension();
  for (int trial = 0; trial < 3; ++trial) {
    StateVector psi(dim);
    for (std::size_t i = 0; i < dim; ++i) psi(i) = Complex(uniform01(rng) - 0.5, uniform01(rng) - 0.5);
    normalize(psi);
    StateVector a = psi, b = psi;
    const double dt = 0.37;
    for (int s = 0; s < steps; ++s) {
      a = krylov_expv(h.sparse(), a, dt);
      b = exact.propagate(b, dt);
      worst = std::max(worst, (a - b).norm());
    }
  }
  return finish("Krylov vs eigendecomposition, L=4", worst, tolerance,
                std::to_string(steps) + " steps x 3 states, dim " + std::to_string(dim));
}

OracleCheck check_threshold_root(double tolerance) {
  const auto b = analytics::disintegration_threshold_bisection();
  const auto n = analytics::disintegration_threshold_newton();
  std::ostringstream os;
  os.precision(12);
  os << "U/J = " << b.ratio;
  return finish("disintegration threshold bisection vs Newton", std::abs(b.ratio - n.ratio), tolerance, os.str());
}

OracleCheck check_rate_optima(int grid_points) {
  const double j = 1.0, u = 50.0;
  const double jp = 2.0 * j * j / u;
  const double lo = std::log(1e-4), hi = std::log(1e4);
  const double step = (hi - lo) / (grid_points - 1);
  auto argmax = [&](auto f) {
    double best = -1.0, where = 0.0;
    for (int i = 0; i < grid_points; ++i) {
      const double g = std::exp(lo + step * i);
      const double v = f(g);
      if (v > best) {
        best = v;
        where = g;
      }
    }
    return where;
  };
  const double found[] = {argmax([&](double g) { return analytics::fb_leakage_rate_low(g, jp); }),
                          argmax([&](double g) { return analytics::fb_leakage_rate_high(g, j, u); }),
                          argmax([&](double g) { return analytics::diss_rate_low(g, jp); }),
                          argmax([&](double g) { return analytics::diss_rate_high(g, j, u); })};
  const double expected[] = {2.0 * jp, u, std::sqrt(2.0) * jp, 2.0 * u};
  double worst = 0.0;
  for (int k = 0; k < 4; ++k) worst = std::max(worst, std::abs(std::log(found[k] / expected[k])));
  // within one grid cell in log space
  return finish("analytic rate optima on a log grid", worst, step * 1.0000001,
                "log-grid step " + std::to_string(step));
}

std::vector<OracleCheck> run_oracle_suite(std::uint64_t seed) {
  return {check_two_site_populations(1000, seed), check_dissipation_norm(), check_krylov(100, seed),
          check_threshold_root(), check_rate_optima()};
}

}  // namespace lru
