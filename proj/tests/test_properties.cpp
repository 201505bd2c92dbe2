#include "doctest.h"

#include <algorithm>

#include "helpers.hpp"
#include "lru/analytics.hpp"
#include "lru/experiments.hpp"
#include "lru/propagator.hpp"
#include "lru/trajectory.hpp"

using namespace lru;

namespace {

// Least-squares fit of a + b cos(w t) + c sin(w t); returns the residual sum of squares.
double harmonic_residual(const std::vector<double>& t, const std::vector<double>& y, double w) {
  Eigen::MatrixXd a(t.size(), 3);
  Eigen::VectorXd b(t.size());
  for (std::size_t i = 0; i < t.size(); ++i) {
    a(i, 0) = 1.0;
    a(i, 1) = std::cos(w * t[i]);
    a(i, 2) = std::sin(w * t[i]);
    b(i) = y[i];
  }
  const Eigen::VectorXd x = a.colPivHouseholderQr().solve(b);
  return (a * x - b).squaredNorm();
}

double fitted_frequency(const std::vector<double>& t, const std::vector<double>& y, double lo, double hi) {
  double best = lo, best_r = 1e300;
  for (int k = 0; k <= 400; ++k) {
    const double w = lo + (hi - lo) * k / 400.0;
    const double r = harmonic_residual(t, y, w);
    if (r < best_r) best_r = r, best = w;
  }
  const double step = (hi - lo) / 400.0;
  double a = best - step, b = best + step;
  const double g = (std::sqrt(5.0) - 1.0) / 2.0;
  for (int it = 0; it < 80; ++it) {
    const double c = b - g * (b - a), d = a + g * (b - a);
    if (harmonic_residual(t, y, c) < harmonic_residual(t, y, d)) b = d;
    else a = c;
  }
  return 0.5 * (a + b);
}

}  // namespace

TEST_CASE("pair hopping frequency of the full model at U/J = 250") {
  const LatticeSpec spec = test::dimensionless(2, 250.0);
  const DisorderRealization real = realize_disorder(spec, 0);
  const OperatorMatrix h = build_bose_hubbard(real);
  const SectorPropagator prop(h.dense(), excitation_sectors(spec), true);
  const std::vector<int> occ{2, 0};
  StateVector psi = basis_state(spec, occ);
  const std::size_t i20 = 2 * 3;
  std::vector<double> t, p20;
  const double dt = 0.5;
  const auto step = prop.fixed_step(dt);
  for (int k = 0; k <= 2000; ++k) {
    t.push_back(k * dt);
    p20.push_back(std::norm(psi(i20)));
    prop.apply(step, psi);
  }
  const double jp = effective_hopping(1.0, 250.0);
  const double w = fitted_frequency(t, p20, 1.0 * jp, 3.0 * jp);
  CHECK(std::abs(w / (2.0 * jp) - 1.0) < 0.02);
}

TEST_CASE("Zeno regime: very fast feedback freezes leakage") {
  SimulationConfig c;
  c.lattice = test::dimensionless(2, 50.0);
  c.t_max = 200.0;
  c.dt = 0.01;
  c.observable_stride = 20000;
  c.n_trajectories = 40;
  c.master_seed = 17;
  const double jp = effective_hopping(1.0, 50.0);
  c.channel = {ChannelKind::periodic_feedback, 2.0 * jp, 0};
  const double optimal = run_ensemble(c).leakage_total.back();
  c.channel.rate = 1e3;
  c.n_trajectories = 10;
  const double zeno = run_ensemble(c).leakage_total.back();
  CHECK(zeno > optimal);
  CHECK(zeno > 0.2);
}

TEST_CASE("longer arrays protect the qubit longer") {
  SweepSpec s;
  s.base.lattice = test::dimensionless(2, 50.0, 20.0);
  s.base.channel = {ChannelKind::periodic_feedback, 2.0, 0};
  s.base.dt = 0.01;
  s.base.observable_stride = 500;
  s.base.t_max = 5000.0;
  s.base.n_trajectories = 100;
  s.base.master_seed = 23;
  s.parameter = SweptParameter::length_L;
  s.values = {2, 3};
  s.outputs = {DerivedOutput::fitted_T1, DerivedOutput::fitted_T2};
  const auto r = run_parameter_sweep(s);
  REQUIRE(r.points.size() == 2u);
  CHECK(r.points[0].t1.converged);
  CHECK(r.points[1].t1.converged);
  CHECK(r.points[1].t1.decay_time > r.points[0].t1.decay_time);
  CHECK(r.points[1].t2.decay_time > r.points[0].t2.decay_time);
}
