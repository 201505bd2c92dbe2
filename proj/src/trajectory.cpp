#include "lru/trajectory.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <limits>
#include <memory>
#include <mutex>
#include <string>
#include <thread>

#include "lru/error.hpp"
#include "lru/propagator.hpp"
#include "lru/random.hpp"

namespace lru {

namespace {

constexpr std::uint64_t kDisorderStream = 0xd1b54a32d192ed03ULL;
constexpr int kReductionBlock = 16;

// No-jump evolution under the (possibly non-Hermitian) effective Hamiltonian.
class NoJumpEvolver {
 public:
  NoJumpEvolver(const OperatorMatrix& heff, const LatticeSpec& spec) {
    if (heff.dimension() <= kExactDimensionThreshold) {
      sectors_ = std::make_unique<SectorPropagator>(heff.dense(), excitation_sectors(spec),
                                                    heff.hermitian());
    } else {
      sparse_ = heff.sparse();
    }
  }

  void cache_interval(double span) {
    if (!sectors_ || !(span > 0.0)) return;
    cached_ = sectors_->fixed_step(span);
    cached_span_ = span;
  }

  void evolve(StateVector& psi, double span, double t_ref) const {
    if (span <= 0.0) return;
    if (sectors_) {
      if (cached_span_ > 0.0 && std::abs(span - cached_span_) <= 1e-12 * (cached_span_ + t_ref))
        sectors_->apply(cached_, psi);
      else
        sectors_->propagate_in_place(psi, span);
    } else {
      psi = krylov_expv(sparse_, psi, span);
    }
  }

 private:
  std::unique_ptr<SectorPropagator> sectors_;
  SparseMatrix sparse_;
  SectorPropagator::FixedStep cached_;
  double cached_span_ = 0.0;
};

class TrajectoryRunner {
 public:
  TrajectoryRunner(const SimulationConfig& cfg, std::uint64_t index)
      : cfg_(cfg),
        spec_(cfg.lattice),
        rng_(trajectory_seed(cfg.master_seed, index)),
        real_(cfg.realization(index)),
        evaluator_(spec_),
        evolver_(make_heff(), spec_) {}

  TrajectoryRecord run() {
    TrajectoryRecord rec;
    const std::vector<double> grid = cfg_.time_grid();
    rec.samples.reserve(grid.size());
    StateVector psi =
        sample_thermal_initial(real_, cfg_.noise, coding_vector(cfg_.initial_coding_state, spec_.local_dim), rng_);

    const bool feedback = cfg_.channel.is_feedback() && cfg_.channel.rate > 0.0;
    const int site = cfg_.channel.resolved_site(spec_.length);
    std::unique_ptr<FeedbackSchedule> schedule;
    std::unique_ptr<FeedbackMeasurement> measurement;
    double next_fb = std::numeric_limits<double>::infinity();
    if (feedback) {
      schedule = std::make_unique<FeedbackSchedule>(cfg_.channel, cfg_.t_max, cfg_.dt, rng_);
      measurement = std::make_unique<FeedbackMeasurement>(spec_.length, spec_.local_dim, site);
      next_fb = schedule->next();
      if (schedule->period() > 0.0) evolver_.cache_interval(schedule->period());
    }
    threshold_ = jumps_.empty() ? 0.0 : uniform01_open_low(rng_);

    double t = 0.0;
    std::size_t gi = 0;
    while (gi < grid.size()) {
      const double target = std::min(grid[gi], next_fb);
      advance(psi, t, target, rec);
      t = target;
      if (target == grid[gi]) {
        rec.samples.push_back(evaluator_.evaluate(psi));
        ++gi;
      }
      if (target == next_fb) {
        renormalize(psi);
        measurement->apply(psi, rng_);
        ++rec.measurements;
        next_fb = schedule->next();
      }
    }
    return rec;
  }

 private:
  OperatorMatrix make_heff() {
    const OperatorMatrix h = build_bose_hubbard(real_, spec_.mean_frequency);
    jumps_ = noise_jump_operators(cfg_.noise, spec_);
    if (cfg_.channel.kind == ChannelKind::dissipation && cfg_.channel.rate > 0.0)
      jumps_.push_back(
          dissipation_jump_operator(spec_, cfg_.channel.resolved_site(spec_.length), cfg_.channel.rate));
    return add_jump_damping(h, jumps_);
  }

  // Keeps the waiting-time threshold consistent when the state is rescaled.
  void renormalize(StateVector& psi) {
    const double n2 = psi.squaredNorm();
    if (!(n2 > 0.0)) throw NumericError("trajectory state vanished");
    if (!jumps_.empty() && cfg_.jump_method == JumpMethod::waiting_time) threshold_ /= n2;
    psi /= std::sqrt(n2);
  }

  void jump(StateVector& psi) {
    std::vector<double> w(jumps_.size());
    double total = 0.0;
    for (std::size_t k = 0; k < jumps_.size(); ++k) {
      w[k] = (jumps_[k].sparse() * psi).squaredNorm();
      total += w[k];
    }
    if (!(total > 0.0)) throw NumericError("jump requested with zero jump rate");
    const double u = uniform01(rng_) * total;
    double acc = 0.0;
    std::size_t pick = jumps_.size() - 1;
    for (std::size_t k = 0; k < jumps_.size(); ++k) {
      acc += w[k];
      if (u < acc && w[k] > 0.0) {
        pick = k;
        break;
      }
    }
    psi = jumps_[pick].sparse() * psi;
    normalize(psi);
  }

  void advance(StateVector& psi, double t, double target, TrajectoryRecord& rec) {
    if (jumps_.empty()) {
      evolver_.evolve(psi, target - t, t);
      return;
    }
    if (cfg_.jump_method == JumpMethod::first_order) {
      while (t < target) {
        const bool last = target - t <= cfg_.dt * (1.0 + 1e-9);
        const double h = last ? target - t : cfg_.dt;
        const int k = dissipation_jump_step(
            psi, jumps_, h, [&](StateVector& s) { evolver_.evolve(s, h, t); }, rng_);
        if (k >= 0) ++rec.jumps;
        t = last ? target : t + h;
      }
      return;
    }
    while (t < target) {
      const double span = target - t;
      StateVector phi = psi;
      evolver_.evolve(phi, span, t);
      if (phi.squaredNorm() > threshold_) {
        psi = std::move(phi);
        return;
      }
      const double tau = crossing_time(psi, span, t);
      evolver_.evolve(psi, tau, t);
      jump(psi);
      ++rec.jumps;
      threshold_ = uniform01_open_low(rng_);
      t += tau;
    }
  }

  // Time tau in (0, span] where ||psi(tau)||^2 = threshold (Illinois false position on the
  // log norm, which is monotone because the anti-Hermitian part is negative semidefinite).
  double crossing_time(const StateVector& psi, double span, double t_ref) const {
    const double log_r = std::log(threshold_);
    auto g = [&](double tau) {
      StateVector x = psi;
      evolver_.evolve(x, tau, t_ref);
      const double n2 = x.squaredNorm();
      return n2 > 0.0 ? std::log(n2) - log_r : -std::numeric_limits<double>::infinity();
    };
    double a = 0.0, fa = std::log(psi.squaredNorm()) - log_r;
    double b = span, fb = g(span);
    if (!(fa > 0.0)) return 0.0;
    int side = 0;
    double c = b;
    for (int it = 0; it < 200; ++it) {
      c = std::isfinite(fb) ? (a * fb - b * fa) / (fb - fa) : 0.5 * (a + b);
      if (!(c > a && c < b)) c = 0.5 * (a + b);
      const double fc = g(c);
      if (std::abs(fc) < 1e-13 || (b - a) < 1e-15 * (span + t_ref)) break;
      if (fc > 0.0) {
        a = c;
        fa = fc;
        if (side == 1) fb *= 0.5;
        side = 1;
      } else {
        b = c;
        fb = fc;
        if (side == -1) fa *= 0.5;
        side = -1;
      }
    }
    return c;
  }

  const SimulationConfig& cfg_;
  const LatticeSpec& spec_;
  Rng rng_;
  DisorderRealization real_;
  ObservableEvaluator evaluator_;
  std::vector<OperatorMatrix> jumps_;
  NoJumpEvolver evolver_;
  double threshold_ = 0.0;
};

struct SeriesSums {
  std::vector<double> lt, lt2, l1, l12, n1, n12, cm, cm2, cre, cim;
  long long jumps = 0;
  long long measurements = 0;

  explicit SeriesSums(std::size_t n = 0)
      : lt(n), lt2(n), l1(n), l12(n), n1(n), n12(n), cm(n), cm2(n), cre(n), cim(n) {}

  void add(const TrajectoryRecord& r) {
    for (std::size_t i = 0; i < r.samples.size(); ++i) {
      const ObservableSample& s = r.samples[i];
      const double m = std::abs(s.coherence_site1);
      lt[i] += s.leakage_total;
      lt2[i] += s.leakage_total * s.leakage_total;
      l1[i] += s.leakage_site1;
      l12[i] += s.leakage_site1 * s.leakage_site1;
      n1[i] += s.occupation_site1;
      n12[i] += s.occupation_site1 * s.occupation_site1;
      cm[i] += m;
      cm2[i] += m * m;
      cre[i] += s.coherence_site1.real();
      cim[i] += s.coherence_site1.imag();
    }
    jumps += r.jumps;
    measurements += r.measurements;
  }

  void add(const SeriesSums& o) {
    auto acc = [](std::vector<double>& x, const std::vector<double>& y) {
      for (std::size_t i = 0; i < x.size(); ++i) x[i] += y[i];
    };
    acc(lt, o.lt); acc(lt2, o.lt2); acc(l1, o.l1); acc(l12, o.l12); acc(n1, o.n1);
    acc(n12, o.n12); acc(cm, o.cm); acc(cm2, o.cm2); acc(cre, o.cre); acc(cim, o.cim);
    jumps += o.jumps;
    measurements += o.measurements;
  }
};

SeriesSums pairwise_total(std::vector<SeriesSums>& parts, std::size_t lo, std::size_t hi) {
  if (hi - lo == 1) return parts[lo];
  const std::size_t mid = lo + (hi - lo) / 2;
  SeriesSums left = pairwise_total(parts, lo, mid);
  left.add(pairwise_total(parts, mid, hi));
  return left;
}

void mean_and_se(const std::vector<double>& sum, const std::vector<double>& sum2, int n,
                 std::vector<double>& mean, std::vector<double>& se) {
  mean.resize(sum.size());
  se.resize(sum.size());
  for (std::size_t i = 0; i < sum.size(); ++i) {
    mean[i] = sum[i] / n;
    if (n > 1) {
      const double var = std::max(0.0, (sum2[i] - sum[i] * mean[i]) / (n - 1));
      se[i] = std::sqrt(var / n);
    } else {
      se[i] = 0.0;
    }
  }
}

}  // namespace

void SimulationConfig::validate() const {
  lattice.validate();
  channel.validate(lattice.length);
  noise.validate();
  if (!(t_max > 0.0) || !std::isfinite(t_max)) throw ConfigError("t_max must be > 0");
  if (!(dt > 0.0)) throw ConfigError("dt must be > 0");
  if (n_trajectories < 1) throw ConfigError("n_trajectories must be >= 1");
  if (observable_stride < 1) throw ConfigError("observable_stride must be >= 1");
  if (threads < 1) throw ConfigError("threads must be >= 1");
  if (!site_detunings.empty() && site_detunings.size() != static_cast<std::size_t>(lattice.length))
    throw ConfigError("site_detunings needs one entry per site");
  if (t_max / (dt * observable_stride) > 1e8) throw ConfigError("observable grid too fine");
  lattice.dimension();
}

std::vector<double> SimulationConfig::time_grid() const {
  const double step = dt * observable_stride;
  const auto n = static_cast<long long>(std::floor(t_max / step * (1.0 + 1e-12)));
  std::vector<double> grid;
  grid.reserve(n + 2);
  for (long long k = 0; k <= n; ++k) grid.push_back(static_cast<double>(k) * step);
  if (std::abs(grid.back() - t_max) <= 1e-9 * step)
    grid.back() = t_max;
  else
    grid.push_back(t_max);
  return grid;
}

DisorderRealization SimulationConfig::realization(std::uint64_t index) const {
  if (!site_detunings.empty()) return realization_from_detunings(lattice, site_detunings);
  if (!disorder_per_trajectory) return realize_disorder(lattice, master_seed);
  return realize_disorder(lattice, mix64(trajectory_seed(master_seed, index) ^ kDisorderStream));
}

double default_time_step(const LatticeSpec& spec, const ResetChannel& channel) {
  const double rate = channel.active() ? channel.rate : 0.0;
  const double scale = std::max({spec.hopping, rate, spec.disorder_strength, spec.mean_anharmonicity});
  double dt = 0.05 / scale;
  if (rate > 0.0) dt = std::min(dt, 0.01 / rate);
  return dt;
}

TrajectoryRecord run_trajectory(const SimulationConfig& config, std::uint64_t index) {
  config.validate();
  try {
    TrajectoryRunner runner(config, index);
    return runner.run();
  } catch (const KrylovNonConvergence& e) {
    throw KrylovNonConvergence(std::string(e.what()) + " (trajectory " + std::to_string(index) + ")",
                               e.residual());
  } catch (const NumericError& e) {
    throw NumericError(std::string(e.what()) + " (trajectory " + std::to_string(index) + ")");
  }
}

EnsembleObservables run_ensemble(const SimulationConfig& config) {
  config.validate();
  const std::vector<double> grid = config.time_grid();
  const int n = config.n_trajectories;
  const int n_blocks = (n + kReductionBlock - 1) / kReductionBlock;
  std::vector<SeriesSums> blocks(n_blocks, SeriesSums(grid.size()));

  std::atomic<int> next_block{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;
  auto worker = [&]() {
    for (;;) {
      const int b = next_block.fetch_add(1);
      if (b >= n_blocks) return;
      {
        std::lock_guard<std::mutex> lock(failure_mutex);
        if (failure) return;
      }
      try {
        const int lo = b * kReductionBlock;
        const int hi = std::min(n, lo + kReductionBlock);
        for (int i = lo; i < hi; ++i) blocks[b].add(run_trajectory(config, static_cast<std::uint64_t>(i)));
      } catch (...) {
        std::lock_guard<std::mutex> lock(failure_mutex);
        if (!failure) failure = std::current_exception();
        return;
      }
    }
  };
  const int threads = std::min(config.threads, n_blocks);
  if (threads <= 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    pool.reserve(threads);
    for (int k = 0; k < threads; ++k) pool.emplace_back(worker);
    for (auto& th : pool) th.join();
  }
  if (failure) std::rethrow_exception(failure);

  const SeriesSums total = pairwise_total(blocks, 0, blocks.size());
  EnsembleObservables out;
  out.time_grid = grid;
  out.n_trajectories_used = n;
  out.total_jumps = total.jumps;
  out.total_measurements = total.measurements;
  mean_and_se(total.lt, total.lt2, n, out.leakage_total, out.se_leakage_total);
  mean_and_se(total.l1, total.l12, n, out.leakage_site1, out.se_leakage_site1);
  mean_and_se(total.n1, total.n12, n, out.occupation_site1, out.se_occupation_site1);
  mean_and_se(total.cm, total.cm2, n, out.coherence_modulus, out.se_coherence_modulus);
  out.coherence_site1.resize(grid.size());
  for (std::size_t i = 0; i < grid.size(); ++i)
    out.coherence_site1[i] = Complex(total.cre[i] / n, total.cim[i] / n);
  return out;
}

}  // namespace lru
