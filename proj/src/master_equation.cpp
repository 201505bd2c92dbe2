#include "lru/master_equation.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "lru/error.hpp"

namespace lru {

namespace {

constexpr Complex kMinusI(0.0, -1.0);

class LindbladRhs {
 public:
  LindbladRhs(const DenseMatrix& h, const std::vector<SparseMatrix>& jumps) : jumps_(jumps) {
    heff_ = h;
    for (const auto& l : jumps_) heff_ += Complex(0.0, -0.5) * DenseMatrix(SparseMatrix(l.adjoint()) * l);
    heff_adj_ = heff_.adjoint();
    for (const auto& l : jumps_) jumps_adj_.emplace_back(l.adjoint());
  }

  void operator()(const DenseMatrix& rho, DenseMatrix& out) const {
    out.noalias() = kMinusI * (heff_ * rho);
    out.noalias() -= kMinusI * (rho * heff_adj_);
    for (std::size_t k = 0; k < jumps_.size(); ++k) {
      DenseMatrix lr = jumps_[k] * rho;
      out.noalias() += DenseMatrix(lr * jumps_adj_[k]);
    }
  }

  double scale() const {
    double s = heff_.cwiseAbs().rowwise().sum().maxCoeff();
    for (const auto& l : jumps_) {
      double ln = 0.0;
      for (int k = 0; k < l.outerSize(); ++k)
        for (SparseMatrix::InnerIterator it(l, k); it; ++it) ln = std::max(ln, std::abs(it.value()));
      s += ln * ln;
    }
    return s;
  }

 private:
  DenseMatrix heff_;
  DenseMatrix heff_adj_;
  const std::vector<SparseMatrix>& jumps_;
  std::vector<SparseMatrix> jumps_adj_;
};

}  // namespace

LindbladStats integrate_lindblad(const DenseMatrix& h, const std::vector<SparseMatrix>& jumps,
                                 DenseMatrix rho, std::span<const double> t_grid,
                                 const std::function<void(std::size_t, const DenseMatrix&)>& observe,
                                 double tolerance, long long max_steps) {
  static constexpr double c2 = 1.0 / 5, c3 = 3.0 / 10, c4 = 4.0 / 5, c5 = 8.0 / 9;
  static constexpr double a21 = 1.0 / 5;
  static constexpr double a31 = 3.0 / 40, a32 = 9.0 / 40;
  static constexpr double a41 = 44.0 / 45, a42 = -56.0 / 15, a43 = 32.0 / 9;
  static constexpr double a51 = 19372.0 / 6561, a52 = -25360.0 / 2187, a53 = 64448.0 / 6561,
                          a54 = -212.0 / 729;
  static constexpr double a61 = 9017.0 / 3168, a62 = -355.0 / 33, a63 = 46732.0 / 5247,
                          a64 = 49.0 / 176, a65 = -5103.0 / 18656;
  static constexpr double b1 = 35.0 / 384, b3 = 500.0 / 1113, b4 = 125.0 / 192, b5 = -2187.0 / 6784,
                          b6 = 11.0 / 84;
  static constexpr double e1 = b1 - 5179.0 / 57600, e3 = b3 - 7571.0 / 16695, e4 = b4 - 393.0 / 640,
                          e5 = b5 - -92097.0 / 339200, e6 = b6 - 187.0 / 2100, e7 = -1.0 / 40;
  (void)c2; (void)c3; (void)c4; (void)c5;  // autonomous system: stage times unused

  const LindbladRhs f(h, jumps);
  const Eigen::Index n = rho.rows();
  DenseMatrix k1(n, n), k2(n, n), k3(n, n), k4(n, n), k5(n, n), k6(n, n), k7(n, n), y(n, n), err(n, n);
  LindbladStats stats;
  double t = 0.0;
  double step = 0.1 / std::max(f.scale(), 1e-300);
  f(rho, k1);
  for (std::size_t gi = 0; gi < t_grid.size(); ++gi) {
    const double target = t_grid[gi];
    if (target < t) throw ConfigError("time grid must be non-decreasing and start at >= 0");
    while (t < target) {
      if (++stats.steps > max_steps) throw NumericError("master equation exceeded step limit");
      bool last = false;
      double hs = step;
      if (t + hs >= target) {
        hs = target - t;
        last = true;
      }
      y = rho + hs * a21 * k1;
      f(y, k2);
      y = rho + hs * (a31 * k1 + a32 * k2);
      f(y, k3);
      y = rho + hs * (a41 * k1 + a42 * k2 + a43 * k3);
      f(y, k4);
      y = rho + hs * (a51 * k1 + a52 * k2 + a53 * k3 + a54 * k4);
      f(y, k5);
      y = rho + hs * (a61 * k1 + a62 * k2 + a63 * k3 + a64 * k4 + a65 * k5);
      f(y, k6);
      y = rho + hs * (b1 * k1 + b3 * k3 + b4 * k4 + b5 * k5 + b6 * k6);
      f(y, k7);
      err = hs * (e1 * k1 + e3 * k3 + e4 * k4 + e5 * k5 + e6 * k6 + e7 * k7);
      double en = 0.0;
      for (Eigen::Index r = 0; r < n; ++r)
        for (Eigen::Index c = 0; c < n; ++c) {
          const double sc = tolerance * (1.0 + std::max(std::abs(rho(r, c)), std::abs(y(r, c))));
          en = std::max(en, std::abs(err(r, c)) / sc);
        }
      if (!std::isfinite(en)) throw NumericError("master equation produced non-finite values");
      if (en <= 1.0) {
        rho.swap(y);
        k1.swap(k7);
        t = last ? target : t + hs;
      } else {
        ++stats.rejected;
      }
      const double factor = en > 0.0 ? std::clamp(0.9 * std::pow(en, -0.2), 0.2, 5.0) : 5.0;
      if (!(last && en <= 1.0)) step = hs * factor;
      if (step < 1e-14 * std::max(1.0, target)) throw NumericError("master equation step size underflow");
    }
    observe(gi, rho);
  }
  return stats;
}

std::vector<OperatorMatrix> channel_lindblad_operators(const LatticeSpec& spec, const ResetChannel& channel) {
  std::vector<OperatorMatrix> ops;
  if (!channel.active()) return ops;
  const int site = channel.resolved_site(spec.length);
  if (channel.kind == ChannelKind::dissipation) {
    ops.push_back(dissipation_jump_operator(spec, site, channel.rate));
    return ops;
  }
  const std::size_t dim = spec.dimension();
  std::size_t stride = 1;
  for (int k = site; k < spec.length; ++k) stride *= static_cast<std::size_t>(spec.local_dim);
  const double amp = std::sqrt(channel.rate);
  for (int level = 0; level < spec.local_dim; ++level) {
    std::vector<Eigen::Triplet<Complex>> entries;
    for (std::size_t i = 0; i < dim; ++i)
      if (site_occupation(i, site, spec.length, spec.local_dim) == level)
        entries.emplace_back(i - level * stride, i, amp);
    SparseMatrix m(dim, dim);
    m.setFromTriplets(entries.begin(), entries.end());
    ops.emplace_back(std::move(m), Basis::fock(spec), false);
  }
  return ops;
}

MasterSolution solve_master_dense(const SimulationConfig& config, std::span<const double> t_grid,
                                  const MasterOptions& options) {
  config.validate();
  const LatticeSpec& spec = config.lattice;
  const std::size_t dim = spec.dimension(options.max_dimension);
  const DisorderRealization real = config.realization(0);
  const OperatorMatrix h = build_bose_hubbard(real, spec.mean_frequency);

  std::vector<SparseMatrix> jumps;
  for (const auto& op : noise_jump_operators(config.noise, spec)) jumps.push_back(op.sparse());
  for (const auto& op : channel_lindblad_operators(spec, config.channel)) jumps.push_back(op.sparse());

  // coding state on site 1 tensored with Gibbs mixtures of the idle sites
  const Vector coding = coding_vector(config.initial_coding_state, spec.local_dim);
  Eigen::VectorXd idle = Eigen::VectorXd::Ones(1);
  for (int l = 2; l <= spec.length; ++l) {
    const auto w = thermal_weights(real.omegas[l - 1], real.anharmonicities[l - 1], config.noise);
    Eigen::VectorXd site_w = Eigen::VectorXd::Zero(spec.local_dim);
    for (int k = 0; k < 3; ++k) site_w(k) = w[k];
    Eigen::VectorXd next(idle.size() * spec.local_dim);
    for (Eigen::Index a = 0; a < idle.size(); ++a)
      for (int b = 0; b < spec.local_dim; ++b) next(a * spec.local_dim + b) = idle(a) * site_w(b);
    idle = next;
  }
  const DenseMatrix coding_rho = coding * coding.adjoint();
  DenseMatrix rho = DenseMatrix::Zero(dim, dim);
  const Eigen::Index block = idle.size();
  for (int a = 0; a < spec.local_dim; ++a)
    for (int b = 0; b < spec.local_dim; ++b)
      for (Eigen::Index r = 0; r < block; ++r) rho(a * block + r, b * block + r) = coding_rho(a, b) * idle(r);

  MasterSolution sol;
  sol.time_grid.assign(t_grid.begin(), t_grid.end());
  sol.samples.resize(t_grid.size());
  sol.min_eigenvalue = 1.0;
  const ObservableEvaluator evaluator(spec);
  auto observe = [&](std::size_t i, const DenseMatrix& r) {
    sol.samples[i] = evaluator.evaluate(r);
    sol.max_trace_error = std::max(sol.max_trace_error, std::abs(r.trace().real() - 1.0));
    const DenseMatrix herm_defect = r - r.adjoint();
    sol.max_hermiticity_defect = std::max(sol.max_hermiticity_defect, herm_defect.cwiseAbs().maxCoeff());
    sol.max_purity_defect = std::max(sol.max_purity_defect, std::abs((r * r).trace().real() - 1.0));
    if (options.check_positivity) {
      const DenseMatrix hp = 0.5 * (r + r.adjoint());
      Eigen::SelfAdjointEigenSolver<DenseMatrix> es(hp, Eigen::EigenvaluesOnly);
      sol.min_eigenvalue = std::min(sol.min_eigenvalue, es.eigenvalues().minCoeff());
    }
  };
  sol.stats = integrate_lindblad(h.dense(), jumps, std::move(rho), t_grid, observe, options.tolerance,
                                 options.max_steps);
  return sol;
}

std::vector<double> effective_leakage_series(int length, ChannelKind kind, double rate, double j_prop,
                                             std::span<const double> t_grid, double tolerance) {
  if (length < 2) throw ConfigError("effective model needs L >= 2");
  LatticeSpec spec;
  spec.length = length;
  spec.hopping = 1.0;
  spec.mean_anharmonicity = 2.0 / j_prop;  // J_prop = 2 J^2 / U with J = 1
  if (!(j_prop > 0.0)) throw ConfigError("J_prop must be > 0");
  const OperatorMatrix h = build_effective_propagation(realization_from_detunings(spec, std::vector<double>(length, 0.0)));
  DenseMatrix heff = h.dense();
  std::vector<SparseMatrix> jumps;
  if (kind == ChannelKind::dissipation) {
    heff = build_effective_nonhermitian(h, length, rate, ResetKind::dissipation).dense();
  } else if (kind == ChannelKind::random_feedback || kind == ChannelKind::periodic_feedback) {
    SparseMatrix q(length, length);
    for (int l = 0; l + 1 < length; ++l) q.insert(l, l) = std::sqrt(rate);
    q.makeCompressed();
    // sqrt(Gamma) Q already supplies -(Gamma/2) Q; the remaining -(Gamma/2)|L><L| is the
    // branch where the stack is found and removed
    heff(length - 1, length - 1) += Complex(0.0, -0.5 * rate);
    jumps.push_back(q);
  } else if (kind != ChannelKind::none) {
    throw ConfigError("unsupported channel for the effective model");
  }
  DenseMatrix rho = DenseMatrix::Zero(length, length);
  rho(0, 0) = 1.0;
  std::vector<double> out(t_grid.size());
  integrate_lindblad(heff, jumps, rho, t_grid,
                     [&](std::size_t i, const DenseMatrix& r) { out[i] = r.trace().real(); }, tolerance);
  return out;
}

DenseMatrix lindblad_superoperator(const DenseMatrix& h, const std::vector<DenseMatrix>& jumps) {
  const Eigen::Index n = h.rows();
  const DenseMatrix id = DenseMatrix::Identity(n, n);
  auto kron = [](const DenseMatrix& a, const DenseMatrix& b) {
    DenseMatrix k(a.rows() * b.rows(), a.cols() * b.cols());
    for (Eigen::Index i = 0; i < a.rows(); ++i)
      for (Eigen::Index j = 0; j < a.cols(); ++j) k.block(i * b.rows(), j * b.cols(), b.rows(), b.cols()) = a(i, j) * b;
    return k;
  };
  // vec(A rho B) = (B^T kron A) vec(rho)
  DenseMatrix s = kMinusI * (kron(id, h) - kron(h.transpose(), id));
  for (const auto& l : jumps) {
    const DenseMatrix ldl = l.adjoint() * l;
    s += kron(l.conjugate(), l) - 0.5 * kron(id, ldl) - 0.5 * kron(ldl.transpose(), id);
  }
  return s;
}

}  // namespace lru
