#include "lru/propagator.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include <unsupported/Eigen/MatrixFunctions>

#include "lru/error.hpp"

namespace lru {

namespace {

constexpr Complex kMinusI(0.0, -1.0);

double one_norm(const SparseMatrix& m) {
  // row-major storage: max absolute row sum equals the 1-norm of the adjoint
  double worst = 0.0;
  for (int k = 0; k < m.outerSize(); ++k) {
    double sum = 0.0;
    for (SparseMatrix::InnerIterator it(m, k); it; ++it) sum += std::abs(it.value());
    worst = std::max(worst, sum);
  }
  return worst;
}

}  // namespace

double norm_squared(const StateVector& psi) { return psi.squaredNorm(); }

void normalize(StateVector& psi) {
  const double n = psi.norm();
  if (!(n > 0.0) || !std::isfinite(n)) throw NumericError("cannot normalize a zero or non-finite state");
  psi /= n;
}

StateVector basis_state(const LatticeSpec& spec, std::span<const int> occupations) {
  spec.validate();
  if (occupations.size() != static_cast<std::size_t>(spec.length))
    throw ConfigError("basis_state needs one occupation per site");
  std::size_t index = 0;
  for (int n : occupations) {
    if (n < 0 || n >= spec.local_dim) throw ConfigError("occupation outside local dimension");
    index = index * spec.local_dim + static_cast<std::size_t>(n);
  }
  StateVector psi = StateVector::Zero(spec.dimension());
  psi(index) = 1.0;
  return psi;
}

DenseMatrix dense_propagator(const DenseMatrix& h, double t, bool hermitian) {
  if (hermitian) {
    Eigen::SelfAdjointEigenSolver<DenseMatrix> es(h);
    if (es.info() != Eigen::Success) throw NumericError("hermitian eigendecomposition failed");
    const Eigen::VectorXcd phases =
        (kMinusI * t * es.eigenvalues().cast<Complex>()).array().exp().matrix();
    return es.eigenvectors() * phases.asDiagonal() * es.eigenvectors().adjoint();
  }
  DenseMatrix a = kMinusI * t * h;
  return a.exp();
}

StateVector krylov_expv(const SparseMatrix& h, const StateVector& psi, double t,
                        const KrylovOptions& options) {
  if (t < 0.0) throw ConfigError("negative propagation time");
  const Eigen::Index n = h.rows();
  if (psi.size() != n) throw ConfigError("state dimension does not match operator");
  const double beta0 = psi.norm();
  if (t == 0.0 || beta0 == 0.0) return psi;

  const int m = static_cast<int>(std::min<Eigen::Index>(options.subspace_size, n));
  const double anorm = std::max(one_norm(h), 1e-300);
  const double breakdown = 1e-12 * anorm;

  StateVector w = psi;
  DenseMatrix v(n, m + 1);
  DenseMatrix hm(m + 1, m);
  double t_now = 0.0;
  double tau = t;
  int substeps = 0;
  double last_error = 0.0;

  while (t_now < t) {
    if (++substeps > options.max_substeps)
      throw KrylovNonConvergence("Krylov propagation exceeded substep limit", last_error);
    const double beta = w.norm();
    if (beta == 0.0) return w;
    v.setZero();
    hm.setZero();
    v.col(0) = w / beta;
    int used = m;
    bool happy = false;
    for (int j = 0; j < m; ++j) {
      StateVector u = kMinusI * (h * v.col(j));
      for (int pass = 0; pass < 2; ++pass) {
        for (int i = 0; i <= j; ++i) {
          const Complex c = v.col(i).dot(u);
          hm(i, j) += c;
          u -= c * v.col(i);
        }
      }
      const double hn = u.norm();
      hm(j + 1, j) = hn;
      if (hn < breakdown) {
        used = j + 1;
        happy = true;
        break;
      }
      v.col(j + 1) = u / hn;
    }

    const double remaining = t - t_now;
    tau = std::min(tau, remaining);
    if (happy) tau = remaining;
    const double h_next = std::abs(hm(used, used - 1));
    DenseMatrix f;
    int halvings = 0;
    for (;;) {
      f = (tau * hm.topLeftCorner(used, used)).exp();
      const double err = happy ? 0.0 : beta * h_next * std::abs(f(used - 1, 0));
      last_error = err;
      if (std::isfinite(err) && err <= options.tolerance * beta0 * (tau / t)) break;
      if (++halvings > 80)
        throw KrylovNonConvergence(
            "Krylov step size underflow at t=" + std::to_string(t_now), err);
      tau *= 0.5;
    }
    w = beta * (v.leftCols(used) * f.col(0));
    t_now += tau;
    if (halvings == 0) tau = remaining;  // try the full remainder next time
  }
  return w;
}

Propagator::Propagator(const OperatorMatrix& h, PropagationMethod method, KrylovOptions krylov,
                       std::size_t exact_threshold)
    : method_(method), dim_(h.dimension()), hermitian_(h.hermitian()), krylov_(krylov) {
  if (method_ == PropagationMethod::automatic)
    method_ = dim_ <= exact_threshold ? PropagationMethod::exact : PropagationMethod::krylov;
  if (method_ == PropagationMethod::exact) {
    if (dim_ > exact_threshold)
      throw ConfigError("exact propagation requested above dimension threshold " +
                        std::to_string(exact_threshold));
    dense_ = h.dense();
    if (hermitian_) {
      Eigen::SelfAdjointEigenSolver<DenseMatrix> es(dense_);
      if (es.info() != Eigen::Success) throw NumericError("hermitian eigendecomposition failed");
      eigenvectors_ = es.eigenvectors();
      eigenvalues_ = es.eigenvalues();
    }
  } else {
    sparse_ = h.sparse();
  }
}

StateVector Propagator::propagate(const StateVector& psi, double dt) const {
  if (static_cast<std::size_t>(psi.size()) != dim_)
    throw ConfigError("state dimension does not match propagator");
  if (dt < 0.0) throw ConfigError("negative propagation time");
  if (method_ == PropagationMethod::krylov) return krylov_expv(sparse_, psi, dt, krylov_);
  if (hermitian_) {
    Eigen::VectorXcd coeff = eigenvectors_.adjoint() * psi;
    for (Eigen::Index k = 0; k < coeff.size(); ++k)
      coeff(k) *= std::exp(kMinusI * (eigenvalues_(k) * dt));
    return eigenvectors_ * coeff;
  }
  return dense_propagator(dense_, dt, false) * psi;
}

std::vector<double> propagate_nonhermitian_norm(const OperatorMatrix& h_eff,
                                                const StateVector& psi0,
                                                std::span<const double> t_grid,
                                                PropagationMethod method) {
  Propagator prop(h_eff, method);
  std::vector<double> out;
  out.reserve(t_grid.size());
  StateVector psi = psi0;
  double t_prev = 0.0;
  for (double t : t_grid) {
    if (t < t_prev) throw ConfigError("time grid must be non-decreasing and start at >= 0");
    psi = prop.propagate(psi, t - t_prev);
    t_prev = t;
    out.push_back(psi.squaredNorm());
  }
  return out;
}

SectorPropagator::SectorPropagator(const DenseMatrix& generator,
                                   std::vector<std::vector<std::size_t>> sectors, bool hermitian)
    : dim_(static_cast<std::size_t>(generator.rows())), hermitian_(hermitian) {
  std::vector<int> owner(dim_, -1);
  for (auto& idx : sectors) {
    if (idx.empty()) continue;
    const int id = static_cast<int>(blocks_.size());
    for (std::size_t i : idx) owner.at(i) = id;
    Block b;
    b.indices = std::move(idx);
    blocks_.push_back(std::move(b));
  }
  for (std::size_t i = 0; i < dim_; ++i)
    if (owner[i] < 0) throw ConfigError("sector partition does not cover the basis");
  for (std::size_t r = 0; r < dim_; ++r)
    for (std::size_t c = 0; c < dim_; ++c)
      if (owner[r] != owner[c] && std::abs(generator(r, c)) > 1e-12)
        throw NumericError("generator couples different sectors");

  for (Block& b : blocks_) {
    const auto n = static_cast<Eigen::Index>(b.indices.size());
    b.generator.resize(n, n);
    for (Eigen::Index r = 0; r < n; ++r)
      for (Eigen::Index c = 0; c < n; ++c) b.generator(r, c) = generator(b.indices[r], b.indices[c]);
    if (hermitian_) {
      Eigen::SelfAdjointEigenSolver<DenseMatrix> es(b.generator);
      if (es.info() != Eigen::Success) throw NumericError("sector eigendecomposition failed");
      b.vectors = es.eigenvectors();
      b.inverse_vectors = b.vectors.adjoint();
      b.values = es.eigenvalues().cast<Complex>();
      b.diagonalized = true;
    } else {
      Eigen::ComplexEigenSolver<DenseMatrix> es(b.generator);
      if (es.info() != Eigen::Success) continue;
      const DenseMatrix vec = es.eigenvectors();
      Eigen::JacobiSVD<DenseMatrix> svd(vec);
      const auto& s = svd.singularValues();
      const double cond = s(s.size() - 1) > 0.0 ? s(0) / s(s.size() - 1) : INFINITY;
      if (cond > 1e6) continue;
      b.vectors = vec;
      b.inverse_vectors = vec.inverse();
      b.values = es.eigenvalues();
      b.diagonalized = true;
    }
  }
}

DenseMatrix SectorPropagator::block_exponential(const Block& b, double t) const {
  if (!b.diagonalized) return dense_propagator(b.generator, t, false);
  const Eigen::VectorXcd phases = (kMinusI * t * b.values).array().exp().matrix();
  return b.vectors * phases.asDiagonal() * b.inverse_vectors;
}

void SectorPropagator::propagate_in_place(StateVector& psi, double t) const {
  if (static_cast<std::size_t>(psi.size()) != dim_)
    throw ConfigError("state dimension does not match propagator");
  Eigen::VectorXcd x;
  for (const Block& b : blocks_) {
    const auto n = static_cast<Eigen::Index>(b.indices.size());
    x.resize(n);
    bool any = false;
    for (Eigen::Index k = 0; k < n; ++k) {
      x(k) = psi(b.indices[k]);
      any = any || x(k) != Complex(0.0);
    }
    if (!any) continue;
    Eigen::VectorXcd y;
    if (b.diagonalized) {
      Eigen::VectorXcd c = b.inverse_vectors * x;
      for (Eigen::Index k = 0; k < n; ++k) c(k) *= std::exp(kMinusI * t * b.values(k));
      y = b.vectors * c;
    } else {
      y = dense_propagator(b.generator, t, false) * x;
    }
    for (Eigen::Index k = 0; k < n; ++k) psi(b.indices[k]) = y(k);
  }
}

StateVector SectorPropagator::propagate(const StateVector& psi, double t) const {
  StateVector out = psi;
  propagate_in_place(out, t);
  return out;
}

SectorPropagator::FixedStep SectorPropagator::fixed_step(double t) const {
  FixedStep step;
  step.blocks.reserve(blocks_.size());
  for (const Block& b : blocks_) step.blocks.push_back(block_exponential(b, t));
  return step;
}

void SectorPropagator::apply(const FixedStep& step, StateVector& psi) const {
  Eigen::VectorXcd x;
  for (std::size_t bi = 0; bi < blocks_.size(); ++bi) {
    const Block& b = blocks_[bi];
    const auto n = static_cast<Eigen::Index>(b.indices.size());
    x.resize(n);
    bool any = false;
    for (Eigen::Index k = 0; k < n; ++k) {
      x(k) = psi(b.indices[k]);
      any = any || x(k) != Complex(0.0);
    }
    if (!any) continue;
    const Eigen::VectorXcd y = step.blocks[bi] * x;
    for (Eigen::Index k = 0; k < n; ++k) psi(b.indices[k]) = y(k);
  }
}

}  // namespace lru
