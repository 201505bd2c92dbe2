#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "lru/lattice.hpp"

namespace lru {

/// Complex amplitudes over the product basis. Normalization is tracked by the
/// caller; no-jump evolution deliberately leaves states unnormalized.
using StateVector = Vector;

double norm_squared(const StateVector& psi);
/// Scales psi to unit norm; throws NumericError on a zero vector.
void normalize(StateVector& psi);

/// Fock basis vector with the given per-site occupations (site 1 first).
StateVector basis_state(const LatticeSpec& spec, std::span<const int> occupations);

enum class PropagationMethod { automatic, exact, krylov };

inline constexpr std::size_t kExactDimensionThreshold = 729;

struct KrylovOptions {
  int subspace_size = 20;
  double tolerance = 1e-10;
  int max_substeps = 1000000;
};

/// Computes exp(-i H t) psi with a restarted Arnoldi process. The local error
/// estimate beta * h_{m+1,m} * |[exp(-i tau H_m)]_{m,1}| is kept below
/// tolerance * (tau / t) * ||psi||.
StateVector krylov_expv(const SparseMatrix& h, const StateVector& psi, double t,
                        const KrylovOptions& options = {});

/// exp(-i H t) for a dense matrix. Hermitian inputs use the eigenbasis; others use
/// scaling-and-squaring Pade.
DenseMatrix dense_propagator(const DenseMatrix& h, double t, bool hermitian);

class Propagator {
 public:
  Propagator(const OperatorMatrix& h, PropagationMethod method = PropagationMethod::automatic,
             KrylovOptions krylov = {}, std::size_t exact_threshold = kExactDimensionThreshold);

  PropagationMethod method() const { return method_; }
  std::size_t dimension() const { return dim_; }
  bool hermitian() const { return hermitian_; }

  /// exp(-i H dt) psi. dt may be any non-negative time.
  StateVector propagate(const StateVector& psi, double dt) const;

 private:
  PropagationMethod method_;
  std::size_t dim_;
  bool hermitian_;
  KrylovOptions krylov_;
  SparseMatrix sparse_;
  DenseMatrix dense_;
  DenseMatrix eigenvectors_;
  Eigen::VectorXd eigenvalues_;
};

/// ||exp(-i H_eff t) psi0||^2 on every grid time (grid must be non-decreasing and >= 0).
std::vector<double> propagate_nonhermitian_norm(const OperatorMatrix& h_eff,
                                                const StateVector& psi0,
                                                std::span<const double> t_grid,
                                                PropagationMethod method = PropagationMethod::automatic);

/// Exact propagation for generators that commute with a partition of the basis
/// (here: total excitation number). Each block is diagonalized once so arbitrary
/// times cost one small matrix-vector product per block. Blocks whose eigenbasis
/// is badly conditioned fall back to Pade exponentials evaluated per call.
class SectorPropagator {
 public:
  SectorPropagator(const DenseMatrix& generator, std::vector<std::vector<std::size_t>> sectors,
                   bool hermitian);

  std::size_t dimension() const { return dim_; }

  /// exp(-i H t) psi.
  StateVector propagate(const StateVector& psi, double t) const;
  void propagate_in_place(StateVector& psi, double t) const;

  /// Block matrices of exp(-i H t), for reuse at a fixed interval.
  struct FixedStep {
    std::vector<DenseMatrix> blocks;
  };
  FixedStep fixed_step(double t) const;
  void apply(const FixedStep& step, StateVector& psi) const;

 private:
  struct Block {
    std::vector<std::size_t> indices;
    DenseMatrix generator;
    DenseMatrix vectors;
    DenseMatrix inverse_vectors;
    Eigen::VectorXcd values;
    bool diagonalized = false;
  };
  DenseMatrix block_exponential(const Block& block, double t) const;

  std::size_t dim_;
  bool hermitian_;
  std::vector<Block> blocks_;
};

}  // namespace lru
