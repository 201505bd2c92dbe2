#pragma once

#include <complex>
#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/Sparse>

namespace lru {

using Complex = std::complex<double>;
using SparseMatrix = Eigen::SparseMatrix<Complex, Eigen::RowMajor>;
using DenseMatrix = Eigen::MatrixXcd;
using Vector = Eigen::VectorXcd;

inline constexpr double kPi = 3.14159265358979323846;
inline constexpr double kTwoPi = 2.0 * kPi;

// Default ceiling on d^L. 3^13 amplitudes is ~25 MB per state vector.
inline constexpr std::size_t kDefaultDimensionBudget = 1594323;

/// Parameters of a transmon array. All frequencies are angular (hbar = 1);
/// the unit is whatever the caller uses consistently (rad/us, or units of J).
struct LatticeSpec {
  int length = 2;
  int local_dim = 3;
  double mean_frequency = 0.0;
  double mean_anharmonicity = 1.0;
  double hopping = 0.0;
  double disorder_strength = 0.0;

  void validate() const;
  /// d^L, throwing InstanceTooLarge when it exceeds `budget`.
  std::size_t dimension(std::size_t budget = kDefaultDimensionBudget) const;
};

/// Per-site frequencies and anharmonicities with 2*omega_l - U_l fixed across the array.
struct DisorderRealization {
  std::vector<double> omegas;
  std::vector<double> anharmonicities;
  LatticeSpec parent;
  std::uint64_t seed = 0;

  /// E_2 = 2*mean_frequency - mean_anharmonicity, shared by every site.
  double second_level_energy() const;
  /// max_l |(2 w_l - U_l) - E_2|.
  double resonance_violation() const;
};

/// Draws delta_l ~ U[-W/2, W/2] i.i.d. and sets w_l = w + delta_l, U_l = 2 w_l - E_2.
DisorderRealization realize_disorder(const LatticeSpec& spec, std::uint64_t seed);

/// Same construction with caller-supplied detunings delta_l (one per site).
DisorderRealization realization_from_detunings(const LatticeSpec& spec,
                                               std::span<const double> detunings);

/// Which basis an operator lives in.
///  fock: d^L product basis, index = sum_l n_l d^(L-l) (site 1 most significant).
///  leakage_particle: L-dimensional single-stack basis of the effective propagation
///  model; each stack carries two physical excitations.
struct Basis {
  enum class Kind { fock, leakage_particle };
  Kind kind = Kind::fock;
  int length = 1;
  int local_dim = 3;

  std::size_t dimension() const;
  static Basis fock(const LatticeSpec& spec) { return {Kind::fock, spec.length, spec.local_dim}; }
  static Basis leakage_particle(int length) { return {Kind::leakage_particle, length, 0}; }
  bool operator==(const Basis&) const = default;
};

class OperatorMatrix {
 public:
  OperatorMatrix() = default;
  OperatorMatrix(SparseMatrix storage, Basis basis, bool hermitian);

  std::size_t dimension() const { return static_cast<std::size_t>(storage_.rows()); }
  const SparseMatrix& sparse() const { return storage_; }
  DenseMatrix dense() const { return DenseMatrix(storage_); }
  const Basis& basis() const { return basis_; }
  bool hermitian() const { return hermitian_; }

  /// max |M - M^dagger| entrywise.
  double hermiticity_defect() const;

 private:
  SparseMatrix storage_;
  Basis basis_;
  bool hermitian_ = false;
};

enum class SiteOperatorKind { annihilation, creation, number, leakage_number };

/// Truncated ladder operator (or derived diagonal) on `site` (1-based) embedded by
/// Kronecker products.
OperatorMatrix build_site_operator(const LatticeSpec& spec, int site, SiteOperatorKind kind);

/// N = sum_l n_l.
OperatorMatrix build_total_number(const LatticeSpec& spec);

/// Open-boundary Bose-Hubbard Hamiltonian of the realization.
/// `frame_frequency` subtracts frame_frequency * N (rotating frame); N is conserved,
/// so this only removes a sector-dependent phase.
OperatorMatrix build_bose_hubbard(const DisorderRealization& real, double frame_frequency = 0.0);

/// Effective hopping of a leakage stack, 2 J^2 / U.
double effective_hopping(double hopping, double anharmonicity);

/// L x L single-stack Hamiltonian J_prop [n_1 + n_L - sum (a_l^dag a_{l+1} + h.c.)].
OperatorMatrix build_effective_propagation(const DisorderRealization& real);

enum class ResetKind { dissipation, feedback };

/// Dissipation: H - i (rate/2) n_site.  Feedback: H - i (rate/2) I.
/// In the leakage-particle basis n_site counts two excitations per stack.
OperatorMatrix build_effective_nonhermitian(const OperatorMatrix& hamiltonian, int reset_site,
                                            double rate, ResetKind kind);

/// Occupation of `site` (1-based) in Fock index `index`.
int site_occupation(std::size_t index, int site, int length, int local_dim);

/// Fock indices grouped by total excitation number, sectors[N] (possibly empty).
std::vector<std::vector<std::size_t>> excitation_sectors(const LatticeSpec& spec);

}  // namespace lru
