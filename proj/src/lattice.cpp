#include "lru/lattice.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>
#include <string>

#include "lru/error.hpp"

namespace lru {

namespace {

using Triplet = Eigen::Triplet<Complex>;

std::size_t checked_power(int base, int exponent, std::size_t budget) {
  std::size_t dim = 1;
  for (int i = 0; i < exponent; ++i) {
    if (dim > budget / static_cast<std::size_t>(base))
      throw InstanceTooLarge("Hilbert space " + std::to_string(base) + "^" +
                             std::to_string(exponent) + " exceeds dimension budget " +
                             std::to_string(budget));
    dim *= static_cast<std::size_t>(base);
  }
  return dim;
}

std::size_t stride_of(int site, int length, int local_dim) {
  std::size_t s = 1;
  for (int k = site; k < length; ++k) s *= static_cast<std::size_t>(local_dim);
  return s;
}

void check_site(int site, int length) {
  if (site < 1 || site > length)
    throw ConfigError("site index " + std::to_string(site) + " outside 1.." +
                      std::to_string(length));
}

DisorderRealization make_realization(const LatticeSpec& spec, std::span<const double> delta,
                                     std::uint64_t seed) {
  DisorderRealization r;
  r.parent = spec;
  r.seed = seed;
  const double e2 = 2.0 * spec.mean_frequency - spec.mean_anharmonicity;
  r.omegas.resize(spec.length);
  r.anharmonicities.resize(spec.length);
  for (int l = 0; l < spec.length; ++l) {
    r.omegas[l] = spec.mean_frequency + delta[l];
    r.anharmonicities[l] = 2.0 * r.omegas[l] - e2;
  }
  return r;
}

}  // namespace

void LatticeSpec::validate() const {
  if (length < 1) throw ConfigError("lattice length must be >= 1");
  if (local_dim < 3) throw ConfigError("local dimension must be >= 3");
  if (!(hopping >= 0.0)) throw ConfigError("hopping must be >= 0");
  if (!(disorder_strength >= 0.0)) throw ConfigError("disorder strength must be >= 0");
  if (!(mean_anharmonicity > 0.0)) throw ConfigError("mean anharmonicity must be > 0");
  if (!std::isfinite(mean_frequency)) throw ConfigError("mean frequency must be finite");
}

std::size_t LatticeSpec::dimension(std::size_t budget) const {
  return checked_power(local_dim, length, budget);
}

double DisorderRealization::second_level_energy() const {
  return 2.0 * parent.mean_frequency - parent.mean_anharmonicity;
}

double DisorderRealization::resonance_violation() const {
  const double e2 = second_level_energy();
  double worst = 0.0;
  for (std::size_t l = 0; l < omegas.size(); ++l)
    worst = std::max(worst, std::abs((2.0 * omegas[l] - anharmonicities[l]) - e2));
  return worst;
}

DisorderRealization realize_disorder(const LatticeSpec& spec, std::uint64_t seed) {
  spec.validate();
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> dist(-0.5 * spec.disorder_strength,
                                              0.5 * spec.disorder_strength);
  std::vector<double> delta(spec.length, 0.0);
  if (spec.disorder_strength > 0.0)
    for (auto& d : delta) d = dist(rng);
  return make_realization(spec, delta, seed);
}

DisorderRealization realization_from_detunings(const LatticeSpec& spec,
                                               std::span<const double> detunings) {
  spec.validate();
  if (detunings.size() != static_cast<std::size_t>(spec.length))
    throw ConfigError("expected " + std::to_string(spec.length) + " site detunings, got " +
                      std::to_string(detunings.size()));
  return make_realization(spec, detunings, 0);
}

std::size_t Basis::dimension() const {
  if (kind == Kind::leakage_particle) return static_cast<std::size_t>(length);
  return checked_power(local_dim, length, std::numeric_limits<std::size_t>::max());
}

OperatorMatrix::OperatorMatrix(SparseMatrix storage, Basis basis, bool hermitian)
    : storage_(std::move(storage)), basis_(basis), hermitian_(hermitian) {
  storage_.makeCompressed();
  if (hermitian_ && hermiticity_defect() >= 1e-12)
    throw NumericError("matrix flagged hermitian has defect " +
                       std::to_string(hermiticity_defect()));
}

double OperatorMatrix::hermiticity_defect() const {
  SparseMatrix diff = storage_ - SparseMatrix(storage_.adjoint());
  double worst = 0.0;
  for (int k = 0; k < diff.outerSize(); ++k)
    for (SparseMatrix::InnerIterator it(diff, k); it; ++it)
      worst = std::max(worst, std::abs(it.value()));
  return worst;
}

int site_occupation(std::size_t index, int site, int length, int local_dim) {
  return static_cast<int>((index / stride_of(site, length, local_dim)) %
                          static_cast<std::size_t>(local_dim));
}

OperatorMatrix build_site_operator(const LatticeSpec& spec, int site, SiteOperatorKind kind) {
  spec.validate();
  check_site(site, spec.length);
  const std::size_t dim = spec.dimension();
  const std::size_t stride = stride_of(site, spec.length, spec.local_dim);
  std::vector<Triplet> entries;
  entries.reserve(dim);
  for (std::size_t i = 0; i < dim; ++i) {
    const int n = site_occupation(i, site, spec.length, spec.local_dim);
    switch (kind) {
      case SiteOperatorKind::annihilation:
        if (n > 0) entries.emplace_back(i - stride, i, std::sqrt(double(n)));
        break;
      case SiteOperatorKind::creation:
        if (n + 1 < spec.local_dim) entries.emplace_back(i + stride, i, std::sqrt(double(n + 1)));
        break;
      case SiteOperatorKind::number:
        if (n > 0) entries.emplace_back(i, i, double(n));
        break;
      case SiteOperatorKind::leakage_number:
        if (n > 1) entries.emplace_back(i, i, 0.5 * n * (n - 1));
        break;
    }
  }
  SparseMatrix m(dim, dim);
  m.setFromTriplets(entries.begin(), entries.end());
  const bool herm = kind == SiteOperatorKind::number || kind == SiteOperatorKind::leakage_number;
  return OperatorMatrix(std::move(m), Basis::fock(spec), herm);
}

OperatorMatrix build_total_number(const LatticeSpec& spec) {
  spec.validate();
  const std::size_t dim = spec.dimension();
  std::vector<Triplet> entries;
  for (std::size_t i = 0; i < dim; ++i) {
    int total = 0;
    for (int l = 1; l <= spec.length; ++l) total += site_occupation(i, l, spec.length, spec.local_dim);
    if (total > 0) entries.emplace_back(i, i, double(total));
  }
  SparseMatrix m(dim, dim);
  m.setFromTriplets(entries.begin(), entries.end());
  return OperatorMatrix(std::move(m), Basis::fock(spec), true);
}

OperatorMatrix build_bose_hubbard(const DisorderRealization& real, double frame_frequency) {
  const LatticeSpec& spec = real.parent;
  spec.validate();
  const int L = spec.length;
  const int d = spec.local_dim;
  const std::size_t dim = spec.dimension();
  const double J = spec.hopping;
  std::vector<Triplet> entries;
  entries.reserve(dim * (1 + 2 * (L - 1)));
  for (std::size_t i = 0; i < dim; ++i) {
    double diag = 0.0;
    for (int l = 1; l <= L; ++l) {
      const int n = site_occupation(i, l, L, d);
      diag += (real.omegas[l - 1] - frame_frequency) * n -
              0.5 * real.anharmonicities[l - 1] * n * (n - 1);
    }
    if (diag != 0.0) entries.emplace_back(i, i, diag);
    if (J == 0.0) continue;
    // a_l^dag a_{l+1} and its conjugate, both generated from the column i
    for (int l = 1; l < L; ++l) {
      const int nl = site_occupation(i, l, L, d);
      const int nr = site_occupation(i, l + 1, L, d);
      const std::size_t sl = stride_of(l, L, d);
      const std::size_t sr = stride_of(l + 1, L, d);
      if (nr > 0 && nl + 1 < d)
        entries.emplace_back(i + sl - sr, i, J * std::sqrt(double(nr) * (nl + 1)));
      if (nl > 0 && nr + 1 < d)
        entries.emplace_back(i - sl + sr, i, J * std::sqrt(double(nl) * (nr + 1)));
    }
  }
  SparseMatrix m(dim, dim);
  m.setFromTriplets(entries.begin(), entries.end());
  return OperatorMatrix(std::move(m), Basis::fock(spec), true);
}

double effective_hopping(double hopping, double anharmonicity) {
  if (std::isinf(anharmonicity)) return 0.0;
  return 2.0 * hopping * hopping / anharmonicity;
}

OperatorMatrix build_effective_propagation(const DisorderRealization& real) {
  const int L = real.parent.length;
  const double jp = effective_hopping(real.parent.hopping, real.parent.mean_anharmonicity);
  std::vector<Triplet> entries;
  if (jp != 0.0) {
    entries.emplace_back(0, 0, jp);
    entries.emplace_back(L - 1, L - 1, jp);
    for (int l = 0; l + 1 < L; ++l) {
      entries.emplace_back(l, l + 1, -jp);
      entries.emplace_back(l + 1, l, -jp);
    }
  }
  SparseMatrix m(L, L);
  m.setFromTriplets(entries.begin(), entries.end());
  return OperatorMatrix(std::move(m), Basis::leakage_particle(L), true);
}

OperatorMatrix build_effective_nonhermitian(const OperatorMatrix& hamiltonian, int reset_site,
                                            double rate, ResetKind kind) {
  if (!hamiltonian.hermitian()) throw ConfigError("effective Hamiltonian needs a hermitian input");
  if (!(rate >= 0.0)) throw ConfigError("reset rate must be >= 0");
  const Basis& basis = hamiltonian.basis();
  check_site(reset_site, basis.length);
  if (rate == 0.0) return hamiltonian;
  const std::size_t dim = hamiltonian.dimension();
  const Complex damp(0.0, -0.5 * rate);
  std::vector<Triplet> entries;
  if (kind == ResetKind::feedback) {
    for (std::size_t i = 0; i < dim; ++i) entries.emplace_back(i, i, damp);
  } else if (basis.kind == Basis::Kind::leakage_particle) {
    entries.emplace_back(reset_site - 1, reset_site - 1, 2.0 * damp);
  } else {
    for (std::size_t i = 0; i < dim; ++i) {
      const int n = site_occupation(i, reset_site, basis.length, basis.local_dim);
      if (n > 0) entries.emplace_back(i, i, double(n) * damp);
    }
  }
  SparseMatrix m(dim, dim);
  m.setFromTriplets(entries.begin(), entries.end());
  return OperatorMatrix(hamiltonian.sparse() + m, basis, false);
}

std::vector<std::vector<std::size_t>> excitation_sectors(const LatticeSpec& spec) {
  spec.validate();
  const std::size_t dim = spec.dimension();
  std::vector<std::vector<std::size_t>> sectors(spec.length * (spec.local_dim - 1) + 1);
  for (std::size_t i = 0; i < dim; ++i) {
    int total = 0;
    for (int l = 1; l <= spec.length; ++l) total += site_occupation(i, l, spec.length, spec.local_dim);
    sectors[total].push_back(i);
  }
  return sectors;
}

}  // namespace lru
