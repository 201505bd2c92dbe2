#pragma once

#include <cstddef>
#include <functional>
#include <span>
#include <vector>

#include "lru/channels.hpp"
#include "lru/lattice.hpp"
#include "lru/observables.hpp"
#include "lru/trajectory.hpp"

namespace lru {

struct MasterOptions {
  double tolerance = 1e-9;          // per-step local error target (absolute and relative)
  std::size_t max_dimension = 729;  // dense budget on d^L
  long long max_steps = 50000000;
  bool check_positivity = true;
};

/// Dormand-Prince 5(4) integration of d rho/dt = -i (Heff rho - rho Heff^dag) + sum_k L_k rho L_k^dag
/// with Heff = H - (i/2) sum_k L_k^dag L_k. `observe` is called at every grid time.
struct LindbladStats {
  long long steps = 0;
  long long rejected = 0;
};
LindbladStats integrate_lindblad(const DenseMatrix& h, const std::vector<SparseMatrix>& jumps,
                                 DenseMatrix rho, std::span<const double> t_grid,
                                 const std::function<void(std::size_t, const DenseMatrix&)>& observe,
                                 double tolerance = 1e-9, long long max_steps = 50000000);

/// Jump operators of the channel in the master-equation picture.
/// Feedback (either schedule): sqrt(Gamma) |0><n| on the site for every n, which gives
/// Gamma (sum_n Pi_n rho Pi_n^dag - rho). Dissipation: sqrt(Gamma) a_site.
std::vector<OperatorMatrix> channel_lindblad_operators(const LatticeSpec& spec, const ResetChannel& channel);

struct MasterSolution {
  std::vector<double> time_grid;
  std::vector<ObservableSample> samples;
  double max_trace_error = 0.0;    // max |tr rho - 1|
  double min_eigenvalue = 0.0;     // min over grid of the smallest eigenvalue of rho
  double max_hermiticity_defect = 0.0;
  double max_purity_defect = 0.0;  // max |tr rho^2 - 1|
  LindbladStats stats;
};

/// Dense Lindblad evolution of the configuration for the single realization
/// config.realization(0), in the frame rotating at the mean frequency. Idle sites start
/// in the exact Gibbs mixture. Throws InstanceTooLarge above the dense budget.
MasterSolution solve_master_dense(const SimulationConfig& config, std::span<const double> t_grid,
                                  const MasterOptions& options = {});

/// Leakage population tr(rho) of the L-site effective propagation model with the
/// channel on the last site; the stack leaves the model when it is reset or dissipated.
/// Feedback: -i[H, rho] + Gamma (Q rho Q - rho), Q = 1 - |L><L|.
/// Dissipation: non-Hermitian H - i Gamma n_L.
std::vector<double> effective_leakage_series(int length, ChannelKind kind, double rate, double j_prop,
                                             std::span<const double> t_grid, double tolerance = 1e-10);

/// Column-stacked Lindblad generator: vec(d rho/dt) = S vec(rho).
DenseMatrix lindblad_superoperator(const DenseMatrix& h, const std::vector<DenseMatrix>& jumps);

}  // namespace lru
