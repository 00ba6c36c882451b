#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "fkeit/diffusion.hpp"
#include "fkeit/feynman_kac.hpp"
#include "fkeit/linalg.hpp"
#include "fkeit/media.hpp"
#include "fkeit/stats.hpp"

namespace fkeit {

/// Annealed mean-square displacement request: free-space paths from the
/// origin, averaged over medium realizations and paths.
struct MsdRequest {
  MediumSpec medium;
  double t = 16.0;
  int n_realizations = 1;
  std::int64_t n_paths_per_realization = 10000;
  StepperConfig cfg;
  std::uint64_t seed = 1;
  int workers = 0;
  int chunk_size = 1024;

  /// Exactly unbiased control variate: the same Gaussian increments driven
  /// through a constant reference medium; E[(Z.xi)^2 - 2 kappa_ref t] = 0.
  bool control_variate = true;
  std::int64_t pilot_paths = 4096;  // for the control-variate coefficient
};

struct EffectiveTensorEstimate {
  Mat matrix;
  Mat entry_stderr;
  double t = 0.0;
  int n_realizations = 0;
  std::int64_t n_paths = 0;
  std::uint64_t seed = 0;

  std::array<double, kMaxDim> eigenvalues() const { return symmetric_eigenvalues(matrix); }
};

/// xi.kappa*.xi estimate from E (X_t.xi)^2 / (2t) under the annealed measure.
McEstimate estimate_msd_direction(const MsdRequest& req, const Vec& xi);

/// Diagonal entries from coordinate directions, off-diagonals by polarization
/// xi = (e_i+e_j)/sqrt(2) applied to the same quadratic-form estimator.
EffectiveTensorEstimate estimate_effective_tensor(const MsdRequest& req);

struct ConvergenceRow {
  double t;
  double mean;
  double stderr_;
  double reference;
  double abs_error;
};
struct ConvergenceCurve {
  std::vector<ConvergenceRow> rows;
  double fitted_slope = 0.0;  // least-squares slope of log|err| vs log t
};

/// One MSD estimate per horizon, all horizons checkpointed along the same
/// paths (common budgets, common randomness across the grid).
ConvergenceCurve convergence_curve(const MsdRequest& req, const Vec& xi,
                                   const std::vector<double>& t_grid, double reference);

struct EpsilonSweepRow {
  double epsilon;
  std::vector<McEstimate> currents;
  double max_deviation = 0.0;     // max_l |J_l - J*_l|
  double pooled_stderr = 0.0;
};
struct EpsilonSweepResult {
  std::vector<EpsilonSweepRow> rows;
  std::vector<double> reference_currents;  // homogenized FD currents J*
  Mat kappa_star;
  double kappa_star_iso = 0.0;
};

struct EpsilonSweepOptions {
  int quadrature_nodes = 8;
  int fd_nr = 192;
  int fd_ntheta = 384;
  int fd_tensor_cells = 256;
  double fd_tensor_period = 16.0;
  std::optional<Mat> kappa_star_override;
};

/// Mixed-model electrode currents for one realization per epsilon, against
/// the homogenized currents of the constant-kappa* solve.
EpsilonSweepResult epsilon_sweep_currents(const BvpSpec& mixed_spec,
                                          const std::vector<double>& epsilon_grid,
                                          const McConfig& mc, const StepperConfig& cfg,
                                          const EpsilonSweepOptions& opts = {});

}  // namespace fkeit
