#pragma once

#include <cstdint>
#include <functional>
#include <vector>

#include "fkeit/diffusion.hpp"
#include "fkeit/geometry.hpp"
#include "fkeit/media.hpp"
#include "fkeit/stats.hpp"

namespace fkeit {

enum class BvpKind { dirichlet, continuum, robin_killed, cem, mixed_cem };

/// A boundary value problem for the conductivity equation, in the five
/// flavors the estimators support.
struct BvpSpec {
  BvpKind kind = BvpKind::dirichlet;
  Domain domain;
  MediumSpec medium;
  std::uint64_t realization_seed = 0;
  double epsilon = 1.0;

  std::function<double(const Vec&)> boundary_data;  // dirichlet phi or flux f
  double alpha = 0.0;                               // robin_killed only
  ElectrodeLayout layout;                           // cem kinds

  ConductivityField realize_field() const {
    return ConductivityField(medium, realization_seed, epsilon);
  }
};

struct McConfig {
  std::int64_t n_paths = 10000;  // trajectories; antithetic pairs count as 2
  bool antithetic = true;
  int chunk_size = 1024;  // sample units per reduction chunk (portability contract)
  int workers = 0;        // 0: hardware concurrency; FKEIT_WORKERS overrides
  std::uint64_t seed = 1;
};

/// Chunked deterministic Monte Carlo driver: unit_payoff(i) must be a pure
/// function of the unit index. Results are bit-identical for fixed
/// (seed, chunk_size) at any worker count.
McEstimate run_mc(std::int64_t n_units, const McConfig& mc,
                  const std::function<double(std::int64_t)>& unit_payoff);

/// u(x) = E_x phi(X_tau), paths absorbed on the whole boundary.
McEstimate estimate_dirichlet(const Vec& x, const BvpSpec& spec, const McConfig& mc,
                              const StepperConfig& cfg);

/// Zero-mean Neumann solution u(x) = lim_t E_x int_0^t f dL, truncated at an
/// adaptive horizon: T doubles until the common-random-numbers increment
/// |u_T - u_{T/2}| falls under tol_trunc_factor * stderr.
struct ContinuumOptions {
  double initial_horizon = 0.0;  // 0: c * R^2 heuristic
  double tol_trunc_factor = 0.25;
  std::int64_t pilot_paths = 0;  // 0: n_paths / 8
};
McEstimate estimate_continuum(const Vec& x, const BvpSpec& spec, const McConfig& mc,
                              const StepperConfig& cfg, const ContinuumOptions& opts = {});

/// u(x) = E_x int_0^inf e^{-alpha t} f dL with an analytic tail-bound horizon.
McEstimate estimate_robin_killed(const Vec& x, const BvpSpec& spec, const McConfig& mc,
                                 const StepperConfig& cfg, double tail_tolerance = 1e-4);

/// Electrode-model potential u(x) = E_x int e_g f dL; paths stop once the
/// gauge drops under cfg.tol_gauge.
McEstimate estimate_cem(const Vec& x, const BvpSpec& spec, const McConfig& mc,
                        const StepperConfig& cfg);

/// Mixed problem: reflect on the accessible part, absorb on the rest.
McEstimate estimate_mixed_cem(const Vec& x, const BvpSpec& spec, const McConfig& mc,
                              const StepperConfig& cfg);

/// Mean current densities J_l = |E_l|^{-1} int_{E_l} (f - g u) dsigma from
/// boundary-started potential estimates at midpoint quadrature nodes.
std::vector<McEstimate> estimate_electrode_currents(const BvpSpec& spec, const McConfig& mc,
                                                    const StepperConfig& cfg,
                                                    int nodes_per_electrode = 0);

/// Physics preconditions (grounding, compatibility, domain/kind fit).
/// Throws ConfigError naming the violated condition.
void validate_bvp(const BvpSpec& spec);

}  // namespace fkeit
