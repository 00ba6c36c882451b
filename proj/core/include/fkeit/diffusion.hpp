#pragma once

#include <cstdint>
#include <functional>
#include <vector>

#include "fkeit/geometry.hpp"
#include "fkeit/linalg.hpp"
#include "fkeit/media.hpp"
#include "fkeit/rng.hpp"

namespace fkeit {

enum class PathStatus { running, absorbed, truncated };
enum class BoundaryRole { reflect, absorb };

struct BoundaryConditions {
  BoundaryRole accessible = BoundaryRole::reflect;
  BoundaryRole inaccessible = BoundaryRole::reflect;

  BoundaryRole role(BoundaryPart part) const {
    return part == BoundaryPart::accessible ? accessible : inaccessible;
  }
  static BoundaryConditions reflect_all() { return {BoundaryRole::reflect, BoundaryRole::reflect}; }
  static BoundaryConditions absorb_all() { return {BoundaryRole::absorb, BoundaryRole::absorb}; }
  static BoundaryConditions mixed() { return {BoundaryRole::reflect, BoundaryRole::absorb}; }
};

/// Path bookkeeping. local_time is normalized so that its Revuz measure is
/// the surface measure (the convention of the payoff formulas): a mirror
/// reflection of penetration depth p adds 2p/(nu.kappa.nu).
struct PathState {
  double t = 0.0;
  Vec x;
  double local_time = 0.0;            // boundary local time L
  double interface_local_time = 0.0;  // diagnostic L0 at two-phase interfaces
  double robin_integral = 0.0;        // A = int g dL
  double payoff = 0.0;
  PathStatus status = PathStatus::running;
  int clamp_count = 0;

  double gauge() const { return std::exp(-robin_integral); }
};

struct StepperConfig {
  double h = 1e-4;
  double max_time = 1e9;
  double r_snap = 0.0;  // 0: auto, 10*sqrt(h*c) with c the ellipticity bound
  double tol_gauge = 1e-8;
  int max_boundary_iterations = 8;
  // Half-width of the exact-skew band around isolated interfaces, in units
  // of the worst-case step deviation sqrt(2 c h); 0 disables the exact
  // sampler and falls back to the per-crossing event rule everywhere.
  double skew_band_sigmas = 5.0;
};

/// What a path accumulates. Boundary flux data are evaluated only at
/// reflection events, so std::function costs nothing measurable.
struct Functional {
  enum class Kind { none, dirichlet, boundary_flux, robin_killed, cem, mixed_cem };
  Kind kind = Kind::none;
  std::function<double(const Vec&)> boundary_data;  // phi (dirichlet) or f (flux kinds)
  const ElectrodeLayout* layout = nullptr;          // cem kinds
  double alpha = 0.0;                               // robin_killed decay
  bool zero_gauge = false;  // test hook: accumulate f dL with the gauge pinned at 1

  static Functional none() { return {}; }
  static Functional dirichlet(std::function<double(const Vec&)> phi);
  static Functional boundary_flux(std::function<double(const Vec&)> f);
  static Functional robin_killed(std::function<double(const Vec&)> f, double alpha);
  static Functional cem(const ElectrodeLayout& layout);
  static Functional mixed_cem(const ElectrodeLayout& layout);
};

struct PathEvent {
  double t;
  Vec x;
  enum class Kind { step, reflect, cross, absorb, clamp } kind;
  double d_local_time;
};

/// Per-path simulation context: immutable references plus flags and caches
/// hoisted out of the step loop.
class StepContext {
 public:
  StepContext(const ConductivityField& field, const Domain& domain, BoundaryConditions bc,
              const Functional& functional, const StepperConfig& cfg);

  const ConductivityField& field;
  const Domain& domain;
  BoundaryConditions bc;
  const Functional& functional;
  StepperConfig cfg;

  bool has_boundary = false;
  bool has_interfaces = false;
  bool scalar_vol = false;   // piecewise isotropic: steps use a scalar volatility
  bool constant_factor = false;
  bool has_drift = false;
  double sqrt_h = 0.0;
  double r_snap = 0.0;
  double interface_band = 0.0;
  double gauge_cut = 0.0;    // A threshold from tol_gauge
  Mat factor_const;          // cached B for constant media
  Vec drift_const;
  std::vector<PathEvent>* event_log = nullptr;
};

/// Co-normal mirror reflection. Returns the interior mirror image and the
/// boundary local-time increment dL = 2p/(nu.kappa.nu), the increment that
/// realizes the -kappa.nu dL reflection term of the path decomposition
/// (displacement x_in - x_out = -dL * kappa.nu).
struct ReflectionResult {
  Vec x_in;
  double d_local_time = 0.0;
};
ReflectionResult apply_reflection(const Vec& x_out, const BoundaryFrame& frame, const Mat& kappa);

/// Exact one-step transition of the unit-volatility skew walk with
/// P(positive excursion) = q_pos, from signed position y0, over a step of
/// standard deviation sqrt_h. The transition density is the classical
/// image-Gaussian mixture; it is sampled by inverse CDF plus a rejection
/// branch for the defect side, so a step near an isolated flat interface
/// carries no time-discretization error at all.
double skew_transition(double y0, double q_pos, double sqrt_h, Philox& rng);

/// Physical-frame wrapper: signed distance d0 (positive side convention of
/// NearInterface), normal phase values, step h. Returns the new signed
/// distance.
double skew_transition_physical(double d0, double kappa_n_neg, double kappa_n_pos, double h,
                                Philox& rng);

/// Skew resolution of a two-phase interface crossing. Mapping each side to
/// unit volatility turns the crossing into a textbook skew-walk event: side j
/// is chosen with probability sqrt(kappa_n_j) / (sqrt(kappa_n_1)+sqrt(kappa_n_2))
/// and the normal depth is rescaled by sqrt(kappa_n_j / kappa_n_from). The
/// physical exit law over a symmetric interval is then kappa_j/(kappa_1+kappa_2).
struct CrossingResult {
  Vec x_new;
  double d_interface_local_time = 0.0;
  bool ended_negative_side = false;
};
CrossingResult apply_interface_crossing(const Vec& x_from, const Vec& x_prop,
                                        const InterfaceHit& hit, Philox& rng);

/// One Euler increment with sequential resolution of interface crossings and
/// boundary interactions (at most cfg.max_boundary_iterations, then clamp).
/// `sign` flips the Gaussian increments for antithetic pairs.
void step(PathState& state, const StepContext& ctx, Philox& rng, double sign = 1.0);

/// Runs a path from x0 until absorption, gauge convergence or t >= max_time.
PathState simulate_path(const Vec& x0, const StepContext& ctx, Philox& rng, double sign = 1.0);

/// Continues an in-flight path under the same stopping rules; simulate_path
/// is init + continue. Lets estimators checkpoint payoffs at nested horizons.
void continue_path(PathState& state, const StepContext& ctx, Philox& rng, double sign = 1.0);

/// Spec-shaped convenience overloads used by tests; they build a context per call.
PathState step(const PathState& state, const ConductivityField& field, const Domain& domain,
               BoundaryConditions bc, const StepperConfig& cfg, Philox& rng);
PathState simulate_path(const Vec& x0, const ConductivityField& field, const Domain& domain,
                        BoundaryConditions bc, const Functional& functional,
                        const StepperConfig& cfg, Philox& rng);

}  // namespace fkeit
