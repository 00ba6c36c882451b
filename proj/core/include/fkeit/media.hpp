#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "fkeit/errors.hpp"
#include "fkeit/linalg.hpp"

namespace fkeit {

enum class MediumKind { constant, smooth, two_phase, checkerboard, layered, poisson_spheres };
enum class SmoothFamily { affine_iso, sinusoidal_iso };
enum class InterfaceShape { hyperplane, sphere };
enum class LayerLaw { alternating, iid };

/// Analytic surface splitting space into phase 1 (level < 0) and phase 2
/// (level > 0). Hyperplane: level = n.x - offset; sphere: level = |x-c| - rho.
struct InterfaceDescriptor {
  InterfaceShape shape = InterfaceShape::hyperplane;
  Vec anchor;          // unit normal (hyperplane) or center (sphere)
  double offset = 0.0; // hyperplane offset or sphere radius
  double kappa1 = 1.0; // isotropic value on level < 0
  double kappa2 = 1.0; // isotropic value on level > 0

  double level(const Vec& x) const {
    if (shape == InterfaceShape::hyperplane) return dot(anchor, x) - offset;
    return norm(x - anchor) - offset;
  }
};

struct MediumSpec {
  MediumKind kind = MediumKind::constant;
  int dim = 2;
  double ellipticity_bound = 16.0;  // c with spectrum(kappa) in [1/c, c]

  // constant
  Mat constant_value;

  // smooth isotropic families
  SmoothFamily family = SmoothFamily::affine_iso;
  double smooth_base = 1.0;
  Vec smooth_gradient;      // affine:  s(x) = base + gradient.x
  double smooth_amplitude = 0.0;
  Vec smooth_wavevector;    // sinusoidal: s(x) = base + amp*sin(k.x)

  // two_phase
  InterfaceDescriptor interface;

  // checkerboard
  double cell_size = 1.0;
  std::vector<Mat> cell_values;
  std::vector<double> cell_probabilities;

  // layered
  int layer_axis = 0;
  double layer_width = 1.0;
  std::vector<double> layer_values;
  LayerLaw layer_law = LayerLaw::alternating;

  // poisson_spheres
  double poisson_intensity = 0.0;
  double poisson_radius = 0.5;
  double poisson_kappa_in = 1.0;
  double poisson_kappa_out = 1.0;

  static MediumSpec constant(const Mat& kappa, double bound = 0.0);
  static MediumSpec constant_scalar(int dim, double kappa);
  static MediumSpec two_phase(const InterfaceDescriptor& iface, int dim);
  static MediumSpec checkerboard_scalar(int dim, double cell, std::vector<double> values,
                                        std::vector<double> probabilities);
  static MediumSpec layered_alternating(int dim, int axis, double width,
                                        std::vector<double> values);

  /// Bounds sanity: every value the spec can produce must have spectrum in
  /// [1/c, c]. Throws ConfigError naming the offending field.
  void validate() const;
};

/// Local interface environment of a point, physical frame.
struct NearInterface {
  double signed_distance = 0.0;  // positive on the positive-level side
  Vec normal;                    // unit, toward the positive side
  Vec foot;                      // nearest interface point
  double kappa_n_neg = 0.0;      // nu.kappa.nu on the negative side
  double kappa_n_pos = 0.0;
};

enum class InterfaceProximity { none, isolated, crowded };

/// First interface crossing of a segment, in the rescaled (physical) frame.
struct InterfaceHit {
  double s = 0.0;      // segment parameter in (0, 1]
  Vec point;           // crossing point
  Vec normal;          // unit normal, oriented toward the positive-level side
  double kappa_n_neg = 0.0;  // nu.kappa.nu on the negative-level side
  double kappa_n_pos = 0.0;  // nu.kappa.nu on the positive-level side
};

/// A realization of the conductivity ensemble: a deterministic function of
/// (spec, seed), lazily evaluable anywhere via counter-based hashing of cell
/// indices. epsilon rescales the microstructure, kappa(x) = kappa_1(x/eps).
class ConductivityField {
 public:
  ConductivityField(MediumSpec spec, std::uint64_t seed, double epsilon);

  const MediumSpec& spec() const { return spec_; }
  std::uint64_t realization_seed() const { return seed_; }
  double epsilon() const { return epsilon_; }
  int dim() const { return spec_.dim; }

  Mat kappa_at(const Vec& x) const;

  /// Lower-triangular B with B Bᵀ = 2 kappa(x). The law of the martingale
  /// part only depends on B Bᵀ, so the triangular factor is as good as the
  /// symmetric square root and cheaper.
  Mat diffusion_factor(const Vec& x) const;

  bool has_analytic_drift() const;
  /// i-th component sums the row divergence of kappa. Piecewise media have
  /// no pointwise drift; interface crossings carry that part of the dynamics.
  Vec drift_at(const Vec& x) const;

  /// Piecewise-constant isotropic media can be stepped with a scalar
  /// volatility; this is the hot path of the simulator.
  bool piecewise_isotropic() const;
  double scalar_kappa_at(const Vec& x) const;

  bool has_interfaces() const;
  std::optional<InterfaceHit> first_interface_crossing(const Vec& x0, const Vec& x1) const;

  /// Classifies the band around x: no contrast interface within `band`, one
  /// isolated flat-ish interface (filled into *out), or several (corners,
  /// crowded geometry) where only the event-based crossing rule applies.
  InterfaceProximity probe_interface(const Vec& x, double band, NearInterface* out) const;

  ConductivityField rescaled(double epsilon_new) const {
    return ConductivityField(spec_, seed_, epsilon_new);
  }

 private:
  MediumSpec spec_;
  std::uint64_t seed_ = 0;
  double epsilon_ = 1.0;

  double smooth_value(const Vec& y) const;      // unscaled frame
  Mat checkerboard_value(const Vec& y) const;
  double layered_value(double coord) const;
  int checkerboard_pick(const std::int64_t* idx, int n) const;
  bool poisson_inside(const Vec& y) const;
  void poisson_centers_near(const Vec& y, std::vector<Vec>& out) const;
};

inline ConductivityField realize(const MediumSpec& spec, std::uint64_t seed, double epsilon) {
  return ConductivityField(spec, seed, epsilon);
}

/// Central finite-difference divergence rows, the fallback the drift
/// contract names; step defaults to cbrt(machine eps)*max(1,|x|).
Vec drift_at_finite_difference(const ConductivityField& field, const Vec& x, double delta = 0.0);

}  // namespace fkeit
