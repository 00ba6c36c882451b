#pragma once

#include <functional>
#include <vector>

#include "fkeit/geometry.hpp"
#include "fkeit/linalg.hpp"
#include "fkeit/media.hpp"

namespace fkeit {

/// Boundary-fitted polar grid over the disk (theta in [0,2pi), periodic) or
/// the lower half-disk (theta in [pi,2pi], the flat diameter is boundary).
/// Cell centers at r_i=(i-1/2)dr, theta_j=(j-1/2)dtheta.
struct PolarGrid {
  double radius = 1.0;
  int nr = 128;
  int ntheta = 256;
  bool half = false;

  double dr() const { return radius / nr; }
  double dtheta() const {
    return (half ? std::numbers::pi : 2.0 * std::numbers::pi) / ntheta;
  }
  double theta0() const { return half ? std::numbers::pi : 0.0; }
  int cells() const { return nr * ntheta; }
};

struct FdBoundary {
  enum class Kind { dirichlet, flux, robin };
  Kind kind = Kind::flux;
  std::function<double(const Vec&)> data;  // dirichlet value or flux density f
  std::function<double(const Vec&)> g;     // robin coefficient; empty means 0

  static FdBoundary dirichlet(std::function<double(const Vec&)> phi) {
    return {Kind::dirichlet, std::move(phi), nullptr};
  }
  static FdBoundary flux(std::function<double(const Vec&)> f) {
    return {Kind::flux, std::move(f), nullptr};
  }
  static FdBoundary robin(std::function<double(const Vec&)> f, std::function<double(const Vec&)> g) {
    return {Kind::robin, std::move(f), std::move(g)};
  }
};

/// Robin data of an electrode layout, evaluated pointwise on the boundary.
FdBoundary fd_boundary_from_layout(const ElectrodeLayout& layout);

/// -div(kappa grad u) + alpha u = source, with the boundary data below.
struct PolarProblem {
  PolarGrid grid;
  std::function<double(const Vec&)> kappa;   // isotropic conductivity
  double alpha = 0.0;                        // zero-order coefficient
  std::function<double(const Vec&)> source;  // optional volume source
  FdBoundary arc;                            // r = R
  FdBoundary flat;                           // the diameter (half grids only)
  bool zero_mean = false;                    // pure-Neumann gauge: area mean 0
};

class PolarFdSolution {
 public:
  PolarGrid grid;
  std::vector<double> values;  // cell-centered
  double residual = 0.0;
  int iterations = 0;

  double value_at(const Vec& x) const;  // bilinear in (r, theta)
  double area_mean() const;

  /// Electrode currents J_l = |E_l|^-1 int_{E_l} (f - g u) dsigma using the
  /// same face closure as the solve; also reports the face-resolved measures.
  struct Currents {
    std::vector<double> current;
    std::vector<double> resolved_measure;
  };
  Currents electrode_currents(const ElectrodeLayout& layout) const;

 private:
  friend PolarFdSolution fd_solve_polar(const PolarProblem&);
  // Face closures retained for current reconstruction.
  std::function<double(const Vec&)> kappa_;
  FdBoundary arc_;
  FdBoundary flat_;
};

/// 5-point finite-volume solve with harmonic face averaging; rejects
/// incompatible pure-Neumann data. Residual <= 1e-10 relative or throws.
PolarFdSolution fd_solve_polar(const PolarProblem& problem);

/// Periodic corrector problems on an n x n box of side `period`, one per
/// coordinate direction; returns the symmetrized averaged-flux tensor.
/// The field is sampled at cell centers; isotropic or diagonal.
Mat fd_effective_tensor(const ConductivityField& field, double period, int n_cells);
Mat fd_effective_tensor(const std::function<Vec(const Vec&)>& diag_kappa, double period,
                        int n_cells, int dim);

/// Classical laminate formulas.
enum class LaminateDirection { parallel, perpendicular };
double layered_effective_closed_form(const std::vector<std::pair<double, double>>& value_fraction,
                                     LaminateDirection direction);

/// Closed forms used as frozen oracles.
/// Mean boundary local time of the reflected isotropic diffusion on a
/// half-space started on the boundary, Revuz-normalized: 2 sqrt(t/(pi kappa)).
double reflected_local_time_mean(double kappa, double t);

}  // namespace fkeit
