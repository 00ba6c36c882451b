#pragma once

#include <optional>
#include <vector>

#include "fkeit/errors.hpp"
#include "fkeit/linalg.hpp"

namespace fkeit {

enum class DomainKind { half_space, hemisphere, ball, whole_space };
enum class BoundaryPart { accessible, inaccessible };

/// Analytic computational domains. The half-space and hemisphere sit below
/// the hyperplane x_d = 0; the hemisphere's flat disk is the accessible
/// boundary, the spherical cap the inaccessible one.
struct Domain {
  DomainKind kind = DomainKind::ball;
  int dim = 2;
  double radius = 1.0;  // bounded kinds only

  static Domain half_space(int d) { return {DomainKind::half_space, d, 0.0}; }
  static Domain hemisphere(int d, double r) { return {DomainKind::hemisphere, d, r}; }
  static Domain ball(int d, double r) { return {DomainKind::ball, d, r}; }
  static Domain whole_space(int d) { return {DomainKind::whole_space, d, 0.0}; }

  bool has_boundary() const { return kind != DomainKind::whole_space; }
  bool has_inaccessible_part() const { return kind == DomainKind::hemisphere; }
};

struct BoundaryFrame {
  Vec point;
  Vec normal;  // outward unit normal
  BoundaryPart part = BoundaryPart::accessible;
};

struct BoundaryCrossing {
  double s = 0.0;  // segment parameter in (0, 1]
  Vec point;
  BoundaryPart part = BoundaryPart::accessible;
};

/// Negative inside D, zero on the boundary, positive outside. Exact for the
/// analytic shapes. whole_space has no boundary and rejects the query.
double signed_distance(const Domain& domain, const Vec& x);

/// Closest boundary point with outward normal and partition label for x
/// within distance r_snap of the boundary. Ties at the hemisphere rim prefer
/// the accessible part (measure-zero event).
BoundaryFrame nearest_boundary_frame(const Domain& domain, const Vec& x, double r_snap);

/// First boundary crossing along the segment x0 -> x1, if any. Entry point is
/// the exact analytic intersection (sphere: quadratic root, plane: linear).
std::optional<BoundaryCrossing> first_boundary_crossing(const Domain& domain, const Vec& x0,
                                                        const Vec& x1);

/// Electrode patch: chordal ball {y in boundary part 1 : |y - center| < radius}.
/// On a hyperplane this is a (d-1)-disk, on a circle an arc.
struct Electrode {
  Vec center;
  double radius = 0.0;
};

struct ElectrodeLayout {
  std::vector<Electrode> electrodes;
  std::vector<double> contact_impedance;  // z_l > 0
  std::vector<double> voltages;           // U_l

  int count() const { return static_cast<int>(electrodes.size()); }
  double voltage_sum() const {
    double s = 0.0;
    for (double u : voltages) s += u;
    return s;
  }
};

/// Robin data (f, g) of the electrode model at a boundary point:
/// (U_l/z_l, 1/z_l) on electrode l, (0, 0) off all electrodes.
/// Rejects points on the inaccessible part.
struct RobinData {
  double f = 0.0;
  double g = 0.0;
};
RobinData electrode_eval(const ElectrodeLayout& layout, const BoundaryFrame& y);

/// Surface measure |E_l| of electrode l on the given domain's boundary.
double electrode_measure(const Domain& domain, const Electrode& e);

/// Midpoint quadrature nodes on electrode l; weights sum to |E_l|.
struct SurfaceNode {
  Vec point;
  double weight = 0.0;
};
std::vector<SurfaceNode> electrode_quadrature(const Domain& domain, const Electrode& e,
                                              int nodes);

/// Midpoint quadrature of the whole boundary (bounded domains) or of the
/// accessible flat part (hemisphere). Used for compatibility checks and the
/// layout integral invariants.
std::vector<SurfaceNode> boundary_quadrature(const Domain& domain, BoundaryPart part, int nodes);

/// Validates patch containment in the accessible part, pairwise disjointness
/// and impedance bounds. Throws ConfigError with the offending index.
void validate_layout(const Domain& domain, const ElectrodeLayout& layout);

}  // namespace fkeit
