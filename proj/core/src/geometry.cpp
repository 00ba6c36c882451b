#include "fkeit/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

namespace fkeit {

namespace {

double tangential_norm(const Vec& x, int d) {
  double s = 0.0;
  for (int i = 0; i + 1 < d; ++i) s += x[i] * x[i];
  return std::sqrt(s);
}

}  // namespace

double signed_distance(const Domain& domain, const Vec& x) {
  const int d = domain.dim;
  switch (domain.kind) {
    case DomainKind::half_space:
      return x[d - 1];
    case DomainKind::ball:
      return norm(x) - domain.radius;
    case DomainKind::hemisphere: {
      const double r = norm(x);
      const double xd = x[d - 1];
      if (r <= domain.radius && xd <= 0.0) return std::max(r - domain.radius, xd);
      if (xd >= 0.0) {
        const double rim = std::max(tangential_norm(x, d) - domain.radius, 0.0);
        return std::hypot(rim, xd);
      }
      return r - domain.radius;
    }
    case DomainKind::whole_space:
      throw UnsupportedQueryError("signed_distance: whole_space has no boundary");
  }
  return 0.0;
}

BoundaryFrame nearest_boundary_frame(const Domain& domain, const Vec& x, double r_snap) {
  const int d = domain.dim;
  BoundaryFrame frame;
  double dist = 0.0;
  switch (domain.kind) {
    case DomainKind::whole_space:
      throw UnsupportedQueryError("nearest_boundary_frame: whole_space has no boundary");
    case DomainKind::half_space: {
      frame.point = x;
      frame.point[d - 1] = 0.0;
      frame.normal = unit_vec(d, d - 1);
      frame.part = BoundaryPart::accessible;
      dist = std::abs(x[d - 1]);
      break;
    }
    case DomainKind::ball: {
      const double r = norm(x);
      if (r == 0.0) {
        frame.point = unit_vec(d, 0) * domain.radius;
        frame.normal = unit_vec(d, 0);
      } else {
        frame.normal = (1.0 / r) * x;
        frame.point = domain.radius * frame.normal;
      }
      frame.part = BoundaryPart::accessible;
      dist = std::abs(r - domain.radius);
      break;
    }
    case DomainKind::hemisphere: {
      const double r = norm(x);
      const double rt = tangential_norm(x, d);
      const double xd = x[d - 1];
      // Flat-disk candidate, valid when the foot lands inside the disk.
      bool flat_valid = rt <= domain.radius;
      double flat_dist = std::abs(xd);
      // Cap candidate, valid when the radial foot lies on the lower cap.
      bool cap_valid = xd <= 0.0 && r > 0.0;
      double cap_dist = std::abs(r - domain.radius);
      if (flat_valid && (!cap_valid || flat_dist <= cap_dist)) {
        frame.point = x;
        frame.point[d - 1] = 0.0;
        frame.normal = unit_vec(d, d - 1);
        frame.part = BoundaryPart::accessible;
        dist = flat_dist;
      } else if (cap_valid) {
        frame.normal = (1.0 / r) * x;
        frame.point = domain.radius * frame.normal;
        frame.part = BoundaryPart::inaccessible;
        dist = cap_dist;
      } else {
        // Above the plane, beyond the rim: snap to the rim circle, which
        // belongs to the closure of both parts; the tie rule picks part 1.
        Vec rim(d);
        if (rt > 0.0)
          for (int i = 0; i + 1 < d; ++i) rim[i] = x[i] * (domain.radius / rt);
        else
          rim[0] = domain.radius;
        frame.point = rim;
        frame.normal = unit_vec(d, d - 1);
        frame.part = BoundaryPart::accessible;
        dist = std::hypot(std::max(rt - domain.radius, 0.0), xd);
      }
      break;
    }
  }
  if (dist > r_snap)
    throw UnsupportedQueryError("nearest_boundary_frame: point outside the snap band");
  return frame;
}

namespace {

// Smallest s in (0,1] with |x0 + s*dx| = R, or nullopt.
std::optional<double> sphere_crossing(const Vec& x0, const Vec& dx, double R) {
  const double a = dot(dx, dx);
  if (a == 0.0) return std::nullopt;
  const double b = 2.0 * dot(x0, dx);
  const double c = dot(x0, x0) - R * R;
  const double disc = b * b - 4.0 * a * c;
  if (disc < 0.0) return std::nullopt;
  const double sq = std::sqrt(disc);
  for (double s : {(-b - sq) / (2.0 * a), (-b + sq) / (2.0 * a)})
    if (s > 0.0 && s <= 1.0) return s;
  return std::nullopt;
}

}  // namespace

std::optional<BoundaryCrossing> first_boundary_crossing(const Domain& domain, const Vec& x0,
                                                        const Vec& x1) {
  const int d = domain.dim;
  const Vec dx = x1 - x0;
  switch (domain.kind) {
    case DomainKind::whole_space:
      return std::nullopt;
    case DomainKind::half_space: {
      const double a0 = x0[d - 1], a1 = x1[d - 1];
      if (!(a0 < 0.0 && a1 >= 0.0)) return std::nullopt;
      double s = a0 / (a0 - a1);
      BoundaryCrossing hit;
      hit.s = s;
      hit.point = x0 + s * dx;
      hit.point[d - 1] = 0.0;
      hit.part = BoundaryPart::accessible;
      return hit;
    }
    case DomainKind::ball: {
      auto s = sphere_crossing(x0, dx, domain.radius);
      if (!s) return std::nullopt;
      BoundaryCrossing hit;
      hit.s = *s;
      hit.point = x0 + *s * dx;
      hit.part = BoundaryPart::accessible;
      return hit;
    }
    case DomainKind::hemisphere: {
      std::optional<BoundaryCrossing> best;
      if (auto s = sphere_crossing(x0, dx, domain.radius)) {
        Vec p = x0 + *s * dx;
        if (p[d - 1] <= 0.0) {
          best = BoundaryCrossing{*s, p, BoundaryPart::inaccessible};
        }
      }
      const double a0 = x0[d - 1], a1 = x1[d - 1];
      if (a0 < 0.0 && a1 >= 0.0) {
        double s = a0 / (a0 - a1);
        Vec p = x0 + s * dx;
        p[d - 1] = 0.0;
        if (tangential_norm(p, d) <= domain.radius && (!best || s < best->s))
          best = BoundaryCrossing{s, p, BoundaryPart::accessible};
      }
      return best;
    }
  }
  return std::nullopt;
}

RobinData electrode_eval(const ElectrodeLayout& layout, const BoundaryFrame& y) {
  if (y.part == BoundaryPart::inaccessible)
    throw UnsupportedQueryError("electrode_eval: point lies on the inaccessible boundary");
  for (int l = 0; l < layout.count(); ++l) {
    if (norm(y.point - layout.electrodes[static_cast<std::size_t>(l)].center) <
        layout.electrodes[static_cast<std::size_t>(l)].radius) {
      const double z = layout.contact_impedance[static_cast<std::size_t>(l)];
      return {layout.voltages[static_cast<std::size_t>(l)] / z, 1.0 / z};
    }
  }
  return {0.0, 0.0};
}

double electrode_measure(const Domain& domain, const Electrode& e) {
  const int d = domain.dim;
  switch (domain.kind) {
    case DomainKind::half_space:
    case DomainKind::hemisphere:
      // (d-1)-ball in the hyperplane.
      if (d == 2) return 2.0 * e.radius;
      if (d == 3) return std::numbers::pi * e.radius * e.radius;
      return 2.0 * e.radius;  // d == 1: a point electrode is out of scope
    case DomainKind::ball: {
      if (d == 2) {
        const double half_angle = 2.0 * std::asin(std::min(1.0, e.radius / (2.0 * domain.radius)));
        return 2.0 * domain.radius * half_angle;
      }
      if (d == 3) {
        // Spherical cap with chord radius r has area pi r^2 exactly.
        return std::numbers::pi * e.radius * e.radius;
      }
      throw UnsupportedQueryError("electrode_measure: unsupported dimension");
    }
    case DomainKind::whole_space:
      throw UnsupportedQueryError("electrode_measure: whole_space has no boundary");
  }
  return 0.0;
}

std::vector<SurfaceNode> electrode_quadrature(const Domain& domain, const Electrode& e,
                                              int nodes) {
  const int d = domain.dim;
  std::vector<SurfaceNode> out;
  if (nodes < 1) nodes = 1;
  if ((domain.kind == DomainKind::half_space || domain.kind == DomainKind::hemisphere) && d == 2) {
    const double len = 2.0 * e.radius, w = len / nodes;
    for (int i = 0; i < nodes; ++i) {
      Vec p = e.center;
      p[0] = e.center[0] - e.radius + (i + 0.5) * w;
      p[1] = 0.0;
      out.push_back({p, w});
    }
    return out;
  }
  if (domain.kind == DomainKind::ball && d == 2) {
    const double theta_c = std::atan2(e.center[1], e.center[0]);
    const double half_angle = 2.0 * std::asin(std::min(1.0, e.radius / (2.0 * domain.radius)));
    const double w = 2.0 * half_angle * domain.radius / nodes;
    for (int i = 0; i < nodes; ++i) {
      const double th = theta_c - half_angle + (i + 0.5) * (2.0 * half_angle / nodes);
      out.push_back({Vec{domain.radius * std::cos(th), domain.radius * std::sin(th)}, w});
    }
    return out;
  }
  if ((domain.kind == DomainKind::half_space || domain.kind == DomainKind::hemisphere) && d == 3) {
    // Concentric-ring midpoints on the planar disk patch.
    int n_r = std::max(1, static_cast<int>(std::round(std::sqrt(nodes / 2.0))));
    for (int i = 0; i < n_r; ++i) {
      const double r0 = e.radius * i / n_r, r1 = e.radius * (i + 1) / n_r;
      const double rm = 0.5 * (r0 + r1);
      int n_t = std::max(1, static_cast<int>(std::round(2.0 * nodes * (i + 0.5) / (n_r * n_r))));
      const double ring_area = std::numbers::pi * (r1 * r1 - r0 * r0);
      for (int j = 0; j < n_t; ++j) {
        const double th = 2.0 * std::numbers::pi * (j + 0.5) / n_t;
        Vec p = e.center;
        p[0] += rm * std::cos(th);
        p[1] += rm * std::sin(th);
        p[2] = 0.0;
        out.push_back({p, ring_area / n_t});
      }
    }
    return out;
  }
  throw UnsupportedQueryError("electrode_quadrature: unsupported domain/dimension");
}

std::vector<SurfaceNode> boundary_quadrature(const Domain& domain, BoundaryPart part, int nodes) {
  const int d = domain.dim;
  std::vector<SurfaceNode> out;
  if (domain.kind == DomainKind::ball && d == 2) {
    const double w = 2.0 * std::numbers::pi * domain.radius / nodes;
    for (int i = 0; i < nodes; ++i) {
      const double th = 2.0 * std::numbers::pi * (i + 0.5) / nodes;
      out.push_back({Vec{domain.radius * std::cos(th), domain.radius * std::sin(th)}, w});
    }
    return out;
  }
  if (domain.kind == DomainKind::hemisphere && d == 2) {
    if (part == BoundaryPart::accessible) {
      const double w = 2.0 * domain.radius / nodes;
      for (int i = 0; i < nodes; ++i)
        out.push_back({Vec{-domain.radius + (i + 0.5) * w, 0.0}, w});
    } else {
      const double w = std::numbers::pi * domain.radius / nodes;
      for (int i = 0; i < nodes; ++i) {
        const double th = std::numbers::pi + std::numbers::pi * (i + 0.5) / nodes;
        out.push_back({Vec{domain.radius * std::cos(th), domain.radius * std::sin(th)}, w});
      }
    }
    return out;
  }
  throw UnsupportedQueryError("boundary_quadrature: unsupported domain/dimension");
}

void validate_layout(const Domain& domain, const ElectrodeLayout& layout) {
  const std::size_t n = layout.electrodes.size();
  if (layout.contact_impedance.size() != n || layout.voltages.size() != n)
    throw ConfigError("layout: electrodes, contact_impedance and voltages must have equal length");
  for (std::size_t l = 0; l < n; ++l) {
    const auto& e = layout.electrodes[l];
    if (e.radius <= 0.0) throw ConfigError("layout.electrodes[" + std::to_string(l) + "].radius must be positive");
    if (layout.contact_impedance[l] <= 0.0)
      throw ConfigError("layout.contact_impedance[" + std::to_string(l) + "] must be positive");
    const int d = domain.dim;
    switch (domain.kind) {
      case DomainKind::half_space:
        if (std::abs(e.center[d - 1]) > 1e-12)
          throw ConfigError("layout.electrodes[" + std::to_string(l) + "].center must lie on the boundary hyperplane");
        break;
      case DomainKind::hemisphere: {
        if (std::abs(e.center[d - 1]) > 1e-12)
          throw ConfigError("layout.electrodes[" + std::to_string(l) + "].center must lie on the flat boundary");
        double rt = 0.0;
        for (int i = 0; i + 1 < d; ++i) rt += e.center[i] * e.center[i];
        if (std::sqrt(rt) + e.radius > domain.radius + 1e-12)
          throw ConfigError("layout.electrodes[" + std::to_string(l) + "] is not contained in the accessible boundary");
        break;
      }
      case DomainKind::ball:
        if (std::abs(norm(e.center) - domain.radius) > 1e-12)
          throw ConfigError("layout.electrodes[" + std::to_string(l) + "].center must lie on the boundary sphere");
        break;
      case DomainKind::whole_space:
        throw ConfigError("layout: whole_space domain has no boundary for electrodes");
    }
  }
  for (std::size_t a = 0; a < n; ++a)
    for (std::size_t b = a + 1; b < n; ++b) {
      const double gap = norm(layout.electrodes[a].center - layout.electrodes[b].center);
      if (gap < layout.electrodes[a].radius + layout.electrodes[b].radius)
        throw ConfigError("layout.electrodes[" + std::to_string(a) + "," + std::to_string(b) +
                          "] overlap");
    }
}

}  // namespace fkeit
