#include "fkeit/media.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "fkeit/rng.hpp"

namespace fkeit {

namespace {

std::int64_t floor_div_index(double x, double w) {
  return static_cast<std::int64_t>(std::floor(x / w));
}

double uniform_from_hash(std::uint64_t h) {
  return (static_cast<double>(h >> 11) + 0.5) * 0x1.0p-53;
}

void check_scalar_bounds(double v, double c, const char* field) {
  if (v <= 0.0 || v < 1.0 / c - 1e-12 || v > c + 1e-12)
    throw ConfigError(std::string(field) + ": value " + std::to_string(v) +
                      " violates the ellipticity bound");
}

}  // namespace

MediumSpec MediumSpec::constant(const Mat& kappa, double bound) {
  MediumSpec s;
  s.kind = MediumKind::constant;
  s.dim = kappa.d;
  s.constant_value = kappa;
  if (bound > 0.0) {
    s.ellipticity_bound = bound;
  } else {
    auto ev = symmetric_eigenvalues(kappa);
    s.ellipticity_bound = std::max(ev[kappa.d - 1], 1.0 / ev[0]) * (1.0 + 1e-12);
    s.ellipticity_bound = std::max(s.ellipticity_bound, 1.0);
  }
  return s;
}

MediumSpec MediumSpec::constant_scalar(int dim, double kappa) {
  return constant(Mat::scaled_identity(dim, kappa));
}

MediumSpec MediumSpec::two_phase(const InterfaceDescriptor& iface, int dim) {
  MediumSpec s;
  s.kind = MediumKind::two_phase;
  s.dim = dim;
  s.interface = iface;
  s.ellipticity_bound =
      std::max({iface.kappa1, iface.kappa2, 1.0 / iface.kappa1, 1.0 / iface.kappa2, 1.0});
  return s;
}

MediumSpec MediumSpec::checkerboard_scalar(int dim, double cell, std::vector<double> values,
                                           std::vector<double> probabilities) {
  MediumSpec s;
  s.kind = MediumKind::checkerboard;
  s.dim = dim;
  s.cell_size = cell;
  double c = 1.0;
  for (double v : values) {
    s.cell_values.push_back(Mat::scaled_identity(dim, v));
    c = std::max({c, v, 1.0 / v});
  }
  s.cell_probabilities = std::move(probabilities);
  s.ellipticity_bound = c;
  return s;
}

MediumSpec MediumSpec::layered_alternating(int dim, int axis, double width,
                                           std::vector<double> values) {
  MediumSpec s;
  s.kind = MediumKind::layered;
  s.dim = dim;
  s.layer_axis = axis;
  s.layer_width = width;
  s.layer_values = std::move(values);
  s.layer_law = LayerLaw::alternating;
  double c = 1.0;
  for (double v : s.layer_values) c = std::max({c, v, 1.0 / v});
  s.ellipticity_bound = c;
  return s;
}

void MediumSpec::validate() const {
  if (dim < 1 || dim > kMaxDim) throw ConfigError("medium.dimension must be in [1,3]");
  const double c = ellipticity_bound;
  if (c < 1.0) throw ConfigError("medium.ellipticity_bound must be >= 1");
  switch (kind) {
    case MediumKind::constant: {
      if (constant_value.d != dim) throw ConfigError("medium.constant value has wrong dimension");
      if (max_symmetry_defect(constant_value) > 1e-12)
        throw ConfigError("medium.constant value must be symmetric");
      auto ev = symmetric_eigenvalues(constant_value);
      if (ev[0] < 1.0 / c - 1e-12 || ev[dim - 1] > c + 1e-12)
        throw ConfigError("medium.constant value violates the ellipticity bound");
      break;
    }
    case MediumKind::smooth:
      if (family == SmoothFamily::sinusoidal_iso) {
        check_scalar_bounds(smooth_base - std::abs(smooth_amplitude), c, "medium.smooth");
        check_scalar_bounds(smooth_base + std::abs(smooth_amplitude), c, "medium.smooth");
      }
      // Affine families are unbounded on R^d; they are oracle devices and the
      // bound is enforced on the queried region by the caller.
      break;
    case MediumKind::two_phase:
      check_scalar_bounds(interface.kappa1, c, "medium.two_phase.kappa1");
      check_scalar_bounds(interface.kappa2, c, "medium.two_phase.kappa2");
      if (interface.shape == InterfaceShape::hyperplane &&
          std::abs(norm(interface.anchor) - 1.0) > 1e-9)
        throw ConfigError("medium.two_phase interface normal must be a unit vector");
      if (interface.shape == InterfaceShape::sphere && interface.offset <= 0.0)
        throw ConfigError("medium.two_phase interface radius must be positive");
      break;
    case MediumKind::checkerboard: {
      if (cell_size <= 0.0) throw ConfigError("medium.checkerboard.cell_size must be positive");
      if (cell_values.empty() || cell_values.size() != cell_probabilities.size())
        throw ConfigError("medium.checkerboard values/probabilities mismatch");
      double p_sum = 0.0;
      for (double p : cell_probabilities) {
        if (p < 0.0) throw ConfigError("medium.checkerboard probabilities must be nonnegative");
        p_sum += p;
      }
      if (std::abs(p_sum - 1.0) > 1e-12)
        throw ConfigError("medium.checkerboard probabilities must sum to 1");
      for (const auto& v : cell_values) {
        if (v.d != dim || max_symmetry_defect(v) > 1e-12)
          throw ConfigError("medium.checkerboard values must be symmetric d x d");
        auto ev = symmetric_eigenvalues(v);
        if (ev[0] < 1.0 / c - 1e-12 || ev[dim - 1] > c + 1e-12)
          throw ConfigError("medium.checkerboard value violates the ellipticity bound");
      }
      break;
    }
    case MediumKind::layered:
      if (layer_axis < 0 || layer_axis >= dim) throw ConfigError("medium.layered.axis out of range");
      if (layer_width <= 0.0) throw ConfigError("medium.layered.width must be positive");
      if (layer_values.empty()) throw ConfigError("medium.layered.values must be nonempty");
      for (double v : layer_values) check_scalar_bounds(v, c, "medium.layered.values");
      break;
    case MediumKind::poisson_spheres:
      if (poisson_intensity < 0.0) throw ConfigError("medium.poisson.intensity must be >= 0");
      if (poisson_radius <= 0.0) throw ConfigError("medium.poisson.radius must be positive");
      check_scalar_bounds(poisson_kappa_in, c, "medium.poisson.kappa_in");
      check_scalar_bounds(poisson_kappa_out, c, "medium.poisson.kappa_out");
      break;
  }
}

ConductivityField::ConductivityField(MediumSpec spec, std::uint64_t seed, double epsilon)
    : spec_(std::move(spec)), seed_(seed), epsilon_(epsilon) {
  if (epsilon <= 0.0) throw ConfigError("medium.epsilon must be positive");
  spec_.validate();
}

double ConductivityField::smooth_value(const Vec& y) const {
  if (spec_.family == SmoothFamily::affine_iso) return spec_.smooth_base + dot(spec_.smooth_gradient, y);
  return spec_.smooth_base + spec_.smooth_amplitude * std::sin(dot(spec_.smooth_wavevector, y));
}

int ConductivityField::checkerboard_pick(const std::int64_t* idx, int n) const {
  std::uint64_t h = seed_;
  for (int i = 0; i < n; ++i)
    h = mix_seed(h, static_cast<std::uint64_t>(idx[i]) + 0x6b43a9b5u * (static_cast<unsigned>(i) + 1));
  double u = uniform_from_hash(h);
  double acc = 0.0;
  for (std::size_t k = 0; k < spec_.cell_probabilities.size(); ++k) {
    acc += spec_.cell_probabilities[k];
    if (u < acc) return static_cast<int>(k);
  }
  return static_cast<int>(spec_.cell_probabilities.size()) - 1;
}

Mat ConductivityField::checkerboard_value(const Vec& y) const {
  std::int64_t idx[kMaxDim];
  for (int i = 0; i < spec_.dim; ++i) idx[i] = floor_div_index(y[i], spec_.cell_size);
  return spec_.cell_values[static_cast<std::size_t>(checkerboard_pick(idx, spec_.dim))];
}

double ConductivityField::layered_value(double coord) const {
  const std::int64_t layer = floor_div_index(coord, spec_.layer_width);
  const auto n = static_cast<std::int64_t>(spec_.layer_values.size());
  if (spec_.layer_law == LayerLaw::alternating) {
    std::int64_t k = layer % n;
    if (k < 0) k += n;
    return spec_.layer_values[static_cast<std::size_t>(k)];
  }
  std::uint64_t h = mix_seed(seed_, static_cast<std::uint64_t>(layer));
  return spec_.layer_values[static_cast<std::size_t>(h % static_cast<std::uint64_t>(n))];
}

void ConductivityField::poisson_centers_near(const Vec& y, std::vector<Vec>& out) const {
  out.clear();
  const double box = 2.0 * spec_.poisson_radius;
  const int d = spec_.dim;
  std::vector<std::int64_t> base(static_cast<std::size_t>(d));
  for (int i = 0; i < d; ++i) base[static_cast<std::size_t>(i)] = floor_div_index(y[i], box);
  const double mean_count = spec_.poisson_intensity * std::pow(box, d);
  std::vector<std::int64_t> idx(static_cast<std::size_t>(d));
  const int span = 1;
  for (std::int64_t di = -span; di <= span; ++di)
    for (std::int64_t dj = -span; dj <= (d >= 2 ? span : -span); ++dj)
      for (std::int64_t dk = -span; dk <= (d >= 3 ? span : -span); ++dk) {
        idx[0] = base[0] + di;
        if (d >= 2) idx[1] = base[1] + dj;
        if (d >= 3) idx[2] = base[2] + dk;
        std::uint64_t h = seed_ ^ 0x50313550u;
        for (int i = 0; i < d; ++i) h = mix_seed(h, static_cast<std::uint64_t>(idx[static_cast<std::size_t>(i)]) + 77771u * (i + 1));
        Philox gen(h, 0);
        // Knuth's product method; mean counts are O(1) by construction.
        int count = 0;
        double p = std::exp(-mean_count), cdf = p, u = gen.next_uniform();
        while (u > cdf && count < 64) {
          ++count;
          p *= mean_count / count;
          cdf += p;
        }
        for (int c = 0; c < count; ++c) {
          Vec center(d);
          for (int i = 0; i < d; ++i)
            center[i] = (static_cast<double>(idx[static_cast<std::size_t>(i)]) + gen.next_uniform()) * box;
          out.push_back(center);
        }
      }
}

bool ConductivityField::poisson_inside(const Vec& y) const {
  std::vector<Vec> centers;
  poisson_centers_near(y, centers);
  for (const auto& c : centers)
    if (norm(y - c) < spec_.poisson_radius) return true;
  return false;
}

Mat ConductivityField::kappa_at(const Vec& x) const {
  const Vec y = (1.0 / epsilon_) * x;
  switch (spec_.kind) {
    case MediumKind::constant:
      return spec_.constant_value;
    case MediumKind::smooth:
      return Mat::scaled_identity(spec_.dim, smooth_value(y));
    case MediumKind::two_phase:
      return Mat::scaled_identity(
          spec_.dim, spec_.interface.level(y) < 0.0 ? spec_.interface.kappa1 : spec_.interface.kappa2);
    case MediumKind::checkerboard:
      return checkerboard_value(y);
    case MediumKind::layered:
      return Mat::scaled_identity(spec_.dim, layered_value(y[spec_.layer_axis]));
    case MediumKind::poisson_spheres:
      return Mat::scaled_identity(
          spec_.dim, poisson_inside(y) ? spec_.poisson_kappa_in : spec_.poisson_kappa_out);
  }
  return Mat::identity(spec_.dim);
}

double ConductivityField::scalar_kappa_at(const Vec& x) const {
  const Vec y = (1.0 / epsilon_) * x;
  switch (spec_.kind) {
    case MediumKind::two_phase:
      return spec_.interface.level(y) < 0.0 ? spec_.interface.kappa1 : spec_.interface.kappa2;
    case MediumKind::layered:
      return layered_value(y[spec_.layer_axis]);
    case MediumKind::checkerboard:
      return checkerboard_value(y)(0, 0);
    case MediumKind::poisson_spheres:
      return poisson_inside(y) ? spec_.poisson_kappa_in : spec_.poisson_kappa_out;
    case MediumKind::smooth:
      return smooth_value(y);
    case MediumKind::constant:
      return spec_.constant_value(0, 0);
  }
  return 1.0;
}

Mat ConductivityField::diffusion_factor(const Vec& x) const {
  return cholesky_lower(2.0 * kappa_at(x));
}

bool ConductivityField::has_analytic_drift() const {
  return spec_.kind == MediumKind::constant || spec_.kind == MediumKind::smooth;
}

Vec ConductivityField::drift_at(const Vec& x) const {
  switch (spec_.kind) {
    case MediumKind::constant:
      return Vec(spec_.dim);
    case MediumKind::smooth: {
      // kappa = s(x) I, so the row divergence is just the gradient of s.
      const Vec y = (1.0 / epsilon_) * x;
      Vec g(spec_.dim);
      if (spec_.family == SmoothFamily::affine_iso) {
        g = spec_.smooth_gradient;
      } else {
        const double c = spec_.smooth_amplitude * std::cos(dot(spec_.smooth_wavevector, y));
        g = c * spec_.smooth_wavevector;
      }
      return (1.0 / epsilon_) * g;
    }
    default:
      throw UnsupportedQueryError(
          "drift_at: piecewise media carry no pointwise drift; interface crossings replace it");
  }
}

bool ConductivityField::piecewise_isotropic() const {
  switch (spec_.kind) {
    case MediumKind::two_phase:
    case MediumKind::layered:
    case MediumKind::poisson_spheres:
      return true;
    case MediumKind::checkerboard:
      for (const auto& v : spec_.cell_values)
        for (int i = 0; i < spec_.dim; ++i)
          for (int j = 0; j < spec_.dim; ++j)
            if (i != j ? v(i, j) != 0.0 : v(i, j) != v(0, 0)) return false;
      return true;
    case MediumKind::constant: {
      const auto& v = spec_.constant_value;
      for (int i = 0; i < spec_.dim; ++i)
        for (int j = 0; j < spec_.dim; ++j)
          if (i != j ? v(i, j) != 0.0 : v(i, j) != v(0, 0)) return false;
      return true;
    }
    case MediumKind::smooth:
      return false;  // isotropic but not piecewise constant: drift matters
  }
  return false;
}

bool ConductivityField::has_interfaces() const {
  switch (spec_.kind) {
    case MediumKind::two_phase:
    case MediumKind::checkerboard:
    case MediumKind::layered:
    case MediumKind::poisson_spheres:
      return true;
    default:
      return false;
  }
}

std::optional<InterfaceHit> ConductivityField::first_interface_crossing(const Vec& x0,
                                                                        const Vec& x1) const {
  if (!has_interfaces()) return std::nullopt;
  const int d = spec_.dim;
  const Vec y0 = (1.0 / epsilon_) * x0;
  const Vec y1 = (1.0 / epsilon_) * x1;
  const Vec dy = y1 - y0;

  auto make_hit = [&](double s, const Vec& normal) {
    InterfaceHit hit;
    hit.s = s;
    hit.point = x0 + s * (x1 - x0);
    hit.normal = normal;
    return hit;
  };

  switch (spec_.kind) {
    case MediumKind::two_phase: {
      const auto& ifc = spec_.interface;
      if (ifc.shape == InterfaceShape::hyperplane) {
        // Points with level == 0 count as the positive side, matching the
        // kappa lookup; a path sitting exactly on the interface therefore
        // still gets its first crossing resolved.
        const double l0 = ifc.level(y0), l1 = ifc.level(y1);
        if ((l0 < 0.0) == (l1 < 0.0)) return std::nullopt;
        double s = (l0 == l1) ? 0.0 : l0 / (l0 - l1);
        if (!(s >= 0.0 && s <= 1.0)) return std::nullopt;
        auto hit = make_hit(s, ifc.anchor);
        hit.kappa_n_neg = ifc.kappa1;
        hit.kappa_n_pos = ifc.kappa2;
        return hit;
      }
      // sphere: |y0 + s dy - c| = rho
      const Vec rel = y0 - ifc.anchor;
      const double a = dot(dy, dy);
      if (a == 0.0) return std::nullopt;
      const double b = 2.0 * dot(rel, dy);
      const double c = dot(rel, rel) - ifc.offset * ifc.offset;
      const double disc = b * b - 4.0 * a * c;
      if (disc < 0.0) return std::nullopt;
      const double sq = std::sqrt(disc);
      double s_hit = std::numeric_limits<double>::infinity();
      for (double s : {(-b - sq) / (2.0 * a), (-b + sq) / (2.0 * a)})
        if (s > 1e-12 && s <= 1.0) s_hit = std::min(s_hit, s);
      if (!std::isfinite(s_hit)) return std::nullopt;
      Vec yc = y0 + s_hit * dy;
      Vec n = normalized(yc - ifc.anchor);
      auto hit = make_hit(s_hit, n);
      hit.kappa_n_neg = ifc.kappa1;
      hit.kappa_n_pos = ifc.kappa2;
      return hit;
    }
    case MediumKind::layered: {
      const int ax = spec_.layer_axis;
      const double w = spec_.layer_width;
      const double c0 = y0[ax], c1 = y1[ax];
      if (c0 == c1) return std::nullopt;
      const std::int64_t k0 = floor_div_index(c0, w);
      const std::int64_t k1 = floor_div_index(c1, w);
      if (k0 == k1) return std::nullopt;
      // Walk the crossed faces in travel order; the first face with a value
      // contrast is the interface. Normal points toward +axis everywhere.
      const std::int64_t dir = (c1 > c0) ? 1 : -1;
      const std::int64_t first_face = (dir > 0) ? k0 + 1 : k0;
      const std::int64_t last_face = (dir > 0) ? k1 : k1 + 1;
      for (std::int64_t f = first_face; (dir > 0) ? f <= last_face : f >= last_face; f += dir) {
        const double fw = static_cast<double>(f) * w;
        const double v_below = layered_value(fw - 0.5 * w);
        const double v_above = layered_value(fw + 0.5 * w);
        if (v_below == v_above) continue;
        const double s = (fw - c0) / (c1 - c0);
        if (!(s >= 0.0 && s <= 1.0)) continue;
        auto hit = make_hit(s, unit_vec(d, ax));
        hit.kappa_n_neg = v_below;
        hit.kappa_n_pos = v_above;
        return hit;
      }
      return std::nullopt;
    }
    case MediumKind::checkerboard: {
      const double w = spec_.cell_size;
      // Collect face crossings along the segment per axis, earliest first.
      double best_s = std::numeric_limits<double>::infinity();
      int best_axis = -1;
      for (int ax = 0; ax < d; ++ax) {
        const double c0 = y0[ax], c1 = y1[ax];
        if (c0 == c1) continue;
        const std::int64_t k0 = floor_div_index(c0, w);
        const std::int64_t k1 = floor_div_index(c1, w);
        if (k0 == k1) continue;
        std::int64_t face = (c1 > c0) ? k0 + 1 : k0;
        double s = (static_cast<double>(face) * w - c0) / (c1 - c0);
        if (s >= 0.0 && s < best_s) {
          best_s = s;
          best_axis = ax;
        }
      }
      if (best_axis < 0 || best_s > 1.0) return std::nullopt;
      // Values on the two sides of the crossed face.
      Vec yc = y0 + best_s * dy;
      Vec n = unit_vec(d, best_axis);
      const double nudge = 1e-9 * w;
      Vec y_neg = yc, y_pos = yc;
      y_neg[best_axis] -= nudge;
      y_pos[best_axis] += nudge;
      Mat k_neg = checkerboard_value(y_neg);
      Mat k_pos = checkerboard_value(y_pos);
      const double kn_neg = quad_form(k_neg, n);
      const double kn_pos = quad_form(k_pos, n);
      if (kn_neg == kn_pos) {
        // No contrast across this face: recurse on the remaining segment.
        Vec x_mid = x0 + best_s * (x1 - x0);
        Vec x_mid_ahead = x_mid;
        // Nudge into the next cell to avoid re-finding the same face.
        for (int i = 0; i < d; ++i) x_mid_ahead[i] += (x1[i] - x0[i]) * 1e-9;
        auto tail = first_interface_crossing(x_mid_ahead, x1);
        if (!tail) return std::nullopt;
        tail->s = best_s + tail->s * (1.0 - best_s);
        return tail;
      }
      auto hit = make_hit(best_s, n);
      hit.kappa_n_neg = kn_neg;
      hit.kappa_n_pos = kn_pos;
      return hit;
    }
    case MediumKind::poisson_spheres: {
      std::vector<Vec> centers;
      poisson_centers_near(y0, centers);
      std::vector<Vec> more;
      poisson_centers_near(y1, more);
      for (const auto& c : more) centers.push_back(c);
      double best_s = std::numeric_limits<double>::infinity();
      Vec best_center;
      for (const auto& c : centers) {
        const Vec rel = y0 - c;
        const double a = dot(dy, dy);
        if (a == 0.0) continue;
        const double b = 2.0 * dot(rel, dy);
        const double cc = dot(rel, rel) - spec_.poisson_radius * spec_.poisson_radius;
        const double disc = b * b - 4.0 * a * cc;
        if (disc < 0.0) continue;
        const double sq = std::sqrt(disc);
        for (double s : {(-b - sq) / (2.0 * a), (-b + sq) / (2.0 * a)}) {
          if (s <= 1e-12 || s > 1.0 || s >= best_s) continue;
          // Union geometry: only surface points not covered by another sphere
          // are true phase changes.
          Vec yc = y0 + s * dy;
          Vec probe_in = yc, probe_out = yc;
          Vec nr = normalized(yc - c);
          probe_in -= 1e-9 * nr;
          probe_out += 1e-9 * nr;
          if (poisson_inside(probe_in) != poisson_inside(probe_out)) {
            best_s = s;
            best_center = c;
          }
        }
      }
      if (!std::isfinite(best_s)) return std::nullopt;
      Vec yc = y0 + best_s * dy;
      Vec n = normalized(yc - best_center);
      auto hit = make_hit(best_s, n);
      hit.kappa_n_neg = spec_.poisson_kappa_in;   // negative level = inside
      hit.kappa_n_pos = spec_.poisson_kappa_out;
      return hit;
    }
    default:
      return std::nullopt;
  }
}


InterfaceProximity ConductivityField::probe_interface(const Vec& x, double band,
                                                      NearInterface* out) const {
  if (!has_interfaces()) return InterfaceProximity::none;
  const int d = spec_.dim;
  const Vec y = (1.0 / epsilon_) * x;
  const double band_y = band / epsilon_;

  switch (spec_.kind) {
    case MediumKind::two_phase: {
      const auto& ifc = spec_.interface;
      const double lev = ifc.level(y);
      if (std::abs(lev) >= band_y) return InterfaceProximity::none;
      out->signed_distance = epsilon_ * lev;
      if (ifc.shape == InterfaceShape::hyperplane) {
        out->normal = ifc.anchor;
      } else {
        const Vec rel = y - ifc.anchor;
        const double r = norm(rel);
        if (r == 0.0) return InterfaceProximity::crowded;
        out->normal = (1.0 / r) * rel;
      }
      out->foot = x - out->signed_distance * out->normal;
      out->kappa_n_neg = ifc.kappa1;
      out->kappa_n_pos = ifc.kappa2;
      return InterfaceProximity::isolated;
    }
    case MediumKind::layered: {
      const int ax = spec_.layer_axis;
      const double w = spec_.layer_width;
      const double c = y[ax];
      const std::int64_t k = floor_div_index(c, w);
      const double d_lo = c - static_cast<double>(k) * w;
      const double d_hi = static_cast<double>(k + 1) * w - c;
      const bool lo_near = d_lo < band_y, hi_near = d_hi < band_y;
      if (!lo_near && !hi_near) return InterfaceProximity::none;
      if (lo_near && hi_near) return InterfaceProximity::crowded;
      const double fw = (lo_near ? static_cast<double>(k) : static_cast<double>(k + 1)) * w;
      const double v_below = layered_value(fw - 0.5 * w);
      const double v_above = layered_value(fw + 0.5 * w);
      if (v_below == v_above) return InterfaceProximity::none;
      out->signed_distance = epsilon_ * (c - fw);
      out->normal = unit_vec(d, ax);
      out->foot = x;
      out->foot[ax] = epsilon_ * fw;
      out->kappa_n_neg = v_below;
      out->kappa_n_pos = v_above;
      return InterfaceProximity::isolated;
    }
    case MediumKind::checkerboard: {
      const double w = spec_.cell_size;
      int near_axis = -1;
      bool near_is_lo = false;
      std::int64_t cell_idx[kMaxDim];
      for (int ax = 0; ax < d; ++ax) cell_idx[ax] = floor_div_index(y[ax], w);
      for (int ax = 0; ax < d; ++ax) {
        const double d_lo = y[ax] - static_cast<double>(cell_idx[ax]) * w;
        const double d_hi = static_cast<double>(cell_idx[ax] + 1) * w - y[ax];
        const bool lo_near = d_lo < band_y, hi_near = d_hi < band_y;
        if (!lo_near && !hi_near) continue;
        if ((lo_near && hi_near) || near_axis >= 0) return InterfaceProximity::crowded;
        near_axis = ax;
        near_is_lo = lo_near;
      }
      if (near_axis < 0) return InterfaceProximity::none;
      // Contrast across the near face of the current cell.
      const Mat k_cell = spec_.cell_values[static_cast<std::size_t>(checkerboard_pick(cell_idx, d))];
      std::int64_t nb_idx[kMaxDim];
      for (int ax = 0; ax < d; ++ax) nb_idx[ax] = cell_idx[ax];
      nb_idx[near_axis] += near_is_lo ? -1 : 1;
      const Mat k_nb = spec_.cell_values[static_cast<std::size_t>(checkerboard_pick(nb_idx, d))];
      const double kn_cell = k_cell(near_axis, near_axis);
      const double kn_nb = k_nb(near_axis, near_axis);
      if (kn_cell == kn_nb) return InterfaceProximity::none;
      const double fw =
          (near_is_lo ? static_cast<double>(cell_idx[near_axis])
                      : static_cast<double>(cell_idx[near_axis] + 1)) * w;
      out->signed_distance = epsilon_ * (y[near_axis] - fw);
      out->normal = unit_vec(d, near_axis);
      out->foot = x;
      out->foot[near_axis] = epsilon_ * fw;
      // Negative side = smaller coordinate.
      out->kappa_n_neg = near_is_lo ? kn_nb : kn_cell;
      out->kappa_n_pos = near_is_lo ? kn_cell : kn_nb;
      return InterfaceProximity::isolated;
    }
    case MediumKind::poisson_spheres: {
      std::vector<Vec> centers;
      poisson_centers_near(y, centers);
      for (const auto& c : centers)
        if (std::abs(norm(y - c) - spec_.poisson_radius) < band_y)
          return InterfaceProximity::crowded;
      return InterfaceProximity::none;
    }
    default:
      return InterfaceProximity::none;
  }
}

Vec drift_at_finite_difference(const ConductivityField& field, const Vec& x, double delta) {
  const int d = field.dim();
  if (delta <= 0.0)
    delta = std::cbrt(std::numeric_limits<double>::epsilon()) * std::max(1.0, norm(x));
  Vec out(d);
  for (int j = 0; j < d; ++j) {
    Vec xp = x, xm = x;
    xp[j] += delta;
    xm[j] -= delta;
    Mat kp = field.kappa_at(xp), km = field.kappa_at(xm);
    for (int i = 0; i < d; ++i) out[i] += (kp(i, j) - km(i, j)) / (2.0 * delta);
  }
  return out;
}

}  // namespace fkeit
