#include "fkeit/diffusion.hpp"

#include <cmath>

#include "fkeit/errors.hpp"
#include "fkeit/normal_dist.hpp"

namespace fkeit {

Functional Functional::dirichlet(std::function<double(const Vec&)> phi) {
  Functional f;
  f.kind = Kind::dirichlet;
  f.boundary_data = std::move(phi);
  return f;
}
Functional Functional::boundary_flux(std::function<double(const Vec&)> flux) {
  Functional f;
  f.kind = Kind::boundary_flux;
  f.boundary_data = std::move(flux);
  return f;
}
Functional Functional::robin_killed(std::function<double(const Vec&)> flux, double alpha) {
  Functional f;
  f.kind = Kind::robin_killed;
  f.boundary_data = std::move(flux);
  f.alpha = alpha;
  return f;
}
Functional Functional::cem(const ElectrodeLayout& layout) {
  Functional f;
  f.kind = Kind::cem;
  f.layout = &layout;
  return f;
}
Functional Functional::mixed_cem(const ElectrodeLayout& layout) {
  Functional f;
  f.kind = Kind::mixed_cem;
  f.layout = &layout;
  return f;
}

StepContext::StepContext(const ConductivityField& field_, const Domain& domain_,
                         BoundaryConditions bc_, const Functional& functional_,
                         const StepperConfig& cfg_)
    : field(field_), domain(domain_), bc(bc_), functional(functional_), cfg(cfg_) {
  has_boundary = domain.has_boundary();
  has_interfaces = field.has_interfaces();
  scalar_vol = field.piecewise_isotropic() || field.spec().kind == MediumKind::smooth;
  constant_factor = field.spec().kind == MediumKind::constant;
  has_drift = field.has_analytic_drift();
  sqrt_h = std::sqrt(cfg.h);
  r_snap = cfg.r_snap > 0.0
               ? cfg.r_snap
               : 10.0 * std::sqrt(cfg.h * field.spec().ellipticity_bound);
  gauge_cut = -std::log(cfg.tol_gauge);
  interface_band =
      cfg.skew_band_sigmas * std::sqrt(2.0 * field.spec().ellipticity_bound * cfg.h);
  if (constant_factor) {
    factor_const = cholesky_lower(2.0 * field.spec().constant_value);
    drift_const = Vec(field.dim());
    has_drift = false;  // constant drift is zero, skip the add
  }
  if (field.spec().kind == MediumKind::smooth) has_drift = true;
}

ReflectionResult apply_reflection(const Vec& x_out, const BoundaryFrame& frame,
                                  const Mat& kappa) {
  const Vec conormal = mat_vec(kappa, frame.normal);
  const double nkn = dot(frame.normal, conormal);
  if (nkn <= 0.0)
    throw NumericalError("apply_reflection: nu.kappa.nu <= 0 violates uniform ellipticity");
  const double p = dot(x_out - frame.point, frame.normal);
  const double depth = std::max(p, 0.0);
  const double dl = 2.0 * depth / nkn;
  ReflectionResult r;
  r.x_in = x_out - dl * conormal;
  r.d_local_time = dl;
  return r;
}

double skew_transition(double y0, double q_pos, double sqrt_h, Philox& rng) {
  bool flipped = y0 < 0.0;
  if (flipped) {
    y0 = -y0;
    q_pos = 1.0 - q_pos;
  }
  const double alpha = 2.0 * q_pos - 1.0;
  const double m = y0 / sqrt_h;
  const double phi_neg = normal_cdf(-m);
  const double mass_neg = (1.0 - alpha) * phi_neg;
  const double u = rng.next_uniform();
  double y1;
  if (u < mass_neg) {
    // Crossing branch: scaled Gaussian truncated to the far side.
    const double g = normal_quantile(u / (1.0 - alpha));
    y1 = y0 + sqrt_h * g;
  } else if (alpha >= 0.0) {
    // Same-side density phi(y-y0) + alpha phi(y+y0): two-component mixture.
    const double w_img = alpha * phi_neg;
    const double v = u - mass_neg;
    if (v < w_img) {
      const double g = normal_quantile(normal_cdf(m) + v / alpha);
      y1 = -y0 + sqrt_h * g;
    } else {
      const double g = normal_quantile(phi_neg + (v - w_img));
      y1 = y0 + sqrt_h * g;
    }
  } else {
    // Defect side: phi(y-y0) - |alpha| phi(y+y0) via acceptance-rejection.
    const double inv_h = 1.0 / (sqrt_h * sqrt_h);
    for (;;) {
      const double v = rng.next_uniform();
      const double g = normal_quantile(phi_neg + v * (1.0 - phi_neg));
      const double y = y0 + sqrt_h * g;
      const double reject = -alpha * std::exp(-2.0 * y * y0 * inv_h);
      if (rng.next_uniform() >= reject) {
        y1 = y;
        break;
      }
    }
  }
  return flipped ? -y1 : y1;
}

double skew_transition_physical(double d0, double kappa_n_neg, double kappa_n_pos, double h,
                                Philox& rng) {
  const double s_neg = std::sqrt(2.0 * kappa_n_neg);
  const double s_pos = std::sqrt(2.0 * kappa_n_pos);
  const double q_pos = s_pos / (s_pos + s_neg);
  const double y0 = d0 >= 0.0 ? d0 / s_pos : d0 / s_neg;
  const double y1 = skew_transition(y0, q_pos, std::sqrt(h), rng);
  return y1 >= 0.0 ? y1 * s_pos : y1 * s_neg;
}

CrossingResult apply_interface_crossing(const Vec& x_from, const Vec& x_prop,
                                        const InterfaceHit& hit, Philox& rng) {
  (void)x_from;
  const double offset = dot(x_prop - hit.point, hit.normal);  // signed overshoot
  const double overshoot = std::abs(offset);
  const bool from_negative = offset > 0.0;  // crossed toward the positive side
  const double k_from = from_negative ? hit.kappa_n_neg : hit.kappa_n_pos;
  const double sq_neg = std::sqrt(hit.kappa_n_neg);
  const double sq_pos = std::sqrt(hit.kappa_n_pos);
  const double p_neg = sq_neg / (sq_neg + sq_pos);
  const bool to_negative = rng.next_uniform() < p_neg;
  const double k_to = to_negative ? hit.kappa_n_neg : hit.kappa_n_pos;
  const double depth = overshoot * std::sqrt(k_to / k_from);

  CrossingResult r;
  r.x_new = x_prop + ((to_negative ? -depth : depth) - offset) * hit.normal;
  // Diagnostic: symmetric local time accrues like twice the unit-volatility
  // overshoot of the underlying skew walk.
  r.d_interface_local_time = 2.0 * overshoot / std::sqrt(2.0 * k_from);
  r.ended_negative_side = to_negative;
  return r;
}

namespace {

inline void accumulate_boundary_payoff(PathState& st, const StepContext& ctx,
                                       const BoundaryFrame& frame, double dl) {
  switch (ctx.functional.kind) {
    case Functional::Kind::boundary_flux:
      st.payoff += ctx.functional.boundary_data(frame.point) * dl;
      break;
    case Functional::Kind::robin_killed:
      st.payoff += std::exp(-ctx.functional.alpha * st.t) *
                   ctx.functional.boundary_data(frame.point) * dl;
      break;
    case Functional::Kind::cem:
    case Functional::Kind::mixed_cem: {
      if (frame.part == BoundaryPart::inaccessible) break;  // no electrodes there
      const RobinData fg = electrode_eval(*ctx.functional.layout, frame);
      if (fg.g == 0.0 && fg.f == 0.0) break;
      const double da = ctx.functional.zero_gauge ? 0.0 : fg.g * dl;
      // Midpoint discount across the event keeps the O(dA^2) error symmetric.
      st.payoff += std::exp(-(st.robin_integral + 0.5 * da)) * fg.f * dl;
      st.robin_integral += da;
      break;
    }
    default:
      break;
  }
}

inline void log_event(const StepContext& ctx, double t, const Vec& x, PathEvent::Kind kind,
                      double dl) {
  if (ctx.event_log) ctx.event_log->push_back({t, x, kind, dl});
}

}  // namespace

void step(PathState& st, const StepContext& ctx, Philox& rng, double sign) {
  const int d = ctx.field.dim();
  const double h = ctx.cfg.h;

  // Regime: exact skew step near one isolated interface (away from the
  // domain boundary), event-rule scanning near crowded geometry, plain
  // Euler elsewhere.
  NearInterface near;
  InterfaceProximity prox = InterfaceProximity::none;
  if (ctx.has_interfaces && ctx.interface_band > 0.0)
    prox = ctx.field.probe_interface(st.x, ctx.interface_band, &near);
  const bool skew_step =
      prox == InterfaceProximity::isolated &&
      (!ctx.has_boundary || signed_distance(ctx.domain, st.x) < -ctx.interface_band);
  const bool scan_interfaces =
      ctx.has_interfaces && !skew_step &&
      (ctx.interface_band <= 0.0 || prox != InterfaceProximity::none);

  Vec prop = st.x;
  if (skew_step) {
    const double k_side = near.signed_distance >= 0.0 ? near.kappa_n_pos : near.kappa_n_neg;
    const double sigma = std::sqrt(2.0 * k_side);
    Vec xi(d);
    for (int i = 0; i < d; ++i) xi[i] = sign * rng.next_normal();
    const double xi_n = dot(xi, near.normal);
    for (int i = 0; i < d; ++i)
      prop[i] += sigma * ctx.sqrt_h * (xi[i] - xi_n * near.normal[i]);
    const double d1 =
        skew_transition_physical(near.signed_distance, near.kappa_n_neg, near.kappa_n_pos, h, rng);
    for (int i = 0; i < d; ++i) prop[i] += (d1 - near.signed_distance) * near.normal[i];
  } else if (ctx.scalar_vol) {
    const double sigma = std::sqrt(2.0 * ctx.field.scalar_kappa_at(st.x));
    for (int i = 0; i < d; ++i) prop[i] += sigma * ctx.sqrt_h * sign * rng.next_normal();
  } else if (ctx.constant_factor) {
    Vec xi(d);
    for (int i = 0; i < d; ++i) xi[i] = sign * rng.next_normal();
    const Vec dw = mat_vec(ctx.factor_const, xi);
    for (int i = 0; i < d; ++i) prop[i] += ctx.sqrt_h * dw[i];
  } else {
    Vec xi(d);
    for (int i = 0; i < d; ++i) xi[i] = sign * rng.next_normal();
    const Mat b = ctx.field.diffusion_factor(st.x);
    const Vec dw = mat_vec(b, xi);
    for (int i = 0; i < d; ++i) prop[i] += ctx.sqrt_h * dw[i];
  }
  if (ctx.has_drift && !skew_step) {
    const Vec a = ctx.field.drift_at(st.x);
    for (int i = 0; i < d; ++i) prop[i] += h * a[i];
  }

  Vec from = st.x;
  bool resolved = false;
  for (int iter = 0; iter < ctx.cfg.max_boundary_iterations; ++iter) {
    std::optional<InterfaceHit> iface;
    if (scan_interfaces) iface = ctx.field.first_interface_crossing(from, prop);

    std::optional<BoundaryCrossing> bdry;
    if (ctx.has_boundary) bdry = first_boundary_crossing(ctx.domain, from, prop);

    if (bdry && ctx.bc.role(bdry->part) == BoundaryRole::absorb &&
        (!iface || bdry->s < iface->s)) {
      st.t += h;
      st.x = bdry->point;
      st.status = PathStatus::absorbed;
      if (ctx.functional.kind == Functional::Kind::dirichlet)
        st.payoff = ctx.functional.boundary_data(bdry->point);
      log_event(ctx, st.t, st.x, PathEvent::Kind::absorb, 0.0);
      return;
    }

    if (iface && (!bdry || iface->s < bdry->s)) {
      CrossingResult cr = apply_interface_crossing(from, prop, *iface, rng);
      st.interface_local_time += cr.d_interface_local_time;
      log_event(ctx, st.t, iface->point, PathEvent::Kind::cross, cr.d_interface_local_time);
      // Re-check the remainder from just past the interface.
      from = iface->point;
      const double nudge = 1e-12 * (1.0 + norm(from));
      for (int i = 0; i < d; ++i)
        from[i] += (cr.ended_negative_side ? -nudge : nudge) * iface->normal[i];
      prop = cr.x_new;
      continue;
    }

    if (ctx.has_boundary && signed_distance(ctx.domain, prop) > 0.0) {
      const BoundaryFrame frame = nearest_boundary_frame(ctx.domain, prop, ctx.r_snap);
      if (ctx.bc.role(frame.part) == BoundaryRole::absorb) {
        st.t += h;
        st.x = frame.point;
        st.status = PathStatus::absorbed;
        if (ctx.functional.kind == Functional::Kind::dirichlet)
          st.payoff = ctx.functional.boundary_data(frame.point);
        log_event(ctx, st.t, st.x, PathEvent::Kind::absorb, 0.0);
        return;
      }
      const Mat kappa = ctx.field.kappa_at(frame.point);
      const ReflectionResult rr = apply_reflection(prop, frame, kappa);
      st.local_time += rr.d_local_time;
      accumulate_boundary_payoff(st, ctx, frame, rr.d_local_time);
      log_event(ctx, st.t, frame.point, PathEvent::Kind::reflect, rr.d_local_time);
      from = frame.point;
      prop = rr.x_in;
      continue;
    }

    resolved = true;
    break;
  }

  if (!resolved && ctx.has_boundary && signed_distance(ctx.domain, prop) > 0.0) {
    const BoundaryFrame frame = nearest_boundary_frame(ctx.domain, prop, ctx.r_snap);
    prop = frame.point;
    const double nudge = 1e-12 * (1.0 + norm(prop));
    for (int i = 0; i < d; ++i) prop[i] -= nudge * frame.normal[i];
    ++st.clamp_count;
    log_event(ctx, st.t, prop, PathEvent::Kind::clamp, 0.0);
  }

  st.t += h;
  st.x = prop;
  bool finite = true;
  for (int i = 0; i < d; ++i) finite = finite && std::isfinite(prop[i]);
  if (!finite) throw NumericalError("step: non-finite position increment");
  log_event(ctx, st.t, st.x, PathEvent::Kind::step, 0.0);
}

void continue_path(PathState& st, const StepContext& ctx, Philox& rng, double sign) {
  const bool gauged = (ctx.functional.kind == Functional::Kind::cem ||
                       ctx.functional.kind == Functional::Kind::mixed_cem) &&
                      !ctx.functional.zero_gauge;
  while (st.status == PathStatus::running) {
    if (st.t >= ctx.cfg.max_time - 0.5 * ctx.cfg.h) {
      st.status = PathStatus::truncated;
      break;
    }
    step(st, ctx, rng, sign);
    if (gauged && st.robin_integral > ctx.gauge_cut) {
      st.status = PathStatus::truncated;
      break;
    }
  }
}

PathState simulate_path(const Vec& x0, const StepContext& ctx, Philox& rng, double sign) {
  PathState st;
  st.x = x0;
  continue_path(st, ctx, rng, sign);
  return st;
}

PathState step(const PathState& state, const ConductivityField& field, const Domain& domain,
               BoundaryConditions bc, const StepperConfig& cfg, Philox& rng) {
  Functional none = Functional::none();
  StepContext ctx(field, domain, bc, none, cfg);
  PathState st = state;
  step(st, ctx, rng);
  return st;
}

PathState simulate_path(const Vec& x0, const ConductivityField& field, const Domain& domain,
                        BoundaryConditions bc, const Functional& functional,
                        const StepperConfig& cfg, Philox& rng) {
  StepContext ctx(field, domain, bc, functional, cfg);
  return simulate_path(x0, ctx, rng);
}

}  // namespace fkeit
