#include "fkeit/feynman_kac.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>

#include "fkeit/errors.hpp"
#include "fkeit/rng.hpp"
#include "fkeit/worker_pool.hpp"

namespace fkeit {

namespace {

struct Timer {
  std::chrono::steady_clock::time_point t0 = std::chrono::steady_clock::now();
  double seconds() const {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  }
};

std::int64_t units_for(const McConfig& mc) {
  if (mc.n_paths < 2) throw ConfigError("mc.n_paths must be >= 2");
  return mc.antithetic ? (mc.n_paths + 1) / 2 : mc.n_paths;
}

double grounding_defect(const ElectrodeLayout& layout) {
  double s = 0.0, scale = 0.0;
  for (double u : layout.voltages) {
    s += u;
    scale = std::max(scale, std::abs(u));
  }
  return std::abs(s) / std::max(scale, 1e-300);
}

}  // namespace

McEstimate run_mc(std::int64_t n_units, const McConfig& mc,
                  const std::function<double(std::int64_t)>& unit_payoff) {
  Timer timer;
  const int chunk = std::max(1, mc.chunk_size);
  const std::int64_t n_chunks = (n_units + chunk - 1) / chunk;
  std::vector<ChunkSums> partial(static_cast<std::size_t>(n_chunks));
  run_chunks(n_chunks, resolve_workers(mc.workers), [&](std::int64_t c) {
    ChunkSums sums;
    const std::int64_t lo = c * chunk, hi = std::min<std::int64_t>(n_units, lo + chunk);
    for (std::int64_t i = lo; i < hi; ++i) sums.add(unit_payoff(i));
    partial[static_cast<std::size_t>(c)] = sums;
  });
  ChunkSums total;
  for (const auto& p : partial) total.merge(p);
  McEstimate est = finalize_estimate(total);
  est.n_paths = mc.antithetic ? 2 * est.n_units : est.n_units;
  est.seed = mc.seed;
  est.elapsed_seconds = timer.seconds();
  return est;
}

void validate_bvp(const BvpSpec& spec) {
  spec.medium.validate();
  if (spec.domain.dim != spec.medium.dim)
    throw ConfigError("bvp: domain and medium dimensions disagree");
  switch (spec.kind) {
    case BvpKind::dirichlet:
      if (!spec.domain.has_boundary()) throw ConfigError("bvp.dirichlet: domain has no boundary");
      if (!spec.boundary_data) throw ConfigError("bvp.dirichlet: boundary data missing");
      break;
    case BvpKind::continuum: {
      if (!spec.domain.has_boundary()) throw ConfigError("bvp.continuum: domain has no boundary");
      if (!spec.boundary_data) throw ConfigError("bvp.continuum: flux data missing");
      // Compatibility: the total current through the boundary must vanish.
      auto nodes = boundary_quadrature(spec.domain, BoundaryPart::accessible, 4096);
      double total = 0.0, scale = 0.0;
      for (const auto& q : nodes) {
        const double f = spec.boundary_data(q.point);
        total += f * q.weight;
        scale += std::abs(f) * q.weight;
      }
      if (scale > 0.0 && std::abs(total) > 1e-10 * std::max(scale, 1.0))
        throw ConfigError("bvp.continuum: flux violates compatibility (nonzero total current)");
      break;
    }
    case BvpKind::robin_killed:
      if (spec.alpha <= 0.0) throw ConfigError("bvp.robin_killed: alpha must be positive");
      if (!spec.boundary_data) throw ConfigError("bvp.robin_killed: flux data missing");
      break;
    case BvpKind::cem:
      validate_layout(spec.domain, spec.layout);
      if (grounding_defect(spec.layout) > 1e-12)
        throw ConfigError("bvp.cem: voltages violate the grounding condition (sum U != 0)");
      break;
    case BvpKind::mixed_cem:
      validate_layout(spec.domain, spec.layout);
      if (grounding_defect(spec.layout) > 1e-12)
        throw ConfigError("bvp.mixed_cem: voltages violate the grounding condition (sum U != 0)");
      if (!spec.domain.has_inaccessible_part())
        throw ConfigError("bvp.mixed_cem: domain has no inaccessible boundary part");
      break;
  }
}

McEstimate estimate_dirichlet(const Vec& x, const BvpSpec& spec, const McConfig& mc,
                              const StepperConfig& cfg) {
  validate_bvp(spec);
  const ConductivityField field = spec.realize_field();
  const Functional functional = Functional::dirichlet(spec.boundary_data);
  const StepContext ctx(field, spec.domain, BoundaryConditions::absorb_all(), functional, cfg);
  const std::int64_t n_units = units_for(mc);
  return run_mc(n_units, mc, [&](std::int64_t i) {
    Philox rng(mc.seed, static_cast<std::uint64_t>(i));
    if (!mc.antithetic) return simulate_path(x, ctx, rng, +1.0).payoff;
    Philox rng2(mc.seed, static_cast<std::uint64_t>(i));
    const double a = simulate_path(x, ctx, rng, +1.0).payoff;
    const double b = simulate_path(x, ctx, rng2, -1.0).payoff;
    return 0.5 * (a + b);
  });
}

McEstimate estimate_continuum(const Vec& x, const BvpSpec& spec, const McConfig& mc,
                              const StepperConfig& cfg, const ContinuumOptions& opts) {
  validate_bvp(spec);
  const ConductivityField field = spec.realize_field();
  const Functional functional = Functional::boundary_flux(spec.boundary_data);

  double horizon = opts.initial_horizon;
  if (horizon <= 0.0) {
    const double r = spec.domain.radius > 0.0 ? spec.domain.radius : 1.0;
    horizon = 0.25 * r * r * spec.medium.ellipticity_bound;
  }

  auto run_at = [&](double t_full, const McConfig& budget, double& half_mean) {
    StepperConfig cfg_half = cfg;
    cfg_half.max_time = 0.5 * t_full;
    StepperConfig cfg_full = cfg;
    cfg_full.max_time = t_full;
    const StepContext ctx_half(field, spec.domain, BoundaryConditions::reflect_all(), functional,
                               cfg_half);
    const StepContext ctx_full(field, spec.domain, BoundaryConditions::reflect_all(), functional,
                               cfg_full);
    const std::int64_t n_units = units_for(budget);
    double half_sum = 0.0;
    std::vector<double> half_partial(static_cast<std::size_t>((n_units + budget.chunk_size - 1) /
                                                              budget.chunk_size),
                                     0.0);
    auto unit = [&](std::int64_t i, double* half_out) {
      double payoff = 0.0, half = 0.0;
      const int reps = budget.antithetic ? 2 : 1;
      for (int r = 0; r < reps; ++r) {
        const double sign = r == 0 ? +1.0 : -1.0;
        Philox rng(budget.seed, static_cast<std::uint64_t>(i));
        PathState st = simulate_path(x, ctx_half, rng, sign);
        half += st.payoff;
        st.status = PathStatus::running;
        continue_path(st, ctx_full, rng, sign);
        payoff += st.payoff;
      }
      *half_out = half / reps;
      return payoff / reps;
    };
    // Chunked like run_mc but with the extra half-horizon accumulator.
    const int chunk = std::max(1, budget.chunk_size);
    const std::int64_t n_chunks = (n_units + chunk - 1) / chunk;
    std::vector<ChunkSums> partial(static_cast<std::size_t>(n_chunks));
    run_chunks(n_chunks, resolve_workers(budget.workers), [&](std::int64_t c) {
      ChunkSums sums;
      double half_acc = 0.0;
      const std::int64_t lo = c * chunk, hi = std::min<std::int64_t>(n_units, lo + chunk);
      for (std::int64_t i = lo; i < hi; ++i) {
        double h_val = 0.0;
        sums.add(unit(i, &h_val));
        half_acc += h_val;
      }
      partial[static_cast<std::size_t>(c)] = sums;
      half_partial[static_cast<std::size_t>(c)] = half_acc;
    });
    ChunkSums total;
    for (const auto& p : partial) total.merge(p);
    for (double hsum : half_partial) half_sum += hsum;
    McEstimate est = finalize_estimate(total);
    est.n_paths = budget.antithetic ? 2 * est.n_units : est.n_units;
    est.seed = budget.seed;
    half_mean = half_sum / static_cast<double>(total.n);
    return est;
  };

  Timer timer;
  McConfig pilot = mc;
  pilot.n_paths = opts.pilot_paths > 0 ? opts.pilot_paths : std::max<std::int64_t>(mc.n_paths / 8, 512);
  // Double the horizon until the tail increment is statistically invisible.
  double half_mean = 0.0;
  for (int round = 0; round < 24; ++round) {
    McEstimate probe = run_at(horizon, pilot, half_mean);
    const double tol = opts.tol_trunc_factor * std::max(probe.stderr_, 1e-14);
    if (std::abs(probe.mean - half_mean) < tol || horizon >= cfg.max_time) break;
    horizon = std::min(2.0 * horizon, cfg.max_time);
  }
  McEstimate est = run_at(horizon, mc, half_mean);
  est.elapsed_seconds = timer.seconds();
  return est;
}

McEstimate estimate_robin_killed(const Vec& x, const BvpSpec& spec, const McConfig& mc,
                                 const StepperConfig& cfg, double tail_tolerance) {
  validate_bvp(spec);
  const ConductivityField field = spec.realize_field();
  const Functional functional = Functional::robin_killed(spec.boundary_data, spec.alpha);

  // Tail bound: e^{-alpha T} sup|f| E[dL/dt] / alpha <= tol with the
  // equilibrium local-time rate |bd D| / |D|.
  double sup_f = 0.0;
  for (const auto& q : boundary_quadrature(spec.domain, BoundaryPart::accessible, 1024))
    sup_f = std::max(sup_f, std::abs(spec.boundary_data(q.point)));
  const double r = spec.domain.radius > 0.0 ? spec.domain.radius : 1.0;
  const double rate = 2.0 * spec.domain.dim / r;  // sphere/ball surface-to-volume
  double horizon = std::log(std::max(sup_f * rate / (spec.alpha * tail_tolerance), 2.0)) / spec.alpha;
  horizon = std::min(horizon, cfg.max_time);

  StepperConfig cfg_t = cfg;
  cfg_t.max_time = horizon;
  const StepContext ctx(field, spec.domain, BoundaryConditions::reflect_all(), functional, cfg_t);
  const std::int64_t n_units = units_for(mc);
  return run_mc(n_units, mc, [&](std::int64_t i) {
    Philox rng(mc.seed, static_cast<std::uint64_t>(i));
    if (!mc.antithetic) return simulate_path(x, ctx, rng, +1.0).payoff;
    Philox rng2(mc.seed, static_cast<std::uint64_t>(i));
    const double a = simulate_path(x, ctx, rng, +1.0).payoff;
    const double b = simulate_path(x, ctx, rng2, -1.0).payoff;
    return 0.5 * (a + b);
  });
}

namespace {

McEstimate estimate_gauged(const Vec& x, const BvpSpec& spec, const McConfig& mc,
                           const StepperConfig& cfg, bool mixed) {
  validate_bvp(spec);
  const ConductivityField field = spec.realize_field();
  const Functional functional =
      mixed ? Functional::mixed_cem(spec.layout) : Functional::cem(spec.layout);
  const BoundaryConditions bc =
      mixed ? BoundaryConditions::mixed() : BoundaryConditions::reflect_all();

  if (mixed) {
    // tau = 0 on the inaccessible part: the payoff is exactly zero.
    const double sd = signed_distance(spec.domain, x);
    if (std::abs(sd) < 1e-14) {
      const BoundaryFrame frame = nearest_boundary_frame(spec.domain, x, 1e-12 + 1e-12 * norm(x));
      if (frame.part == BoundaryPart::inaccessible) {
        McEstimate zero;
        zero.mean = 0.0;
        zero.stderr_ = 0.0;
        zero.n_units = mc.n_paths;
        zero.n_paths = mc.n_paths;
        zero.seed = mc.seed;
        return zero;
      }
    }
  }

  const StepContext ctx(field, spec.domain, bc, functional, cfg);
  const std::int64_t n_units = units_for(mc);
  return run_mc(n_units, mc, [&](std::int64_t i) {
    Philox rng(mc.seed, static_cast<std::uint64_t>(i));
    if (!mc.antithetic) return simulate_path(x, ctx, rng, +1.0).payoff;
    Philox rng2(mc.seed, static_cast<std::uint64_t>(i));
    const double a = simulate_path(x, ctx, rng, +1.0).payoff;
    const double b = simulate_path(x, ctx, rng2, -1.0).payoff;
    return 0.5 * (a + b);
  });
}

}  // namespace

McEstimate estimate_cem(const Vec& x, const BvpSpec& spec, const McConfig& mc,
                        const StepperConfig& cfg) {
  if (spec.kind != BvpKind::cem) throw ConfigError("estimate_cem: spec.kind must be cem");
  return estimate_gauged(x, spec, mc, cfg, false);
}

McEstimate estimate_mixed_cem(const Vec& x, const BvpSpec& spec, const McConfig& mc,
                              const StepperConfig& cfg) {
  if (spec.kind != BvpKind::mixed_cem)
    throw ConfigError("estimate_mixed_cem: spec.kind must be mixed_cem");
  return estimate_gauged(x, spec, mc, cfg, true);
}

std::vector<McEstimate> estimate_electrode_currents(const BvpSpec& spec, const McConfig& mc,
                                                    const StepperConfig& cfg,
                                                    int nodes_per_electrode) {
  if (spec.kind != BvpKind::cem && spec.kind != BvpKind::mixed_cem)
    throw ConfigError("estimate_electrode_currents: spec.kind must be cem or mixed_cem");
  validate_bvp(spec);
  if (nodes_per_electrode <= 0) nodes_per_electrode = spec.domain.dim >= 3 ? 25 : 8;
  const bool mixed = spec.kind == BvpKind::mixed_cem;

  std::vector<McEstimate> currents;
  int node_counter = 0;
  for (int l = 0; l < spec.layout.count(); ++l) {
    const Electrode& e = spec.layout.electrodes[static_cast<std::size_t>(l)];
    const double measure = electrode_measure(spec.domain, e);
    const double z = spec.layout.contact_impedance[static_cast<std::size_t>(l)];
    const double u_l = spec.layout.voltages[static_cast<std::size_t>(l)];
    auto nodes = electrode_quadrature(spec.domain, e, nodes_per_electrode);

    double j_sum = 0.0, var_sum = 0.0;
    std::int64_t n_paths_total = 0;
    double elapsed = 0.0;
    for (const auto& q : nodes) {
      McConfig node_mc = mc;
      node_mc.seed = mix_seed(mc.seed, 0xE1EC7800u + static_cast<std::uint64_t>(node_counter++));
      const McEstimate u_hat = mixed ? estimate_mixed_cem(q.point, spec, node_mc, cfg)
                                     : estimate_cem(q.point, spec, node_mc, cfg);
      // f - g u on the electrode: (U_l - u) / z_l.
      j_sum += q.weight * (u_l - u_hat.mean) / z;
      var_sum += (q.weight * u_hat.stderr_ / z) * (q.weight * u_hat.stderr_ / z);
      n_paths_total += u_hat.n_paths;
      elapsed += u_hat.elapsed_seconds;
    }
    McEstimate j;
    j.mean = j_sum / measure;
    j.stderr_ = std::sqrt(var_sum) / measure;
    j.n_paths = n_paths_total;
    j.n_units = n_paths_total;
    j.seed = mc.seed;
    j.elapsed_seconds = elapsed;
    currents.push_back(j);
  }
  return currents;
}

}  // namespace fkeit
