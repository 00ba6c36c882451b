#include "fkeit/homogenize.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>

#include "fkeit/errors.hpp"
#include "fkeit/reference.hpp"
#include "fkeit/rng.hpp"
#include "fkeit/worker_pool.hpp"

namespace fkeit {

namespace {

// Reference volatility for the control variate: probability-weighted mean of
// the isotropic phase values (any constant works for unbiasedness).
double reference_kappa(const MediumSpec& spec) {
  switch (spec.kind) {
    case MediumKind::constant:
      return spec.constant_value(0, 0);
    case MediumKind::two_phase:
      return 0.5 * (spec.interface.kappa1 + spec.interface.kappa2);
    case MediumKind::layered: {
      double s = 0.0;
      for (double v : spec.layer_values) s += v;
      return s / static_cast<double>(spec.layer_values.size());
    }
    case MediumKind::checkerboard: {
      double s = 0.0;
      for (std::size_t k = 0; k < spec.cell_values.size(); ++k)
        s += spec.cell_probabilities[k] * spec.cell_values[k](0, 0);
      return s;
    }
    case MediumKind::poisson_spheres:
      return 0.5 * (spec.poisson_kappa_in + spec.poisson_kappa_out);
    case MediumKind::smooth:
      return spec.smooth_base;
  }
  return 1.0;
}

/// Free-space path from the origin; records xi-projections of the medium
/// path X and the constant-reference path Z (same increments) at every
/// checkpoint step count.
struct MsdPathRecorder {
  const ConductivityField& field;
  const Vec& xi;
  double h;
  double sqrt_h;
  double sigma_ref;
  bool scalar_vol;
  bool has_interfaces;
  double interface_band;  // exact-skew band; <= 0 reverts to the event rule
  const std::vector<std::int64_t>& checkpoint_steps;  // ascending

  void run(Philox& rng, double* proj_x_out, double* proj_z_out) const {
    const int d = field.dim();
    Vec x(d);
    double z_proj = 0.0;
    std::size_t next_cp = 0;
    const std::int64_t n_steps = checkpoint_steps.back();
    for (std::int64_t k = 1; k <= n_steps; ++k) {
      NearInterface near;
      InterfaceProximity prox = InterfaceProximity::none;
      if (has_interfaces && interface_band > 0.0)
        prox = field.probe_interface(x, interface_band, &near);

      Vec dw(d);
      for (int i = 0; i < d; ++i) dw[i] = sqrt_h * rng.next_normal();
      z_proj += sigma_ref * dot(dw, xi);

      if (prox == InterfaceProximity::isolated) {
        // Exact skew transition for the normal coordinate, Gaussian
        // tangential motion with the start-side volatility.
        const double k_side = near.signed_distance >= 0.0 ? near.kappa_n_pos : near.kappa_n_neg;
        const double sigma = std::sqrt(2.0 * k_side);
        const double dw_n = dot(dw, near.normal);
        for (int i = 0; i < d; ++i) x[i] += sigma * (dw[i] - dw_n * near.normal[i]);
        const double d1 = skew_transition_physical(near.signed_distance, near.kappa_n_neg,
                                                   near.kappa_n_pos, h, rng);
        for (int i = 0; i < d; ++i) x[i] += (d1 - near.signed_distance) * near.normal[i];
      } else {
        Vec prop = x;
        if (scalar_vol) {
          const double sigma = std::sqrt(2.0 * field.scalar_kappa_at(x));
          for (int i = 0; i < d; ++i) prop[i] += sigma * dw[i];
        } else {
          const Mat b = field.diffusion_factor(x);
          const Vec bdw = mat_vec(b, dw);
          for (int i = 0; i < d; ++i) prop[i] += bdw[i];
          if (field.has_analytic_drift()) {
            const Vec a = field.drift_at(x);
            for (int i = 0; i < d; ++i) prop[i] += h * a[i];
          }
        }
        const bool scan = has_interfaces && (interface_band <= 0.0 || prox != InterfaceProximity::none);
        if (scan) {
          Vec from = x;
          for (int guard = 0; guard < 8; ++guard) {
            auto hit = field.first_interface_crossing(from, prop);
            if (!hit) break;
            CrossingResult cr = apply_interface_crossing(from, prop, *hit, rng);
            from = hit->point;
            const double nudge = 1e-12 * (1.0 + norm(from));
            for (int i = 0; i < d; ++i)
              from[i] += (cr.ended_negative_side ? -nudge : nudge) * hit->normal[i];
            prop = cr.x_new;
          }
        }
        x = prop;
      }
      if (next_cp < checkpoint_steps.size() && k == checkpoint_steps[next_cp]) {
        proj_x_out[next_cp] = dot(x, xi);
        proj_z_out[next_cp] = z_proj;
        ++next_cp;
      }
    }
  }
};

struct MsdMoments {
  // Per checkpoint: realization-level samples of the mean payoff, plus pooled
  // path-level sums for the single-realization error bar.
  std::vector<std::vector<double>> realization_means;  // [checkpoint][realization]
  std::vector<ChunkSums> path_sums;                    // [checkpoint], pooled over everything
  std::vector<double> lambda;                          // control coefficient per checkpoint
  std::int64_t paths_total = 0;
};

MsdMoments run_msd(const MsdRequest& req, const Vec& xi, const std::vector<double>& t_grid) {
  if (std::abs(norm(xi) - 1.0) > 1e-12)
    throw ConfigError("msd: direction vectors must be unit length");
  for (double t : t_grid)
    if (t <= 0.0) throw ConfigError("msd: horizons must be positive");
  req.medium.validate();

  const double h = req.cfg.h;
  std::vector<std::int64_t> cp_steps;
  for (double t : t_grid)
    cp_steps.push_back(std::max<std::int64_t>(1, static_cast<std::int64_t>(std::llround(t / h))));
  const std::size_t n_cp = cp_steps.size();
  const double kappa_ref = reference_kappa(req.medium);
  const double sigma_ref = std::sqrt(2.0 * kappa_ref);

  MsdMoments out;
  out.realization_means.assign(n_cp, {});
  out.path_sums.assign(n_cp, ChunkSums{});
  out.lambda.assign(n_cp, 0.0);

  // Control-variate coefficient from a separate pilot stream on the first
  // realization; frozen before the measurement pass keeps the estimator
  // exactly unbiased.
  const ConductivityField pilot_field(req.medium, mix_seed(req.seed, 0), 1.0);
  if (req.control_variate && req.pilot_paths > 1) {
    MsdPathRecorder rec{pilot_field, xi, h, std::sqrt(h), sigma_ref,
                        pilot_field.piecewise_isotropic(), pilot_field.has_interfaces(),
                        req.cfg.skew_band_sigmas *
                            std::sqrt(2.0 * req.medium.ellipticity_bound * h),
                        cp_steps};
    std::vector<double> sum_pc(n_cp, 0.0), sum_cc(n_cp, 0.0), sum_p(n_cp, 0.0), sum_c(n_cp, 0.0);
    std::vector<double> px(n_cp), pz(n_cp);
    for (std::int64_t i = 0; i < req.pilot_paths; ++i) {
      Philox rng(mix_seed(req.seed, 0x9110f) , static_cast<std::uint64_t>(i));
      rec.run(rng, px.data(), pz.data());
      for (std::size_t k = 0; k < n_cp; ++k) {
        const double tk = static_cast<double>(cp_steps[k]) * h;
        const double p = px[k] * px[k] / (2.0 * tk);
        const double c = pz[k] * pz[k] / (2.0 * tk) - kappa_ref;
        sum_p[k] += p;
        sum_c[k] += c;
        sum_pc[k] += p * c;
        sum_cc[k] += c * c;
      }
    }
    const double n = static_cast<double>(req.pilot_paths);
    for (std::size_t k = 0; k < n_cp; ++k) {
      const double cov = sum_pc[k] / n - (sum_p[k] / n) * (sum_c[k] / n);
      const double var = sum_cc[k] / n - (sum_c[k] / n) * (sum_c[k] / n);
      out.lambda[k] = var > 0.0 ? cov / var : 0.0;
    }
  }

  // Flatten (realization, chunk) into one task list so that many-realization
  // runs parallelize as well as many-path runs; reduction stays in
  // (realization, chunk) order regardless of the thread schedule.
  const int workers = resolve_workers(req.workers);
  const std::int64_t n_units = req.n_paths_per_realization;
  const int chunk = std::max(1, req.chunk_size);
  const std::int64_t chunks_per_real = (n_units + chunk - 1) / chunk;
  const std::int64_t n_tasks = chunks_per_real * req.n_realizations;
  const double band =
      req.cfg.skew_band_sigmas * std::sqrt(2.0 * req.medium.ellipticity_bound * h);

  std::vector<ConductivityField> fields;
  fields.reserve(static_cast<std::size_t>(req.n_realizations));
  for (int r = 0; r < req.n_realizations; ++r)
    fields.emplace_back(req.medium, mix_seed(req.seed, static_cast<std::uint64_t>(r)), 1.0);

  std::vector<std::vector<ChunkSums>> partial(static_cast<std::size_t>(n_tasks),
                                              std::vector<ChunkSums>(n_cp));
  run_chunks(n_tasks, workers, [&](std::int64_t task) {
    const std::int64_t r = task / chunks_per_real;
    const std::int64_t c = task % chunks_per_real;
    const ConductivityField& field = fields[static_cast<std::size_t>(r)];
    MsdPathRecorder rec{field, xi, h, std::sqrt(h), sigma_ref,
                        field.piecewise_isotropic(), field.has_interfaces(), band, cp_steps};
    const std::uint64_t stream_seed =
        mix_seed(req.seed, 0xA11A + static_cast<std::uint64_t>(r));
    std::vector<ChunkSums> acc(n_cp);
    std::vector<double> px(n_cp), pz(n_cp);
    const std::int64_t lo = c * chunk, hi = std::min<std::int64_t>(n_units, lo + chunk);
    for (std::int64_t i = lo; i < hi; ++i) {
      Philox rng(stream_seed, static_cast<std::uint64_t>(i));
      rec.run(rng, px.data(), pz.data());
      for (std::size_t k = 0; k < n_cp; ++k) {
        const double tk = static_cast<double>(cp_steps[k]) * h;
        const double p = px[k] * px[k] / (2.0 * tk);
        const double cv = pz[k] * pz[k] / (2.0 * tk) - kappa_ref;
        acc[k].add(p - out.lambda[k] * cv);
      }
    }
    partial[static_cast<std::size_t>(task)] = acc;
  });
  for (int r = 0; r < req.n_realizations; ++r) {
    for (std::size_t k = 0; k < n_cp; ++k) {
      ChunkSums real_total;
      for (std::int64_t c = 0; c < chunks_per_real; ++c)
        real_total.merge(partial[static_cast<std::size_t>(r * chunks_per_real + c)][k]);
      out.realization_means[k].push_back(real_total.sum / static_cast<double>(real_total.n));
      out.path_sums[k].merge(real_total);
    }
    out.paths_total += n_units;
  }
  return out;
}

McEstimate collapse(const MsdMoments& m, std::size_t k, const MsdRequest& req) {
  const auto& samples = m.realization_means[k];
  McEstimate est;
  if (samples.size() >= 2) {
    // Realization means as i.i.d. samples: conservative under within-
    // realization correlation, which is the annealed-measure error bar.
    est = estimate_from_samples(samples);
  } else {
    est = finalize_estimate(m.path_sums[k]);
  }
  est.n_paths = m.paths_total;
  est.seed = req.seed;
  return est;
}

}  // namespace

McEstimate estimate_msd_direction(const MsdRequest& req, const Vec& xi) {
  std::vector<double> grid{req.t};
  auto moments = run_msd(req, xi, grid);
  return collapse(moments, 0, req);
}

EffectiveTensorEstimate estimate_effective_tensor(const MsdRequest& req) {
  const int d = req.medium.dim;
  EffectiveTensorEstimate out;
  out.matrix = Mat(d);
  out.entry_stderr = Mat(d);
  out.t = req.t;
  out.n_realizations = req.n_realizations;
  out.seed = req.seed;

  std::vector<McEstimate> diag(static_cast<std::size_t>(d));
  for (int i = 0; i < d; ++i) {
    MsdRequest r = req;
    r.seed = mix_seed(req.seed, 0xD1A0 + static_cast<std::uint64_t>(i));
    diag[static_cast<std::size_t>(i)] = estimate_msd_direction(r, unit_vec(d, i));
    out.matrix(i, i) = diag[static_cast<std::size_t>(i)].mean;
    out.entry_stderr(i, i) = diag[static_cast<std::size_t>(i)].stderr_;
    out.n_paths += diag[static_cast<std::size_t>(i)].n_paths;
  }
  for (int i = 0; i < d; ++i)
    for (int j = i + 1; j < d; ++j) {
      Vec xi(d);
      const double inv_sqrt2 = 1.0 / std::sqrt(2.0);
      xi[i] = inv_sqrt2;
      xi[j] = inv_sqrt2;
      MsdRequest r = req;
      r.seed = mix_seed(req.seed, 0x0FFD + static_cast<std::uint64_t>(i * kMaxDim + j));
      const McEstimate q = estimate_msd_direction(r, xi);
      const double off = q.mean - 0.5 * (out.matrix(i, i) + out.matrix(j, j));
      out.matrix(i, j) = out.matrix(j, i) = off;
      const double se = std::sqrt(q.stderr_ * q.stderr_ +
                                  0.25 * out.entry_stderr(i, i) * out.entry_stderr(i, i) +
                                  0.25 * out.entry_stderr(j, j) * out.entry_stderr(j, j));
      out.entry_stderr(i, j) = out.entry_stderr(j, i) = se;
      out.n_paths += q.n_paths;
    }
  return out;
}

ConvergenceCurve convergence_curve(const MsdRequest& req, const Vec& xi,
                                   const std::vector<double>& t_grid, double reference) {
  if (t_grid.empty()) throw ConfigError("convergence_curve: empty t grid");
  for (std::size_t k = 1; k < t_grid.size(); ++k)
    if (t_grid[k] <= t_grid[k - 1]) throw ConfigError("convergence_curve: t grid must increase");

  MsdRequest r = req;
  auto moments = run_msd(r, xi, t_grid);
  ConvergenceCurve curve;
  double sx = 0.0, sy = 0.0, sxx = 0.0, sxy = 0.0;
  int n_fit = 0;
  for (std::size_t k = 0; k < t_grid.size(); ++k) {
    McEstimate est = collapse(moments, k, req);
    ConvergenceRow row;
    row.t = t_grid[k];
    row.mean = est.mean;
    row.stderr_ = est.stderr_;
    row.reference = reference;
    row.abs_error = std::abs(est.mean - reference);
    curve.rows.push_back(row);
    if (row.abs_error > 0.0) {
      const double lx = std::log(row.t), ly = std::log(row.abs_error);
      sx += lx;
      sy += ly;
      sxx += lx * lx;
      sxy += lx * ly;
      ++n_fit;
    }
  }
  if (n_fit >= 2) {
    const double denom = n_fit * sxx - sx * sx;
    curve.fitted_slope = denom != 0.0 ? (n_fit * sxy - sx * sy) / denom : 0.0;
  }
  return curve;
}

EpsilonSweepResult epsilon_sweep_currents(const BvpSpec& mixed_spec,
                                          const std::vector<double>& epsilon_grid,
                                          const McConfig& mc, const StepperConfig& cfg,
                                          const EpsilonSweepOptions& opts) {
  if (mixed_spec.kind != BvpKind::mixed_cem)
    throw ConfigError("epsilon_sweep_currents: spec.kind must be mixed_cem");
  if (mixed_spec.domain.dim != 2)
    throw UnsupportedQueryError("epsilon_sweep_currents: FD reference is 2D only");
  validate_bvp(mixed_spec);

  EpsilonSweepResult out;
  if (opts.kappa_star_override) {
    out.kappa_star = *opts.kappa_star_override;
  } else {
    const ConductivityField unit_field(mixed_spec.medium, mixed_spec.realization_seed, 1.0);
    out.kappa_star = fd_effective_tensor(unit_field, opts.fd_tensor_period, opts.fd_tensor_cells);
  }
  out.kappa_star_iso = 0.5 * (out.kappa_star(0, 0) + out.kappa_star(1, 1));

  // Homogenized reference currents from the constant-kappa* mixed solve.
  PolarProblem ref_problem;
  ref_problem.grid = PolarGrid{mixed_spec.domain.radius, opts.fd_nr, opts.fd_ntheta, true};
  const double k_iso = out.kappa_star_iso;
  ref_problem.kappa = [k_iso](const Vec&) { return k_iso; };
  ref_problem.arc = FdBoundary::dirichlet([](const Vec&) { return 0.0; });
  ref_problem.flat = fd_boundary_from_layout(mixed_spec.layout);
  const PolarFdSolution ref_solution = fd_solve_polar(ref_problem);
  const auto ref_currents = ref_solution.electrode_currents(mixed_spec.layout);
  out.reference_currents = ref_currents.current;

  for (double eps : epsilon_grid) {
    BvpSpec spec_eps = mixed_spec;
    spec_eps.epsilon = eps;
    EpsilonSweepRow row;
    row.epsilon = eps;
    row.currents = estimate_electrode_currents(spec_eps, mc, cfg, opts.quadrature_nodes);
    double dev = 0.0, var = 0.0;
    for (std::size_t l = 0; l < row.currents.size(); ++l) {
      dev = std::max(dev, std::abs(row.currents[l].mean - out.reference_currents[l]));
      var += row.currents[l].stderr_ * row.currents[l].stderr_;
    }
    row.max_deviation = dev;
    row.pooled_stderr = std::sqrt(var);
    out.rows.push_back(row);
  }
  return out;
}

}  // namespace fkeit
