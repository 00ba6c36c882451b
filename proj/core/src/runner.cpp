#include "fkeit/runner.hpp"

#include <chrono>
#include <cmath>
#include <ctime>
#include <fstream>
#include <sstream>

#include "fkeit/errors.hpp"
#include "fkeit/reference.hpp"
#include "fkeit/worker_pool.hpp"

namespace fkeit {

using nlohmann::json;

namespace {

json estimate_record(const char* kind, const Vec* x, const McEstimate& e, const RunConfig& cfg,
                     std::uint64_t hash) {
  json r;
  r["kind"] = kind;
  if (x) {
    json xs = json::array();
    for (int i = 0; i < x->d; ++i) xs.push_back((*x)[i]);
    r["x"] = xs;
  }
  r["mean"] = e.mean;
  r["stderr"] = e.stderr_;
  r["n_paths"] = e.n_paths;
  r["n_units"] = e.n_units;
  r["h"] = cfg.stepper.h;
  r["seed"] = e.seed;
  r["config_hash"] = hash;
  return r;
}

json dump_matrix(const Mat& m) {
  json rows = json::array();
  for (int i = 0; i < m.d; ++i) {
    json row = json::array();
    for (int j = 0; j < m.d; ++j) row.push_back(m(i, j));
    rows.push_back(row);
  }
  return rows;
}

const char* bvp_kind_name(BvpKind k) {
  switch (k) {
    case BvpKind::dirichlet: return "dirichlet";
    case BvpKind::continuum: return "continuum";
    case BvpKind::robin_killed: return "robin_killed";
    case BvpKind::cem: return "cem";
    case BvpKind::mixed_cem: return "mixed_cem";
  }
  return "?";
}

json run_solve(const RunConfig& cfg, std::uint64_t hash) {
  json out;
  json estimates = json::array();
  const BvpSpec spec = cfg.make_bvp();
  for (std::size_t p = 0; p < cfg.probes.size(); ++p) {
    McConfig mc = cfg.mc;
    mc.seed = mix_seed(cfg.seed, 0x50 + p);
    const Vec& x = cfg.probes[p];
    McEstimate est;
    switch (cfg.bvp_kind) {
      case BvpKind::dirichlet:
        est = estimate_dirichlet(x, spec, mc, cfg.stepper);
        break;
      case BvpKind::continuum:
        est = estimate_continuum(x, spec, mc, cfg.stepper);
        break;
      case BvpKind::robin_killed:
        est = estimate_robin_killed(x, spec, mc, cfg.stepper);
        break;
      case BvpKind::cem:
        est = estimate_cem(x, spec, mc, cfg.stepper);
        break;
      case BvpKind::mixed_cem:
        est = estimate_mixed_cem(x, spec, mc, cfg.stepper);
        break;
    }
    estimates.push_back(estimate_record(bvp_kind_name(cfg.bvp_kind), &x, est, cfg, hash));
  }
  out["estimates"] = estimates;

  if (cfg.with_currents && (cfg.bvp_kind == BvpKind::cem || cfg.bvp_kind == BvpKind::mixed_cem)) {
    auto currents = estimate_electrode_currents(spec, cfg.mc, cfg.stepper, cfg.quadrature_nodes);
    json cj = json::array();
    for (std::size_t l = 0; l < currents.size(); ++l) {
      json r = estimate_record("electrode_current", nullptr, currents[l], cfg, hash);
      r["electrode"] = l;
      cj.push_back(r);
    }
    out["electrode_currents"] = cj;
  }
  return out;
}

json run_homogenize(const RunConfig& cfg, std::uint64_t hash) {
  json out;
  const MsdRequest req = cfg.make_msd_request();
  if (!cfg.msd_directions.empty()) {
    json estimates = json::array();
    for (std::size_t k = 0; k < cfg.msd_directions.size(); ++k) {
      MsdRequest r = req;
      r.seed = mix_seed(req.seed, 0xD12 + k);
      const McEstimate est = estimate_msd_direction(r, cfg.msd_directions[k]);
      json rec = estimate_record("msd_direction", nullptr, est, cfg, hash);
      json xi = json::array();
      for (int i = 0; i < cfg.msd_directions[k].d; ++i) xi.push_back(cfg.msd_directions[k][i]);
      rec["direction"] = xi;
      rec["t"] = req.t;
      estimates.push_back(rec);
    }
    out["msd"] = estimates;
    return out;
  }
  const EffectiveTensorEstimate tensor = estimate_effective_tensor(req);
  out["effective_tensor"] = json{{"matrix", dump_matrix(tensor.matrix)},
                                 {"stderr", dump_matrix(tensor.entry_stderr)},
                                 {"t", tensor.t},
                                 {"n_realizations", tensor.n_realizations},
                                 {"n_paths", tensor.n_paths},
                                 {"seed", tensor.seed},
                                 {"config_hash", hash}};
  json ev = json::array();
  for (int i = 0; i < tensor.matrix.d; ++i) ev.push_back(tensor.eigenvalues()[i]);
  out["effective_tensor"]["eigenvalues"] = ev;
  return out;
}

json run_convergence(const RunConfig& cfg, std::uint64_t hash) {
  const MsdRequest req = cfg.make_msd_request();
  const ConvergenceCurve curve =
      convergence_curve(req, cfg.msd_directions.at(0), cfg.t_grid, cfg.convergence_reference);
  json rows = json::array();
  for (const auto& r : curve.rows)
    rows.push_back(json{{"t", r.t},
                        {"mean", r.mean},
                        {"stderr", r.stderr_},
                        {"reference", r.reference},
                        {"abs_error", r.abs_error}});
  return json{{"curve", rows}, {"fitted_slope", curve.fitted_slope}, {"config_hash", hash}};
}

json run_epsilon_sweep(const RunConfig& cfg, std::uint64_t hash) {
  BvpSpec spec = cfg.make_bvp();
  spec.kind = BvpKind::mixed_cem;
  const EpsilonSweepResult sweep =
      epsilon_sweep_currents(spec, cfg.epsilon_grid, cfg.mc, cfg.stepper, cfg.sweep);
  json rows = json::array();
  for (const auto& row : sweep.rows) {
    json currents = json::array();
    for (const auto& c : row.currents)
      currents.push_back(json{{"mean", c.mean}, {"stderr", c.stderr_}, {"n_paths", c.n_paths}});
    rows.push_back(json{{"epsilon", row.epsilon},
                        {"currents", currents},
                        {"max_deviation", row.max_deviation},
                        {"pooled_stderr", row.pooled_stderr}});
  }
  return json{{"rows", rows},
              {"reference_currents", sweep.reference_currents},
              {"kappa_star", dump_matrix(sweep.kappa_star)},
              {"kappa_star_iso", sweep.kappa_star_iso},
              {"config_hash", hash}};
}

json run_oracle(const RunConfig& cfg, std::uint64_t hash) {
  json out;
  out["config_hash"] = hash;
  switch (cfg.oracle.task) {
    case OracleRequest::Task::laminate: {
      out["parallel"] =
          layered_effective_closed_form(cfg.oracle.laminate_phases, LaminateDirection::parallel);
      out["perpendicular"] = layered_effective_closed_form(cfg.oracle.laminate_phases,
                                                           LaminateDirection::perpendicular);
      return out;
    }
    case OracleRequest::Task::fd_effective_tensor: {
      const ConductivityField field(cfg.medium, mix_seed(cfg.seed, 0xF1E1D), 1.0);
      const Mat k = fd_effective_tensor(field, cfg.oracle.tensor_period, cfg.oracle.tensor_cells);
      out["effective_tensor"] = dump_matrix(k);
      return out;
    }
    case OracleRequest::Task::fd_solve: {
      if (cfg.domain.dim != 2)
        throw UnsupportedQueryError("oracle.fd_solve: 2D only");
      const ConductivityField field(cfg.medium, mix_seed(cfg.seed, 0xF1E1D), 1.0);
      PolarProblem prob;
      prob.grid = PolarGrid{cfg.domain.radius, cfg.oracle.nr, cfg.oracle.ntheta,
                            cfg.domain.kind == DomainKind::hemisphere};
      prob.kappa = [&field](const Vec& p) { return field.kappa_at(p)(0, 0); };
      auto data = cfg.boundary_data.make();
      switch (cfg.bvp_kind) {
        case BvpKind::dirichlet:
          prob.arc = FdBoundary::dirichlet(data);
          prob.flat = FdBoundary::dirichlet(data);
          break;
        case BvpKind::continuum:
          prob.arc = FdBoundary::flux(data);
          prob.flat = FdBoundary::flux(data);
          prob.zero_mean = true;
          break;
        case BvpKind::robin_killed:
          prob.arc = FdBoundary::flux(data);
          prob.flat = FdBoundary::flux(data);
          prob.alpha = cfg.alpha;
          break;
        case BvpKind::cem:
          if (!cfg.layout) throw ConfigError("oracle.fd_solve: cem needs a layout");
          prob.arc = fd_boundary_from_layout(*cfg.layout);
          prob.flat = prob.arc;
          break;
        case BvpKind::mixed_cem:
          if (!cfg.layout) throw ConfigError("oracle.fd_solve: mixed_cem needs a layout");
          prob.arc = FdBoundary::dirichlet([](const Vec&) { return 0.0; });
          prob.flat = fd_boundary_from_layout(*cfg.layout);
          break;
      }
      const PolarFdSolution sol = fd_solve_polar(prob);
      json values = json::array();
      for (const auto& p : cfg.probes) {
        json xs = json::array();
        for (int i = 0; i < p.d; ++i) xs.push_back(p[i]);
        values.push_back(json{{"x", xs}, {"u", sol.value_at(p)}});
      }
      out["values"] = values;
      out["residual"] = sol.residual;
      out["iterations"] = sol.iterations;
      if (cfg.layout && (cfg.bvp_kind == BvpKind::cem || cfg.bvp_kind == BvpKind::mixed_cem)) {
        const auto cur = sol.electrode_currents(*cfg.layout);
        out["electrode_currents"] = cur.current;
        out["electrode_resolved_measure"] = cur.resolved_measure;
      }
      return out;
    }
  }
  return out;
}

void write_curve_csv(const json& result, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw ConfigError("output: cannot write '" + path + "'");
  if (result.contains("curve")) {
    out << "t,mean,stderr,reference,abs_error\n";
    for (const auto& r : result["curve"])
      out << r["t"].get<double>() << ',' << r["mean"].get<double>() << ','
          << r["stderr"].get<double>() << ',' << r["reference"].get<double>() << ','
          << r["abs_error"].get<double>() << '\n';
  } else if (result.contains("rows")) {
    out << "epsilon,electrode,current,stderr,reference\n";
    for (const auto& row : result["rows"]) {
      const auto& cur = row["currents"];
      for (std::size_t l = 0; l < cur.size(); ++l)
        out << row["epsilon"].get<double>() << ',' << l << ',' << cur[l]["mean"].get<double>()
            << ',' << cur[l]["stderr"].get<double>() << ','
            << result["reference_currents"][l].get<double>() << '\n';
    }
  }
}

}  // namespace

json run_experiment(const RunConfig& cfg) {
  const auto t0 = std::chrono::steady_clock::now();
  const std::uint64_t hash = config_hash(cfg);
  json results;
  switch (cfg.experiment) {
    case ExperimentKind::solve:
      results = run_solve(cfg, hash);
      break;
    case ExperimentKind::homogenize:
      results = run_homogenize(cfg, hash);
      break;
    case ExperimentKind::convergence:
      results = run_convergence(cfg, hash);
      break;
    case ExperimentKind::epsilon_sweep:
      results = run_epsilon_sweep(cfg, hash);
      break;
    case ExperimentKind::oracle:
      results = run_oracle(cfg, hash);
      break;
  }
  json doc;
  doc["provenance"] = json{{"config_hash", hash},
                           {"seed", cfg.seed},
                           {"version", kVersion},
                           {"chunk_size", cfg.mc.chunk_size},
                           {"resolved_config", cfg.resolved()}};
  doc["results"] = results;
  const double wall = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  std::time_t now = std::time(nullptr);
  char stamp[32];
  std::strftime(stamp, sizeof(stamp), "%Y-%m-%dT%H:%M:%SZ", std::gmtime(&now));
  doc["runtime"] = json{{"wall_seconds", wall},
                        {"workers", resolve_workers(cfg.workers)},
                        {"timestamp", stamp}};
  return doc;
}

json run_experiment_to_files(const RunConfig& cfg) {
  json doc = run_experiment(cfg);
  if (!cfg.output.empty()) {
    std::ofstream out(cfg.output);
    if (!out) throw ConfigError("output: cannot write '" + cfg.output + "'");
    out << doc.dump(2) << '\n';
    if (cfg.experiment == ExperimentKind::convergence ||
        cfg.experiment == ExperimentKind::epsilon_sweep)
      write_curve_csv(doc["results"], cfg.output + ".csv");
  }
  return doc;
}

std::string deterministic_dump(const json& result) {
  json d;
  d["provenance"] = result.at("provenance");
  d["results"] = result.at("results");
  return d.dump();
}

}  // namespace fkeit
