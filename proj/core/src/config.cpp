#include "fkeit/config.hpp"

#include <cmath>
#include <fstream>
#include <sstream>

#include "fkeit/errors.hpp"

namespace fkeit {

using nlohmann::json;

namespace {

[[noreturn]] void fail(const std::string& path, const std::string& what) {
  throw ConfigError(path + ": " + what);
}

double get_number(const json& j, const std::string& path, const char* key, double fallback,
                  bool required = false) {
  if (!j.contains(key)) {
    if (required) fail(path + "." + key, "missing required field");
    return fallback;
  }
  if (!j[key].is_number()) fail(path + "." + key, "expected a number");
  return j[key].get<double>();
}

std::int64_t get_integer(const json& j, const std::string& path, const char* key,
                         std::int64_t fallback, bool required = false) {
  if (!j.contains(key)) {
    if (required) fail(path + "." + key, "missing required field");
    return fallback;
  }
  if (!j[key].is_number_integer()) fail(path + "." + key, "expected an integer");
  return j[key].get<std::int64_t>();
}

std::string get_string(const json& j, const std::string& path, const char* key,
                       const std::string& fallback, bool required = false) {
  if (!j.contains(key)) {
    if (required) fail(path + "." + key, "missing required field");
    return fallback;
  }
  if (!j[key].is_string()) fail(path + "." + key, "expected a string");
  return j[key].get<std::string>();
}

bool get_bool(const json& j, const std::string& path, const char* key, bool fallback) {
  if (!j.contains(key)) return fallback;
  if (!j[key].is_boolean()) fail(path + "." + key, "expected a boolean");
  return j[key].get<bool>();
}

Vec parse_vec(const json& j, const std::string& path, int expect_dim = 0) {
  if (!j.is_array() || j.empty() || j.size() > kMaxDim) fail(path, "expected an array of 1..3 numbers");
  Vec v(static_cast<int>(j.size()));
  for (std::size_t i = 0; i < j.size(); ++i) {
    if (!j[i].is_number()) fail(path, "expected numeric entries");
    v[static_cast<int>(i)] = j[i].get<double>();
  }
  if (expect_dim > 0 && v.d != expect_dim) fail(path, "dimension mismatch");
  return v;
}

Mat parse_mat(const json& j, const std::string& path, int expect_dim) {
  if (j.is_number()) return Mat::scaled_identity(expect_dim, j.get<double>());
  if (!j.is_array() || static_cast<int>(j.size()) != expect_dim)
    fail(path, "expected a scalar or a row-major d x d matrix");
  Mat m(expect_dim);
  for (int i = 0; i < expect_dim; ++i) {
    const auto& row = j[static_cast<std::size_t>(i)];
    if (!row.is_array() || static_cast<int>(row.size()) != expect_dim)
      fail(path, "expected a row-major d x d matrix");
    for (int k = 0; k < expect_dim; ++k) {
      if (!row[static_cast<std::size_t>(k)].is_number()) fail(path, "matrix entries must be numbers");
      m(i, k) = row[static_cast<std::size_t>(k)].get<double>();
    }
  }
  return m;
}

json dump_vec(const Vec& v) {
  json a = json::array();
  for (int i = 0; i < v.d; ++i) a.push_back(v[i]);
  return a;
}

json dump_mat(const Mat& m) {
  json rows = json::array();
  for (int i = 0; i < m.d; ++i) {
    json row = json::array();
    for (int j2 = 0; j2 < m.d; ++j2) row.push_back(m(i, j2));
    rows.push_back(row);
  }
  return rows;
}

Domain parse_domain(const json& j) {
  if (!j.is_object()) fail("domain", "expected an object");
  const std::string kind = get_string(j, "domain", "kind", "", true);
  const int d = static_cast<int>(get_integer(j, "domain", "dimension", 2));
  if (d < 1 || d > kMaxDim) fail("domain.dimension", "must be in [1,3]");
  if (kind == "half_space") return Domain::half_space(d);
  if (kind == "whole_space") return Domain::whole_space(d);
  const double r = get_number(j, "domain", "radius", 1.0);
  if (r <= 0.0) fail("domain.radius", "must be positive for bounded domains");
  if (kind == "ball") return Domain::ball(d, r);
  if (kind == "hemisphere") return Domain::hemisphere(d, r);
  fail("domain.kind", "unknown kind '" + kind + "'");
}

MediumSpec parse_medium(const json& j) {
  if (!j.is_object()) fail("medium", "expected an object");
  const std::string kind = get_string(j, "medium", "kind", "", true);
  const int d = static_cast<int>(get_integer(j, "medium", "dimension", 2));
  MediumSpec spec;
  spec.dim = d;
  if (kind == "constant") {
    if (!j.contains("value")) fail("medium.value", "missing required field");
    spec = MediumSpec::constant(parse_mat(j["value"], "medium.value", d));
  } else if (kind == "smooth") {
    spec.kind = MediumKind::smooth;
    spec.dim = d;
    const std::string fam = get_string(j, "medium", "family", "affine_iso");
    spec.smooth_base = get_number(j, "medium", "base", 1.0);
    if (fam == "affine_iso") {
      spec.family = SmoothFamily::affine_iso;
      spec.smooth_gradient =
          j.contains("gradient") ? parse_vec(j["gradient"], "medium.gradient", d) : Vec(d);
    } else if (fam == "sinusoidal_iso") {
      spec.family = SmoothFamily::sinusoidal_iso;
      spec.smooth_amplitude = get_number(j, "medium", "amplitude", 0.0);
      spec.smooth_wavevector =
          j.contains("wavevector") ? parse_vec(j["wavevector"], "medium.wavevector", d) : Vec(d);
    } else {
      fail("medium.family", "unknown family '" + fam + "'");
    }
  } else if (kind == "two_phase") {
    InterfaceDescriptor ifc;
    const std::string shape = get_string(j, "medium", "shape", "hyperplane");
    if (shape == "hyperplane") {
      ifc.shape = InterfaceShape::hyperplane;
      ifc.anchor = j.contains("normal") ? parse_vec(j["normal"], "medium.normal", d) : unit_vec(d, 0);
      ifc.offset = get_number(j, "medium", "offset", 0.0);
    } else if (shape == "sphere") {
      ifc.shape = InterfaceShape::sphere;
      ifc.anchor = j.contains("center") ? parse_vec(j["center"], "medium.center", d) : Vec(d);
      ifc.offset = get_number(j, "medium", "interface_radius", 0.5, true);
    } else {
      fail("medium.shape", "unknown interface shape '" + shape + "'");
    }
    ifc.kappa1 = get_number(j, "medium", "kappa1", 1.0, true);
    ifc.kappa2 = get_number(j, "medium", "kappa2", 1.0, true);
    spec = MediumSpec::two_phase(ifc, d);
  } else if (kind == "checkerboard") {
    std::vector<Mat> values;
    std::vector<double> probs;
    if (!j.contains("values") || !j["values"].is_array())
      fail("medium.values", "expected an array of values");
    for (std::size_t i = 0; i < j["values"].size(); ++i)
      values.push_back(parse_mat(j["values"][i], "medium.values", d));
    if (j.contains("probabilities")) {
      for (const auto& p : j["probabilities"]) probs.push_back(p.get<double>());
    } else {
      probs.assign(values.size(), 1.0 / static_cast<double>(values.size()));
    }
    spec.kind = MediumKind::checkerboard;
    spec.dim = d;
    spec.cell_size = get_number(j, "medium", "cell_size", 1.0);
    spec.cell_values = std::move(values);
    spec.cell_probabilities = std::move(probs);
    double c = 1.0;
    for (const auto& v : spec.cell_values) {
      auto ev = symmetric_eigenvalues(v);
      c = std::max({c, ev[d - 1], 1.0 / ev[0]});
    }
    spec.ellipticity_bound = c;
  } else if (kind == "layered") {
    spec.kind = MediumKind::layered;
    spec.dim = d;
    spec.layer_axis = static_cast<int>(get_integer(j, "medium", "axis", 0));
    spec.layer_width = get_number(j, "medium", "width", 1.0);
    if (!j.contains("values") || !j["values"].is_array())
      fail("medium.values", "expected an array of scalars");
    for (const auto& v : j["values"]) spec.layer_values.push_back(v.get<double>());
    const std::string law = get_string(j, "medium", "law", "alternating");
    if (law == "alternating")
      spec.layer_law = LayerLaw::alternating;
    else if (law == "iid")
      spec.layer_law = LayerLaw::iid;
    else
      fail("medium.law", "unknown law '" + law + "'");
    double c = 1.0;
    for (double v : spec.layer_values) c = std::max({c, v, 1.0 / v});
    spec.ellipticity_bound = c;
  } else if (kind == "poisson_spheres") {
    spec.kind = MediumKind::poisson_spheres;
    spec.dim = d;
    spec.poisson_intensity = get_number(j, "medium", "intensity", 0.1, true);
    spec.poisson_radius = get_number(j, "medium", "radius", 0.5, true);
    spec.poisson_kappa_in = get_number(j, "medium", "kappa_in", 1.0, true);
    spec.poisson_kappa_out = get_number(j, "medium", "kappa_out", 1.0, true);
    spec.ellipticity_bound = std::max({spec.poisson_kappa_in, spec.poisson_kappa_out,
                                       1.0 / spec.poisson_kappa_in, 1.0 / spec.poisson_kappa_out});
  } else {
    fail("medium.kind", "unknown kind '" + kind + "'");
  }
  if (j.contains("ellipticity_bound"))
    spec.ellipticity_bound = get_number(j, "medium", "ellipticity_bound", spec.ellipticity_bound);
  spec.validate();
  return spec;
}

ElectrodeLayout parse_layout(const json& j, int dim) {
  ElectrodeLayout layout;
  if (!j.is_object() || !j.contains("electrodes") || !j["electrodes"].is_array())
    fail("layout.electrodes", "expected an array of patches");
  for (std::size_t l = 0; l < j["electrodes"].size(); ++l) {
    const auto& e = j["electrodes"][l];
    Electrode el;
    el.center = parse_vec(e.at("center"), "layout.electrodes.center", dim);
    el.radius = e.at("radius").get<double>();
    layout.electrodes.push_back(el);
  }
  const std::size_t n = layout.electrodes.size();
  if (j.contains("contact_impedance")) {
    if (j["contact_impedance"].is_number())
      layout.contact_impedance.assign(n, j["contact_impedance"].get<double>());
    else
      for (const auto& z : j["contact_impedance"]) layout.contact_impedance.push_back(z.get<double>());
  } else {
    layout.contact_impedance.assign(n, 1.0);
  }
  if (!j.contains("voltages")) fail("layout.voltages", "missing required field");
  for (const auto& u : j["voltages"]) layout.voltages.push_back(u.get<double>());
  return layout;
}

BoundaryData parse_boundary_data(const json& j) {
  BoundaryData b;
  if (j.is_null()) return b;
  const std::string type = get_string(j, "bvp.boundary_data", "type", "", true);
  if (type == "zero") {
    b.type = BoundaryData::Type::zero;
  } else if (type == "constant") {
    b.type = BoundaryData::Type::constant;
    b.value = get_number(j, "bvp.boundary_data", "value", 0.0, true);
  } else if (type == "coordinate") {
    b.type = BoundaryData::Type::coordinate;
    b.index = static_cast<int>(get_integer(j, "bvp.boundary_data", "index", 0));
    b.value = get_number(j, "bvp.boundary_data", "scale", 1.0);
  } else if (type == "cos_theta") {
    b.type = BoundaryData::Type::cos_theta;
    b.value = get_number(j, "bvp.boundary_data", "amplitude", 1.0);
  } else {
    fail("bvp.boundary_data.type", "unknown type '" + type + "'");
  }
  return b;
}

}  // namespace

std::function<double(const Vec&)> BoundaryData::make() const {
  switch (type) {
    case Type::zero:
      return [](const Vec&) { return 0.0; };
    case Type::constant: {
      const double c = value;
      return [c](const Vec&) { return c; };
    }
    case Type::coordinate: {
      const int i = index;
      const double s = value;
      return [i, s](const Vec& y) { return s * y[i]; };
    }
    case Type::cos_theta: {
      const double a = value;
      return [a](const Vec& y) {
        const double r = norm(y);
        return r > 0.0 ? a * y[0] / r : 0.0;
      };
    }
  }
  return [](const Vec&) { return 0.0; };
}

BvpSpec RunConfig::make_bvp() const {
  BvpSpec spec;
  spec.kind = bvp_kind;
  spec.domain = domain;
  spec.medium = medium;
  spec.realization_seed = mix_seed(seed, 0xF1E1D);
  spec.epsilon = 1.0;
  spec.boundary_data = boundary_data.make();
  spec.alpha = alpha;
  if (layout) spec.layout = *layout;
  return spec;
}

MsdRequest RunConfig::make_msd_request() const {
  MsdRequest req;
  req.medium = medium;
  req.t = msd_t;
  req.n_realizations = n_realizations;
  req.n_paths_per_realization = mc.n_paths;
  req.cfg = stepper;
  req.seed = seed;
  req.workers = workers;
  req.chunk_size = mc.chunk_size;
  req.control_variate = control_variate;
  req.pilot_paths = pilot_paths;
  return req;
}

RunConfig validate_config(const json& doc) {
  if (!doc.is_object()) throw ConfigError("config: expected a JSON object");
  RunConfig cfg;

  const std::string exp = get_string(doc, "config", "experiment", "", true);
  if (exp == "solve")
    cfg.experiment = ExperimentKind::solve;
  else if (exp == "homogenize")
    cfg.experiment = ExperimentKind::homogenize;
  else if (exp == "convergence")
    cfg.experiment = ExperimentKind::convergence;
  else if (exp == "epsilon_sweep")
    cfg.experiment = ExperimentKind::epsilon_sweep;
  else if (exp == "oracle")
    cfg.experiment = ExperimentKind::oracle;
  else
    fail("config.experiment", "unknown experiment '" + exp + "'");

  cfg.seed = static_cast<std::uint64_t>(get_integer(doc, "config", "seed", 1));
  cfg.workers = static_cast<int>(get_integer(doc, "config", "workers", 0));
  cfg.output = get_string(doc, "config", "output", "");
  cfg.debug_event_log = get_string(doc, "config", "debug_event_log", "");

  if (doc.contains("domain")) cfg.domain = parse_domain(doc["domain"]);
  if (doc.contains("medium")) {
    json m = doc["medium"];
    if (!m.contains("dimension")) m["dimension"] = cfg.domain.dim;
    cfg.medium = parse_medium(m);
  } else {
    cfg.medium = MediumSpec::constant_scalar(cfg.domain.dim, 1.0);
  }
  if (cfg.medium.dim != cfg.domain.dim)
    fail("medium.dimension", "must match domain.dimension");

  if (doc.contains("layout")) cfg.layout = parse_layout(doc["layout"], cfg.domain.dim);

  if (doc.contains("mc")) {
    const json& m = doc["mc"];
    cfg.mc.n_paths = get_integer(m, "mc", "n_paths", cfg.mc.n_paths);
    cfg.mc.antithetic = get_bool(m, "mc", "antithetic", cfg.mc.antithetic);
    cfg.mc.chunk_size = static_cast<int>(get_integer(m, "mc", "chunk_size", cfg.mc.chunk_size));
    cfg.n_realizations = static_cast<int>(get_integer(m, "mc", "n_realizations", 1));
    if (cfg.mc.n_paths < 2) fail("mc.n_paths", "must be >= 2");
    if (cfg.mc.chunk_size < 1) fail("mc.chunk_size", "must be >= 1");
    if (cfg.n_realizations < 1) fail("mc.n_realizations", "must be >= 1");
  }
  cfg.mc.seed = cfg.seed;
  cfg.mc.workers = cfg.workers;
  if (cfg.mc.antithetic && cfg.mc.n_paths % 2 != 0) ++cfg.mc.n_paths;

  if (doc.contains("stepper")) {
    const json& s = doc["stepper"];
    cfg.stepper.h = get_number(s, "stepper", "h", cfg.stepper.h);
    cfg.stepper.max_time = get_number(s, "stepper", "max_time", cfg.stepper.max_time);
    cfg.stepper.r_snap = get_number(s, "stepper", "r_snap", cfg.stepper.r_snap);
    cfg.stepper.tol_gauge = get_number(s, "stepper", "tol_gauge", cfg.stepper.tol_gauge);
    cfg.stepper.max_boundary_iterations = static_cast<int>(
        get_integer(s, "stepper", "max_boundary_iterations", cfg.stepper.max_boundary_iterations));
    if (cfg.stepper.h <= 0.0) fail("stepper.h", "must be positive");
    if (cfg.stepper.max_time < 0.0) fail("stepper.max_time", "must be nonnegative");
    if (cfg.stepper.tol_gauge <= 0.0 || cfg.stepper.tol_gauge >= 1.0)
      fail("stepper.tol_gauge", "must lie in (0,1)");
  }

  if (doc.contains("probes")) {
    for (std::size_t i = 0; i < doc["probes"].size(); ++i)
      cfg.probes.push_back(parse_vec(doc["probes"][i], "probes", cfg.domain.dim));
  }

  if (doc.contains("bvp")) {
    const json& b = doc["bvp"];
    const std::string kind = get_string(b, "bvp", "kind", "", true);
    if (kind == "dirichlet")
      cfg.bvp_kind = BvpKind::dirichlet;
    else if (kind == "continuum")
      cfg.bvp_kind = BvpKind::continuum;
    else if (kind == "robin_killed")
      cfg.bvp_kind = BvpKind::robin_killed;
    else if (kind == "cem")
      cfg.bvp_kind = BvpKind::cem;
    else if (kind == "mixed_cem")
      cfg.bvp_kind = BvpKind::mixed_cem;
    else
      fail("bvp.kind", "unknown kind '" + kind + "'");
    if (b.contains("boundary_data")) cfg.boundary_data = parse_boundary_data(b["boundary_data"]);
    cfg.alpha = get_number(b, "bvp", "alpha", 0.0);
    cfg.with_currents = get_bool(b, "bvp", "currents", false);
    cfg.quadrature_nodes = static_cast<int>(get_integer(b, "bvp", "quadrature_nodes", 0));
  }

  if (doc.contains("homogenize")) {
    const json& h = doc["homogenize"];
    cfg.msd_t = get_number(h, "homogenize", "t", cfg.msd_t);
    cfg.control_variate = get_bool(h, "homogenize", "control_variate", cfg.control_variate);
    cfg.pilot_paths = get_integer(h, "homogenize", "pilot_paths", cfg.pilot_paths);
    if (h.contains("directions"))
      for (std::size_t i = 0; i < h["directions"].size(); ++i)
        cfg.msd_directions.push_back(
            normalized(parse_vec(h["directions"][i], "homogenize.directions", cfg.domain.dim)));
    if (cfg.msd_t <= 0.0) fail("homogenize.t", "must be positive");
  }

  if (doc.contains("convergence")) {
    const json& c = doc["convergence"];
    if (c.contains("t_grid"))
      for (const auto& t : c["t_grid"]) cfg.t_grid.push_back(t.get<double>());
    cfg.convergence_reference = get_number(c, "convergence", "reference", 0.0);
    if (c.contains("direction"))
      cfg.msd_directions = {normalized(parse_vec(c["direction"], "convergence.direction", cfg.domain.dim))};
  }

  if (doc.contains("epsilon_sweep")) {
    const json& e = doc["epsilon_sweep"];
    if (e.contains("epsilon_grid"))
      for (const auto& x : e["epsilon_grid"]) cfg.epsilon_grid.push_back(x.get<double>());
    cfg.sweep.quadrature_nodes =
        static_cast<int>(get_integer(e, "epsilon_sweep", "quadrature_nodes", 8));
    cfg.sweep.fd_nr = static_cast<int>(get_integer(e, "epsilon_sweep", "fd_nr", cfg.sweep.fd_nr));
    cfg.sweep.fd_ntheta =
        static_cast<int>(get_integer(e, "epsilon_sweep", "fd_ntheta", cfg.sweep.fd_ntheta));
    cfg.sweep.fd_tensor_cells =
        static_cast<int>(get_integer(e, "epsilon_sweep", "fd_tensor_cells", cfg.sweep.fd_tensor_cells));
    cfg.sweep.fd_tensor_period =
        get_number(e, "epsilon_sweep", "fd_tensor_period", cfg.sweep.fd_tensor_period);
    if (e.contains("kappa_star"))
      cfg.sweep.kappa_star_override = parse_mat(e["kappa_star"], "epsilon_sweep.kappa_star", 2);
    for (double x : cfg.epsilon_grid)
      if (x <= 0.0) fail("epsilon_sweep.epsilon_grid", "entries must be positive");
  }

  if (doc.contains("oracle")) {
    const json& o = doc["oracle"];
    const std::string task = get_string(o, "oracle", "task", "fd_solve");
    if (task == "fd_solve")
      cfg.oracle.task = OracleRequest::Task::fd_solve;
    else if (task == "fd_effective_tensor")
      cfg.oracle.task = OracleRequest::Task::fd_effective_tensor;
    else if (task == "laminate")
      cfg.oracle.task = OracleRequest::Task::laminate;
    else
      fail("oracle.task", "unknown task '" + task + "'");
    cfg.oracle.nr = static_cast<int>(get_integer(o, "oracle", "nr", cfg.oracle.nr));
    cfg.oracle.ntheta = static_cast<int>(get_integer(o, "oracle", "ntheta", cfg.oracle.ntheta));
    cfg.oracle.tensor_cells =
        static_cast<int>(get_integer(o, "oracle", "tensor_cells", cfg.oracle.tensor_cells));
    cfg.oracle.tensor_period = get_number(o, "oracle", "tensor_period", cfg.oracle.tensor_period);
    if (o.contains("phases"))
      for (const auto& p : o["phases"])
        cfg.oracle.laminate_phases.emplace_back(p.at("value").get<double>(),
                                                p.at("fraction").get<double>());
  }

  // Cross-validation of the physics preconditions happens on the BvpSpec.
  if (cfg.experiment == ExperimentKind::solve) {
    if (cfg.probes.empty()) fail("probes", "solve needs at least one probe point");
    validate_bvp(cfg.make_bvp());
  }
  if (cfg.experiment == ExperimentKind::epsilon_sweep) {
    if (!cfg.layout) fail("layout", "epsilon_sweep needs an electrode layout");
    if (cfg.epsilon_grid.empty()) fail("epsilon_sweep.epsilon_grid", "must be nonempty");
    BvpSpec spec = cfg.make_bvp();
    spec.kind = BvpKind::mixed_cem;
    validate_bvp(spec);
  }
  if (cfg.experiment == ExperimentKind::homogenize || cfg.experiment == ExperimentKind::convergence) {
    if (cfg.domain.kind != DomainKind::whole_space)
      fail("domain.kind", "homogenization runs on the whole space");
  }
  if (cfg.experiment == ExperimentKind::convergence) {
    if (cfg.t_grid.empty()) fail("convergence.t_grid", "must be nonempty");
    if (cfg.msd_directions.empty()) fail("convergence.direction", "missing direction");
  }
  return cfg;
}

RunConfig validate_config_text(const std::string& text) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const std::exception& e) {
    throw ConfigError(std::string("config: JSON parse error: ") + e.what());
  }
  return validate_config(doc);
}

RunConfig validate_config_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("config: cannot open '" + path + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  return validate_config_text(ss.str());
}

nlohmann::json RunConfig::resolved() const {
  json j;
  switch (experiment) {
    case ExperimentKind::solve: j["experiment"] = "solve"; break;
    case ExperimentKind::homogenize: j["experiment"] = "homogenize"; break;
    case ExperimentKind::convergence: j["experiment"] = "convergence"; break;
    case ExperimentKind::epsilon_sweep: j["experiment"] = "epsilon_sweep"; break;
    case ExperimentKind::oracle: j["experiment"] = "oracle"; break;
  }
  j["seed"] = seed;

  json dom;
  switch (domain.kind) {
    case DomainKind::half_space: dom["kind"] = "half_space"; break;
    case DomainKind::hemisphere: dom["kind"] = "hemisphere"; break;
    case DomainKind::ball: dom["kind"] = "ball"; break;
    case DomainKind::whole_space: dom["kind"] = "whole_space"; break;
  }
  dom["dimension"] = domain.dim;
  if (domain.kind == DomainKind::ball || domain.kind == DomainKind::hemisphere)
    dom["radius"] = domain.radius;
  j["domain"] = dom;

  json med;
  med["dimension"] = medium.dim;
  med["ellipticity_bound"] = medium.ellipticity_bound;
  switch (medium.kind) {
    case MediumKind::constant:
      med["kind"] = "constant";
      med["value"] = dump_mat(medium.constant_value);
      break;
    case MediumKind::smooth:
      med["kind"] = "smooth";
      med["family"] = medium.family == SmoothFamily::affine_iso ? "affine_iso" : "sinusoidal_iso";
      med["base"] = medium.smooth_base;
      if (medium.family == SmoothFamily::affine_iso)
        med["gradient"] = dump_vec(medium.smooth_gradient);
      else {
        med["amplitude"] = medium.smooth_amplitude;
        med["wavevector"] = dump_vec(medium.smooth_wavevector);
      }
      break;
    case MediumKind::two_phase:
      med["kind"] = "two_phase";
      med["shape"] = medium.interface.shape == InterfaceShape::hyperplane ? "hyperplane" : "sphere";
      if (medium.interface.shape == InterfaceShape::hyperplane) {
        med["normal"] = dump_vec(medium.interface.anchor);
        med["offset"] = medium.interface.offset;
      } else {
        med["center"] = dump_vec(medium.interface.anchor);
        med["interface_radius"] = medium.interface.offset;
      }
      med["kappa1"] = medium.interface.kappa1;
      med["kappa2"] = medium.interface.kappa2;
      break;
    case MediumKind::checkerboard: {
      med["kind"] = "checkerboard";
      med["cell_size"] = medium.cell_size;
      json vals = json::array();
      for (const auto& v : medium.cell_values) vals.push_back(dump_mat(v));
      med["values"] = vals;
      med["probabilities"] = medium.cell_probabilities;
      break;
    }
    case MediumKind::layered:
      med["kind"] = "layered";
      med["axis"] = medium.layer_axis;
      med["width"] = medium.layer_width;
      med["values"] = medium.layer_values;
      med["law"] = medium.layer_law == LayerLaw::alternating ? "alternating" : "iid";
      break;
    case MediumKind::poisson_spheres:
      med["kind"] = "poisson_spheres";
      med["intensity"] = medium.poisson_intensity;
      med["radius"] = medium.poisson_radius;
      med["kappa_in"] = medium.poisson_kappa_in;
      med["kappa_out"] = medium.poisson_kappa_out;
      break;
  }
  j["medium"] = med;

  if (layout) {
    json lay;
    json els = json::array();
    for (const auto& e : layout->electrodes)
      els.push_back(json{{"center", dump_vec(e.center)}, {"radius", e.radius}});
    lay["electrodes"] = els;
    lay["contact_impedance"] = layout->contact_impedance;
    lay["voltages"] = layout->voltages;
    j["layout"] = lay;
  }

  json b;
  switch (bvp_kind) {
    case BvpKind::dirichlet: b["kind"] = "dirichlet"; break;
    case BvpKind::continuum: b["kind"] = "continuum"; break;
    case BvpKind::robin_killed: b["kind"] = "robin_killed"; break;
    case BvpKind::cem: b["kind"] = "cem"; break;
    case BvpKind::mixed_cem: b["kind"] = "mixed_cem"; break;
  }
  json bd;
  switch (boundary_data.type) {
    case BoundaryData::Type::zero: bd["type"] = "zero"; break;
    case BoundaryData::Type::constant:
      bd["type"] = "constant";
      bd["value"] = boundary_data.value;
      break;
    case BoundaryData::Type::coordinate:
      bd["type"] = "coordinate";
      bd["index"] = boundary_data.index;
      bd["scale"] = boundary_data.value;
      break;
    case BoundaryData::Type::cos_theta:
      bd["type"] = "cos_theta";
      bd["amplitude"] = boundary_data.value;
      break;
  }
  b["boundary_data"] = bd;
  b["alpha"] = alpha;
  b["currents"] = with_currents;
  b["quadrature_nodes"] = quadrature_nodes;
  j["bvp"] = b;

  json probes_j = json::array();
  for (const auto& p : probes) probes_j.push_back(dump_vec(p));
  j["probes"] = probes_j;

  j["mc"] = json{{"n_paths", mc.n_paths},
                 {"antithetic", mc.antithetic},
                 {"chunk_size", mc.chunk_size},
                 {"n_realizations", n_realizations}};
  j["stepper"] = json{{"h", stepper.h},
                      {"max_time", stepper.max_time},
                      {"r_snap", stepper.r_snap},
                      {"tol_gauge", stepper.tol_gauge},
                      {"max_boundary_iterations", stepper.max_boundary_iterations}};

  json hj;
  hj["t"] = msd_t;
  hj["control_variate"] = control_variate;
  hj["pilot_paths"] = pilot_paths;
  json dirs = json::array();
  for (const auto& d : msd_directions) dirs.push_back(dump_vec(d));
  hj["directions"] = dirs;
  j["homogenize"] = hj;

  if (!t_grid.empty()) {
    j["convergence"] = json{{"t_grid", t_grid}, {"reference", convergence_reference}};
  }
  if (!epsilon_grid.empty()) {
    json e;
    e["epsilon_grid"] = epsilon_grid;
    e["quadrature_nodes"] = sweep.quadrature_nodes;
    e["fd_nr"] = sweep.fd_nr;
    e["fd_ntheta"] = sweep.fd_ntheta;
    e["fd_tensor_cells"] = sweep.fd_tensor_cells;
    e["fd_tensor_period"] = sweep.fd_tensor_period;
    if (sweep.kappa_star_override) e["kappa_star"] = dump_mat(*sweep.kappa_star_override);
    j["epsilon_sweep"] = e;
  }
  if (experiment == ExperimentKind::oracle) {
    json o;
    switch (oracle.task) {
      case OracleRequest::Task::fd_solve: o["task"] = "fd_solve"; break;
      case OracleRequest::Task::fd_effective_tensor: o["task"] = "fd_effective_tensor"; break;
      case OracleRequest::Task::laminate: o["task"] = "laminate"; break;
    }
    o["nr"] = oracle.nr;
    o["ntheta"] = oracle.ntheta;
    o["tensor_cells"] = oracle.tensor_cells;
    o["tensor_period"] = oracle.tensor_period;
    if (!oracle.laminate_phases.empty()) {
      json ph = json::array();
      for (const auto& [v, f] : oracle.laminate_phases)
        ph.push_back(json{{"value", v}, {"fraction", f}});
      o["phases"] = ph;
    }
    j["oracle"] = o;
  }
  return j;
}

std::uint64_t config_hash(const RunConfig& config) {
  const std::string dump = config.resolved().dump();
  std::uint64_t h = 0xcbf29ce484222325ull;  // FNV-1a
  for (unsigned char c : dump) {
    h ^= c;
    h *= 0x100000001b3ull;
  }
  return h;
}

}  // namespace fkeit
