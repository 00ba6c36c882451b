#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "fkeit/feynman_kac.hpp"
#include "fkeit/geometry.hpp"
#include "fkeit/homogenize.hpp"
#include "fkeit/media.hpp"

namespace fkeit {

enum class ExperimentKind { solve, homogenize, convergence, epsilon_sweep, oracle };

/// Named boundary data families the config can reference.
struct BoundaryData {
  enum class Type { zero, constant, coordinate, cos_theta };
  Type type = Type::zero;
  double value = 0.0;  // constant value or amplitude
  int index = 0;       // coordinate index

  std::function<double(const Vec&)> make() const;
};

struct OracleRequest {
  enum class Task { fd_solve, fd_effective_tensor, laminate };
  Task task = Task::fd_solve;
  int nr = 128;
  int ntheta = 256;
  int tensor_cells = 128;
  double tensor_period = 8.0;
  std::vector<std::pair<double, double>> laminate_phases;  // (value, fraction)
};

struct RunConfig {
  ExperimentKind experiment = ExperimentKind::solve;
  std::uint64_t seed = 1;
  int workers = 0;
  std::string output;

  Domain domain = Domain::ball(2, 1.0);
  MediumSpec medium = MediumSpec::constant_scalar(2, 1.0);
  std::optional<ElectrodeLayout> layout;

  BvpKind bvp_kind = BvpKind::dirichlet;
  BoundaryData boundary_data;
  double alpha = 0.0;
  bool with_currents = false;
  int quadrature_nodes = 0;  // 0: dimension default

  std::vector<Vec> probes;
  McConfig mc;
  StepperConfig stepper;

  // homogenize / convergence
  double msd_t = 16.0;
  int n_realizations = 1;
  std::vector<Vec> msd_directions;
  bool control_variate = true;
  std::int64_t pilot_paths = 4096;
  std::vector<double> t_grid;
  double convergence_reference = 0.0;

  // epsilon sweep
  std::vector<double> epsilon_grid;
  EpsilonSweepOptions sweep;

  OracleRequest oracle;

  std::string debug_event_log;  // per-path CSV when nonempty (solve, first probe)

  BvpSpec make_bvp() const;
  MsdRequest make_msd_request() const;

  /// Full round-trip echo with every default materialized; the provenance
  /// block and the config hash are built from this.
  nlohmann::json resolved() const;
};

/// Parses and cross-validates a configuration document. Error messages name
/// the offending field path. Physics preconditions (grounding,
/// compatibility, ellipticity) are enforced here, before any computation.
RunConfig validate_config(const nlohmann::json& doc);
RunConfig validate_config_text(const std::string& text);
RunConfig validate_config_file(const std::string& path);

std::uint64_t config_hash(const RunConfig& config);

}  // namespace fkeit
