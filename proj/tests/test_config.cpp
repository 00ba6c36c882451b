#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "fkeit/config.hpp"
#include "fkeit/runner.hpp"

using namespace fkeit;
using nlohmann::json;

namespace {

const char* kMinimalMsd = R"({
  "experiment": "homogenize",
  "seed": 4,
  "domain": {"kind": "whole_space", "dimension": 2},
  "medium": {"kind": "constant", "value": 0.5},
  "mc": {"n_paths": 512},
  "stepper": {"h": 0.01},
  "homogenize": {"t": 1.0, "directions": [[1, 0]], "pilot_paths": 128}
})";

}  // namespace

TEST_CASE("minimal MSD config parses with defaults echoed") {
  const RunConfig cfg = validate_config_text(kMinimalMsd);
  CHECK(cfg.experiment == ExperimentKind::homogenize);
  CHECK(cfg.medium.kind == MediumKind::constant);
  const json echo = cfg.resolved();
  // every defaulted knob is visible in the provenance echo
  CHECK(echo["mc"]["antithetic"].get<bool>() == true);
  CHECK(echo["mc"]["chunk_size"].get<int>() == 1024);
  CHECK(echo["stepper"]["tol_gauge"].get<double>() == 1e-8);
  CHECK(echo["stepper"]["max_boundary_iterations"].get<int>() == 8);
  CHECK(echo["homogenize"]["control_variate"].get<bool>() == true);
}

TEST_CASE("grounding violation is rejected with the field named") {
  const char* cfg = R"({
    "experiment": "solve",
    "domain": {"kind": "ball", "dimension": 2, "radius": 1.0},
    "medium": {"kind": "constant", "value": 1.0},
    "bvp": {"kind": "cem"},
    "layout": {
      "electrodes": [{"center": [1.0, 0.0], "radius": 0.3},
                      {"center": [-1.0, 0.0], "radius": 0.3}],
      "contact_impedance": 1.0,
      "voltages": [1.0, -0.5]
    },
    "probes": [[0.0, 0.0]]
  })";
  CHECK_THROWS_WITH_AS(validate_config_text(cfg),
                       doctest::Contains("grounding"), ConfigError);
}

TEST_CASE("compatibility violation is rejected") {
  const char* cfg = R"({
    "experiment": "solve",
    "domain": {"kind": "ball", "dimension": 2, "radius": 1.0},
    "medium": {"kind": "constant", "value": 1.0},
    "bvp": {"kind": "continuum", "boundary_data": {"type": "constant", "value": 1.0}},
    "probes": [[0.0, 0.0]]
  })";
  CHECK_THROWS_WITH_AS(validate_config_text(cfg),
                       doctest::Contains("compatibility"), ConfigError);
}

TEST_CASE("schema violations name the offending field path") {
  CHECK_THROWS_WITH_AS(validate_config_text(R"({"experiment": "warp"})"),
                       doctest::Contains("config.experiment"), ConfigError);
  CHECK_THROWS_WITH_AS(validate_config_text(R"({
    "experiment": "solve",
    "domain": {"kind": "ball", "dimension": 7}
  })"),
                       doctest::Contains("domain.dimension"), ConfigError);
  CHECK_THROWS_AS(validate_config_text("{not json"), ConfigError);
}

TEST_CASE("run_experiment is worker-count invariant and idempotent") {
  RunConfig cfg = validate_config_text(kMinimalMsd);
  cfg.workers = 1;
  cfg.mc.workers = 1;
  const std::string one = deterministic_dump(run_experiment(cfg));
  cfg.workers = 4;
  cfg.mc.workers = 4;
  const std::string four = deterministic_dump(run_experiment(cfg));
  CHECK(one == four);
  const std::string again = deterministic_dump(run_experiment(cfg));
  CHECK(four == again);
}

TEST_CASE("config hash is a pure function of the resolved config") {
  const RunConfig a = validate_config_text(kMinimalMsd);
  const RunConfig b = validate_config_text(kMinimalMsd);
  CHECK(config_hash(a) == config_hash(b));
  RunConfig c = a;
  c.seed = 5;
  CHECK(config_hash(a) != config_hash(c));
}
