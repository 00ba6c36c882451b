#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "fkeit/feynman_kac.hpp"
#include "fkeit/reference.hpp"

using namespace fkeit;

namespace {

BvpSpec disk_spec(BvpKind kind, double kappa) {
  BvpSpec spec;
  spec.kind = kind;
  spec.domain = Domain::ball(2, 1.0);
  spec.medium = MediumSpec::constant_scalar(2, kappa);
  return spec;
}

ElectrodeLayout two_electrodes(double z) {
  ElectrodeLayout layout;
  layout.electrodes = {{Vec{1.0, 0.0}, 0.4}, {Vec{-1.0, 0.0}, 0.4}};
  layout.contact_impedance = {z, z};
  layout.voltages = {1.0, -1.0};
  return layout;
}

}  // namespace

TEST_CASE("dirichlet with constant boundary data is exact") {
  BvpSpec spec = disk_spec(BvpKind::dirichlet, 1.0);
  spec.boundary_data = [](const Vec&) { return 3.25; };
  McConfig mc;
  mc.n_paths = 64;
  mc.seed = 9;
  StepperConfig cfg;
  cfg.h = 1e-3;
  const McEstimate e = estimate_dirichlet(Vec{0.2, 0.1}, spec, mc, cfg);
  CHECK(e.mean == doctest::Approx(3.25));
  CHECK(e.stderr_ == doctest::Approx(0.0));
}

TEST_CASE("dirichlet with a coordinate function recovers the harmonic solution") {
  BvpSpec spec = disk_spec(BvpKind::dirichlet, 1.0);
  spec.boundary_data = [](const Vec& y) { return y[0]; };
  McConfig mc;
  mc.n_paths = 20000;
  mc.seed = 4;
  StepperConfig cfg;
  cfg.h = 2e-4;
  const McEstimate e = estimate_dirichlet(Vec{0.3, -0.2}, spec, mc, cfg);
  CHECK(std::abs(e.mean - 0.3) < 3.0 * e.stderr_ + 0.02);
}

TEST_CASE("continuum with zero flux returns exactly zero") {
  BvpSpec spec = disk_spec(BvpKind::continuum, 1.0);
  spec.boundary_data = [](const Vec&) { return 0.0; };
  McConfig mc;
  mc.n_paths = 64;
  mc.seed = 5;
  StepperConfig cfg;
  cfg.h = 1e-3;
  cfg.max_time = 4.0;
  const McEstimate e = estimate_continuum(Vec{0.5, 0.0}, spec, mc, cfg);
  CHECK(e.mean == 0.0);
  CHECK(e.stderr_ == 0.0);
}

TEST_CASE("continuum compatibility violation is rejected") {
  BvpSpec spec = disk_spec(BvpKind::continuum, 1.0);
  spec.boundary_data = [](const Vec&) { return 1.0; };
  McConfig mc;
  StepperConfig cfg;
  CHECK_THROWS_AS(estimate_continuum(Vec{0.0, 0.0}, spec, mc, cfg), ConfigError);
}

TEST_CASE("killed Robin payoff vanishes at the symmetry center") {
  BvpSpec spec = disk_spec(BvpKind::robin_killed, 1.0);
  spec.boundary_data = [](const Vec& y) { return y[0] / norm(y); };
  spec.alpha = 1.0;
  McConfig mc;
  mc.n_paths = 4000;
  mc.seed = 11;
  StepperConfig cfg;
  cfg.h = 5e-4;
  const McEstimate e = estimate_robin_killed(Vec{0.0, 0.0}, spec, mc, cfg);
  CHECK(std::abs(e.mean) < 3.0 * e.stderr_ + 1e-3);

  spec.alpha = -1.0;
  CHECK_THROWS_AS(estimate_robin_killed(Vec{0.0, 0.0}, spec, mc, cfg), ConfigError);
}

TEST_CASE("cem with zero voltages is exactly zero and grounding is enforced") {
  BvpSpec spec = disk_spec(BvpKind::cem, 1.0);
  spec.layout = two_electrodes(1.0);
  spec.layout.voltages = {0.0, 0.0};
  McConfig mc;
  mc.n_paths = 32;
  mc.seed = 2;
  StepperConfig cfg;
  cfg.h = 1e-3;
  cfg.max_time = 5.0;
  const McEstimate e = estimate_cem(Vec{0.3, 0.0}, spec, mc, cfg);
  CHECK(e.mean == 0.0);

  spec.layout.voltages = {1.0, -0.5};
  CHECK_THROWS_AS(estimate_cem(Vec{0.3, 0.0}, spec, mc, cfg), ConfigError);
}

TEST_CASE("cem potential is antisymmetric on the symmetry axis") {
  BvpSpec spec = disk_spec(BvpKind::cem, 1.0);
  spec.layout = two_electrodes(1.0);
  McConfig mc;
  mc.n_paths = 4000;
  mc.seed = 21;
  StepperConfig cfg;
  cfg.h = 5e-4;
  cfg.max_time = 60.0;
  cfg.tol_gauge = 1e-4;
  const McEstimate e = estimate_cem(Vec{0.0, 0.35}, spec, mc, cfg);
  CHECK(std::abs(e.mean) < 3.0 * e.stderr_ + 2e-3);
}

TEST_CASE("linearity: doubling the voltages doubles the estimate exactly") {
  BvpSpec spec = disk_spec(BvpKind::cem, 1.0);
  spec.layout = two_electrodes(1.0);
  McConfig mc;
  mc.n_paths = 800;
  mc.seed = 33;
  StepperConfig cfg;
  cfg.h = 1e-3;
  cfg.max_time = 30.0;
  cfg.tol_gauge = 1e-4;
  const McEstimate one = estimate_cem(Vec{0.4, 0.1}, spec, mc, cfg);
  spec.layout.voltages = {2.0, -2.0};
  const McEstimate two = estimate_cem(Vec{0.4, 0.1}, spec, mc, cfg);
  CHECK(two.mean == 2.0 * one.mean);  // bitwise under common random numbers
}

TEST_CASE("mixed problem: zero on the inaccessible boundary and on start") {
  BvpSpec spec;
  spec.kind = BvpKind::mixed_cem;
  spec.domain = Domain::hemisphere(2, 1.0);
  spec.medium = MediumSpec::constant_scalar(2, 1.0);
  spec.layout.electrodes = {{Vec{-0.5, 0.0}, 0.25}, {Vec{0.5, 0.0}, 0.25}};
  spec.layout.contact_impedance = {1.0, 1.0};
  spec.layout.voltages = {1.0, -1.0};
  McConfig mc;
  mc.n_paths = 100;
  mc.seed = 3;
  StepperConfig cfg;
  cfg.h = 1e-3;
  cfg.max_time = 20.0;
  const McEstimate on_cap = estimate_mixed_cem(Vec{0.0, -1.0}, spec, mc, cfg);
  CHECK(on_cap.mean == 0.0);
  CHECK(on_cap.stderr_ == 0.0);

  spec.layout.voltages = {0.0, 0.0};
  const McEstimate zero_v = estimate_mixed_cem(Vec{0.0, -0.4}, spec, mc, cfg);
  CHECK(zero_v.mean == 0.0);

  // the mixed estimator requires an inaccessible part
  BvpSpec on_disk = spec;
  on_disk.domain = Domain::ball(2, 1.0);
  on_disk.layout.electrodes = {{Vec{1.0, 0.0}, 0.25}, {Vec{-1.0, 0.0}, 0.25}};
  CHECK_THROWS_AS(estimate_mixed_cem(Vec{0.0, 0.0}, on_disk, mc, cfg), ConfigError);
}

TEST_CASE("currents vanish for zero voltages and mirror for symmetric electrodes") {
  BvpSpec spec = disk_spec(BvpKind::cem, 1.0);
  spec.layout = two_electrodes(1.0);
  spec.layout.voltages = {0.0, 0.0};
  McConfig mc;
  mc.n_paths = 200;
  mc.seed = 8;
  StepperConfig cfg;
  cfg.h = 1e-3;
  cfg.max_time = 30.0;
  cfg.tol_gauge = 1e-3;
  auto zero = estimate_electrode_currents(spec, mc, cfg, 4);
  CHECK(zero[0].mean == 0.0);
  CHECK(zero[1].mean == 0.0);

  spec.layout.voltages = {1.0, -1.0};
  mc.n_paths = 2000;
  auto j = estimate_electrode_currents(spec, mc, cfg, 4);
  const double pooled = std::sqrt(j[0].stderr_ * j[0].stderr_ + j[1].stderr_ * j[1].stderr_);
  CHECK(std::abs(j[0].mean + j[1].mean) < 3.0 * pooled + 1e-3);
  CHECK(j[0].mean > 0.0);
}

TEST_CASE("continuum estimate matches the disk closed form at reduced budget") {
  BvpSpec spec = disk_spec(BvpKind::continuum, 2.0);
  spec.boundary_data = [](const Vec& y) { return y[0] / norm(y); };
  McConfig mc;
  mc.n_paths = 30000;
  mc.seed = 77;
  StepperConfig cfg;
  cfg.h = 2e-4;
  cfg.max_time = 16.0;
  const McEstimate e = estimate_continuum(Vec{0.5, 0.0}, spec, mc, cfg);
  CHECK(std::abs(e.mean - 0.25) < std::max(3.0 * e.stderr_, 0.045 * 0.25));
}
