#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "fkeit/diffusion.hpp"
#include "fkeit/reference.hpp"

using namespace fkeit;

namespace {

ConductivityField brownian_field(int d) {
  return ConductivityField(MediumSpec::constant_scalar(d, 0.5), 0, 1.0);
}

}  // namespace

TEST_CASE("interior step of the unit-volatility medium is a plain BM step") {
  const ConductivityField field = brownian_field(2);
  const Domain dom = Domain::ball(2, 100.0);
  StepperConfig cfg;
  cfg.h = 1e-3;

  PathState st;
  st.x = Vec{1.0, 2.0};
  Philox rng(7, 3);
  const PathState out = step(st, field, dom, BoundaryConditions::reflect_all(), cfg, rng);

  Philox replay(7, 3);
  const double sqrt_h = std::sqrt(cfg.h);
  const double dx = sqrt_h * replay.next_normal();
  const double dy = sqrt_h * replay.next_normal();
  CHECK(out.x[0] == doctest::Approx(1.0 + dx).epsilon(1e-14));
  CHECK(out.x[1] == doctest::Approx(2.0 + dy).epsilon(1e-14));
  CHECK(out.local_time == 0.0);
  CHECK(out.t == doctest::Approx(cfg.h));
}

TEST_CASE("co-normal mirror reflection and its local-time increment") {
  // Isotropic kappa = 0.5: penetration 0.3 mirrors to -0.3 and
  // dL = 2p/(nu.kappa.nu) = 2*0.3/0.5.
  const BoundaryFrame frame{Vec{1.0, 0.0}, Vec{0.0, 1.0}, BoundaryPart::accessible};
  const Mat half = Mat::scaled_identity(2, 0.5);
  ReflectionResult r = apply_reflection(Vec{1.0, 0.3}, frame, half);
  CHECK(r.x_in[0] == doctest::Approx(1.0));
  CHECK(r.x_in[1] == doctest::Approx(-0.3));
  CHECK(r.d_local_time == doctest::Approx(1.2));

  // Zero penetration: stay put, no local time.
  r = apply_reflection(Vec{1.0, 0.0}, frame, half);
  CHECK(r.x_in[1] == doctest::Approx(0.0));
  CHECK(r.d_local_time == 0.0);

  // Anisotropic kappa: displacement is parallel to kappa.nu.
  Mat k(2);
  k(0, 0) = k(1, 1) = 1.0;
  k(0, 1) = k(1, 0) = 0.5;
  r = apply_reflection(Vec{0.0, 0.2}, {Vec{0.0, 0.0}, Vec{0.0, 1.0}, BoundaryPart::accessible}, k);
  const Vec disp = r.x_in - Vec{0.0, 0.2};
  // kappa.nu = (0.5, 1): displacement components in that ratio.
  CHECK(disp[0] / disp[1] == doctest::Approx(0.5));
  CHECK(disp[1] == doctest::Approx(-0.4));  // depth reversed: normal part -2p
  CHECK(r.d_local_time == doctest::Approx(0.4));
}

TEST_CASE("skew crossing: construction, pass-through and per-event law") {
  InterfaceHit hit;
  hit.s = 0.5;
  hit.point = Vec{0.0, 0.0};
  hit.normal = Vec{1.0, 0.0};
  hit.kappa_n_neg = 3.0;
  hit.kappa_n_pos = 1.0;

  // Equal phases: the crossing is a no-op in law (depth preserved, sides 1/2).
  InterfaceHit equal = hit;
  equal.kappa_n_neg = equal.kappa_n_pos = 2.0;
  Philox rng_eq(1, 1);
  int pos = 0;
  for (int i = 0; i < 20000; ++i) {
    CrossingResult c = apply_interface_crossing(Vec{-0.05, 0.0}, Vec{0.1, 0.3}, equal, rng_eq);
    CHECK(std::abs(std::abs(c.x_new[0]) - 0.1) < 1e-14);  // depth preserved
    CHECK(c.x_new[1] == doctest::Approx(0.3));            // tangential kept
    pos += !c.ended_negative_side;
  }
  CHECK(std::abs(pos / 20000.0 - 0.5) < 4.0 * std::sqrt(0.25 / 20000.0));

  // Per-event side frequencies follow the sqrt(kappa) law.
  Philox rng(2, 9);
  const int n = 200000;
  int neg = 0;
  for (int i = 0; i < n; ++i) {
    CrossingResult c = apply_interface_crossing(Vec{-0.05, 0.0}, Vec{0.02, 0.0}, hit, rng);
    neg += c.ended_negative_side;
    // Depth rescaling: overshoot 0.02 entering from side 1 (kappa 3).
    const double expected = 0.02 * std::sqrt((c.ended_negative_side ? 3.0 : 1.0) / 3.0);
    CHECK(std::abs(c.x_new[0]) == doctest::Approx(expected));
  }
  const double p_neg_expected = std::sqrt(3.0) / (std::sqrt(3.0) + 1.0);
  CHECK(std::abs(static_cast<double>(neg) / n - p_neg_expected) <
        4.0 * std::sqrt(p_neg_expected * (1.0 - p_neg_expected) / n));
}

TEST_CASE("skew crossing: symmetric-interval exit law matches kappa/(kappa1+kappa2)") {
  // 1D two-phase medium, kappa1 = 3 left of 0, kappa2 = 1 right. A walker
  // started at the interface must reach +-eps on side 1 with probability 3/4.
  InterfaceDescriptor ifc;
  ifc.shape = InterfaceShape::hyperplane;
  ifc.anchor = Vec{1.0};
  ifc.offset = 0.0;
  ifc.kappa1 = 3.0;
  ifc.kappa2 = 1.0;
  const ConductivityField field(MediumSpec::two_phase(ifc, 1), 0, 1.0);
  const Domain dom = Domain::whole_space(1);
  StepperConfig cfg;
  cfg.h = 4e-5;
  cfg.max_time = 1e9;
  Functional none = Functional::none();
  const StepContext ctx(field, dom, BoundaryConditions::reflect_all(), none, cfg);

  const double eps = 0.25;
  const int n = 40000;
  int side1 = 0;
  for (int i = 0; i < n; ++i) {
    Philox rng(31337, static_cast<std::uint64_t>(i));
    PathState st;
    st.x = Vec{0.0};
    while (std::abs(st.x[0]) < eps) step(st, ctx, rng);
    side1 += (st.x[0] < 0.0);
  }
  const double freq = static_cast<double>(side1) / n;
  CHECK(std::abs(freq - 0.75) < 4.0 * std::sqrt(0.75 * 0.25 / n));
}

TEST_CASE("max_time = 0 returns the initial state, truncated") {
  const ConductivityField field = brownian_field(2);
  const Domain dom = Domain::ball(2, 1.0);
  StepperConfig cfg;
  cfg.max_time = 0.0;
  Philox rng(1, 1);
  const PathState st = simulate_path(Vec{0.1, -0.2}, field, dom,
                                     BoundaryConditions::reflect_all(), Functional::none(), cfg, rng);
  CHECK(st.status == PathStatus::truncated);
  CHECK(st.t == 0.0);
  CHECK(st.x[0] == doctest::Approx(0.1));
  CHECK(st.payoff == 0.0);
}

TEST_CASE("zero gauge makes the electrode payoff the plain flux integral") {
  // With the gauge pinned at 1 the electrode-model payoff must accumulate
  // exactly int f dL, bitwise equal to the flux functional on the same path.
  const Domain disk = Domain::ball(2, 1.0);
  const ConductivityField field(MediumSpec::constant_scalar(2, 1.0), 0, 1.0);
  ElectrodeLayout layout;
  layout.electrodes = {{Vec{std::cos(0.2), std::sin(0.2)}, 0.35},
                       {Vec{std::cos(3.3), std::sin(3.3)}, 0.35}};
  layout.contact_impedance = {2.0, 2.0};
  layout.voltages = {1.0, -1.0};

  Functional gauged = Functional::cem(layout);
  gauged.zero_gauge = true;
  auto f_eval = [layout](const Vec& y) {
    BoundaryFrame frame{y, Vec(y.d), BoundaryPart::accessible};
    return electrode_eval(layout, frame).f;
  };
  Functional flux = Functional::boundary_flux(f_eval);

  StepperConfig cfg;
  cfg.h = 1e-3;
  cfg.max_time = 2.0;
  const StepContext ctx_g(field, disk, BoundaryConditions::reflect_all(), gauged, cfg);
  const StepContext ctx_f(field, disk, BoundaryConditions::reflect_all(), flux, cfg);
  for (int i = 0; i < 200; ++i) {
    Philox r1(99, static_cast<std::uint64_t>(i)), r2(99, static_cast<std::uint64_t>(i));
    const PathState a = simulate_path(Vec{0.2, 0.1}, ctx_g, r1);
    const PathState b = simulate_path(Vec{0.2, 0.1}, ctx_f, r2);
    CHECK(a.payoff == b.payoff);  // bitwise
    CHECK(a.robin_integral == 0.0);
  }
}

TEST_CASE("gauge is monotone in the contact impedance, path by path") {
  const Domain disk = Domain::ball(2, 1.0);
  const ConductivityField field(MediumSpec::constant_scalar(2, 1.0), 0, 1.0);
  ElectrodeLayout lo, hi;
  lo.electrodes = hi.electrodes = {{Vec{1.0, 0.0}, 0.4}, {Vec{-1.0, 0.0}, 0.4}};
  lo.contact_impedance = {1.0, 1.0};
  hi.contact_impedance = {2.5, 2.5};
  lo.voltages = hi.voltages = {1.0, -1.0};

  StepperConfig cfg;
  cfg.h = 1e-3;
  cfg.max_time = 3.0;
  const Functional f_lo = Functional::cem(lo), f_hi = Functional::cem(hi);
  const StepContext ctx_lo(field, disk, BoundaryConditions::reflect_all(), f_lo, cfg);
  const StepContext ctx_hi(field, disk, BoundaryConditions::reflect_all(), f_hi, cfg);
  for (int i = 0; i < 100; ++i) {
    Philox r1(5150, static_cast<std::uint64_t>(i)), r2(5150, static_cast<std::uint64_t>(i));
    const PathState a = simulate_path(Vec{0.0, 0.0}, ctx_lo, r1);
    const PathState b = simulate_path(Vec{0.0, 0.0}, ctx_hi, r2);
    CHECK(b.gauge() >= a.gauge());  // larger z means weaker absorption
  }
}

TEST_CASE("reflection confines paths to the closed domain") {
  const Domain hemi = Domain::hemisphere(2, 1.0);
  const ConductivityField field(MediumSpec::constant_scalar(2, 1.0), 0, 1.0);
  StepperConfig cfg;
  cfg.h = 5e-4;
  Functional none = Functional::none();
  const StepContext ctx(field, hemi, BoundaryConditions::reflect_all(), none, cfg);
  int clamps = 0;
  for (int i = 0; i < 50; ++i) {
    Philox rng(21, static_cast<std::uint64_t>(i));
    PathState st;
    st.x = Vec{0.0, -0.5};
    for (int k = 0; k < 4000; ++k) {
      step(st, ctx, rng);
      CHECK(signed_distance(hemi, st.x) <= ctx.r_snap * 1e-9 + 1e-12);
      CHECK(st.local_time >= 0.0);
    }
    clamps += st.clamp_count;
  }
  CHECK(clamps < 20);  // clamping is an exceptional fallback
}

TEST_CASE("local time grows only at reflections and the gauge never increases") {
  const Domain hs = Domain::half_space(2);
  const ConductivityField field = brownian_field(2);
  ElectrodeLayout layout;
  layout.electrodes = {{Vec{0.0, 0.0}, 0.8}, {Vec{2.0, 0.0}, 0.8}};
  layout.contact_impedance = {1.0, 1.0};
  layout.voltages = {1.0, -1.0};
  const Functional fk = Functional::cem(layout);
  StepperConfig cfg;
  cfg.h = 2e-4;
  const StepContext ctx(field, hs, BoundaryConditions::reflect_all(), fk, cfg);
  Philox rng(4, 4);
  PathState st;
  st.x = Vec{0.0, -0.05};
  double last_l = 0.0, last_a = 0.0;
  for (int k = 0; k < 20000; ++k) {
    const double x_before = st.x[1];
    step(st, ctx, rng);
    CHECK(st.local_time >= last_l);
    CHECK(st.robin_integral >= last_a);
    if (st.local_time > last_l) {
      // a reflection happened this step; the proposal must have exited
      (void)x_before;
    }
    last_l = st.local_time;
    last_a = st.robin_integral;
  }
  CHECK(st.local_time > 0.0);
}

TEST_CASE("reflected local time matches the closed form (small budget)") {
  // Half-space, kappa = 0.5 I, started on the boundary, t = 1:
  // E L_1 = 2 sqrt(2/pi) under the surface-measure normalization.
  const Domain hs = Domain::half_space(2);
  const ConductivityField field = brownian_field(2);
  StepperConfig cfg;
  cfg.h = 2e-4;
  cfg.max_time = 1.0;
  Functional none = Functional::none();
  const StepContext ctx(field, hs, BoundaryConditions::reflect_all(), none, cfg);
  const int n = 20000;
  double sum = 0.0, sum_sq = 0.0;
  for (int i = 0; i < n; ++i) {
    Philox rng(60, static_cast<std::uint64_t>(i));
    const PathState st = simulate_path(Vec{0.0, 0.0}, ctx, rng);
    sum += st.local_time;
    sum_sq += st.local_time * st.local_time;
  }
  const double mean = sum / n;
  const double sd = std::sqrt((sum_sq - sum * sum / n) / (n - 1));
  const double expected = reflected_local_time_mean(0.5, 1.0);
  CHECK(expected == doctest::Approx(2.0 * std::sqrt(2.0 / std::numbers::pi)));
  CHECK(std::abs(mean - expected) < 3.0 * sd / std::sqrt(static_cast<double>(n)) + 0.05);
}

TEST_CASE("displacement covariance matches 2 kappa t for a constant anisotropic medium") {
  Mat k(2);
  k(0, 0) = 2.0;
  k(1, 1) = 0.5;
  k(0, 1) = k(1, 0) = 0.4;
  const ConductivityField field(MediumSpec::constant(k), 0, 1.0);
  const Domain dom = Domain::whole_space(2);
  StepperConfig cfg;
  cfg.h = 1e-3;
  cfg.max_time = 0.25;
  Functional none = Functional::none();
  const StepContext ctx(field, dom, BoundaryConditions::reflect_all(), none, cfg);
  const int n = 30000;
  double cxx = 0.0, cyy = 0.0, cxy = 0.0;
  for (int i = 0; i < n; ++i) {
    Philox rng(808, static_cast<std::uint64_t>(i));
    const PathState st = simulate_path(Vec{0.0, 0.0}, ctx, rng);
    cxx += st.x[0] * st.x[0];
    cyy += st.x[1] * st.x[1];
    cxy += st.x[0] * st.x[1];
  }
  cxx /= n;
  cyy /= n;
  cxy /= n;
  const double t = cfg.max_time;
  // chi-square spread of the second-moment estimates
  CHECK(std::abs(cxx - 2.0 * k(0, 0) * t) < 3.0 * 2.0 * k(0, 0) * t * std::sqrt(2.0 / n));
  CHECK(std::abs(cyy - 2.0 * k(1, 1) * t) < 3.0 * 2.0 * k(1, 1) * t * std::sqrt(2.0 / n));
  CHECK(std::abs(cxy - 2.0 * k(0, 1) * t) < 4.0 * 2.0 * std::sqrt(k(0, 0) * k(1, 1)) * t / std::sqrt(n));
}

TEST_CASE("absorption on the inaccessible part places the endpoint on the crossing") {
  const Domain hemi = Domain::hemisphere(2, 1.0);
  const ConductivityField field = brownian_field(2);
  StepperConfig cfg;
  cfg.h = 1e-3;
  cfg.max_time = 50.0;
  Functional none = Functional::none();
  const StepContext ctx(field, hemi, BoundaryConditions::mixed(), none, cfg);
  int absorbed = 0;
  for (int i = 0; i < 500; ++i) {
    Philox rng(3, static_cast<std::uint64_t>(i));
    const PathState st = simulate_path(Vec{0.0, -0.5}, ctx, rng);
    if (st.status == PathStatus::absorbed) {
      ++absorbed;
      CHECK(std::abs(norm(st.x) - 1.0) < 1e-9);
      CHECK(st.x[1] <= 1e-12);
    }
  }
  CHECK(absorbed == 500);  // tau < infinity a.s., horizon is generous
}

TEST_CASE("halving h moves the gauged payoff consistently with sqrt(h) weak error") {
  // Common random numbers; the Richardson extrapolations from (h, h/2) and
  // (h/2, h/4) must agree to a few pooled standard errors.
  const Domain disk = Domain::ball(2, 1.0);
  const ConductivityField field(MediumSpec::constant_scalar(2, 1.0), 0, 1.0);
  ElectrodeLayout layout;
  layout.electrodes = {{Vec{1.0, 0.0}, 0.4}, {Vec{-1.0, 0.0}, 0.4}};
  layout.contact_impedance = {1.0, 1.0};
  layout.voltages = {1.0, -1.0};
  const Functional fk = Functional::cem(layout);
  StepperConfig base;
  base.max_time = 40.0;
  base.tol_gauge = 1e-6;

  auto run = [&](double h) {
    StepperConfig cfg = base;
    cfg.h = h;
    const StepContext ctx(field, disk, BoundaryConditions::reflect_all(), fk, cfg);
    const int n = 4000;
    double s = 0.0, s2 = 0.0;
    for (int i = 0; i < n; ++i) {
      Philox rng(1234, static_cast<std::uint64_t>(i));
      const double p = simulate_path(Vec{0.4, 0.0}, ctx, rng).payoff;
      s += p;
      s2 += p * p;
    }
    const double mean = s / n;
    const double se = std::sqrt(((s2 - s * s / n) / (n - 1)) / n);
    return std::pair<double, double>{mean, se};
  };
  auto [u1, se1] = run(2e-3);
  auto [u2, se2] = run(1e-3);
  auto [u4, se4] = run(5e-4);
  const double sqrt2 = std::sqrt(2.0);
  const double rich_a = (sqrt2 * u2 - u1) / (sqrt2 - 1.0);
  const double rich_b = (sqrt2 * u4 - u2) / (sqrt2 - 1.0);
  const double pooled = std::sqrt(se1 * se1 + se2 * se2 + se4 * se4) * 3.5;
  CHECK(std::abs(rich_a - rich_b) < pooled + 0.02);
}
