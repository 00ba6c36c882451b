#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "fkeit/media.hpp"
#include "fkeit/rng.hpp"
#include "fkeit/stats.hpp"

using namespace fkeit;

TEST_CASE("constant field evaluates to its matrix everywhere") {
  Mat k(2);
  k(0, 0) = 2.0;
  k(1, 1) = 0.5;
  const ConductivityField field(MediumSpec::constant(k), 42, 1.0);
  const Mat at = field.kappa_at(Vec{3.0, -7.0});
  CHECK(at(0, 0) == 2.0);
  CHECK(at(1, 1) == 0.5);
  CHECK(at(0, 1) == 0.0);
  CHECK(norm(field.drift_at(Vec{0.1, 0.2})) == 0.0);
}

TEST_CASE("checkerboard realizations are deterministic in (spec, seed)") {
  auto spec = MediumSpec::checkerboard_scalar(2, 1.0, {1.0, 4.0}, {0.5, 0.5});
  const ConductivityField a(spec, 123, 1.0);
  const ConductivityField b(spec, 123, 1.0);
  const ConductivityField c(spec, 124, 1.0);
  Philox g(5, 0);
  int diffs = 0;
  for (int i = 0; i < 10000; ++i) {
    Vec x{40.0 * (g.next_uniform() - 0.5), 40.0 * (g.next_uniform() - 0.5)};
    const double va = a.scalar_kappa_at(x);
    CHECK(va == b.scalar_kappa_at(x));  // bitwise determinism
    diffs += (va != c.scalar_kappa_at(x));
  }
  CHECK(diffs > 2000);  // a different seed is a different realization
}

TEST_CASE("layered lookup and rescaling") {
  auto spec = MediumSpec::layered_alternating(2, 1, 1.0, {1.0, 4.0});
  const ConductivityField f01(spec, 7, 0.1);
  CHECK(f01.scalar_kappa_at(Vec{0.0, 0.05}) == 1.0);
  CHECK(f01.scalar_kappa_at(Vec{0.0, 0.15}) == 4.0);

  const ConductivityField unit(spec, 7, 1.0);
  const ConductivityField quarter = unit.rescaled(0.25);
  CHECK(quarter.scalar_kappa_at(Vec{0.0, 0.3}) == unit.scalar_kappa_at(Vec{0.0, 1.2}));

  // constant media are scale-invariant
  const ConductivityField c1(MediumSpec::constant_scalar(2, 2.0), 1, 1.0);
  const ConductivityField c2 = c1.rescaled(0.37);
  CHECK(c1.kappa_at(Vec{0.4, 0.6})(0, 0) == c2.kappa_at(Vec{0.4, 0.6})(0, 0));

  // checkerboard cells shrink with epsilon
  auto cb = MediumSpec::checkerboard_scalar(2, 1.0, {1.0, 4.0}, {0.5, 0.5});
  const ConductivityField cb1(cb, 3, 1.0);
  const ConductivityField cbh = cb1.rescaled(0.5);
  CHECK(cbh.scalar_kappa_at(Vec{0.2, 0.2}) == cb1.scalar_kappa_at(Vec{0.4, 0.4}));
}

TEST_CASE("two-phase side lookup") {
  InterfaceDescriptor ifc;
  ifc.shape = InterfaceShape::hyperplane;
  ifc.anchor = Vec{1.0, 0.0};
  ifc.offset = 0.0;
  ifc.kappa1 = 3.0;
  ifc.kappa2 = 1.0;
  const ConductivityField field(MediumSpec::two_phase(ifc, 2), 0, 1.0);
  CHECK(field.kappa_at(Vec{-0.2, 0.0})(0, 0) == 3.0);
  CHECK(field.kappa_at(Vec{0.2, 0.0})(0, 0) == 1.0);
  CHECK_THROWS_AS(field.drift_at(Vec{0.0, 0.0}), UnsupportedQueryError);
}

TEST_CASE("smooth affine family: value and drift") {
  MediumSpec spec;
  spec.kind = MediumKind::smooth;
  spec.dim = 2;
  spec.family = SmoothFamily::affine_iso;
  spec.smooth_base = 1.0;
  spec.smooth_gradient = Vec{1.0, 0.0};
  spec.ellipticity_bound = 16.0;
  const ConductivityField field(spec, 0, 1.0);
  CHECK(field.kappa_at(Vec{0.5, 0.0})(0, 0) == doctest::Approx(1.5));
  const Vec a = field.drift_at(Vec{0.3, 0.9});
  CHECK(a[0] == doctest::Approx(1.0));
  CHECK(a[1] == doctest::Approx(0.0));

  const Vec fd = drift_at_finite_difference(field, Vec{0.3, 0.9}, 1e-4);
  CHECK(std::abs(fd[0] - 1.0) < 1e-7);
  CHECK(std::abs(fd[1]) < 1e-7);
}

TEST_CASE("diffusion factor is the lower Cholesky factor of 2 kappa") {
  // kappa = 0.5 I -> B = I
  const ConductivityField half(MediumSpec::constant_scalar(2, 0.5), 0, 1.0);
  const Mat b0 = half.diffusion_factor(Vec{0.0, 0.0});
  CHECK(b0(0, 0) == doctest::Approx(1.0));
  CHECK(b0(1, 1) == doctest::Approx(1.0));
  CHECK(b0(1, 0) == doctest::Approx(0.0));

  // kappa = diag(2, 0.5) -> B = diag(2, 1)
  Mat d(2);
  d(0, 0) = 2.0;
  d(1, 1) = 0.5;
  const ConductivityField diag_field(MediumSpec::constant(d), 0, 1.0);
  const Mat b1 = diag_field.diffusion_factor(Vec{0.0, 0.0});
  CHECK(b1(0, 0) == doctest::Approx(2.0));
  CHECK(b1(1, 1) == doctest::Approx(1.0));

  // kappa = [[1, .5], [.5, 1]] -> lower factor of [[2,1],[1,2]]
  Mat k(2);
  k(0, 0) = k(1, 1) = 1.0;
  k(0, 1) = k(1, 0) = 0.5;
  const ConductivityField aniso(MediumSpec::constant(k), 0, 1.0);
  const Mat b2 = aniso.diffusion_factor(Vec{0.0, 0.0});
  CHECK(b2(0, 0) == doctest::Approx(1.41421356).epsilon(1e-6));
  CHECK(b2(1, 0) == doctest::Approx(0.70710678).epsilon(1e-6));
  CHECK(b2(1, 1) == doctest::Approx(1.22474487).epsilon(1e-6));
  CHECK(b2(0, 1) == 0.0);
}

TEST_CASE("factor round-trip B B^T = 2 kappa across media") {
  Philox g(11, 0);
  std::vector<ConductivityField> fields;
  fields.emplace_back(MediumSpec::checkerboard_scalar(2, 1.0, {1.0, 4.0}, {0.5, 0.5}), 5, 1.0);
  Mat k(3);
  k(0, 0) = 2.0; k(1, 1) = 1.0; k(2, 2) = 0.7;
  k(0, 1) = k(1, 0) = 0.3;
  k(1, 2) = k(2, 1) = -0.2;
  fields.emplace_back(MediumSpec::constant(k), 5, 1.0);
  for (const auto& field : fields) {
    for (int i = 0; i < 2000; ++i) {
      Vec x(field.dim());
      for (int j = 0; j < field.dim(); ++j) x[j] = 20.0 * (g.next_uniform() - 0.5);
      const Mat b = field.diffusion_factor(x);
      const Mat bbt = mat_mul(b, transpose(b));
      const Mat two_kappa = 2.0 * field.kappa_at(x);
      double defect = 0.0;
      for (int r = 0; r < field.dim(); ++r)
        for (int c = 0; c < field.dim(); ++c) defect = std::max(defect, std::abs(bbt(r, c) - two_kappa(r, c)));
      CHECK(defect <= 1e-12 * frobenius_norm(two_kappa));
    }
  }
}

TEST_CASE("ellipticity sweep over random queries") {
  std::vector<MediumSpec> specs;
  specs.push_back(MediumSpec::checkerboard_scalar(2, 0.7, {1.0, 4.0}, {0.5, 0.5}));
  specs.push_back(MediumSpec::layered_alternating(3, 2, 1.3, {0.5, 2.0}));
  MediumSpec poisson;
  poisson.kind = MediumKind::poisson_spheres;
  poisson.dim = 2;
  poisson.poisson_intensity = 0.3;
  poisson.poisson_radius = 0.6;
  poisson.poisson_kappa_in = 4.0;
  poisson.poisson_kappa_out = 1.0;
  poisson.ellipticity_bound = 4.0;
  specs.push_back(poisson);

  Philox g(17, 0);
  for (const auto& spec : specs) {
    const double c = spec.ellipticity_bound;
    for (int r = 0; r < 5; ++r) {
      const ConductivityField field(spec, 100 + static_cast<std::uint64_t>(r), 1.0);
      for (int i = 0; i < 2000; ++i) {
        Vec x(spec.dim);
        for (int j = 0; j < spec.dim; ++j) x[j] = 30.0 * (g.next_uniform() - 0.5);
        const auto ev = symmetric_eigenvalues(field.kappa_at(x));
        CHECK(ev[0] >= 1.0 / c - 1e-12);
        CHECK(ev[spec.dim - 1] <= c + 1e-12);
        CHECK(max_symmetry_defect(field.kappa_at(x)) <= 1e-14);
      }
    }
  }
}

TEST_CASE("stationarity of the checkerboard law under shifts") {
  auto spec = MediumSpec::checkerboard_scalar(2, 1.0, {1.0, 4.0}, {0.5, 0.5});
  const Vec shift_a{0.0, 0.0};
  const Vec shift_b{17.31, -42.9};
  auto mean_at = [&](const Vec& shift, std::vector<double>& samples) {
    for (int r = 0; r < 1000; ++r) {
      const ConductivityField field(spec, 9000 + static_cast<std::uint64_t>(r), 1.0);
      double m = 0.0;
      Philox g(800 + static_cast<std::uint64_t>(r), 0);
      for (int i = 0; i < 64; ++i) {
        Vec x{shift[0] + 8.0 * g.next_uniform(), shift[1] + 8.0 * g.next_uniform()};
        m += field.kappa_at(x)(0, 0);
      }
      samples.push_back(m / 64.0);
    }
  };
  std::vector<double> sa, sb;
  mean_at(shift_a, sa);
  mean_at(shift_b, sb);
  const McEstimate ea = estimate_from_samples(sa), eb = estimate_from_samples(sb);
  const double pooled = std::sqrt(ea.stderr_ * ea.stderr_ + eb.stderr_ * eb.stderr_);
  CHECK(std::abs(ea.mean - eb.mean) < 3.0 * pooled);
}

TEST_CASE("interface crossing detection in layered and two-phase media") {
  auto spec = MediumSpec::layered_alternating(2, 1, 1.0, {1.0, 4.0});
  const ConductivityField field(spec, 0, 1.0);
  auto hit = field.first_interface_crossing(Vec{0.2, 0.9}, Vec{0.2, 1.1});
  REQUIRE(hit.has_value());
  CHECK(hit->point[1] == doctest::Approx(1.0));
  CHECK(hit->kappa_n_neg == 1.0);
  CHECK(hit->kappa_n_pos == 4.0);
  CHECK(hit->normal[1] == doctest::Approx(1.0));
  CHECK_FALSE(field.first_interface_crossing(Vec{0.2, 0.1}, Vec{0.2, 0.6}).has_value());

  InterfaceDescriptor ifc;
  ifc.shape = InterfaceShape::sphere;
  ifc.anchor = Vec{0.0, 0.0};
  ifc.offset = 0.5;
  ifc.kappa1 = 2.0;
  ifc.kappa2 = 1.0;
  const ConductivityField tp(MediumSpec::two_phase(ifc, 2), 0, 1.0);
  auto sphere_hit = tp.first_interface_crossing(Vec{0.45, 0.0}, Vec{0.58, 0.0});
  REQUIRE(sphere_hit.has_value());
  CHECK(sphere_hit->point[0] == doctest::Approx(0.5));
  CHECK(sphere_hit->normal[0] == doctest::Approx(1.0));
}
