#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <vector>

#include "fkeit/feynman_kac.hpp"
#include "fkeit/rng.hpp"
#include "fkeit/stats.hpp"

using namespace fkeit;

TEST_CASE("philox streams replay bit-exactly") {
  Philox a(12345, 7), b(12345, 7);
  for (int i = 0; i < 1000; ++i) CHECK(a.next_u32() == b.next_u32());

  Philox c(12345, 8);
  int same = 0;
  Philox a2(12345, 7);
  for (int i = 0; i < 1000; ++i) same += (a2.next_u32() == c.next_u32());
  CHECK(same < 5);  // distinct streams decorrelate
}

TEST_CASE("uniforms live strictly inside (0,1)") {
  Philox g(99, 0);
  for (int i = 0; i < 200000; ++i) {
    const double u = g.next_uniform();
    CHECK(u > 0.0);
    CHECK(u < 1.0);
  }
}

TEST_CASE("normal moments") {
  Philox g(2024, 0);
  const int n = 400000;
  double s1 = 0.0, s2 = 0.0, s4 = 0.0;
  for (int i = 0; i < n; ++i) {
    const double x = g.next_normal();
    s1 += x;
    s2 += x * x;
    s4 += x * x * x * x;
  }
  CHECK(std::abs(s1 / n) < 4.0 / std::sqrt(static_cast<double>(n)));
  CHECK(s2 / n == doctest::Approx(1.0).epsilon(0.01));
  CHECK(s4 / n == doctest::Approx(3.0).epsilon(0.05));
}

TEST_CASE("estimate stderr matches the classical formula") {
  std::vector<double> xs{1.0, 2.0, 3.0, 4.0};
  McEstimate e = estimate_from_samples(xs);
  CHECK(e.mean == doctest::Approx(2.5));
  // sample sd = sqrt(5/3), stderr = sd / 2
  CHECK(e.stderr_ == doctest::Approx(std::sqrt(5.0 / 3.0) / 2.0));
}

TEST_CASE("chunked reduction is worker-count invariant") {
  auto payoff = [](std::int64_t i) {
    Philox g(555, static_cast<std::uint64_t>(i));
    return g.next_normal() * 0.1 + 1.0;
  };
  McConfig mc;
  mc.n_paths = 4000;
  mc.antithetic = false;
  mc.chunk_size = 128;
  mc.seed = 555;

  mc.workers = 1;
  McEstimate one = run_mc(4000, mc, payoff);
  mc.workers = 4;
  McEstimate four = run_mc(4000, mc, payoff);
  mc.workers = 16;
  McEstimate sixteen = run_mc(4000, mc, payoff);

  CHECK(one.mean == four.mean);      // bitwise
  CHECK(one.mean == sixteen.mean);   // bitwise
  CHECK(one.stderr_ == four.stderr_);
  CHECK(one.stderr_ == sixteen.stderr_);
}
