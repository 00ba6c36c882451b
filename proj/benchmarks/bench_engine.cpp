#include <benchmark/benchmark.h>

#include "fkeit/diffusion.hpp"
#include "fkeit/homogenize.hpp"
#include "fkeit/reference.hpp"
#include "fkeit/rng.hpp"

using namespace fkeit;

static void bm_philox_normals(benchmark::State& state) {
  Philox rng(1, 1);
  double acc = 0.0;
  for (auto _ : state) {
    for (int i = 0; i < 1024; ++i) acc += rng.next_normal();
    benchmark::DoNotOptimize(acc);
  }
  state.SetItemsProcessed(state.iterations() * 1024);
}
BENCHMARK(bm_philox_normals);

static void bm_step_constant_disk(benchmark::State& state) {
  const ConductivityField field(MediumSpec::constant_scalar(2, 1.0), 0, 1.0);
  const Domain dom = Domain::ball(2, 1.0);
  StepperConfig cfg;
  cfg.h = 1e-4;
  Functional none = Functional::none();
  const StepContext ctx(field, dom, BoundaryConditions::reflect_all(), none, cfg);
  Philox rng(7, 0);
  PathState st;
  st.x = Vec{0.2, 0.1};
  for (auto _ : state) {
    for (int i = 0; i < 1024; ++i) step(st, ctx, rng);
    benchmark::DoNotOptimize(st.x);
  }
  state.SetItemsProcessed(state.iterations() * 1024);
}
BENCHMARK(bm_step_constant_disk);

static void bm_step_checkerboard_free(benchmark::State& state) {
  const ConductivityField field(MediumSpec::checkerboard_scalar(2, 1.0, {1.0, 4.0}, {0.5, 0.5}),
                                3, 1.0);
  const Domain dom = Domain::whole_space(2);
  StepperConfig cfg;
  cfg.h = 1e-3;
  Functional none = Functional::none();
  const StepContext ctx(field, dom, BoundaryConditions::reflect_all(), none, cfg);
  Philox rng(7, 0);
  PathState st;
  st.x = Vec{0.0, 0.0};
  for (auto _ : state) {
    for (int i = 0; i < 1024; ++i) step(st, ctx, rng);
    benchmark::DoNotOptimize(st.x);
  }
  state.SetItemsProcessed(state.iterations() * 1024);
}
BENCHMARK(bm_step_checkerboard_free);

static void bm_skew_transition(benchmark::State& state) {
  Philox rng(9, 0);
  double acc = 0.0;
  for (auto _ : state) {
    for (int i = 0; i < 1024; ++i) acc += skew_transition(0.05 - 1e-4 * i, 2.0 / 3.0, 0.05, rng);
    benchmark::DoNotOptimize(acc);
  }
  state.SetItemsProcessed(state.iterations() * 1024);
}
BENCHMARK(bm_skew_transition);

static void bm_fd_solve_disk(benchmark::State& state) {
  for (auto _ : state) {
    PolarProblem p;
    p.grid = PolarGrid{1.0, 64, 128, false};
    p.kappa = [](const Vec&) { return 1.0; };
    p.arc = FdBoundary::dirichlet([](const Vec& y) { return y[0]; });
    benchmark::DoNotOptimize(fd_solve_polar(p).values);
  }
}
BENCHMARK(bm_fd_solve_disk);

BENCHMARK_MAIN();
