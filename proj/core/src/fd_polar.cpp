#include <cmath>

#include "fkeit/errors.hpp"
#include "fkeit/reference.hpp"
#include "sparse.hpp"

namespace fkeit {

namespace {

inline double harmonic(double a, double b) { return 2.0 * a * b / (a + b); }

struct Assembly {
  const PolarGrid& grid;
  std::vector<double> kappa_c;  // at cell centers
  double dr, dth, th0;

  explicit Assembly(const PolarGrid& g) : grid(g), dr(g.dr()), dth(g.dtheta()), th0(g.theta0()) {}

  int idx(int i, int j) const { return j * grid.nr + i; }
  double r_center(int i) const { return (i + 0.5) * dr; }
  double theta_center(int j) const { return th0 + (j + 0.5) * dth; }
  Vec point(double r, double th) const { return Vec{r * std::cos(th), r * std::sin(th)}; }
};

// Boundary face closure: returns (diagonal contribution, rhs contribution)
// for the outward flux through a boundary face of length `len`, with normal
// spacing `delta` from the cell center to the face.
struct FaceClosure {
  double diag = 0.0;
  double rhs = 0.0;
};

FaceClosure boundary_closure(const FdBoundary& bc, const Vec& p, double kappa_cell, double len,
                             double delta) {
  FaceClosure out;
  switch (bc.kind) {
    case FdBoundary::Kind::dirichlet: {
      const double w = 2.0 * kappa_cell / delta;
      out.diag = len * w;
      out.rhs = len * w * bc.data(p);
      break;
    }
    case FdBoundary::Kind::flux:
      out.rhs = len * bc.data(p);
      break;
    case FdBoundary::Kind::robin: {
      const double beta = 2.0 * kappa_cell / delta;
      const double g = bc.g ? bc.g(p) : 0.0;
      const double f = bc.data ? bc.data(p) : 0.0;
      out.diag = len * beta * g / (beta + g);
      out.rhs = len * beta * f / (beta + g);
      break;
    }
  }
  return out;
}

}  // namespace

FdBoundary fd_boundary_from_layout(const ElectrodeLayout& layout) {
  FdBoundary bc;
  bc.kind = FdBoundary::Kind::robin;
  bc.data = [&layout](const Vec& p) {
    BoundaryFrame frame{p, Vec(p.d), BoundaryPart::accessible};
    return electrode_eval(layout, frame).f;
  };
  bc.g = [&layout](const Vec& p) {
    BoundaryFrame frame{p, Vec(p.d), BoundaryPart::accessible};
    return electrode_eval(layout, frame).g;
  };
  return bc;
}

PolarFdSolution fd_solve_polar(const PolarProblem& problem) {
  const PolarGrid& g = problem.grid;
  Assembly a(g);
  const int n = g.cells();
  a.kappa_c.resize(static_cast<std::size_t>(n));
  for (int j = 0; j < g.ntheta; ++j)
    for (int i = 0; i < g.nr; ++i)
      a.kappa_c[static_cast<std::size_t>(a.idx(i, j))] =
          problem.kappa(a.point(a.r_center(i), a.theta_center(j)));

  detail::CsrBuilder builder(n);
  std::vector<double> b(static_cast<std::size_t>(n), 0.0);
  bool any_dirichlet_or_robin = problem.alpha != 0.0;

  for (int j = 0; j < g.ntheta; ++j) {
    for (int i = 0; i < g.nr; ++i) {
      const int c = a.idx(i, j);
      const double r = a.r_center(i);
      const double area = r * a.dr * a.dth;
      const double kc = a.kappa_c[static_cast<std::size_t>(c)];

      if (problem.alpha != 0.0) builder.add(c, c, problem.alpha * area);
      if (problem.source) b[static_cast<std::size_t>(c)] += area * problem.source(a.point(r, a.theta_center(j)));

      // Radial faces, each visited from both adjacent cells.
      if (i + 1 < g.nr) {
        const int nb = a.idx(i + 1, j);
        const double kf = harmonic(kc, a.kappa_c[static_cast<std::size_t>(nb)]);
        const double w = kf * ((i + 1) * a.dr * a.dth) / a.dr;
        builder.add(c, c, w);
        builder.add(c, nb, -w);
      } else {
        const Vec p = a.point(g.radius, a.theta_center(j));
        const FaceClosure fc =
            boundary_closure(problem.arc, p, kc, g.radius * a.dth, a.dr);
        builder.add(c, c, fc.diag);
        b[static_cast<std::size_t>(c)] += fc.rhs;
        if (problem.arc.kind != FdBoundary::Kind::flux) any_dirichlet_or_robin = true;
      }
      if (i > 0) {
        const int nb = a.idx(i - 1, j);
        const double kf = harmonic(kc, a.kappa_c[static_cast<std::size_t>(nb)]);
        const double w = kf * (i * a.dr * a.dth) / a.dr;
        builder.add(c, c, w);
        builder.add(c, nb, -w);
      }
      // Inner face at r=0 has zero length: no flux.

      // Angular faces; each interior face shows up once in each of its two
      // cell rows, which is exactly the symmetric FV stencil.
      for (int side = 0; side < 2; ++side) {
        const int jn = side == 0 ? j - 1 : j + 1;
        int jw = g.half ? jn : (jn + g.ntheta) % g.ntheta;
        if (!g.half || (jn >= 0 && jn < g.ntheta)) {
          const int nb = a.idx(i, jw);
          if (nb == c) continue;
          const double kf = harmonic(kc, a.kappa_c[static_cast<std::size_t>(nb)]);
          const double w = kf * a.dr / (r * a.dth);
          builder.add(c, c, w);
          builder.add(c, nb, -w);
        } else {
          // Flat boundary ray (half grids).
          const double th_b = side == 0 ? a.th0 : a.th0 + g.ntheta * a.dth;
          const Vec p = a.point(r, th_b);
          const FaceClosure fc =
              boundary_closure(problem.flat, p, kc, a.dr, r * a.dth);
          builder.add(c, c, fc.diag);
          b[static_cast<std::size_t>(c)] += fc.rhs;
          if (problem.flat.kind != FdBoundary::Kind::flux) any_dirichlet_or_robin = true;
        }
      }
    }
  }

  const bool singular = !any_dirichlet_or_robin;
  if (singular) {
    double b_sum = 0.0, b_abs = 0.0;
    for (double t : b) {
      b_sum += t;
      b_abs += std::abs(t);
    }
    if (b_abs > 0.0 && std::abs(b_sum) > 1e-8 * b_abs)
      throw NumericalError("fd_solve_polar: incompatible pure-Neumann data (nonzero total flux)");
  }

  detail::Csr mat = builder.build();
  PolarFdSolution sol;
  sol.grid = g;
  auto cg = detail::pcg_solve(mat, sol.values, b, 1e-12, 0, singular);
  sol.residual = cg.relative_residual;
  sol.iterations = cg.iterations;
  if (cg.relative_residual > 1e-10)
    throw NumericalError("fd_solve_polar: CG stalled, relative residual " +
                         std::to_string(cg.relative_residual));

  if (problem.zero_mean) {
    double m = 0.0, tot = 0.0;
    for (int j = 0; j < g.ntheta; ++j)
      for (int i = 0; i < g.nr; ++i) {
        const double area = a.r_center(i) * a.dr * a.dth;
        m += sol.values[static_cast<std::size_t>(a.idx(i, j))] * area;
        tot += area;
      }
    m /= tot;
    for (double& u : sol.values) u -= m;
  }

  sol.kappa_ = problem.kappa;
  sol.arc_ = problem.arc;
  sol.flat_ = problem.flat;
  return sol;
}

double PolarFdSolution::value_at(const Vec& x) const {
  const PolarGrid& g = grid;
  const double dr = g.dr(), dth = g.dtheta(), th0 = g.theta0();
  const double r = std::sqrt(x[0] * x[0] + x[1] * x[1]);
  double th = std::atan2(x[1], x[0]);
  if (g.half) {
    if (th > 0.0) th -= 2.0 * std::numbers::pi;  // clamp stray positives
    th += 2.0 * std::numbers::pi;                // [pi, 2pi]
  } else if (th < 0.0) {
    th += 2.0 * std::numbers::pi;
  }
  // Fractional cell-center coordinates.
  double fi = r / dr - 0.5;
  double fj = (th - th0) / dth - 0.5;
  const int nr = g.nr, nt = g.ntheta;
  int i0 = static_cast<int>(std::floor(fi));
  int j0 = static_cast<int>(std::floor(fj));
  double wi = fi - i0, wj = fj - j0;
  auto clamp_i = [&](int i) { return std::min(std::max(i, 0), nr - 1); };
  auto wrap_j = [&](int j) {
    if (g.half) return std::min(std::max(j, 0), nt - 1);
    return (j % nt + nt) % nt;
  };
  if (i0 < 0) {
    if (!g.half) {
      // Inside the innermost ring: interpolate through the center using the
      // antipodal cells; exact for functions linear across the origin.
      const double lam = r / (0.5 * dr);  // in [0,1)
      auto ring = [&](double theta) {
        double fj2 = (theta - th0) / dth - 0.5;
        int j2 = static_cast<int>(std::floor(fj2));
        double wj2 = fj2 - j2;
        const int ja = ((j2 % nt) + nt) % nt, jb = ((j2 + 1) % nt + nt) % nt;
        return (1 - wj2) * values[static_cast<std::size_t>(ja * nr)] +
               wj2 * values[static_cast<std::size_t>(jb * nr)];
      };
      const double u_here = ring(th);
      const double u_opposite = ring(th + std::numbers::pi);
      return 0.5 * (1.0 + lam) * u_here + 0.5 * (1.0 - lam) * u_opposite;
    }
    i0 = 0;
    wi = 0.0;
  }
  if (i0 >= nr - 1) {
    i0 = nr - 1;
    wi = 0.0;
  }
  if (g.half) {
    if (j0 < 0) {
      j0 = 0;
      wj = 0.0;
    }
    if (j0 >= nt - 1) {
      j0 = nt - 1;
      wj = 0.0;
    }
  }
  const int i1 = clamp_i(i0 + 1), j1 = wrap_j(j0 + 1);
  const int jj0 = wrap_j(j0);
  auto v = [&](int i, int j) { return values[static_cast<std::size_t>(j * nr + i)]; };
  return (1 - wi) * (1 - wj) * v(i0, jj0) + wi * (1 - wj) * v(i1, jj0) +
         (1 - wi) * wj * v(i0, j1) + wi * wj * v(i1, j1);
}

double PolarFdSolution::area_mean() const {
  const PolarGrid& g = grid;
  const double dr = g.dr(), dth = g.dtheta();
  double m = 0.0, tot = 0.0;
  for (int j = 0; j < g.ntheta; ++j)
    for (int i = 0; i < g.nr; ++i) {
      const double area = (i + 0.5) * dr * dr * dth;
      m += values[static_cast<std::size_t>(j * g.nr + i)] * area;
      tot += area;
    }
  return m / tot;
}

PolarFdSolution::Currents PolarFdSolution::electrode_currents(const ElectrodeLayout& layout) const {
  const PolarGrid& g = grid;
  const double dr = g.dr(), dth = g.dtheta(), th0 = g.theta0();
  const int nL = layout.count();
  Currents out;
  out.current.assign(static_cast<std::size_t>(nL), 0.0);
  out.resolved_measure.assign(static_cast<std::size_t>(nL), 0.0);

  auto accumulate = [&](const Vec& p, double len, double delta, double u_c, double kc) {
    BoundaryFrame frame{p, Vec(p.d), BoundaryPart::accessible};
    for (int l = 0; l < nL; ++l) {
      if (norm(p - layout.electrodes[static_cast<std::size_t>(l)].center) >=
          layout.electrodes[static_cast<std::size_t>(l)].radius)
        continue;
      const RobinData fg = electrode_eval(layout, frame);
      const double beta = 2.0 * kc / delta;
      const double u_face = (beta * u_c + fg.f) / (beta + fg.g);
      out.current[static_cast<std::size_t>(l)] += len * (fg.f - fg.g * u_face);
      out.resolved_measure[static_cast<std::size_t>(l)] += len;
      break;
    }
  };

  if (g.half) {
    // Electrodes live on the flat diameter.
    for (int side = 0; side < 2; ++side) {
      const double th_b = side == 0 ? th0 : th0 + g.ntheta * dth;
      const int j = side == 0 ? 0 : g.ntheta - 1;
      for (int i = 0; i < g.nr; ++i) {
        const double r = (i + 0.5) * dr;
        const Vec p{r * std::cos(th_b), r * std::sin(th_b)};
        const double u_c = values[static_cast<std::size_t>(j * g.nr + i)];
        const double kc = kappa_ ? kappa_(p) : 1.0;
        accumulate(p, dr, r * dth, u_c, kc);
      }
    }
  } else {
    for (int j = 0; j < g.ntheta; ++j) {
      const double th = th0 + (j + 0.5) * dth;
      const Vec p{g.radius * std::cos(th), g.radius * std::sin(th)};
      const double u_c = values[static_cast<std::size_t>(j * g.nr + (g.nr - 1))];
      const double kc = kappa_ ? kappa_(p) : 1.0;
      accumulate(p, g.radius * dth, dr, u_c, kc);
    }
  }
  for (int l = 0; l < nL; ++l) {
    if (out.resolved_measure[static_cast<std::size_t>(l)] > 0.0)
      out.current[static_cast<std::size_t>(l)] /= out.resolved_measure[static_cast<std::size_t>(l)];
  }
  return out;
}

}  // namespace fkeit
