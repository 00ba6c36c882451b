#pragma once

// Internal: CSR matrix and Jacobi-preconditioned CG for the structured FV
// systems of the reference solvers. Not installed.

#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <vector>

namespace fkeit::detail {

struct Csr {
  int n = 0;
  std::vector<int> row_ptr;
  std::vector<int> col;
  std::vector<double> val;

  void multiply(const std::vector<double>& x, std::vector<double>& y) const {
    for (int i = 0; i < n; ++i) {
      double s = 0.0;
      for (int k = row_ptr[static_cast<std::size_t>(i)]; k < row_ptr[static_cast<std::size_t>(i) + 1]; ++k)
        s += val[static_cast<std::size_t>(k)] * x[static_cast<std::size_t>(col[static_cast<std::size_t>(k)])];
      y[static_cast<std::size_t>(i)] = s;
    }
  }
};

/// Triplet assembler with row-major bucketing; duplicate entries accumulate.
class CsrBuilder {
 public:
  explicit CsrBuilder(int n) : n_(n), entries_(static_cast<std::size_t>(n)) {}

  void add(int i, int j, double v) {
    auto& row = entries_[static_cast<std::size_t>(i)];
    for (auto& e : row)
      if (e.first == j) {
        e.second += v;
        return;
      }
    row.emplace_back(j, v);
  }

  Csr build() const {
    Csr a;
    a.n = n_;
    a.row_ptr.resize(static_cast<std::size_t>(n_) + 1, 0);
    std::size_t nnz = 0;
    for (const auto& row : entries_) nnz += row.size();
    a.col.reserve(nnz);
    a.val.reserve(nnz);
    for (int i = 0; i < n_; ++i) {
      for (const auto& e : entries_[static_cast<std::size_t>(i)]) {
        a.col.push_back(e.first);
        a.val.push_back(e.second);
      }
      a.row_ptr[static_cast<std::size_t>(i) + 1] = static_cast<int>(a.col.size());
    }
    return a;
  }

 private:
  int n_;
  std::vector<std::vector<std::pair<int, double>>> entries_;
};

struct CgResult {
  int iterations = 0;
  double relative_residual = 0.0;
};

/// CG with Jacobi preconditioning. When `project_constants` is set, both the
/// right-hand side and the iterates are kept orthogonal to the constant
/// vector (pure-Neumann gauge freedom).
inline CgResult pcg_solve(const Csr& a, std::vector<double>& x, std::vector<double> b,
                          double tol = 1e-12, int max_iter = 0, bool project_constants = false) {
  const int n = a.n;
  if (max_iter <= 0) max_iter = 40 * n > 200000 ? 200000 : 40 * n;
  std::vector<double> inv_diag(static_cast<std::size_t>(n), 1.0);
  for (int i = 0; i < n; ++i)
    for (int k = a.row_ptr[static_cast<std::size_t>(i)]; k < a.row_ptr[static_cast<std::size_t>(i) + 1]; ++k)
      if (a.col[static_cast<std::size_t>(k)] == i && a.val[static_cast<std::size_t>(k)] != 0.0)
        inv_diag[static_cast<std::size_t>(i)] = 1.0 / a.val[static_cast<std::size_t>(k)];

  auto project = [&](std::vector<double>& v) {
    if (!project_constants) return;
    double mean = 0.0;
    for (double t : v) mean += t;
    mean /= n;
    for (double& t : v) t -= mean;
  };

  project(b);
  x.assign(static_cast<std::size_t>(n), 0.0);
  std::vector<double> r = b, z(static_cast<std::size_t>(n)), p(static_cast<std::size_t>(n)),
      ap(static_cast<std::size_t>(n));
  double b_norm = 0.0;
  for (double t : b) b_norm += t * t;
  b_norm = std::sqrt(b_norm);
  if (b_norm == 0.0) return {0, 0.0};

  for (int i = 0; i < n; ++i) z[static_cast<std::size_t>(i)] = inv_diag[static_cast<std::size_t>(i)] * r[static_cast<std::size_t>(i)];
  project(z);
  p = z;
  double rz = 0.0;
  for (int i = 0; i < n; ++i) rz += r[static_cast<std::size_t>(i)] * z[static_cast<std::size_t>(i)];

  CgResult res;
  for (int it = 0; it < max_iter; ++it) {
    a.multiply(p, ap);
    project(ap);
    double pap = 0.0;
    for (int i = 0; i < n; ++i) pap += p[static_cast<std::size_t>(i)] * ap[static_cast<std::size_t>(i)];
    if (pap <= 0.0) break;
    const double alpha = rz / pap;
    double r_norm = 0.0;
    for (int i = 0; i < n; ++i) {
      x[static_cast<std::size_t>(i)] += alpha * p[static_cast<std::size_t>(i)];
      r[static_cast<std::size_t>(i)] -= alpha * ap[static_cast<std::size_t>(i)];
      r_norm += r[static_cast<std::size_t>(i)] * r[static_cast<std::size_t>(i)];
    }
    res.iterations = it + 1;
    res.relative_residual = std::sqrt(r_norm) / b_norm;
    if (res.relative_residual < tol) break;
    double rz_new = 0.0;
    for (int i = 0; i < n; ++i) {
      z[static_cast<std::size_t>(i)] = inv_diag[static_cast<std::size_t>(i)] * r[static_cast<std::size_t>(i)];
    }
    project(z);
    for (int i = 0; i < n; ++i) rz_new += r[static_cast<std::size_t>(i)] * z[static_cast<std::size_t>(i)];
    const double beta = rz_new / rz;
    rz = rz_new;
    for (int i = 0; i < n; ++i)
      p[static_cast<std::size_t>(i)] = z[static_cast<std::size_t>(i)] + beta * p[static_cast<std::size_t>(i)];
  }
  return res;
}

}  // namespace fkeit::detail
