#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <string>

namespace fkeit {

inline constexpr int kMaxDim = 3;

/// Fixed-capacity vector for spatial dimensions 1..3.
struct Vec {
  std::array<double, kMaxDim> v{0.0, 0.0, 0.0};
  int d = 0;

  Vec() = default;
  explicit Vec(int dim) : d(dim) {}
  Vec(std::initializer_list<double> xs) {
    d = static_cast<int>(xs.size());
    int i = 0;
    for (double x : xs) v[i++] = x;
  }

  double& operator[](int i) { return v[i]; }
  double operator[](int i) const { return v[i]; }

  Vec& operator+=(const Vec& o) {
    for (int i = 0; i < d; ++i) v[i] += o.v[i];
    return *this;
  }
  Vec& operator-=(const Vec& o) {
    for (int i = 0; i < d; ++i) v[i] -= o.v[i];
    return *this;
  }
  Vec& operator*=(double s) {
    for (int i = 0; i < d; ++i) v[i] *= s;
    return *this;
  }
};

inline Vec operator+(Vec a, const Vec& b) { return a += b; }
inline Vec operator-(Vec a, const Vec& b) { return a -= b; }
inline Vec operator*(double s, Vec a) { return a *= s; }
inline Vec operator*(Vec a, double s) { return a *= s; }

inline double dot(const Vec& a, const Vec& b) {
  double s = 0.0;
  for (int i = 0; i < a.d; ++i) s += a.v[i] * b.v[i];
  return s;
}
inline double norm(const Vec& a) { return std::sqrt(dot(a, a)); }

inline Vec zero_vec(int d) { return Vec(d); }

inline Vec unit_vec(int d, int axis) {
  Vec e(d);
  e[axis] = 1.0;
  return e;
}

inline Vec normalized(Vec a) {
  double n = norm(a);
  if (n == 0.0) throw std::invalid_argument("cannot normalize zero vector");
  return a *= (1.0 / n);
}

/// Dense d×d matrix, row-major, capacity 3×3. Used for conductivities and
/// diffusion factors; symmetry is a property of the data, not the type.
struct Mat {
  std::array<double, kMaxDim * kMaxDim> m{};
  int d = 0;

  Mat() = default;
  explicit Mat(int dim) : d(dim) {}

  double& operator()(int i, int j) { return m[i * kMaxDim + j]; }
  double operator()(int i, int j) const { return m[i * kMaxDim + j]; }

  static Mat identity(int d) {
    Mat a(d);
    for (int i = 0; i < d; ++i) a(i, i) = 1.0;
    return a;
  }
  static Mat scaled_identity(int d, double s) {
    Mat a(d);
    for (int i = 0; i < d; ++i) a(i, i) = s;
    return a;
  }
  static Mat diagonal(const Vec& diag) {
    Mat a(diag.d);
    for (int i = 0; i < diag.d; ++i) a(i, i) = diag[i];
    return a;
  }

  Mat& operator*=(double s) {
    for (auto& x : m) x *= s;
    return *this;
  }
};

inline Mat operator*(double s, Mat a) { return a *= s; }

inline Vec mat_vec(const Mat& a, const Vec& x) {
  Vec y(a.d);
  for (int i = 0; i < a.d; ++i) {
    double s = 0.0;
    for (int j = 0; j < a.d; ++j) s += a(i, j) * x[j];
    y[i] = s;
  }
  return y;
}

inline Mat mat_mul(const Mat& a, const Mat& b) {
  Mat c(a.d);
  for (int i = 0; i < a.d; ++i)
    for (int j = 0; j < a.d; ++j) {
      double s = 0.0;
      for (int k = 0; k < a.d; ++k) s += a(i, k) * b(k, j);
      c(i, j) = s;
    }
  return c;
}

inline Mat transpose(const Mat& a) {
  Mat t(a.d);
  for (int i = 0; i < a.d; ++i)
    for (int j = 0; j < a.d; ++j) t(i, j) = a(j, i);
  return t;
}

inline double quad_form(const Mat& a, const Vec& x) { return dot(x, mat_vec(a, x)); }

inline double frobenius_norm(const Mat& a) {
  double s = 0.0;
  for (int i = 0; i < a.d; ++i)
    for (int j = 0; j < a.d; ++j) s += a(i, j) * a(i, j);
  return std::sqrt(s);
}

inline double max_symmetry_defect(const Mat& a) {
  double s = 0.0;
  for (int i = 0; i < a.d; ++i)
    for (int j = i + 1; j < a.d; ++j) s = std::max(s, std::abs(a(i, j) - a(j, i)));
  return s;
}

/// Lower-triangular factor L with L·Lᵀ = a. Requires a symmetric positive
/// definite; throws otherwise (internal invariant, callers own ellipticity).
inline Mat cholesky_lower(const Mat& a) {
  Mat l(a.d);
  for (int i = 0; i < a.d; ++i) {
    for (int j = 0; j <= i; ++j) {
      double s = a(i, j);
      for (int k = 0; k < j; ++k) s -= l(i, k) * l(j, k);
      if (i == j) {
        if (s <= 0.0) throw std::runtime_error("cholesky_lower: matrix not positive definite");
        l(i, j) = std::sqrt(s);
      } else {
        l(i, j) = s / l(j, j);
      }
    }
  }
  return l;
}

/// Eigenvalues of a symmetric d×d matrix by cyclic Jacobi rotations,
/// ascending order. d ≤ 3 keeps this exact enough for invariant checks.
inline std::array<double, kMaxDim> symmetric_eigenvalues(Mat a) {
  for (int sweep = 0; sweep < 64; ++sweep) {
    double off = 0.0;
    for (int i = 0; i < a.d; ++i)
      for (int j = i + 1; j < a.d; ++j) off += a(i, j) * a(i, j);
    if (off < 1e-30) break;
    for (int p = 0; p < a.d; ++p)
      for (int q = p + 1; q < a.d; ++q) {
        if (std::abs(a(p, q)) < 1e-300) continue;
        double theta = (a(q, q) - a(p, p)) / (2.0 * a(p, q));
        double t = (theta >= 0 ? 1.0 : -1.0) / (std::abs(theta) + std::sqrt(theta * theta + 1.0));
        double c = 1.0 / std::sqrt(t * t + 1.0), s = t * c;
        for (int k = 0; k < a.d; ++k) {
          double akp = a(k, p), akq = a(k, q);
          a(k, p) = c * akp - s * akq;
          a(k, q) = s * akp + c * akq;
        }
        for (int k = 0; k < a.d; ++k) {
          double apk = a(p, k), aqk = a(q, k);
          a(p, k) = c * apk - s * aqk;
          a(q, k) = s * apk + c * aqk;
        }
      }
  }
  std::array<double, kMaxDim> ev{0.0, 0.0, 0.0};
  for (int i = 0; i < a.d; ++i) ev[i] = a(i, i);
  for (int i = 0; i < a.d; ++i)
    for (int j = i + 1; j < a.d; ++j)
      if (ev[j] < ev[i]) std::swap(ev[i], ev[j]);
  return ev;
}

}  // namespace fkeit
